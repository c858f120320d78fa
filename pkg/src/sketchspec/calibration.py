"""Calibration of the unspecified constants in the sample-size formulas.

For each key the harness searches the smallest ``C`` on the geometric grid
``C_j = C0 * 2**(j / 8)`` such that ``t = sample_size(regime, param, 0.25, C)``
passes in at least 90% of the trials on a fixed reference ensemble. A trial
passes only if every member of the ensemble passes with that trial's seed;
the ensembles are built from the hardest cases the acceptance runs use
(aligned and independent AMM pairs, several ``k`` for the low-rank methods),
so the resulting constants err on the large side.

The search brackets the threshold by doubling from ``C = 1`` and then
bisects on grid indices. Pass rates are assumed monotone in ``C``.
"""
import json
import math
import os
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from . import generators as gen
from .amm import Regime, SampleSizeQuery, amm_project, amm_row_sample, sample_size
from .errors import ConfigError
from .linalg import spectral_norm, svd
from .lowrank import LowRankMethod, Projection, leverage_sketch, target_ratio
from .parallel import ordered_map
from .regression import regression_report, solve_exact, solve_sketched, smallest_singular_value
from .sketch import amm_row_distribution, gaussian_sketch, leverage_distribution, sign_sketch

CAL_EPS = 0.25
TARGET_RATE = 0.9
GRID_C0 = 2.0**-10
GRID_STEPS = 8  # grid points per doubling
GRID_MAX = GRID_STEPS * 20
DEFAULT_TRIALS = 100
DATA_FILE = os.path.join(os.path.dirname(__file__), "data", "calibration.json")


def grid_value(j):
    return GRID_C0 * 2.0 ** (j / GRID_STEPS)


def grid_index(c):
    return int(round(GRID_STEPS * math.log2(c / GRID_C0)))


@dataclass(frozen=True)
class Reference:
    key: str
    regime: Regime
    rank_param: float
    description: str
    build: Callable[[], dict]
    trial: Callable[[dict, float, int], bool]

    def t_for(self, c, eps=CAL_EPS, rank_param=None):
        p = self.rank_param if rank_param is None else rank_param
        return sample_size(SampleSizeQuery(self.regime, p, eps, constant=c))


# reference instances -------------------------------------------------------


def _exact(shape, r, seed):
    return gen.generate(gen.GeneratorSpec(shape, "ExactRank", {"r": r}, seed))


def _powerlaw(shape, alpha, seed, rank=None):
    params = {"alpha": alpha}
    if rank is not None:
        params["rank"] = rank
    return gen.generate(gen.GeneratorSpec(shape, "PowerLaw", params, seed))


def amm_pairs(n, m, r, seed):
    """Aligned ``(A, A)`` and independent ``(A, B)`` rank-``r`` pairs."""
    a = _exact((n, m), r, seed)
    b = _exact((n, m), r, seed + 1)
    return [(a, a), (a, b)]


def _build_amm_project():
    pairs = amm_pairs(1024, 40, 5, 101)
    return {"pairs": [(a, b, spectral_norm(a), spectral_norm(b)) for a, b in pairs]}


def _trial_amm_project(ctx, c, seed):
    t = REFERENCES["amm-project"].t_for(c)
    return all(
        amm_project(a, b, t, seed, CAL_EPS, norm_a=na, norm_b=nb).report.passed
        for a, b, na, nb in ctx["pairs"]
    )


def _build_amm_rowsample():
    pairs = amm_pairs(2048, 40, 10, 201)
    return {
        "pairs": [
            (a, b, spectral_norm(a), spectral_norm(b), amm_row_distribution(a, b)) for a, b in pairs
        ]
    }


def _trial_amm_rowsample(ctx, c, seed):
    t = REFERENCES["amm-rowsample"].t_for(c)
    return all(
        amm_row_sample(a, b, t, seed, CAL_EPS, norm_a=na, norm_b=nb, dist=d).report.passed
        for a, b, na, nb, d in ctx["pairs"]
    )


def regression_instance(n=4096, m=40, r=20, seed=301):
    a = _exact((n, m), r, seed)
    b = gen.regression_rhs(a, seed)
    return a, b


def _build_regression():
    a, b = regression_instance()
    return {"a": a, "b": b, "exact": solve_exact(a, b), "smin": smallest_singular_value(a)}


def _regression_trial(ctx, key, c, seed):
    t = REFERENCES[key].t_for(c)
    sk = solve_sketched(ctx["a"], ctx["b"], t, seed)
    rep = regression_report(ctx["a"], ctx["b"], ctx["exact"], sk, CAL_EPS, ctx["smin"])
    return rep.passed_approx if key == "regression-residual" else rep.passed_distance


def lowrank_instance(n=1024, m=200, r=40, seed=401):
    return _powerlaw((n, m), 1.0, seed, rank=r)


def _build_lowrank():
    a = lowrank_instance()
    return {"a": a, "f": svd(a), "dist": leverage_distribution(a)}


def _all_k_ok(a, at, f, method, ks):
    proj = Projection(a, at, f)
    rank = f.rank
    return all(proj.ratio(k) <= target_ratio(method, CAL_EPS, k, rank) for k in ks)


def _trial_lowrank_sign(ctx, c, seed):
    a, f = ctx["a"], ctx["f"]
    t = REFERENCES["lowrank-sign"].t_for(c)
    at = sign_sketch(t, a.shape[0], seed) @ a
    return _all_k_ok(a, at, f, LowRankMethod.SIGN, range(1, f.rank + 1))


GAUSSIAN_KS = (2, 5, 10, 20)


def _trial_lowrank_gaussian(ctx, c, seed):
    a, f = ctx["a"], ctx["f"]
    ref = REFERENCES["lowrank-gaussian"]
    for k in GAUSSIAN_KS:
        t = ref.t_for(c, rank_param=k)
        at = gaussian_sketch(t, a.shape[0], seed) @ a
        if not _all_k_ok(a, at, f, LowRankMethod.GAUSSIAN, [k]):
            return False
    return True


def _trial_lowrank_leverage(ctx, c, seed):
    a, f = ctx["a"], ctx["f"]
    t = REFERENCES["lowrank-leverage"].t_for(c)
    at = leverage_sketch(a, t, seed, ctx["dist"])
    return _all_k_ok(a, at, f, LowRankMethod.LEVERAGE, range(1, f.rank + 1))


TAIL_KS = (2, 4)


def tail_instance(n=2048, m=512, seed=501):
    return _powerlaw((n, m), 1.0, seed)


def _build_tail():
    a = tail_instance()
    return {"a": a, "f": svd(a)}


def _trial_tail(ctx, c, seed):
    a, f = ctx["a"], ctx["f"]
    ref = REFERENCES["lowrank-tail"]
    for k in TAIL_KS:
        t = ref.t_for(c, rank_param=k)
        proj = Projection(a, sign_sketch(t, a.shape[0], seed) @ a, f)
        if proj.ratio(k) > target_ratio(LowRankMethod.TAIL_SIGN, CAL_EPS, k, f.rank):
            return False
        if proj.ratio(k, full=True) > target_ratio(LowRankMethod.TAIL_FULL, CAL_EPS, k, f.rank):
            return False
    return True


REFERENCES: Dict[str, Reference] = {
    r.key: r
    for r in [
        Reference(
            "amm-project", Regime.PROJ_RANK, 5,
            "sign-sketch AMM on rank-5 pairs, n=1024, m=p=40, aligned and independent",
            _build_amm_project, _trial_amm_project,
        ),
        Reference(
            "amm-rowsample", Regime.ROW_SAMPLE_STABLE_RANK, 10,
            "row-sampling AMM on stable-rank-10 pairs, n=2048, m=p=40, aligned and independent",
            _build_amm_rowsample, _trial_amm_rowsample,
        ),
        Reference(
            "regression-residual", Regime.REGRESSION_RANK, 20,
            "residual ratio <= 1+eps, rank-20 A, n=4096, m=40",
            _build_regression, lambda ctx, c, s: _regression_trial(ctx, "regression-residual", c, s),
        ),
        Reference(
            "regression-distance", Regime.PROJ_RANK, 20,
            "solution distance bound, rank-20 A, n=4096, m=40",
            _build_regression, lambda ctx, c, s: _regression_trial(ctx, "regression-distance", c, s),
        ),
        Reference(
            "lowrank-sign", Regime.PROJ_RANK, 40,
            "sign projection, rank-40 power law 1024x200, every k",
            _build_lowrank, _trial_lowrank_sign,
        ),
        Reference(
            "lowrank-gaussian", Regime.PROJ_RANK, 1,
            "Gaussian projection, rank-40 power law 1024x200, t per k in {2,5,10,20}",
            _build_lowrank, _trial_lowrank_gaussian,
        ),
        Reference(
            "lowrank-leverage", Regime.ROW_SAMPLE_STABLE_RANK, 40,
            "leverage sampling, rank-40 power law 1024x200, every k",
            _build_lowrank, _trial_lowrank_leverage,
        ),
        Reference(
            "lowrank-tail", Regime.PROJ_STABLE_RANK, 1,
            "tail sign projection, sigma_j = 1/j on 2048x512, k in {2,4}, both modes",
            _build_tail, _trial_tail,
        ),
    ]
}


@lru_cache(maxsize=None)
def _context(build):
    return build()


# search --------------------------------------------------------------------


def pass_rate(key, c, trials=DEFAULT_TRIALS, seed_base=0, threads=None):
    ref = REFERENCES[key]
    ctx = _context(ref.build)
    hits = ordered_map(lambda i: ref.trial(ctx, c, seed_base + i), range(trials), threads)
    return sum(hits) / trials


@dataclass(frozen=True)
class CalibrationResult:
    key: str
    constant: float
    pass_rate: float
    grid_index: int
    evaluations: Tuple[Tuple[float, float], ...]
    saturated: bool = False

    def to_dict(self):
        return {
            "constant": self.constant,
            "pass_rate": self.pass_rate,
            "regime": REFERENCES[self.key].regime.value,
            "rank_param": REFERENCES[self.key].rank_param,
            "evaluations": [list(e) for e in self.evaluations],
            "saturated": self.saturated,
        }


def calibrate_key(key, trials=DEFAULT_TRIALS, seed_base=0, threads=None, target=TARGET_RATE):
    if key not in REFERENCES:
        raise ConfigError(f"unknown calibration key {key!r}; expected one of {sorted(REFERENCES)}")
    rates = {}

    def ok(j):
        if j not in rates:
            rates[j] = pass_rate(key, grid_value(j), trials, seed_base, threads)
        return rates[j] >= target

    j0 = grid_index(1.0)
    if ok(j0):
        hi, step, lo = j0, GRID_STEPS, None
        while lo is None:
            j = max(0, hi - step)
            if ok(j):
                hi = j
                if j == 0:
                    break
                step *= 2
            else:
                lo = j
    else:
        lo, step, hi = j0, GRID_STEPS, None
        while hi is None:
            j = min(GRID_MAX, lo + step)
            if ok(j):
                hi = j
            elif j == GRID_MAX:
                break
            else:
                lo, step = j, step * 2
    saturated = hi is None or (lo is None and hi == 0)
    if hi is None:
        hi = GRID_MAX
    if lo is not None:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
    evals = tuple((grid_value(j), rates[j]) for j in sorted(rates))
    return CalibrationResult(key, grid_value(hi), rates[hi], hi, evals, saturated)


def calibrate(keys=None, trials=DEFAULT_TRIALS, seed_base=0, threads=None):
    keys = list(REFERENCES) if keys is None else list(keys)
    return {k: calibrate_key(k, trials, seed_base, threads) for k in keys}


def calibration_document(results, trials, seed_base):
    return {
        "schema": "sketchspec.calibration/1",
        "eps": CAL_EPS,
        "target_pass_rate": TARGET_RATE,
        "trials": trials,
        "seed_base": seed_base,
        "grid": {"c0": GRID_C0, "steps_per_doubling": GRID_STEPS},
        "constants": {k: r.to_dict() for k, r in results.items()},
    }


# shipped defaults ----------------------------------------------------------


@lru_cache(maxsize=1)
def _shipped():
    try:
        with open(DATA_FILE) as fh:
            doc = json.load(fh)
    except (OSError, ValueError):
        return {}
    return {k: float(v["constant"]) for k, v in doc.get("constants", {}).items()}


def default_constant(key, overrides=None):
    """Calibrated ``C`` for ``key``; ``overrides`` (key -> C) wins."""
    if overrides and key in overrides:
        return float(overrides[key])
    table = _shipped()
    if key not in table:
        warnings.warn(f"no calibrated constant for {key!r}; using C = 1", stacklevel=2)
        return 1.0
    return table[key]


def calibrated_t(key, eps, rank_param, overrides=None, dims=None):
    ref = REFERENCES[key]
    c = default_constant(key, overrides)
    return sample_size(SampleSizeQuery(ref.regime, rank_param, eps, dims=dims, constant=c))
