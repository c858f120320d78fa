"""Config-driven Monte Carlo sweeps.

A config is a JSON object::

    {
      "schema": "sketchspec.config/1",
      "task": "amm-project",
      "generator": {"shape": [2048, 40], "spectrum": {"kind": "ExactRank", "r": 5}, "seed": 1},
      "sweep": {"n": [512, 2048], "eps": [0.25], "t": [400], "k": [1]},
      "trials": 100,
      "seed_base": 0,
      "constant_overrides": {"amm-project": 4.0},
      "output_path": "runs/amm",
      "debug_identity": false
    }

Omitted ``sweep.t`` values are derived from the calibrated constant for the
task at each ``eps``. ``sweep.n`` overrides the generator's row count. Trial
``i`` uses seed ``seed_base + i`` at every sweep point.

``run`` writes ``trials.jsonl`` (one record per trial, or per trial and ``t``
for the Chernoff lab) and ``summary.csv`` (one row per sweep point) into
``output_path``; relative paths are taken relative to the config file.
"""
import csv
import io
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import calibration as cal
from . import chernoff as ch
from . import generators as gen
from .amm import amm_project, amm_row_sample
from .errors import ConfigError, InvalidSpec, NumericalFailure, PreconditionViolation
from .linalg import numerical_rank, spectral_norm, stable_rank, svd
from .lowrank import (
    LowRankMethod,
    lowrank_gaussian,
    lowrank_leverage,
    lowrank_sign,
    lowrank_tail,
    target_ratio,
)
from .matrix_io import read_matrix
from .parallel import ordered_map
from .regression import regression_report, smallest_singular_value, solve_exact, solve_sketched
from .sketch import amm_row_distribution, leverage_distribution, sign_sketch

SCHEMA = "sketchspec.config/1"
TASKS = (
    "amm-project",
    "amm-rowsample",
    "regression",
    "lowrank-sign",
    "lowrank-gaussian",
    "lowrank-leverage",
    "lowrank-tail",
    "jl-lab",
    "chernoff-lab",
    "rudelson-lab",
    "calibrate",
)
MATRIX_TASKS = TASKS[:7] + ("rudelson-lab",)
TRIAL_FILE = "trials.jsonl"
SUMMARY_FILE = "summary.csv"
SUMMARY_COLUMNS = (
    "task", "n", "eps", "k", "t", "trials", "passed", "failures", "pass_rate", "median", "q90",
)
KNOWN_KEYS = {
    "schema", "task", "generator", "generator_b", "matrix_path", "sweep", "trials", "seed_base",
    "constant_overrides", "output_path", "debug_identity", "ensemble", "jl", "calibrate",
    "allow_violation", "full_rank_mode",
}
NUMERIC_ERRORS = (NumericalFailure, np.linalg.LinAlgError, FloatingPointError)


@dataclass
class ExperimentConfig:
    task: str
    sweep: Dict[str, List[Any]]
    trials: int = 1
    seed_base: int = 0
    generator: Optional[gen.GeneratorSpec] = None
    generator_b: Optional[gen.GeneratorSpec] = None
    matrix_path: Optional[str] = None
    constant_overrides: Dict[str, float] = field(default_factory=dict)
    output_path: str = "sketchspec-out"
    debug_identity: bool = False
    options: Dict[str, Any] = field(default_factory=dict)
    base_dir: str = "."

    @classmethod
    def from_dict(cls, d, base_dir="."):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if d.get("schema") != SCHEMA:
            raise ConfigError(f"schema must be {SCHEMA!r}, got {d.get('schema')!r}")
        unknown = set(d) - KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        task = d.get("task")
        if task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {task!r}")
        sweep = d.get("sweep", {})
        if not isinstance(sweep, dict) or set(sweep) - {"t", "eps", "n", "k"}:
            raise ConfigError("sweep must be an object with keys among t, eps, n, k")
        clean = {}
        for key, vals in sweep.items():
            if not isinstance(vals, list) or not vals:
                raise ConfigError(f"sweep.{key} must be a non-empty list")
            cast = float if key == "eps" else int
            try:
                clean[key] = [cast(v) for v in vals]
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad sweep.{key}: {exc}") from exc
        for e in clean.get("eps", []):
            if not 0.0 < e < 1.0:
                raise ConfigError(f"eps must lie in (0, 1), got {e}")
        for key in ("t", "n", "k"):
            if any(v < 1 for v in clean.get(key, [])):
                raise ConfigError(f"sweep.{key} values must be positive")
        trials = d.get("trials", 1)
        if not isinstance(trials, int) or trials < 1:
            raise ConfigError("trials must be an integer >= 1")
        seed_base = d.get("seed_base", 0)
        if not isinstance(seed_base, int) or seed_base < 0:
            raise ConfigError("seed_base must be a non-negative integer")
        overrides = d.get("constant_overrides", {})
        if not isinstance(overrides, dict):
            raise ConfigError("constant_overrides must be an object")
        for k, v in overrides.items():
            if k not in cal.REFERENCES:
                raise ConfigError(f"unknown constant key {k!r}")
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigError(f"constant for {k!r} must be positive")
        try:
            g = gen.GeneratorSpec.from_dict(d["generator"]) if "generator" in d else None
            gb = gen.GeneratorSpec.from_dict(d["generator_b"]) if "generator_b" in d else None
        except InvalidSpec as exc:
            raise ConfigError(str(exc)) from exc
        cfg = cls(
            task=task,
            sweep=clean,
            trials=trials,
            seed_base=seed_base,
            generator=g,
            generator_b=gb,
            matrix_path=d.get("matrix_path"),
            constant_overrides={k: float(v) for k, v in overrides.items()},
            output_path=str(d.get("output_path", "sketchspec-out")),
            debug_identity=bool(d.get("debug_identity", False)),
            options={k: d[k] for k in ("ensemble", "jl", "calibrate", "allow_violation", "full_rank_mode") if k in d},
            base_dir=base_dir,
        )
        cfg._check_task()
        return cfg

    def _check_task(self):
        if self.task in MATRIX_TASKS and self.generator is None and self.matrix_path is None:
            raise ConfigError(f"task {self.task} needs a generator or matrix_path")
        if self.task == "chernoff-lab":
            if "ensemble" not in self.options:
                raise ConfigError("chernoff-lab needs an ensemble object")
            if self.trials < 100:
                raise ConfigError("chernoff-lab needs trials >= 100")
            if "t" not in self.sweep:
                raise ConfigError("chernoff-lab needs sweep.t")
        if self.task in ("jl-lab", "rudelson-lab") and "t" not in self.sweep:
            raise ConfigError(f"{self.task} needs sweep.t")
        if self.task == "jl-lab" and "k" not in self.options.get("jl", {}):
            raise ConfigError("jl-lab needs jl.k")
        if self.debug_identity and self.task in ("amm-rowsample", "lowrank-leverage", "chernoff-lab", "rudelson-lab", "calibrate"):
            raise ConfigError(f"debug_identity is not available for {self.task}")
        if self.task == "calibrate":
            keys = self.options.get("calibrate", {}).get("keys", list(cal.REFERENCES))
            bad = [k for k in keys if k not in cal.REFERENCES]
            if bad:
                raise ConfigError(f"unknown calibration keys {bad}")

    def output_dir(self):
        p = self.output_path
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)


def load_config(path):
    with open(path) as fh:  # OSError propagates: an I/O failure, not a bad config
        text = fh.read()
    try:
        d = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(d, os.path.dirname(os.path.abspath(path)))


# matrices ------------------------------------------------------------------


def _matrix(cfg, n=None, spec=None):
    if spec is None and cfg.matrix_path is not None:
        p = cfg.matrix_path
        a = read_matrix(p if os.path.isabs(p) else os.path.join(cfg.base_dir, p))
        if n is not None and n != a.shape[0]:
            raise ConfigError("sweep.n cannot resize a matrix loaded from matrix_path")
        return a
    spec = spec or cfg.generator
    if n is not None:
        spec = gen.GeneratorSpec((n, spec.shape[1]), spec.spectrum, dict(spec.params), spec.seed)
    try:
        return gen.generate(spec)
    except InvalidSpec as exc:
        raise ConfigError(str(exc)) from exc


def _second_operand(cfg, a, n):
    if cfg.generator_b is not None:
        return _matrix(cfg, n, cfg.generator_b)
    if cfg.generator is None:
        return a
    return _matrix(cfg, n, cfg.generator.with_seed(cfg.generator.seed + 1))


# trial runners -------------------------------------------------------------


def _quantiles(values):
    v = np.asarray([x for x in values if x is not None and not math.isnan(x)], dtype=float)
    if v.size == 0:
        return None, None
    return float(np.quantile(v, 0.5)), float(np.quantile(v, 0.9))


def _guarded(fn, seed):
    try:
        return fn(seed)
    except NUMERIC_ERRORS as exc:
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}"}


def _run_point(cfg, fn, point, metric):
    seeds = [cfg.seed_base + i for i in range(cfg.trials)]
    recs = ordered_map(lambda s: _guarded(fn, s), seeds)
    out = []
    for r in recs:
        out.append({"task": cfg.task, **point, **r})
    ok = [r for r in recs if "error" not in r]
    passed = sum(1 for r in ok if r.get("passed"))
    med, q90 = _quantiles([r.get(metric) for r in ok])
    summary = {
        "task": cfg.task,
        "n": point.get("n"),
        "eps": point.get("eps"),
        "k": point.get("k"),
        "t": point.get("t"),
        "trials": cfg.trials,
        "passed": passed,
        "failures": len(recs) - len(ok),
        "pass_rate": passed / cfg.trials,
        "median": med,
        "q90": q90,
    }
    return out, summary


def _t_values(cfg, key, eps, rank_param):
    if "t" in cfg.sweep:
        return cfg.sweep["t"]
    return [cal.calibrated_t(key, eps, max(1.0, rank_param), cfg.constant_overrides)]


def _points(cfg):
    ns = cfg.sweep.get("n", [None])
    epss = cfg.sweep.get("eps", [cal.CAL_EPS])
    return ns, epss


def _task_amm(cfg, rowsample):
    records, rows = [], []
    ns, epss = _points(cfg)
    key = "amm-rowsample" if rowsample else "amm-project"
    regime = "RowSampleStableRank" if rowsample else "ProjRank"
    for n in ns:
        a = _matrix(cfg, n)
        b = _second_operand(cfg, a, n)
        na, nb = spectral_norm(a), spectral_norm(b)
        dist = amm_row_distribution(a, b) if rowsample else None
        param = stable_rank(a) if rowsample else numerical_rank(a)
        for eps in epss:
            for t in _t_values(cfg, key, eps, param):
                if rowsample:
                    fn = lambda s, t=t, eps=eps: amm_row_sample(
                        a, b, t, s, eps, norm_a=na, norm_b=nb, dist=dist
                    ).report.to_record(regime, s)
                else:
                    fn = lambda s, t=t, eps=eps: amm_project(
                        a, b, t, s, eps, norm_a=na, norm_b=nb, debug_identity=cfg.debug_identity
                    ).report.to_record(regime, s)
                recs, summ = _run_point(cfg, fn, {"n": a.shape[0], "eps": eps, "t": t}, "relative_eps")
                records += recs
                rows.append(summ)
    return records, rows


def _task_regression(cfg):
    records, rows = [], []
    ns, epss = _points(cfg)
    for n in ns:
        a = _matrix(cfg, n)
        seed = cfg.generator.seed if cfg.generator is not None else 0
        b = gen.regression_rhs(a, seed)
        exact = solve_exact(a, b)
        smin = smallest_singular_value(a)
        r = numerical_rank(a)
        for eps in epss:
            for t in _t_values(cfg, "regression-residual", eps, r):

                def fn(s, t=t, eps=eps):
                    sk = solve_sketched(a, b, t, s, debug_identity=cfg.debug_identity)
                    rep = regression_report(a, b, exact, sk, eps, smin)
                    rec = rep.to_record()
                    rec["passed"] = rep.passed_approx and rep.passed_distance
                    return rec

                recs, summ = _run_point(cfg, fn, {"n": a.shape[0], "eps": eps, "t": t}, "residual_ratio")
                records += recs
                rows.append(summ)
    return records, rows


def _task_lowrank(cfg):
    records, rows = [], []
    ns, epss = _points(cfg)
    method = {
        "lowrank-sign": LowRankMethod.SIGN,
        "lowrank-gaussian": LowRankMethod.GAUSSIAN,
        "lowrank-leverage": LowRankMethod.LEVERAGE,
        "lowrank-tail": LowRankMethod.TAIL_SIGN,
    }[cfg.task]
    full = bool(cfg.options.get("full_rank_mode", False)) and method is LowRankMethod.TAIL_SIGN
    if full:
        method = LowRankMethod.TAIL_FULL
    for n in ns:
        a = _matrix(cfg, n)
        f = svd(a)
        dist = leverage_distribution(a) if method is LowRankMethod.LEVERAGE else None
        for eps in epss:
            for k in cfg.sweep.get("k", [1]):
                if k > min(a.shape):
                    raise ConfigError(f"k={k} exceeds min(shape)={min(a.shape)}")
                param = k if method in (LowRankMethod.GAUSSIAN, LowRankMethod.TAIL_SIGN, LowRankMethod.TAIL_FULL) else f.rank
                target = target_ratio(method, eps, k, f.rank)
                for t in _t_values(cfg, cfg.task, eps, param):

                    def fn(s, t=t, k=k, eps=eps):
                        if method is LowRankMethod.SIGN:
                            res = lowrank_sign(a, k, t, s, factors=f, debug_identity=cfg.debug_identity)
                        elif method is LowRankMethod.GAUSSIAN:
                            res = lowrank_gaussian(a, k, t, s, factors=f, debug_identity=cfg.debug_identity)
                        elif method is LowRankMethod.LEVERAGE:
                            res = lowrank_leverage(a, k, t, s, factors=f, dist=dist)
                        else:
                            with warnings.catch_warnings():
                                warnings.simplefilter("ignore")
                                res = lowrank_tail(
                                    a, k, t, s, full, factors=f, debug_identity=cfg.debug_identity
                                )
                        rec = res.to_record(eps, bool(res.ratio <= target))
                        rec["target"] = target
                        rec["precondition_ok"] = res.precondition_ok
                        return rec

                    recs, summ = _run_point(cfg, fn, {"n": a.shape[0], "eps": eps, "k": k, "t": t}, "ratio")
                    records += recs
                    rows.append(summ)
    return records, rows


def _task_jl(cfg):
    records, rows = [], []
    k = int(cfg.options["jl"]["k"])
    ds = cfg.sweep.get("n", [int(cfg.options["jl"].get("d", 64))])
    for d in ds:
        if k > d:
            raise ConfigError(f"jl.k={k} exceeds d={d}")
        for eps in cfg.sweep.get("eps", [0.5]):
            for t in cfg.sweep["t"]:
                fails = ch.subspace_jl_failures(
                    k, d, t, eps, cfg.trials, cfg.seed_base, debug_identity=cfg.debug_identity
                )
                recs = [
                    {"task": cfg.task, "n": d, "eps": eps, "k": k, "t": t,
                     "seed": cfg.seed_base + i, "failed": bool(x), "passed": not bool(x)}
                    for i, x in enumerate(fails)
                ]
                records += recs
                rows.append({
                    "task": cfg.task, "n": d, "eps": eps, "k": k, "t": t, "trials": cfg.trials,
                    "passed": int((~fails).sum()), "failures": 0,
                    "pass_rate": float((~fails).mean()), "median": float(fails.mean()), "q90": None,
                })
    return records, rows


def _task_rudelson(cfg):
    records, rows = [], []
    ns, _ = _points(cfg)
    allow = bool(cfg.options.get("allow_violation", False))
    for n in ns:
        a = _matrix(cfg, n)
        norm = spectral_norm(a)
        for t in cfg.sweep["t"]:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    ch.rudelson_exceedances(a, t, 1, cfg.seed_base, allow_violation=allow)
            except PreconditionViolation as exc:
                raise ConfigError(str(exc)) from exc

            def fn(s, t=t):
                ratio = spectral_norm(sign_sketch(t, a.shape[0], s) @ a) / norm
                return {"t": t, "seed": s, "norm_ratio": ratio, "exceeded": ratio >= 4.0,
                        "passed": ratio < 4.0, "bound": ch.rudelson_bound(t)}

            recs, summ = _run_point(cfg, fn, {"n": a.shape[0], "t": t}, "norm_ratio")
            records += recs
            rows.append(summ)
    return records, rows


def _ensemble(cfg, n):
    spec = dict(cfg.options["ensemble"])
    try:
        return ch.MatrixEnsemble(
            kind=spec["kind"],
            n=int(n if n is not None else spec["n"]),
            r=int(spec.get("r", 1)),
            gamma=spec.get("gamma"),
            basis_seed=int(spec.get("basis_seed", 0)),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad ensemble: {exc}") from exc


def _task_chernoff(cfg):
    records, rows = [], []
    ns = cfg.sweep.get("n", [None])
    for n in ns:
        ens = _ensemble(cfg, n)
        if ens.kind is ch.EnsembleKind.CUSTOM:
            raise ConfigError("Custom ensembles cannot be described in a config file")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            curve = ch.deviation_curve(ens, cfg.sweep["t"], cfg.trials, cfg.seed_base)
        for t in curve.t_values:
            for i, v in enumerate(curve.samples[t]):
                records.append({"task": cfg.task, "n": ens.n, "t": t, "seed": cfg.seed_base + i,
                                "deviation": float(v)})
        for row in curve.csv_rows():
            rows.append({**row, "rank_condition_ok": curve.rank_condition_ok})
    return records, rows


def _task_calibrate(cfg):
    opts = cfg.options.get("calibrate", {})
    keys = opts.get("keys", list(cal.REFERENCES))
    trials = cfg.trials if cfg.trials > 1 else cal.DEFAULT_TRIALS
    results = cal.calibrate(keys, trials, cfg.seed_base)
    doc = cal.calibration_document(results, trials, cfg.seed_base)
    records, rows = [], []
    for key, res in results.items():
        for c, rate in res.evaluations:
            records.append({"task": cfg.task, "key": key, "constant": c, "pass_rate": rate})
        rows.append({"key": key, "regime": doc["constants"][key]["regime"], "constant": res.constant,
                     "pass_rate": res.pass_rate, "saturated": res.saturated})
    return records, rows, doc


# output --------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    return v


def render_jsonl(records):
    return "".join(json.dumps(_jsonable(r), sort_keys=True) + "\n" for r in records)


def render_csv(rows, columns=None):
    if columns is None:
        columns = list(rows[0]) if rows else list(SUMMARY_COLUMNS)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


@dataclass
class RunOutcome:
    records: List[dict]
    summary: List[dict]
    failures: int
    paths: Dict[str, str]
    document: Optional[dict] = None


def execute(cfg):
    """Run a config in memory; returns records and summary rows."""
    doc = None
    if cfg.task in ("amm-project", "amm-rowsample"):
        records, rows = _task_amm(cfg, cfg.task == "amm-rowsample")
    elif cfg.task == "regression":
        records, rows = _task_regression(cfg)
    elif cfg.task.startswith("lowrank-"):
        records, rows = _task_lowrank(cfg)
    elif cfg.task == "jl-lab":
        records, rows = _task_jl(cfg)
    elif cfg.task == "rudelson-lab":
        records, rows = _task_rudelson(cfg)
    elif cfg.task == "chernoff-lab":
        records, rows = _task_chernoff(cfg)
    else:
        records, rows, doc = _task_calibrate(cfg)
    failures = sum(1 for r in records if "error" in r)
    return records, rows, failures, doc


def summary_columns(cfg):
    if cfg.task == "chernoff-lab":
        return list(ch.CSV_COLUMNS) + ["rank_condition_ok"]
    if cfg.task == "calibrate":
        return ["key", "regime", "constant", "pass_rate", "saturated"]
    return list(SUMMARY_COLUMNS)


def run(cfg):
    records, rows, failures, doc = execute(cfg)
    out = cfg.output_dir()
    os.makedirs(out, exist_ok=True)
    paths = {"trials": os.path.join(out, TRIAL_FILE), "summary": os.path.join(out, SUMMARY_FILE)}
    with open(paths["trials"], "w", newline="") as fh:
        fh.write(render_jsonl(records))
    with open(paths["summary"], "w", newline="") as fh:
        fh.write(render_csv(rows, summary_columns(cfg)))
    if doc is not None:
        paths["calibration"] = os.path.join(out, "calibration.json")
        with open(paths["calibration"], "w") as fh:
            fh.write(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return RunOutcome(records, rows, failures, paths, doc)
