"""Monte Carlo experiments on sums of random matrices and random projections.

Ensembles
---------
IsotropicOuterProduct
    ``M = n x x^T`` with ``x`` uniform on the unit sphere; ``E M = I``,
    ``||M|| = n``, rank one.
RankRFrame
    ``M = (d / r) sum_j x_j x_j^T`` for a uniformly random orthonormal
    ``r``-frame inside a fixed ``d``-dimensional subspace of ``R^n``. With
    ``gamma=None`` the subspace is all of ``R^n`` (``d = n``). Otherwise
    ``d = gamma * r`` so that ``||M|| = gamma`` stays fixed while ``n`` grows;
    ``E M`` is the orthogonal projector onto the subspace.
DiagonalRademacher
    ``M = diag(s)`` with i.i.d. signs; ``E M = 0``, full rank, ``||M|| = 1``.
Custom
    Caller-supplied sampler ``seed -> matrix`` together with the mean and
    ``gamma``.

Trial ``i`` of every experiment uses seed ``seed_base + i``; draw ``j`` within
a trial is addressed inside that seed's stream, so a sweep over ``t`` reuses
the first ``t`` draws of each trial.
"""
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import rng
from .errors import PreconditionViolation
from .linalg import as_matrix, singular_values, spectral_norm, stable_rank
from .sketch import identity_sketch, sign_sketch


class EnsembleKind(str, enum.Enum):
    ISOTROPIC = "IsotropicOuterProduct"
    FRAME = "RankRFrame"
    DIAGONAL = "DiagonalRademacher"
    CUSTOM = "Custom"


@dataclass(frozen=True, eq=False)
class MatrixEnsemble:
    kind: EnsembleKind
    n: int
    r: int = 1
    gamma: Optional[float] = None
    basis_seed: int = 0
    sampler: Optional[Callable[[int], np.ndarray]] = None
    custom_mean: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        if self.n < 1 or self.r < 1:
            raise ValueError("n and r must be positive")
        if self.kind is EnsembleKind.FRAME:
            d = self.dim
            if not self.r <= d <= self.n:
                raise ValueError(f"need r <= gamma*r <= n, got d={d}, r={self.r}, n={self.n}")
        if self.kind is EnsembleKind.CUSTOM:
            if self.sampler is None or self.custom_mean is None or self.gamma is None:
                raise ValueError("Custom ensembles need sampler, custom_mean and gamma")

    @property
    def dim(self):
        """Dimension of the subspace the draws live in."""
        if self.kind is EnsembleKind.FRAME and self.gamma is not None:
            return int(round(self.gamma * self.r))
        return self.n

    @property
    def rank_cap(self):
        return {
            EnsembleKind.ISOTROPIC: 1,
            EnsembleKind.FRAME: self.r,
            EnsembleKind.DIAGONAL: self.n,
        }.get(self.kind, self.n)

    @property
    def norm_bound(self):
        """Almost-sure bound on ``||M||``."""
        if self.kind is EnsembleKind.ISOTROPIC:
            return float(self.n)
        if self.kind is EnsembleKind.FRAME:
            return self.dim / self.r
        if self.kind is EnsembleKind.DIAGONAL:
            return 1.0
        return float(self.gamma)

    def basis(self):
        """``n x d`` orthonormal basis of the subspace (identity when ``d = n``)."""
        if self.dim == self.n:
            return np.eye(self.n)
        key = rng.derive_key(self.basis_seed, rng.ENSEMBLE, self.n, self.dim)
        return rng.random_orthonormal(key, self.n, self.dim)

    def mean(self):
        if self.kind is EnsembleKind.ISOTROPIC:
            return np.eye(self.n)
        if self.kind is EnsembleKind.FRAME:
            q = self.basis()
            return q @ q.T
        if self.kind is EnsembleKind.DIAGONAL:
            return np.zeros((self.n, self.n))
        return as_matrix(self.custom_mean, "custom_mean")

    def describe(self):
        return {"ensemble": self.kind.value, "n": self.n, "r": self.r, "gamma": self.norm_bound}


def _draw_key(seed):
    return rng.derive_key(seed, rng.ENSEMBLE)


def _frames(ens, seed, count, basis=None):
    """``count`` frames as compact ``d x r`` blocks (orthonormal columns).

    Each frame is the orthonormalized projection of an ``n x r`` Gaussian
    block onto the subspace, i.e. a Haar-random frame of the subspace.
    """
    n, d, r = ens.n, ens.dim, ens.r
    g = rng.normals(_draw_key(seed), count * n * r).reshape(count, n, r)
    if d != n:
        if basis is None:
            basis = ens.basis()
        g = np.einsum("nd,cnr->cdr", basis, g)
    q, rr = np.linalg.qr(g)
    sgn = np.sign(np.diagonal(rr, axis1=1, axis2=2))
    sgn[sgn == 0] = 1.0
    return q * sgn[:, None, :]


def sample_ensemble(ens, seed):
    """One symmetric ``n x n`` draw from ``ens``."""
    if ens.kind is EnsembleKind.ISOTROPIC:
        x = rng.normals(_draw_key(seed), ens.n)
        x /= np.linalg.norm(x)
        return ens.n * np.outer(x, x)
    if ens.kind is EnsembleKind.FRAME:
        basis = ens.basis()
        y = _frames(ens, seed, 1, basis)[0]
        f = basis @ y
        return (ens.dim / ens.r) * (f @ f.T)
    if ens.kind is EnsembleKind.DIAGONAL:
        return np.diag(rng.signs(_draw_key(seed), (ens.n,)))
    return as_matrix(ens.sampler(seed), "sample")


def check_draw(ens, M, tol=1e-10):
    """Raise AssertionError unless ``M`` meets the ensemble's invariants."""
    m = as_matrix(M)
    assert m.shape == (ens.n, ens.n), f"draw has shape {m.shape}"
    assert np.allclose(m, m.T, atol=tol * max(1.0, np.abs(m).max())), "draw is not symmetric"
    if ens.kind is not EnsembleKind.CUSTOM:
        s = singular_values(m)
        rank = int(np.count_nonzero(s > 1e-9 * max(s[0], 1.0)))
        assert rank <= ens.rank_cap, f"rank {rank} exceeds {ens.rank_cap}"
    assert spectral_norm(m) <= ens.norm_bound + tol, "norm bound violated"


def _trial_deviations(ens, seed, t_sorted, basis, mean):
    t_max = t_sorted[-1]
    out = []
    if ens.kind is EnsembleKind.DIAGONAL:
        s = rng.signs(_draw_key(seed), (t_max, ens.n))
        csum = np.cumsum(s, axis=0)
        for t in t_sorted:
            out.append(float(np.abs(csum[t - 1]).max() / t))
        return out
    if ens.kind is EnsembleKind.ISOTROPIC:
        x = rng.normals(_draw_key(seed), t_max * ens.n).reshape(t_max, ens.n)
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        for t in t_sorted:
            g = x[:t]
            if t < ens.n:
                # nonzero spectrum of (n/t) G^T G; the complement contributes |0 - 1|
                ev = np.linalg.eigvalsh((ens.n / t) * (g @ g.T))
                out.append(float(max(np.abs(ev - 1.0).max(), 1.0)))
            else:
                ev = np.linalg.eigvalsh((ens.n / t) * (g.T @ g) - np.eye(ens.n))
                out.append(float(np.abs(ev).max()))
        return out
    if ens.kind is EnsembleKind.FRAME:
        y = _frames(ens, seed, t_max, basis)  # (t_max, d, r)
        scale = ens.dim / ens.r
        d = ens.dim
        acc = np.zeros((d, d))
        done = 0
        for t in t_sorted:
            blk = y[done:t].reshape(-1, d, ens.r)
            acc += np.einsum("cdr,cer->de", blk, blk)
            done = t
            # draws live in the subspace, so the deviation equals its compact form
            ev = np.linalg.eigvalsh((scale / t) * acc - np.eye(d))
            out.append(float(np.abs(ev).max()))
        return out
    acc = np.zeros((ens.n, ens.n))
    done = 0
    for t in t_sorted:
        for j in range(done, t):
            acc += as_matrix(ens.sampler(rng.derive_key(seed, rng.ENSEMBLE, j)))
        done = t
        out.append(spectral_norm(acc / t - mean))
    return out


@dataclass(eq=False)
class DeviationCurve:
    t_values: List[int]
    quantiles: Dict[int, Dict[str, float]]
    trials_per_point: int
    ensemble: MatrixEnsemble
    seed_base: int
    samples: Dict[int, np.ndarray] = field(repr=False, default_factory=dict)
    rank_condition_ok: bool = True

    def medians(self):
        return [self.quantiles[t]["median"] for t in self.t_values]

    def csv_rows(self):
        d = self.ensemble.describe()
        for t in self.t_values:
            q = self.quantiles[t]
            yield {
                **d,
                "t": t,
                "trials": self.trials_per_point,
                "median": q["median"],
                "q90": q["q90"],
                "q99": q["q99"],
                "seed_base": self.seed_base,
            }


CSV_COLUMNS = ("ensemble", "n", "r", "gamma", "t", "trials", "median", "q90", "q99", "seed_base")


def deviation_curve(ens, t_values, trials, seed_base):
    """Quantiles of ``||(1/t) sum_{i<=t} M_i - E M||`` over independent trials."""
    if trials < 100:
        raise ValueError("deviation curves need at least 100 trials")
    ts = sorted({int(t) for t in t_values})
    if ts[0] < 1:
        raise ValueError("t values must be positive")
    ok = ens.rank_cap <= ts[0]
    if not ok:
        warnings.warn(
            f"sample rank {ens.rank_cap} exceeds the smallest t={ts[0]}; "
            "outside the regime the bound covers",
            stacklevel=2,
        )
    basis = ens.basis() if ens.kind is EnsembleKind.FRAME and ens.dim != ens.n else None
    mean = ens.mean() if ens.kind is EnsembleKind.CUSTOM else None
    dev = np.empty((trials, len(ts)))
    for i in range(trials):
        dev[i] = _trial_deviations(ens, seed_base + i, ts, basis, mean)
    quantiles, samples = {}, {}
    for j, t in enumerate(ts):
        col = dev[:, j]
        samples[t] = col
        quantiles[t] = {
            "median": float(np.quantile(col, 0.5)),
            "q90": float(np.quantile(col, 0.9)),
            "q99": float(np.quantile(col, 0.99)),
        }
    return DeviationCurve(ts, quantiles, trials, ens, seed_base, samples, ok)


def subspace_jl_failures(k, d, t, eps, trials, seed_base, *, debug_identity=False):
    """Boolean failure indicator per trial for the subspace embedding event.

    A trial fails when some singular value of ``R Q`` leaves
    ``[sqrt(1 - eps), sqrt(1 + eps)]``, where ``Q`` is an orthonormal basis of
    a random ``k``-dimensional subspace of ``R^d``; this is equivalent to the
    norm-preservation condition holding for every vector of the subspace.
    """
    if not 1 <= k <= d:
        raise ValueError("need 1 <= k <= d")
    lo, hi = math.sqrt(1.0 - eps), math.sqrt(1.0 + eps)
    fails = np.zeros(trials, dtype=bool)
    for i in range(trials):
        seed = seed_base + i
        q = rng.random_orthonormal(rng.derive_key(seed, rng.SUBSPACE), d, k)
        r = identity_sketch(t, d) if debug_identity else sign_sketch(t, d, seed)
        s = singular_values(r @ q)
        fails[i] = s.shape[0] < k or s[-1] < lo or s[0] > hi
    return fails


def subspace_jl_failure_rate(k, d, t, eps, trials, seed_base, *, debug_identity=False):
    return float(subspace_jl_failures(k, d, t, eps, trials, seed_base, debug_identity=debug_identity).mean())


def rudelson_bound(t):
    """Tail bound ``2 exp(-t/2)`` on ``P(||RA|| >= 4 ||A||)``."""
    return 2.0 * math.exp(-t / 2.0)


def rudelson_exceedances(A, t, trials, seed_base, *, allow_violation=False):
    a = as_matrix(A)
    sr = stable_rank(a)
    if t < sr:
        if not allow_violation:
            raise PreconditionViolation(f"t={t} is below the stable rank {sr:.4g}")
        warnings.warn(f"t={t} is below the stable rank {sr:.4g}", stacklevel=2)
    threshold = 4.0 * spectral_norm(a)
    hits = np.zeros(trials, dtype=bool)
    for i in range(trials):
        hits[i] = spectral_norm(sign_sketch(t, a.shape[0], seed_base + i) @ a) >= threshold
    return hits


def rudelson_norm_rate(A, t, trials, seed_base, *, allow_violation=False):
    """Fraction of sign sketches with ``||R A|| >= 4 ||A||``."""
    return float(rudelson_exceedances(A, t, trials, seed_base, allow_violation=allow_violation).mean())
