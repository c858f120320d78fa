"""Random sketching matrices and row-sampling distributions.

All constructors are pure functions of their dimensions, inputs and a 64-bit
seed (see :mod:`sketchspec.rng`).

Row sampling uses the scaling ``1/sqrt(t * p_i)`` so that ``E[S^T S] = I``
exactly; samples are drawn i.i.d. with replacement.
"""
import enum
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .errors import DegenerateDistribution, NoSpectrum, ShapeError
from .linalg import as_matrix, svd

MAX_ENTRIES = 10**8
PROB_TOL = 1e-12


class SketchKind(str, enum.Enum):
    SIGN = "SignProjection"
    GAUSSIAN = "GaussianProjection"
    ROW_SAMPLE = "RowSample"


class DistributionSource(str, enum.Enum):
    OUTER_PRODUCT_NORMS = "OuterProductNorms"
    LEVERAGE_SCORES = "LeverageScores"
    CUSTOM = "Custom"


def _check_dims(t, n):
    if t < 1 or n < 1:
        raise ValueError(f"sketch dimensions must be positive, got t={t}, n={n}")
    if t * n > MAX_ENTRIES:
        raise ValueError(f"a {t}x{n} sketch exceeds the {MAX_ENTRIES} entry limit")


def sign_sketch(t, n, seed):
    """``t x n`` matrix of i.i.d. ``+-1/sqrt(t)`` entries."""
    _check_dims(t, n)
    return rng.signs(rng.derive_key(seed, rng.SIGN), (t, n), 1.0 / np.sqrt(t))


def gaussian_sketch(t, n, seed):
    """``t x n`` matrix of i.i.d. ``N(0, 1/t)`` entries."""
    _check_dims(t, n)
    g = rng.gaussian_matrix(rng.derive_key(seed, rng.GAUSS), (t, n))
    g /= np.sqrt(t)
    return g


def identity_sketch(t, n):
    """First ``t`` rows of ``I_n``; the exact-path debug substitute for a sketch."""
    if t > n:
        raise ValueError("identity sketch needs t <= n")
    return np.eye(t, n)


@dataclass(frozen=True, eq=False)
class SampleDistribution:
    probs: np.ndarray
    support_size: int
    source: DistributionSource = DistributionSource.CUSTOM

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.shape[0] < 1:
            raise ValueError("probabilities must be a non-empty vector")
        if (p < 0).any() or (p > 1).any() or not np.isfinite(p).all():
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_weights(cls, weights, source=DistributionSource.CUSTOM):
        w = np.asarray(weights, dtype=np.float64)
        if (w < 0).any() or not np.isfinite(w).all():
            raise DegenerateDistribution("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise DegenerateDistribution("all sampling weights are zero")
        p = w / total
        # renormalise once more so the sum is within a few ulps of 1
        p /= p.sum()
        return cls(p, int(np.count_nonzero(p > 0)), DistributionSource(source))

    @property
    def n(self):
        return self.probs.shape[0]

    def cdf(self):
        c = np.cumsum(self.probs)
        last = int(np.flatnonzero(self.probs > 0)[-1])
        c[last:] = 1.0
        return c


def amm_row_distribution(A, B):
    """``p_i`` proportional to ``||A_(i)|| * ||B_(i)||``."""
    a = as_matrix(A)
    b = as_matrix(B, "B")
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row mismatch: A has {a.shape[0]}, B has {b.shape[0]}")
    w = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    return SampleDistribution.from_weights(w, DistributionSource.OUTER_PRODUCT_NORMS)


def leverage_distribution(A, tol=None):
    """``p_i = ||U_(i)||^2 / r`` from the thin SVD of ``A``."""
    f = svd(A, tol)  # raises NoSpectrum for the zero matrix
    lev = f.leverage_scores()
    r = f.rank
    if abs(lev.sum() - r) > 1e-8 * r:
        raise NoSpectrum(f"leverage scores sum to {lev.sum()}, expected rank {r}")
    if (lev > 1 + 1e-10).any():
        raise NoSpectrum("leverage score above 1")
    # zero rows have zero leverage; LAPACK leaves ~1e-34 there
    lev = np.where(np.any(as_matrix(A) != 0, axis=1), lev, 0.0)
    return SampleDistribution.from_weights(
        np.clip(lev, 0.0, 1.0), DistributionSource.LEVERAGE_SCORES
    )


def row_sample_indices(dist, t, seed):
    """``t`` i.i.d. row indices drawn from ``dist`` (with replacement)."""
    if t < 1:
        raise ValueError("t must be at least 1")
    return rng.categorical(rng.derive_key(seed, rng.ROWS), dist.cdf(), t)


def row_sample_scales(dist, idx):
    p = dist.probs[idx]
    if (p <= 0).any():
        raise DegenerateDistribution("sampled a zero-probability row")
    return 1.0 / np.sqrt(idx.shape[0] * p)


def row_sample_sketch(dist, t, seed):
    """Dense ``t x n`` sampling matrix with ``S[k, i_k] = 1/sqrt(t p_{i_k})``."""
    _check_dims(t, dist.n)
    idx = row_sample_indices(dist, t, seed)
    s = np.zeros((t, dist.n))
    s[np.arange(t), idx] = row_sample_scales(dist, idx)
    return s


def gather_rows(A, idx, scales):
    """``S A`` for a sampling sketch given by indices and scales."""
    return A[idx] * scales[:, None]


@dataclass(frozen=True)
class SketchOp:
    """Serializable description of a sketch; materialize or apply on demand."""

    kind: SketchKind
    t: int
    n: int
    seed: int
    probabilities: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", SketchKind(self.kind))
        if self.t < 1 or self.n < 1:
            raise ValueError("t and n must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.kind is SketchKind.ROW_SAMPLE:
            if self.probabilities is None:
                raise ValueError("RowSample sketches need probabilities")
            p = np.asarray(self.probabilities, dtype=np.float64)
            if p.shape != (self.n,):
                raise ShapeError(f"expected {self.n} probabilities, got {p.shape}")
            object.__setattr__(self, "probabilities", p)
            self.distribution()  # validates
        elif self.probabilities is not None:
            raise ValueError("probabilities are only meaningful for RowSample")

    def distribution(self):
        p = self.probabilities
        return SampleDistribution(p, int(np.count_nonzero(p > 0)))

    def materialize(self):
        if self.kind is SketchKind.SIGN:
            return sign_sketch(self.t, self.n, self.seed)
        if self.kind is SketchKind.GAUSSIAN:
            return gaussian_sketch(self.t, self.n, self.seed)
        return row_sample_sketch(self.distribution(), self.t, self.seed)

    def apply(self, A):
        return apply_sketch(self, A)

    def to_dict(self):
        d = {"kind": self.kind.value, "t": self.t, "n": self.n, "seed": self.seed}
        if self.probabilities is not None:
            d["probabilities"] = [float(x) for x in self.probabilities]
        return d

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], int(d["t"]), int(d["n"]), int(d["seed"]), d.get("probabilities"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def apply_sketch(op, A):
    """``op`` times ``A``; row samples are gathered without forming ``S``."""
    a = as_matrix(A)
    if a.shape[0] != op.n:
        raise ShapeError(f"sketch expects {op.n} rows, A has {a.shape[0]}")
    if op.kind is SketchKind.ROW_SAMPLE:
        dist = op.distribution()
        idx = row_sample_indices(dist, op.t, op.seed)
        return gather_rows(a, idx, row_sample_scales(dist, idx))
    return op.materialize() @ a
