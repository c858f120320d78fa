"""Approximate matrix multiplication ``A^T B`` from shared sketches.

Both operands are always compressed with the *same* realized sketch: one sign
matrix ``R`` for :func:`amm_project`, one index sequence for
:func:`amm_row_sample`. The error is measured in the spectral norm and
compared with ``eps * ||A|| * ||B||``.
"""
import enum
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import InvalidQuery, ShapeError
from .linalg import as_matrix, frobenius_norm, spectral_norm
from .sketch import (
    amm_row_distribution,
    gather_rows,
    identity_sketch,
    row_sample_indices,
    row_sample_scales,
    sign_sketch,
)


@dataclass(frozen=True)
class ErrorReport:
    achieved_error: float
    bound: float
    relative_eps: float
    norm_a: float
    norm_b: float
    t_used: Optional[int]
    passed: bool
    eps: float

    def to_record(self, regime, seed):
        return {
            "regime": regime,
            "t": self.t_used,
            "seed": seed,
            "achieved_error": self.achieved_error,
            "bound": self.bound,
            "relative_eps": self.relative_eps,
            "passed": self.passed,
        }


class AmmResult(NamedTuple):
    a_sketch: np.ndarray
    b_sketch: np.ndarray
    report: ErrorReport


def _pair(A, B):
    a = as_matrix(A)
    b = as_matrix(B, "B")
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"row mismatch: A has {a.shape[0]}, B has {b.shape[0]}")
    return a, b


def amm_error(A, B, At, Bt, eps=0.25, norm_a=None, norm_b=None, t_used=None):
    """Spectral error ``||At^T Bt - A^T B||`` against ``eps ||A|| ||B||``."""
    a, b = _pair(A, B)
    at, bt = _pair(At, Bt)
    if at.shape[1] != a.shape[1] or bt.shape[1] != b.shape[1]:
        raise ShapeError("sketched operands do not match the originals' columns")
    if norm_a is None:
        norm_a = spectral_norm(a)
    if norm_b is None:
        norm_b = spectral_norm(b)
    err = spectral_norm(at.T @ bt - a.T @ b)
    scale = norm_a * norm_b
    bound = eps * scale
    rel = err / scale if scale > 0 else (0.0 if err == 0 else math.inf)
    return ErrorReport(
        achieved_error=err,
        bound=bound,
        relative_eps=rel,
        norm_a=norm_a,
        norm_b=norm_b,
        t_used=t_used if t_used is not None else at.shape[0],
        passed=bool(err <= bound),
        eps=eps,
    )


def amm_project(A, B, t, seed, eps=0.25, *, norm_a=None, norm_b=None, debug_identity=False):
    """Sketch both operands with one ``t x n`` sign matrix.

    ``debug_identity`` replaces the sign matrix with the first ``t`` rows of
    the identity, which makes the product exact when ``t = n``.
    """
    a, b = _pair(A, B)
    n = a.shape[0]
    r = identity_sketch(t, n) if debug_identity else sign_sketch(t, n, seed)
    at, bt = r @ a, r @ b
    rep = amm_error(a, b, at, bt, eps, norm_a, norm_b, t)
    return AmmResult(at, bt, rep)


def amm_row_sample(A, B, t, seed, eps=0.25, *, norm_a=None, norm_b=None, dist=None):
    """Sample ``t`` shared row indices with ``p_i ~ ||A_(i)|| ||B_(i)||``.

    Row ``j`` of the sketches is ``A_(i_j) / sqrt(t p_{i_j})`` (likewise for
    ``B``), so ``E[At^T Bt] = A^T B``.
    """
    a, b = _pair(A, B)
    if dist is None:
        dist = amm_row_distribution(a, b)
    idx = row_sample_indices(dist, t, seed)
    scales = row_sample_scales(dist, idx)
    at, bt = gather_rows(a, idx, scales), gather_rows(b, idx, scales)
    rep = amm_error(a, b, at, bt, eps, norm_a, norm_b, t)
    return AmmResult(at, bt, rep)


class Regime(str, enum.Enum):
    PROJ_RANK = "ProjRank"
    PROJ_STABLE_RANK = "ProjStableRank"
    ROW_SAMPLE_STABLE_RANK = "RowSampleStableRank"
    REGRESSION_RANK = "RegressionRank"
    HOEFFDING_TABLE = "HoeffdingTable"
    BERNSTEIN_TABLE = "BernsteinTable"
    RANK_ONE_TABLE = "RankOneTable"


@dataclass(frozen=True)
class SampleSizeQuery:
    """Inputs to :func:`sample_size`.

    ``rank_param`` is the rank, stable rank or norm bound ``gamma`` depending
    on the regime. ``dims = (m, p)`` is needed by the two table regimes whose
    bounds grow with ``log(m + p)``. With ``sharp=True`` the row-sampling
    regime reads ``rank_param`` as ``sqrt(sr(A) sr(B))``.
    """

    regime: Regime
    rank_param: float
    eps: float
    dims: Optional[Tuple[int, int]] = None
    constant: float = 1.0
    sharp: bool = False

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))


def _log_dims(q):
    if q.dims is None:
        raise InvalidQuery(f"{q.regime.value} needs dims=(m, p)")
    m, p = q.dims
    if m < 1 or p < 1:
        raise InvalidQuery("dims must be positive")
    return math.log(m + p)


def sample_size_raw(q):
    """The regime's growth function before the constant and the ceiling."""
    if not 0.0 < q.eps < 1.0:
        raise InvalidQuery(f"eps must lie in (0, 1), got {q.eps}")
    if q.rank_param < 1:
        raise InvalidQuery(f"rank parameter must be >= 1, got {q.rank_param}")
    if q.constant <= 0:
        raise InvalidQuery("constant must be positive")
    r, e = float(q.rank_param), float(q.eps)
    e2 = e * e
    reg = q.regime
    if reg is Regime.PROJ_RANK:
        return r / e2
    if reg is Regime.PROJ_STABLE_RANK:
        return r / (e2 * e2)
    if reg is Regime.ROW_SAMPLE_STABLE_RANK:
        if q.sharp:
            return r * math.log(r * r / (e2 * e2)) / e2
        return r * math.log(r / e2) / e2
    if reg is Regime.REGRESSION_RANK:
        return r / e
    if reg is Regime.HOEFFDING_TABLE:
        return r * r * _log_dims(q) / e2
    if reg is Regime.BERNSTEIN_TABLE:
        return r * _log_dims(q) / e2
    if reg is Regime.RANK_ONE_TABLE:
        return r * math.log(r / e2) / e2
    raise InvalidQuery(f"unknown regime {reg!r}")


def sample_size(q):
    """``ceil(C * f(rank_param, eps))`` with natural logarithms, at least 1."""
    v = q.constant * sample_size_raw(q)
    # absorb rounding noise such as 999.9999999999998 or 1000.0000000000002
    return max(1, math.ceil(v * (1.0 - 1e-12)))


def frobenius_error(A, B, At, Bt):
    """Frobenius counterpart of the achieved error; an upper bound for it."""
    return frobenius_norm(as_matrix(At).T @ as_matrix(Bt) - as_matrix(A).T @ as_matrix(B))


def report_dict(rep):
    return asdict(rep)
