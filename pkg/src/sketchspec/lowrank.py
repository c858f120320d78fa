"""Spectral-norm low-rank approximation from a sketch ``Ã`` of ``A``.

Every method returns ``P_{Ã,k}(A)``: the best rank-``k`` approximation of
``A`` projected onto ``rowspan(Ã)``. With ``Q`` an orthonormal row basis of
``Ã`` and ``A Q^T = U_y S_y V_y^T``, this equals ``A Z_k Z_k^T`` where
``Z = Q^T V_y``. One SVD of the small ``n x t`` matrix ``A Q^T`` therefore
serves every ``k`` at once.

Quality is reported as ``||A - approx|| / ||A - A_k||``. When
``||A - A_k|| <= 1e-14 ||A||`` the ratio is 1 if the method's error is also
below ``1e-12 ||A||`` and ``inf`` otherwise.
"""
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError
from .linalg import (
    as_matrix,
    check_rayleigh_sandwich,
    numerical_rank,
    rowspace_basis,
    singular_values,
    spectral_norm,
    svd,
)
from .sketch import (
    gather_rows,
    gaussian_sketch,
    identity_sketch,
    leverage_distribution,
    row_sample_indices,
    row_sample_scales,
    sign_sketch,
)

ZERO_DENOM = 1e-14
ZERO_NUMER = 1e-12


class LowRankMethod(str, enum.Enum):
    SIGN = "SignProj"
    GAUSSIAN = "GaussianProj"
    LEVERAGE = "LeverageSample"
    TAIL_SIGN = "TailSignProj"
    TAIL_FULL = "TailFullProj"


@dataclass(frozen=True, eq=False)
class LowRankResult:
    approx: np.ndarray
    k: int
    method: LowRankMethod
    t_used: int
    seed: int
    ratio: float
    precondition_ok: bool = True

    def to_record(self, eps=None, passed=None, sandwich_eps=None):
        rec = {
            "method": self.method.value,
            "k": self.k,
            "t": self.t_used,
            "seed": self.seed,
            "ratio": self.ratio,
        }
        if sandwich_eps is not None:
            rec["sandwich_eps"] = sandwich_eps
        if passed is not None:
            rec["passed"] = passed
        return rec


def target_ratio(method, eps, k, rank):
    """Right-hand side of the guarantee each method is tested against."""
    method = LowRankMethod(method)
    if method in (LowRankMethod.SIGN, LowRankMethod.LEVERAGE, LowRankMethod.TAIL_FULL):
        return 1.0 + eps
    if method is LowRankMethod.GAUSSIAN:
        return 2.0 + eps * math.sqrt(max(rank - k, 0) / k)
    return 2.0 + eps


def _ratio(numer, denom, scale):
    if denom <= ZERO_DENOM * scale:
        return 1.0 if numer <= ZERO_NUMER * scale else math.inf
    return numer / denom


def lowrank_ratio(A, approx, k):
    """``||A - approx|| / sigma_{k+1}(A)`` computed densely."""
    a = as_matrix(A)
    x = as_matrix(approx, "approx")
    if a.shape != x.shape:
        raise ShapeError(f"approx has shape {x.shape}, A has {a.shape}")
    s = singular_values(a)
    denom = s[k] if k < s.shape[0] else 0.0
    return _ratio(spectral_norm(a - x), denom, s[0])


def residual_stable_rank(A, k):
    """``sr(A - A_k) = sum_{j>k} sigma_j^2 / sigma_{k+1}^2``; 0 once ``k >= rank``."""
    return _residual_sr_from(svd(A), k)


class Projection:
    """``P_{Ã,k}(A)`` for all ``k`` from one factorization.

    ``factors`` is the thin SVD of ``A``; when supplied, errors are evaluated
    on the ``rank x m`` matrix ``S V^T`` instead of the ``n x m`` original,
    which has the same spectral norm under right multiplication.
    """

    def __init__(self, A, Atil, factors=None):
        self.a = as_matrix(A)
        at = as_matrix(Atil, "Atil")
        if at.shape[1] != self.a.shape[1]:
            raise ShapeError("sketch and matrix have different column counts")
        self.factors = factors if factors is not None else svd(self.a)
        self.q = rowspace_basis(at)
        y = self.a @ self.q.T
        if self.q.shape[0] == 0 or not y.any():
            self.uy = np.zeros((self.a.shape[0], 0))
            self.sy = np.zeros(0)
            self.z = np.zeros((self.a.shape[1], 0))
        else:
            fy = svd(y)
            self.uy, self.sy = fy.U, fy.sigma
            self.z = self.q.T @ fy.V
        self._compact = self.factors.sigma[:, None] * self.factors.V.T

    @property
    def rank(self):
        return self.sy.shape[0]

    def approx(self, k=None):
        """Rank-``k`` approximation, or the full projection when ``k`` is None."""
        if k is None:
            return (self.a @ self.q.T) @ self.q
        k = min(k, self.rank)
        return (self.uy[:, :k] * self.sy[:k]) @ self.z[:, :k].T

    def error(self, k=None):
        z = self.q.T if k is None else self.z[:, : min(k, self.rank)]
        c = self._compact
        return spectral_norm(c - (c @ z) @ z.T)

    def ratio(self, k, full=False):
        s = self.factors.sigma
        denom = s[k] if k < s.shape[0] else 0.0
        return _ratio(self.error(None if full else k), denom, s[0])


def _sketch(kind, t, n, seed, debug_identity):
    if debug_identity:
        return identity_sketch(t, n)
    if kind == "gaussian":
        return gaussian_sketch(t, n, seed)
    return sign_sketch(t, n, seed)


def _check_k(a, k):
    if not 1 <= k <= min(a.shape):
        raise ValueError(f"k must lie in [1, {min(a.shape)}], got {k}")


def full_column_rank(Atil, factors, k):
    """Whether ``R U_k`` has full column rank, using ``R U_k = Ã V_k / S_k``."""
    k = min(k, factors.rank)
    ruk = (Atil @ factors.V[:, :k]) / factors.sigma[:k]
    s = singular_values(ruk)
    return bool(s.shape[0] == k and s[-1] > max(ruk.shape) * np.finfo(float).eps * s[0])


def _result(proj, k, method, t, seed, precondition_ok=True, full=False):
    return LowRankResult(
        approx=proj.approx(None if full else k),
        k=k,
        method=method,
        t_used=t,
        seed=seed,
        ratio=proj.ratio(k, full=full),
        precondition_ok=precondition_ok,
    )


def lowrank_sign(A, k, t, seed, *, factors=None, debug_identity=False):
    a = as_matrix(A)
    _check_k(a, k)
    proj = Projection(a, _sketch("sign", t, a.shape[0], seed, debug_identity) @ a, factors)
    return _result(proj, k, LowRankMethod.SIGN, t, seed)


def lowrank_sign_all_k(A, t, seed, ks=None, *, factors=None, debug_identity=False):
    """Ratios for every ``k`` in ``ks`` (default ``1..rank``) from one sketch."""
    a = as_matrix(A)
    proj = Projection(a, _sketch("sign", t, a.shape[0], seed, debug_identity) @ a, factors)
    if ks is None:
        ks = range(1, proj.factors.rank + 1)
    return {k: proj.ratio(k) for k in ks}


def lowrank_gaussian(A, k, t, seed, *, factors=None, debug_identity=False):
    a = as_matrix(A)
    _check_k(a, k)
    at = _sketch("gaussian", t, a.shape[0], seed, debug_identity) @ a
    proj = Projection(a, at, factors)
    ok = full_column_rank(at, proj.factors, k)
    return _result(proj, k, LowRankMethod.GAUSSIAN, t, seed, ok)


def leverage_sketch(A, t, seed, dist=None):
    """``S A`` for ``t`` i.i.d. leverage-score row samples."""
    a = as_matrix(A)
    if dist is None:
        dist = leverage_distribution(a)
    idx = row_sample_indices(dist, t, seed)
    return gather_rows(a, idx, row_sample_scales(dist, idx))


def lowrank_leverage(A, k, t, seed, *, factors=None, dist=None):
    a = as_matrix(A)
    _check_k(a, k)
    proj = Projection(a, leverage_sketch(a, t, seed, dist), factors)
    return _result(proj, k, LowRankMethod.LEVERAGE, t, seed)


def lowrank_leverage_all_k(A, t, seed, ks=None, *, factors=None, dist=None):
    a = as_matrix(A)
    proj = Projection(a, leverage_sketch(a, t, seed, dist), factors)
    if ks is None:
        ks = range(1, proj.factors.rank + 1)
    return {k: proj.ratio(k) for k in ks}


def lowrank_tail(
    A, k, t, seed, full_rank_mode=False, *, factors=None, debug_identity=False, check_tail=True
):
    """Sign-sketch approximation for matrices whose tail has stable rank <= k.

    ``full_rank_mode`` returns the whole projection ``P_Ã(A)`` (rank up to
    ``t``) instead of its rank-``k`` truncation.
    """
    a = as_matrix(A)
    _check_k(a, k)
    at = _sketch("sign", t, a.shape[0], seed, debug_identity) @ a
    proj = Projection(a, at, factors)
    if check_tail:
        srt = _residual_sr_from(proj.factors, k)
        if srt > k:
            warnings.warn(
                f"residual stable rank {srt:.3g} exceeds k={k}; the tail guarantee does not apply",
                stacklevel=2,
            )
    ok = full_column_rank(at, proj.factors, k)
    method = LowRankMethod.TAIL_FULL if full_rank_mode else LowRankMethod.TAIL_SIGN
    return _result(proj, k, method, t, seed, ok, full=full_rank_mode)


def _residual_sr_from(factors, k):
    if k >= factors.rank:
        return 0.0
    tail = factors.sigma[k:]
    return float(np.sum(tail**2) / tail[0] ** 2)


def approx_rank(result, tol=None):
    """Numerical rank of a result's approximation."""
    if not result.approx.any():
        return 0
    return numerical_rank(result.approx, tol if tol is not None else 1e-10)


def sandwich_eps_for(A, Atil) -> Optional[float]:
    """Smallest eps for which ``Ã`` sandwiches ``A``; None if never."""
    v = check_rayleigh_sandwich(A, Atil, 0.5)
    return None if math.isinf(v.worst_ratio) else v.worst_ratio
