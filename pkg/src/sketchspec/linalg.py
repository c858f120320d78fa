"""Deterministic dense linear algebra used by every sketching routine.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Functions
validate their inputs with :func:`as_matrix` and never mutate them.

Numerical rank is decided relative to the top singular value: a singular
value counts when ``sigma_i > tol * sigma_1``. The default ``tol`` is
``max(rows, cols) * machine_epsilon``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .errors import NoSpectrum, NonFiniteError, NumericalFailure, ShapeError

EPS = np.finfo(np.float64).eps

FULL_SVD_MAX_DIM = 512
POWER_TOL = 1e-10
POWER_MAX_ITER = 10_000
GRAM_MAX_DIM = 4096  # form A^T A explicitly up to this size


def as_matrix(A, name="A"):
    """Return ``A`` as a finite 2-D float64 array (a column for 1-D input)."""
    a = np.asarray(A, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"{name} must have positive dimensions, got {a.shape}")
    if not np.isfinite(a).all():
        raise NonFiniteError(f"{name} has non-finite entries")
    return a


def as_vector(b, name="b"):
    v = np.asarray(b, dtype=np.float64)
    if v.ndim == 2 and v.shape[1] == 1:
        v = v[:, 0]
    if v.ndim != 1 or v.shape[0] < 1:
        raise ShapeError(f"{name} must be a non-empty vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise NonFiniteError(f"{name} has non-finite entries")
    return v


def default_tol(shape):
    return max(shape) * EPS


@dataclass(frozen=True, eq=False)
class SvdFactors:
    """Thin SVD restricted to the numerical rank: ``A ~ U diag(sigma) V^T``."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    rank_tolerance: float

    @property
    def rank(self):
        return self.sigma.shape[0]

    def reconstruct(self):
        return (self.U * self.sigma) @ self.V.T

    def truncate(self, k):
        k = min(k, self.rank)
        return SvdFactors(self.U[:, :k], self.sigma[:k], self.V[:, :k], self.rank_tolerance)

    def leverage_scores(self):
        """Squared row norms of ``U``; they sum to the rank."""
        return np.einsum("ij,ij->i", self.U, self.U)


def _lapack_svd(a, compute_uv=True):
    try:
        return np.linalg.svd(a, full_matrices=False, compute_uv=compute_uv)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc


def singular_values(A):
    """All ``min(rows, cols)`` singular values, non-increasing."""
    return _lapack_svd(as_matrix(A), compute_uv=False)


def svd(A, tol=None):
    """Thin SVD keeping singular values above ``tol * sigma_1``.

    Raises
    ------
    NoSpectrum
        If ``A`` is the zero matrix.
    NumericalFailure
        If LAPACK fails to converge.
    """
    a = as_matrix(A)
    if tol is None:
        tol = default_tol(a.shape)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    u, s, vt = _lapack_svd(a)
    if s[0] == 0.0:
        raise NoSpectrum("the zero matrix has no singular spectrum")
    r = int(np.count_nonzero(s > tol * s[0]))
    return SvdFactors(u[:, :r], s[:r], vt[:r].T, float(tol))


def numerical_rank(A, tol=None):
    a = as_matrix(A)
    s = singular_values(a)
    if s[0] == 0.0:
        return 0
    if tol is None:
        tol = default_tol(a.shape)
    return int(np.count_nonzero(s > tol * s[0]))


def _power_norm(a):
    """Power iteration on the Gram matrix.

    Stops when the eigen-residual ``||G v - rho v||`` of the Rayleigh quotient
    ``rho`` falls below ``POWER_TOL * rho``; for symmetric ``G`` an eigenvalue
    then lies within that distance of ``rho``.
    """
    side = a if a.shape[0] >= a.shape[1] else a.T
    m = side.shape[1]
    if m <= GRAM_MAX_DIM:
        g = side.T @ side
        apply = lambda x: g @ x
    else:
        apply = lambda x: side.T @ (side @ x)
    v = rng.normals(rng.derive_key(0, rng.POWER), m)
    v /= np.linalg.norm(v)
    for _ in range(POWER_MAX_ITER):
        w = apply(v)
        rho = float(v @ w)
        if rho <= 0.0:
            return 0.0
        if np.linalg.norm(w - rho * v) <= POWER_TOL * rho:
            return float(np.sqrt(rho))
        v = w / np.linalg.norm(w)
    raise NumericalFailure("power iteration hit its iteration cap")


def spectral_norm(A):
    """Largest singular value; 0 for the zero matrix."""
    a = as_matrix(A)
    if not a.any():
        return 0.0
    if min(a.shape) <= FULL_SVD_MAX_DIM:
        return float(_lapack_svd(a, compute_uv=False)[0])
    return _power_norm(a)


def frobenius_norm(A):
    return float(np.linalg.norm(as_matrix(A), "fro"))


def stable_rank(A):
    """``||A||_F^2 / ||A||_2^2``, in ``[1, rank(A)]``."""
    a = as_matrix(A)
    s = singular_values(a)
    if s[0] == 0.0:
        raise NoSpectrum("stable rank of the zero matrix is undefined")
    return float(np.sum(s**2) / s[0] ** 2)


def pseudo_inverse(A, tol=None):
    """Moore-Penrose pseudo-inverse ``V diag(1/sigma) U^T``."""
    a = as_matrix(A)
    if not a.any():
        return np.zeros((a.shape[1], a.shape[0]))
    f = svd(a, tol)
    return (f.V / f.sigma) @ f.U.T


def best_rank_k(A, k):
    """Truncated SVD ``A_k``; returns a copy of ``A`` when ``k >= rank(A)``.

    With repeated singular values at position ``k`` the result is not unique;
    the first ``k`` in LAPACK's order are kept, which leaves the error
    ``||A - A_k|| = sigma_{k+1}`` unchanged.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a = as_matrix(A)
    if not a.any():
        return a.copy()
    f = svd(a)
    if k >= f.rank:
        return a.copy()
    return f.truncate(k).reconstruct()


def rowspace_basis(C, tol=None):
    """Orthonormal basis of ``rowspan(C)`` as the rows of an ``r x m`` matrix."""
    c = as_matrix(C, "C")
    if not c.any():
        return np.zeros((0, c.shape[1]))
    return svd(c, tol).V.T


def _check_cols(A, C):
    a = as_matrix(A)
    c = as_matrix(C, "C")
    if a.shape[1] != c.shape[1]:
        raise ShapeError(f"column mismatch: A has {a.shape[1]}, C has {c.shape[1]}")
    return a, c


def project_onto_rowspace(A, C):
    """``A C^+ C``: each row of ``A`` projected onto ``rowspan(C)``."""
    a, c = _check_cols(A, C)
    q = rowspace_basis(c)
    return (a @ q.T) @ q


def project_rank_k(A, C, k):
    """Best rank-``k`` approximation of ``project_onto_rowspace(A, C)``.

    Computed as ``(A Q^T)_k Q`` for an orthonormal row basis ``Q`` of ``C``,
    which avoids forming ``C^+``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    a, c = _check_cols(A, C)
    q = rowspace_basis(c)
    if q.shape[0] == 0:
        return np.zeros_like(a)
    y = a @ q.T
    if not y.any():
        return np.zeros_like(a)
    f = svd(y)
    return f.truncate(k).reconstruct() @ q


@dataclass(frozen=True, eq=False)
class EpsSandwichVerdict:
    holds: bool
    worst_ratio: float
    witness_direction: Optional[np.ndarray] = None


def check_rayleigh_sandwich(A, Atil, eps, tol=None):
    """Decide ``(1-eps) x'A'Ax <= x'Ã'Ãx <= (1+eps) x'A'Ax`` for every ``x``.

    The supremum of ``|x'(Ã'Ã - A'A)x| / x'A'Ax`` over ``Ax != 0`` equals the
    largest-magnitude eigenvalue of ``S^-1 V' Ã'Ã V S^-1 - I``, where
    ``A = U S V'`` is the thin SVD. Directions in ``null(A)`` must also be
    annihilated by ``Ã``; otherwise the condition fails for any ``eps`` and
    ``worst_ratio`` is ``inf``.
    """
    a, at = _check_cols(A, Atil)
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    f = svd(a, tol)
    v = f.V
    scale = max(spectral_norm(at), f.sigma[0])
    leak = at - (at @ v) @ v.T
    if a.shape[1] > f.rank and leak.any():
        u_l, s_l, vt_l = _lapack_svd(leak)
        if s_l[0] > 1e-8 * scale:
            return EpsSandwichVerdict(False, float("inf"), vt_l[0].copy())
    w = (at @ v) / f.sigma
    k = w.T @ w - np.eye(f.rank)
    k = 0.5 * (k + k.T)
    evals, evecs = np.linalg.eigh(k)
    i = int(np.argmax(np.abs(evals)))
    worst = float(abs(evals[i]))
    x = v @ (evecs[:, i] / f.sigma)
    x /= np.linalg.norm(x)
    return EpsSandwichVerdict(worst <= eps, worst, x)
