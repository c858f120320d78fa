"""Sketch-and-solve least squares.

The full problem ``min ||b - A x||`` is compressed with one sign sketch
``R`` applied to both ``A`` and ``b``; the small problem ``min ||R b - R A x||``
is then solved exactly. The minimum-norm solution is always returned, so
both the exact and the sketched answers lie in ``rowspan(A)``.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .errors import MismatchedProblem, ShapeError
from .linalg import EPS, as_matrix, as_vector, pseudo_inverse, svd
from .sketch import identity_sketch, sign_sketch

ZERO_RESIDUAL = 1e-12


@dataclass(frozen=True, eq=False)
class RegressionSolution:
    x: np.ndarray
    residual_norm: float
    sketched: bool
    t_used: Optional[int] = None
    seed: Optional[int] = None


def _system(A, b):
    a = as_matrix(A)
    v = as_vector(b)
    if a.shape[0] != v.shape[0]:
        raise ShapeError(f"A has {a.shape[0]} rows but b has length {v.shape[0]}")
    return a, v


def _lstsq_min_norm(M, rhs):
    """Minimum-norm least-squares solution of ``M X = rhs``.

    Pivoted QR when ``M`` has full numerical column rank, SVD otherwise.
    """
    rows, cols = M.shape
    if rows >= cols and M.any():
        q, r, piv = sla.qr(M, mode="economic", pivoting=True)
        d = np.abs(np.diag(r))
        if d[-1] > max(rows, cols) * EPS * d[0]:
            y = sla.solve_triangular(r, q.T @ rhs)
            x = np.empty_like(y)
            x[piv] = y
            return x
    return pseudo_inverse(M) @ rhs


def solve_exact(A, b):
    """``x = A^+ b`` and its residual norm."""
    a, v = _system(A, b)
    x = pseudo_inverse(a) @ v
    return RegressionSolution(x, float(np.linalg.norm(v - a @ x)), sketched=False)


def _sketch_for(n, t, seed, debug_identity):
    return identity_sketch(t, n) if debug_identity else sign_sketch(t, n, seed)


def solve_sketched(A, b, t, seed, *, debug_identity=False):
    """``x = (R A)^+ (R b)`` with a single ``t x n`` sign sketch ``R``."""
    a, v = _system(A, b)
    r = _sketch_for(a.shape[0], t, seed, debug_identity)
    x = _lstsq_min_norm(r @ a, r @ v)
    return RegressionSolution(
        x, float(np.linalg.norm(v - a @ x)), sketched=True, t_used=t, seed=seed
    )


def solve_sketched_multi(A, B, t, seed, *, debug_identity=False):
    """``X = (R A)^+ (R B)``, column-for-column equal to :func:`solve_sketched`."""
    a = as_matrix(A)
    bm = as_matrix(B, "B")
    if a.shape[0] != bm.shape[0]:
        raise ShapeError(f"A has {a.shape[0]} rows but B has {bm.shape[0]}")
    r = _sketch_for(a.shape[0], t, seed, debug_identity)
    return _lstsq_min_norm(r @ a, r @ bm)


def solve_exact_multi(A, B):
    a = as_matrix(A)
    bm = as_matrix(B, "B")
    if a.shape[0] != bm.shape[0]:
        raise ShapeError(f"A has {a.shape[0]} rows but B has {bm.shape[0]}")
    return pseudo_inverse(a) @ bm


def smallest_singular_value(A):
    """Smallest singular value above the rank tolerance."""
    return float(svd(A).sigma[-1])


@dataclass(frozen=True)
class RegressionReport:
    residual_ratio: float
    solution_distance: float
    bound_rhs: float
    eps: float
    passed_approx: bool
    passed_distance: bool
    t: Optional[int] = None
    seed: Optional[int] = None

    def to_record(self):
        return {
            "t": self.t,
            "seed": self.seed,
            "residual_ratio": self.residual_ratio,
            "solution_distance": self.solution_distance,
            "bound_rhs": self.bound_rhs,
            "passed_approx": self.passed_approx,
            "passed_distance": self.passed_distance,
        }


def _verify(a, v, sol, label):
    actual = float(np.linalg.norm(v - a @ sol.x))
    if abs(actual - sol.residual_norm) > 1e-10 * max(actual, sol.residual_norm) + 1e-12 * max(
        1.0, float(np.linalg.norm(v))
    ):
        raise MismatchedProblem(
            f"{label} solution residual {sol.residual_norm} does not match recomputed {actual}"
        )
    return actual


def residual_ratio(exact_residual, sketched_residual, b_norm):
    floor = ZERO_RESIDUAL * max(1.0, b_norm)
    if exact_residual <= floor:
        return 1.0 if sketched_residual <= floor else math.inf
    return sketched_residual / exact_residual


def regression_report(A, b, exact, sketched, eps, sigma_min=None):
    """Residual ratio, solution distance and the distance bound's right side.

    ``passed_approx`` tests ``ratio <= 1 + eps``. ``passed_distance`` tests
    ``||x_opt - x|| <= eps / sigma_min(A) * ||b - A x_opt||``, with a slack of
    ``1e-12 * ||x_opt||`` so that consistent systems do not fail on roundoff.
    """
    a, v = _system(A, b)
    r_opt = _verify(a, v, exact, "exact")
    r_sk = _verify(a, v, sketched, "sketched")
    b_norm = float(np.linalg.norm(v))
    ratio = residual_ratio(r_opt, r_sk, b_norm)
    dist = float(np.linalg.norm(exact.x - sketched.x))
    if sigma_min is None:
        sigma_min = smallest_singular_value(a)
    rhs = eps / sigma_min * r_opt
    slack = 1e-12 * max(1.0, float(np.linalg.norm(exact.x)))
    return RegressionReport(
        residual_ratio=ratio,
        solution_distance=dist,
        bound_rhs=rhs,
        eps=eps,
        passed_approx=bool(ratio <= 1.0 + eps),
        passed_distance=bool(dist <= rhs + slack),
        t=sketched.t_used,
        seed=sketched.seed,
    )
