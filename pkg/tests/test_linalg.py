import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sketchspec import linalg as L
from sketchspec.errors import NoSpectrum, NonFiniteError, ShapeError


def test_as_matrix_rejects_bad_input():
    with pytest.raises(NonFiniteError):
        L.as_matrix([[1.0, np.nan]])
    with pytest.raises(ShapeError):
        L.as_matrix(np.ones((2, 2, 2)))
    with pytest.raises(ShapeError):
        L.as_matrix(np.ones((0, 3)))


# svd -----------------------------------------------------------------------


def test_svd_drops_zero_singular_value():
    f = L.svd(np.diag([3.0, 1.0, 0.0]))
    assert np.allclose(f.sigma, [3, 1]) and f.rank == 2


def test_svd_identity():
    f = L.svd(np.eye(3))
    assert np.allclose(f.sigma, 1) and np.allclose(f.U @ f.V.T, np.eye(3))


def test_svd_reconstruction(seeded):
    a = seeded((8, 5), 1)
    f = L.svd(a)
    assert np.linalg.norm(a - f.reconstruct()) <= 1e-10 * np.linalg.norm(a)
    assert np.allclose(f.U.T @ f.U, np.eye(f.rank), atol=1e-10)
    assert np.allclose(f.V.T @ f.V, np.eye(f.rank), atol=1e-10)
    assert np.all(np.diff(f.sigma) <= 0)


def test_svd_zero_matrix():
    with pytest.raises(NoSpectrum):
        L.svd(np.zeros((3, 3)))


def test_svd_tolerance_controls_rank():
    a = np.diag([1.0, 1e-3, 1e-9])
    assert L.svd(a).rank == 3
    assert L.svd(a, tol=1e-6).rank == 2


# norms ---------------------------------------------------------------------


def test_spectral_norm_examples():
    assert L.spectral_norm(np.diag([3.0, 1.0, 0.0])) == pytest.approx(3)
    assert L.spectral_norm(np.zeros((4, 4))) == 0
    assert L.spectral_norm(np.array([[3.0], [4.0]])) == pytest.approx(5)


def test_spectral_norm_power_path_matches_svd(seeded):
    a = seeded((900, 600), 2)
    ref = np.linalg.svd(a, compute_uv=False)[0]
    assert L.spectral_norm(a) == pytest.approx(ref, rel=1e-9)


def test_frobenius_examples():
    assert L.frobenius_norm(np.diag([3.0, 4.0])) == pytest.approx(5)
    assert L.frobenius_norm(np.zeros((2, 3))) == 0
    assert L.frobenius_norm(np.eye(9)) == pytest.approx(3)


def test_stable_rank_examples(seeded):
    assert L.stable_rank(np.eye(6)) == pytest.approx(6)
    u = seeded((7, 1), 3)
    assert L.stable_rank(u @ seeded((1, 4), 4)) == pytest.approx(1)
    assert L.stable_rank(np.diag([3.0, 4.0])) == pytest.approx(1.5625)
    with pytest.raises(NoSpectrum):
        L.stable_rank(np.zeros((2, 2)))


@settings(max_examples=40, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)), elements=st.floats(-10, 10)),
    st.floats(0.1, 100),
)
def test_stable_rank_bounded_and_scale_free(a, c):
    if L.spectral_norm(a) < 1e-6:
        return
    sr = L.stable_rank(a)
    assert 1 - 1e-12 <= sr <= L.numerical_rank(a) + 1e-8
    assert L.stable_rank(c * a) == pytest.approx(sr, rel=1e-10)


# pseudo-inverse ------------------------------------------------------------


def test_pinv_examples(seeded):
    assert np.allclose(L.pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    q, _ = np.linalg.qr(seeded((6, 3), 5))
    assert np.allclose(L.pseudo_inverse(q), q.T)
    a = seeded((6, 3), 6)
    assert np.allclose(a @ L.pseudo_inverse(a) @ a, a, atol=1e-10)
    assert np.array_equal(L.pseudo_inverse(np.zeros((2, 3))), np.zeros((3, 2)))


@pytest.mark.parametrize("shape,rank", [((6, 3), 3), ((5, 8), 5), ((9, 7), 3)])
def test_moore_penrose_identities(seeded, shape, rank):
    a = seeded((shape[0], rank), 7) @ seeded((rank, shape[1]), 8)
    p = L.pseudo_inverse(a)
    tol = 1e-8 * L.spectral_norm(a)
    assert np.abs(a @ p @ a - a).max() <= tol
    assert np.abs(p @ a @ p - p).max() <= 1e-8 * L.spectral_norm(p)
    assert np.abs(a @ p - (a @ p).T).max() <= 1e-8
    assert np.abs(p @ a - (p @ a).T).max() <= 1e-8


# truncation ----------------------------------------------------------------


def test_best_rank_k_examples(seeded):
    assert np.allclose(L.best_rank_k(np.diag([5.0, 3.0, 1.0]), 2), np.diag([5.0, 3.0, 0.0]))
    a = seeded((4, 2), 9)
    assert np.array_equal(L.best_rank_k(a, 5), a)
    b = seeded((10, 7), 10)
    s = np.linalg.svd(b, compute_uv=False)
    assert L.spectral_norm(b - L.best_rank_k(b, 3)) == pytest.approx(s[3], abs=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_eckart_young_every_k(seeded, seed):
    a = seeded((12, 9), seed)
    s = np.linalg.svd(a, compute_uv=False)
    for k in range(1, 9):
        ak = L.best_rank_k(a, k)
        assert L.numerical_rank(ak) <= k
        assert L.spectral_norm(a - ak) == pytest.approx(s[k], rel=1e-8)


def test_best_rank_k_repeated_singular_values():
    a = np.diag([2.0, 1.0, 1.0, 1.0])
    assert L.spectral_norm(a - L.best_rank_k(a, 2)) == pytest.approx(1.0)


# projections ---------------------------------------------------------------


def test_project_onto_own_rowspace(seeded):
    a = seeded((6, 4), 11)
    assert np.allclose(L.project_onto_rowspace(a, a), a)


def test_project_onto_single_row(seeded):
    a = seeded((5, 4), 12)
    p = L.project_onto_rowspace(a, a[:1])
    r = a[0] / np.linalg.norm(a[0])
    assert np.allclose(p, np.outer(p @ r, r))


def test_projection_matches_pinv_oracle_and_is_idempotent(seeded):
    a, c = seeded((8, 5), 13), seeded((3, 5), 14)
    p = L.project_onto_rowspace(a, c)
    assert np.allclose(p, a @ np.linalg.pinv(c) @ c, atol=1e-10)
    assert np.allclose(L.project_onto_rowspace(p, c), p, atol=1e-10)
    with pytest.raises(ShapeError):
        L.project_onto_rowspace(a, seeded((3, 4), 1))


def test_project_rank_k(seeded):
    a = seeded((8, 5), 15)
    assert np.allclose(L.project_rank_k(a, a, 5), a)
    assert np.allclose(L.project_rank_k(a, a, 1), L.best_rank_k(a, 1))
    c = seeded((4, 5), 16)
    oracle = L.best_rank_k(a @ np.linalg.pinv(c) @ c, 2)
    got = L.project_rank_k(a, c, 2)
    assert np.allclose(got, oracle, atol=1e-10)
    s = np.linalg.svd(a, compute_uv=False)
    assert L.spectral_norm(a - got) >= s[2] - 1e-8 * s[0]


# sandwich ------------------------------------------------------------------


def test_sandwich_identity_and_scaling(seeded):
    a = seeded((9, 4), 17)
    v = L.check_rayleigh_sandwich(a, a, 0.1)
    assert v.holds and v.worst_ratio == pytest.approx(0, abs=1e-12)
    eps = 0.3
    v = L.check_rayleigh_sandwich(a, np.sqrt(1 + eps) * a, 0.5)
    assert v.holds and v.worst_ratio == pytest.approx(eps, rel=1e-10)
    assert not L.check_rayleigh_sandwich(a, np.sqrt(1 + eps) * a, 0.2).holds


def test_sandwich_against_random_directions(seeded):
    from sketchspec.sketch import sign_sketch

    a = seeded((60, 5), 18)
    at = sign_sketch(40, 60, 3) @ a
    v = L.check_rayleigh_sandwich(a, at, 0.9)
    x = np.random.default_rng(0).standard_normal((5, 100_000))
    num = np.abs(np.sum((at @ x) ** 2, 0) - np.sum((a @ x) ** 2, 0))
    sampled = (num / np.sum((a @ x) ** 2, 0)).max()
    assert v.worst_ratio >= sampled - 1e-12
    assert v.worst_ratio <= sampled * 1.05


def test_sandwich_null_space_leak():
    a = np.array([[1.0, 0.0], [0.0, 0.0]])
    at = np.array([[1.0, 0.5]])
    v = L.check_rayleigh_sandwich(a, at, 0.5)
    assert not v.holds and v.worst_ratio == float("inf")
    assert abs(v.witness_direction[1]) > 0.9


def test_sandwich_errors(seeded):
    with pytest.raises(NoSpectrum):
        L.check_rayleigh_sandwich(np.zeros((3, 2)), np.ones((2, 2)), 0.5)
    with pytest.raises(ShapeError):
        L.check_rayleigh_sandwich(np.ones((3, 2)), np.ones((2, 3)), 0.5)
    with pytest.raises(ValueError):
        L.check_rayleigh_sandwich(np.ones((3, 2)), np.ones((2, 2)), 1.5)


@pytest.mark.parametrize("seed", range(6))
def test_sandwich_implies_eigenvalue_sandwich(seeded, seed):
    from sketchspec.sketch import sign_sketch

    a = seeded((80, 6), seed)
    at = sign_sketch(60, 80, seed) @ a
    for eps in (0.5, 0.7, 0.9):
        v = L.check_rayleigh_sandwich(a, at, eps)
        if not v.holds:
            continue
        s = np.linalg.svd(a, compute_uv=False) ** 2
        st_ = np.linalg.svd(at, compute_uv=False)[: s.size] ** 2
        assert np.all(st_ >= (1 - eps) * s - 1e-10 * s[0])
        assert np.all(st_ <= (1 + eps) * s + 1e-10 * s[0])
