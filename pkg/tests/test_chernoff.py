import math
import warnings

import numpy as np
import pytest
from scipy import stats

from sketchspec import chernoff as ch
from sketchspec.errors import PreconditionViolation
from sketchspec.linalg import numerical_rank, spectral_norm

E = ch.EnsembleKind


def proportion_less(x_hits, y_hits, n, alpha=0.05):
    """One-sided two-proportion z-test of rate(x) < rate(y)."""
    p = (x_hits + y_hits) / (2 * n)
    if p in (0.0, 1.0):
        return x_hits < y_hits
    z = (y_hits - x_hits) / n / math.sqrt(2 * p * (1 - p) / n)
    return z > stats.norm.ppf(1 - alpha)


def test_isotropic_draw():
    ens = ch.MatrixEnsemble(E.ISOTROPIC, 12)
    for s in range(5):
        m = ch.sample_ensemble(ens, s)
        ch.check_draw(ens, m)
        assert spectral_norm(m) == pytest.approx(12) and np.trace(m) == pytest.approx(12)
    assert np.array_equal(ens.mean(), np.eye(12))


def test_diagonal_mean_zero():
    ens = ch.MatrixEnsemble(E.DIAGONAL, 6)
    draws = np.array([np.diag(ch.sample_ensemble(ens, s)) for s in range(10_000)])
    ch.check_draw(ens, np.diag(draws[0]))
    se = draws.std(0, ddof=1) / np.sqrt(draws.shape[0])
    assert np.all(np.abs(draws.mean(0)) <= 5 * se)


def test_frame_rank_and_mean():
    ens = ch.MatrixEnsemble(E.FRAME, 8, r=3)
    draws = []
    for s in range(4000):
        m = ch.sample_ensemble(ens, s)
        if s < 20:
            ch.check_draw(ens, m)
            assert numerical_rank(m) == 3
        draws.append(m)
    draws = np.array(draws)
    se = draws.std(0, ddof=1) / np.sqrt(draws.shape[0]) + 1e-15
    assert np.all(np.abs(draws.mean(0) - np.eye(8)) <= 5 * se)
    assert spectral_norm(ens.mean()) == pytest.approx(1)


def test_frame_in_subspace():
    ens = ch.MatrixEnsemble(E.FRAME, 40, r=2, gamma=4, basis_seed=3)
    assert ens.dim == 8 and ens.norm_bound == 4
    q = ens.basis()
    m = ch.sample_ensemble(ens, 1)
    ch.check_draw(ens, m)
    assert np.allclose(q @ (q.T @ m), m, atol=1e-12)
    assert spectral_norm(ens.mean()) == pytest.approx(1)
    with pytest.raises(ValueError):
        ch.MatrixEnsemble(E.FRAME, 10, r=4, gamma=4)


@pytest.mark.filterwarnings("ignore:sample rank")
def test_degenerate_custom_ensemble_has_zero_deviation():
    m = np.diag([1.0, 0.5, 0.0])
    ens = ch.MatrixEnsemble(E.CUSTOM, 3, gamma=1.0, sampler=lambda s: m, custom_mean=m)
    curve = ch.deviation_curve(ens, [1, 4], 100, 0)
    for t in curve.t_values:
        assert curve.quantiles[t] == {"median": 0.0, "q90": 0.0, "q99": 0.0}


def test_curve_contract_and_determinism():
    ens = ch.MatrixEnsemble(E.ISOTROPIC, 8)
    c1 = ch.deviation_curve(ens, [16, 4], 100, 5)
    c2 = ch.deviation_curve(ens, [4, 16], 100, 5)
    assert c1.t_values == [4, 16]
    for t in c1.t_values:
        q = c1.quantiles[t]
        assert 0 <= q["median"] <= q["q90"] <= q["q99"]
        assert np.array_equal(c1.samples[t], c2.samples[t])
    rows = list(c1.csv_rows())
    assert set(rows[0]) == set(ch.CSV_COLUMNS)
    with pytest.raises(ValueError):
        ch.deviation_curve(ens, [4], 99, 0)


def test_curve_prefix_matches_direct_sum():
    ens = ch.MatrixEnsemble(E.FRAME, 6, r=2)
    curve = ch.deviation_curve(ens, [3, 5], 100, 11)
    # trial 0 from scratch: draw j of trial i uses the same stream positions
    frames = ch._frames(ens, 11, 5)
    acc = sum((6 / 2) * f @ f.T for f in frames[:3])
    direct = np.abs(np.linalg.eigvalsh(acc / 3 - np.eye(6))).max()
    assert curve.samples[3][0] == pytest.approx(direct, rel=1e-12)


@pytest.mark.filterwarnings("ignore:sample rank")
@pytest.mark.parametrize("kind", [E.ISOTROPIC, E.DIAGONAL])
def test_fast_deviation_matches_dense(kind):
    ens = ch.MatrixEnsemble(kind, 5)
    curve = ch.deviation_curve(ens, [2, 9], 100, 3)
    m = ens.mean()
    for t in (2, 9):
        if kind is E.ISOTROPIC:
            x = ch.rng.normals(ch._draw_key(3), 9 * 5).reshape(9, 5)
            x /= np.linalg.norm(x, axis=1, keepdims=True)
            avg = sum(5 * np.outer(v, v) for v in x[:t]) / t
        else:
            s = ch.rng.signs(ch._draw_key(3), (9, 5))
            avg = np.diag(s[:t].mean(0))
        assert curve.samples[t][0] == pytest.approx(spectral_norm(avg - m), rel=1e-10)


def test_rank_condition_flag():
    ens = ch.MatrixEnsemble(E.FRAME, 16, r=4)
    with pytest.warns(UserWarning):
        curve = ch.deviation_curve(ens, [2, 8], 100, 0)
    assert not curve.rank_condition_ok


def test_isotropic_one_over_sqrt_t():
    ens = ch.MatrixEnsemble(E.ISOTROPIC, 32)
    curve = ch.deviation_curve(ens, [256, 1024], 100, 0)
    ratio = curve.quantiles[256]["median"] / curve.quantiles[1024]["median"]
    assert 1.5 <= ratio <= 2.7


@pytest.mark.filterwarnings("ignore:sample rank")
def test_diagonal_median_grows_with_n():
    samples = [
        ch.deviation_curve(ch.MatrixEnsemble(E.DIAGONAL, n), [64], 200, 0).samples[64]
        for n in (8, 64, 512)
    ]
    for lo, hi in zip(samples, samples[1:]):
        assert np.median(hi) > np.median(lo)
        assert stats.mannwhitneyu(hi, lo, alternative="greater").pvalue < 0.05


# JL and ||RA|| ---------------------------------------------------------------


def test_jl_identity_hook():
    assert ch.subspace_jl_failure_rate(4, 32, 32, 0.5, 50, 0, debug_identity=True) == 0.0


def test_jl_rate_decreases_with_t():
    lo = ch.subspace_jl_failures(4, 256, 50, 0.5, 1000, 0).sum()
    hi = ch.subspace_jl_failures(4, 256, 200, 0.5, 1000, 0).sum()
    assert proportion_less(hi, lo, 1000)


def test_jl_errors():
    with pytest.raises(ValueError):
        ch.subspace_jl_failure_rate(5, 4, 10, 0.5, 10, 0)


def test_rudelson_zero_at_t20():
    a = np.random.default_rng(0).standard_normal((200, 30)) * (np.arange(1, 31) ** -1.0)
    assert ch.rudelson_norm_rate(a, 20, 1000, 0) == 0.0
    assert ch.rudelson_bound(20) == pytest.approx(2 * math.exp(-10))


def test_rudelson_single_row():
    a = np.zeros((6, 3))
    a[2] = [1.0, 2.0, 2.0]
    rate = ch.rudelson_norm_rate(a, 1, 200, 0)
    assert 0.0 <= rate <= 1.0 and ch.rudelson_bound(1) > 1


def test_rudelson_precondition():
    a = np.eye(20)
    with pytest.raises(PreconditionViolation):
        ch.rudelson_norm_rate(a, 10, 5, 0)
    with pytest.warns(UserWarning):
        ch.rudelson_norm_rate(a, 10, 5, 0, allow_violation=True)


def test_rudelson_rate_nonincreasing_in_t():
    # sr close to 4, so t=4 sits at the precondition edge where exceedances are common
    a = np.diag([1.0, 1.0, 1.0, 1.0] + [0.0] * 60)[:, :4].copy()
    a = np.vstack([a, np.zeros((60, 4))])
    rates = [ch.rudelson_exceedances(a, t, 1000, 0).sum() for t in (4, 16, 64)]
    for x, y in zip(rates, rates[1:]):
        assert y <= x or not proportion_less(x, y, 1000)
