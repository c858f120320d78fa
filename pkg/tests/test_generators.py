import numpy as np
import pytest

from sketchspec import generators as G
from sketchspec.errors import InvalidSpec
from sketchspec.linalg import numerical_rank, singular_values, stable_rank, svd


def spec(shape, kind, seed=0, **params):
    return G.GeneratorSpec(shape, kind, params, seed)


def test_exact_rank():
    a = G.generate(spec((20, 10), "ExactRank", r=3, seed=1))
    assert a.shape == (20, 10) and numerical_rank(a) == 3


def test_power_law_ratio():
    s = singular_values(G.generate(spec((50, 50), "PowerLaw", alpha=1.0, seed=2)))
    assert s[4] / s[9] == pytest.approx(2.0, abs=1e-8)


@pytest.mark.parametrize(
    "sp",
    [
        spec((60, 30), "PowerLaw", alpha=1.5, seed=3),
        spec((30, 60), "PowerLaw", alpha=0.5, rank=10, seed=4),
        spec((40, 25), "ExpDecay", beta=0.3, seed=5),
        spec((40, 25), "ExactRank", r=7, seed=6),
    ],
)
def test_prescribed_spectra_realized(sp):
    a = G.generate(sp)
    want = G.prescribed_spectrum(sp)
    got = singular_values(a)[: want.size]
    assert np.all(np.abs(got - want) <= 1e-8 * want)
    assert a.shape == sp.shape


def test_low_rank_plus_noise_stable_rank():
    a = G.generate(spec((200, 50), "LowRankPlusNoise", r=5, noise_sigma=1e-3, seed=7))
    clean = G.generate(spec((200, 50), "LowRankPlusNoise", r=5, noise_sigma=0.0, seed=7))
    assert stable_rank(clean) == pytest.approx(5)
    assert abs(stable_rank(a) / stable_rank(clean) - 1) < 0.1


def test_graph_incidence_leverage_sum():
    for seed in range(4):
        b = G.generate(spec((0, 0), "GraphIncidence", vertices=15, edge_prob=0.2, seed=seed))
        assert b.shape[1] == 15
        assert np.all((b != 0).sum(1) == 2) and np.all(b.sum(1) == 0)
        comps = G.connected_components(b)
        f = svd(b)
        assert f.rank == 15 - comps
        assert f.leverage_scores().sum() == pytest.approx(15 - comps)


def test_deterministic_and_seed_sensitive():
    sp = spec((15, 8), "PowerLaw", alpha=1.0, seed=9)
    assert G.generate(sp).tobytes() == G.generate(sp).tobytes()
    assert not np.array_equal(G.generate(sp), G.generate(sp.with_seed(10)))


def test_dict_round_trip():
    d = {"shape": [10, 4], "spectrum": {"kind": "ExpDecay", "beta": 0.5}, "seed": 3}
    sp = G.GeneratorSpec.from_dict(d)
    assert sp.to_dict() == d
    assert np.array_equal(G.generate(d), G.generate(sp))


@pytest.mark.parametrize(
    "d",
    [
        {"shape": [10, 4], "spectrum": {"kind": "Nope"}},
        {"shape": [10, 4], "spectrum": {"kind": "ExactRank", "r": 5}},
        {"shape": [10, 4], "spectrum": {"kind": "PowerLaw"}},
        {"shape": [10, 4], "spectrum": {"kind": "ExpDecay", "beta": -1}},
        {"shape": [0, 4], "spectrum": {"kind": "ExactRank", "r": 1}},
        {"shape": [10, 4], "spectrum": {"kind": "LowRankPlusNoise", "r": 2, "noise_sigma": -1}},
        {"shape": [0, 0], "spectrum": {"kind": "GraphIncidence", "vertices": 1, "edge_prob": 0.5}},
        {"shape": [10, 4], "spectrum": {"kind": "PowerLaw", "alpha": 800.0}},
        {"spectrum": {"kind": "ExactRank", "r": 1}},
    ],
)
def test_invalid_specs(d):
    with pytest.raises(InvalidSpec):
        G.generate(d)


def test_regression_rhs():
    a = G.generate(spec((30, 5), "ExactRank", r=5, seed=1))
    b1, b2 = G.regression_rhs(a, 4), G.regression_rhs(a, 4)
    assert b1.shape == (30,) and np.array_equal(b1, b2)
    consistent = G.regression_rhs(a, 4, noise=0.0)
    q, _ = np.linalg.qr(a)
    assert np.allclose(q @ (q.T @ consistent), consistent)
