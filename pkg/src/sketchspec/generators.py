"""Seeded synthetic matrices with prescribed spectra.

Spectrum-prescribed kinds build ``U diag(sigma) V^T`` from Haar-random
orthonormal factors (QR of a seeded Gaussian matrix with positive ``diag(R)``),
so the requested singular values are realized to rounding error.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _components

from . import rng
from .errors import InvalidSpec

SPECTRUM_KINDS = ("PowerLaw", "ExpDecay", "LowRankPlusNoise", "ExactRank", "GraphIncidence")


@dataclass(frozen=True)
class GeneratorSpec:
    shape: Tuple[int, int]
    spectrum: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.spectrum not in SPECTRUM_KINDS:
            raise InvalidSpec(f"unknown spectrum {self.spectrum!r}; expected one of {SPECTRUM_KINDS}")
        n, m = self.shape
        if self.spectrum != "GraphIncidence" and (n < 1 or m < 1):
            raise InvalidSpec(f"shape must be positive, got {self.shape}")
        if self.seed < 0:
            raise InvalidSpec("seed must be non-negative")
        object.__setattr__(self, "shape", (int(n), int(m)))

    @classmethod
    def from_dict(cls, d):
        try:
            spec = dict(d["spectrum"])
            kind = spec.pop("kind")
            return cls(tuple(d["shape"]), kind, spec, int(d.get("seed", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpec(f"malformed generator spec: {exc}") from exc

    def to_dict(self):
        return {
            "shape": list(self.shape),
            "spectrum": {"kind": self.spectrum, **self.params},
            "seed": self.seed,
        }

    def with_seed(self, seed):
        return GeneratorSpec(self.shape, self.spectrum, dict(self.params), seed)


def _param(spec, name, cast=float, default=None):
    if name not in spec.params:
        if default is not None:
            return default
        raise InvalidSpec(f"{spec.spectrum} needs parameter {name!r}")
    try:
        return cast(spec.params[name])
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad value for {name!r}: {exc}") from exc


def _rank_cap(spec):
    full = min(spec.shape)
    r = spec.params.get("rank")
    if r is None:
        return full
    r = int(r)
    if not 1 <= r <= full:
        raise InvalidSpec(f"rank must lie in [1, {full}], got {r}")
    return r


def prescribed_spectrum(spec):
    """Singular values a spectrum-prescribed generator realizes, or None."""
    kind = spec.spectrum
    if kind == "PowerLaw":
        alpha = _param(spec, "alpha")
        j = np.arange(1, _rank_cap(spec) + 1, dtype=np.float64)
        return j**-alpha
    if kind == "ExpDecay":
        beta = _param(spec, "beta")
        if beta < 0:
            raise InvalidSpec("beta must be non-negative")
        j = np.arange(_rank_cap(spec), dtype=np.float64)
        return np.exp(-beta * j)
    if kind == "ExactRank":
        r = _param(spec, "r", int)
        if not 1 <= r <= min(spec.shape):
            raise InvalidSpec(f"r must lie in [1, {min(spec.shape)}], got {r}")
        return np.ones(r)
    return None


def from_spectrum(sigma, shape, seed):
    """``U diag(sigma) V^T`` with Haar-random orthonormal factors."""
    n, m = shape
    r = len(sigma)
    u = rng.random_orthonormal(rng.derive_key(seed, rng.GENERATOR, 0), n, r)
    v = rng.random_orthonormal(rng.derive_key(seed, rng.GENERATOR, 1), m, r)
    return (u * np.asarray(sigma, dtype=np.float64)) @ v.T


def _incidence(spec):
    vertices = _param(spec, "vertices", int)
    p = _param(spec, "edge_prob")
    if vertices < 2 or not 0.0 < p <= 1.0:
        raise InvalidSpec("GraphIncidence needs vertices >= 2 and edge_prob in (0, 1]")
    iu, ju = np.triu_indices(vertices, k=1)
    u = rng.uniforms(rng.derive_key(spec.seed, rng.GENERATOR, 2), iu.shape[0])
    keep = u < p
    if not keep.any():
        raise InvalidSpec("the sampled graph has no edges")
    iu, ju = iu[keep], ju[keep]
    b = np.zeros((iu.shape[0], vertices))
    rows = np.arange(iu.shape[0])
    b[rows, iu] = 1.0
    b[rows, ju] = -1.0
    return b


def connected_components(incidence):
    """Number of connected components of the graph behind an incidence matrix."""
    b = np.asarray(incidence)
    heads = np.argmax(b > 0, axis=1)
    tails = np.argmax(b < 0, axis=1)
    nv = b.shape[1]
    adj = csr_matrix((np.ones(heads.shape[0]), (heads, tails)), shape=(nv, nv))
    return int(_components(adj, directed=False)[0])


def generate(spec):
    """Build the matrix described by ``spec`` (deterministic per seed)."""
    if isinstance(spec, dict):
        spec = GeneratorSpec.from_dict(spec)
    kind = spec.spectrum
    if kind == "GraphIncidence":
        return _incidence(spec)
    if kind == "LowRankPlusNoise":
        r = _param(spec, "r", int)
        sigma = _param(spec, "noise_sigma")
        if not 1 <= r <= min(spec.shape) or sigma < 0:
            raise InvalidSpec("LowRankPlusNoise needs 1 <= r <= min(shape) and noise_sigma >= 0")
        signal = from_spectrum(np.ones(r), spec.shape, spec.seed)
        noise = rng.gaussian_matrix(rng.derive_key(spec.seed, rng.GENERATOR, 3), spec.shape)
        return signal + sigma * noise
    sigma = prescribed_spectrum(spec)
    if not np.isfinite(sigma).all() or sigma[-1] <= 0 or math.isclose(sigma[0], 0.0):
        raise InvalidSpec("prescribed spectrum underflows")
    return from_spectrum(sigma, spec.shape, spec.seed)


def regression_rhs(A, seed, noise=1.0):
    """``b = A g + noise * h`` with independent standard Gaussian ``g`` and ``h``."""
    n, m = A.shape
    g = rng.normals(rng.derive_key(seed, rng.GENERATOR, 4), m)
    h = rng.normals(rng.derive_key(seed, rng.GENERATOR, 5), n)
    return A @ g + noise * h
