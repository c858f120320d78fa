"""Counter-based random streams.

Every random object in the package is a pure function of a 64-bit key.
Word ``i`` of the stream for ``key`` is the SplitMix64 finalizer applied to
``key + (i + 1) * 0x9E3779B97F4A7C15`` (mod 2**64), so any position can be
computed independently and the output is identical on every platform.

Child keys are derived from a user seed and a path of small integers with
:func:`derive_key`; distinct paths give statistically independent streams.

The per-word loops live in the compiled ``_kernels`` extension when it is
built, otherwise in ``_pykernels``. Set ``SKETCHSPEC_BACKEND=python`` to force
the fallback.
"""
import math
import os

import numpy as np

from . import _pykernels

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# stream identifiers used with derive_key
SIGN = 1
GAUSS = 2
ROWS = 3
SUBSPACE = 4
ENSEMBLE = 5
GENERATOR = 6
POWER = 7


def _load_backend(name=None):
    name = name or os.environ.get("SKETCHSPEC_BACKEND", "auto")
    if name == "python":
        return _pykernels, "python"
    try:
        from . import _kernels
    except ImportError:
        if name == "cython":
            raise
        return _pykernels, "python"
    return _kernels, "cython"


_backend, BACKEND = _load_backend()


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    return _load_backend(name)[0]


def mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * _MIX1) & MASK
    z = ((z ^ (z >> 27)) * _MIX2) & MASK
    return z ^ (z >> 31)


def derive_key(seed, *path):
    """Key for the stream addressed by ``seed`` and an integer ``path``."""
    if seed < 0:
        raise ValueError("seeds are unsigned 64-bit integers")
    k = mix64(seed + GOLDEN)
    for p in path:
        k = mix64((k ^ mix64((p + 1) * _MIX2)) + GOLDEN)
    return k


def words(key, count, start=0, backend=None):
    out = np.empty(count, dtype=np.uint64)
    (backend or _backend).fill_words(key, start, out)
    return out


def uniforms(key, count, start=0, backend=None):
    out = np.empty(count, dtype=np.float64)
    (backend or _backend).fill_uniform(key, start, out)
    return out


def signs(key, shape, scale=1.0, backend=None):
    out = np.empty(shape, dtype=np.float64)
    (backend or _backend).fill_signs(key, float(scale), out)
    return out


def normals(key, count, backend=None):
    """Standard normals by Box-Muller on consecutive pairs of stream doubles.

    Pair ``j`` uses words ``2j`` (radius, via ``1 - u`` so the log argument is
    in (0, 1]) and ``2j + 1`` (angle) and yields two consecutive outputs.
    """
    pairs = (count + 1) // 2
    u = uniforms(key, 2 * pairs, backend=backend)
    radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
    theta = (2.0 * math.pi) * u[1::2]
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(theta)
    out[1::2] = radius * np.sin(theta)
    return out[:count]


def categorical(key, cdf, count, backend=None):
    """``count`` i.i.d. indices drawn by inverse CDF with binary search."""
    out = np.empty(count, dtype=np.int64)
    (backend or _backend).sample_indices(key, np.ascontiguousarray(cdf, dtype=np.float64), out)
    return out


def gaussian_matrix(key, shape):
    rows, cols = shape
    return normals(key, rows * cols).reshape(rows, cols)


def random_orthonormal(key, n, k):
    """n x k matrix with orthonormal columns, Haar distributed.

    QR of a seeded Gaussian matrix with the sign of diag(R) fixed positive,
    which makes the factorization unique.
    """
    if k > n:
        raise ValueError("cannot fit more orthonormal columns than rows")
    g = gaussian_matrix(key, (n, k))
    q, r = np.linalg.qr(g)
    d = np.sign(np.diag(r))
    d[d == 0] = 1.0
    return q * d
