"""Pure numpy implementation of the random-stream kernels.

Used when the compiled ``_kernels`` extension is unavailable, and as the
reference the compiled path is tested against. Both backends must produce
bit-identical output for identical arguments.
"""
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
INV_2_53 = 1.0 / 9007199254740992.0

_CHUNK = 1 << 20


def _words(key, start, count):
    ctr = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = ctr * GOLDEN
    z += np.uint64(key)
    z ^= z >> np.uint64(30)
    z *= MIX1
    z ^= z >> np.uint64(27)
    z *= MIX2
    z ^= z >> np.uint64(31)
    return z


def fill_words(key, start, out):
    """Write stream words ``start, start+1, ...`` of ``key`` into ``out``."""
    count = out.shape[0]
    for lo in range(0, count, _CHUNK):
        hi = min(lo + _CHUNK, count)
        out[lo:hi] = _words(key, start + lo, hi - lo)


def fill_uniform(key, start, out):
    """Doubles in [0, 1) from the top 53 bits of each stream word."""
    count = out.shape[0]
    for lo in range(0, count, _CHUNK):
        hi = min(lo + _CHUNK, count)
        w = _words(key, start + lo, hi - lo)
        out[lo:hi] = (w >> np.uint64(11)).astype(np.float64) * INV_2_53


def fill_signs(key, scale, out):
    """Fill a C-contiguous float64 array with +-scale.

    Entry ``e`` (flat row-major index) takes bit ``e % 64`` of word ``e // 64``;
    a zero bit gives ``+scale``.
    """
    flat = out.reshape(-1)
    total = flat.shape[0]
    nwords = (total + 63) // 64
    step = _CHUNK
    for lo in range(0, nwords, step):
        hi = min(lo + step, nwords)
        w = _words(key, lo, hi - lo).astype("<u8")
        bits = np.unpackbits(w.view(np.uint8), bitorder="little")
        e_lo = lo * 64
        e_hi = min(hi * 64, total)
        b = bits[: e_hi - e_lo]
        flat[e_lo:e_hi] = np.where(b == 0, scale, -scale)


def sample_indices(key, cdf, out):
    """Inverse-CDF draws: ``out[k]`` is the first ``i`` with ``cdf[i] > u_k``."""
    count = out.shape[0]
    u = np.empty(count, dtype=np.float64)
    fill_uniform(key, 0, u)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, cdf.shape[0] - 1, out=idx)
    out[:] = idx
