# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled random-stream kernels; mirrors ``_pykernels`` bit for bit."""
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _word(uint64_t key, uint64_t ctr) noexcept nogil:
    cdef uint64_t z = key + (ctr + 1) * GOLDEN
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


def fill_words(uint64_t key, uint64_t start, uint64_t[::1] out):
    cdef Py_ssize_t i, n = out.shape[0]
    with nogil:
        for i in range(n):
            out[i] = _word(key, start + i)


def fill_uniform(uint64_t key, uint64_t start, double[::1] out):
    cdef Py_ssize_t i, n = out.shape[0]
    with nogil:
        for i in range(n):
            out[i] = <double>(_word(key, start + i) >> 11) * INV_2_53


def fill_signs(uint64_t key, double scale, out):
    cdef double[::1] flat = out.reshape(-1)
    cdef Py_ssize_t total = flat.shape[0]
    cdef Py_ssize_t w, b, base, nfull = total // 64
    cdef uint64_t bits
    cdef double two = 2.0 * scale
    with nogil:
        for w in range(nfull):
            bits = _word(key, w)
            base = w * 64
            for b in range(64):
                flat[base + b] = scale - two * <double>((bits >> b) & 1)
        if nfull * 64 < total:
            bits = _word(key, nfull)
            base = nfull * 64
            for b in range(total - base):
                flat[base + b] = scale - two * <double>((bits >> b) & 1)


def sample_indices(uint64_t key, const double[::1] cdf, int64_t[::1] out):
    # branch-free bisection for the first i with cdf[i] > u; cdf[-1] == 1 > u
    cdef Py_ssize_t k, lo, half, size
    cdef Py_ssize_t n = cdf.shape[0], count = out.shape[0]
    cdef double u
    with nogil:
        for k in range(count):
            u = <double>(_word(key, k) >> 11) * INV_2_53
            lo = 0
            size = n
            while size > 1:
                half = size // 2
                lo += half * (cdf[lo + half - 1] <= u)
                size -= half
            out[k] = lo
