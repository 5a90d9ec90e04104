# cython: language_level=3
"""Compiled retrieval kernels; behaviour mirrors ``mixdebate._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t FNV_OFFSET = 0xCBF29CE484222325ULL
cdef uint64_t FNV_PRIME = 0x100000001B3ULL


cdef inline Py_ssize_t _bucket(uint64_t a, uint64_t b, uint64_t c, Py_ssize_t dim) nogil:
    cdef uint64_t h = FNV_OFFSET
    cdef uint64_t cp
    cdef int j, shift
    for j in range(3):
        cp = a if j == 0 else (b if j == 1 else c)
        for shift in range(0, 32, 8):
            h ^= (cp >> shift) & 0xFF
            h *= FNV_PRIME
    return <Py_ssize_t>(h % <uint64_t>dim)


def trigram_bucket(a, b, c, Py_ssize_t dim):
    return _bucket(a, b, c, dim)


cdef void _fill(str text, int64_t[:] row, Py_ssize_t dim):
    cdef Py_ssize_t n = len(text)
    cdef Py_ssize_t i
    cdef Py_UCS4 x, y, z
    if n < 3:
        return
    x = text[0]
    y = text[1]
    for i in range(2, n):
        z = text[i]
        row[_bucket(x, y, z, dim)] += 1
        x = y
        y = z


def trigram_counts(str text, Py_ssize_t dim):
    out = np.zeros(dim, dtype=np.int64)
    _fill(text, out, dim)
    return out


def trigram_count_matrix(list texts, Py_ssize_t dim):
    out = np.zeros((len(texts), dim), dtype=np.int64)
    cdef int64_t[:, :] view = out
    cdef Py_ssize_t r
    for r in range(len(texts)):
        _fill(<str>texts[r], view[r], dim)
    return out


def count_cosine(query, matrix):
    cdef const int64_t[:] q = np.ascontiguousarray(query, dtype=np.int64)
    cdef const int64_t[:, :] m = np.ascontiguousarray(matrix, dtype=np.int64)
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t d = m.shape[1]
    out = np.zeros(n, dtype=np.float64)
    cdef double[:] s = out
    cdef int64_t qq = 0, dot, cc
    cdef Py_ssize_t i, j
    cdef double denom
    for j in range(d):
        qq += q[j] * q[j]
    with nogil:
        for i in range(n):
            dot = 0
            cc = 0
            for j in range(d):
                dot += m[i, j] * q[j]
                cc += m[i, j] * m[i, j]
            denom = sqrt(<double>(cc * qq))
            if denom > 0:
                s[i] = <double>dot / denom
    return out


def top_k(scores, Py_ssize_t k):
    cdef const double[:] s = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t n = s.shape[0]
    if k > n:
        k = n
    idx = np.empty(k, dtype=np.int64)
    cdef int64_t[:] best = idx
    cdef Py_ssize_t filled = 0, i, pos
    cdef double v
    with nogil:
        for i in range(n):
            v = s[i]
            # indices arrive ascending, so an equal score never displaces an earlier one
            if filled == k and (k == 0 or v <= s[best[k - 1]]):
                continue
            pos = filled if filled < k else k - 1
            while pos > 0 and s[best[pos - 1]] < v:
                best[pos] = best[pos - 1]
                pos -= 1
            best[pos] = i
            if filled < k:
                filled += 1
    return idx, np.asarray(scores, dtype=np.float64)[idx]
