# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled string kernels; same contract as ``rvdtools._pykernels``."""

from libc.stdlib cimport malloc, free


def levenshtein(str a, str b):
    """Unit-cost edit distance (insert, delete, substitute)."""
    cdef Py_ssize_t n = len(a), m = len(b), i, j
    cdef Py_ssize_t cost, best, sub
    cdef Py_UCS4 ca
    if n < m:
        a, b = b, a
        n, m = m, n
    if m == 0:
        return n
    cdef Py_UCS4 *bb = <Py_UCS4 *> malloc(m * sizeof(Py_UCS4))
    cdef Py_ssize_t *row = <Py_ssize_t *> malloc((m + 1) * sizeof(Py_ssize_t))
    if bb == NULL or row == NULL:
        free(bb)
        free(row)
        raise MemoryError()
    try:
        for j in range(m):
            bb[j] = b[j]
        for j in range(m + 1):
            row[j] = j
        for i in range(n):
            ca = a[i]
            sub = row[0]
            row[0] = i + 1
            for j in range(m):
                cost = 0 if ca == bb[j] else 1
                best = sub + cost
                if row[j + 1] + 1 < best:
                    best = row[j + 1] + 1
                if row[j] + 1 < best:
                    best = row[j] + 1
                sub = row[j + 1]
                row[j + 1] = best
        return row[m]
    finally:
        free(bb)
        free(row)


def edit_similarity(str a, str b):
    cdef Py_ssize_t longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return 1.0 - <double> levenshtein(a, b) / <double> longest
