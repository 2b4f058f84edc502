# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Signatures and outputs mirror ``_pykernels``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

# waitlist_batch output columns
T_COL, FILLED_COL, N_W1, ACC_W1, N_W0, ACC_W0 = range(6)


def combination_patterns(int n, int k):
    """Row r marks (with 1) the accepter ranks of the r-th k-subset of
    range(n), in lexicographic order."""
    cdef Py_ssize_t count, r
    cdef int i, j
    if k < 0 or k > n:
        return np.zeros((0, n), dtype=np.uint8)
    from math import comb
    count = comb(n, k)
    out = np.zeros((count, n), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    cdef int[::1] idx = np.arange(k, dtype=np.intc)
    for r in range(count):
        for j in range(k):
            o[r, idx[j]] = 1
        # advance to next combination
        i = k - 1
        while i >= 0 and idx[i] == n - k + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, k):
            idx[j] = idx[j - 1] + 1
    return out


def waitlist_batch(types, int s):
    """Run the offer process on every row of a (m, n) accepter indicator.

    Returns int64 (m, 6): T, seats filled, |W=1|, accepters in W=1,
    |W=0|, accepters in W=0. Undersubscribed rows get T = n and put
    everyone in W=1.
    """
    cdef const cnp.uint8_t[:, :] ty = np.ascontiguousarray(types, dtype=np.uint8)
    cdef Py_ssize_t m = ty.shape[0], n = ty.shape[1], r, i
    out = np.zeros((m, 6), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] o = out
    cdef cnp.int64_t acc, t, a_after
    for r in range(m):
        acc = 0
        t = 0
        for i in range(n):
            if ty[r, i]:
                acc += 1
                if acc == s:
                    t = i + 1
                    break
        if t == 0:
            o[r, 0] = n
            o[r, 1] = acc
            o[r, 2] = n
            o[r, 3] = acc
            continue
        a_after = 0
        for i in range(t, n):
            a_after += ty[r, i]
        o[r, 0] = t
        o[r, 1] = s
        o[r, 2] = t - 1
        o[r, 3] = s - 1
        o[r, 4] = n - t
        o[r, 5] = a_after
    return out


def group_demean(x, groups, Py_ssize_t n_groups, weights=None):
    """Subtract the (weighted) group mean from each entry of ``x``."""
    cdef const double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const cnp.intp_t[:] g = np.ascontiguousarray(groups, dtype=np.intp)
    cdef Py_ssize_t N = xv.shape[0], i
    cdef double[::1] tot = np.zeros(n_groups)
    cdef double[::1] wt = np.zeros(n_groups)
    cdef const double[:] w
    out = np.empty(N)
    cdef double[::1] o = out
    if weights is None:
        for i in range(N):
            tot[g[i]] += xv[i]
            wt[g[i]] += 1.0
    else:
        w = np.ascontiguousarray(weights, dtype=np.float64)
        for i in range(N):
            tot[g[i]] += w[i] * xv[i]
            wt[g[i]] += w[i]
    for i in range(N):
        o[i] = xv[i] - tot[g[i]] / wt[g[i]]
    return out
