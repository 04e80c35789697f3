# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: affine-gap alignment DP and bulk Tanimoto."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef struct Cell:
    double s
    long m
    long l


cdef inline bint better(Cell x, Cell y) noexcept nogil:
    if x.s != y.s:
        return x.s > y.s
    if x.m != y.m:
        return x.m > y.m
    return x.l < y.l


cdef inline Cell mk(double s, long m, long l) noexcept nogil:
    cdef Cell c
    c.s = s
    c.m = m
    c.l = l
    return c


def gotoh(a, b, double[:, ::1] matrix, double gap_open, double gap_extend):
    cdef long[::1] av = np.ascontiguousarray(a, dtype=np.int64)
    cdef long[::1] bv = np.ascontiguousarray(b, dtype=np.int64)
    cdef Py_ssize_t m = av.shape[0], n = bv.shape[0], i, j
    cdef Cell *pm = <Cell *> malloc((n + 1) * sizeof(Cell))
    cdef Cell *px = <Cell *> malloc((n + 1) * sizeof(Cell))
    cdef Cell *py = <Cell *> malloc((n + 1) * sizeof(Cell))
    cdef Cell *cm = <Cell *> malloc((n + 1) * sizeof(Cell))
    cdef Cell *cx = <Cell *> malloc((n + 1) * sizeof(Cell))
    cdef Cell *cy = <Cell *> malloc((n + 1) * sizeof(Cell))
    cdef Cell *tmp
    cdef Cell best, cand, dead = mk(-INFINITY, 0, 0)
    cdef long ai, bj
    if not (pm and px and py and cm and cx and cy):
        free(pm); free(px); free(py); free(cm); free(cx); free(cy)
        raise MemoryError()
    try:
        with nogil:
            for j in range(n + 1):
                pm[j] = dead
                px[j] = dead
                py[j] = dead
            pm[0] = mk(0.0, 0, 0)
            for j in range(1, n + 1):
                py[j] = mk(-(gap_open + (j - 1) * gap_extend), 0, j)
            for i in range(1, m + 1):
                cm[0] = dead
                cy[0] = dead
                cx[0] = mk(-(gap_open + (i - 1) * gap_extend), 0, i)
                ai = av[i - 1]
                for j in range(1, n + 1):
                    best = pm[j - 1]
                    if better(px[j - 1], best):
                        best = px[j - 1]
                    if better(py[j - 1], best):
                        best = py[j - 1]
                    if best.s != -INFINITY:
                        bj = bv[j - 1]
                        cm[j] = mk(best.s + matrix[ai, bj], best.m + (ai == bj), best.l + 1)
                    else:
                        cm[j] = dead
                    best = mk(pm[j].s - gap_open, pm[j].m, pm[j].l + 1)
                    cand = mk(px[j].s - gap_extend, px[j].m, px[j].l + 1)
                    if better(cand, best):
                        best = cand
                    cand = mk(py[j].s - gap_open, py[j].m, py[j].l + 1)
                    if better(cand, best):
                        best = cand
                    cx[j] = best
                    best = mk(cm[j - 1].s - gap_open, cm[j - 1].m, cm[j - 1].l + 1)
                    cand = mk(cy[j - 1].s - gap_extend, cy[j - 1].m, cy[j - 1].l + 1)
                    if better(cand, best):
                        best = cand
                    cand = mk(cx[j - 1].s - gap_open, cx[j - 1].m, cx[j - 1].l + 1)
                    if better(cand, best):
                        best = cand
                    cy[j] = best
                tmp = pm; pm = cm; cm = tmp
                tmp = px; px = cx; cx = tmp
                tmp = py; py = cy; cy = tmp
            best = pm[n]
            if better(px[n], best):
                best = px[n]
            if better(py[n], best):
                best = py[n]
        return float(best.s), int(best.m), int(best.l)
    finally:
        free(pm); free(px); free(py); free(cm); free(cx); free(cy)


cdef extern from *:
    int __builtin_popcountll(unsigned long long) noexcept nogil


def tanimoto_matrix(cnp.uint64_t[:, ::1] A, cnp.uint64_t[:, ::1] B):
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], w = A.shape[1], i, j, k
    out = np.empty((na, nb), dtype=np.float64)
    if na == 0 or nb == 0:
        return out
    cdef double[:, ::1] o = out
    cdef long[::1] pop_b = np.zeros(nb, dtype=np.int64)
    cdef long inter, uni, pop_a
    cdef const cnp.uint64_t *ra
    cdef const cnp.uint64_t *rb
    with nogil:
        for j in range(nb):
            for k in range(w):
                pop_b[j] += __builtin_popcountll(B[j, k])
        for i in range(na):
            ra = &A[i, 0]
            pop_a = 0
            for k in range(w):
                pop_a += __builtin_popcountll(ra[k])
            for j in range(nb):
                rb = &B[j, 0]
                inter = 0
                for k in range(w):
                    inter += __builtin_popcountll(ra[k] & rb[k])
                uni = pop_a + pop_b[j] - inter
                o[i, j] = 1.0 if uni == 0 else <double> inter / uni
    return out
