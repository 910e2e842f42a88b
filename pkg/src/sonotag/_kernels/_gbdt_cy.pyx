# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled boosted-tree hot kernels.

Mirrors _gbdt_py exactly: one pass per feature over the globally
presorted sample order, accumulating running gradient sums per active
node. Candidate gains use the same expression and evaluation order as
the numpy backend, so results match bit-for-bit.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "cython"


def best_splits(double[:, ::1] X, int[:, ::1] order, double[:] g, double[:] h,
                int[:] node_of, int n_nodes, double[:] g_sum, double[:] h_sum,
                double[:] parent, double lam, double min_child_weight):
    """Best exact-greedy split per active node; see _gbdt_py.best_splits."""
    cdef Py_ssize_t n_features = order.shape[0]
    cdef Py_ssize_t n_samples = order.shape[1]

    gain_arr = np.full(n_nodes, -np.inf)
    feat_arr = np.zeros(n_nodes, dtype=np.int32)
    thr_arr = np.zeros(n_nodes)
    run_gl_arr = np.zeros(n_nodes)
    run_hl_arr = np.zeros(n_nodes)
    last_arr = np.zeros(n_nodes)
    count_arr = np.zeros(n_nodes, dtype=np.int64)

    cdef double[:] best_gain = gain_arr
    cdef int[:] best_feat = feat_arr
    cdef double[:] best_thr = thr_arr
    cdef double[:] run_gl = run_gl_arr
    cdef double[:] run_hl = run_hl_arr
    cdef double[:] last = last_arr
    cdef long long[:] count = count_arr

    cdef Py_ssize_t d, i
    cdef int s, nd
    cdef double v, glv, hlv, grv, hrv, gain

    with nogil:
        for d in range(n_features):
            for nd in range(n_nodes):
                run_gl[nd] = 0.0
                run_hl[nd] = 0.0
                count[nd] = 0
            for i in range(n_samples):
                s = order[d, i]
                nd = node_of[s]
                if nd < 0:
                    continue
                v = X[s, d]
                if count[nd] > 0 and v > last[nd]:
                    glv = run_gl[nd]
                    hlv = run_hl[nd]
                    hrv = h_sum[nd] - hlv
                    if hlv >= min_child_weight and hrv >= min_child_weight:
                        grv = g_sum[nd] - glv
                        gain = 0.5 * (glv * glv / (hlv + lam) + grv * grv / (hrv + lam) - parent[nd])
                        if gain > best_gain[nd]:
                            best_gain[nd] = gain
                            best_feat[nd] = <int>d
                            best_thr[nd] = 0.5 * (last[nd] + v)
                run_gl[nd] += g[s]
                run_hl[nd] += h[s]
                count[nd] += 1
                last[nd] = v
    return gain_arr, feat_arr, thr_arr


def predict_margin(double[:, ::1] X, int[:] feat, double[:] thr, int[:] left,
                   int[:] right, double[:] weight, int[:] roots, double[:] out):
    """Accumulate leaf weights of every tree into out, in place."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_roots = roots.shape[0]
    cdef Py_ssize_t i, r
    cdef int node
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for r in range(n_roots):
                node = roots[r]
                while feat[node] >= 0:
                    if X[i, feat[node]] < thr[node]:
                        node = left[node]
                    else:
                        node = right[node]
                acc += weight[node]
            out[i] += acc
