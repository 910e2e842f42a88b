"""Numpy implementation of the boosted-tree hot kernels.

Split gains are evaluated in the same candidate order and with the same
arithmetic expression as the compiled backend, so the two agree
bit-for-bit and resolve gain ties identically (lowest feature index,
then earliest boundary in sorted order).
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def best_splits(X, order, g, h, node_of, n_nodes, g_sum, h_sum, parent, lam, min_child_weight):
    """Best exact-greedy split per active node.

    Returns (gain, feature, threshold) arrays of length n_nodes; gain is
    -inf where no valid candidate exists. A candidate is a boundary
    between distinct sorted feature values whose two sides both carry at
    least min_child_weight hessian mass.
    """
    n_features = X.shape[1]
    best_gain = np.full(n_nodes, -np.inf)
    best_feat = np.zeros(n_nodes, dtype=np.int32)
    best_thr = np.zeros(n_nodes)
    for nd in range(n_nodes):
        members = np.flatnonzero(node_of == nd)
        if members.size < 2:
            continue
        xn = X[members]
        srt = np.argsort(xn, axis=0, kind="stable")
        xs = np.take_along_axis(xn, srt, axis=0)
        gl = np.cumsum(g[members][srt], axis=0)[:-1]
        hl = np.cumsum(h[members][srt], axis=0)[:-1]
        gr = g_sum[nd] - gl
        hr = h_sum[nd] - hl
        valid = (xs[1:] > xs[:-1]) & (hl >= min_child_weight) & (hr >= min_child_weight)
        if not valid.any():
            continue
        gains = np.where(valid, 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent[nd]), -np.inf)
        pos = np.argmax(gains, axis=0)
        per_feature = gains[pos, np.arange(n_features)]
        d = int(np.argmax(per_feature))
        if per_feature[d] == -np.inf:
            continue
        best_gain[nd] = per_feature[d]
        best_feat[nd] = d
        best_thr[nd] = 0.5 * (xs[pos[d], d] + xs[pos[d] + 1, d])
    return best_gain, best_feat, best_thr


def predict_margin(X, feat, thr, left, right, weight, roots, out):
    """Accumulate leaf weights of every tree into out, in place."""
    n = X.shape[0]
    for root in roots:
        node = np.full(n, root, dtype=np.int32)
        pending = feat[node] >= 0
        while pending.any():
            act = np.flatnonzero(pending)
            nd = node[act]
            go_left = X[act, feat[nd]] < thr[nd]
            node[act] = np.where(go_left, left[nd], right[nd])
            pending[act] = feat[node[act]] >= 0
        out += weight[node]
