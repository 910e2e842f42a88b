"""Local outlier factor scoring and density-based seed selection.

Exact brute-force neighborhoods: every pairwise Euclidean distance is
computed (chunked so memory stays bounded), neighbors are the exact k
nearest with ties broken by index. Dataset sizes here never justify an
approximate index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Distances below this are lifted to it so local reachability density
# stays finite on duplicate points.
DISTANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class LofModel:
    """Fitted scores and neighborhood data for one point set."""

    points: np.ndarray
    k: int
    contamination: float
    scores: np.ndarray
    nn_dist: np.ndarray
    outlier_threshold: float
    outlier_mask: np.ndarray

    @property
    def n(self) -> int:
        return self.points.shape[0]


def _knn(points: np.ndarray, k: int, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors per row: (indices (N,k), distances (N,k))."""
    n = points.shape[0]
    sq = np.einsum("ij,ij->i", points, points)
    idx = np.empty((n, k), dtype=np.int64)
    dist = np.empty((n, k))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = points[start:stop]
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (block @ points.T)
        np.maximum(d2, 0.0, out=d2)
        d = np.sqrt(d2)
        np.maximum(d, DISTANCE_FLOOR, out=d)
        d[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        order = np.argsort(d, axis=1, kind="stable")
        idx[start:stop] = order[:, :k]
        dist[start:stop] = np.take_along_axis(d, order[:, :k], axis=1)
    return idx, dist


def fit(points: np.ndarray, k: int = 1, contamination: float = 0.1) -> LofModel:
    """Score every point by its local outlier factor.

    A score near 1 means the point is as dense as its neighbors; larger
    means sparser. The outlier threshold is the empirical (1 -
    contamination) quantile of the scores, so roughly a contamination
    fraction of points is flagged.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D array")
    n = points.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if n <= k:
        raise ValueError(f"need more than k={k} points, got {n}")
    if not 0.0 < contamination <= 0.5:
        raise ValueError("contamination must lie in (0, 0.5]")

    neighbors, dists = _knn(points, k)
    k_dist = dists[:, k - 1]
    reach = np.maximum(k_dist[neighbors], dists)
    lrd = 1.0 / reach.mean(axis=1)
    scores = lrd[neighbors].mean(axis=1) / lrd

    rank = int(np.ceil((1.0 - contamination) * n)) - 1
    threshold = np.sort(scores, kind="stable")[rank]
    mask = scores > threshold
    mask.setflags(write=False)
    for arr in (points, scores, dists):
        arr.setflags(write=False)
    nn = dists[:, 0]
    return LofModel(
        points=points,
        k=k,
        contamination=contamination,
        scores=scores,
        nn_dist=nn,
        outlier_threshold=float(threshold),
        outlier_mask=mask,
    )


def is_outlier(model: LofModel, index: int) -> bool:
    if not 0 <= index < model.n:
        raise IndexError(f"index {index} out of range for {model.n} points")
    return bool(model.outlier_mask[index])


def select_inliers(model: LofModel, count: int) -> list[int]:
    """Indices of the `count` most central points.

    Orders by nearest-neighbor distance, then LOF score, then index, all
    ascending, and takes the head.
    """
    if not 0 <= count <= model.n:
        raise ValueError(f"count must lie in [0, {model.n}]")
    order = np.lexsort((np.arange(model.n), model.scores, model.nn_dist))
    return [int(i) for i in order[:count]]
