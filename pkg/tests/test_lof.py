"""Local outlier factor scores against a brute-force reference."""

import math

import numpy as np
import pytest

from sonotag import lof


def brute_force_lof(points: np.ndarray, k: int) -> np.ndarray:
    """Textbook LOF with explicit loops; neighbors are the exact k
    nearest with ties broken by index, distances floored at 1e-12."""
    n = len(points)
    d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                d[i][j] = math.inf
            else:
                d[i][j] = max(math.dist(points[i], points[j]), 1e-12)
    neighbors = [sorted(range(n), key=lambda j: (d[i][j], j))[:k] for i in range(n)]
    k_dist = [d[i][neighbors[i][-1]] for i in range(n)]
    lrd = []
    for i in range(n):
        reach = [max(k_dist[j], d[i][j]) for j in neighbors[i]]
        lrd.append(1.0 / (sum(reach) / k))
    return np.array([sum(lrd[j] for j in neighbors[i]) / k / lrd[i] for i in range(n)])


class TestScores:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("k", [1, 3, 5])
    def test_matches_brute_force(self, seed, k):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(k + 2, 60))
        dim = int(rng.integers(1, 6))
        points = rng.standard_normal((n, dim))
        model = lof.fit(points, k=k)
        np.testing.assert_allclose(model.scores, brute_force_lof(points, k), atol=1e-9)

    def test_square_vertices_uniform(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        model = lof.fit(points, k=1)
        np.testing.assert_allclose(model.scores, 1.0, rtol=1e-12)

    def test_line_with_straggler(self):
        # 1-D points {0, 1, 2, 10} at k=1: the straggler's reachability is
        # 8x its neighbor's, everyone else is locally uniform
        model = lof.fit(np.array([[0.0], [1.0], [2.0], [10.0]]), k=1, contamination=0.25)
        np.testing.assert_allclose(model.scores, [1.0, 1.0, 1.0, 8.0], rtol=1e-12)
        np.testing.assert_array_equal(model.outlier_mask, [False, False, False, True])

    def test_duplicates_stay_finite(self):
        points = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        model = lof.fit(points, k=2)
        assert np.all(np.isfinite(model.scores))
        np.testing.assert_allclose(model.scores, brute_force_lof(points, 2), rtol=1e-9)

    def test_translation_and_scale_invariant(self):
        rng = np.random.default_rng(9)
        points = rng.standard_normal((80, 4))
        base = lof.fit(points, k=3).scores
        moved = lof.fit(points * 37.5 + 1000.0, k=3).scores
        np.testing.assert_allclose(moved, base, atol=1e-9)

    def test_nn_dist_is_first_neighbor(self):
        rng = np.random.default_rng(10)
        points = rng.standard_normal((30, 3))
        model = lof.fit(points, k=4)
        d = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
        d[np.diag_indices(30)] = np.inf
        np.testing.assert_allclose(model.nn_dist, d.min(axis=1), atol=1e-12)


class TestThreshold:
    def test_contamination_count(self):
        rng = np.random.default_rng(3)
        points = np.vstack([rng.standard_normal((90, 2)), rng.standard_normal((10, 2)) * 6 + 8])
        model = lof.fit(points, k=5, contamination=0.1)
        assert model.outlier_mask.sum() == 10
        assert model.outlier_threshold == np.sort(model.scores)[89]

    def test_mask_is_scores_above_threshold(self):
        rng = np.random.default_rng(4)
        model = lof.fit(rng.standard_normal((50, 3)), k=2, contamination=0.2)
        np.testing.assert_array_equal(model.outlier_mask, model.scores > model.outlier_threshold)

    def test_is_outlier(self):
        rng = np.random.default_rng(5)
        model = lof.fit(rng.standard_normal((20, 2)), k=1)
        for i in range(20):
            assert lof.is_outlier(model, i) == bool(model.outlier_mask[i])
        with pytest.raises(IndexError):
            lof.is_outlier(model, 20)
        with pytest.raises(IndexError):
            lof.is_outlier(model, -1)


class TestSelectInliers:
    def test_ordering(self):
        points = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [0.05, 0.05]])
        model = lof.fit(points, k=1)
        picked = lof.select_inliers(model, 4)
        order = np.lexsort((np.arange(4), model.scores, model.nn_dist))
        assert picked == [int(i) for i in order]

    def test_head_is_densest(self):
        rng = np.random.default_rng(6)
        tight = rng.standard_normal((40, 2)) * 0.1
        loose = rng.standard_normal((10, 2)) * 5 + 20
        model = lof.fit(np.vstack([tight, loose]), k=3)
        assert all(i < 40 for i in lof.select_inliers(model, 10))

    def test_count_validation(self):
        rng = np.random.default_rng(7)
        model = lof.fit(rng.standard_normal((10, 2)), k=1)
        assert lof.select_inliers(model, 0) == []
        with pytest.raises(ValueError):
            lof.select_inliers(model, 11)
        with pytest.raises(ValueError):
            lof.select_inliers(model, -1)


class TestValidation:
    def test_shape(self):
        with pytest.raises(ValueError):
            lof.fit(np.zeros(5), k=1)

    def test_k_bounds(self):
        points = np.zeros((5, 2)) + np.arange(5)[:, None]
        with pytest.raises(ValueError):
            lof.fit(points, k=0)
        with pytest.raises(ValueError):
            lof.fit(points, k=5)

    def test_contamination_bounds(self):
        points = np.zeros((5, 2)) + np.arange(5)[:, None]
        with pytest.raises(ValueError):
            lof.fit(points, k=1, contamination=0.0)
        with pytest.raises(ValueError):
            lof.fit(points, k=1, contamination=0.6)

    def test_model_arrays_read_only(self):
        rng = np.random.default_rng(8)
        model = lof.fit(rng.standard_normal((12, 2)), k=1)
        with pytest.raises(ValueError):
            model.scores[0] = 0.0
        with pytest.raises(ValueError):
            model.outlier_mask[0] = True


class TestChunking:
    def test_chunked_knn_matches_single_block(self):
        rng = np.random.default_rng(12)
        points = rng.standard_normal((700, 3))
        idx_small, dist_small = lof._knn(points, 4, chunk=64)
        idx_big, dist_big = lof._knn(points, 4, chunk=10_000)
        np.testing.assert_array_equal(idx_small, idx_big)
        # chunk shape changes the BLAS path, so values agree to rounding only
        np.testing.assert_allclose(dist_small, dist_big, atol=1e-12)
