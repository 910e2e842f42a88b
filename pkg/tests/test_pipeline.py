"""Vector assembly: smoothing, deltas, summaries, quantile map, cache."""

import numpy as np
import pytest

from sonotag.audio import AudioClip
from sonotag.dsp import FeatureMatrix
from sonotag import pipeline
from sonotag.pipeline import (
    FeatureExtractionError,
    FeatureVector,
    LayoutEntry,
    PipelineConfig,
    assemble,
    delta,
    feature_block,
    fit_quantile_map,
    gaussian_smooth,
    summarize,
)

SR = 22050


def noise_clip(seed: int = 0, n: int = SR) -> AudioClip:
    rng = np.random.default_rng(seed)
    return AudioClip(id=f"noise{seed}", samples=rng.uniform(-0.5, 0.5, n), sample_rate=SR)


class TestGaussianSmooth:
    def test_impulse_response(self):
        # kernel center for sigma 1: 1 / sum_{j=-4..4} exp(-j^2 / 2)
        row = np.zeros(21)
        row[10] = 1.0
        m = FeatureMatrix("x", row[None, :], 10.0)
        out = gaussian_smooth(m, 1.0).values[0]
        assert out[10] == pytest.approx(0.39894346935609776, rel=1e-12)
        assert out[11] == pytest.approx(0.24197144565660073, rel=1e-12)
        assert out[9] == out[11]
        assert out.sum() == pytest.approx(1.0, rel=1e-12)

    def test_constant_row_unchanged(self):
        m = FeatureMatrix("x", np.full((3, 15), 2.5), 10.0)
        np.testing.assert_allclose(gaussian_smooth(m, 2.0).values, 2.5, rtol=1e-12)

    def test_sigma_zero_identity(self):
        m = FeatureMatrix("x", np.arange(12.0).reshape(3, 4), 10.0)
        assert gaussian_smooth(m, 0.0) is m

    def test_negative_sigma(self):
        m = FeatureMatrix("x", np.zeros((1, 4)), 10.0)
        with pytest.raises(ValueError):
            gaussian_smooth(m, -1.0)


class TestDelta:
    def test_polynomial_slope(self):
        t = np.arange(30, dtype=float)
        rows = np.stack([np.full(30, 3.0), 2.0 - 0.5 * t, 1.5 - 0.7 * t + 0.3 * t * t])
        m = FeatureMatrix("p", rows, 10.0)
        d1 = delta(m).values
        np.testing.assert_allclose(d1[0], 0.0, atol=1e-12)
        np.testing.assert_allclose(d1[1, 4:-4], -0.5, atol=1e-9)
        np.testing.assert_allclose(d1[2, 4:-4], -0.7 + 0.6 * t[4:-4], atol=1e-9)

    def test_polynomial_curvature(self):
        t = np.arange(40, dtype=float)
        m = FeatureMatrix("p", (1.5 - 0.7 * t + 0.3 * t * t)[None, :], 10.0)
        d2 = delta(m, order=2).values[0]
        np.testing.assert_allclose(d2[8:-8], 0.6, atol=1e-9)

    def test_order_validation(self):
        m = FeatureMatrix("p", np.zeros((1, 10)), 10.0)
        with pytest.raises(ValueError):
            delta(m, order=3)

    def test_second_order_is_twice_first(self):
        rng = np.random.default_rng(5)
        m = FeatureMatrix("p", rng.standard_normal((4, 25)), 10.0)
        np.testing.assert_array_equal(delta(m, order=2).values, delta(delta(m)).values)


class TestSummarize:
    def test_frozen_example(self):
        m = FeatureMatrix("x", np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 6.0]]), 10.0)
        np.testing.assert_allclose(summarize(m), [2.0, 2.0 / 3.0, 2.0, 8.0], rtol=1e-12)

    def test_interleaving(self):
        rng = np.random.default_rng(1)
        vals = rng.standard_normal((5, 17))
        out = summarize(FeatureMatrix("x", vals, 10.0))
        np.testing.assert_allclose(out[0::2], vals.mean(axis=1))
        np.testing.assert_allclose(out[1::2], vals.var(axis=1))


class TestAssemble:
    def test_default_selection_is_810(self):
        vec = assemble(noise_clip())
        assert vec.values.size == 810
        assert len(vec.layout) == 810

    def test_layout_accounts_for_every_position(self):
        vec = assemble(noise_clip())
        # 128 mfcc rows + 7 contrast rows, 3 derivative stages, 2 statistics
        per_feature = {"mfcc": 128, "contrast": 7}
        stats = [f"{d}_{s}" for d in ("static", "delta", "delta2") for s in ("mean", "var")]
        for feature, rows in per_feature.items():
            for stat in stats:
                entries = [e for e in vec.layout if e.feature == feature and e.statistic == stat]
                assert [e.row for e in entries] == list(range(rows))
        assert len({(e.feature, e.statistic, e.row) for e in vec.layout}) == 810

    def test_values_match_blocks(self):
        clip = noise_clip(2)
        cfg = PipelineConfig()
        vec = assemble(clip, ("contrast", "zcr"), cfg)
        block_c, layout_c = feature_block(clip, "contrast", cfg)
        block_z, _ = feature_block(clip, "zcr", cfg)
        np.testing.assert_array_equal(vec.values, np.concatenate([block_c, block_z]))
        assert vec.layout[: len(layout_c)] == tuple(layout_c)

    def test_block_matches_manual_summaries(self):
        from sonotag import dsp

        clip = noise_clip(3)
        cfg = PipelineConfig()
        block, layout = feature_block(clip, "zcr", cfg)
        m = gaussian_smooth(dsp.zero_crossing_rate(clip, cfg.frame), cfg.smooth_sigma)
        expected = np.concatenate([summarize(m), summarize(delta(m)), summarize(delta(m, order=2))])
        np.testing.assert_array_equal(block, expected)
        assert layout[0] == LayoutEntry("zcr", "static_mean", 0)
        assert layout[1] == LayoutEntry("zcr", "static_var", 0)

    def test_no_smooth_matches_sigma_zero(self):
        clip = noise_clip(4)
        skipped, _ = feature_block(clip, "zcr", PipelineConfig(no_smooth=("zcr",)))
        raw, _ = feature_block(clip, "zcr", PipelineConfig(smooth_sigma=0.0))
        np.testing.assert_array_equal(skipped, raw)

    def test_empty_selection(self):
        with pytest.raises(ValueError):
            assemble(noise_clip(), ())

    def test_unknown_feature(self):
        with pytest.raises(ValueError, match="unknown feature"):
            assemble(noise_clip(), ("spectrogram",))

    def test_extraction_error_tagged(self):
        # contrast band edges pass Nyquist at an 8 kHz rate
        clip = AudioClip(id="low", samples=np.ones(8000) * 0.1, sample_rate=8000)
        with pytest.raises(FeatureExtractionError, match="^contrast:"):
            feature_block(clip, "contrast", PipelineConfig())

    def test_deterministic(self):
        a = assemble(noise_clip(6)).values
        b = assemble(noise_clip(6)).values
        np.testing.assert_array_equal(a, b)


class TestFeatureVector:
    def test_layout_length_must_match(self):
        with pytest.raises(ValueError):
            FeatureVector(np.zeros(3), (LayoutEntry("x", "static_mean", 0),))

    def test_rejects_2d(self):
        with pytest.raises(ValueError):
            FeatureVector(np.zeros((2, 2)), tuple())


class TestQuantileMap:
    def test_three_point_reference(self):
        qmap = fit_quantile_map(np.array([[1.0], [2.0], [3.0]]))
        out = qmap.transform(np.array([[2.0], [1.5], [1.0], [3.0], [0.0], [9.0]]))
        eps = 1e-7
        np.testing.assert_allclose(
            out[:, 0], [0.0, -0.5, -1.0 + eps, 1.0 - eps, -1.0 + eps, 1.0 - eps], atol=1e-12
        )

    def test_open_interval(self):
        rng = np.random.default_rng(0)
        ref = rng.standard_normal((50, 3))
        qmap = fit_quantile_map(ref)
        out = qmap.transform(rng.standard_normal((200, 3)) * 10)
        assert out.max() <= 1.0 - 1e-7
        assert out.min() >= -1.0 + 1e-7

    def test_monotone_per_dimension(self):
        rng = np.random.default_rng(1)
        qmap = fit_quantile_map(rng.standard_normal((40, 1)))
        x = np.sort(rng.standard_normal(100))[:, None]
        out = qmap.transform(x)[:, 0]
        assert np.all(np.diff(out) >= 0)

    def test_quantile_count_capped_by_rows(self):
        qmap = fit_quantile_map(np.arange(10.0)[:, None], n_quantiles=1000)
        assert qmap.probs.size == 10

    def test_validation(self):
        with pytest.raises(ValueError):
            fit_quantile_map(np.zeros((1, 4)))
        qmap = fit_quantile_map(np.zeros((5, 4)) + np.arange(5)[:, None])
        with pytest.raises(ValueError):
            qmap.transform(np.zeros((2, 3)))

    def test_apply_keeps_layout(self):
        vec = assemble(noise_clip(7), ("zcr",))
        ref = np.vstack([assemble(noise_clip(s), ("zcr",)).values for s in range(8, 13)])
        mapped = pipeline.apply_quantile_map(fit_quantile_map(ref), vec)
        assert mapped.layout == vec.layout
        assert mapped.values.shape == vec.values.shape
        assert np.abs(mapped.values).max() < 1.0


class TestCache:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        vectors = rng.standard_normal((6, 11)).astype(np.float32)
        ids = [f"clip/{i:03d}-α" for i in range(6)]
        path = tmp_path / "feat.bin"
        pipeline.save_cache(path, ids, vectors)
        got_ids, got = pipeline.load_cache(path)
        assert got_ids == ids
        np.testing.assert_array_equal(got, vectors)

    def test_float32_storage(self, tmp_path):
        vectors = np.array([[1.0 / 3.0]], dtype=np.float64)
        path = tmp_path / "feat.bin"
        pipeline.save_cache(path, ["a"], vectors)
        _, got = pipeline.load_cache(path)
        assert got.dtype == np.float32
        assert got[0, 0] == np.float32(1.0 / 3.0)

    def test_duplicate_ids_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            pipeline.save_cache(tmp_path / "x.bin", ["a", "a"], np.zeros((2, 3)))

    def test_id_count_mismatch(self, tmp_path):
        with pytest.raises(ValueError):
            pipeline.save_cache(tmp_path / "x.bin", ["a"], np.zeros((2, 3)))

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            pipeline.load_cache(p)

    def test_truncated(self, tmp_path):
        p = tmp_path / "x.bin"
        pipeline.save_cache(p, ["a", "b"], np.ones((2, 4)))
        data = p.read_bytes()
        p.write_bytes(data[: len(data) - 6])
        with pytest.raises(ValueError, match="truncated"):
            pipeline.load_cache(p)
        p.write_bytes(data[:8])
        with pytest.raises(ValueError, match="truncated"):
            pipeline.load_cache(p)
