"""Synthetic benchmark data: Gaussian blobs and the labeled tone WAV set."""

import csv

import numpy as np
import pytest

from sonotag.audio import load_audio
from sonotag.synth import make_blobs, make_tone_dataset


class TestMakeBlobs:
    def test_centers_equally_separated(self):
        x, y = make_blobs(6000, 5, 3, 8.0, seed=1)
        means = np.stack([x[y == c].mean(axis=0) for c in range(3)])
        for a in range(3):
            for b in range(a + 1, 3):
                gap = np.linalg.norm(means[a] - means[b])
                assert gap == pytest.approx(8.0, abs=0.2)

    def test_unit_within_class_spread(self):
        x, y = make_blobs(6000, 4, 2, 10.0, seed=0)
        for c in range(2):
            spread = x[y == c].std(axis=0)
            assert spread == pytest.approx(np.ones(4), abs=0.1)

    def test_extra_dims_carry_no_signal(self):
        x, y = make_blobs(4000, 6, 2, 9.0, seed=2)
        for c in range(2):
            tail = x[y == c][:, 2:].mean(axis=0)
            assert tail == pytest.approx(np.zeros(4), abs=0.1)

    def test_labels_balanced(self):
        _, y = make_blobs(100, 4, 3, 5.0, seed=0)
        counts = np.bincount(y, minlength=3)
        assert counts.sum() == 100
        assert counts.max() - counts.min() <= 1

    def test_deterministic_per_seed(self):
        x1, y1 = make_blobs(50, 4, 2, 5.0, seed=7)
        x2, y2 = make_blobs(50, 4, 2, 5.0, seed=7)
        x3, _ = make_blobs(50, 4, 2, 5.0, seed=8)
        assert np.array_equal(x1, x2) and np.array_equal(y1, y2)
        assert not np.array_equal(x1, x3)

    def test_dim_must_fit_classes(self):
        with pytest.raises(ValueError):
            make_blobs(10, 2, 3, 5.0)

    def test_needs_two_classes(self):
        with pytest.raises(ValueError):
            make_blobs(10, 4, 1, 5.0)


class TestToneDataset:
    def test_writes_clips_and_label_csv(self, tmp_path):
        ids, paths, labels = make_tone_dataset(tmp_path, n_clips=12, n_classes=3, seed=0)
        assert len(ids) == len(paths) == len(labels) == 12
        for clip_id, cls in zip(ids, labels):
            assert clip_id.startswith(f"class{cls}_")
            assert (tmp_path / f"{clip_id}.wav").exists()
        with open(tmp_path / "labels.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["sample_id"] for r in rows] == ids
        assert [r["class"] for r in rows] == [f"class{c}" for c in labels]

    def test_clips_decode(self, tmp_path):
        ids, paths, _ = make_tone_dataset(tmp_path, n_clips=4, n_classes=2, seed=3)
        for clip_id, path in zip(ids, paths):
            clip = load_audio(path, clip_id=clip_id)
            assert clip.sample_rate == 22050
            assert clip.duration == pytest.approx(0.5)

    def test_deterministic_bytes(self, tmp_path):
        _, first, _ = make_tone_dataset(tmp_path / "a", n_clips=3, n_classes=2, seed=5)
        _, second, _ = make_tone_dataset(tmp_path / "b", n_clips=3, n_classes=2, seed=5)
        for p1, p2 in zip(first, second):
            with open(p1, "rb") as f1, open(p2, "rb") as f2:
                assert f1.read() == f2.read()

    def test_class_count_bounds(self, tmp_path):
        with pytest.raises(ValueError):
            make_tone_dataset(tmp_path, n_clips=4, n_classes=1)
        with pytest.raises(ValueError):
            make_tone_dataset(tmp_path, n_clips=4, n_classes=11)
