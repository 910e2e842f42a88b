"""Synthetic benchmark data: Gaussian blobs in feature space and small
tone/noise/click WAV sets that exercise the DSP path end to end."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .audio import write_wav_pcm16


def make_blobs(
    n_samples: int,
    dim: int,
    n_classes: int,
    separation: float,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Unit-variance Gaussian clusters with equal pairwise center distance.

    Center k sits on coordinate axis k at separation / sqrt(2), so every
    pair of centers is exactly `separation` apart in units of the
    within-cluster standard deviation; the remaining dim - n_classes
    coordinates carry pure noise.
    """
    if dim < n_classes:
        raise ValueError("dim must be at least n_classes for orthogonal centers")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    rng = np.random.default_rng(seed)
    centers = np.zeros((n_classes, dim))
    centers[np.arange(n_classes), np.arange(n_classes)] = separation / np.sqrt(2.0)
    y = np.arange(n_samples) % n_classes
    x = centers[y] + rng.normal(size=(n_samples, dim))
    perm = rng.permutation(n_samples)
    return x[perm], y[perm]


def _tone(rng: np.random.Generator, t: np.ndarray, freq: float) -> np.ndarray:
    phase = rng.uniform(0.0, 2.0 * np.pi)
    return 0.6 * np.sin(2.0 * np.pi * freq * t + phase)


def _noise_burst(rng: np.random.Generator, t: np.ndarray) -> np.ndarray:
    return 0.3 * rng.normal(size=t.size)


def _click_train(rng: np.random.Generator, t: np.ndarray, rate_hz: float, sr: int) -> np.ndarray:
    out = np.zeros(t.size)
    period = int(sr / rate_hz)
    start = rng.integers(0, period)
    out[start::period] = 0.9
    return out


def make_tone_dataset(
    out_dir: str | Path,
    n_clips: int = 50,
    n_classes: int = 3,
    seed: int = 0,
    sample_rate: int = 22050,
    duration: float = 0.5,
) -> tuple[list[str], list[str], list[int]]:
    """Write a labeled toy WAV set; clip ids embed the class name.

    Class k alternates recipe families (harmonic tones, filtered noise,
    click trains) so the spectral features separate them. Returns
    (ids, paths, labels) and writes labels.csv beside the audio.
    """
    if n_classes < 2 or n_classes > 10:
        raise ValueError("n_classes must lie in [2, 10]")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    t = np.arange(int(sample_rate * duration)) / sample_rate
    ids: list[str] = []
    paths: list[str] = []
    labels: list[int] = []
    for i in range(n_clips):
        cls = i % n_classes
        kind = cls % 3
        if kind == 0:
            base = 300.0 * (cls + 1)
            x = _tone(rng, t, base) + 0.3 * _tone(rng, t, 2.0 * base)
        elif kind == 1:
            x = _noise_burst(rng, t)
            x = np.convolve(x, np.ones(4 + 4 * cls) / (4 + 4 * cls), mode="same")
        else:
            x = _click_train(rng, t, 8.0 + 6.0 * cls, sample_rate)
        x = x + 0.01 * rng.normal(size=t.size)
        clip_id = f"class{cls}_{i:04d}"
        path = out_dir / f"{clip_id}.wav"
        write_wav_pcm16(path, x, sample_rate)
        ids.append(clip_id)
        paths.append(str(path))
        labels.append(cls)
    class_names = [f"class{c}" for c in range(n_classes)]
    with open(out_dir / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "class"])
        for clip_id, cls in zip(ids, labels):
            writer.writerow([clip_id, class_names[cls]])
    return ids, paths, labels
