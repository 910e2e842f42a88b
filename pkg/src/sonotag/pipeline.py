"""Feature post-processing: smoothing, deltas, summary statistics,
per-clip vector assembly, quantile normalization, and a binary cache.

The default feature selection (mfcc + contrast) summarizes to
(128 + 7) rows * 3 derivative orders * 2 statistics = 810 values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np
from scipy.ndimage import correlate1d

from . import dsp
from .audio import AudioClip
from .dsp import FeatureMatrix, FrameConfig

CACHE_MAGIC = b"FACEFV1"
DEFAULT_SELECTION = ("mfcc", "contrast")

_DERIV_NAMES = ("static", "delta", "delta2")
_STAT_NAMES = ("mean", "var")


class FeatureExtractionError(RuntimeError):
    """Extraction failure, tagged with the feature that raised it."""


class LayoutEntry(NamedTuple):
    feature: str
    statistic: str
    row: int


@dataclass(frozen=True)
class FeatureVector:
    """Flat per-clip feature vector with a positional layout table."""

    values: np.ndarray
    layout: tuple[LayoutEntry, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("values must be 1-D")
        if len(self.layout) != values.size:
            raise ValueError("layout length must match the number of values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for assembling per-clip vectors."""

    frame: FrameConfig = field(default_factory=FrameConfig)
    n_mels: int = 128
    n_mfcc: int = 128
    contrast_bands: int = 6
    contrast_quantile: float = 0.02
    contrast_fmin: float = 200.0
    tempogram_window: int = 384
    cyclic_bins: int = 40
    smooth_sigma: float = 1.0
    no_smooth: tuple[str, ...] = ()


def gaussian_smooth(m: FeatureMatrix, sigma: float) -> FeatureMatrix:
    """Smooth each row along time with a truncated Gaussian kernel.

    Kernel radius is round(4 * sigma); edges reflect. sigma = 0 returns
    the input unchanged.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return m
    radius = int(4.0 * sigma + 0.5)
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()
    smoothed = correlate1d(m.values, kernel, axis=1, mode="reflect")
    return FeatureMatrix(m.name, smoothed, m.frame_rate)


def delta(m: FeatureMatrix, order: int = 1) -> FeatureMatrix:
    """Local least-squares slope along time (width-9 regression window).

    Edges replicate, so a constant row differentiates to exactly zero and
    a linear ramp recovers its slope away from degenerate cases. order 2
    applies the operator twice.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    values = m.values
    for _ in range(order):
        padded = np.pad(values, ((0, 0), (4, 4)), mode="edge")
        acc = np.zeros_like(values)
        for n in range(1, 5):
            acc += n * (padded[:, 4 + n : padded.shape[1] - 4 + n] - padded[:, 4 - n : padded.shape[1] - 4 - n])
        values = acc / 60.0  # 2 * (1^2 + 2^2 + 3^2 + 4^2)
    return FeatureMatrix(m.name, values, m.frame_rate)


def summarize(m: FeatureMatrix) -> np.ndarray:
    """Interleaved per-row (mean, population variance) pairs, length 2R."""
    mean = m.values.mean(axis=1)
    var = m.values.var(axis=1)
    out = np.empty(2 * m.values.shape[0])
    out[0::2] = mean
    out[1::2] = var
    return out


def _extract(name: str, clip: AudioClip, cfg: PipelineConfig) -> FeatureMatrix:
    frame = cfg.frame
    if name == "mfcc":
        return dsp.mfcc(clip, frame, n_mfcc=cfg.n_mfcc, n_mels=cfg.n_mels)
    if name == "contrast":
        return dsp.spectral_contrast(
            clip, frame, n_bands=cfg.contrast_bands, quantile=cfg.contrast_quantile, fmin=cfg.contrast_fmin
        )
    if name == "mel":
        return dsp.mel_spectrogram(clip, frame, n_mels=cfg.n_mels)
    if name == "chroma":
        return dsp.chromagram(clip, frame)
    if name == "onset":
        return dsp.onset_strength(clip, frame, n_mels=cfg.n_mels)
    if name == "tempogram":
        return dsp.tempogram(dsp.onset_strength(clip, frame, n_mels=cfg.n_mels), cfg.tempogram_window)
    if name == "cyclic_tempogram":
        tg = dsp.tempogram(dsp.onset_strength(clip, frame, n_mels=cfg.n_mels), cfg.tempogram_window)
        return dsp.cyclic_tempogram(tg, cfg.cyclic_bins)
    if name == "zcr":
        return dsp.zero_crossing_rate(clip, frame)
    if name == "rms":
        return dsp.rms_energy(clip, frame)
    if name == "centroid":
        return dsp.spectral_centroid(clip, frame)
    if name == "bandwidth":
        return dsp.spectral_bandwidth(clip, frame)
    if name == "rolloff":
        return dsp.spectral_rolloff(clip, frame)
    if name == "flatness":
        return dsp.spectral_flatness(clip, frame)
    raise ValueError(f"unknown feature {name!r}; valid names: {', '.join(FEATURE_NAMES)}")


FEATURE_NAMES = (
    "mfcc",
    "contrast",
    "mel",
    "chroma",
    "onset",
    "tempogram",
    "cyclic_tempogram",
    "zcr",
    "rms",
    "centroid",
    "bandwidth",
    "rolloff",
    "flatness",
)


def feature_block(clip: AudioClip, name: str, cfg: PipelineConfig) -> tuple[np.ndarray, list[LayoutEntry]]:
    """Summarized (static, delta, delta-delta) block for one feature."""
    if name not in FEATURE_NAMES:
        raise ValueError(f"unknown feature {name!r}; valid names: {', '.join(FEATURE_NAMES)}")
    try:
        m = _extract(name, clip, cfg)
        if cfg.smooth_sigma > 0 and name not in cfg.no_smooth:
            m = gaussian_smooth(m, cfg.smooth_sigma)
        stages = (m, delta(m), delta(m, order=2))
    except Exception as exc:
        raise FeatureExtractionError(f"{name}: {exc}") from exc
    parts = []
    layout: list[LayoutEntry] = []
    for deriv, stage in zip(_DERIV_NAMES, stages):
        parts.append(summarize(stage))
        for row in range(stage.values.shape[0]):
            for stat in _STAT_NAMES:
                layout.append(LayoutEntry(name, f"{deriv}_{stat}", row))
    return np.concatenate(parts), layout


def assemble(clip: AudioClip, selection: tuple[str, ...] = DEFAULT_SELECTION, cfg: PipelineConfig | None = None) -> FeatureVector:
    """Full feature vector for one clip over the selected features."""
    if not selection:
        raise ValueError("selection must name at least one feature")
    cfg = cfg or PipelineConfig()
    values: list[np.ndarray] = []
    layout: list[LayoutEntry] = []
    for name in selection:
        block, entries = feature_block(clip, name, cfg)
        values.append(block)
        layout.extend(entries)
    return FeatureVector(np.concatenate(values), tuple(layout))


@dataclass(frozen=True)
class QuantileMap:
    """Empirical quantile transform into the open interval (-1, 1)."""

    quantiles: np.ndarray  # (n_quantiles, dim), non-decreasing per column
    probs: np.ndarray  # (n_quantiles,)

    EPS = 1e-7

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.quantiles.shape[1]:
            raise ValueError("dimension mismatch with the fitted reference")
        out = np.empty_like(x)
        for d in range(x.shape[1]):
            out[:, d] = np.interp(x[:, d], self.quantiles[:, d], self.probs)
        out = 2.0 * out - 1.0
        return np.clip(out, -1.0 + self.EPS, 1.0 - self.EPS)


def fit_quantile_map(reference: np.ndarray, n_quantiles: int = 1000) -> QuantileMap:
    """Fit per-dimension empirical quantiles on reference rows.

    The number of quantiles is capped at the number of reference rows.
    """
    reference = np.asarray(reference, dtype=np.float64)
    if reference.ndim != 2 or reference.shape[0] < 2:
        raise ValueError("reference must be a 2-D array with at least 2 rows")
    n_q = min(n_quantiles, reference.shape[0])
    probs = np.linspace(0.0, 1.0, n_q)
    quantiles = np.quantile(reference, probs, axis=0)
    return QuantileMap(quantiles=quantiles, probs=probs)


def apply_quantile_map(qmap: QuantileMap, vector: FeatureVector) -> FeatureVector:
    mapped = qmap.transform(vector.values[None, :])[0]
    return replace(vector, values=mapped)


def save_cache(path: str | Path, ids: list[str], vectors: np.ndarray) -> None:
    """Write feature vectors as float32 little-endian with an id table."""
    vectors = np.ascontiguousarray(np.atleast_2d(vectors), dtype="<f4")
    if vectors.shape[0] != len(ids):
        raise ValueError("one id per vector required")
    if len(set(ids)) != len(ids):
        raise ValueError("clip ids must be unique")
    count, dim = vectors.shape
    blob = bytearray()
    blob += struct.pack("<7sII", CACHE_MAGIC, dim, count)
    blob += vectors.tobytes()
    for clip_id in ids:
        raw = clip_id.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise ValueError("clip id too long")
        blob += struct.pack("<H", len(raw)) + raw
    Path(path).write_bytes(bytes(blob))


def load_cache(path: str | Path) -> tuple[list[str], np.ndarray]:
    data = Path(path).read_bytes()
    head = struct.calcsize("<7sII")
    if len(data) < head:
        raise ValueError("feature cache truncated")
    magic, dim, count = struct.unpack_from("<7sII", data, 0)
    if magic != CACHE_MAGIC:
        raise ValueError(f"bad feature cache magic: {magic!r}")
    body = count * dim * 4
    if len(data) < head + body:
        raise ValueError("feature cache truncated")
    vectors = np.frombuffer(data, dtype="<f4", count=count * dim, offset=head).reshape(count, dim).copy()
    ids: list[str] = []
    pos = head + body
    for _ in range(count):
        if pos + 2 > len(data):
            raise ValueError("feature cache id table truncated")
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        ids.append(data[pos : pos + n].decode("utf-8"))
        pos += n
    return ids, vectors
