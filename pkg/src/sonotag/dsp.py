"""Frame-level audio feature extractors.

Every extractor shares one framing convention: a signal of n samples at
hop h yields T = ceil(n / h) frames, frame t centered on sample t * h.
Spectral extractors zero-pad the signal edges and apply a periodic Hann
taper; the time-domain descriptors replicate edge samples instead so a
constant signal produces constant frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .audio import AudioClip

# Power floor for decibel conversion: 10*log10(1e-8) = -80 dB.
_DB_FLOOR = 1e-8
_TINY = 1e-10


@dataclass(frozen=True)
class FrameConfig:
    """STFT analysis geometry."""

    n_fft: int = 2048
    hop: int = 512
    window: str = "hann"

    def __post_init__(self) -> None:
        if self.n_fft < 2 or (self.n_fft & (self.n_fft - 1)) != 0:
            raise ValueError("n_fft must be a power of two >= 2")
        if not 0 < self.hop <= self.n_fft:
            raise ValueError("hop must satisfy 0 < hop <= n_fft")
        if self.window != "hann":
            raise ValueError(f"unsupported window: {self.window!r}")

    def frame_rate(self, sample_rate: int) -> float:
        return sample_rate / self.hop

    def n_frames(self, n_samples: int) -> int:
        return -(-n_samples // self.hop)


@dataclass(frozen=True)
class FeatureMatrix:
    """A named (rows x frames) block of finite feature values."""

    name: str
    values: np.ndarray
    frame_rate: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("values must be a non-empty 2-D array")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.name}: feature values must be finite")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _frames(x: np.ndarray, cfg: FrameConfig, pad_mode: str) -> np.ndarray:
    """(T, n_fft) frame matrix; frame t starts at t*hop in the padded signal."""
    pad = cfg.n_fft // 2
    xp = np.pad(x, pad, mode=pad_mode)
    view = np.lib.stride_tricks.sliding_window_view(xp, cfg.n_fft)
    return view[:: cfg.hop][: cfg.n_frames(x.size)]


@lru_cache(maxsize=8)
def _hann_periodic(n: int) -> np.ndarray:
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    w.setflags(write=False)
    return w


def stft(clip: AudioClip, cfg: FrameConfig) -> np.ndarray:
    """Complex spectrogram, shape (n_fft // 2 + 1, T)."""
    frames = _frames(clip.samples, cfg, "constant") * _hann_periodic(cfg.n_fft)
    return np.fft.rfft(frames, axis=1).T


def _hz_to_mel(f: np.ndarray) -> np.ndarray:
    # Linear below 1 kHz (200/3 Hz per step), logarithmic above.
    f = np.asarray(f, dtype=np.float64)
    f_sp = 200.0 / 3.0
    min_log_hz = 1000.0
    logstep = np.log(6.4) / 27.0
    mel = f / f_sp
    log_part = f >= min_log_hz
    mel = np.where(log_part, min_log_hz / f_sp + np.log(np.maximum(f, min_log_hz) / min_log_hz) / logstep, mel)
    return mel


def _mel_to_hz(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    f_sp = 200.0 / 3.0
    min_log_mel = 1000.0 / f_sp
    logstep = np.log(6.4) / 27.0
    hz = m * f_sp
    log_part = m >= min_log_mel
    return np.where(log_part, 1000.0 * np.exp(logstep * (np.maximum(m, min_log_mel) - min_log_mel)), hz)


@lru_cache(maxsize=16)
def _mel_filterbank(sample_rate: int, n_fft: int, n_mels: int) -> np.ndarray:
    """Triangular mel filterbank (n_mels, n_fft//2 + 1), area-normalized."""
    n_bins = n_fft // 2 + 1
    if n_mels > n_bins:
        raise ValueError(f"n_mels ({n_mels}) exceeds the number of FFT bins ({n_bins})")
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sample_rate)
    mel_pts = np.linspace(_hz_to_mel(0.0), _hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_pts = _mel_to_hz(mel_pts)
    fdiff = np.diff(hz_pts)
    ramps = hz_pts[:, None] - freqs[None, :]
    lower = -ramps[:-2] / fdiff[:-1, None]
    upper = ramps[2:] / fdiff[1:, None]
    weights = np.maximum(0.0, np.minimum(lower, upper))
    enorm = 2.0 / (hz_pts[2:] - hz_pts[:-2])
    weights *= enorm[:, None]
    weights.setflags(write=False)
    return weights


def _power_to_db(power: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, _DB_FLOOR))


def mel_spectrogram(clip: AudioClip, cfg: FrameConfig, n_mels: int = 128) -> FeatureMatrix:
    """Mel-weighted power spectrogram."""
    power = np.abs(stft(clip, cfg)) ** 2
    fb = _mel_filterbank(clip.sample_rate, cfg.n_fft, n_mels)
    return FeatureMatrix("mel", fb @ power, cfg.frame_rate(clip.sample_rate))


def mfcc(clip: AudioClip, cfg: FrameConfig, n_mfcc: int = 128, n_mels: int = 128) -> FeatureMatrix:
    """Mel-frequency cepstral coefficients.

    Orthonormal DCT-II over the dB-scaled mel spectrogram. With the
    default n_mfcc == n_mels the transform keeps the full cepstrum.
    """
    if n_mfcc > n_mels:
        raise ValueError(f"n_mfcc ({n_mfcc}) exceeds n_mels ({n_mels})")
    mel = mel_spectrogram(clip, cfg, n_mels=n_mels)
    cepstrum = scipy.fft.dct(_power_to_db(mel.values), type=2, axis=0, norm="ortho")
    return FeatureMatrix("mfcc", cepstrum[:n_mfcc], mel.frame_rate)


def spectral_contrast(
    clip: AudioClip,
    cfg: FrameConfig,
    n_bands: int = 6,
    quantile: float = 0.02,
    fmin: float = 200.0,
) -> FeatureMatrix:
    """Per-band peak-to-valley contrast in dB over octave-spaced bands.

    Band edges run fmin * 2**k; the top band extends to Nyquist, giving
    n_bands + 1 output rows. Peak and valley are the means of the top and
    bottom `quantile` fraction of bin magnitudes in each band (at least
    one bin each).
    """
    if not 0.0 < quantile < 0.5:
        raise ValueError("quantile must lie in (0, 0.5)")
    if fmin <= 0.0:
        raise ValueError("fmin must be positive")
    nyquist = clip.sample_rate / 2.0
    edges = fmin * (2.0 ** np.arange(n_bands))
    if edges[-1] >= nyquist:
        raise ValueError("octave band edges reach past Nyquist; lower n_bands or fmin")
    mag = np.abs(stft(clip, cfg))
    freqs = np.fft.rfftfreq(cfg.n_fft, 1.0 / clip.sample_rate)
    bounds = np.concatenate([[0.0], edges, [nyquist]])
    out = np.empty((n_bands + 1, mag.shape[1]))
    for b in range(n_bands + 1):
        lo, hi = bounds[b], bounds[b + 1]
        sel = (freqs >= lo) & (freqs < hi) if b < n_bands else (freqs >= lo) & (freqs <= hi)
        idx = np.flatnonzero(sel)
        if idx.size == 0:
            raise ValueError(f"octave band {b} contains no FFT bins; raise n_fft or fmin")
        if b > 0:
            idx = np.insert(idx, 0, idx[0] - 1)  # octave bands share their lower edge bin
        band = np.sort(mag[idx], axis=0)
        n_take = max(1, int(np.rint(quantile * idx.size)))
        valley = band[:n_take].mean(axis=0)
        peak = band[-n_take:].mean(axis=0)
        out[b] = _power_to_db(peak**2) - _power_to_db(valley**2)
    return FeatureMatrix("contrast", out, cfg.frame_rate(clip.sample_rate))


def chromagram(clip: AudioClip, cfg: FrameConfig) -> FeatureMatrix:
    """12-bin pitch-class magnitude profile, max-normalized per frame.

    Bin 0 is pitch class A (the 440 Hz reference); each STFT bin above DC
    contributes its magnitude to the nearest semitone class.
    """
    mag = np.abs(stft(clip, cfg))
    freqs = np.fft.rfftfreq(cfg.n_fft, 1.0 / clip.sample_rate)
    classes = np.round(12.0 * np.log2(freqs[1:] / 440.0)).astype(np.int64) % 12
    fold = np.zeros((12, freqs.size - 1))
    fold[classes, np.arange(freqs.size - 1)] = 1.0
    chroma = fold @ mag[1:]
    peak = chroma.max(axis=0)
    scale = np.where(peak > 0.0, peak, 1.0)
    return FeatureMatrix("chroma", chroma / scale, cfg.frame_rate(clip.sample_rate))


def onset_strength(clip: AudioClip, cfg: FrameConfig, n_mels: int = 128) -> FeatureMatrix:
    """Rectified spectral flux of the dB mel spectrogram, one row."""
    mel_db = _power_to_db(mel_spectrogram(clip, cfg, n_mels=n_mels).values)
    flux = np.maximum(0.0, mel_db[:, 1:] - mel_db[:, :-1]).mean(axis=0)
    env = np.concatenate([[0.0], flux])[None, :]
    return FeatureMatrix("onset", env, cfg.frame_rate(clip.sample_rate))


def tempogram(onset_env: FeatureMatrix, win_frames: int = 384) -> FeatureMatrix:
    """Local autocorrelation of the onset envelope.

    Each column is the normalized autocorrelation of a Hann-windowed
    segment of win_frames envelope frames centered on that frame; lag 0
    normalizes to 1 wherever the segment has energy (0/0 yields 0).
    """
    if onset_env.values.shape[0] != 1:
        raise ValueError("onset envelope must have exactly one row")
    if win_frames < 2:
        raise ValueError("win_frames must be at least 2")
    env = onset_env.values[0]
    n = env.size
    pad = win_frames // 2
    padded = np.pad(env, (pad, win_frames - pad), mode="constant")
    segments = np.lib.stride_tricks.sliding_window_view(padded, win_frames)[:n]
    segments = segments * np.hanning(win_frames)
    n_fft = 1 << int(np.ceil(np.log2(2 * win_frames)))
    spectrum = np.fft.rfft(segments, n_fft, axis=1)
    ac = np.fft.irfft(spectrum * np.conj(spectrum), n_fft, axis=1)[:, :win_frames]
    lag0 = ac[:, :1]
    out = np.divide(ac, lag0, out=np.zeros_like(ac), where=lag0 > 0.0)
    return FeatureMatrix("tempogram", out.T, onset_env.frame_rate)


def cyclic_tempogram(tg: FeatureMatrix, n_octave_bins: int = 40) -> FeatureMatrix:
    """Octave-folded tempogram.

    Lag r maps to tempo 60 * frame_rate / r BPM; tempos one octave apart
    land in the same bin (fractional part of log2). Each output bin is
    the mean of the tempogram rows that fold into it.
    """
    n_lags = tg.values.shape[0] - 1
    if n_lags < 2:
        raise ValueError("tempogram has fewer than 2 valid lags")
    if n_octave_bins < 1:
        raise ValueError("n_octave_bins must be positive")
    lags = np.arange(1, n_lags + 1)
    tempo = 60.0 * tg.frame_rate / lags
    position = np.log2(tempo) % 1.0
    bins = np.minimum((position * n_octave_bins).astype(np.int64), n_octave_bins - 1)
    fold = np.zeros((n_octave_bins, n_lags))
    fold[bins, np.arange(n_lags)] = 1.0
    counts = fold.sum(axis=1)
    sums = fold @ tg.values[1:]
    out = np.divide(sums, counts[:, None], out=np.zeros_like(sums), where=counts[:, None] > 0)
    return FeatureMatrix("cyclic_tempogram", out, tg.frame_rate)


def _spectral_frames(clip: AudioClip, cfg: FrameConfig) -> tuple[np.ndarray, np.ndarray]:
    return np.abs(stft(clip, cfg)), np.fft.rfftfreq(cfg.n_fft, 1.0 / clip.sample_rate)


def zero_crossing_rate(clip: AudioClip, cfg: FrameConfig) -> FeatureMatrix:
    frames = _frames(clip.samples, cfg, "edge")
    signs = frames >= 0.0
    changes = (signs[:, 1:] != signs[:, :-1]).sum(axis=1)
    rate = changes / (cfg.n_fft - 1)
    return FeatureMatrix("zcr", rate[None, :], cfg.frame_rate(clip.sample_rate))


def rms_energy(clip: AudioClip, cfg: FrameConfig) -> FeatureMatrix:
    frames = _frames(clip.samples, cfg, "edge")
    rms = np.sqrt(np.mean(frames**2, axis=1))
    return FeatureMatrix("rms", rms[None, :], cfg.frame_rate(clip.sample_rate))


def spectral_centroid(clip: AudioClip, cfg: FrameConfig) -> FeatureMatrix:
    mag, freqs = _spectral_frames(clip, cfg)
    total = mag.sum(axis=0)
    centroid = np.divide(freqs @ mag, total, out=np.zeros(mag.shape[1]), where=total > _TINY)
    return FeatureMatrix("centroid", centroid[None, :], cfg.frame_rate(clip.sample_rate))


def spectral_bandwidth(clip: AudioClip, cfg: FrameConfig) -> FeatureMatrix:
    mag, freqs = _spectral_frames(clip, cfg)
    total = mag.sum(axis=0)
    safe = np.where(total > _TINY, total, 1.0)
    centroid = np.where(total > _TINY, freqs @ mag / safe, 0.0)
    spread = ((freqs[:, None] - centroid[None, :]) ** 2 * mag).sum(axis=0)
    bw = np.sqrt(np.where(total > _TINY, spread / safe, 0.0))
    return FeatureMatrix("bandwidth", bw[None, :], cfg.frame_rate(clip.sample_rate))


def spectral_rolloff(clip: AudioClip, cfg: FrameConfig, fraction: float = 0.85) -> FeatureMatrix:
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    mag, freqs = _spectral_frames(clip, cfg)
    power = mag**2
    cum = np.cumsum(power, axis=0)
    total = cum[-1]
    idx = np.argmax(cum >= fraction * total, axis=0)
    roll = np.where(total > _TINY, freqs[idx], 0.0)
    return FeatureMatrix("rolloff", roll[None, :], cfg.frame_rate(clip.sample_rate))


def spectral_flatness(clip: AudioClip, cfg: FrameConfig) -> FeatureMatrix:
    mag, _ = _spectral_frames(clip, cfg)
    power = np.maximum(mag**2, _TINY)
    geometric = np.exp(np.mean(np.log(power), axis=0))
    arithmetic = power.mean(axis=0)
    return FeatureMatrix("flatness", (geometric / arithmetic)[None, :], cfg.frame_rate(clip.sample_rate))


def scalar_descriptors(clip: AudioClip, cfg: FrameConfig) -> dict[str, FeatureMatrix]:
    """All six one-row descriptors keyed by name."""
    return {
        m.name: m
        for m in (
            zero_crossing_rate(clip, cfg),
            rms_energy(clip, cfg),
            spectral_centroid(clip, cfg),
            spectral_bandwidth(clip, cfg),
            spectral_rolloff(clip, cfg),
            spectral_flatness(clip, cfg),
        )
    }
