"""WAV decoding, mono conversion, and band-limited resampling."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

_WAVE_PCM = 0x0001
_WAVE_FLOAT = 0x0003
_WAVE_EXTENSIBLE = 0xFFFE

# Resampler filter: windowed sinc with this many zero crossings per side,
# Kaiser-tapered, tabulated at _TABLE_DENSITY points per crossing.
_NUM_ZEROS = 64
_KAISER_BETA = 8.6
_TABLE_DENSITY = 512


class AudioDecodeError(ValueError):
    """Raised when a file is not decodable audio."""


@dataclass(frozen=True)
class AudioClip:
    """A mono audio signal with its sample rate.

    Samples are float64 in a nominal [-1, 1] range (resampling may
    overshoot slightly; values are never clipped after decode).
    """

    id: str
    samples: np.ndarray
    sample_rate: int
    source_path: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def _parse_fmt(chunk: bytes) -> tuple[int, int, int, int]:
    if len(chunk) < 16:
        raise AudioDecodeError("fmt chunk too short")
    fmt_code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", chunk, 0)
    if fmt_code == _WAVE_EXTENSIBLE:
        # Actual format code lives in the first two bytes of the SubFormat GUID.
        if len(chunk) < 40:
            raise AudioDecodeError("extensible fmt chunk too short")
        fmt_code = struct.unpack_from("<H", chunk, 24)[0]
    return fmt_code, channels, rate, bits


def _decode_data(raw: bytes, fmt_code: int, bits: int) -> np.ndarray:
    if fmt_code == _WAVE_PCM:
        if bits == 8:
            x = np.frombuffer(raw, dtype=np.uint8).astype(np.float64)
            return (x - 128.0) / 128.0
        if bits == 16:
            x = np.frombuffer(raw, dtype="<i2").astype(np.float64)
            return x / 32768.0
        if bits == 24:
            b = np.frombuffer(raw, dtype=np.uint8)
            b = b[: (b.size // 3) * 3].reshape(-1, 3).astype(np.int32)
            x = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            x = np.where(x >= 1 << 23, x - (1 << 24), x)
            return x.astype(np.float64) / float(1 << 23)
        if bits == 32:
            x = np.frombuffer(raw, dtype="<i4").astype(np.float64)
            return x / float(1 << 31)
        raise AudioDecodeError(f"unsupported PCM bit depth: {bits}")
    if fmt_code == _WAVE_FLOAT:
        if bits == 32:
            return np.frombuffer(raw, dtype="<f4").astype(np.float64)
        if bits == 64:
            return np.frombuffer(raw, dtype="<f8").astype(np.float64)
        raise AudioDecodeError(f"unsupported float bit depth: {bits}")
    raise AudioDecodeError(f"unsupported WAV encoding: format code {fmt_code:#06x}")


def _read_wav_bytes(data: bytes) -> tuple[np.ndarray, int]:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise AudioDecodeError("not a RIFF/WAVE file")
    fmt_info = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        tag = data[pos : pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body = data[pos + 8 : pos + 8 + size]
        if tag == b"fmt ":
            fmt_info = _parse_fmt(body)
        elif tag == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt_info is None:
        raise AudioDecodeError("missing fmt chunk")
    if payload is None:
        raise AudioDecodeError("missing data chunk")
    fmt_code, channels, rate, bits = fmt_info
    if channels < 1:
        raise AudioDecodeError("fmt chunk declares zero channels")
    if rate <= 0:
        raise AudioDecodeError("fmt chunk declares a non-positive sample rate")
    flat = _decode_data(payload, fmt_code, bits)
    n_frames = flat.size // channels
    if n_frames == 0:
        raise AudioDecodeError("zero-length audio")
    frames = flat[: n_frames * channels].reshape(n_frames, channels)
    return frames, rate


def load_audio(path: str | Path, clip_id: str | None = None) -> AudioClip:
    """Decode a PCM or float WAV file into a mono AudioClip.

    Multi-channel audio is averaged down to mono. 16-bit samples are
    scaled by 1/32768 so full-scale negative maps exactly to -1.0.
    """
    path = Path(path)
    data = path.read_bytes()
    frames, rate = _read_wav_bytes(data)
    mono = frames.mean(axis=1) if frames.shape[1] > 1 else frames[:, 0]
    return AudioClip(
        id=clip_id if clip_id is not None else path.stem,
        samples=mono,
        sample_rate=rate,
        source_path=str(path),
    )


def write_wav_pcm16(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write a mono 16-bit PCM WAV file (test fixtures and synthesis)."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = np.round(x * 32767.0).astype("<i2")
    body = pcm.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(body),
        b"WAVE",
        b"fmt ",
        16,
        _WAVE_PCM,
        1,
        sample_rate,
        sample_rate * 2,
        2,
        16,
        b"data",
        len(body),
    )
    Path(path).write_bytes(header + body)


@lru_cache(maxsize=1)
def _filter_table() -> np.ndarray:
    # h(t) tabulated on t in [0, _NUM_ZEROS] at _TABLE_DENSITY points per unit.
    t = np.arange(_NUM_ZEROS * _TABLE_DENSITY + 1) / _TABLE_DENSITY
    u = t / _NUM_ZEROS
    window = np.i0(_KAISER_BETA * np.sqrt(1.0 - u * u)) / np.i0(_KAISER_BETA)
    return np.sinc(t) * window


def resample(clip: AudioClip, target_rate: int) -> AudioClip:
    """Resample a clip with a Kaiser-windowed sinc interpolator.

    Output length is round(len * target_rate / sample_rate). When the
    rates already match the clip is returned unchanged.
    """
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == clip.sample_rate:
        return clip
    x = clip.samples
    n_in = x.size
    n_out = int(round(n_in * target_rate / clip.sample_rate))
    if n_out < 1:
        raise ValueError("resampled output would be empty")

    table = _filter_table()
    table_end = _NUM_ZEROS * _TABLE_DENSITY
    # When downsampling the filter cutoff scales by s < 1 and the kernel
    # widens to _NUM_ZEROS / s input samples per side.
    s = min(1.0, target_rate / clip.sample_rate)
    half_width = int(np.ceil(_NUM_ZEROS / s)) + 1
    offsets = np.arange(-half_width, half_width + 1)
    pad = half_width + 2
    xp = np.concatenate([np.zeros(pad), x, np.zeros(pad)])

    step = clip.sample_rate / target_rate
    out = np.empty(n_out)
    chunk = max(1, int(4_000_000 / (2 * half_width + 1)))
    for start in range(0, n_out, chunk):
        idx = np.arange(start, min(start + chunk, n_out))
        tau = idx * step
        base = np.floor(tau).astype(np.int64)
        k = base[:, None] + offsets[None, :]
        coord = np.abs(tau[:, None] - k) * (s * _TABLE_DENSITY)
        j = coord.astype(np.int64)
        inside = j < table_end
        j = np.minimum(j, table_end - 1)
        frac = coord - j
        w = (table[j] * (1.0 - frac) + table[j + 1] * frac) * inside
        if s < 1.0:
            w *= s
        out[idx[0] : idx[-1] + 1] = np.einsum("ij,ij->i", w, xp[k + pad])
    return AudioClip(
        id=clip.id,
        samples=out,
        sample_rate=target_rate,
        source_path=clip.source_path,
    )
