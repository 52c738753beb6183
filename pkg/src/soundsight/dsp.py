"""Audio infrastructure: clips, WAV PCM16 I/O, STFT, and log-mel features."""

from __future__ import annotations

import csv
import struct
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .util import round_half_away

LOG_FLOOR = 1e-10


class WavFormatError(ValueError):
    """Raised for files that are not RIFF/WAVE at all."""


class UnsupportedWavError(ValueError):
    """Raised for well-formed WAV files outside the PCM16 mono contract."""


@dataclass(frozen=True)
class AudioClip:
    """Mono sample sequence in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray = field(repr=False)
    sample_rate_hz: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {s.shape}")
        if self.sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if s.size and (not np.all(np.isfinite(s)) or np.abs(s).max() > 1.0):
            raise ValueError("samples must be finite and lie in [-1, 1]")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


def quantize_pcm16(samples: np.ndarray) -> np.ndarray:
    """Real amplitudes -> int16 via round(s*32767) half-away, clamped."""
    q = round_half_away(np.asarray(samples, dtype=np.float64) * 32767.0)
    return np.clip(q, -32768, 32767).astype(np.int16)


def wav_write(clip: AudioClip, path) -> None:
    """Write a mono PCM signed 16-bit little-endian WAV file."""
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(quantize_pcm16(clip.samples).astype("<i2").tobytes())


def wav_to_bytes(clip: AudioClip) -> bytes:
    """The exact byte sequence wav_write would put on disk."""
    import io

    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate_hz)
        w.writeframes(quantize_pcm16(clip.samples).astype("<i2").tobytes())
    return buf.getvalue()


def _check_pcm_tag(path) -> None:
    """Walk the RIFF chunks to the fmt tag; non-PCM is unsupported, a
    mangled container is malformed. The stdlib reader lumps both together.
    """
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
            raise WavFormatError(f"{path}: not a RIFF/WAVE file")
        while True:
            chunk_head = fh.read(8)
            if len(chunk_head) < 8:
                raise WavFormatError(f"{path}: no fmt chunk found")
            ident, size = chunk_head[:4], struct.unpack("<I", chunk_head[4:])[0]
            if ident == b"fmt ":
                body = fh.read(2)
                if len(body) < 2:
                    raise WavFormatError(f"{path}: truncated fmt chunk")
                (tag,) = struct.unpack("<H", body)
                if tag != 1:
                    raise UnsupportedWavError(
                        f"{path}: compressed/non-PCM WAV (format tag {tag}) unsupported"
                    )
                return
            fh.seek(size + (size & 1), 1)


def wav_read(path) -> AudioClip:
    """Read a mono PCM16 WAV file written by wav_write (or compatible)."""
    _check_pcm_tag(path)
    try:
        reader = wave.open(str(path), "rb")
    except (wave.Error, EOFError, struct.error) as exc:
        raise WavFormatError(f"{path}: not a readable RIFF/WAVE file ({exc})") from exc
    with reader as w:
        if w.getnchannels() != 1:
            raise UnsupportedWavError(f"{path}: {w.getnchannels()} channels, need mono")
        if w.getsampwidth() != 2:
            raise UnsupportedWavError(f"{path}: {8 * w.getsampwidth()}-bit samples, need 16-bit")
        raw = w.readframes(w.getnframes())
        rate = w.getframerate()
    ints = np.frombuffer(raw, dtype="<i2")
    return AudioClip(ints.astype(np.float64) / 32767.0, rate)


def hz_to_mel(f):
    """HTK mel scale: 2595 * log10(1 + f/700)."""
    f = np.asarray(f, dtype=np.float64)
    if np.any(f < 0):
        raise ValueError("frequency must be non-negative")
    out = 2595.0 * np.log10(1.0 + f / 700.0)
    return float(out) if out.ndim == 0 else out


def mel_to_hz(m):
    """Exact inverse of hz_to_mel."""
    m = np.asarray(m, dtype=np.float64)
    if np.any(m < 0):
        raise ValueError("mel value must be non-negative")
    out = 700.0 * (10.0 ** (m / 2595.0) - 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude short-time spectrum; frame t covers samples [t*hop, t*hop+frame_len)."""

    magnitudes: np.ndarray  # (frames, bins), non-negative
    frame_len_samples: int
    hop_samples: int
    sample_rate_hz: int

    @property
    def frames(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def bins(self) -> int:
        return self.magnitudes.shape[1]

    def bin_frequencies(self) -> np.ndarray:
        return np.arange(self.bins) * self.sample_rate_hz / self.frame_len_samples


def hann_periodic(n: int) -> np.ndarray:
    """Periodic raised-cosine window of length n."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(clip: AudioClip, frame_len_samples: int = 512, hop_samples: int = 160) -> Spectrogram:
    """Hann-windowed magnitude STFT with frame_len/2 + 1 bins per frame."""
    n = frame_len_samples
    if n < 2 or n & (n - 1):
        raise ValueError(f"frame_len_samples must be a power of two, got {n}")
    if not 0 < hop_samples <= n:
        raise ValueError(f"hop_samples must lie in [1, frame_len], got {hop_samples}")
    x = clip.samples
    if x.size < n:
        raise ValueError(f"clip of {x.size} samples shorter than one {n}-sample frame")
    n_frames = (x.size - n) // hop_samples + 1
    idx = np.arange(n)[None, :] + hop_samples * np.arange(n_frames)[:, None]
    frames = x[idx] * hann_periodic(n)[None, :]
    mags = np.abs(np.fft.rfft(frames, axis=1))
    return Spectrogram(mags, n, hop_samples, clip.sample_rate_hz)


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular filters equally spaced on the mel scale."""

    weights: np.ndarray  # (n_mels, bins), non-negative
    f_low: float
    f_high: float
    sample_rate_hz: int
    frame_len_samples: int

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]


def mel_filterbank(
    n_mels: int = 64,
    f_low: float = 125.0,
    f_high: float = 7500.0,
    sample_rate_hz: int = 16000,
    frame_len_samples: int = 512,
) -> MelFilterbank:
    """Build triangular mel filters over the STFT bin layout."""
    if not 0 <= f_low < f_high <= sample_rate_hz / 2:
        raise ValueError(f"need 0 <= f_low < f_high <= Nyquist, got [{f_low}, {f_high}]")
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_low), hz_to_mel(f_high), n_mels + 2))
    bin_hz = np.arange(frame_len_samples // 2 + 1) * sample_rate_hz / frame_len_samples
    weights = np.zeros((n_mels, bin_hz.size))
    for m in range(n_mels):
        lo, center, hi = edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]
        up = (bin_hz - lo) / (center - lo)
        down = (hi - bin_hz) / (hi - center)
        weights[m] = np.maximum(0.0, np.minimum(up, down))
        if not weights[m].any():
            raise ValueError(
                f"mel filter {m} ({lo:.1f}-{hi:.1f} Hz) covers no STFT bin; "
                f"use fewer bands or a longer frame"
            )
    return MelFilterbank(weights, f_low, f_high, sample_rate_hz, frame_len_samples)


def log_mel_features(
    clip: AudioClip,
    fb: MelFilterbank,
    frame_len_samples: int = 512,
    hop_samples: int = 160,
    segments: int = 16,
) -> np.ndarray:
    """Fixed-length log-mel descriptor: per-frame log mel energies averaged
    into `segments` equal time slices and concatenated (segment-major).

    The segment averaging makes vectors from clips of different durations
    directly comparable: the result always has segments * n_mels entries.
    """
    if fb.sample_rate_hz != clip.sample_rate_hz or fb.frame_len_samples != frame_len_samples:
        raise ValueError("filterbank was built for a different sample rate or frame length")
    spec = stft(clip, frame_len_samples, hop_samples)
    if spec.frames < segments:
        raise ValueError(f"{spec.frames} frames cannot fill {segments} temporal segments")
    energies = spec.magnitudes**2 @ fb.weights.T  # (frames, n_mels)
    logmel = np.log(energies + LOG_FLOOR)
    bounds = (np.arange(segments + 1) * spec.frames) // segments
    pooled = [logmel[bounds[s] : bounds[s + 1]].mean(axis=0) for s in range(segments)]
    return np.concatenate(pooled)


def features_to_csv(rows: list[tuple[str, str, str, np.ndarray]], path) -> None:
    """Write feature vectors as CSV rows of (id, label, scheme, values...)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for item_id, label, scheme_name, values in rows:
            writer.writerow([item_id, label, scheme_name, *(repr(float(v)) for v in values)])
