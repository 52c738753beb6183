"""Image-to-sound encoder and its spectral-analysis decoder.

Encoding scans the image left to right over the scheme's duration: each image
row drives one sinusoidal oscillator whose frequency comes from the scheme's
position-frequency map (top row = highest pitch) and whose amplitude tracks
pixel brightness through the scan. Decoding runs a matched filter: a Goertzel
magnitude per (row frequency, column slice), normalized back to pixel levels.
"""

from __future__ import annotations

import numpy as np

from .dsp import AudioClip, hann_periodic
from .image import GrayImage
from .schemes import EncodingScheme
from .util import round_half_away


class UndecodableGeometryError(ValueError):
    """Scheme/geometry pair whose row tones are closer than the analysis can resolve."""


def row_frequencies(scheme: EncodingScheme, rows: int) -> np.ndarray:
    """Oscillator frequency per display row (row 0 = top of image)."""
    return np.array(
        [scheme.pf.frequency(rows - 1 - r, rows) for r in range(rows)], dtype=np.float64
    )


def sample_count(scheme: EncodingScheme) -> int:
    return round_half_away(scheme.duration_s * scheme.sample_rate_hz)


def column_bounds(n_samples: int, cols: int) -> np.ndarray:
    """Start indices of each column's sample interval, plus the end sentinel."""
    return (np.arange(cols + 1) * n_samples) // cols


def _column_of_sample(n: np.ndarray, n_samples: int, cols: int) -> np.ndarray:
    starts = column_bounds(n_samples, cols)[:-1]
    return np.searchsorted(starts, n, side="right") - 1


def _amplitude_envelope(amps: np.ndarray, n_samples: int, cols: int, fraction: float) -> np.ndarray:
    """Per-sample amplitude for one oscillator given its per-column targets.

    Constant at the column target except for a linear ramp of width
    fraction * (column duration), centered on each inter-column boundary.
    """
    n = np.arange(n_samples)
    if cols == 1:
        return np.full(n_samples, amps[0])
    if fraction == 0.0:
        return amps[_column_of_sample(n, n_samples, cols)]
    col_len = n_samples / cols
    half = fraction * col_len / 2.0
    boundaries = np.arange(1, cols) * col_len
    xp = np.stack([boundaries - half, boundaries + half], axis=1).ravel()
    fp = np.repeat(amps, 2)[1:-1]
    return np.interp(n, xp, fp, left=amps[0], right=amps[-1])


def encode(image: GrayImage, scheme: EncodingScheme) -> AudioClip:
    """Translate a grayscale image into its audio scan.

    Each oscillator keeps a continuous phase (zero initial phase) across the
    whole clip; brightness maps linearly to amplitude, scaled by 1/(255*rows)
    so the oscillator sum can never clip. Summation is in fixed top-to-bottom
    row order, making the output bit-reproducible.
    """
    if scheme.duration_s * scheme.sample_rate_hz < image.cols:
        raise ValueError(
            f"scheme yields fewer samples ({scheme.duration_s * scheme.sample_rate_hz:g}) "
            f"than image columns ({image.cols})"
        )
    n_samples = sample_count(scheme)
    freqs = row_frequencies(scheme, image.rows)
    amps = image.pixels.astype(np.float64) / (255.0 * image.rows)
    n = np.arange(n_samples)
    signal = np.zeros(n_samples)
    for r in range(image.rows):
        env = _amplitude_envelope(amps[r], n_samples, image.cols, scheme.crossfade_fraction)
        signal += env * np.sin((2.0 * np.pi * freqs[r] / scheme.sample_rate_hz) * n)
    return AudioClip(signal, scheme.sample_rate_hz)


def goertzel_magnitude(samples: np.ndarray, freq_hz: float, sample_rate_hz: int) -> float:
    """|DFT| of `samples` at a single (not necessarily bin-aligned) frequency."""
    return float(
        goertzel_magnitudes(
            np.asarray(samples, dtype=np.float64)[None, :],
            np.array([freq_hz]),
            sample_rate_hz,
        )[0, 0]
    )

def goertzel_magnitudes(
    segments: np.ndarray, freqs_hz: np.ndarray, sample_rate_hz: int
) -> np.ndarray:
    """Goertzel recurrence over a batch: (n_segments, len) x (n_freqs,) -> magnitudes.

    Returns an (n_segments, n_freqs) array of single-frequency DFT moduli.
    """
    segments = np.asarray(segments, dtype=np.float64)
    omega = 2.0 * np.pi * np.asarray(freqs_hz, dtype=np.float64) / sample_rate_hz
    coeff = 2.0 * np.cos(omega)
    s1 = np.zeros((segments.shape[0], omega.size))
    s2 = np.zeros_like(s1)
    for t in range(segments.shape[1]):
        s = segments[:, t : t + 1] + coeff * s1 - s2
        s2 = s1
        s1 = s
    power = s1 * s1 + s2 * s2 - coeff * s1 * s2
    return np.sqrt(np.maximum(power, 0.0))


def min_row_spacing_hz(scheme: EncodingScheme, rows: int) -> float:
    freqs = row_frequencies(scheme, rows)
    return float(np.min(np.abs(np.diff(freqs))))


def decode(clip: AudioClip, scheme: EncodingScheme, rows: int, cols: int) -> GrayImage:
    """Reconstruct a brightness image from an encoded clip.

    One analysis slice per column; per slice, a Hann-windowed Goertzel
    magnitude at every row frequency. The brightest detection maps to 255
    and everything scales linearly from there.
    """
    if rows < 2 or cols < 1:
        raise ValueError(f"invalid target geometry {rows}x{cols}")
    expected = sample_count(scheme)
    if abs(len(clip) - expected) > expected / cols:
        raise ValueError(
            f"clip length {len(clip)} inconsistent with scheme duration "
            f"({expected} samples) by more than one column"
        )
    resolution_hz = cols / scheme.duration_s
    spacing = min_row_spacing_hz(scheme, rows)
    if spacing < resolution_hz:
        raise UndecodableGeometryError(
            f"adjacent row tones {spacing:.2f} Hz apart but column slices resolve "
            f"only {resolution_hz:.2f} Hz; this scheme/geometry pair is not decodable"
        )
    freqs = row_frequencies(scheme, rows)
    bounds = column_bounds(len(clip), cols)
    lengths = np.diff(bounds)
    mags = np.zeros((rows, cols))
    for length in np.unique(lengths):
        group = np.flatnonzero(lengths == length)
        window = hann_periodic(int(length))
        segs = np.stack([clip.samples[bounds[c] : bounds[c + 1]] for c in group]) * window
        mags[:, group] = goertzel_magnitudes(segs, freqs, clip.sample_rate_hz).T
    peak = mags.max()
    if peak > 0.0:
        pixels = np.clip(round_half_away(mags / peak * 255.0), 0, 255)
    else:
        pixels = np.zeros((rows, cols))
    return GrayImage(pixels.astype(np.uint8))
