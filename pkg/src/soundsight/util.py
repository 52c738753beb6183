"""Small shared numeric helpers."""

from __future__ import annotations

import numpy as np


def round_half_away(x):
    """Round to nearest integer with halves away from zero.

    Used everywhere a real value is quantized (sample counts, pixel levels,
    PCM amplitudes) so quantization is uniform across the codebase.
    """
    arr = np.asarray(x, dtype=np.float64)
    out = np.sign(arr) * np.floor(np.abs(arr) + 0.5)
    if np.isscalar(x) or arr.ndim == 0:
        return int(out)
    return out
