"""Octave band definitions and the shared band-pass filter bank.

Both the synthetic-room generator and the feature extractor filter through
this module, so synthesis and analysis agree exactly on what "the 2 kHz
band" means.
"""

from __future__ import annotations

from functools import lru_cache
from math import sqrt

import numpy as np
from scipy.signal import butter, sosfilt

#: Octave-band centers used by the 22-dimensional fingerprint, in Hz.
OCTAVE_CENTERS = (250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0)

_SQRT2 = sqrt(2.0)


def band_edges(center: float) -> tuple[float, float]:
    """-3 dB edges of the octave band around ``center``."""
    return center / _SQRT2, center * _SQRT2


def check_band(center: float, sample_rate: float) -> None:
    lo, hi = band_edges(center)
    if lo <= 0:
        raise ValueError(f"band center {center} Hz must be positive")
    if hi >= sample_rate / 2:
        raise ValueError(
            f"octave band at {center} Hz reaches {hi:.0f} Hz, beyond the "
            f"Nyquist frequency {sample_rate / 2:.0f} Hz"
        )


@lru_cache(maxsize=64)
def _bandpass_sos(center: float, sample_rate: float):
    # 4th-order Butterworth prototype -> 8th-order band-pass: -3 dB at the
    # octave edges and > 40 dB rejection one octave outside them.
    lo, hi = band_edges(center)
    return butter(4, [lo, hi], btype="bandpass", fs=sample_rate, output="sos")


def bandpass(samples: np.ndarray, center: float, sample_rate: float) -> np.ndarray:
    """Filter ``samples`` through the octave band centered at ``center``."""
    check_band(center, sample_rate)
    return sosfilt(_bandpass_sos(float(center), float(sample_rate)), samples)
