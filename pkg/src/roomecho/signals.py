"""Core signal containers: recordings and room impulse responses."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def _as_float_vector(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a 1-D sample vector, got shape {x.shape}")
    return x


@dataclass(eq=False)
class Recording:
    """A mono recording: raw samples straight from a (real or simulated) mic."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = _as_float_vector(self.samples)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(eq=False)
class Rir:
    """A sampled room impulse response.

    ``onset_index`` marks the direct-sound peak; energy-ratio features and
    reverberation estimators integrate from there. ``source`` records
    provenance ("synthetic:<label>", "measured:<path>" or "deconvolved").
    """

    samples: np.ndarray
    sample_rate: float
    onset_index: int = 0
    source: str = "measured:?"

    def __post_init__(self):
        self.samples = _as_float_vector(self.samples)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.size == 0:
            raise ValueError("empty impulse response")
        if not 0 <= self.onset_index < self.samples.size:
            raise ValueError(
                f"onset_index {self.onset_index} outside [0, {self.samples.size})"
            )

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def scaled(self, k: float) -> "Rir":
        return replace(self, samples=self.samples * k)


def detect_onset(samples: np.ndarray) -> int:
    """Index of the direct-sound peak (largest absolute sample)."""
    return int(np.argmax(np.abs(samples)))


def measure_pnr(rir: Rir, tail_fraction: float = 0.1) -> float:
    """Peak-signal-to-noise ratio of an impulse response, in dB.

    Peak sample energy against the mean-square of the last
    ``tail_fraction`` of the response, where the decay has given way to
    the noise floor.
    """
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must be in (0, 1)")
    h = rir.samples
    tail = h[h.size - max(1, int(round(tail_fraction * h.size))):]
    peak2 = float(np.max(h**2))
    noise2 = float(np.mean(tail**2))
    if noise2 == 0.0:
        return np.inf
    return 10.0 * np.log10(peak2 / noise2)
