"""File I/O for recordings and impulse responses.

Two interchangeable on-disk forms:

* mono 16-bit PCM WAV (compact, what a capture rig would produce);
* single-column CSV of floats (lossless, used wherever full float64
  precision matters, e.g. verifying deconvolution round trips).

Readers dispatch on the file suffix.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import DatasetFormatError
from .signals import Recording, Rir, detect_onset

_PCM_FULL_SCALE = 32767


def write_wav(path, samples: np.ndarray, sample_rate: float) -> None:
    """Write samples as mono 16-bit PCM, peak-normalized to full scale."""
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak == 0.0:
        pcm = np.zeros(samples.size, dtype=np.int16)
    else:
        pcm = np.round(samples / peak * _PCM_FULL_SCALE).astype(np.int16)
    wavfile.write(str(path), int(round(sample_rate)), pcm)


def read_wav(path) -> tuple[np.ndarray, float]:
    rate, data = wavfile.read(str(path))
    if data.ndim != 1:
        raise DatasetFormatError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / _PCM_FULL_SCALE
    else:
        samples = data.astype(np.float64)
    return samples, float(rate)


def write_csv_samples(path, samples: np.ndarray) -> None:
    np.savetxt(str(path), samples, fmt="%.17g")


def read_csv_samples(path) -> np.ndarray:
    try:
        samples = np.loadtxt(str(path), dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: not a single-column float CSV: {exc}") from exc
    if samples.ndim != 1:
        raise DatasetFormatError(f"{path}: expected one column, got shape {samples.shape}")
    return samples


def read_recording(path, sample_rate: float | None = None) -> Recording:
    """Load a recording from .wav (rate from header) or .csv (rate required)."""
    path = Path(path)
    if path.suffix.lower() == ".wav":
        samples, rate = read_wav(path)
        return Recording(samples, rate)
    if sample_rate is None:
        raise ValueError(f"{path}: sample_rate required for CSV recordings")
    return Recording(read_csv_samples(path), sample_rate)


def write_recording(path, rec: Recording) -> None:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        write_wav(path, rec.samples, rec.sample_rate)
    else:
        write_csv_samples(path, rec.samples)


def read_rir(path, sample_rate: float | None = None) -> Rir:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        samples, rate = read_wav(path)
    else:
        if sample_rate is None:
            raise ValueError(f"{path}: sample_rate required for CSV impulse responses")
        samples, rate = read_csv_samples(path), sample_rate
    return Rir(samples, rate, onset_index=detect_onset(samples),
               source=f"measured:{path.name}")


def write_rir(path, rir: Rir) -> None:
    path = Path(path)
    if path.suffix.lower() == ".wav":
        write_wav(path, rir.samples, rir.sample_rate)
    else:
        write_csv_samples(path, rir.samples)
