"""The 22-dimensional acoustic fingerprint of an impulse response.

Feature layout (fixed order, ``FEATURE_NAMES``):

====================  =====================================================
time_kurtosis         fourth standardized moment of the windowed response
spectral_std_*        std of FFT magnitudes in each of the 6 octave bands
spectral_kurtosis_*   kurtosis of FFT magnitudes in each band
rt_*                  noise-adaptive reverberation time per band (seconds)
c50_db, d50, ts_s     early/late energy ratio, early/total ratio, center time
====================  =====================================================

Reverberation is estimated two ways. ``rt_schroeder`` is the textbook
route: backward-integrate the squared response, fit the -5..-35 dB span,
extrapolate to -60 dB. It needs some 40 dB of clean decay and fails
honestly when a noise floor buries that span. ``naer_rt`` is the
noise-adaptive estimator used for the fingerprint: it measures the noise
floor from the response tail, extends it backward as a pseudo-noise energy
curve bonded to the real decay, and reads reverberation time as the moment
the sound energy sinks to that curve.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import filters
from .errors import (
    DegenerateSignalError,
    InsufficientDecayError,
    NoCrossingError,
    SaturationError,
)
from .filters import OCTAVE_CENTERS
from .signals import Rir, detect_onset

EARLY_SECONDS = 0.05  # the "50" in D50/C50


def feature_names_for(centers) -> tuple[str, ...]:
    """Column names of the fingerprint built on the given band centers."""
    return (
        ("time_kurtosis",)
        + tuple(f"spectral_std_{int(c)}hz" for c in centers)
        + tuple(f"spectral_kurtosis_{int(c)}hz" for c in centers)
        + tuple(f"rt_{int(c)}hz" for c in centers)
        + ("c50_db", "d50", "ts_s")
    )


FEATURE_NAMES: tuple[str, ...] = feature_names_for(OCTAVE_CENTERS)

N_FEATURES = len(FEATURE_NAMES)


class WindowCoverageWarning(UserWarning):
    """The analysis window is shorter than the longest expected RT."""


@dataclass(eq=False)
class EnergyDecayCurve:
    """Backward-integrated squared impulse response (Schroeder integration).

    ``linear[t]`` is the energy remaining from sample t onward; ``db`` is
    normalized to 0 dB at the onset sample. The excitation-level constant
    in front of the integral cancels in that normalization.
    """

    linear: np.ndarray
    db: np.ndarray
    sample_rate: float
    onset_index: int

    def __len__(self) -> int:
        return self.linear.size


@dataclass(frozen=True)
class NaerParams:
    """Tuning of the noise-adaptive reverberation estimator.

    ``per_noise``: trailing fraction of the response used to estimate the
    noise floor. ``bond_point``: where the pseudo-noise curve is pinned to
    the real energy decay — a fraction of the length if < 1, otherwise a
    sample index; ``None`` bonds at the start of the noise-estimation
    tail. ``threshold``: decay endpoint, as a fraction of the energy at
    onset.
    """

    per_noise: float = 0.1
    bond_point: float | int | None = None
    threshold: float = 1e-3

    def __post_init__(self):
        if not 0.0 < self.per_noise < 1.0:
            raise ValueError("per_noise must be in (0, 1)")
        if self.threshold <= 0.0:
            raise ValueError("threshold must be positive")

    def tail_start(self, length: int) -> int:
        return length - max(1, int(round(self.per_noise * length)))

    def bond_index(self, length: int) -> int:
        if self.bond_point is None:
            return self.tail_start(length)
        if isinstance(self.bond_point, float) and self.bond_point < 1.0:
            idx = int(round(self.bond_point * length))
        else:
            idx = int(self.bond_point)
        if not 0 <= idx < length:
            raise ValueError(f"bond point {idx} outside the response [0, {length})")
        return idx


@dataclass(frozen=True)
class FeatureVector:
    """One room fingerprint: 22 named acoustic features, fixed order."""

    time_kurtosis: float
    spectral_std: tuple[float, ...]
    spectral_kurtosis: tuple[float, ...]
    rt: tuple[float, ...]
    c50: float
    d50: float
    ts: float

    def __post_init__(self):
        n_bands = len(self.spectral_std)
        if (len(self.spectral_kurtosis), len(self.rt)) != (n_bands, n_bands):
            raise ValueError("band feature groups must have equal length")
        values = self.as_array()
        if not np.all(np.isfinite(values)):
            raise ValueError(
                f"non-finite feature(s) at positions "
                f"{np.flatnonzero(~np.isfinite(values)).tolist()}"
            )
        if not 0.0 <= self.d50 <= 1.0:
            raise ValueError("d50 must lie in [0, 1]")
        if any(r <= 0.0 for r in self.rt):
            raise ValueError("reverberation times must be positive")

    def as_array(self) -> np.ndarray:
        return np.array(
            (self.time_kurtosis,)
            + self.spectral_std
            + self.spectral_kurtosis
            + self.rt
            + (self.c50, self.d50, self.ts),
            dtype=np.float64,
        )

    @classmethod
    def from_array(cls, values) -> "FeatureVector":
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or (values.size - 4) % 3:
            raise ValueError(f"cannot split shape {values.shape} into band groups")
        b = (values.size - 4) // 3
        return cls(
            time_kurtosis=float(values[0]),
            spectral_std=tuple(values[1:1 + b]),
            spectral_kurtosis=tuple(values[1 + b:1 + 2 * b]),
            rt=tuple(values[1 + 2 * b:1 + 3 * b]),
            c50=float(values[1 + 3 * b]),
            d50=float(values[2 + 3 * b]),
            ts=float(values[3 + 3 * b]),
        )

    def as_dict(self, centers=OCTAVE_CENTERS) -> dict[str, float]:
        return dict(zip(feature_names_for(centers), self.as_array().tolist()))


# --- windowing and moments ---------------------------------------------------

def window_rir(rir: Rir, t_window: float, max_rt: float | None = None) -> Rir:
    """Truncate a response to its first ``t_window`` seconds.

    Cuts from sample 0 (not from onset). If ``max_rt`` is supplied and the
    window is shorter, a :class:`WindowCoverageWarning` is raised: a window
    below the reverberation time chops off decay the estimators need.
    """
    if t_window <= 0:
        raise ValueError("t_window must be positive")
    if max_rt is not None and t_window < max_rt:
        warnings.warn(
            f"analysis window {t_window} s is below the expected maximum "
            f"reverberation time {max_rt} s; reverberation features will "
            "saturate",
            WindowCoverageWarning,
            stacklevel=2,
        )
    n = int(round(t_window * rir.sample_rate))
    if n >= rir.samples.size:
        return rir
    samples = rir.samples[:n]
    onset = rir.onset_index if rir.onset_index < n else detect_onset(samples)
    return replace(rir, samples=samples, onset_index=onset)


def _kurtosis(x: np.ndarray, what: str) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise DegenerateSignalError(f"{what}: need at least 2 values")
    mu = x.mean()
    centered = x - mu
    var = float(np.mean(centered**2))
    if var == 0.0:
        raise DegenerateSignalError(f"{what}: zero variance")
    return float(np.mean(centered**4) / var**2)


def temporal_kurtosis(rir: Rir) -> float:
    """Peakedness of the sample distribution (population moments)."""
    return _kurtosis(rir.samples, "temporal kurtosis")


def octave_filter(rir: Rir, center: float) -> Rir:
    """Band-pass the response through one octave band of the shared bank."""
    samples = filters.bandpass(rir.samples, center, rir.sample_rate)
    return replace(rir, samples=samples, onset_index=detect_onset(samples))


def _band_magnitudes(rir: Rir, band: tuple[float, float]) -> np.ndarray:
    f_lo, f_hi = band
    if not 0 <= f_lo < f_hi <= rir.sample_rate / 2:
        raise ValueError(f"band {band} must satisfy 0 <= f1 < f2 <= Nyquist")
    freqs = np.fft.rfftfreq(rir.samples.size, d=1.0 / rir.sample_rate)
    mask = (freqs >= f_lo) & (freqs <= f_hi)
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"band {band} covers fewer than 2 FFT bins")
    return np.abs(np.fft.rfft(rir.samples))[mask]


def spectral_std(rir: Rir, band: tuple[float, float]) -> float:
    """Standard deviation of FFT magnitudes within ``band`` (f1, f2)."""
    mags = _band_magnitudes(rir, band)
    return float(np.sqrt(np.mean(mags**2) - np.mean(mags) ** 2))


def spectral_kurtosis(rir: Rir, band: tuple[float, float]) -> float:
    """Kurtosis of FFT magnitudes within ``band`` — peaks flag room modes."""
    return _kurtosis(_band_magnitudes(rir, band), "spectral kurtosis")


# --- energy decay ------------------------------------------------------------

def edc(rir: Rir) -> EnergyDecayCurve:
    """Schroeder backward integration of the squared response."""
    h2 = rir.samples**2
    total = float(h2.sum())
    if total == 0.0:
        raise DegenerateSignalError("all-zero impulse response has no decay")
    linear = np.cumsum(h2[::-1])[::-1]
    ref = linear[rir.onset_index]
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(linear / ref)
    return EnergyDecayCurve(
        linear=linear, db=db, sample_rate=rir.sample_rate, onset_index=rir.onset_index
    )


def rt_schroeder(
    curve: EnergyDecayCurve,
    fit_range_db: tuple[float, float] = (-5.0, -35.0),
) -> float:
    """Reverberation time from a linear fit of the decay curve.

    Fits the span between the two dB levels (relative to onset) and
    extrapolates to -60 dB. The lower level must be reached while sound
    still dominates: backward integration always plunges at the very end
    of the window, so without that guard a buried decay would silently fit
    the noise shelf.
    """
    hi, lo = fit_range_db
    if not lo < hi < 0:
        raise ValueError("fit range must satisfy lo < hi < 0")
    db = curve.db[curve.onset_index:]
    below_hi = np.flatnonzero(db <= hi)
    below_lo = np.flatnonzero(db <= lo)
    if below_hi.size == 0 or below_lo.size == 0:
        raise InsufficientDecayError(
            f"decay curve never reaches {lo} dB within the window"
        )
    start, stop = below_hi[0], below_lo[0]
    if stop <= start:
        raise InsufficientDecayError("decay span collapses to a point")

    # noise floor from the last tenth of the curve; the fitted span must
    # end before that region and sit clear of the noise shelf (backward
    # integration always plunges at the very edge of the window, so a
    # buried decay would otherwise silently fit the noise)
    length = curve.linear.size
    tail_at = int(round(0.9 * length))
    stop_abs = curve.onset_index + stop
    noise_power = curve.linear[tail_at] / max(1, length - tail_at)
    if stop_abs >= tail_at or (
        curve.linear[stop_abs] < 3.0 * noise_power * (length - stop_abs)
    ):
        raise InsufficientDecayError(
            f"the {lo} dB level is only reached inside the noise floor; "
            "decay range is insufficient"
        )

    t = np.arange(start, stop + 1) / curve.sample_rate
    slope, _ = np.polyfit(t, db[start:stop + 1], 1)
    if slope >= 0:
        raise InsufficientDecayError("energy decay has non-negative slope")
    return -60.0 / slope


def naer_rt(rir: Rir, params: NaerParams = NaerParams()) -> float:
    """Noise-adaptive reverberation time.

    1. Noise power = mean square of the last ``per_noise`` of the samples.
    2. Pseudo-noise energy curve = that power backward-integrated in
       closed form, shifted to meet the real energy decay at the bond
       point.
    3. RT = time from onset until the sound energy sits within
       ``threshold`` (times the onset energy) of the pseudo-noise curve.

    The threshold is relative to the onset energy, which makes the
    estimate invariant to rescaling the response. The scan starts one
    sample after the onset, so the estimate is always positive; a signal
    that is noise all the way down saturates at ``1 / sample_rate``.
    """
    h = rir.samples
    length = h.size
    tail_start = params.tail_start(length)
    noise_power = float(np.mean(h[tail_start:] ** 2))

    sound_energy = np.cumsum((h**2)[::-1])[::-1]
    if sound_energy[0] == 0.0:
        raise DegenerateSignalError("all-zero impulse response")
    pseudo_noise = noise_power * (length - np.arange(length, dtype=np.float64))
    bond = params.bond_index(length)
    pseudo_noise += sound_energy[bond] - pseudo_noise[bond]

    onset = rir.onset_index
    margin = params.threshold * sound_energy[onset]
    scan_from = onset + 1
    if scan_from >= length:
        raise NoCrossingError("nothing after the onset to scan")
    crossed = np.flatnonzero(
        sound_energy[scan_from:] - pseudo_noise[scan_from:] < margin
    )
    if crossed.size == 0:
        raise NoCrossingError(
            "sound energy never decays to the pseudo-noise curve within the window"
        )
    return float((crossed[0] + 1) / rir.sample_rate)


# --- energetic ratios --------------------------------------------------------

def _energy_split(rir: Rir) -> tuple[float, float]:
    h2 = rir.samples[rir.onset_index:] ** 2
    total = float(h2.sum())
    if total == 0.0:
        raise DegenerateSignalError("no energy after onset")
    n_early = int(round(EARLY_SECONDS * rir.sample_rate))
    early = float(h2[:n_early].sum())
    return early, total


def d50(rir: Rir) -> float:
    """Early-to-total energy ratio: first 50 ms after onset over everything."""
    early, total = _energy_split(rir)
    return early / total


def c50(rir: Rir) -> float:
    """Early-to-late energy ratio in dB."""
    early, total = _energy_split(rir)
    late = total - early
    if late <= 0.0:
        raise SaturationError("all energy within 50 ms of onset; C50 is infinite")
    if early == 0.0:
        raise SaturationError("no energy within 50 ms of onset; C50 is -infinite")
    return 10.0 * math.log10(early / late)


def ts(rir: Rir) -> float:
    """Center time: first temporal moment of the squared response, seconds."""
    h2 = rir.samples[rir.onset_index:] ** 2
    total = float(h2.sum())
    if total == 0.0:
        raise DegenerateSignalError("no energy after onset")
    t = np.arange(h2.size) / rir.sample_rate
    return float(np.sum(t * h2) / total)


# --- assembly ----------------------------------------------------------------

def extract_features(
    rir: Rir,
    t_window: float = 1.5,
    naer: NaerParams = NaerParams(),
    max_rt: float | None = None,
    centers=OCTAVE_CENTERS,
) -> FeatureVector:
    """Compute the fingerprint of one response (22 entries on the default bands).

    The response is windowed to ``t_window`` first; band reverberation
    times run the noise-adaptive estimator on each octave-filtered copy.
    Per-band failures are re-raised with the band attached.
    """
    w = window_rir(rir, t_window, max_rt=max_rt)

    stds, kurts, rts = [], [], []
    for center in centers:
        band = filters.band_edges(center)
        try:
            stds.append(spectral_std(w, band))
            kurts.append(spectral_kurtosis(w, band))
            rts.append(naer_rt(octave_filter(w, center), naer))
        except (DegenerateSignalError, InsufficientDecayError, NoCrossingError) as exc:
            raise type(exc)(f"band {int(center)} Hz: {exc}") from exc

    return FeatureVector(
        time_kurtosis=temporal_kurtosis(w),
        spectral_std=tuple(stds),
        spectral_kurtosis=tuple(kurts),
        rt=tuple(rts),
        c50=c50(w),
        d50=d50(w),
        ts=ts(w),
    )
