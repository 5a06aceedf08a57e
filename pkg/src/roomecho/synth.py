"""Parametric synthetic rooms: impulse responses with known ground truth.

The model is deliberately statistical, not geometric: a unit direct-sound
spike, per-octave-band Gaussian reverberation under an exponential decay
envelope, and a stationary white noise floor. Every quantity a downstream
estimator measures (band reverberation time, direct-to-reverberant ratio,
peak-to-noise ratio) is a dial here, which is what makes these rooms
usable as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt

from . import filters
from .errors import TimeAliasingError
from .mls import MeasurementConfig, Mls
from .signals import Recording, Rir

# exp(-DECAY_RATE * t / rt) drops the signal *energy* by exactly 60 dB at
# t = rt: 20*log10(exp(-6.90776)) = -60.
DECAY_RATE = 3.0 * math.log(10.0)


@dataclass(frozen=True)
class RoomSpec:
    """Ground-truth description of a synthetic room.

    ``rt_per_band`` maps octave-band centers (Hz) to the band's RT60 in
    seconds. ``direct_to_reverb_db`` sets the energy ratio between the
    direct spike and the whole reverberant tail; ``pnr_db`` the
    peak-signal-to-noise ratio of the rendered response (``math.inf`` for
    noiseless). ``modes`` lists room resonances as (frequency_hz,
    energy_fraction) pairs: each adds a decaying sinusoid carrying that
    fraction of the reverberant energy budget, putting a room-specific
    peak in the spectrum. Geometry fields are optional metadata only.
    """

    label: str
    rt_per_band: dict[float, float]
    direct_to_reverb_db: float = 3.0
    pnr_db: float = 34.0
    modes: tuple[tuple[float, float], ...] = ()
    volume_m3: float | None = None
    surface_area_m2: float | None = None
    avg_absorption: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not self.rt_per_band:
            raise ValueError("rt_per_band must name at least one band")
        for center, rt in self.rt_per_band.items():
            if rt <= 0:
                raise ValueError(f"RT for band {center} Hz must be positive")
        if math.isnan(self.pnr_db):
            raise ValueError("pnr_db must be finite or +inf")
        for freq, energy in self.modes:
            if freq <= 0 or energy < 0:
                raise ValueError("modes need positive frequency and energy >= 0")

    @property
    def max_rt(self) -> float:
        return max(self.rt_per_band.values())


def _rt_at(spec: RoomSpec, freq: float) -> float:
    """RT at an arbitrary frequency: the nearest specified band's value."""
    center = min(spec.rt_per_band, key=lambda c: abs(math.log(freq / c)))
    return spec.rt_per_band[center]


def sabine_rt(volume_m3: float, surface_area_m2: float, absorption: float) -> float:
    """Sabine reverberation time 0.161 * V / (S * alpha), in seconds."""
    if volume_m3 <= 0 or surface_area_m2 <= 0:
        raise ValueError("volume and surface area must be positive")
    if not 0 < absorption <= 1:
        raise ValueError("absorption coefficient must be in (0, 1]")
    return 0.161 * volume_m3 / (surface_area_m2 * absorption)


def synth_rir(spec: RoomSpec, duration: float, sample_rate: float) -> Rir:
    """Render one impulse response realization of ``spec``.

    Band noise is filtered first and enveloped second, so each band's
    energy decays by exactly 60 dB over its RT; bands are normalized to
    share the reverberant energy budget equally after mode energy is set
    aside. Modes render as randomly-phased decaying sinusoids.
    Bit-deterministic for a given (spec, duration, sample_rate).
    """
    if duration < spec.max_rt:
        raise ValueError(
            f"duration {duration} s is shorter than the longest band RT "
            f"{spec.max_rt} s"
        )
    n = int(round(duration * sample_rate))
    if n < 1:
        raise ValueError("duration too short for even one sample")
    rng = np.random.default_rng(spec.rng_seed)
    t = np.arange(n) / sample_rate

    h = np.zeros(n)
    h[0] = 1.0  # unit direct-sound spike; onset at sample 0

    reverb_energy = 10.0 ** (-spec.direct_to_reverb_db / 10.0)
    if reverb_energy > 0.0:
        bands = sorted(spec.rt_per_band.items())
        mode_fraction = min(1.0, sum(energy for _, energy in spec.modes))
        per_band = reverb_energy * (1.0 - mode_fraction) / len(bands)
        for center, rt in bands:
            noise = rng.standard_normal(n)
            band = filters.bandpass(noise, center, sample_rate)
            band *= np.exp(-DECAY_RATE * t / rt)
            energy = float(np.sum(band**2))
            if energy > 0.0:
                band *= math.sqrt(per_band / energy)
            h += band
        for freq, energy_fraction in spec.modes:
            rt = _rt_at(spec, freq)
            phase = rng.uniform(0.0, 2.0 * math.pi)
            mode = np.sin(2.0 * math.pi * freq * t + phase)
            mode *= np.exp(-DECAY_RATE * t / rt)
            energy = float(np.sum(mode**2))
            if energy > 0.0:
                mode *= math.sqrt(reverb_energy * energy_fraction / energy)
            h += mode

    if math.isfinite(spec.pnr_db):
        peak = float(np.max(np.abs(h)))
        sigma = peak * 10.0 ** (-spec.pnr_db / 20.0)
        h = h + sigma * rng.standard_normal(n)

    return Rir(h, sample_rate, onset_index=0, source=f"synthetic:{spec.label}")


def simulate_measurement(
    spec: RoomSpec,
    mls: Mls,
    cfg: MeasurementConfig,
    rir_duration: float | None = None,
) -> Recording:
    """Simulate the full measurement: looped MLS through the room, plus mic noise.

    The stimulus is ``n_reps + 1`` periods (one extra so the settling
    period can be discarded); the room response is the noiseless render of
    ``spec``. Measurement noise is white at the mic, scaled so that the
    *deconvolved* response comes out at ``spec.pnr_db`` when a single
    period is averaged — averaging more periods then buys 3 dB per
    doubling.
    """
    period = mls.period
    if rir_duration is None:
        rir_duration = period / cfg.sample_rate
    n_rir = int(round(rir_duration * cfg.sample_rate))
    if n_rir > period:
        raise TimeAliasingError(
            f"impulse response of {n_rir} samples exceeds the MLS period "
            f"{period}; responses would wrap onto themselves"
        )
    clean = synth_rir(replace(spec, pnr_db=math.inf), rir_duration, cfg.sample_rate)

    stream = np.tile(mls.symbols, cfg.n_reps + 1)
    received = fftconvolve(stream, clean.samples)[:stream.size]

    if math.isfinite(spec.pnr_db):
        # mic-noise sigma for the target PNR after single-period
        # deconvolution: the correlator (with its DC restoration) maps
        # white noise of variance s^2 to RIR noise of variance 2 s^2/(N+1)
        rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, 0x5EED]))
        peak = float(np.max(np.abs(clean.samples)))
        sigma = peak * 10.0 ** (-spec.pnr_db / 20.0) * math.sqrt((period + 1) / 2.0)
        received = received + sigma * rng.standard_normal(received.size)

    return Recording(received, cfg.sample_rate)


def degrade_rir(
    rir: Rir,
    pnr_drop_db: float = 10.0,
    n_bursts: int = 3,
    burst_ms: float = 80.0,
    burst_gain_db: float = -20.0,
    noise_band: tuple[float, float] = (80.0, 300.0),
    guard_ms: float = 60.0,
    rng: np.random.Generator | None = None,
) -> Rir:
    """Corrupt a response the way talkers in the room would.

    Speech-band noise (``noise_band``, voice fundamentals by default)
    raises the measured PNR floor by ``pnr_drop_db``, and short band-
    limited bursts (syllables, thuds) land in the tail, at least
    ``guard_ms`` after the onset. Features drawing on the contaminated
    band or on wideband energy take the hit; higher bands stay clean.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    h = rir.samples.copy()
    n = h.size
    peak = float(np.max(np.abs(h)))

    lo, hi = noise_band
    sos = butter(4, [lo, hi], btype="bandpass", fs=rir.sample_rate, output="sos")

    tail = h[n - max(1, n // 10):]
    noise_power = float(np.mean(tail**2))
    target_power = noise_power * 10.0 ** (pnr_drop_db / 10.0)
    extra = target_power - noise_power
    if extra > 0.0:
        colored = sosfilt(sos, rng.standard_normal(n))
        colored *= math.sqrt(extra / float(np.mean(colored**2)))
        h += colored

    burst_len = max(4, int(round(burst_ms / 1000.0 * rir.sample_rate)))
    start_min = rir.onset_index + int(round(guard_ms / 1000.0 * rir.sample_rate))
    start_max = n - burst_len
    amp = peak * 10.0 ** (burst_gain_db / 20.0)
    taper = np.hanning(burst_len)  # keeps the burst inside its band
    for _ in range(n_bursts):
        if start_max <= start_min:
            break
        at = int(rng.integers(start_min, start_max))
        burst = sosfilt(sos, rng.standard_normal(burst_len)) * taper
        rms = math.sqrt(float(np.mean(burst**2)))
        if rms > 0.0:
            h[at:at + burst_len] += amp / rms * burst
    return replace(rir, samples=h)
