"""Maximum length sequence excitation and impulse-response recovery.

An MLS of order ``n`` is the output of a maximal linear-feedback shift
register: a binary sequence of period ``2**n - 1`` whose +/-1 rendering has
a circular autocorrelation of ``N`` at lag 0 and exactly ``-1`` at every
other lag. Cross-correlating a recorded response with the known sequence
therefore collapses the excitation to (almost) an impulse and recovers the
room impulse response in a single pass.

Two deconvolution paths are provided:

* ``fft``  - circular cross-correlation via the FFT, the reference path;
* ``fht``  - the fast Hadamard transform route: permute the recorded
  period into Walsh-Hadamard order, run the O(N log N) butterfly, permute
  back. The permutations are derived from the sequence's own n-bit
  windows, which enumerate every nonzero register state exactly once.

Both paths restore the DC term that plain cross-correlation loses
(the +/-1 sequence sums to +1, not 0), so a noiseless round trip is exact
to floating-point precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientDataError
from .signals import Recording, Rir, detect_onset

# Primitive polynomials over GF(2), one per register length: the entry for
# order n lists the nonzero exponents besides the constant term. Together
# with the all-ones seed this fixes every generated sequence bit for bit.
_PRIMITIVE_TAPS: dict[int, tuple[int, ...]] = {
    2: (2, 1),
    3: (3, 1),
    4: (4, 1),
    5: (5, 2),
    6: (6, 1),
    7: (7, 1),
    8: (8, 4, 3, 2),
    9: (9, 4),
    10: (10, 3),
    11: (11, 2),
    12: (12, 8, 2, 1),
    13: (13, 5, 2, 1),
    14: (14, 10, 6, 1),
    15: (15, 1),
    16: (16, 12, 3, 1),
    17: (17, 3),
    18: (18, 7),
    19: (19, 5, 2, 1),
    20: (20, 3),
}

MIN_ORDER = min(_PRIMITIVE_TAPS)
MAX_ORDER = max(_PRIMITIVE_TAPS)


@dataclass(eq=False)
class Mls:
    """One period of a maximum length sequence.

    ``bits`` holds the raw {0,1} register output; ``symbols`` the +/-1
    rendering used as the acoustic stimulus (bit 1 -> +1, bit 0 -> -1);
    ``taps`` the primitive-polynomial exponents that generated it.
    """

    order: int
    bits: np.ndarray
    symbols: np.ndarray
    taps: tuple[int, ...]
    _fht_tables: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __len__(self) -> int:
        return self.bits.size

    @property
    def period(self) -> int:
        return self.bits.size


@dataclass(frozen=True)
class MeasurementConfig:
    """Parameters of one MLS measurement run."""

    mls_order: int
    n_reps: int = 6
    sample_rate: float = 44100.0
    discard_first_period: bool = True

    def __post_init__(self):
        if not MIN_ORDER <= self.mls_order <= MAX_ORDER:
            raise ValueError(f"mls_order must be in [{MIN_ORDER}, {MAX_ORDER}]")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def period(self) -> int:
        return (1 << self.mls_order) - 1


def _lfsr_bits(order: int, taps: tuple[int, ...]) -> np.ndarray:
    """Run the shift register for one full period.

    The register recurrence is applied directly to the output stream:
    for polynomial exponents E (with n = max), bit[i] is the XOR of
    bit[i - (n - e)] for e in E\\{n} and bit[i - n]. Blocks of
    ``min(lag)`` bits at a time keep the loop in numpy.
    """
    n = order
    length = (1 << n) - 1
    lags = sorted(n - e for e in taps if e != n) + [n]
    step = lags[0]
    bits = np.empty(length, dtype=np.int8)
    bits[:n] = 1  # all-ones seed
    i = n
    while i < length:
        j = min(i + step, length)
        m = j - i
        acc = bits[i - lags[0]:i - lags[0] + m].copy()
        for lag in lags[1:]:
            acc ^= bits[i - lag:i - lag + m]
        bits[i:j] = acc
        i = j
    return bits


def generate_mls(order: int) -> Mls:
    """Generate the fixed MLS of the given order (2..20).

    Deterministic: tap set and seed are pinned, so every call returns the
    identical sequence.
    """
    if order not in _PRIMITIVE_TAPS:
        raise ValueError(f"order must be in [{MIN_ORDER}, {MAX_ORDER}], got {order}")
    taps = _PRIMITIVE_TAPS[order]
    bits = _lfsr_bits(order, taps)
    symbols = 2.0 * bits - 1.0
    return Mls(order=order, bits=bits, symbols=symbols, taps=taps)


def excitation_duration(cfg: MeasurementConfig) -> float:
    """Stimulus duration in seconds: n_reps periods at the sample rate."""
    return cfg.n_reps * cfg.period / cfg.sample_rate


def average_periods(rec: Recording, cfg: MeasurementConfig) -> Recording:
    """Fold a multi-period recording down to one averaged period.

    The first recorded period is discarded by default: it carries the
    system's settling transient and would alias into the estimate.
    Averaging the remaining ``n_reps`` periods suppresses uncorrelated
    noise by 3 dB per doubling.
    """
    period = cfg.period
    n_discard = 1 if cfg.discard_first_period else 0
    needed = (cfg.n_reps + n_discard) * period
    if rec.samples.size < needed:
        raise InsufficientDataError(
            f"recording has {rec.samples.size} samples but "
            f"{needed} are required ({cfg.n_reps} periods of {period}"
            f"{' after discarding the first' if n_discard else ''})"
        )
    stack = rec.samples[n_discard * period:needed].reshape(cfg.n_reps, period)
    return Recording(stack.mean(axis=0), rec.sample_rate)


# --- fast Hadamard machinery -------------------------------------------------

def _sequence_windows(bits: np.ndarray, order: int) -> np.ndarray:
    """n-bit cyclic windows of the sequence packed into integers (LSB first).

    For a maximal sequence these enumerate every value in [1, 2**n - 1]
    exactly once; they serve as register-state labels for each time index.
    """
    n_samples = bits.size
    ext = np.concatenate([bits, bits[:order]]).astype(np.int64)
    w = np.zeros(n_samples, dtype=np.int64)
    for t in range(order):
        w |= ext[t:t + n_samples] << t
    return w


def _fht_permutations(mls: Mls) -> tuple[np.ndarray, np.ndarray]:
    """Scatter/gather index vectors mapping time order to Hadamard order.

    bits[(k+j) mod N] is a nondegenerate GF(2) bilinear form of the window
    labels w(k), w(j). Probing the form on the basis states recovers its
    matrix A, and relabelling columns by v(j) = A w(j) turns the shifted
    sequence matrix into the Sylvester-Hadamard matrix with its zero
    row/column removed. Cached on the Mls instance.
    """
    if mls._fht_tables is not None:
        return mls._fht_tables
    n, bits = mls.order, mls.bits
    n_samples = bits.size
    w = _sequence_windows(bits, n)
    inverse = np.zeros(1 << n, dtype=np.int64)
    inverse[w] = np.arange(n_samples)
    basis_index = inverse[1 << np.arange(n)]  # time index of register state e_i
    # A[i, l] = bits[(k_i + k_l) mod N] with w(k_i) = e_i
    columns = np.zeros(n, dtype=np.int64)
    for l in range(n):
        col = 0
        for i in range(n):
            col |= int(bits[(basis_index[i] + basis_index[l]) % n_samples]) << i
        columns[l] = col
    v = np.zeros(n_samples, dtype=np.int64)
    for t in range(n):
        v[(w >> t) & 1 == 1] ^= columns[t]
    mls._fht_tables = (w, v)
    return w, v


def fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform in natural (Sylvester) order."""
    y = np.asarray(x, dtype=np.float64).copy()
    size = y.size
    if size & (size - 1):
        raise ValueError("fwht length must be a power of two")
    h = 1
    while h < size:
        y = y.reshape(-1, 2, h)
        top = y[:, 0, :] + y[:, 1, :]
        bottom = y[:, 0, :] - y[:, 1, :]
        y = np.stack((top, bottom), axis=1).reshape(-1)
        h *= 2
    return y


def _xcorr_fft(period: np.ndarray, symbols: np.ndarray) -> np.ndarray:
    # c[k] = sum_j y[j] s[(j-k) mod N]
    n_samples = symbols.size
    spec = np.fft.rfft(period) * np.conj(np.fft.rfft(symbols))
    return np.fft.irfft(spec, n=n_samples)


def _xcorr_fht(period: np.ndarray, mls: Mls) -> np.ndarray:
    w, v = _fht_permutations(mls)
    padded = np.zeros(1 << mls.order)
    padded[v] = period
    # the Hadamard route lands on sum_j y[j] s[(j+k) mod N]; cyclic
    # reversal flips it to the deconvolution lag convention
    corr = -fwht(padded)[w]
    return np.roll(corr[::-1], 1)


def deconvolve(period: Recording, mls: Mls, path: str = "fft") -> Rir:
    """Recover the impulse response from one averaged excitation period.

    Circular cross-correlation with the +/-1 sequence yields
    ``(N+1) h(k) - sum(h)``; adding back ``sum(period)`` (the sequence sums
    to +1, so the period sum equals the response sum) and dividing by
    ``N + 1`` inverts the measurement exactly for any response up to one
    period long. ``path`` selects the FFT or fast-Hadamard route; the two
    agree to floating-point precision.
    """
    if period.samples.size != mls.period:
        raise ValueError(
            f"period length {period.samples.size} != MLS length {mls.period}"
        )
    if path == "fft":
        corr = _xcorr_fft(period.samples, mls.symbols)
    elif path == "fht":
        corr = _xcorr_fht(period.samples, mls)
    else:
        raise ValueError(f"unknown deconvolution path {path!r}")
    h = (corr + period.samples.sum()) / (mls.period + 1)
    return Rir(h, period.sample_rate, onset_index=detect_onset(h),
               source="deconvolved")
