"""Sampling grid, field container, fiber constants and unit conversions.

Envelopes are stored relative to the pump carrier. A line at offset ``f``
(hertz) contributes ``c * exp(-2j*pi*f*T)`` to the time samples, so the
spectral coefficients are ``ifft(samples)`` and ``|c|**2`` is the line power
in watts (unitary-sum normalization: ``mean(|A|**2) == sum(|c|**2)``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property, reduce
from typing import Iterable, Mapping

import numpy as np
import scipy.fft

from .errors import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
ELECTRON_CHARGE = 1.602176634e-19  # C

MIN_SAMPLES = 2**12
MAX_SAMPLES = 2**22
FREQUENCY_RESOLUTION_HZ = 1000  # tones must be exact multiples of 1 kHz


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------

def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def dbm_to_w(dbm):
    """Power in dBm to watts (``-inf`` maps to 0)."""
    return _scalar_or_array(np.power(10.0, (np.asarray(dbm, dtype=float) - 30.0) / 10.0))


def w_to_dbm(watts):
    """Power in watts to dBm (0 W maps to ``-inf``)."""
    with np.errstate(divide="ignore"):
        return _scalar_or_array(10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0)


def db_to_ratio(db):
    return _scalar_or_array(np.power(10.0, np.asarray(db, dtype=float) / 10.0))


def ratio_to_db(ratio):
    with np.errstate(divide="ignore"):
        return _scalar_or_array(10.0 * np.log10(np.asarray(ratio, dtype=float)))


def db_per_km_to_per_m(db_per_km: float) -> float:
    """Attenuation in dB/km to the natural power coefficient in 1/m."""
    return math.log(10.0) * db_per_km / 10.0 / 1000.0


def per_m_to_db_per_km(alpha: float) -> float:
    return alpha * 10.0 * 1000.0 / math.log(10.0)


# ---------------------------------------------------------------------------
# exact frequencies
# ---------------------------------------------------------------------------

def exact_hz(value, name: str = "frequency") -> Fraction:
    """Convert a frequency to an exact rational number of hertz.

    Strings and Fractions are taken literally; floats are converted from
    their exact binary value. The result must be a multiple of 1 kHz,
    otherwise the tone cannot share a grid with the others.
    """
    try:
        if isinstance(value, str):
            f = Fraction(value.strip())
        else:
            f = Fraction(value)
    except (ValueError, TypeError, OverflowError) as exc:
        raise ConfigurationError(f"{name}={value!r} is not a finite frequency") from exc
    if (f / FREQUENCY_RESOLUTION_HZ).denominator != 1:
        raise ConfigurationError(
            f"{name}={float(f):.12g} Hz is not a multiple of "
            f"{FREQUENCY_RESOLUTION_HZ} Hz and is incommensurable with an exact grid"
        )
    return f


@dataclass(frozen=True)
class SimulationGrid:
    """Uniform periodic time grid and its discrete frequency lattice."""

    n_samples: int
    df: Fraction  # Hz

    def __post_init__(self):
        n = self.n_samples
        if n < MIN_SAMPLES or n & (n - 1):
            raise ConfigurationError(
                f"n_samples={n} must be a power of two >= {MIN_SAMPLES}"
            )
        object.__setattr__(self, "df", Fraction(self.df))
        if self.df <= 0:
            raise ConfigurationError("df must be positive")

    @property
    def time_window(self) -> float:
        return float(1 / self.df)

    @property
    def dt(self) -> float:
        return float(1 / (self.df * self.n_samples))

    @property
    def sample_rate(self) -> float:
        return float(self.df * self.n_samples)

    @property
    def nyquist(self) -> Fraction:
        return self.df * (self.n_samples // 2)

    @cached_property
    def t(self) -> np.ndarray:
        t = np.arange(self.n_samples) * self.dt
        t.flags.writeable = False
        return t

    @cached_property
    def freqs(self) -> np.ndarray:
        """Offset frequency (Hz) of each spectral bin, in FFT order."""
        f = scipy.fft.fftfreq(self.n_samples, self.dt)
        f.flags.writeable = False
        return f

    @cached_property
    def omega(self) -> np.ndarray:
        w = 2.0 * np.pi * self.freqs
        w.flags.writeable = False
        return w

    def is_on_grid(self, freq) -> bool:
        f = Fraction(freq)
        return (f / self.df).denominator == 1 and abs(f) < self.nyquist

    def index(self, freq) -> int:
        """FFT-order bin index of an offset frequency; exact, never rounded."""
        f = Fraction(freq)
        ratio = f / self.df
        if ratio.denominator != 1:
            raise ConfigurationError(f"{float(f):.12g} Hz is off-grid (df={float(self.df):g} Hz)")
        if abs(f) >= self.nyquist:
            raise ConfigurationError(
                f"{float(f):.12g} Hz lies beyond the grid Nyquist frequency {float(self.nyquist):.6g} Hz"
            )
        return int(ratio.numerator) % self.n_samples

    def describe(self) -> dict:
        return {
            "n_samples": self.n_samples,
            "df_hz": float(self.df),
            "time_window_s": self.time_window,
            "sample_rate_hz": self.sample_rate,
        }


def build_grid(
    tones: Mapping[str, object] | Iterable[object],
    max_offset_hz: float = 0.0,
    *,
    n_samples: int | None = None,
    max_samples: int = MAX_SAMPLES,
) -> SimulationGrid:
    """Choose the coarsest grid on which every tone falls exactly on a bin.

    ``df`` is the greatest common divisor of the tones (in exact arithmetic),
    and ``n_samples`` the smallest power of two that resolves
    ``max_offset_hz`` without aliasing.
    """
    if not isinstance(tones, Mapping):
        tones = {f"tone{i}": v for i, v in enumerate(tones)}
    if not tones:
        raise ConfigurationError("at least one tone is required")
    exact = {}
    for name, value in tones.items():
        f = exact_hz(value, name)
        if f <= 0:
            raise ConfigurationError(f"{name}={float(f):g} Hz must be positive")
        exact[name] = f
    df = reduce(_fraction_gcd, exact.values())

    need = max(MIN_SAMPLES, math.ceil(2 * Fraction(max_offset_hz) / df) + 1)
    n = 1 << (need - 1).bit_length()
    if n_samples is not None:
        if n_samples < n:
            raise ConfigurationError(
                f"n_samples={n_samples} is too small for a {max_offset_hz:g} Hz bandwidth "
                f"at df={float(df):g} Hz (need {n})"
            )
        n = n_samples
    if n > max_samples:
        culprit = _worst_tone(exact)
        raise ConfigurationError(
            f"no grid with at most {max_samples} samples: tone {culprit}="
            f"{float(exact[culprit]):.12g} Hz forces df={float(df):g} Hz"
        )
    return SimulationGrid(n_samples=n, df=df)


def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    den = math.lcm(a.denominator, b.denominator)
    return Fraction(math.gcd(int(a * den), int(b * den)), den)


def _worst_tone(exact: Mapping[str, Fraction]) -> str:
    # the tone whose removal coarsens the grid the most
    if len(exact) == 1:
        return next(iter(exact))
    best, best_df = None, Fraction(-1)
    for name in exact:
        rest = [v for k, v in exact.items() if k != name]
        df = reduce(_fraction_gcd, rest)
        if df > best_df:
            best, best_df = name, df
    return best


# ---------------------------------------------------------------------------
# field container
# ---------------------------------------------------------------------------

def to_spectrum(samples: np.ndarray) -> np.ndarray:
    """Line amplitudes (sqrt W) of a sampled envelope, FFT order."""
    return scipy.fft.ifft(samples)


def from_spectrum(coeffs: np.ndarray) -> np.ndarray:
    return scipy.fft.fft(coeffs)


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    """Slowly varying field on a grid; ``|A|**2`` is power in watts."""

    samples: np.ndarray
    grid: SimulationGrid
    reference_frequency: float = 0.0  # absolute optical frequency of offset 0
    z_position: float = 0.0

    def __post_init__(self):
        a = np.array(self.samples, dtype=np.complex128)
        if a.shape != (self.grid.n_samples,):
            raise ConfigurationError(
                f"envelope has {a.size} samples, grid expects {self.grid.n_samples}"
            )
        a.flags.writeable = False
        object.__setattr__(self, "samples", a)

    @classmethod
    def from_spectrum(cls, coeffs, grid, **kw) -> "ComplexEnvelope":
        """Build from line amplitudes; ``.spectrum`` returns them verbatim."""
        c = np.array(coeffs, dtype=np.complex128)
        env = cls(from_spectrum(c), grid, **kw)
        c.flags.writeable = False
        env.__dict__["spectrum"] = c
        return env

    @cached_property
    def spectrum(self) -> np.ndarray:
        c = to_spectrum(self.samples)
        c.flags.writeable = False
        return c

    def power(self) -> float:
        """Total (time-averaged) power in watts."""
        a = self.samples
        return float(np.mean(a.real**2 + a.imag**2))

    def line(self, freq) -> complex:
        return complex(self.spectrum[self.grid.index(freq)])

    def line_power(self, freq) -> float:
        return abs(self.line(freq)) ** 2

    def line_phase(self, freq) -> float:
        return float(np.angle(self.line(freq)))

    def replace(self, samples=None, **kw) -> "ComplexEnvelope":
        kw.setdefault("reference_frequency", self.reference_frequency)
        kw.setdefault("z_position", self.z_position)
        return ComplexEnvelope(self.samples if samples is None else samples, self.grid, **kw)

    def __add__(self, other: "ComplexEnvelope") -> "ComplexEnvelope":
        if other.grid != self.grid:
            raise ConfigurationError("cannot add envelopes on different grids")
        return self.replace(self.samples + other.samples)


# ---------------------------------------------------------------------------
# fiber
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberParams:
    """Highly nonlinear fiber constants in SI units.

    ``alpha`` is the natural power attenuation coefficient (1/m); the beta
    terms are dispersion derivatives at the pump frequency.
    """

    length: float  # m
    gamma: float  # 1/(W m)
    alpha: float = 0.0  # 1/m
    beta2: float = 0.0  # s^2/m
    beta3: float = 0.0  # s^3/m
    beta4: float = 0.0  # s^4/m
    zdw: float | None = None  # m
    dispersion_slope: float = 0.0  # s/m^3

    def __post_init__(self):
        for name in ("length", "gamma", "alpha"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError(f"fiber {name}={v!r} must be finite and >= 0")
        for name in ("beta2", "beta3", "beta4"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"fiber {name} must be finite")

    @property
    def loss_db(self) -> float:
        """Total passive loss over the fiber length, in dB."""
        return per_m_to_db_per_km(self.alpha) * self.length / 1000.0

    def with_(self, **kw) -> "FiberParams":
        return replace(self, **kw)
