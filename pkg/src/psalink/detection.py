"""Receiver chain: band filter, loss, square-law detection, RF analysis, SFDR."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
import scipy.fft

from .core import ELECTRON_CHARGE, ComplexEnvelope, SimulationGrid, w_to_dbm
from .errors import ConfigurationError, FittingError

BELOW_FLOOR_DBM = -300.0


@dataclass(frozen=True)
class DetectorParams:
    """Photodiode and post-fiber optics.

    Only the product ``sensitivity * rf_load`` sets the shot-noise floor
    relative to the detected tones; ``sensitivity`` alone sets the DC
    current and hence the absolute floor.
    """

    sensitivity: float = 0.388  # A/W
    rf_load: float = 320.0  # ohm
    post_fiber_loss_db: float = 3.0
    band_hz: tuple | None = None  # (lo, hi) kept by the optical filter
    electron_charge: float = ELECTRON_CHARGE

    def __post_init__(self):
        if not self.sensitivity > 0:
            raise ConfigurationError("detector sensitivity must be positive")
        if not self.rf_load > 0:
            raise ConfigurationError("rf_load must be positive")
        if not self.post_fiber_loss_db >= 0:
            raise ConfigurationError("post-fiber loss must be >= 0 dB")
        if self.band_hz is not None:
            lo, hi = (Fraction(v) for v in self.band_hz)
            object.__setattr__(self, "band_hz", (lo, hi))


def band_filter(env: ComplexEnvelope, keep_band) -> ComplexEnvelope:
    """Ideal rectangular filter keeping offsets in ``[lo, hi]`` (inclusive)."""
    lo, hi = (Fraction(v) for v in keep_band)
    grid = env.grid
    for edge in (lo, hi):
        if (edge / grid.df).denominator != 1:
            raise ConfigurationError(f"filter edge {float(edge):.12g} Hz is off-grid")
    k_lo, k_hi = int(lo / grid.df), int(hi / grid.df)
    k = np.fft.fftfreq(grid.n_samples, 1.0 / grid.n_samples).astype(np.int64)
    mask = (k >= k_lo) & (k <= k_hi)
    if not mask.any():
        raise ConfigurationError(f"filter band [{float(lo):.6g}, {float(hi):.6g}] Hz contains no bins")
    return ComplexEnvelope.from_spectrum(
        np.where(mask, env.spectrum, 0.0), grid,
        reference_frequency=env.reference_frequency, z_position=env.z_position,
    )


def apply_loss(env: ComplexEnvelope, loss_db: float) -> ComplexEnvelope:
    if not loss_db >= 0:
        raise ConfigurationError(f"loss {loss_db!r} dB must be >= 0")
    if loss_db == 0:
        return env
    scale = 10.0 ** (-loss_db / 20.0)
    return ComplexEnvelope.from_spectrum(
        env.spectrum * scale, env.grid,
        reference_frequency=env.reference_frequency, z_position=env.z_position,
    )


@dataclass(frozen=True, eq=False)
class Photocurrent:
    samples: np.ndarray  # A
    grid: SimulationGrid

    @property
    def dc(self) -> float:
        return float(np.mean(self.samples))


def photodetect(env: ComplexEnvelope, det: DetectorParams) -> Photocurrent:
    """Square-law detection ``I = s |A|^2``."""
    a = env.samples
    return Photocurrent(det.sensitivity * (a.real**2 + a.imag**2), env.grid)


@dataclass(frozen=True, eq=False)
class RfSpectrum:
    """One-sided electrical power per bin (W) into ``rf_load``.

    ``power[k]`` is the tone power at ``k*df``; bin 0 holds the DC current.
    """

    power: np.ndarray
    grid: SimulationGrid
    dc_current: float
    rf_load: float

    def index(self, freq) -> int:
        f = Fraction(freq)
        k = f / self.grid.df
        if k.denominator != 1:
            raise ConfigurationError(f"RF frequency {float(f):.12g} Hz is off-grid (no interpolation)")
        k = int(k)
        if not 0 < k < self.power.size:
            raise ConfigurationError(f"RF frequency {float(f):.12g} Hz is outside (0, Nyquist)")
        return k

    def power_w(self, freq) -> float:
        return float(self.power[self.index(freq)])

    def power_dbm(self, freq) -> float:
        return w_to_dbm(self.power_w(freq))


def rf_spectrum(current: Photocurrent, rf_load: float) -> RfSpectrum:
    """Electrical spectrum analyzer: ``P(f) = 2 |I_f|^2 R`` for ``f > 0``."""
    n = current.grid.n_samples
    coeff = scipy.fft.rfft(current.samples) / n
    power = 2.0 * (coeff.real**2 + coeff.imag**2) * rf_load
    dc = float(coeff[0].real)
    power[0] = dc * dc * rf_load
    return RfSpectrum(power, current.grid, dc, rf_load)


@dataclass(frozen=True)
class ToneReport:
    fund1_dbm: float
    fund2_dbm: float
    imd3_1_dbm: float  # 2*W1 - W2
    imd3_2_dbm: float  # 2*W2 - W1
    dc_current: float
    optical_dbm: Mapping[str, float] = field(default_factory=dict)

    @property
    def fundamental_dbm(self) -> float:
        return self.fund1_dbm

    @property
    def imd3_dbm(self) -> float:
        return self.imd3_1_dbm

    @property
    def below_floor(self) -> tuple[str, ...]:
        names = ("fund1_dbm", "fund2_dbm", "imd3_1_dbm", "imd3_2_dbm")
        rf = [n for n in names if getattr(self, n) < BELOW_FLOOR_DBM]
        return tuple(rf) + tuple(k for k, v in self.optical_dbm.items() if v < BELOW_FLOOR_DBM)

    def as_dict(self) -> dict:
        d = {
            "fund1_dbm": self.fund1_dbm,
            "fund2_dbm": self.fund2_dbm,
            "imd3_1_dbm": self.imd3_1_dbm,
            "imd3_2_dbm": self.imd3_2_dbm,
            "dc_current_a": self.dc_current,
        }
        d.update({f"opt_{k}_dbm": v for k, v in self.optical_dbm.items()})
        return d


def extract_tones(
    spectrum: RfSpectrum,
    tone1_hz,
    tone2_hz,
    optical: ComplexEnvelope | None = None,
    optical_lines: Mapping[str, object] | None = None,
) -> ToneReport:
    """Read fundamentals and IMD3 products, one bin each.

    Optical line powers are read from ``optical`` at the named offsets.
    """
    w1, w2 = Fraction(tone1_hz), Fraction(tone2_hz)
    opt = {}
    if optical is not None and optical_lines:
        opt = {name: w_to_dbm(optical.line_power(f)) for name, f in optical_lines.items()}
    return ToneReport(
        fund1_dbm=spectrum.power_dbm(w1),
        fund2_dbm=spectrum.power_dbm(w2),
        imd3_1_dbm=spectrum.power_dbm(2 * w1 - w2),
        imd3_2_dbm=spectrum.power_dbm(2 * w2 - w1),
        dc_current=spectrum.dc_current,
        optical_dbm=opt,
    )


def shot_noise_floor(dc_current: float, rf_load: float, electron_charge: float = ELECTRON_CHARGE) -> float:
    """Shot-noise density ``2 q I R`` in dBm/Hz (``-inf`` for zero current)."""
    if dc_current < 0:
        raise ConfigurationError("dc current must be >= 0")
    if dc_current == 0:
        return -math.inf
    return 10.0 * math.log10(2.0 * electron_charge * dc_current * rf_load / 1e-3)


def detect(env: ComplexEnvelope, det: DetectorParams, band) -> tuple[ComplexEnvelope, RfSpectrum]:
    """Filter, attenuate and detect; returns the detected field and RF spectrum."""
    out = apply_loss(band_filter(env, band), det.post_fiber_loss_db)
    return out, rf_spectrum(photodetect(out, det), det.rf_load)


# ---------------------------------------------------------------------------
# SFDR
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SfdrReport:
    noise_floor_dbm_hz: float
    fund_slope: float  # free least-squares slope in the window
    fund_intercept: float  # intercept of the slope-1 line
    imd3_slope: float
    imd3_intercept: float  # intercept of the slope-3 line
    oip3_dbm: float
    iip3_dbm: float
    sfdr_db: float  # dB Hz^(2/3), quoted for 1 Hz
    window: tuple[float, float]
    n_points: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _slope(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(x, y, 1)[0])


def sfdr_from_intercepts(fund_intercept: float, imd3_intercept: float, floor: float) -> tuple[float, float, float]:
    """Return ``(iip3, oip3, sfdr)`` for slope-1 and slope-3 lines."""
    iip3 = (fund_intercept - imd3_intercept) / 2.0
    oip3 = iip3 + fund_intercept
    return iip3, oip3, 2.0 / 3.0 * (oip3 - floor)


def compute_sfdr(
    sweep: Sequence[tuple[float, float, float]],
    floor: float,
    *,
    tolerance: float = 0.1,
    min_points: int = 4,
) -> SfdrReport:
    """Fixed-slope SFDR from a two-tone input-power sweep.

    Parameters
    ----------
    sweep : sequence of (input_dbm, fundamental_dbm, imd3_dbm)
    floor : float
        Noise floor (dBm/Hz).
    tolerance : float
        Allowed deviation of the free-fit slopes from 1 and 3 inside the
        fitting window.
    min_points : int

    Notes
    -----
    The window is the largest contiguous run of points (preferring lower
    input power on ties) where both free slopes are within ``tolerance``.
    Intercepts are then fitted with slopes fixed at exactly 1 and 3, and
    ``SFDR = 2/3 (OIP3 - floor)``.
    """
    pts = sorted((float(a), float(b), float(c)) for a, b, c in sweep)
    pts = [p for p in pts if all(math.isfinite(v) and v > BELOW_FLOOR_DBM for v in p[1:])]
    if len(pts) < min_points:
        raise FittingError(f"need >= {min_points} points above the numerical floor, got {len(pts)}")
    x = np.array([p[0] for p in pts])
    yf = np.array([p[1] for p in pts])
    yi = np.array([p[2] for p in pts])
    n = len(pts)
    measured = []
    for size in range(n, min_points - 1, -1):
        for start in range(0, n - size + 1):
            sl = slice(start, start + size)
            sf, si = _slope(x[sl], yf[sl]), _slope(x[sl], yi[sl])
            if size == n or start == 0:
                measured.append((size, round(sf, 3), round(si, 3)))
            if abs(sf - 1.0) <= tolerance and abs(si - 3.0) <= tolerance:
                a = float(np.mean(yf[sl] - x[sl]))
                b = float(np.mean(yi[sl] - 3.0 * x[sl]))
                iip3, oip3, sfdr = sfdr_from_intercepts(a, b, floor)
                return SfdrReport(floor, sf, a, si, b, oip3, iip3, sfdr, (float(x[start]), float(x[start + size - 1])), size)
    raise FittingError(
        "no window with fundamental slope 1 and IMD3 slope 3 within "
        f"+/-{tolerance}; measured (points, fund, imd3) from the lowest input: {measured}"
    )
