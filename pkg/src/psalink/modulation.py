"""Two-tone modulators and assembly of the pump + signal + idler input field.

All modulators are evaluated in closed time-domain form. With the envelope
convention of :mod:`psalink.core` (a line at offset ``f`` multiplies
``exp(-2j*pi*f*T)``), the factor ``exp(1j*m*Omega*T)`` of a modulation
expansion lands on the line at ``carrier - m*Omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np
from scipy.special import jv

from .core import ComplexEnvelope, SimulationGrid, dbm_to_w, exact_hz, to_spectrum
from .errors import ConfigurationError

# lines whose Bessel weight falls below this (relative) are ignored when
# checking that the modulation fits inside the grid bandwidth
_SIDEBAND_FLOOR = 1e-17
# carrier transmission (power, per unit input) below which theta is undefined
_CARRIER_FLOOR = 1e-24


class ModulatorKind(str, Enum):
    STANDARD_MZM = "standard_mzm"
    PHASE_MODULATOR = "phase_modulator"
    LINEARIZED = "linearized_first_order"


@dataclass(frozen=True)
class ModulatorDrive:
    """Two equal RF tones driving a push-pull MZM or a phase modulator.

    Parameters
    ----------
    v_pi : float
        Half-wave voltage (V).
    v_dc : float
        DC bias (V); sets ``phi = pi*v_dc/v_pi`` unless ``bias_phase`` is given.
    rf_power_dbm : float
        Power of *one* tone into ``rf_load`` (dBm); ``-inf`` means undriven.
    tone1_hz, tone2_hz : Fraction
        RF frequencies, exact multiples of 1 kHz.
    tone1_phase, tone2_phase : float
        Initial phases of the two tones (rad).
    bias_phase : float, optional
        Direct override of the bias phase ``phi`` (rad).
    rf_load : float
        RF source impedance (ohm).
    """

    v_pi: float = 5.0
    v_dc: float = 1.25
    rf_power_dbm: float = 0.0
    tone1_hz: Fraction = Fraction(1_567_000_000)
    tone2_hz: Fraction = Fraction(1_564_000_000)
    tone1_phase: float = 0.0
    tone2_phase: float = 0.0
    bias_phase: float | None = None
    rf_load: float = 50.0

    def __post_init__(self):
        if not (self.v_pi > 0 and math.isfinite(self.v_pi)):
            raise ConfigurationError(f"v_pi={self.v_pi!r} must be positive")
        if not self.rf_load > 0:
            raise ConfigurationError("rf_load must be positive")
        if math.isnan(self.rf_power_dbm) or self.rf_power_dbm == math.inf:
            raise ConfigurationError(f"rf_power_dbm={self.rf_power_dbm!r} is not a valid power")
        object.__setattr__(self, "tone1_hz", exact_hz(self.tone1_hz, "tone1_hz"))
        object.__setattr__(self, "tone2_hz", exact_hz(self.tone2_hz, "tone2_hz"))
        if self.tone1_hz <= 0 or self.tone2_hz <= 0:
            raise ConfigurationError("RF tone frequencies must be positive")
        if self.tone1_hz == self.tone2_hz:
            raise ConfigurationError("the two RF tones must have distinct frequencies")

    @property
    def v_ac(self) -> float:
        """Peak voltage of each tone (V)."""
        return math.sqrt(2.0 * self.rf_load * dbm_to_w(self.rf_power_dbm))

    @property
    def zeta(self) -> float:
        return math.pi * self.v_ac / self.v_pi

    @property
    def phi(self) -> float:
        if self.bias_phase is not None:
            return float(self.bias_phase)
        return math.pi * self.v_dc / self.v_pi

    def with_rf_power(self, rf_power_dbm: float) -> "ModulatorDrive":
        return replace(self, rf_power_dbm=float(rf_power_dbm))

    def rf_phase(self, t: np.ndarray) -> np.ndarray:
        """Drive phase ``zeta*(cos(W1 t + p1) + cos(W2 t + p2))``."""
        w1 = 2.0 * math.pi * float(self.tone1_hz)
        w2 = 2.0 * math.pi * float(self.tone2_hz)
        return self.zeta * (np.cos(w1 * t + self.tone1_phase) + np.cos(w2 * t + self.tone2_phase))


@dataclass(frozen=True)
class Carrier:
    """Unmodulated optical line: power (W), phase (rad), offset (Hz)."""

    power: float
    phase: float = 0.0
    offset_hz: Fraction = Fraction(0)

    def __post_init__(self):
        if not (self.power >= 0 and math.isfinite(self.power)):
            raise ConfigurationError(f"carrier power {self.power!r} must be finite and >= 0")
        object.__setattr__(self, "offset_hz", Fraction(self.offset_hz))

    @property
    def amplitude(self) -> complex:
        return math.sqrt(self.power) * complex(math.cos(self.phase), math.sin(self.phase))


def required_order(zeta: float) -> int:
    """Highest combined sideband order with non-negligible weight.

    A two-tone drive of index ``zeta`` is bounded by a single tone of index
    ``2*zeta``, whose Bessel weights bound every (m, n) line.
    """
    if zeta == 0.0:
        return 0
    m = int(2 * zeta) + 1
    while abs(jv(m, 2.0 * zeta)) > _SIDEBAND_FLOOR:
        m += 1
    return m


def _check_bandwidth(drive: ModulatorDrive, offsets, grid: SimulationGrid) -> None:
    order = required_order(drive.zeta)
    reach = order * max(drive.tone1_hz, drive.tone2_hz)
    for off in offsets:
        edge = abs(Fraction(off)) + reach
        if edge >= grid.nyquist:
            raise ConfigurationError(
                f"modulation sidebands up to order {order} around {float(off):.6g} Hz reach "
                f"{float(edge):.6g} Hz, beyond the grid Nyquist limit {float(grid.nyquist):.6g} Hz"
            )
    for f in (drive.tone1_hz, drive.tone2_hz):
        if not grid.is_on_grid(f):
            raise ConfigurationError(f"RF tone {float(f):.12g} Hz is off-grid")


def _shift(spec: np.ndarray, grid: SimulationGrid, offset) -> np.ndarray:
    # moving a baseband spectrum to an on-grid offset is an exact bin roll
    return np.roll(spec, grid.index(offset))


def _place(baseband: np.ndarray, carrier: Carrier, grid: SimulationGrid) -> ComplexEnvelope:
    spec = _shift(to_spectrum(baseband), grid, carrier.offset_hz) * carrier.amplitude
    return ComplexEnvelope.from_spectrum(spec, grid)


def mzm_transfer(drive: ModulatorDrive, grid: SimulationGrid) -> np.ndarray:
    """Field transfer ``cos(phi + rf_phase(T))`` of the push-pull MZM."""
    return np.cos(drive.phi + drive.rf_phase(grid.t)).astype(np.complex128)


def pm_transfer(drive: ModulatorDrive, grid: SimulationGrid) -> np.ndarray:
    """Field transfer ``exp(1j*rf_phase(T))`` of a phase modulator (no bias)."""
    return np.exp(1j * drive.rf_phase(grid.t))


def mzm_two_tone(carrier: Carrier, drive: ModulatorDrive, grid: SimulationGrid) -> ComplexEnvelope:
    """Push-pull MZM output for a two-tone drive.

    Equal to ``E/2 * (exp(i phi) exp(i x) + exp(-i phi) exp(-i x))`` with
    ``x`` the RF drive phase, i.e. the full double Bessel series.
    """
    _check_bandwidth(drive, [carrier.offset_hz], grid)
    return _place(mzm_transfer(drive, grid), carrier, grid)


def phase_mod_two_tone(carrier: Carrier, drive: ModulatorDrive, grid: SimulationGrid) -> ComplexEnvelope:
    """Phase-modulator output for a two-tone drive; ``v_dc`` is ignored."""
    _check_bandwidth(drive, [carrier.offset_hz], grid)
    return _place(pm_transfer(drive, grid), carrier, grid)


def first_order_lines(carrier_frequency, tone1_hz, tone2_hz) -> list[Fraction]:
    c = Fraction(carrier_frequency)
    w1, w2 = Fraction(tone1_hz), Fraction(tone2_hz)
    return [c, c + w1, c - w1, c + w2, c - w2]


def linearize_first_order(env: ComplexEnvelope, carrier_frequency, tone1_hz, tone2_hz) -> ComplexEnvelope:
    """Keep each carrier and its four first-order sidebands, zero the rest.

    ``carrier_frequency`` may be a single offset or a sequence of offsets.
    Retained lines are copied bit for bit.
    """
    carriers = carrier_frequency if np.iterable(carrier_frequency) else [carrier_frequency]
    keep = np.zeros(env.grid.n_samples, dtype=bool)
    for c in carriers:
        for f in first_order_lines(c, tone1_hz, tone2_hz):
            keep[env.grid.index(f)] = True
    spec = np.where(keep, env.spectrum, 0.0)
    return ComplexEnvelope.from_spectrum(
        spec, env.grid, reference_frequency=env.reference_frequency, z_position=env.z_position
    )


def modulator_baseband(kind: ModulatorKind | str, drive: ModulatorDrive, grid: SimulationGrid) -> np.ndarray:
    """Spectrum of the modulator transfer for a unit carrier at offset 0."""
    kind = ModulatorKind(kind)
    if kind is ModulatorKind.PHASE_MODULATOR:
        return to_spectrum(pm_transfer(drive, grid))
    spec = to_spectrum(mzm_transfer(drive, grid))
    if kind is ModulatorKind.LINEARIZED:
        keep = [grid.index(f) for f in first_order_lines(0, drive.tone1_hz, drive.tone2_hz)]
        out = np.zeros_like(spec)
        out[keep] = spec[keep]
        spec = out
    return spec


# ---------------------------------------------------------------------------
# link input
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkInputPlan:
    """Everything needed to build the field entering the fiber.

    ``combined_signal_idler_power_dbm`` is the total of signal and idler
    including all sidebands; each wave carries half. The pump phase defaults
    to ``-theta/2`` so that signal and idler carriers sit at phase 0; when
    given explicitly, the carriers share ``(theta + 2*pump_phase)/2`` each.
    """

    pump_power_dbm: float = 22.0
    combined_signal_idler_power_dbm: float = -16.0
    theta: float = 0.0
    signal_offset_hz: Fraction = Fraction(20_000_000_000)
    modulator: ModulatorDrive = field(default_factory=ModulatorDrive)
    modulator_kind: ModulatorKind = ModulatorKind.STANDARD_MZM
    pump_phase: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "signal_offset_hz", exact_hz(self.signal_offset_hz, "signal_offset_hz"))
        object.__setattr__(self, "modulator_kind", ModulatorKind(self.modulator_kind))
        if self.signal_offset_hz <= 0:
            raise ConfigurationError("signal offset must be positive")
        for name in ("pump_power_dbm", "combined_signal_idler_power_dbm"):
            v = getattr(self, name)
            if math.isnan(v) or v == math.inf:
                raise ConfigurationError(f"{name}={v!r} is not a valid power")

    @property
    def pump_power(self) -> float:
        return dbm_to_w(self.pump_power_dbm)

    @property
    def signal_idler_power(self) -> float:
        return dbm_to_w(self.combined_signal_idler_power_dbm)

    @property
    def pump_on(self) -> bool:
        return self.pump_power > 0

    @property
    def resolved_pump_phase(self) -> float:
        return -self.theta / 2.0 if self.pump_phase is None else float(self.pump_phase)

    @property
    def carrier_phase(self) -> float:
        """Phase given to both the signal and the idler carrier."""
        return (self.theta + 2.0 * self.resolved_pump_phase) / 2.0

    def with_(self, **kw) -> "LinkInputPlan":
        return replace(self, **kw)

    def tone_frequencies(self) -> dict[str, Fraction]:
        d = self.modulator
        return {"signal_offset_hz": self.signal_offset_hz, "tone1_hz": d.tone1_hz, "tone2_hz": d.tone2_hz}

    def named_lines(self) -> dict[str, Fraction]:
        """Offsets of the lines that tone reports refer to by name."""
        s = self.signal_offset_hz
        w1, w2 = self.modulator.tone1_hz, self.modulator.tone2_hz
        lines = {"pump": Fraction(0)}
        for wave, c in (("signal", s), ("idler", -s)):
            lines[wave] = c
            lines[f"{wave}_fund1_lo"] = c - w1
            lines[f"{wave}_fund1_hi"] = c + w1
            lines[f"{wave}_fund2_lo"] = c - w2
            lines[f"{wave}_fund2_hi"] = c + w2
            lines[f"{wave}_imd3_lo"] = c - (2 * w1 - w2)
            lines[f"{wave}_imd3_hi"] = c + (2 * w1 - w2)
            lines[f"{wave}_imd3b_lo"] = c - (2 * w2 - w1)
            lines[f"{wave}_imd3b_hi"] = c + (2 * w2 - w1)
        return lines


def check_collisions(plan: LinkInputPlan, grid: SimulationGrid) -> None:
    """Raise if two named lines of the plan share a grid bin."""
    seen: dict[int, str] = {}
    for name, f in plan.named_lines().items():
        k = grid.index(f)
        if k in seen:
            raise ConfigurationError(f"tone collision: {name} and {seen[k]} both land on {float(f):.12g} Hz")
        seen[k] = name


def synthesize_link_input(plan: LinkInputPlan, grid: SimulationGrid) -> ComplexEnvelope:
    """Build the fiber input: pump at offset 0, modulated signal and idler.

    Signal and idler go through the same modulator, so their sidebands carry
    identical phases. The carrier lines are rotated so that
    ``theta_s + theta_i - 2*theta_p`` equals ``plan.theta`` exactly.
    """
    check_collisions(plan, grid)
    drive = plan.modulator
    s = plan.signal_offset_hz
    _check_bandwidth(drive, [s, -s], grid)

    base = modulator_baseband(plan.modulator_kind, drive, grid)
    norm = float(np.sum(base.real**2 + base.imag**2))
    spec = np.zeros(grid.n_samples, dtype=np.complex128)
    p_wave = plan.signal_idler_power / 2.0
    if p_wave > 0:
        if abs(base[0]) ** 2 <= _CARRIER_FLOOR:
            raise ConfigurationError(
                f"modulator output has no carrier at bias phase {drive.phi:.6g} rad; "
                "the relative phase cannot be defined"
            )
        # rotate so the carrier line has phase 0, then scale to the wave power
        base = base * (np.conj(base[0]) / abs(base[0])) * math.sqrt(p_wave / norm)
        rot = complex(math.cos(plan.carrier_phase), math.sin(plan.carrier_phase))
        spec += _shift(base, grid, s) * rot
        spec += _shift(base, grid, -s) * rot
    if plan.pump_on:
        spec[0] += Carrier(plan.pump_power, plan.resolved_pump_phase).amplitude
    return ComplexEnvelope.from_spectrum(spec, grid)


def measure_theta(env: ComplexEnvelope, signal_offset_hz) -> float:
    """Relative phase ``theta_s + theta_i - 2 theta_p`` of the carriers, in [0, 2pi)."""
    s = Fraction(signal_offset_hz)
    th = env.line_phase(s) + env.line_phase(-s) - 2.0 * env.line_phase(0)
    return th % (2.0 * math.pi)
