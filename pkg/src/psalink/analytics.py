"""Closed-form three-wave theory of the degenerate-pump PSA.

Used as the independent reference for the split-step engine and to seed the
phase lock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import SPEED_OF_LIGHT, FiberParams

# below this |g^2| L^2 the hyperbolic/trigonometric forms switch to series
_SERIES_LIMIT = 1e-6


class ModulationFormat(str, Enum):
    AM = "AM"
    PM = "PM"


@dataclass(frozen=True)
class ThreeWaveParams:
    pump_power: float  # W
    gamma: float  # 1/(W m)
    length: float  # m
    delta_beta: float = 0.0  # 1/m
    theta: float = 0.0  # rad

    @property
    def kappa(self) -> float:
        """Total phase mismatch, linear plus nonlinear."""
        return 2.0 * self.gamma * self.pump_power + self.delta_beta

    @property
    def g_squared(self) -> float:
        return (self.gamma * self.pump_power) ** 2 - (self.kappa / 2.0) ** 2


@dataclass(frozen=True)
class ThetaOptimum:
    theta_max: float
    gain_max: float
    theta_min: float
    gain_min: float
    flat: bool = False


@dataclass(frozen=True)
class SidebandPhase:
    order: int
    format: ModulationFormat
    theta: float


def delta_beta(fiber: FiberParams, detuning: float) -> float:
    """Linear phase mismatch beta_s + beta_i - 2 beta_p for a symmetric pair.

    ``detuning`` is the signal-pump angular frequency offset (rad/s). Odd
    dispersion orders cancel between signal and idler.
    """
    dw2 = detuning * detuning
    return fiber.beta2 * dw2 + fiber.beta4 * dw2 * dw2 / 12.0


def beta3_from_slope(slope: float, wavelength: float) -> float:
    """Third-order dispersion (s^3/m) from the dispersion slope at the ZDW.

    ``slope`` is in s/m^3 (1 ps/(nm^2 km) = 1e3 s/m^3).
    """
    return (wavelength**2 / (2.0 * math.pi * SPEED_OF_LIGHT)) ** 2 * slope


def _propagators(g2: float, length: float) -> tuple[float, float]:
    """Return ``(sinh(gL)/g, cosh(gL))`` for either sign of ``g**2``."""
    x = g2 * length * length
    if abs(x) < _SERIES_LIMIT:
        return length * (1.0 + x / 6.0 + x * x / 120.0), 1.0 + x / 2.0 + x * x / 24.0
    if g2 > 0:
        g = math.sqrt(g2)
        return math.sinh(g * length) / g, math.cosh(g * length)
    g = math.sqrt(-g2)
    return math.sin(g * length) / g, math.cos(g * length)


def _gain_coefficients(pump_power, gamma, length, dbeta):
    # G(theta) = a + b cos(theta) + c sin(theta); sinh^2(gL) is written as
    # g^2 (sinh(gL)/g)^2 so nothing is divided by g^2
    gp = gamma * pump_power
    kappa = 2.0 * gp + dbeta
    g2 = gp * gp - kappa * kappa / 4.0
    s, c = _propagators(g2, length)
    a = 1.0 + (g2 + (kappa * kappa + 4.0 * gp * gp) / 4.0) * s * s
    b = kappa * gp * s * s
    cc = 2.0 * gp * s * c
    return a, b, cc


def psa_gain(p: ThreeWaveParams) -> float:
    """Small-signal power gain of signal (and idler) in a lossless fiber."""
    a, b, c = _gain_coefficients(p.pump_power, p.gamma, p.length, p.delta_beta)
    return max(a + b * math.cos(p.theta) + c * math.sin(p.theta), 0.0)


def psa_gain_curve(p: ThreeWaveParams, thetas) -> np.ndarray:
    """Vectorised ``psa_gain`` over an array of relative phases."""
    a, b, c = _gain_coefficients(p.pump_power, p.gamma, p.length, p.delta_beta)
    thetas = np.asarray(thetas, dtype=float)
    return np.maximum(a + b * np.cos(thetas) + c * np.sin(thetas), 0.0)


def theta_opt(p: ThreeWaveParams, method: str = "closed", resolution: float = 1e-3) -> ThetaOptimum:
    """Relative phases of maximum and minimum gain.

    The gain is exactly sinusoidal in theta, so the closed form applies for
    every parameter set; ``method="scan"`` brute-forces a grid of spacing
    ``resolution`` instead (``p.theta`` is ignored either way).
    """
    if p.gamma * p.pump_power * p.length == 0.0:
        return ThetaOptimum(0.0, 1.0, 0.0, 1.0, flat=True)
    a, b, c = _gain_coefficients(p.pump_power, p.gamma, p.length, p.delta_beta)
    if method == "closed":
        amp = math.hypot(b, c)
        tmax = math.atan2(c, b) % (2.0 * math.pi)
        tmin = (tmax + math.pi) % (2.0 * math.pi)
        return ThetaOptimum(tmax, a + amp, tmin, max(a - amp, 0.0))
    if method == "scan":
        n = int(math.ceil(2.0 * math.pi / resolution))
        thetas = np.arange(n) * (2.0 * math.pi / n)
        g = psa_gain_curve(p, thetas)
        i, j = int(np.argmax(g)), int(np.argmin(g))
        return ThetaOptimum(float(thetas[i]), float(g[i]), float(thetas[j]), float(g[j]))
    raise ValueError(f"unknown method {method!r}")


def sideband_phase(fmt: ModulationFormat | str, order: int, tone_phase: float = 0.0) -> SidebandPhase:
    """Phase of a first-order sideband relative to its carrier.

    ``order=+1`` is the line at carrier - Omega, ``order=-1`` the line at
    carrier + Omega (the modulation factor multiplies ``exp(-i w t)``).
    """
    fmt = ModulationFormat(fmt)
    if order not in (1, -1):
        raise ValueError("only first-order sidebands (order +/-1) have tabulated phases")
    base = -math.pi if fmt is ModulationFormat.AM else math.pi / 2.0
    return SidebandPhase(order, fmt, base + order * tone_phase)


def relative_phase_relation(fmt: ModulationFormat | str, theta00: float) -> float:
    """Relative phase of the first-order sideband pair given that of the carriers."""
    fmt = ModulationFormat(fmt)
    plus = sideband_phase(fmt, 1, 0.0).theta
    minus = sideband_phase(fmt, -1, 0.0).theta
    return theta00 + plus + minus
