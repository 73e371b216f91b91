"""Symmetrized split-step Fourier solver for the scalar NLSE.

Dispersion and loss act on the spectrum, the Kerr phase on the time samples:

    dA/dz = -alpha/2 A + i(b2 w^2/2 + b3 w^3/6 + b4 w^4/24) A + i gamma |A|^2 A

written in the envelope convention of :mod:`psalink.core`, where a line at
angular offset ``w`` multiplies ``exp(-i w T)``.

The inner loop runs in a compiled FFTW kernel when it is available and in
numpy otherwise. Set ``PSALINK_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from types import ModuleType

import numpy as np

from . import _ssfm_py
from .core import ComplexEnvelope, FiberParams
from .errors import ConfigurationError, ConvergenceError, NumericalInstabilityError

log = logging.getLogger(__name__)

try:
    from . import _ssfm_ext
except ImportError:  # pragma: no cover - depends on the build
    _ssfm_ext = None

_BACKENDS: dict[str, ModuleType | None] = {"compiled": _ssfm_ext, "python": _ssfm_py}


def available_backends() -> list[str]:
    return [name for name, mod in _BACKENDS.items() if mod is not None]


def _default_backend() -> str:
    wanted = os.environ.get("PSALINK_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in _BACKENDS:
            raise ConfigurationError(f"PSALINK_BACKEND={wanted!r}; choose from {sorted(_BACKENDS)}")
        if _BACKENDS[wanted] is None:
            log.warning("compiled SSFM kernel requested but not built; using numpy")
            return "python"
        return wanted
    return "compiled" if _ssfm_ext is not None else "python"


BACKEND = _default_backend()


@dataclass(frozen=True)
class StepConfig:
    """Longitudinal discretization.

    Parameters
    ----------
    n_steps : int
        Number of symmetrized steps over the fiber; ``h = L / n_steps``.
    convergence_db : float
        Tolerance on the probe-line gain used by :func:`auto_converge`.
    max_steps : int
        Refinement ceiling for :func:`auto_converge`.
    """

    n_steps: int = 1000
    scheme: str = "symmetrized"
    convergence_db: float = 0.01
    max_steps: int = 2**20

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ConfigurationError(f"n_steps={self.n_steps!r} must be a positive integer")
        if self.scheme != "symmetrized":
            raise ConfigurationError(f"unsupported split-step scheme {self.scheme!r}")
        if not self.convergence_db > 0:
            raise ConfigurationError("convergence tolerance must be positive")
        if self.max_steps < self.n_steps:
            raise ConfigurationError("max_steps must be >= n_steps")


def dispersion_phase(fiber: FiberParams, omega, dz: float):
    """Phase (rad) gained over ``dz`` by a line at angular offset ``omega``."""
    w = np.asarray(omega, dtype=float)
    w2 = w * w
    phase = (fiber.beta2 / 2.0 + fiber.beta3 * w / 6.0 + fiber.beta4 * w2 / 24.0) * w2 * dz
    return float(phase) if phase.ndim == 0 else phase


def _linear_operator(env: ComplexEnvelope, fiber: FiberParams, dz: float) -> np.ndarray:
    # -alpha*dz/2 on the amplitude for a segment of length dz
    return np.exp(1j * dispersion_phase(fiber, env.grid.omega, dz) - fiber.alpha * dz / 2.0)


def ssfm_propagate(
    env: ComplexEnvelope,
    fiber: FiberParams,
    cfg: StepConfig | None = None,
    *,
    backend: str | None = None,
) -> ComplexEnvelope:
    """Propagate ``env`` through the whole fiber.

    Parameters
    ----------
    env : ComplexEnvelope
        Field at the fiber input.
    fiber : FiberParams
    cfg : StepConfig, optional
        Defaults to ``StepConfig()``.
    backend : {"compiled", "python"}, optional
        Override the kernel chosen at import.

    Returns
    -------
    ComplexEnvelope
        Output field, ``z_position`` advanced by ``fiber.length``.

    Raises
    ------
    NumericalInstabilityError
        If the field becomes non-finite; ``.step`` holds the step index.
    """
    cfg = cfg or StepConfig()
    if not np.all(np.isfinite(env.samples)):
        raise NumericalInstabilityError("input envelope contains non-finite samples", step=0)
    length = fiber.length
    z_out = env.z_position + length
    if length == 0.0:
        return env.replace(z_position=z_out)
    if fiber.gamma == 0.0:
        # dispersion and loss commute with themselves: one exact step
        spec = env.spectrum * _linear_operator(env, fiber, length)
        return ComplexEnvelope.from_spectrum(
            spec, env.grid, reference_frequency=env.reference_frequency, z_position=z_out
        )

    name = backend or BACKEND
    kernel = _BACKENDS.get(name)
    if kernel is None:
        raise ConfigurationError(f"SSFM backend {name!r} is not available")
    n = env.grid.n_samples
    h = length / cfg.n_steps
    half = _linear_operator(env, fiber, h / 2.0) / n
    full = half * half * n
    samples = np.array(env.samples, dtype=np.complex128, copy=True)
    failed = kernel.run(samples, half, full, fiber.gamma * h, int(cfg.n_steps))
    if failed >= 0:
        raise NumericalInstabilityError(
            f"field became non-finite at step {failed} of {cfg.n_steps} (h={h:g} m)", step=failed
        )
    return ComplexEnvelope(samples, env.grid, env.reference_frequency, z_out)


def _probe_index(env: ComplexEnvelope) -> int:
    # strongest line at positive offset (the signal carrier in a link input),
    # falling back to the strongest line overall
    p = np.abs(env.spectrum) ** 2
    pos = env.grid.freqs > 0
    if np.any(p[pos] > 0):
        return int(np.flatnonzero(pos)[np.argmax(p[pos])])
    return int(np.argmax(p))


def auto_converge(
    env: ComplexEnvelope,
    fiber: FiberParams,
    cfg: StepConfig | None = None,
    *,
    probe_frequency=None,
    backend: str | None = None,
) -> tuple[ComplexEnvelope, int]:
    """Double the step count until the probe-line gain is stable.

    The probe defaults to the strongest positive-offset line of ``env``.
    Returns the finest output and the step count that produced it.

    Raises
    ------
    ConvergenceError
        If ``cfg.max_steps`` is reached first.
    """
    cfg = cfg or StepConfig()
    k = env.grid.index(probe_frequency) if probe_frequency is not None else _probe_index(env)
    p_in = abs(env.spectrum[k]) ** 2
    if p_in == 0.0:
        raise ConfigurationError("probe line carries no power; cannot measure convergence")

    def gain_db(out: ComplexEnvelope) -> float:
        p = abs(out.spectrum[k]) ** 2
        return 10.0 * math.log10(p / p_in) if p > 0 else -math.inf

    n = cfg.n_steps
    out = ssfm_propagate(env, fiber, StepConfig(n, cfg.scheme, cfg.convergence_db, cfg.max_steps), backend=backend)
    if fiber.gamma == 0.0 or fiber.length == 0.0:
        return out, n
    previous = gain_db(out)
    while 2 * n <= cfg.max_steps:
        n *= 2
        out = ssfm_propagate(env, fiber, StepConfig(n, cfg.scheme, cfg.convergence_db, cfg.max_steps), backend=backend)
        current = gain_db(out)
        change = abs(current - previous)
        log.debug("auto_converge: n_steps=%d gain=%.6f dB change=%.2e dB", n, current, change)
        if change < cfg.convergence_db:
            return out, n
        previous = current
    raise ConvergenceError(
        f"probe gain not stable to {cfg.convergence_db} dB within {cfg.max_steps} steps"
    )
