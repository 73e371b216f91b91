"""Experiment orchestration: locked PSA-on/off sweeps, Theta scans, outputs.

A sweep point builds the fiber input from the link plan, propagates it with
and without the pump, detects the signal band and reports RF tones and
optical line powers. The relative phase is locked by maximizing the output
signal-carrier power, standing in for the experimental servo.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__
from .analytics import ThreeWaveParams, delta_beta, psa_gain_curve, theta_opt
from .core import ComplexEnvelope, FiberParams, SimulationGrid, build_grid, db_to_ratio, w_to_dbm
from .detection import (
    DetectorParams,
    SfdrReport,
    ToneReport,
    compute_sfdr,
    detect,
    extract_tones,
    shot_noise_floor,
)
from .errors import ConfigurationError, OutputError, PsaLinkError
from .modulation import LinkInputPlan, ModulatorKind, required_order, synthesize_link_input
from .propagation import BACKEND, StepConfig, auto_converge, ssfm_propagate

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

# margin beyond the modulation sidebands for fiber-generated mixing products
_FWM_MARGIN_ORDERS = 4


class SweepAxis(str, Enum):
    INPUT_RF_POWER = "input_rf_power"
    INPUT_SIGNAL_POWER = "input_signal_power"
    THETA = "theta"


class PsaState(str, Enum):
    ON = "on"
    OFF = "off"
    BOTH = "both"


@dataclass(frozen=True)
class LockSettings:
    """Relative-phase control.

    Parameters
    ----------
    relock : bool
        Re-optimize Theta at every sweep point (servo tracking). When False,
        Theta is locked once at the first point, or taken from ``theta``.
    theta : float, optional
        Fixed Theta (rad) used instead of locking when ``relock`` is False.
    xatol : float
        Absolute Theta tolerance of the bounded search (rad).
    fit_tolerance : float
        Relative mismatch allowed between the three-point sinusoid
        prediction and the measured peak before falling back to a search.
    """

    relock: bool = True
    theta: float | None = None
    xatol: float = 2e-3
    fit_tolerance: float = 1e-4


@dataclass(frozen=True)
class SweepSpec:
    axis: SweepAxis = SweepAxis.INPUT_RF_POWER
    values: tuple[float, ...] = tuple(float(v) for v in range(-10, 26))
    psa_state: PsaState = PsaState.BOTH

    def __post_init__(self):
        object.__setattr__(self, "axis", SweepAxis(self.axis))
        object.__setattr__(self, "psa_state", PsaState(self.psa_state))
        vals = tuple(sorted({float(v) for v in self.values}))
        if not vals:
            raise ConfigurationError("sweep range is empty")
        if not all(math.isfinite(v) for v in vals):
            raise ConfigurationError("sweep values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_range(cls, axis, start: float, stop: float, step: float, psa_state="both") -> "SweepSpec":
        if step <= 0:
            raise ConfigurationError("sweep step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        if n < 1:
            raise ConfigurationError(f"sweep range [{start}, {stop}] is empty")
        return cls(axis, tuple(round(start + i * step, 12) for i in range(n)), psa_state)


@dataclass(frozen=True)
class ExperimentConfig:
    plan: LinkInputPlan = field(default_factory=LinkInputPlan)
    fiber: FiberParams = field(default_factory=lambda: FiberParams(1000.0, 11.3e-3))
    detector: DetectorParams = field(default_factory=DetectorParams)
    steps: StepConfig = field(default_factory=lambda: StepConfig(n_steps=16))
    sweep: SweepSpec = field(default_factory=SweepSpec)
    lock: LockSettings = field(default_factory=LockSettings)
    auto_steps: bool = True
    n_samples: int | None = None
    name: str = "run"

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    def plan_at(self, value: float) -> LinkInputPlan:
        axis = self.sweep.axis
        if axis is SweepAxis.INPUT_RF_POWER:
            return self.plan.with_(modulator=self.plan.modulator.with_rf_power(value))
        if axis is SweepAxis.INPUT_SIGNAL_POWER:
            return self.plan.with_(combined_signal_idler_power_dbm=value)
        return self.plan.with_(theta=value)

    def max_rf_power_dbm(self) -> float:
        if self.sweep.axis is SweepAxis.INPUT_RF_POWER:
            return max(self.sweep.values)
        return self.plan.modulator.rf_power_dbm

    def grid(self) -> SimulationGrid:
        drive = self.plan.modulator.with_rf_power(self.max_rf_power_dbm())
        reach = (required_order(drive.zeta) + _FWM_MARGIN_ORDERS) * max(drive.tone1_hz, drive.tone2_hz)
        max_offset = self.plan.signal_offset_hz + reach
        return build_grid(self.plan.tone_frequencies(), max_offset, n_samples=self.n_samples)

    def band(self) -> tuple[Fraction, Fraction]:
        if self.detector.band_hz is not None:
            return self.detector.band_hz
        s = self.plan.signal_offset_hz
        return (s / 2, 3 * s / 2)


# ---------------------------------------------------------------------------
# single-point evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LockResult:
    theta: float
    signal_power: float  # output signal-carrier power (W)
    evaluations: int
    method: str


def _signal_output(plan: LinkInputPlan, grid, fiber, steps) -> float:
    out = ssfm_propagate(synthesize_link_input(plan, grid), fiber, steps)
    return out.line_power(plan.signal_offset_hz)


def lock_theta(
    plan: LinkInputPlan,
    grid: SimulationGrid,
    fiber: FiberParams,
    steps: StepConfig,
    settings: LockSettings = LockSettings(),
) -> LockResult:
    """Theta maximizing the output signal-carrier power.

    Three equally spaced probes fix a sinusoid, which is exact without pump
    depletion. The predicted peak is accepted if a fourth propagation
    confirms it; otherwise a six-point scan brackets the maximum and a
    bounded scalar search refines it.
    """
    if not plan.pump_on:
        raise ConfigurationError("cannot lock the relative phase without a pump")
    cache: dict[float, float] = {}

    def power(theta: float) -> float:
        theta = float(theta) % TWO_PI
        if theta not in cache:
            cache[theta] = _signal_output(plan.with_(theta=theta), grid, fiber, steps)
        return cache[theta]

    probes = [0.0, TWO_PI / 3, 2 * TWO_PI / 3]
    p = np.array([power(t) for t in probes])
    m = np.column_stack([np.ones(3), np.cos(probes), np.sin(probes)])
    a, b, c = np.linalg.solve(m, p)
    theta_fit = math.atan2(c, b) % TWO_PI
    predicted = a + math.hypot(b, c)
    measured = power(theta_fit)
    if abs(measured - predicted) <= settings.fit_tolerance * predicted and measured >= p.max():
        return LockResult(theta_fit, measured, len(cache), "sinusoid")

    coarse = [i * TWO_PI / 6 for i in range(6)]
    candidates = {t: power(t) for t in coarse}
    candidates[theta_fit] = measured
    best = max(candidates, key=candidates.get)
    res = minimize_scalar(
        lambda t: -power(t),
        bounds=(best - TWO_PI / 6, best + TWO_PI / 6),
        method="bounded",
        options={"xatol": settings.xatol},
    )
    theta = float(res.x) % TWO_PI
    if power(theta) < candidates[best]:
        theta = best % TWO_PI
    return LockResult(theta, power(theta), len(cache), "search")


@dataclass(frozen=True)
class PointResult:
    """PSA-on/off outcome at one sweep value; gains are derived, not stored."""

    axis_value: float
    rf_power_dbm: float
    signal_power_dbm: float
    theta: float | None
    n_steps: int
    fiber_loss_db: float
    optical_in_dbm: dict
    on: ToneReport | None = None
    off: ToneReport | None = None
    lock_method: str | None = None

    @property
    def rf_gain_fund_db(self) -> float:
        return self.on.fund1_dbm - self.off.fund1_dbm

    @property
    def rf_gain_imd3_db(self) -> float:
        return self.on.imd3_1_dbm - self.off.imd3_1_dbm

    def optical_gain_db(self, line: str) -> float:
        """PSA-on line gain with the passive fiber loss taken out."""
        return self.optical_net_db("on", line) + self.fiber_loss_db

    def optical_net_db(self, state: str, line: str) -> float:
        """Output over input line power for one run, fiber loss included."""
        rep = self.on if state == "on" else self.off
        p_in = self.optical_in_dbm[line]
        if rep is None or not math.isfinite(p_in):
            return math.nan
        return rep.optical_dbm[line] - p_in


def _report(env_out: ComplexEnvelope, cfg: ExperimentConfig, lines) -> ToneReport:
    _, spec = detect(env_out, cfg.detector, cfg.band())
    d = cfg.plan.modulator
    return extract_tones(spec, d.tone1_hz, d.tone2_hz, optical=env_out, optical_lines=lines)


REPORTED_LINES = ("pump", "signal", "signal_fund1_lo", "signal_imd3_lo", "signal_fund1_hi", "signal_imd3_hi")


def evaluate_point(
    cfg: ExperimentConfig,
    value: float,
    n_steps: int,
    theta: float | None = None,
    grid: SimulationGrid | None = None,
) -> PointResult:
    """Run the PSA-on and/or PSA-off propagation for one sweep value.

    ``theta=None`` locks the relative phase at this point.
    """
    grid = grid or cfg.grid()
    steps = replace(cfg.steps, n_steps=n_steps)
    plan = cfg.plan_at(value)
    all_lines = plan.named_lines()
    lines = {k: all_lines[k] for k in REPORTED_LINES}
    state = cfg.sweep.psa_state
    on = off = None
    method = None

    if state in (PsaState.ON, PsaState.BOTH) and plan.pump_on:
        if theta is None:
            lk = lock_theta(plan, grid, cfg.fiber, steps, cfg.lock)
            theta, method = lk.theta, lk.method
        plan = plan.with_(theta=theta)
        on = _report(ssfm_propagate(synthesize_link_input(plan, grid), cfg.fiber, steps), cfg, lines)
    if state in (PsaState.OFF, PsaState.BOTH) or not plan.pump_on:
        dark = plan.with_(pump_power_dbm=-math.inf)
        off = _report(ssfm_propagate(synthesize_link_input(dark, grid), cfg.fiber, steps), cfg, lines)

    # input line powers, pump reported at its on-state level
    env_in = synthesize_link_input(plan, grid)
    optical_in = {k: w_to_dbm(env_in.line_power(f)) for k, f in lines.items()}
    return PointResult(
        axis_value=float(value),
        rf_power_dbm=plan.modulator.rf_power_dbm,
        signal_power_dbm=plan.combined_signal_idler_power_dbm,
        theta=theta,
        n_steps=n_steps,
        fiber_loss_db=cfg.fiber.loss_db,
        optical_in_dbm=optical_in,
        on=on,
        off=off,
        lock_method=method,
    )


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepResult:
    axis: SweepAxis
    points: tuple[PointResult, ...]
    grid: dict
    n_steps: int
    backend: str
    modulator_kind: str

    @property
    def values(self) -> np.ndarray:
        return np.array([p.axis_value for p in self.points])

    def series(self, fn: Callable[[PointResult], float]) -> np.ndarray:
        return np.array([fn(p) for p in self.points], dtype=float)

    def _report(self, p: PointResult, state: str) -> ToneReport:
        rep = p.on if state == "on" else p.off
        if rep is None:
            raise ConfigurationError(f"sweep has no PSA-{state} results")
        return rep

    def floor(self, state: str, rf_load: float) -> float:
        """Shot-noise floor from the mean DC current over the sweep."""
        dc = float(np.mean([self._report(p, state).dc_current for p in self.points]))
        return shot_noise_floor(dc, rf_load)

    def sfdr(self, state: str, rf_load: float, **kw) -> SfdrReport:
        if self.axis is not SweepAxis.INPUT_RF_POWER:
            raise ConfigurationError("SFDR needs an input-RF-power sweep")
        pts = [(p.axis_value, self._report(p, state).fund1_dbm, self._report(p, state).imd3_1_dbm) for p in self.points]
        return compute_sfdr(pts, self.floor(state, rf_load), **kw)

    def point(self, value: float) -> PointResult:
        for p in self.points:
            if math.isclose(p.axis_value, value, abs_tol=1e-9):
                return p
        raise KeyError(value)


def _eval_job(args):
    cfg, value, n_steps, theta, grid = args
    try:
        return evaluate_point(cfg, value, n_steps, theta, grid)
    except PsaLinkError as exc:
        raise type(exc)(f"sweep point {cfg.sweep.axis.value}={value}: {exc}") from exc


def resolve_steps(cfg: ExperimentConfig, grid: SimulationGrid | None = None) -> int:
    """Step count for a sweep.

    With ``auto_steps`` the count is refined by step doubling at the most
    demanding point (largest axis value, phase locked), then reused for
    every point so the whole sweep shares one discretization.
    """
    if not cfg.auto_steps or cfg.fiber.gamma == 0.0 or cfg.fiber.length == 0.0:
        return cfg.steps.n_steps
    grid = grid or cfg.grid()
    plan = cfg.plan_at(max(cfg.sweep.values)) if cfg.sweep.axis is not SweepAxis.THETA else cfg.plan
    if plan.pump_on:
        theta = lock_theta(plan, grid, cfg.fiber, cfg.steps, cfg.lock).theta
        plan = plan.with_(theta=theta)
    _, n = auto_converge(synthesize_link_input(plan, grid), cfg.fiber, cfg.steps,
                         probe_frequency=plan.signal_offset_hz)
    log.info("step count converged at %d", n)
    return n


def _run_sweep(cfg: ExperimentConfig, jobs: int = 1, n_steps: int | None = None) -> SweepResult:
    grid = cfg.grid()
    n = n_steps or resolve_steps(cfg, grid)
    values = cfg.sweep.values
    fixed = None
    if not cfg.lock.relock and cfg.sweep.psa_state is not PsaState.OFF:
        if cfg.lock.theta is not None:
            fixed = float(cfg.lock.theta)
        else:
            first = cfg.plan_at(values[0])
            fixed = lock_theta(first, grid, cfg.fiber, replace(cfg.steps, n_steps=n), cfg.lock).theta
    tasks = [(cfg, v, n, fixed, grid) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_eval_job, tasks))
    else:
        points = [_eval_job(t) for t in tasks]
    points.sort(key=lambda p: p.axis_value)
    return SweepResult(cfg.sweep.axis, tuple(points), grid.describe(), n, BACKEND, cfg.plan.modulator_kind.value)


def run_rf_power_sweep(cfg: ExperimentConfig, jobs: int = 1, n_steps: int | None = None) -> SweepResult:
    """Fundamental and IMD3 RF powers versus per-tone input RF power."""
    if cfg.sweep.axis is not SweepAxis.INPUT_RF_POWER:
        cfg = cfg.with_(sweep=replace(cfg.sweep, axis=SweepAxis.INPUT_RF_POWER))
    return _run_sweep(cfg, jobs, n_steps)


def run_signal_power_sweep(cfg: ExperimentConfig, jobs: int = 1, n_steps: int | None = None) -> SweepResult:
    """Tone powers and optical gains versus combined signal+idler input power."""
    if cfg.sweep.axis is not SweepAxis.INPUT_SIGNAL_POWER:
        cfg = cfg.with_(sweep=replace(cfg.sweep, axis=SweepAxis.INPUT_SIGNAL_POWER))
    return _run_sweep(cfg, jobs, n_steps)


@dataclass(frozen=True)
class ThetaScanResult:
    thetas: np.ndarray
    signal_gain_db: np.ndarray  # loss-normalized SSFM gain of the signal carrier
    analytic_gain_db: np.ndarray  # lossless three-wave theory
    theta_lock: float
    theta_analytic: float
    n_steps: int
    grid: dict
    backend: str


def run_theta_scan(
    cfg: ExperimentConfig,
    thetas: Sequence[float] | None = None,
    jobs: int = 1,
    n_steps: int | None = None,
) -> ThetaScanResult:
    """Signal gain versus relative phase, plus the locked and analytic optima."""
    plan = cfg.plan
    if not plan.pump_on:
        raise ConfigurationError("a Theta scan needs the pump on")
    if thetas is None:
        thetas = cfg.sweep.values if cfg.sweep.axis is SweepAxis.THETA else np.linspace(0, TWO_PI, 17)[:-1]
    thetas = np.asarray(sorted(float(t) for t in thetas))
    grid = cfg.grid()
    scan_cfg = cfg.with_(sweep=SweepSpec(SweepAxis.THETA, tuple(thetas), PsaState.ON))
    n = n_steps or resolve_steps(scan_cfg, grid)
    steps = replace(cfg.steps, n_steps=n)

    s = plan.signal_offset_hz
    p_in = synthesize_link_input(plan, grid).line_power(s)
    transmission = math.exp(-cfg.fiber.alpha * cfg.fiber.length)
    tasks = [plan.with_(theta=float(t)) for t in thetas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            p_out = list(pool.map(_signal_output, tasks, [grid] * len(tasks), [cfg.fiber] * len(tasks), [steps] * len(tasks)))
    else:
        p_out = [_signal_output(pl, grid, cfg.fiber, steps) for pl in tasks]
    gain = 10.0 * np.log10(np.array(p_out) / (p_in * transmission))

    three = ThreeWaveParams(plan.pump_power, cfg.fiber.gamma, cfg.fiber.length,
                            delta_beta(cfg.fiber, TWO_PI * float(s)))
    analytic = 10.0 * np.log10(psa_gain_curve(three, thetas))
    lock = lock_theta(plan, grid, cfg.fiber, steps, cfg.lock)
    return ThetaScanResult(thetas, gain, analytic, lock.theta, theta_opt(three).theta_max, n, grid.describe(), BACKEND)


# ---------------------------------------------------------------------------
# outputs
# ---------------------------------------------------------------------------

AXIS_COLUMN = {
    SweepAxis.INPUT_RF_POWER: "input_rf_dbm",
    SweepAxis.INPUT_SIGNAL_POWER: "input_signal_dbm",
    SweepAxis.THETA: "theta_rad",
}


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    return f"{v:.10g}"


def sweep_rows(result: SweepResult) -> tuple[list[str], list[list]]:
    """CSV schema: axis, tone powers (PSA off/on), then gains and diagnostics."""
    header = [AXIS_COLUMN[result.axis], "fund_off", "fund_on", "imd3_off", "imd3_on",
              "imd3b_off", "imd3b_on", "rf_gain_fund_db", "rf_gain_imd3_db",
              "opt_gain_signal_db", "opt_gain_pump_db", "opt_gain_fund_db", "opt_gain_imd3_db",
              "net_signal_on_db", "net_signal_off_db", "dc_on_a", "dc_off_a",
              "theta_lock_rad", "n_steps"]
    rows = []
    for p in result.points:
        on, off = p.on, p.off
        g = (lambda f: f() if on is not None and off is not None else None)
        o = (lambda f: f() if on is not None else None)
        rows.append([
            p.axis_value,
            off.fund1_dbm if off else None, on.fund1_dbm if on else None,
            off.imd3_1_dbm if off else None, on.imd3_1_dbm if on else None,
            off.imd3_2_dbm if off else None, on.imd3_2_dbm if on else None,
            g(lambda: p.rf_gain_fund_db), g(lambda: p.rf_gain_imd3_db),
            o(lambda: p.optical_gain_db("signal")), o(lambda: p.optical_gain_db("pump")),
            o(lambda: p.optical_gain_db("signal_fund1_lo")), o(lambda: p.optical_gain_db("signal_imd3_lo")),
            o(lambda: p.optical_net_db("on", "signal")),
            p.optical_net_db("off", "signal") if off else None,
            on.dc_current if on else None, off.dc_current if off else None,
            p.theta, p.n_steps,
        ])
    return header, rows


def theta_rows(result: ThetaScanResult) -> tuple[list[str], list[list]]:
    header = ["theta_rad", "signal_gain_db", "analytic_gain_db"]
    return header, [list(r) for r in zip(result.thetas, result.signal_gain_db, result.analytic_gain_db)]


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def config_dict(cfg: ExperimentConfig) -> dict:
    return _jsonable(asdict(cfg))


def emit_outputs(
    result: SweepResult | ThetaScanResult,
    cfg: ExperimentConfig,
    out_dir: str | os.PathLike,
    name: str | None = None,
    *,
    extra: dict | None = None,
    dat: bool = True,
) -> dict[str, Path]:
    """Write ``<name>.csv``, ``<name>.manifest.json`` and optionally ``<name>.dat``.

    Output is a deterministic function of the result and config (no
    timestamps), so identical runs give byte-identical files.
    """
    name = name or cfg.name
    out = Path(out_dir)
    if isinstance(result, ThetaScanResult):
        header, rows = theta_rows(result)
        run_info = {"theta_lock_rad": result.theta_lock, "theta_analytic_rad": result.theta_analytic}
    else:
        header, rows = sweep_rows(result)
        run_info = {"axis": result.axis.value, "modulator_kind": result.modulator_kind}
    manifest = {
        "name": name,
        "code_version": __version__,
        "backend": result.backend,
        "grid": result.grid,
        "n_steps": result.n_steps,
        "columns": header,
        "run": run_info,
        "config": config_dict(cfg),
    }
    if extra:
        manifest["results"] = _jsonable(extra)
    paths = {"csv": out / f"{name}.csv", "manifest": out / f"{name}.manifest.json"}
    if dat:
        paths["dat"] = out / f"{name}.dat"
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths["csv"].write_text(to_csv(header, rows))
        paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        if dat:
            lines = ["# " + " ".join(header)]
            lines += [" ".join(_fmt(v) if v is not None else "nan" for v in r) for r in rows]
            paths["dat"].write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write outputs to {out}: {exc}") from exc
    return paths


# ---------------------------------------------------------------------------
# figure recipes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FigurePanel:
    label: str
    axis: SweepAxis
    signal_power_dbm: float | None = None
    rf_power_dbm: float | None = None
    modulator_kind: ModulatorKind = ModulatorKind.STANDARD_MZM
    sfdr: bool = False


_RF = SweepAxis.INPUT_RF_POWER
_SIG = SweepAxis.INPUT_SIGNAL_POWER
_LIN = ModulatorKind.LINEARIZED

FIGURES: dict[str, tuple[FigurePanel, ...]] = {
    "fig4": (FigurePanel("fig4", _RF, signal_power_dbm=-16.0),),
    "fig5a": (FigurePanel("fig5a", _RF, signal_power_dbm=-14.0, sfdr=True),),
    "fig5b": (FigurePanel("fig5b", _RF, signal_power_dbm=14.0, sfdr=True),),
    "fig6": (FigurePanel("fig6_rf10", _SIG, rf_power_dbm=10.0),
             FigurePanel("fig6_rf20", _SIG, rf_power_dbm=20.0)),
    "fig7": (FigurePanel("fig7a", _RF, signal_power_dbm=-14.0, modulator_kind=_LIN),
             FigurePanel("fig7b", _RF, signal_power_dbm=14.0, modulator_kind=_LIN)),
    "fig10": (FigurePanel("fig10", _RF, signal_power_dbm=-14.0, modulator_kind=_LIN, sfdr=True),),
}

DEFAULT_RF_VALUES = tuple(float(v) for v in range(-10, 26))
DEFAULT_SIGNAL_VALUES = tuple(float(v) for v in range(-30, 19, 2))


def panel_config(panel: FigurePanel, base: ExperimentConfig, values: Sequence[float] | None = None) -> ExperimentConfig:
    plan = base.plan.with_(modulator_kind=panel.modulator_kind)
    if panel.signal_power_dbm is not None:
        plan = plan.with_(combined_signal_idler_power_dbm=panel.signal_power_dbm)
    if panel.rf_power_dbm is not None:
        plan = plan.with_(modulator=plan.modulator.with_rf_power(panel.rf_power_dbm))
    if values is None:
        same_axis = base.sweep.axis is panel.axis
        values = base.sweep.values if same_axis else (DEFAULT_RF_VALUES if panel.axis is _RF else DEFAULT_SIGNAL_VALUES)
    sweep = SweepSpec(panel.axis, tuple(values), PsaState.BOTH)
    return base.with_(plan=plan, sweep=sweep, name=panel.label)


def run_figure(name: str, base: ExperimentConfig, out_dir, jobs: int = 1, n_steps: int | None = None) -> dict[str, dict]:
    """Run every panel of a named figure recipe and write its outputs."""
    if name not in FIGURES:
        raise ConfigurationError(f"unknown figure {name!r}; choose from {sorted(FIGURES)}")
    written = {}
    for panel in FIGURES[name]:
        cfg = panel_config(panel, base)
        result = _run_sweep(cfg, jobs, n_steps)
        extra = {}
        if panel.sfdr:
            for state in ("off", "on"):
                extra[f"sfdr_{state}"] = result.sfdr(state, cfg.detector.rf_load).as_dict()
        written[panel.label] = emit_outputs(result, cfg, out_dir, panel.label, extra=extra or None)
    return written
