"""Acceptance criteria shared by ``psalink validate`` and the test suite.

Each criterion runs the simulations it needs and compares the measurements
with fixed targets and tolerances. Sweeps shared by several criteria are
computed once per :class:`AcceptanceRun`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.fft
from scipy.special import jv

from .analytics import ThreeWaveParams, psa_gain, relative_phase_relation
from .config import load_config
from .core import ComplexEnvelope, FiberParams, SimulationGrid, dbm_to_w
from .detection import DetectorParams, photodetect, rf_spectrum
from .errors import FittingError
from .harness import ExperimentConfig, PsaState, SweepAxis, SweepResult, SweepSpec, _run_sweep
from .modulation import (
    Carrier,
    LinkInputPlan,
    ModulatorDrive,
    ModulatorKind,
    mzm_two_tone,
    phase_mod_two_tone,
    synthesize_link_input,
)
from .propagation import StepConfig, ssfm_propagate

TWO_PI = 2.0 * math.pi


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    measured: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title} -- {self.detail}"


def _within(value: float, target: float, tol: float) -> bool:
    return math.isfinite(value) and abs(value - target) <= tol


def _range_text(values) -> str:
    v = np.asarray(values, dtype=float)
    return f"[{v.min():.3f}, {v.max():.3f}]"


# ---------------------------------------------------------------------------
# oracle helpers (also used directly by the tests)
# ---------------------------------------------------------------------------

def oracle_grid() -> SimulationGrid:
    # 1 GHz bins: the 20 GHz lines and their mixing products sit far below Nyquist
    return SimulationGrid(4096, Fraction(10**9))


def three_wave_gain_db(theta: float, dbeta: float, *, n_steps: int = 64, signal_dbm: float = -40.0,
                       pump_dbm: float = 22.0, gamma: float = 11.3e-3, length: float = 1000.0,
                       backend: str | None = None) -> tuple[float, float]:
    """(SSFM, analytic) small-signal gain in dB for a lossless fiber."""
    grid = oracle_grid()
    offset = Fraction(20 * 10**9)
    omega = TWO_PI * float(offset)
    plan = LinkInputPlan(
        pump_power_dbm=pump_dbm,
        combined_signal_idler_power_dbm=signal_dbm + 10 * math.log10(2.0),
        theta=theta,
        signal_offset_hz=offset,
        modulator=ModulatorDrive(rf_power_dbm=-math.inf, tone1_hz=2 * 10**9, tone2_hz=3 * 10**9),
    )
    fiber = FiberParams(length, gamma, beta2=dbeta / omega**2)
    env = synthesize_link_input(plan, grid)
    out = ssfm_propagate(env, fiber, StepConfig(n_steps), backend=backend)
    g_ssfm = out.line_power(offset) / env.line_power(offset)
    g_th = psa_gain(ThreeWaveParams(dbm_to_w(pump_dbm), gamma, length, dbeta, theta))
    return 10 * math.log10(g_ssfm), 10 * math.log10(g_th)


def bessel_two_tone_lines(drive: ModulatorDrive, order: int = 8) -> dict[tuple[int, int], complex]:
    """Double Bessel series of the push-pull MZM for a unit carrier.

    Key ``(m, n)`` is the line at offset ``-(m*W1 + n*W2)`` in the
    envelope convention (the ``exp(i(m W1 + n W2) t)`` term).
    """
    z, phi = drive.zeta, drive.phi
    p1, p2 = drive.tone1_phase, drive.tone2_phase
    lines = {}
    for m in range(-order, order + 1):
        for n in range(-order, order + 1):
            jj = jv(m, z) * jv(n, z)
            ph = np.exp(1j * (m * p1 + n * p2))
            # (e^{i phi} i^{m+n} + e^{-i phi} (-i)^{m+n}) / 2
            k = m + n
            c = 0.5 * (np.exp(1j * phi) * 1j**k + np.exp(-1j * phi) * (-1j) ** k)
            lines[(m, n)] = complex(c * jj * ph)
    return lines


# ---------------------------------------------------------------------------
# the run
# ---------------------------------------------------------------------------

RF_AXIS = tuple(float(v) for v in range(-10, 11, 2))
# SFDR sweeps reach down to -30 dBm so the fits see the small-signal regime
SFDR_AXIS = tuple(float(v) for v in range(-30, 11, 2))
SIGNAL_AXIS = tuple(float(v) for v in range(-10, 19, 2))


_SFDR_TITLES = {
    4: "unsaturated SFDR improvement 7 +/- 1.5 dB",
    5: "saturated SFDR 109.3 +/- 2, change <= 1.5 dB, gain 6.7 +/- 1 dB",
    6: "linearized modulator: IMD3 -58 +/- 3 dB, SFDR 116.5 +/- 2, +19 +/- 2 dB",
}


class AcceptanceRun:
    """Lazily computed sweeps at the default configuration."""

    def __init__(self, base: ExperimentConfig | None = None, jobs: int = 1, n_steps: int | None = None):
        self.base = base or load_config()
        self.jobs = jobs
        self.n_steps = n_steps

    def _sweep(self, signal_dbm: float, kind=ModulatorKind.STANDARD_MZM, axis=SweepAxis.INPUT_RF_POWER,
               values=RF_AXIS, rf_dbm: float | None = None) -> SweepResult:
        plan = self.base.plan.with_(combined_signal_idler_power_dbm=signal_dbm, modulator_kind=kind)
        if rf_dbm is not None:
            plan = plan.with_(modulator=plan.modulator.with_rf_power(rf_dbm))
        cfg = self.base.with_(plan=plan, sweep=SweepSpec(axis, values, PsaState.BOTH))
        return _run_sweep(cfg, self.jobs, self.n_steps)

    @property
    def rf_load(self) -> float:
        return self.base.detector.rf_load

    @cached_property
    def validation(self) -> SweepResult:
        return self._sweep(-16.0)

    @cached_property
    def unsaturated(self) -> SweepResult:
        return self._sweep(-14.0, values=SFDR_AXIS)

    @cached_property
    def saturated(self) -> SweepResult:
        return self._sweep(14.0, values=SFDR_AXIS)

    @cached_property
    def linearized(self) -> SweepResult:
        return self._sweep(-14.0, ModulatorKind.LINEARIZED, values=SFDR_AXIS)

    @cached_property
    def signal_sweep(self) -> SweepResult:
        return self._sweep(0.0, axis=SweepAxis.INPUT_SIGNAL_POWER, values=SIGNAL_AXIS, rf_dbm=10.0)

    # -- criteria -----------------------------------------------------------

    def criterion_1(self) -> CriterionResult:
        gp = 11.3e-3 * dbm_to_w(22.0)
        cfg_db = self.base.fiber.beta2 * (TWO_PI * float(self.base.plan.signal_offset_hz)) ** 2
        dbetas = {"dbeta=0": 0.0, "kappa=0": -2.0 * gp, "calibrated": cfg_db}
        worst, rows = 0.0, {}
        for label, db in dbetas.items():
            for k in range(8):
                theta = k * math.pi / 4
                g_s, g_a = three_wave_gain_db(theta, db)
                rows[f"{label}, theta={k}pi/4"] = (g_s, g_a)
                worst = max(worst, abs(g_s - g_a))
        return CriterionResult(1, "SSFM vs analytic three-wave gain", worst <= 0.5,
                               f"max |SSFM - Eq| = {worst:.4f} dB over 24 cases (tol 0.5 dB)", {"max_error_db": worst, "cases": rows})

    def criterion_2(self) -> CriterionResult:
        r = self.validation
        pts = [p for p in r.points if 0.0 <= p.axis_value <= 10.0]
        gf = [p.rf_gain_fund_db for p in pts]
        gi = [p.rf_gain_imd3_db for p in pts]
        go = [p.optical_gain_db("signal") for p in pts]
        ok = all(_within(g, 20.0, 1.0) for g in gf + gi)
        return CriterionResult(2, "validation: RF gains 20 +/- 1 dB over 0-10 dBm RF", ok,
                               f"fund gain {_range_text(gf)} dB, IMD3 gain {_range_text(gi)} dB "
                               f"(locked optical gain {_range_text(go)} dB)",
                               {"fund_gain_db": gf, "imd3_gain_db": gi, "optical_gain_db": go})

    def criterion_3(self) -> CriterionResult:
        r = self.validation
        sel = [p for p in r.points if p.axis_value <= 0.0]
        x = np.array([p.axis_value for p in sel])
        slopes = {}
        for state in ("off", "on"):
            rep = [p.off if state == "off" else p.on for p in sel]
            slopes[f"fund_{state}"] = float(np.polyfit(x, [t.fund1_dbm for t in rep], 1)[0])
            slopes[f"imd3_{state}"] = float(np.polyfit(x, [t.imd3_1_dbm for t in rep], 1)[0])
        ok = all(_within(v, 1.0 if k.startswith("fund") else 3.0, 0.05) for k, v in slopes.items())
        text = ", ".join(f"{k}={v:.4f}" for k, v in slopes.items())
        return CriterionResult(3, "slope laws 1 and 3 (+/-0.05), RF -10..0 dBm", ok, text, slopes)

    def criterion_4(self) -> CriterionResult:
        r = self.unsaturated
        off = r.sfdr("off", self.rf_load)
        on = r.sfdr("on", self.rf_load)
        gain = on.sfdr_db - off.sfdr_db
        floors_ok = _within(off.noise_floor_dbm_hz, -184.9, 0.3) and _within(on.noise_floor_dbm_hz, -174.9, 0.3)
        ok = _within(gain, 7.0, 1.5) and floors_ok
        return CriterionResult(4, "unsaturated SFDR improvement 7 +/- 1.5 dB", ok,
                               f"SFDR off {off.sfdr_db:.2f} dB, on {on.sfdr_db:.2f} dB, improvement {gain:.2f} dB; "
                               f"floors {off.noise_floor_dbm_hz:.2f} / {on.noise_floor_dbm_hz:.2f} dBm/Hz "
                               "(targets -184.9 / -174.9, tol 0.3)",
                               {"sfdr_off": off.sfdr_db, "sfdr_on": on.sfdr_db, "improvement": gain,
                                "floor_off": off.noise_floor_dbm_hz, "floor_on": on.noise_floor_dbm_hz})

    def criterion_5(self) -> CriterionResult:
        r = self.saturated
        off = r.sfdr("off", self.rf_load)
        on = r.sfdr("on", self.rf_load)
        change = on.sfdr_db - off.sfdr_db
        gain = r.points[0].optical_gain_db("signal")
        checks = {
            "sfdr_off": _within(off.sfdr_db, 109.3, 2.0),
            "sfdr_change": abs(change) <= 1.5,
            "signal_gain": _within(gain, 6.7, 1.0),
        }
        return CriterionResult(5, "saturated SFDR 109.3 +/- 2, change <= 1.5 dB, gain 6.7 +/- 1 dB", all(checks.values()),
                               f"SFDR off {off.sfdr_db:.2f} dB, on {on.sfdr_db:.2f} dB (change {change:+.2f} dB); "
                               f"signal gain {gain:.2f} dB at {r.points[0].axis_value:g} dBm RF; checks {checks}",
                               {"sfdr_off": off.sfdr_db, "sfdr_on": on.sfdr_db, "change": change,
                                "signal_gain_db": gain, "checks": checks})

    def criterion_6(self) -> CriterionResult:
        std = self.unsaturated.point(10.0).on.imd3_1_dbm
        lin = self.linearized.point(10.0).on.imd3_1_dbm
        reduction = std - lin
        sfdr_lin = self.linearized.sfdr("on", self.rf_load).sfdr_db
        sfdr_std = self.unsaturated.sfdr("on", self.rf_load).sfdr_db
        improvement = sfdr_lin - sfdr_std
        checks = {
            "imd3_reduction": _within(reduction, 58.0, 3.0),
            "sfdr": _within(sfdr_lin, 116.5, 2.0),
            "improvement": _within(improvement, 19.0, 2.0),
        }
        return CriterionResult(6, "linearized modulator: IMD3 -58 +/- 3 dB, SFDR 116.5 +/- 2, +19 +/- 2 dB", all(checks.values()),
                               f"IMD3 reduction {reduction:.2f} dB at 10 dBm RF; SFDR {sfdr_lin:.2f} dB "
                               f"(improvement {improvement:.2f} dB); checks {checks}",
                               {"imd3_reduction_db": reduction, "sfdr_db": sfdr_lin, "improvement_db": improvement,
                                "checks": checks})

    def criterion_7(self) -> CriterionResult:
        r = self.signal_sweep
        high = [p for p in r.points if p.axis_value > 0.0]
        pump = [p.optical_gain_db("pump") for p in high]
        imd = [p.optical_gain_db("signal_imd3_lo") for p in r.points]
        above = [p for p in r.points if p.axis_value >= 0.0]
        rf_imd = [p.rf_gain_imd3_db for p in above]
        steps = np.diff(rf_imd)
        checks = {
            "pump_depletion": all(g < 0.0 for g in pump),
            "imd3_optical_gain_above_20": max(imd) > 20.0,
            "rf_imd3_gain_non_increasing": bool(np.all(steps <= 0.0)),
        }
        return CriterionResult(7, "saturation phenomenology vs signal power (10 dBm RF)", all(checks.values()),
                               f"pump gain above 0 dBm {_range_text(pump)} dB; max optical IMD3 gain {max(imd):.2f} dB; "
                               f"largest RF IMD3 gain step above 0 dBm {steps.max():+.3f} dB; checks {checks}",
                               {"pump_gain_db": pump, "optical_imd3_gain_db": imd, "rf_imd3_gain_db": rf_imd,
                                "checks": checks})

    def criterion_8(self) -> CriterionResult:
        checks, measured = invariant_suite()
        return CriterionResult(8, "invariant suite", all(checks.values()),
                               ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()), measured)

    def run(self, numbers=None, on_result=None) -> list[CriterionResult]:
        out = []
        for n in numbers or range(1, 9):
            try:
                res = getattr(self, f"criterion_{n}")()
            except FittingError as exc:
                res = CriterionResult(n, _SFDR_TITLES.get(n, "SFDR"), False, f"fitting error: {exc}", {"error": str(exc)})
            if on_result:
                on_result(res)
            out.append(res)
        return out


def invariant_suite() -> tuple[dict, dict]:
    """Checks of criterion 8 on small grids; returns (checks, measurements)."""
    m: dict = {}
    grid = oracle_grid()

    # energy conservation, step by step
    plan = LinkInputPlan(combined_signal_idler_power_dbm=10.0, theta=1.0, signal_offset_hz=20 * 10**9,
                         modulator=ModulatorDrive(rf_power_dbm=15.0, bias_phase=math.pi / 4, tone1_hz=2 * 10**9, tone2_hz=3 * 10**9))
    env = synthesize_link_input(plan, grid)
    step = FiberParams(10.0, 11.3e-3, beta2=1e-26, beta3=2.7e-41)
    worst = 0.0
    cur = env
    for _ in range(20):
        nxt = ssfm_propagate(cur, step, StepConfig(1))
        worst = max(worst, abs(nxt.power() - cur.power()) / cur.power())
        cur = nxt
    m["energy_rel_error_per_step"] = worst

    # Jacobi-Anger: time-domain MZM vs double Bessel sum
    g2 = SimulationGrid(2**12, Fraction(10**6))
    ja = 0.0
    for zeta_v in (0.2, 0.6, 1.0):
        drive = ModulatorDrive(rf_power_dbm=-math.inf, tone1_hz=37 * 10**6, tone2_hz=41 * 10**6, bias_phase=math.pi / 4)
        v_ac = zeta_v * drive.v_pi / math.pi
        drive = drive.with_rf_power(10 * math.log10(v_ac**2 / (2 * drive.rf_load)) + 30)
        env_m = mzm_two_tone(Carrier(1.0), drive, g2)
        ref = np.zeros(g2.n_samples, complex)
        for (mm, nn), c in bessel_two_tone_lines(drive, 12).items():
            ref[g2.index(-(mm * drive.tone1_hz + nn * drive.tone2_hz))] += c
        ja = max(ja, float(np.max(np.abs(env_m.spectrum - ref))))
    m["jacobi_anger_max_abs_error"] = ja

    # AM/PM relative-phase relations on the synthesized field
    # tones in ratio 101:103 so no low-order mixing product lands on a
    # first-order sideband
    g3 = SimulationGrid(2**14, Fraction(10**7))
    drive3 = ModulatorDrive(rf_power_dbm=5.0, bias_phase=math.pi / 4, tone1_hz=1_010 * 10**6,
                            tone2_hz=1_030 * 10**6, tone1_phase=0.4, tone2_phase=-0.9)

    def theta_11(kind):
        p = plan.with_(modulator=drive3, modulator_kind=kind, pump_power_dbm=22.0)
        e = synthesize_link_input(p, g3)
        s, w = p.signal_offset_hz, p.modulator.tone1_hz
        t00 = e.line_phase(s) + e.line_phase(-s) - 2 * e.line_phase(0)
        t1m1 = e.line_phase(s - w) + e.line_phase(-s + w) - 2 * e.line_phase(0)
        return t00, t1m1

    t00, t1 = theta_11(ModulatorKind.STANDARD_MZM)
    am = math.remainder(t1 - relative_phase_relation("AM", t00), TWO_PI)
    t00, t1 = theta_11(ModulatorKind.PHASE_MODULATOR)
    pm = math.remainder(t1 - relative_phase_relation("PM", t00), TWO_PI)
    m["am_relation_error"], m["pm_relation_error"] = am, pm

    # beat-note oracle
    det = DetectorParams(sensitivity=0.9, rf_load=50.0)
    p0, p1 = 1e-3, 2e-5
    c = np.zeros(g2.n_samples, complex)
    c[0] = math.sqrt(p0)
    c[g2.index(5 * 10**6)] = math.sqrt(p1) * np.exp(0.3j)
    spec = rf_spectrum(photodetect(ComplexEnvelope.from_spectrum(c, g2), det), det.rf_load)
    expect = 2 * det.sensitivity**2 * p0 * p1 * det.rf_load
    m["beat_note_rel_error"] = abs(spec.power_w(5 * 10**6) - expect) / expect

    # gain identities
    m["gain_pump_off"] = psa_gain(ThreeWaveParams(0.0, 11.3e-3, 1000.0, 4e-4, 0.7))
    m["gain_zero_length"] = psa_gain(ThreeWaveParams(0.158, 11.3e-3, 0.0, 4e-4, 0.7))

    m["ssfm_order"] = ssfm_convergence_order()

    checks = {
        "energy": m["energy_rel_error_per_step"] <= 1e-9,
        "jacobi_anger": m["jacobi_anger_max_abs_error"] <= 1e-10,
        "am_relation": abs(m["am_relation_error"]) <= 1e-9,
        "pm_relation": abs(m["pm_relation_error"]) <= 1e-9,
        "beat_note": m["beat_note_rel_error"] <= 1e-10,
        "gain_identities": m["gain_pump_off"] == 1.0 and m["gain_zero_length"] == 1.0,
        "ssfm_order": 1.8 <= m["ssfm_order"] <= 2.2,
    }
    return checks, m


def ssfm_convergence_order(n_coarse: int = 4, backend: str | None = None) -> float:
    """Observed order from signal-gain errors at h and h/2 against 4x finer runs."""
    grid = oracle_grid()
    plan = LinkInputPlan(pump_power_dbm=27.0, combined_signal_idler_power_dbm=-37.0, theta=0.3,
                         signal_offset_hz=20 * 10**9,
                         modulator=ModulatorDrive(rf_power_dbm=-math.inf, tone1_hz=2 * 10**9, tone2_hz=3 * 10**9))
    fiber = FiberParams(1000.0, 11.3e-3, beta2=4.3e-4 / (TWO_PI * 20e9) ** 2)
    env = synthesize_link_input(plan, grid)
    s = plan.signal_offset_hz

    def gain(n):
        return ssfm_propagate(env, fiber, StepConfig(n), backend=backend).line_power(s) / env.line_power(s)

    e1 = abs(gain(n_coarse) - gain(4 * n_coarse))
    e2 = abs(gain(2 * n_coarse) - gain(8 * n_coarse))
    return math.log2(e1 / e2)
