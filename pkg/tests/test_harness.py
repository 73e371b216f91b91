import csv
import io
import json
import math
from dataclasses import replace

import numpy as np
import pytest

from psalink.analytics import ThreeWaveParams, psa_gain, theta_opt
from psalink.core import FiberParams
from psalink.errors import ConfigurationError
from psalink.harness import (
    FIGURES,
    LockSettings,
    PsaState,
    SweepAxis,
    SweepSpec,
    emit_outputs,
    evaluate_point,
    lock_theta,
    panel_config,
    run_rf_power_sweep,
    run_signal_power_sweep,
    run_theta_scan,
    sweep_rows,
    to_csv,
)
from psalink.modulation import ModulatorKind
from psalink.propagation import StepConfig


class TestSweepSpec:
    def test_from_range(self):
        s = SweepSpec.from_range("input_rf_power", -10, 25, 1)
        assert s.values[0] == -10.0 and s.values[-1] == 25.0 and len(s.values) == 36

    def test_sorted_unique(self):
        assert SweepSpec(values=(3.0, 1.0, 3.0)).values == (1.0, 3.0)

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            SweepSpec(values=())
        with pytest.raises(ConfigurationError):
            SweepSpec.from_range("input_rf_power", 5, 0, 1)


class TestPoint:
    def test_psa_off_is_passive_loss(self, fast_config):
        p = evaluate_point(fast_config.with_(sweep=SweepSpec(values=(0.0,), psa_state="off")), 0.0, 8)
        assert p.on is None
        assert p.optical_net_db("off", "signal") == pytest.approx(-0.9, abs=1e-3)

    def test_on_off_share_input(self, fast_config):
        p = evaluate_point(fast_config, 0.0, 8)
        assert p.on is not None and p.off is not None
        assert p.rf_gain_fund_db == pytest.approx(p.on.fund1_dbm - p.off.fund1_dbm)
        assert p.lock_method in ("sinusoid", "search")

    def test_rf_gain_twice_optical(self, fast_config):
        # unsaturated link: RF gain of the fundamental ~ twice the optical gain
        p = evaluate_point(fast_config.with_(plan=fast_config.plan.with_(combined_signal_idler_power_dbm=-30.0)), -10.0, 8)
        assert p.rf_gain_fund_db == pytest.approx(2 * p.optical_gain_db("signal"), abs=0.3)

    def test_lock_beats_neighbours(self, fast_config):
        plan, grid = fast_config.plan, fast_config.grid()
        steps = StepConfig(8)
        lk = lock_theta(plan, grid, fast_config.fiber, steps)
        from psalink.harness import _signal_output
        for d in (-0.05, 0.05):
            assert lk.signal_power >= _signal_output(plan.with_(theta=lk.theta + d), grid, fast_config.fiber, steps)

    def test_lock_needs_pump(self, fast_config):
        with pytest.raises(ConfigurationError):
            lock_theta(fast_config.plan.with_(pump_power_dbm=-math.inf), fast_config.grid(), fast_config.fiber, StepConfig(8))


class TestSweeps:
    def test_rf_sweep_columns_and_determinism(self, fast_config, tmp_path):
        a = run_rf_power_sweep(fast_config)
        b = run_rf_power_sweep(fast_config)
        pa = emit_outputs(a, fast_config, tmp_path / "a", "x")
        pb = emit_outputs(b, fast_config, tmp_path / "b", "x")
        assert pa["csv"].read_bytes() == pb["csv"].read_bytes()
        assert pa["manifest"].read_bytes() == pb["manifest"].read_bytes()
        rows = list(csv.reader(io.StringIO(pa["csv"].read_text())))
        assert rows[0][:5] == ["input_rf_dbm", "fund_off", "fund_on", "imd3_off", "imd3_on"]
        assert [float(r[0]) for r in rows[1:]] == [-10.0, -5.0, 0.0]
        man = json.loads(pa["manifest"].read_text())
        assert man["n_steps"] == 8
        assert man["grid"]["df_hz"] and man["grid"]["n_samples"] == 4096
        assert man["columns"] == rows[0]

    def test_slopes(self, fast_config):
        cfg = fast_config.with_(sweep=SweepSpec(values=(-30.0, -25.0, -20.0)))
        r = run_rf_power_sweep(cfg)
        x = r.values
        for state in ("on", "off"):
            fund = r.series(lambda p: getattr(p, state).fund1_dbm)
            imd = r.series(lambda p: getattr(p, state).imd3_1_dbm)
            assert np.polyfit(x, fund, 1)[0] == pytest.approx(1.0, abs=0.02)
            assert np.polyfit(x, imd, 1)[0] == pytest.approx(3.0, abs=0.05)

    def test_parallel_matches_serial(self, fast_config):
        a = run_rf_power_sweep(fast_config, jobs=1)
        b = run_rf_power_sweep(fast_config, jobs=2)
        assert to_csv(*sweep_rows(a)) == to_csv(*sweep_rows(b))

    def test_signal_sweep_saturates_pump(self, fast_config):
        cfg = fast_config.with_(sweep=SweepSpec("input_signal_power", (-20.0, 15.0)))
        r = run_signal_power_sweep(cfg)
        lo, hi = r.points
        assert lo.optical_gain_db("pump") > hi.optical_gain_db("pump")
        assert lo.optical_gain_db("signal") > hi.optical_gain_db("signal")

    def test_fixed_theta(self, fast_config):
        cfg = fast_config.with_(lock=LockSettings(relock=False, theta=1.0))
        r = run_rf_power_sweep(cfg)
        assert all(p.theta == 1.0 for p in r.points)

    def test_linearized_has_no_input_imd3(self, fast_config):
        # without fiber nonlinearity nothing can fill the IMD3 bin
        cfg = fast_config.with_(plan=fast_config.plan.with_(modulator_kind=ModulatorKind.LINEARIZED),
                                fiber=replace(fast_config.fiber, gamma=0.0),
                                sweep=SweepSpec(values=(0.0,), psa_state="off"))
        p = run_rf_power_sweep(cfg).points[0]
        assert p.off.imd3_1_dbm < -300
        assert p.off.fund1_dbm > -100

    def test_auto_steps(self, fast_config):
        from psalink.harness import resolve_steps
        cfg = fast_config.with_(auto_steps=True, steps=StepConfig(2, convergence_db=0.01))
        n = resolve_steps(cfg)
        assert n >= 4 and n & (n - 1) == 0


class TestThetaScan:
    def test_lossless_matches_analytic(self, fast_config):
        cfg = fast_config.with_(fiber=replace(fast_config.fiber, alpha=0.0),
                                plan=fast_config.plan.with_(combined_signal_idler_power_dbm=-40.0))
        r = run_theta_scan(cfg, np.linspace(0, 2 * math.pi, 12, endpoint=False), n_steps=64)
        np.testing.assert_allclose(r.signal_gain_db, r.analytic_gain_db, atol=0.1)
        assert abs(math.remainder(r.theta_lock - r.theta_analytic, 2 * math.pi)) < 0.01

    def test_pi_shift_halves_period(self, fast_config):
        r = run_theta_scan(fast_config, [0.3, 0.3 + 2 * math.pi], n_steps=8)
        assert r.signal_gain_db[0] == pytest.approx(r.signal_gain_db[1], abs=1e-9)


class TestFigures:
    def test_recipes(self, fast_config):
        assert set(FIGURES) == {"fig4", "fig5a", "fig5b", "fig6", "fig7", "fig10"}
        cfg = panel_config(FIGURES["fig10"][0], fast_config)
        assert cfg.plan.modulator_kind is ModulatorKind.LINEARIZED
        assert cfg.plan.combined_signal_idler_power_dbm == -14.0
        six = panel_config(FIGURES["fig6"][1], fast_config)
        assert six.sweep.axis is SweepAxis.INPUT_SIGNAL_POWER
        assert six.plan.modulator.rf_power_dbm == 20.0


def test_default_operating_point_gain():
    """Default link: locked loss-normalized signal gain of ~10 dB."""
    from psalink.config import load_config

    cfg = load_config()
    p = evaluate_point(cfg.with_(sweep=SweepSpec(values=(-10.0,))), -10.0, 32)
    assert p.optical_gain_db("signal") == pytest.approx(10.0, abs=0.1)
    assert p.rf_gain_fund_db == pytest.approx(20.0, abs=1.0)
    assert p.optical_net_db("off", "signal") == pytest.approx(-0.9, abs=1e-3)
