import math
from fractions import Fraction

import pytest
from hypothesis import settings

from psalink.core import FiberParams, SimulationGrid
from psalink.detection import DetectorParams
from psalink.harness import ExperimentConfig, LockSettings, SweepSpec
from psalink.modulation import LinkInputPlan, ModulatorDrive
from psalink.propagation import StepConfig

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture
def small_grid():
    # 1 GHz bins, 4 THz span: fast, and roomy for 20 GHz three-wave tests
    return SimulationGrid(4096, Fraction(10**9))


@pytest.fixture
def fast_config():
    """Scaled-down link (2 GHz signal offset, 10 MHz bins) for harness tests."""
    drive = ModulatorDrive(rf_power_dbm=0.0, bias_phase=math.pi / 4, tone1_hz=100_000_000, tone2_hz=90_000_000)
    plan = LinkInputPlan(pump_power_dbm=22.0, combined_signal_idler_power_dbm=-16.0,
                         signal_offset_hz=2_000_000_000, modulator=drive)
    omega = 2 * math.pi * 2e9
    fiber = FiberParams(1000.0, 11.3e-3, alpha=math.log(10) * 0.9 / 1e4, beta2=4.329e-4 / omega**2)
    return ExperimentConfig(
        plan=plan,
        fiber=fiber,
        detector=DetectorParams(),
        steps=StepConfig(n_steps=8),
        sweep=SweepSpec("input_rf_power", (-10.0, -5.0, 0.0)),
        lock=LockSettings(),
        auto_steps=False,
        n_samples=4096,
        name="fast",
    )


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
