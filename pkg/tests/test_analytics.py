import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from psalink.analytics import (
    ModulationFormat,
    ThreeWaveParams,
    beta3_from_slope,
    delta_beta,
    psa_gain,
    psa_gain_curve,
    relative_phase_relation,
    sideband_phase,
    theta_opt,
)
from psalink.core import FiberParams, dbm_to_w

GAMMA = 11.3e-3
PUMP = dbm_to_w(22.0)
L = 1000.0


def three_wave_ode_gain(p: ThreeWaveParams, signal_power=1e-8) -> float:
    """Gain from the coupled signal/idler equations with an undepleted pump.

    dAs/dz = i(2 g P - dB/2) As + i g P exp(i 2 th_p) conj(Ai), with the
    linear mismatch split symmetrically; SPM/XPM of the pump is included
    through the 2 g P terms, as in the closed form.
    """
    g, P, db = p.gamma, p.pump_power, p.delta_beta
    a0 = math.sqrt(signal_power)
    ap = math.sqrt(P) * np.exp(-1j * p.theta / 2)  # pump phase -theta/2

    def rhs(z, y):
        pump = ap * np.exp(1j * g * P * z)  # pump self-phase modulation
        a_s, a_i = y[0] + 1j * y[1], y[2] + 1j * y[3]
        ds = 1j * (2 * g * P + db / 2) * a_s + 1j * g * pump**2 * np.conj(a_i)
        di = 1j * (2 * g * P + db / 2) * a_i + 1j * g * pump**2 * np.conj(a_s)
        return [ds.real, ds.imag, di.real, di.imag]

    sol = solve_ivp(rhs, (0, p.length), [a0, 0, a0, 0], rtol=1e-11, atol=1e-16)
    a_s = sol.y[0, -1] + 1j * sol.y[1, -1]
    return abs(a_s) ** 2 / signal_power


class TestDeltaBeta:
    def test_zero_dispersion(self):
        assert delta_beta(FiberParams(L, GAMMA), 2 * math.pi * 20e9) == 0.0

    @given(st.floats(min_value=-1e12, max_value=1e12, allow_nan=False))
    def test_even(self, w):
        f = FiberParams(L, GAMMA, beta2=1e-27, beta3=2.7e-41, beta4=-3e-55)
        assert delta_beta(f, w) == pytest.approx(delta_beta(f, -w), rel=1e-12, abs=1e-30)

    def test_taylor_cross_check(self):
        # beta_s + beta_i - 2 beta_p from the full Taylor sum at +/- dw
        f = FiberParams(L, GAMMA, beta2=1.3e-27, beta3=2.74e-41, beta4=2e-55)
        dw = 2 * math.pi * 20e9

        def beta(w):
            return f.beta2 * w**2 / 2 + f.beta3 * w**3 / 6 + f.beta4 * w**4 / 24

        assert delta_beta(f, dw) == pytest.approx(beta(dw) + beta(-dw), rel=1e-12)

    def test_zdw_pump_only_beta4(self):
        f = FiberParams(L, GAMMA, beta3=2.74e-41, beta4=1e-55)
        dw = 2 * math.pi * 20e9
        assert delta_beta(f, dw) == pytest.approx(1e-55 * dw**4 / 12, rel=1e-12)


class TestBeta3:
    def test_fiber_slope(self):
        b3 = beta3_from_slope(17.0, 1547e-9)
        assert b3 == pytest.approx(2.74e-41, rel=2e-3)

    def test_zero_and_linear(self):
        assert beta3_from_slope(0.0, 1547e-9) == 0.0
        assert beta3_from_slope(34.0, 1547e-9) == pytest.approx(2 * beta3_from_slope(17.0, 1547e-9))

    def test_numerical_derivative(self):
        # beta2(w) = -lambda^2 D / (2 pi c) with D = S (lambda - lambda0); d(beta2)/dw at the ZDW
        c, lam0, s = 299_792_458.0, 1547e-9, 17.0

        def beta2(w):
            lam = 2 * math.pi * c / w
            return -(lam**2) * s * (lam - lam0) / (2 * math.pi * c)

        w0 = 2 * math.pi * c / lam0
        h = w0 * 1e-6
        numeric = (beta2(w0 + h) - beta2(w0 - h)) / (2 * h)
        assert beta3_from_slope(s, lam0) == pytest.approx(numeric, rel=1e-6)


class TestPsaGain:
    def test_no_pump(self):
        assert psa_gain(ThreeWaveParams(0.0, GAMMA, L, 4e-4, 1.0)) == 1.0

    def test_zero_length(self):
        assert psa_gain(ThreeWaveParams(PUMP, GAMMA, 0.0, 4e-4, 1.0)) == 1.0

    def test_phase_matched(self):
        p = ThreeWaveParams(PUMP, GAMMA, L, -2 * GAMMA * PUMP, math.pi / 2)
        assert p.kappa == 0.0
        assert psa_gain(p) == pytest.approx(math.exp(2 * GAMMA * PUMP * L), rel=1e-12)
        assert psa_gain(p) == pytest.approx(35.9, rel=2e-3)
        assert 10 * math.log10(psa_gain(p)) == pytest.approx(15.56, abs=0.01)

    @pytest.mark.parametrize("db", [0.0, -2 * GAMMA * PUMP, 4.329e-4, -7.6e-3, 5e-3])
    @pytest.mark.parametrize("theta", [0.0, 0.9, 2.2, 4.0, 5.5])
    def test_matches_coupled_ode(self, db, theta):
        p = ThreeWaveParams(PUMP, GAMMA, L, db, theta)
        assert psa_gain(p) == pytest.approx(three_wave_ode_gain(p), rel=1e-6)

    def test_continuous_across_g_zero(self):
        # g^2 = 0 when kappa = +/- 2 gamma P, i.e. dbeta = 0 or -4 gamma P
        gp = GAMMA * PUMP
        for db0 in (0.0, -4 * gp):
            for theta in (0.3, 2.0):
                vals = [psa_gain(ThreeWaveParams(PUMP, GAMMA, L, db0 + e, theta)) for e in (-1e-12, 0.0, 1e-12)]
                assert (vals[0] + vals[2]) / 2 == pytest.approx(vals[1], rel=1e-11)
                assert vals[0] == pytest.approx(vals[1], rel=1e-8)
                # just outside the series region: the midpoint agrees to second order
                x = [psa_gain(ThreeWaveParams(PUMP, GAMMA, L, db0 + e, theta)) for e in (-2e-6, 2e-6)]
                assert (x[0] + x[1]) / 2 == pytest.approx(vals[1], rel=1e-5)

    @given(st.floats(min_value=-10, max_value=10), st.floats(min_value=-0.02, max_value=0.02))
    def test_periodic_and_non_negative(self, theta, db):
        p = ThreeWaveParams(PUMP, GAMMA, L, db, theta)
        q = ThreeWaveParams(PUMP, GAMMA, L, db, theta + 2 * math.pi)
        assert psa_gain(p) >= 0
        assert psa_gain(p) == pytest.approx(psa_gain(q), rel=1e-9)

    def test_curve_matches_scalar(self):
        p = ThreeWaveParams(PUMP, GAMMA, L, 4e-4)
        th = np.linspace(0, 2 * math.pi, 13)
        np.testing.assert_allclose(psa_gain_curve(p, th),
                                   [psa_gain(ThreeWaveParams(PUMP, GAMMA, L, 4e-4, t)) for t in th], rtol=1e-12)


class TestThetaOpt:
    def test_phase_matched(self):
        p = ThreeWaveParams(PUMP, GAMMA, L, -2 * GAMMA * PUMP)
        r = theta_opt(p)
        assert r.theta_max == pytest.approx(math.pi / 2, abs=1e-12)
        assert r.theta_min == pytest.approx(3 * math.pi / 2, abs=1e-12)
        assert r.gain_max == pytest.approx(math.exp(2 * GAMMA * PUMP * L), rel=1e-12)
        assert r.gain_max * r.gain_min == pytest.approx(1.0, rel=1e-9)

    def test_flat(self):
        r = theta_opt(ThreeWaveParams(0.0, GAMMA, L))
        assert r.flat and r.theta_max == 0.0 and r.gain_max == 1.0

    @pytest.mark.parametrize("db", [0.0, 4.329e-4, -7.6e-3])
    def test_brute_force_scan(self, db):
        p = ThreeWaveParams(PUMP, GAMMA, L, db)
        th = np.linspace(0, 2 * math.pi, 10**6, endpoint=False)
        g = psa_gain_curve(p, th)
        brute = th[np.argmax(g)]
        closed = theta_opt(p).theta_max
        assert abs(math.remainder(closed - brute, 2 * math.pi)) < 1e-3
        scan = theta_opt(p, method="scan")
        assert abs(math.remainder(scan.theta_max - closed, 2 * math.pi)) < 1e-3


class TestSidebandPhases:
    def test_table(self):
        assert sideband_phase("AM", 1, 0.3).theta == pytest.approx(-math.pi + 0.3)
        assert sideband_phase("AM", -1, 0.3).theta == pytest.approx(-math.pi - 0.3)
        assert sideband_phase("PM", 1, 0.3).theta == pytest.approx(math.pi / 2 + 0.3)
        assert sideband_phase("PM", -1, 0.3).theta == pytest.approx(math.pi / 2 - 0.3)

    def test_relations(self):
        assert relative_phase_relation("AM", math.pi / 2) == pytest.approx(math.pi / 2 - 2 * math.pi)
        assert relative_phase_relation("PM", math.pi / 2) == pytest.approx(3 * math.pi / 2)

    def test_am_keeps_maximum_pm_inverts(self):
        p = ThreeWaveParams(PUMP, GAMMA, L, 4.329e-4)
        best = theta_opt(p)
        am = relative_phase_relation(ModulationFormat.AM, best.theta_max)
        pm = relative_phase_relation(ModulationFormat.PM, best.theta_max)
        g = lambda th: psa_gain(ThreeWaveParams(PUMP, GAMMA, L, 4.329e-4, th))
        assert g(am) == pytest.approx(best.gain_max, rel=1e-12)
        assert g(pm) < 1.0 < best.gain_max
