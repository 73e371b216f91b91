import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from psalink.core import ELECTRON_CHARGE, ComplexEnvelope, SimulationGrid, dbm_to_w, w_to_dbm
from psalink.detection import (
    DetectorParams,
    Photocurrent,
    apply_loss,
    band_filter,
    compute_sfdr,
    detect,
    extract_tones,
    photodetect,
    rf_spectrum,
    sfdr_from_intercepts,
    shot_noise_floor,
)
from psalink.errors import ConfigurationError, FittingError
from psalink.modulation import Carrier, ModulatorDrive, mzm_two_tone

GRID = SimulationGrid(2**12, Fraction(10**6))
W1, W2 = 37 * 10**6, 41 * 10**6
UNIT = DetectorParams(sensitivity=1.0, rf_load=50.0, post_fiber_loss_db=0.0)


def lines(**amps):
    c = np.zeros(GRID.n_samples, complex)
    for f, a in amps.items():
        c[GRID.index(int(f[1:]) * 10**6)] = a
    return ComplexEnvelope.from_spectrum(c, GRID)


def modulated(zeta, scale=1.0, offset=0):
    d = ModulatorDrive(rf_power_dbm=-math.inf, tone1_hz=W1, tone2_hz=W2, bias_phase=math.pi / 4)
    v = zeta * d.v_pi / math.pi
    d = d.with_rf_power(w_to_dbm(v * v / (2 * d.rf_load)))
    return mzm_two_tone(Carrier(1e-3 * scale**2, offset_hz=offset), d, GRID)


class TestBandFilter:
    def test_keeps_band_inclusive(self):
        env = lines(f0=1.0, f10=0.5, f20=0.25, f30=0.1)
        out = band_filter(env, (10 * 10**6, 20 * 10**6))
        assert out.line(10 * 10**6) == 0.5 and out.line(20 * 10**6) == 0.25
        assert out.line(0) == 0 and out.line(30 * 10**6) == 0
        assert out.power() == pytest.approx(0.5**2 + 0.25**2)

    def test_full_band_identity(self):
        env = modulated(0.4)
        out = band_filter(env, (-GRID.nyquist, GRID.nyquist - GRID.df))
        assert np.array_equal(out.spectrum, env.spectrum)

    def test_off_grid_edge(self):
        with pytest.raises(ConfigurationError, match="off-grid"):
            band_filter(lines(f0=1.0), (500_000, 10**7))

    def test_empty(self):
        with pytest.raises(ConfigurationError):
            band_filter(lines(f0=1.0), (10**7, 5 * 10**6))


class TestLoss:
    def test_identity(self):
        env = modulated(0.3)
        assert apply_loss(env, 0.0) is env

    def test_three_db(self):
        env = modulated(0.3)
        assert apply_loss(env, 3.0).power() == pytest.approx(env.power() * 10**-0.3, rel=1e-12)

    @given(st.floats(min_value=0, max_value=50), st.floats(min_value=0, max_value=50))
    def test_composes(self, a, b):
        env = lines(f0=1.0, f5=0.3)
        one = apply_loss(apply_loss(env, a), b)
        both = apply_loss(env, a + b)
        np.testing.assert_allclose(one.spectrum, both.spectrum, rtol=1e-12, atol=0)

    def test_negative(self):
        with pytest.raises(ConfigurationError):
            apply_loss(lines(f0=1.0), -1.0)


class TestPhotodetection:
    def test_cw_current(self):
        cur = photodetect(lines(f0=math.sqrt(1e-3)), UNIT)
        np.testing.assert_allclose(cur.samples, 1e-3, rtol=1e-12)
        assert cur.dc == pytest.approx(1e-3, rel=1e-12)

    def test_dc_only_has_no_ac(self):
        spec = rf_spectrum(photodetect(lines(f0=math.sqrt(1e-3)), UNIT), 50.0)
        assert np.all(w_to_dbm(spec.power[1:]) < -300)
        assert spec.dc_current == pytest.approx(1e-3)

    @pytest.mark.parametrize("phase", [0.0, 0.3, 2.5])
    def test_beat_note(self, phase):
        det = DetectorParams(sensitivity=0.9, rf_load=50.0)
        p0, p1 = 1e-3, 2e-5
        env = lines(f0=math.sqrt(p0), f5=math.sqrt(p1) * np.exp(1j * phase))
        spec = rf_spectrum(photodetect(env, det), det.rf_load)
        # i(t) = s(p0 + p1) + 2 s sqrt(p0 p1) cos(...) into R: <i^2> R
        expect = 2 * det.sensitivity**2 * p0 * p1 * det.rf_load
        assert spec.power_w(5 * 10**6) == pytest.approx(expect, rel=1e-10)

    def test_sinusoid(self):
        i1 = 2e-3
        cur = Photocurrent(1e-3 + i1 * np.cos(2 * np.pi * 7e6 * GRID.t), GRID)
        spec = rf_spectrum(cur, 50.0)
        assert spec.power_w(7 * 10**6) == pytest.approx(i1**2 / 2 * 50.0, rel=1e-12)

    def test_off_grid_frequency(self):
        spec = rf_spectrum(photodetect(lines(f0=1.0), UNIT), 50.0)
        with pytest.raises(ConfigurationError, match="off-grid"):
            spec.power_w(1_500_000)
        with pytest.raises(ConfigurationError):
            spec.power_w(0)


class TestTones:
    def test_imd3_bins(self):
        spec = rf_spectrum(photodetect(modulated(0.4), UNIT), 50.0)
        rep = extract_tones(spec, W1, W2)
        assert rep.imd3_1_dbm == spec.power_dbm(2 * W1 - W2)
        assert rep.imd3_2_dbm == spec.power_dbm(2 * W2 - W1)
        # equal drive: the two IMD3 products match
        assert rep.imd3_1_dbm == pytest.approx(rep.imd3_2_dbm, abs=0.1)
        assert rep.fund1_dbm == pytest.approx(rep.fund2_dbm, abs=0.1)

    def test_optical_lines_and_floor_flag(self):
        env = modulated(0.4)
        spec = rf_spectrum(photodetect(env, UNIT), 50.0)
        rep = extract_tones(spec, W1, W2, optical=env, optical_lines={"carrier": 0, "empty": 3 * 10**6})
        assert rep.optical_dbm["carrier"] == pytest.approx(w_to_dbm(env.line_power(0)))
        assert "empty" in rep.below_floor
        assert "opt_carrier_dbm" in rep.as_dict()

    def test_quadrature_small_signal(self):
        # at phi = pi/4 the detected fundamental follows (s P0 J0 J1 ...)^2 R: cross-check against
        # the intensity transfer P0 (1 + sin(2 x)) / 2 with x the drive phase
        zeta = 0.01
        env = modulated(zeta)
        spec = rf_spectrum(photodetect(env, UNIT), 50.0)
        i1 = 1e-3 * zeta  # d/dx of sin(2x)/2 = 1 at x = 0, times 2 zeta / 2
        assert spec.power_w(W1) == pytest.approx(i1**2 / 2 * 50.0, rel=1e-3)


class TestShotNoise:
    def test_formula(self):
        assert shot_noise_floor(1e-3, 50.0) == pytest.approx(
            10 * math.log10(2 * ELECTRON_CHARGE * 1e-3 * 50.0 / 1e-3), abs=1e-12)

    def test_ten_db(self):
        assert shot_noise_floor(1e-2, 50.0) - shot_noise_floor(1e-3, 50.0) == pytest.approx(10.0, abs=1e-12)

    def test_zero(self):
        assert shot_noise_floor(0.0, 50.0) == -math.inf
        with pytest.raises(ConfigurationError):
            shot_noise_floor(-1.0, 50.0)

    @pytest.mark.parametrize("detected_dbm, floor", [(-10.9, -174.9), (-20.9, -184.9)])
    def test_calibrated_floors(self, detected_dbm, floor):
        det = DetectorParams()
        assert shot_noise_floor(det.sensitivity * dbm_to_w(detected_dbm), det.rf_load) == pytest.approx(floor, abs=0.05)


class TestSfdr:
    @staticmethod
    def exact_sweep(oip3, gain=0.0, lo=-30, hi=0):
        # slope-1 and slope-3 lines crossing at (iip3, oip3)
        iip3 = oip3 - gain
        return [(x, x + gain, oip3 + 3 * (x - iip3)) for x in range(lo, hi + 1, 2)]

    def test_synthetic(self):
        rep = compute_sfdr(self.exact_sweep(30.0), -170.0)
        assert rep.oip3_dbm == pytest.approx(30.0, abs=1e-9)
        assert rep.sfdr_db == pytest.approx(133.333333, abs=1e-5)
        assert rep.fund_slope == pytest.approx(1.0) and rep.imd3_slope == pytest.approx(3.0)

    @given(st.floats(min_value=-20, max_value=40), st.floats(min_value=-200, max_value=-120),
           st.floats(min_value=0.1, max_value=20))
    def test_two_thirds_law(self, oip3, floor, d):
        a = compute_sfdr(self.exact_sweep(oip3), floor).sfdr_db
        b = compute_sfdr(self.exact_sweep(oip3), floor + d).sfdr_db
        assert a - b == pytest.approx(2.0 / 3.0 * d, abs=1e-9)

    def test_intercepts(self):
        iip3, oip3, sfdr = sfdr_from_intercepts(5.0, -55.0, -170.0)
        assert iip3 == 30.0 and oip3 == 35.0
        assert sfdr == pytest.approx(2 / 3 * 205)

    def test_window_skips_saturation(self):
        pts = self.exact_sweep(30.0, lo=-30, hi=0)
        # compress the top three points
        sat = [(x, f - 0.5 * max(0, x + 6) ** 1.5, i - 4 * max(0, x + 6)) for x, f, i in pts]
        rep = compute_sfdr(sat, -170.0)
        assert rep.window[1] <= -6
        assert rep.sfdr_db == pytest.approx(133.333333, abs=1e-6)

    def test_no_window(self):
        pts = [(x, 2 * x, 2 * x) for x in range(-20, 1, 2)]
        with pytest.raises(FittingError, match="slope"):
            compute_sfdr(pts, -170.0)

    def test_too_few_points(self):
        with pytest.raises(FittingError):
            compute_sfdr(self.exact_sweep(30.0)[:3], -170.0)

    def test_floor_points_dropped(self):
        pts = self.exact_sweep(30.0) + [(2.0, 2.0, -400.0)]
        assert compute_sfdr(pts, -170.0).sfdr_db == pytest.approx(133.333333, abs=1e-5)


class TestChain:
    @pytest.mark.parametrize("scale, expect_db", [(math.sqrt(2), 6.0206), (2.0, 12.0412)])
    def test_square_law_scaling(self, scale, expect_db):
        # doubling optical power (sqrt(2) in amplitude) adds 6 dB of RF power
        for zeta in (0.01, 0.05):
            a = rf_spectrum(photodetect(modulated(zeta), UNIT), 50.0)
            b = rf_spectrum(photodetect(modulated(zeta, scale=scale), UNIT), 50.0)
            for f in (W1, W2, 2 * W1 - W2, 2 * W2 - W1):
                assert b.power_dbm(f) - a.power_dbm(f) == pytest.approx(expect_db, abs=1e-4)

    def test_loss_filter_commute(self):
        env = ComplexEnvelope.from_spectrum(modulated(0.3, offset=500 * 10**6).spectrum
                                            + modulated(0.3, offset=-500 * 10**6).spectrum, GRID)
        band = (250 * 10**6, 750 * 10**6)
        det = DetectorParams(sensitivity=0.388, rf_load=320.0)
        a = rf_spectrum(photodetect(apply_loss(band_filter(env, band), 3.0), det), det.rf_load)
        b = rf_spectrum(photodetect(band_filter(apply_loss(env, 3.0), band), det), det.rf_load)
        ra, rb = extract_tones(a, W1, W2).as_dict(), extract_tones(b, W1, W2).as_dict()
        for k in ra:
            assert ra[k] == pytest.approx(rb[k], rel=1e-12)

    def test_detect_applies_filter_and_loss(self):
        env = modulated(0.3, offset=500 * 10**6)
        det = DetectorParams(post_fiber_loss_db=3.0)
        out, spec = detect(env, det, (250 * 10**6, 750 * 10**6))
        assert out.power() == pytest.approx(env.power() * 10**-0.3, rel=1e-12)
        assert spec.dc_current == pytest.approx(det.sensitivity * out.power(), rel=1e-12)
