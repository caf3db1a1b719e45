import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from besov_contract.specfun import DomainError, erfc, erfcx, log_erfc, log_erfcx, log_sum_exp

from conftest import mp_erfc, mp_erfcx


class TestErfc:
    def test_zero(self):
        assert erfc(0.0) == 1.0

    def test_reflection(self):
        assert erfc(-0.7) == pytest.approx(2.0 - erfc(0.7), abs=1e-15)

    def test_erfc_one(self):
        assert erfc(1.0) == pytest.approx(0.15729920705028513066, abs=1e-15)

    def test_against_multiprecision(self):
        z = np.linspace(-6.0, 6.0, 241)
        ref = np.array([mp_erfc(v) for v in z])
        assert np.max(np.abs(erfc(z) - ref)) <= 1e-14

    def test_monotone(self):
        z = np.linspace(-8.0, 30.0, 20001)
        assert np.all(np.diff(erfc(z)) <= 0)

    @given(st.floats(-20, 20))
    def test_reflection_identity(self, z):
        assert erfc(z) + erfc(-z) == pytest.approx(2.0, abs=1e-13)

    def test_scalar_in_scalar_out(self):
        assert isinstance(erfc(0.3), float)
        assert erfc(np.array([0.3])).shape == (1,)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_nonfinite(self, bad):
        with pytest.raises(DomainError):
            erfc(bad)


class TestErfcx:
    def test_zero(self):
        assert erfcx(0.0) == 1.0

    def test_moderate_cross_check(self):
        assert erfcx(5.0) == pytest.approx(math.exp(25.0) * mp_erfc(5.0), rel=1e-14)

    def test_huge(self):
        assert erfcx(1e6) == pytest.approx(1.0 / (1e6 * math.sqrt(math.pi)), rel=1e-10)
        assert erfcx(1e8) == pytest.approx(1.0 / (1e8 * math.sqrt(math.pi)), rel=1e-12)

    def test_against_multiprecision(self):
        z = np.concatenate([np.linspace(-5, 40, 181), np.logspace(1.7, 8, 40)])
        ref = np.array([mp_erfcx(v) for v in z])
        assert np.max(np.abs(erfcx(z) / ref - 1)) <= 1e-13

    def test_against_scipy(self):
        z = np.linspace(-10, 100, 5001)
        np.testing.assert_allclose(erfcx(z), special.erfcx(z), rtol=1e-13)

    def test_regime_seams_continuous(self):
        for seam in (1.5, 30.0):
            z = seam + np.array([-1e-12, 0.0, 1e-12])
            v = erfcx(z)
            assert np.ptp(v) / v[1] < 1e-11

    @given(st.floats(-5, 26))
    def test_product_identity(self, z):
        assert erfcx(z) * math.exp(-z * z) == pytest.approx(special.erfc(z), rel=1e-12, abs=1e-300)

    def test_strictly_decreasing(self):
        z = np.concatenate([np.linspace(0, 50, 50001), np.logspace(1.7, 8, 2000)])
        assert np.all(np.diff(erfcx(z)) < 0)

    def test_negative_near_overflow(self):
        # 2 e^{z^2} is the whole value for z <= -27; e^{729} is still representable
        assert erfcx(-26.6) == pytest.approx(2 * math.exp(26.6**2), rel=1e-13)


class TestLogs:
    def test_log_erfcx_large(self):
        assert log_erfcx(1e300) == pytest.approx(-math.log(1e300 * math.sqrt(math.pi)), rel=1e-15)

    def test_log_erfcx_negative_no_overflow(self):
        z = -100.0
        assert log_erfcx(z) == pytest.approx(z * z + math.log(2.0), rel=1e-15)

    def test_log_erfc_deep_tail(self):
        # erfc(40) underflows; its log does not
        assert log_erfc(40.0) == pytest.approx(-1600.0 + math.log(mp_erfcx(40.0)), rel=1e-15)

    def test_log_erfc_negative(self):
        assert log_erfc(-3.0) == pytest.approx(math.log(special.erfc(-3.0)), rel=1e-15)


class TestLogSumExp:
    def test_zero_zero(self):
        assert log_sum_exp(0.0, 0.0) == pytest.approx(math.log(2.0), abs=1e-16)

    def test_absorbing(self):
        assert log_sum_exp(-math.inf, 3.5) == 3.5
        assert log_sum_exp(-math.inf, -math.inf) == -math.inf

    def test_no_overflow(self):
        assert log_sum_exp(710.0, 700.0) == pytest.approx(710.0 + math.log1p(math.exp(-10.0)), rel=1e-16)

    @settings(max_examples=200)
    @given(st.floats(-700, 700), st.floats(-700, 700))
    def test_matches_direct(self, a, b):
        assert log_sum_exp(a, b) == pytest.approx(math.log(math.exp(a) + math.exp(b)), rel=1e-14, abs=1e-14)

    @pytest.mark.parametrize("a,b", [(math.nan, 0.0), (math.inf, 0.0), (0.0, math.inf)])
    def test_rejects(self, a, b):
        with pytest.raises(DomainError):
            log_sum_exp(a, b)
