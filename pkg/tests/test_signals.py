import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from temcodec.signals import (
    BandSpec,
    Constant,
    ModulatedTone,
    QuadratureError,
    SignalSum,
    SincTone,
    Tone,
    TWO_PI,
    band_spec_from_edges,
    integrate,
    modulated_test_signal,
)

# High-precision references computed with a 50-digit evaluation of the
# closed forms (independent of the numpy implementation under test).
X_AT_0137 = 0.14402944138855554
INT_0_TO_01 = -0.0052486586766862803
INT_M025_TO_04 = 0.00013408754548247837


class TestEval:
    def test_value_at_zero_is_limit(self, test_signal):
        # both sinc factors -> 1, leaving 2*cos(1)
        assert test_signal(0.0) == pytest.approx(2.0 * math.cos(1.0), rel=1e-15)

    def test_pure_tone_at_zero(self):
        assert Tone(1.7, TWO_PI * 50.0)(0.0) == pytest.approx(1.7, rel=1e-15)

    def test_golden_point_value(self, test_signal):
        assert test_signal(0.137) == pytest.approx(X_AT_0137, abs=1e-14)

    def test_vectorized_matches_scalar(self, test_signal):
        t = np.linspace(-0.3, 0.3, 7)
        vec = test_signal(t)
        assert vec.shape == t.shape
        for ti, vi in zip(t, vec):
            assert test_signal(float(ti)) == vi

    def test_total_at_sinc_singularities(self):
        sig = SincTone(1.0, TWO_PI * 10.0, TWO_PI * 50.0)
        assert np.isfinite(sig(0.0))
        assert sig(0.0) == pytest.approx(1.0, rel=1e-15)

    def test_modulated_tone_rejects_zero_rates(self):
        with pytest.raises(ValueError):
            ModulatedTone(TWO_PI * 50.0, 0.0, TWO_PI * 2.5)

    @pytest.mark.parametrize(
        "sig",
        [
            modulated_test_signal(),
            Tone(1.3, TWO_PI * 41.0, 0.2),
            SincTone(0.8, TWO_PI * 5.0, TWO_PI * 60.0, 1.0),
            Constant(-1.1),
            SignalSum([Tone(0.5, TWO_PI * 40.0), Tone(0.25, TWO_PI * 55.0, 1.0)]),
        ],
    )
    def test_amplitude_bound_holds_on_dense_grid(self, sig):
        t = np.linspace(-2.0, 2.0, 40001)
        assert np.max(np.abs(sig(t))) <= sig.amplitude_bound + 1e-12

    def test_signal_sum_bound_is_sum(self):
        s = SignalSum([Tone(0.5, 1.0), Constant(0.25)])
        assert s.amplitude_bound == 0.75


class TestIntegrate:
    def test_zero_integrand(self):
        assert integrate(Constant(0.0), -1.0, 3.0, 1e-12) == 0.0

    def test_full_period_cosine(self):
        omega = TWO_PI * 50.0
        assert abs(integrate(Tone(1.0, omega), 0.0, TWO_PI / omega, 1e-12)) < 1e-12

    def test_golden_interval(self, test_signal):
        assert integrate(test_signal, 0.0, 0.1, 1e-10) == pytest.approx(
            INT_0_TO_01, abs=2e-10
        )
        assert integrate(test_signal, -0.25, 0.4, 1e-10) == pytest.approx(
            INT_M025_TO_04, abs=2e-10
        )

    def test_cross_check_second_quadrature(self, test_signal):
        mine = integrate(test_signal, 0.0, 0.1, 1e-12)
        other, est = scipy.integrate.quad(lambda t: float(test_signal(t)), 0.0, 0.1,
                                          epsabs=1e-12, limit=200)
        assert est < 1e-10
        assert mine == pytest.approx(other, abs=1e-11)

    def test_empty_interval(self, test_signal):
        assert integrate(test_signal, 0.3, 0.3) == 0.0

    def test_reversed_limits_rejected(self, test_signal):
        with pytest.raises(ValueError):
            integrate(test_signal, 0.5, 0.2)
        with pytest.raises(ValueError):
            integrate(test_signal, 0.0, 1.0, tol=0.0)

    def test_budget_exhaustion_reports_estimate(self):
        with pytest.raises(QuadratureError) as info:
            integrate(Tone(1.0, TWO_PI * 50.0), 0.0, 1.0, tol=1e-30, max_panels=8)
        assert info.value.error_estimate > 0.0
        assert np.isfinite(info.value.value)

    @settings(max_examples=40, deadline=None)
    @given(
        a=st.floats(-1.0, 1.0),
        b=st.floats(-1.0, 1.0),
        c=st.floats(-1.0, 1.0),
    )
    def test_additive_over_subintervals(self, a, b, c):
        lo, mid, hi = sorted((a, b, c))
        sig = modulated_test_signal()
        tol = 1e-10
        whole = integrate(sig, lo, hi, tol)
        parts = integrate(sig, lo, mid, tol) + integrate(sig, mid, hi, tol)
        assert whole == pytest.approx(parts, abs=2 * tol)

    def test_tone_antiderivative_on_random_intervals(self):
        rng = np.random.RandomState(1234)
        tol = 1e-11
        for _ in range(100):
            amp = rng.uniform(0.1, 2.0)
            omega = rng.uniform(5.0, 500.0)
            phase = rng.uniform(0.0, TWO_PI)
            a, b = np.sort(rng.uniform(-2.0, 2.0, size=2))
            sig = Tone(amp, omega, phase)
            exact = amp / omega * (math.sin(omega * b + phase) - math.sin(omega * a + phase))
            assert integrate(sig, a, b, tol) == pytest.approx(exact, abs=5 * tol)


class TestBandSpec:
    def test_reference_band(self, band_35_65):
        assert band_35_65.bandwidth == pytest.approx(TWO_PI * 30.0, rel=1e-12)
        assert band_35_65.k0 == 3
        # per-channel period at the Landau rate
        assert band_35_65.period == pytest.approx(1.0 / 30.0, rel=1e-12)

    def test_integer_band_position(self):
        b = 10.0
        spec = band_spec_from_edges(b, 2.0 * b)
        assert spec.k0 == 2

    def test_bandwidth_is_exact_difference(self):
        spec = band_spec_from_edges(217.3, 421.9)
        assert spec.bandwidth + spec.omega_l == spec.omega_u

    @settings(max_examples=50, deadline=None)
    @given(
        lo=st.floats(0.1, 1e4),
        width=st.floats(0.1, 1e4),
    )
    def test_invariants_hold_generically(self, lo, width):
        spec = band_spec_from_edges(lo, lo + width)
        assert spec.bandwidth + spec.omega_l == spec.omega_u
        ratio = 2.0 * spec.omega_l / spec.bandwidth
        assert spec.k0 >= math.ceil(ratio - 1e-9)
        assert spec.k0 <= math.ceil(ratio + 1e-9)

    @pytest.mark.parametrize("edges", [(0.0, 1.0), (-1.0, 2.0), (2.0, 1.0), (1.0, 1.0)])
    def test_bad_edges_rejected(self, edges):
        with pytest.raises(ValueError):
            band_spec_from_edges(*edges)
