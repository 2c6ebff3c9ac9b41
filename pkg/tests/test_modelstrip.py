"""Tests for the flat-strip stability model."""

import math

import numpy as np
import pytest

from bandpde.errors import NoRoot
from bandpde.modelstrip import (
    ONESIDED4,
    SYMMETRIC4,
    StripProblem,
    StripTrace,
    boundary_amplification,
    closure_ghost_coefficient,
    elliptic_roots,
    parabolic_growth,
    spectral_derivative,
    strip_simulate,
    wave_even_root,
    wave_odd_roots,
    wave_roots,
)

TWO_PI = 2.0 * math.pi

# frozen reference values for epsilon=0.01, omega=2*pi, k=2, alpha=-1, c=1;
# computed by solving kappa*tanh(2*kappa*eps) = omega**2 to machine precision
PIN_KAPPA = 51.18152689231693
PIN_GROWTH = 2579.0702774246042


class TestClosureWeights:
    def test_ghost_coefficients(self):
        assert closure_ghost_coefficient(SYMMETRIC4) == pytest.approx(-1.0 / 6.0, abs=1e-15)
        assert closure_ghost_coefficient(ONESIDED4) == pytest.approx(0.25, abs=1e-15)

    def test_rejects_weights_missing_moments(self):
        with pytest.raises(ValueError):
            closure_ghost_coefficient({-1: 0.5, 1: 0.5})  # second moment is 1

    def test_coefficient_matches_finite_difference(self):
        # ghost - data ~= coeff * h^4 * f'''' for any smooth sample
        f = lambda x: math.sin(2.0 * x + 0.3)
        f4 = lambda x: 16.0 * math.sin(2.0 * x + 0.3)
        x0, h = 0.37, 1e-3
        for weights, rtol in ((SYMMETRIC4, 1e-4), (ONESIDED4, 1e-2)):
            ghost = sum(w * f(x0 + j * h) for j, w in weights.items())
            measured = (ghost - f(x0)) / h**4
            expected = closure_ghost_coefficient(weights) * f4(x0)
            assert measured == pytest.approx(expected, rel=rtol)

    def test_amplification_at_alternating_mode(self):
        assert boundary_amplification(SYMMETRIC4) == pytest.approx(-5.0 / 3.0, abs=1e-12)
        assert boundary_amplification(ONESIDED4) == pytest.approx(-3.0, abs=1e-12)

    def test_amplification_at_zero_phase_is_one(self):
        assert boundary_amplification(SYMMETRIC4, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert boundary_amplification(ONESIDED4, 0.0) == pytest.approx(1.0, abs=1e-15)


class TestStripProblem:
    def test_validation(self):
        with pytest.raises(ValueError):
            StripProblem(epsilon=0.0)
        with pytest.raises(ValueError):
            StripProblem(epsilon=0.1, mu=-1.0)
        with pytest.raises(ValueError):
            StripProblem(epsilon=0.1, k=0)
        with pytest.raises(ValueError):
            StripProblem(epsilon=0.1, flow="banana")

    def test_alpha_tilde(self):
        assert StripProblem(epsilon=0.1, k=1, alpha=3.0).alpha_tilde is None
        assert StripProblem(epsilon=0.1, k=2, alpha=3.0).alpha_tilde == -3.0
        assert StripProblem(epsilon=0.1, k=4, alpha=3.0).alpha_tilde == 3.0


class TestParabolicGrowth:
    def test_pinned_unstable_case(self):
        p = StripProblem(epsilon=0.01, mu=1.0, c=1.0, k=2, alpha=-1.0,
                         flow="parabolic")
        root = parabolic_growth(p, TWO_PI)
        assert root.kappa.real == pytest.approx(PIN_KAPPA, rel=1e-12)
        assert root.kappa.imag == 0.0
        assert root.growth.real == pytest.approx(PIN_GROWTH, rel=1e-12)
        assert root.residual < 1e-12
        assert root.classification == "unstable"

    def test_small_amplitude_is_stable(self):
        p = StripProblem(epsilon=0.01, mu=1.0, c=0.0, k=2, alpha=-1e-4,
                         flow="parabolic")
        root = parabolic_growth(p, TWO_PI)
        assert root.classification == "stable"
        assert root.growth.real == pytest.approx(-39.281020, rel=1e-6)

    def test_energy_stable_cases_return_none(self):
        odd = StripProblem(epsilon=0.01, k=1, alpha=1.0, flow="parabolic")
        assert parabolic_growth(odd, TWO_PI) is None
        # k=2 flips the sign, so positive alpha gives alpha_tilde < 0
        neg = StripProblem(epsilon=0.01, k=2, alpha=1.0, flow="parabolic")
        assert parabolic_growth(neg, TWO_PI) is None
        flat = StripProblem(epsilon=0.01, k=2, alpha=0.0, flow="parabolic")
        assert parabolic_growth(flat, TWO_PI) is None

    def test_zero_wavenumber_has_no_root(self):
        p = StripProblem(epsilon=0.01, k=2, alpha=-1.0, flow="parabolic")
        with pytest.raises(NoRoot):
            parabolic_growth(p, 0.0)


class TestEllipticRoots:
    def test_odd_order_has_no_roots(self):
        p = StripProblem(epsilon=0.05, k=1, alpha=1.0, flow="elliptic")
        assert elliptic_roots(p) == []

    def test_nonpositive_amplitude_has_no_roots(self):
        p = StripProblem(epsilon=0.05, k=2, alpha=2.0, flow="elliptic")
        assert elliptic_roots(p) == []

    def test_positive_amplitude_has_one_symmetric_pair(self):
        p = StripProblem(epsilon=0.05, mu=1.0, c=1.0, k=2, alpha=-2.0,
                         flow="elliptic")
        roots = elliptic_roots(p)
        assert len(roots) == 2
        assert roots[0].omega == pytest.approx(-roots[1].omega, rel=1e-14)
        assert roots[1].omega == pytest.approx(0.228993609485, rel=1e-9)
        assert all(r.residual < 1e-12 for r in roots)
        assert all(abs(r.omega) < 1.0 / p.epsilon for r in roots)

    def test_agrees_with_dense_scan(self):
        p = StripProblem(epsilon=0.05, mu=1.0, c=1.0, k=2, alpha=-2.0,
                         flow="elliptic")
        ws = np.arange(-1000.0, 1000.0 + 1e-3, 1e-3)
        kap = np.sqrt(ws * ws + p.c)
        gap = kap * np.tanh(2.0 * kap * p.epsilon) - p.alpha_tilde * ws**2
        flips = np.nonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) < 0)[0]
        roots = elliptic_roots(p)
        assert len(flips) == len(roots) == 2
        for i, r in zip(flips, roots):
            assert ws[i] <= r.omega <= ws[i + 1]

    def test_quartic_order_pair(self):
        p = StripProblem(epsilon=0.05, mu=1.0, c=0.0, k=4, alpha=5.0,
                         flow="elliptic")
        roots = elliptic_roots(p)
        assert [r.omega for r in roots] == pytest.approx(
            [-0.1414166428, 0.1414166428], rel=1e-8)

    def test_requires_positive_normal_weight(self):
        p = StripProblem(epsilon=0.05, mu=0.0, k=2, alpha=-1.0, flow="elliptic")
        with pytest.raises(ValueError):
            elliptic_roots(p)


class TestWaveEven:
    def test_positive_amplitude_grows(self):
        p = StripProblem(epsilon=0.01, mu=1.0, k=2, alpha=-1.0, flow="wave")
        root = wave_even_root(p, TWO_PI)
        assert root.classification == "unstable"
        assert root.kappa == pytest.approx(PIN_KAPPA + 0j, rel=1e-12)
        assert root.growth.real == pytest.approx(50.79439218481312, rel=1e-12)
        assert root.growth.imag == 0.0
        assert root.residual < 1e-12

    def test_negative_amplitude_oscillates(self):
        p = StripProblem(epsilon=0.01, mu=1.0, k=2, alpha=1.0, flow="wave")
        root = wave_even_root(p, TWO_PI)
        assert root.classification == "neutral"
        assert root.kappa.real == 0.0
        assert root.kappa.imag == pytest.approx(39.35083285209425, rel=1e-12)
        assert abs(root.growth.real) < 1e-10
        assert root.growth.imag == pytest.approx(39.849296904184115, rel=1e-12)
        assert root.residual < 1e-12

    def test_stability_flips_with_amplitude_sign(self):
        # identical magnitudes, opposite signs: one grows, one does not
        grow = wave_even_root(
            StripProblem(epsilon=0.01, k=2, alpha=-1.0, flow="wave"), TWO_PI)
        calm = wave_even_root(
            StripProblem(epsilon=0.01, k=2, alpha=1.0, flow="wave"), TWO_PI)
        assert grow.classification == "unstable"
        assert calm.classification == "neutral"

    def test_rejects_odd_order_and_zero_amplitude(self):
        with pytest.raises(ValueError):
            wave_even_root(
                StripProblem(epsilon=0.01, k=1, alpha=1.0, flow="wave"), TWO_PI)
        with pytest.raises(NoRoot):
            wave_even_root(
                StripProblem(epsilon=0.01, k=2, alpha=0.0, flow="wave"), TWO_PI)


class TestWaveOdd:
    def setup_method(self):
        self.p = StripProblem(epsilon=0.05, mu=1.0, k=1, alpha=1.0, flow="wave")

    def test_moderate_amplitude_root_family(self):
        roots = wave_odd_roots(self.p, TWO_PI)
        assert 25 <= len(roots) <= 40
        lead = roots[0]
        assert lead.kappa == pytest.approx(4.9549434479 + 6.1190689997j, abs=1e-8)
        assert lead.growth == pytest.approx(3.7251369479 + 8.1392016646j, abs=1e-8)
        assert all(r.residual <= 1e-10 for r in roots)
        assert all(r.growth.real > 0 for r in roots)
        assert all(r.classification == "unstable" for r in roots)

    def test_sorted_most_unstable_first(self):
        roots = wave_odd_roots(self.p, TWO_PI)
        reals = [r.growth.real for r in roots]
        assert all(a >= b - 1e-12 for a, b in zip(reals, reals[1:]))

    def test_conjugate_symmetry_under_sign_flip(self):
        plus = wave_odd_roots(self.p, TWO_PI)
        minus = wave_odd_roots(
            StripProblem(epsilon=0.05, k=1, alpha=-1.0, flow="wave"), TWO_PI)
        assert len(plus) == len(minus)
        key = lambda z: (round(z.real, 9), round(z.imag, 9))
        a = sorted((r.kappa for r in plus), key=key)
        b = sorted((r.kappa.conjugate() for r in minus), key=key)
        assert max(abs(x - y) for x, y in zip(a, b)) < 1e-9

    def test_zero_amplitude_raises(self):
        p = StripProblem(epsilon=0.05, k=1, alpha=0.0, flow="wave")
        with pytest.raises(NoRoot):
            wave_odd_roots(p, TWO_PI)

    def test_rejects_even_order(self):
        p = StripProblem(epsilon=0.05, k=2, alpha=1.0, flow="wave")
        with pytest.raises(ValueError):
            wave_odd_roots(p, TWO_PI)

    def test_sweep_collects_per_wavenumber(self):
        p = StripProblem(epsilon=0.01, k=2, alpha=-1.0, flow="wave")
        out = wave_roots(p, omegas=[TWO_PI, 2.0 * TWO_PI])
        assert [r.omega for r in out] == pytest.approx([TWO_PI, 2.0 * TWO_PI])


class TestSpectralDerivative:
    def test_first_and_second_derivatives(self):
        n = 64
        x = np.arange(n) / n
        row = np.cos(TWO_PI * x)
        d1 = spectral_derivative(row, 1)
        d2 = spectral_derivative(row, 2)
        assert np.allclose(d1, -TWO_PI * np.sin(TWO_PI * x), atol=1e-10)
        assert np.allclose(d2, -TWO_PI**2 * np.cos(TWO_PI * x), atol=1e-9)

    def test_mode_cut_drops_fast_modes(self):
        n = 64
        x = np.arange(n) / n
        row = np.cos(TWO_PI * x) + np.cos(3.0 * TWO_PI * x)
        d2 = spectral_derivative(row, 2, mode_cut=1)
        assert np.allclose(d2, -TWO_PI**2 * np.cos(TWO_PI * x), atol=1e-9)


class TestStripSimulate:
    def test_input_validation(self):
        ell = StripProblem(epsilon=0.05, k=2, alpha=-1.0, flow="elliptic")
        with pytest.raises(ValueError):
            strip_simulate(ell, nx=100, until=0.1)
        par = StripProblem(epsilon=0.013, k=2, alpha=-1.0, flow="parabolic")
        with pytest.raises(ValueError):
            strip_simulate(par, nx=100, until=0.1)  # 2.6 cells tall
        ok = StripProblem(epsilon=0.05, k=2, alpha=-1.0, flow="parabolic")
        with pytest.raises(ValueError):
            strip_simulate(ok, nx=100, until=0.1, closure="banana")

    def test_parabolic_rate_matches_analysis(self):
        p = StripProblem(epsilon=0.01, mu=1.0, c=1.0, k=2, alpha=-1.0,
                         flow="parabolic")
        mode = lambda X, Y: np.cos(TWO_PI * X) * np.cosh(PIN_KAPPA * (Y + p.epsilon))
        trace = strip_simulate(p, nx=400, until=3e-3, ic=mode, mode_cut=1)
        assert trace.growth_rate() == pytest.approx(PIN_GROWTH, rel=2e-2)

    def test_parabolic_odd_order_decays(self):
        p = StripProblem(epsilon=0.05, mu=1.0, c=1.0, k=1, alpha=1.0,
                         flow="parabolic")
        trace = strip_simulate(p, nx=100, until=0.05)
        assert trace.sup[-1] < 0.1
        assert trace.growth_rate() < -20.0

    def test_wave_closure_contrast(self):
        # a plain reflecting wall, closed two ways at fourth order: the
        # extrapolation signs land on opposite sides of the neutral line
        p = StripProblem(epsilon=0.05, mu=1.0, k=4, alpha=0.0, flow="wave")
        calm = strip_simulate(p, nx=100, until=2.0, closure="symmetric4")
        wild = strip_simulate(p, nx=100, until=2.0, closure="onesided4",
                              sup_limit=1e12)
        assert calm.sup[-1] <= 1.5
        assert wild.sup[-1] >= 1e3

    def test_flat_velocity_mode_grows_linearly(self):
        # with no normal weight, a tangentially constant velocity bump
        # passes through the closure untouched and integrates exactly
        p = StripProblem(epsilon=0.05, mu=0.0, k=2, alpha=-1.0, flow="wave")
        bump = lambda X, Y: 0.3 * np.cos(np.pi * Y / p.epsilon)
        base = strip_simulate(p, nx=50, until=0.5)
        bumped = strip_simulate(p, nx=50, until=0.5, velocity=bump)
        assert np.allclose(base.times, bumped.times)
        y = base.y[:, None]
        expected = base.times[-1] * 0.3 * np.cos(np.pi * y / p.epsilon)
        assert np.allclose(bumped.field - base.field,
                           np.broadcast_to(expected, base.field.shape),
                           atol=1e-10)

    def test_growth_fit_needs_positive_samples(self):
        trace = StripTrace(times=np.array([0.1]), sup=np.array([0.0]),
                           field=np.zeros((2, 2)), x=np.zeros(2),
                           y=np.zeros(2), dt=0.1)
        with pytest.raises(ValueError):
            trace.growth_rate()
