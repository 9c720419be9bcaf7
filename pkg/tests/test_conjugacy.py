from __future__ import annotations

import math

import numpy as np
import pytest

from nfk.borel import gevrey_fit, order_norms
from nfk.conjugacy import (NormalFormResult, conjugacy_residual, jordan_rescale,
                           row_scaled_residual, solve_conjugacy, solve_order_zero)
from nfk.series import TruncatedSeries
from nfk.spectrum import Spectrum, explicit_resonance_set, minimal_resonance_set

from conftest import random_series, random_spectrum
from oracles import xplane_linearization_oracle

EULER_SPEC = Spectrum((-1.0,), (), 1)


def euler(L=20):
    rs = explicit_resonance_set(EULER_SPEC, [(0, (1,))], 1)
    f = TruncatedSeries.from_dict({(0, (0,), 0): 1.0}, 1, 1, L, 1)
    return f, rs


class TestOrderZero:
    def test_no_order_zero_data(self, rng):
        spec = Spectrum((-1,), (), 1)
        rs = minimal_resonance_set(spec, 0.3, 4)
        f = random_series(rng, 1, 1, 4, 4, start=1)
        g0, p0, f1 = solve_order_zero(f, spec, rs)
        assert g0.max_abs() == 0 and p0.max_abs() == 0 and f1 is f

    def test_quadratic(self):
        spec = Spectrum((-1,), (), 1)
        rs = minimal_resonance_set(spec, 0.3, 4)
        f = TruncatedSeries.from_dict({(0, (2,), 0): 1.0}, 1, 1, 4, 4)
        g0, p0, f1 = solve_order_zero(f, spec, rs)
        # divisor lam - 2 lam = 1, so phi_0 = -z**2 and g_0 = 0
        assert g0.max_abs() == 0
        assert p0.to_dict() == {(0, (2,), 0): -1.0}
        assert np.allclose(f1.coeffs[0], 0)

    def test_resonant_monomial_goes_to_g(self):
        spec = Spectrum((-1,), (), 1)
        rs = minimal_resonance_set(spec, 0.3, 4)
        f = TruncatedSeries.from_dict({(0, (1,), 0): 0.7, (0, (3,), 0): 0.2}, 1, 1, 4, 4)
        g0, p0, f1 = solve_order_zero(f, spec, rs)
        assert g0.to_dict() == {(0, (1,), 0): 0.7}
        assert p0.to_dict() == {(0, (3,), 0): pytest.approx(-0.2 / 2)}
        assert np.allclose(f1.coeffs[0], g0.coeffs[0])


class TestSolver:
    def test_zero_input(self):
        spec = Spectrum((-1, -1.5), (0,), 2)
        rs = minimal_resonance_set(spec, 0.1, 3)
        r = solve_conjugacy(TruncatedSeries.zeros(2, 2, 5, 3), spec, rs)
        assert r.g_hat.max_abs() == 0 and r.phi_hat.max_abs() == 0 and r.residual_norm == 0

    def test_euler_factorials(self):
        f, rs = euler()
        r = solve_conjugacy(f, EULER_SPEC, rs)
        assert r.g_hat.max_abs() == 0
        a = [1.0]
        for l in range(1, 21):
            a.append(-l * a[-1])  # x^2 y' = -y + x  with  y = x phi
        assert [r.phi_hat.coeff(l, (0,)) for l in range(21)] == a

    def test_euler_gevrey_norms(self):
        f, rs = euler()
        r = solve_conjugacy(f, EULER_SPEC, rs)
        norms = order_norms(r.phi_hat)
        assert list(norms) == [float(math.factorial(l)) for l in range(21)]

    @pytest.mark.parametrize("n,k,jordan", [(2, 2, False), (2, 1, True), (3, 2, True), (1, 3, False)])
    def test_matches_linearization_oracle(self, rng, n, k, jordan):
        spec = random_spectrum(rng, n, k, jordan)
        J = 3 if n == 3 else 4
        rs = minimal_resonance_set(spec, 0.05, J)
        f = random_series(rng, n, n, 5, J, deg=3, l_max=2)
        r = solve_conjugacy(f, spec, rs)
        g, p = xplane_linearization_oracle(f, spec, rs)
        scale = max(p.max_abs(), g.max_abs(), 1.0)
        assert np.abs(r.g_hat.coeffs - g.coeffs).max() <= 1e-9 * scale
        assert np.abs(r.phi_hat.coeffs - p.coeffs).max() <= 1e-9 * scale

    def test_resonance_split(self, rng):
        spec = random_spectrum(rng, 3, 2, True)
        rs = minimal_resonance_set(spec, 0.1, 4)
        r = solve_conjugacy(random_series(rng, 3, 3, 6, 4, deg=3, l_max=2), spec, rs)
        mask = rs.mask(3, 4)
        assert np.all(r.g_hat.coeffs[:, ~mask] == 0)
        assert np.all(r.phi_hat.coeffs[:, mask] == 0)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_residual_small(self, rng, k):
        for n in (1, 2, 3):
            for jordan in (False, True):
                spec = random_spectrum(rng, n, k, jordan)
                rs = minimal_resonance_set(spec, 0.05, 4)
                f = random_series(rng, n, n, 8, 4, deg=3, l_max=2)
                r = solve_conjugacy(f, spec, rs)
                assert r.residual_rel <= 1e-10
                assert row_scaled_residual(f, spec, r.g_hat, r.phi_hat) <= 1e-10


class TestResidual:
    def test_zero(self):
        spec = Spectrum((-1,), (), 1)
        zero = TruncatedSeries.zeros(1, 1, 4, 2)
        assert conjugacy_residual(zero, spec, NormalFormResult(zero, zero, 0.0, (zero, zero))) == 0.0

    def test_sensitivity(self, rng):
        spec = random_spectrum(rng, 2, 1, False)
        rs = minimal_resonance_set(spec, 0.05, 3)
        f = random_series(rng, 2, 2, 5, 3, deg=2, l_max=1)
        r = solve_conjugacy(f, spec, rs)
        g = r.g_hat.coeffs.copy()
        g[2, 0, 0] += 1e-3
        bad = NormalFormResult(TruncatedSeries(g, 2, 5, 3), r.phi_hat, 0.0, r.order_zero)
        assert conjugacy_residual(f, spec, bad) >= 5e-4


class TestJordanRescale:
    def test_identity(self, rng):
        a = random_series(rng, 2, 2, 3, 3)
        assert np.array_equal(jordan_rescale(a, 1.0).coeffs, a.coeffs)

    def test_z2_power_law(self):
        a = TruncatedSeries.from_dict({(1, (0, 3), 0): 1.0}, 2, 1, 3, 3)
        assert jordan_rescale(a, 0.5).coeff(1, (0, 3)) == 0.125

    def test_involution(self, rng):
        a = random_series(rng, 3, 3, 3, 3)
        back = jordan_rescale(jordan_rescale(a, 0.3), 1 / 0.3)
        assert np.allclose(back.coeffs, a.coeffs, rtol=1e-13, atol=0)

    def test_conjugates_the_linear_part(self, rng):
        # solving with A = Lambda + r Xi equals rescaling the r = 1 solution
        lam = -1 + 0.4j
        s1 = Spectrum((lam, lam), (1,), 1, 1.0)
        r = 0.3
        sr = s1.with_r(r)
        rs = minimal_resonance_set(s1, 0.05, 4)
        f = random_series(rng, 2, 2, 5, 4, deg=3, l_max=2)
        # y = D w with D = diag(1, r):  f -> D^{-1} f(x, D w)
        fr = jordan_rescale(f, r)
        a = solve_conjugacy(f, s1, rs)
        b = solve_conjugacy(fr, sr, rs)
        assert np.allclose(jordan_rescale(a.phi_hat, r).coeffs, b.phi_hat.coeffs, rtol=1e-10, atol=1e-12)
        assert np.allclose(jordan_rescale(a.g_hat, r).coeffs, b.g_hat.coeffs, rtol=1e-10, atol=1e-12)

    def test_bad_scale(self, rng):
        with pytest.raises(ValueError):
            jordan_rescale(random_series(rng, 2, 2, 2, 2), 0.0)


def test_gevrey_fit_of_euler_transformation():
    f, rs = euler()
    r = solve_conjugacy(f, EULER_SPEC, rs)
    fit = gevrey_fit(r.phi_hat.extend(21, 1).mul_x(1), 1)
    assert fit.K_fit == pytest.approx(1, rel=1e-10) and fit.T_fit == pytest.approx(1, rel=1e-10)
