from __future__ import annotations

import math

import numpy as np
import pytest

from nfk.borel import (BorelSeries, ConstantTermError, as_borel, borel_transform, gevrey_fit,
                       inverse_borel, order_norms)
from nfk.conjugacy import solve_conjugacy
from nfk.series import TruncatedSeries
from nfk.spectrum import Spectrum, explicit_resonance_set

from conftest import random_series

INV_SQRT_PI = 0.56418958354775628695  # 1/Gamma(1/2), mpmath 30 digits


def euler_phi(L=20):
    spec = Spectrum((-1.0,), (), 1)
    rs = explicit_resonance_set(spec, [(0, (1,))], 1)
    f = TruncatedSeries.from_dict({(0, (0,), 0): 1.0}, 1, 1, L, 1)
    return solve_conjugacy(f, spec, rs).phi_hat


class TestTransform:
    def test_x_to_one(self):
        h = TruncatedSeries.x_power(1, 1, 4, 1)
        assert borel_transform(h, 1).coeff(0, (0,)) == 1.0

    def test_x_rank_two(self):
        h = TruncatedSeries.x_power(1, 1, 4, 1)
        assert borel_transform(h, 2).coeff(0, (0,)) == pytest.approx(INV_SQRT_PI, rel=1e-15)

    def test_monomial_law(self):
        for k in (1, 2, 3):
            for l in range(1, 9):
                h = TruncatedSeries.monomial(l, (1, 0), 1.0, L_max=9, J_max=2)
                B = borel_transform(h, k)
                assert B.coeff(l - 1, (1, 0)) == pytest.approx(1 / math.gamma(l / k), rel=1e-14)

    def test_constant_term_rejected(self):
        h = TruncatedSeries.from_dict({(0, (0,), 0): 1.0}, 1, 1, 3, 1)
        with pytest.raises(ConstantTermError):
            borel_transform(h, 1)

    def test_unital_keeps_constant(self):
        h = TruncatedSeries.from_dict({(0, (1,), 0): 2.0, (2, (0,), 0): 3.0}, 1, 1, 3, 1)
        B = borel_transform(h, 1, unital=True)
        assert B.has_unit_part()
        assert B.unit_part()[1, 0] == 2.0
        assert B.coeff(1, (0,)) == 3.0

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_round_trip(self, rng, k):
        h = random_series(rng, 2, 2, 9, 3, start=1)
        back = inverse_borel(borel_transform(h, k), k)
        assert back.allclose(h, rtol=1e-14)

    def test_round_trip_unital(self, rng):
        h = random_series(rng, 2, 1, 7, 2)
        assert inverse_borel(borel_transform(h, 2, unital=True), 2).allclose(h, rtol=1e-14)

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            borel_transform(TruncatedSeries.x_power(1, 1, 3, 1), 0)

    def test_as_borel_is_a_relabelling(self, rng):
        h = random_series(rng, 1, 1, 4, 2)
        B = as_borel(h)
        assert isinstance(B, BorelSeries) and np.array_equal(B.coeffs, h.coeffs)


class TestEuler:
    def test_geometric_borel_coefficients(self):
        # x phi(x) = sum (-1)**l l! x**(l+1)  ->  1/(1+w)
        xphi = euler_phi().extend(21, 1).mul_x(1)
        B = borel_transform(xphi, 1)
        coeffs = [B.coeff(m, (0,)) for m in range(21)]
        assert coeffs == [(-1.0) ** m for m in range(21)]

    def test_order_norms_factorial(self):
        norms = order_norms(euler_phi())
        assert norms[10] == math.factorial(10)


class TestGevreyFit:
    def test_euler(self):
        fit = gevrey_fit(euler_phi().extend(21, 1).mul_x(1), 1)
        assert not fit.degenerate
        assert fit.K_fit == pytest.approx(1.0, rel=1e-10)
        assert fit.T_fit == pytest.approx(1.0, rel=1e-10)
        assert fit.bound_holds()
        assert not fit.subgeometric

    def test_euler_rank_two_scaling(self):
        # coefficients K T**(l-1) Gamma(l/2) are recovered exactly
        K, T = 0.5, 3.0
        data = {(l, (0,), 0): K * T ** (l - 1) * math.gamma(l / 2) for l in range(1, 16)}
        fit = gevrey_fit(TruncatedSeries.from_dict(data, 1, 1, 15, 1), 2)
        assert fit.K_fit == pytest.approx(K, rel=1e-9) and fit.T_fit == pytest.approx(T, rel=1e-9)

    def test_convergent_control(self):
        # exp(x): Borel coefficients 1/((l-1)! l!) fall off faster than geometrically
        data = {(l, (0,), 0): 1 / math.factorial(l) for l in range(1, 21)}
        fit = gevrey_fit(TruncatedSeries.from_dict(data, 1, 1, 20, 1), 1)
        assert fit.subgeometric
        assert fit.ratio_trend < 0
        assert fit.T_fit < 1e-2

    def test_geometric_series_not_subgeometric(self):
        data = {(l, (0,), 0): 2.0 ** l * math.factorial(l - 1) for l in range(1, 21)}
        fit = gevrey_fit(TruncatedSeries.from_dict(data, 1, 1, 20, 1), 1)
        assert not fit.subgeometric
        assert fit.T_fit == pytest.approx(2.0, rel=1e-9)

    def test_degenerate_single_order(self):
        h = TruncatedSeries.from_dict({(3, (0,), 0): 1.0}, 1, 1, 8, 1)
        fit = gevrey_fit(h, 1)
        assert fit.degenerate and math.isnan(fit.K_fit) and not fit.bound_holds()

    def test_zero_series_rejected(self):
        with pytest.raises(ValueError):
            gevrey_fit(TruncatedSeries.zeros(1, 1, 8, 1), 1)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            gevrey_fit(TruncatedSeries.x_power(1, 1, 4, 1), 1)

    def test_csv(self):
        fit = gevrey_fit(euler_phi().extend(21, 1).mul_x(1), 1)
        lines = fit.to_csv().splitlines()
        assert lines[0] == "l,norm" and len(lines) == 23
        assert lines[3] == "2,1"
