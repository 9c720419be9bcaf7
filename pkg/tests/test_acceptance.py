"""End-to-end acceptance suite.

Every test prints a single ``criterion N: PASS|FAIL`` line with its measured
quantity and runtime, then asserts the same condition.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.integrate import quad

from nfk.borel import BorelSeries, borel_transform, gevrey_fit
from nfk.borel_solver import fixed_point_solve
from nfk.conjugacy import conjugacy_residual, solve_conjugacy
from nfk.convolution import convolve_numeric, convolve_series
from nfk.hopf import (HopfProblem, check_property_P, hopf_normal_form, hopf_resonance_sets,
                      in_R1, in_R2, invariant_manifold)
from nfk.jordan import dense_oracle, default_jordan_scale, path_length_sets, phi_backward_induction
from nfk.laplace import SectorSpec, ksum_evaluate, laplace_numeric
from nfk.norms import C_k, norm_mu_k, q_k, verify_borel_bound, verify_conv_bound
from nfk.series import TruncatedSeries, multi_indices
from nfk.spectrum import Spectrum, divisor_lower_bound, explicit_resonance_set, minimal_resonance_set

from conftest import random_borel, random_series, random_spectrum

SEED = 20240611
PI = 3.14159265358979323846
Q1 = 12.566370614359172954     # 4 pi
C1 = 464.52947765067044426     # C_k / k


def report(capsys, number, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    with capsys.disabled():
        print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  "
              f"[{elapsed:.2f}s / {limit:.0f}s]")
    return ok


def test_criterion_01_laplace_monomial_law(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for k in (1, 2, 3):
        sec = SectorSpec(0.0, math.pi / 2, 0.2, 1.0, k)
        for n in range(11):
            H = np.zeros(n + 1)
            H[n] = 1.0
            for x in (0.05, 0.1):
                want = math.gamma((n + 1) / k) * x ** (n + 1)
                worst = max(worst, abs(laplace_numeric(H, x, sec) - want) / want)
    ok = report(capsys, 1, worst <= 1e-8, f"max rel error {worst:.2e} (<= 1e-8)",
                time.perf_counter() - t0, 5)
    assert ok


def test_criterion_02_convolution_beta_law(capsys):
    t0 = time.perf_counter()
    worst_exact = worst_quad = 0.0
    for k in range(1, 5):
        for a in range(13):
            A = BorelSeries.from_dict({(a, (0,), 0): 1.0}, 1, 1, 26, 0)
            for b in range(13):
                want = math.gamma((a + 1) / k) * math.gamma((b + 1) / k) / math.gamma((a + b + 2) / k)
                B = BorelSeries.from_dict({(b, (0,), 0): 1.0}, 1, 1, 26, 0)
                got = convolve_series(A, B, k).coeff(a + b + 1, (0,))
                worst_exact = max(worst_exact, abs(got - want) / want)
                num = convolve_numeric(lambda s, a=a: s ** a, lambda s, b=b: s ** b, 1.0, k)
                worst_quad = max(worst_quad, abs(num - want) / want)
    one = BorelSeries.from_dict({(0, (0,), 0): 1.0}, 1, 1, 2, 0)
    pi_coeff = convolve_series(one, one, 2).coeff(1, (0,))
    pi_err = abs(pi_coeff - PI) / PI
    ok = worst_exact <= 1e-12 and worst_quad <= 1e-8 and pi_err <= 1e-12
    ok = report(capsys, 2, ok, f"exact {worst_exact:.2e} (<= 1e-12), quadrature {worst_quad:.2e} "
                f"(<= 1e-8), 1*1 = {pi_coeff.real:.15f} w", time.perf_counter() - t0, 10)
    assert ok


def test_criterion_03_convolution_bound(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    q1_err = abs(q_k(1) - Q1) / Q1
    margins = []
    for _ in range(500):
        k = int(rng.integers(1, 5))
        mu = float(rng.uniform(0.3, 4.0))
        alpha = float(rng.uniform(0.3, 0.95 * math.pi))
        nu = 0.5 * math.sin(k * alpha / 4) ** (1 / k) / mu
        sec = SectorSpec(0.0, alpha, nu, mu, k)
        H = rng.uniform(-1, 1, int(rng.integers(1, 7))) + 1j * rng.uniform(-1, 1, 1)
        J = rng.uniform(-1, 1, int(rng.integers(1, 7)))
        margins.append(verify_conv_bound(H, J, sec, samples=256))
    ok = q1_err <= 1e-15 and min(margins) >= 0
    ok = report(capsys, 3, ok, f"q_1 - 4 pi rel {q1_err:.1e}, min margin {min(margins):.3e} "
                f"over {len(margins)} trials", time.perf_counter() - t0, 30)
    assert ok


def test_criterion_04_euler_anchor(capsys):
    t0 = time.perf_counter()
    spec = Spectrum((-1.0,), (), 1)
    rs = explicit_resonance_set(spec, [(0, (1,))], 1)
    f = TruncatedSeries.from_dict({(0, (0,), 0): 1.0}, 1, 1, 20, 1)
    phi = solve_conjugacy(f, spec, rs).phi_hat
    exact = all(phi.coeff(l, (0,)) == (-1) ** l * math.factorial(l) for l in range(21))
    # Borel rows of x phi: row m holds (-1)**(m-1)
    B = borel_transform(phi.extend(21, 1).mul_x(1), 1)
    borel_ok = all(B.coeffs[m, 0, 0] == (-1) ** (m - 1) for m in range(1, 22))
    x = 0.1
    sec = SectorSpec(0.0, math.pi / 2, 0.2, 1.0, 1)
    ksum = x * ksum_evaluate(phi, [0.0], x, sec, pade=True)[0]
    ref = quad(lambda w: math.exp(-w / x) / (1 + w), 0, np.inf, epsabs=0, epsrel=1e-13)[0]
    err = abs(ksum - ref)
    ok = exact and borel_ok and err <= 1e-6
    ok = report(capsys, 4, ok, f"factorials exact={exact}, Borel (-1)**(m-1) exact={borel_ok}, "
                f"|x phi(0.1) - quad| = {err:.2e} (<= 1e-6)", time.perf_counter() - t0, 5)
    assert ok


def test_criterion_05_conjugacy_residual(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    cases = set()
    for trial in range(50):
        n = 1 + trial % 3
        k = 1 + (trial // 3) % 3
        jordan = n > 1 and (trial // 9) % 2 == 1
        spec = random_spectrum(rng, n, k, jordan)
        rs = minimal_resonance_set(spec, 0.05, 6)
        f = random_series(rng, n, n, 12, 6, deg=3, l_max=3, density=0.5)
        r = solve_conjugacy(f, spec, rs)
        scale = max(f.max_abs(), r.g_hat.max_abs(), r.phi_hat.max_abs())
        worst = max(worst, conjugacy_residual(f, spec, r) / scale)
        cases.add((n, k, any(spec.xi)))
    ok = worst <= 1e-10 and any(c[2] for c in cases) and any(not c[2] for c in cases)
    ok = report(capsys, 5, ok, f"max residual / max coeff {worst:.2e} (<= 1e-10), "
                f"{len(cases)} (n, k, nilpotent) classes", time.perf_counter() - t0, 120)
    assert ok


def test_criterion_06_jordan_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    uniform = True
    for trial in range(30):
        n = 2 + trial % 3
        J = 6
        M = int(rng.integers(4, 9))
        k = int(rng.integers(1, 4))
        lam = complex(-1.0, rng.uniform(-0.5, 0.5))
        xi = tuple(int(v) for v in rng.integers(0, 2, n - 1)) if trial % 2 else (1,) * (n - 1)
        if not any(xi):
            xi = (1,) + xi[1:]
        spec = Spectrum((lam,) * n, xi, k, 1.0)
        rs = minimal_resonance_set(spec, 0.05, J)
        K = divisor_lower_bound(rs, spec, nu=0.1).K
        spec = spec.with_r(default_jordan_scale(K, n))
        H = random_borel(rng, n, n, M, J, density=0.5)
        G1, P1 = phi_backward_induction(H, spec, rs)
        G2, P2 = dense_oracle(H, spec, rs)
        scale = max(P2.max_abs(), G2.max_abs(), 1e-300)
        worst = max(worst, np.abs(P1.coeffs - P2.coeffs).max() / scale,
                    np.abs(G1.coeffs - G2.coeffs).max() / scale)
        uniform &= all(len(v) == 1 for j in multi_indices(n, J)
                       for v in path_length_sets(j, n).values())
    ok = worst <= 1e-10 and uniform
    ok = report(capsys, 6, ok, f"max rel deviation {worst:.2e} (<= 1e-10), uniform path lengths={uniform}",
                time.perf_counter() - t0, 60)
    assert ok


def test_criterion_07_route_equivalence(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for trial in range(20):
        n = 1 + trial % 3
        k = 1 + trial % 2
        spec = random_spectrum(rng, n, k, jordan=trial % 4 >= 2)
        rs = minimal_resonance_set(spec, 0.05, 3)
        f = random_series(rng, n, n, 8, 3, deg=3, l_max=2, density=0.6)
        r = solve_conjugacy(f, spec, rs)
        G, Phi = fixed_point_solve(f, spec, rs)
        for X, y in ((G, r.g_hat), (Phi, r.phi_hat)):
            Y = borel_transform(y, k, unital=True)
            scale = np.maximum(np.abs(X.coeffs).max(axis=(1, 2)), 1.0)
            worst = max(worst, float((np.abs(X.coeffs - Y.coeffs).max(axis=(1, 2)) / scale).max()))
    ok = report(capsys, 7, worst <= 1e-9, f"max row-relative deviation {worst:.2e} (<= 1e-9)",
                time.perf_counter() - t0, 120)
    assert ok


def test_criterion_08_norm_bounds(capsys):
    t0 = time.perf_counter()
    one_err = 0.0
    monotone = True
    margins = []
    for k in (1, 2, 3):
        sec = SectorSpec(0.0, math.pi / 2, 0.5 * math.sin(k * math.pi / 8) ** (1 / k), 1.0, k)
        one_err = max(one_err, abs(norm_mu_k(np.array([1.0]), sec).value - 1))
        H = np.array([0.3, -1.0, 0.5, 0.2])
        vals = []
        for mu in (1.0, 1.5, 2.0, 3.0):
            vals.append(norm_mu_k(H, sec.replace(mu=mu, nu=sec.nu / mu)).value)
        monotone &= all(a >= b * (1 - 1e-9) for a, b in zip(vals, vals[1:]))
        for n in (1, 2):
            for T in (0.5, 1.0):
                mu = 1.5 * 2 ** (1 / k) * T
                nu = 0.5 * math.sin(k * math.pi / 8) ** (1 / k) / mu
                data = {(l, j, 0): T ** (l - 1 + sum(j)) for l in range(1, 9)
                        for j in multi_indices(n, 3)}
                h = TruncatedSeries.from_dict(data, n, 1, 8, 3)
                margins.append(verify_borel_bound(h, 1.0, T, SectorSpec(0.0, math.pi / 2, nu, mu, k)))
    ck = C_k(1)
    ok = one_err <= 1e-12 and monotone and min(margins) >= 0 and abs(ck - C1) <= 1e-12 * C1
    ok = report(capsys, 8, ok, f"| ||1|| - 1 | = {one_err:.1e}, mu-monotone={monotone}, "
                f"min Borel margin {min(margins):.3e}, C_k/k = {ck:.6f}", time.perf_counter() - t0, 60)
    assert ok


def test_criterion_09_zero_hopf(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    p_worst = real_worst = 0.0
    pattern_ok = True
    for N in (1, 2):
        rs = hopf_resonance_sets(N, 12)
        for j in multi_indices(2, 12):
            j1, j2 = j
            closed1 = (j1 == j2 + 1 and j2 <= N) or (j1 > N + 1 and j2 > N)
            closed2 = (j2 == j1 + 1 and j1 <= N) or (j2 > N + 1 and j1 > N)
            pattern_ok &= ((0, j) in rs) == closed1 == in_R1(j1, j2, N)
            pattern_ok &= ((1, j) in rs) == closed2 == in_R2(j1, j2, N)
    for k in (1, 2):
        for N in (1, 2):
            for theta in (0.0, math.pi):
                h1 = random_series(rng, 2, 1, 10, 4, deg=4, l_max=2, real=True, density=0.5)
                h2 = random_series(rng, 2, 1, 10, 4, deg=4, l_max=2, real=True, density=0.5)
                h1 = h1 + TruncatedSeries.monomial(1, (0, 0), 0.5, L_max=10, J_max=4)
                prob = HopfProblem(float(rng.uniform(0.5, 2.0)), k, h1, h2, N)
                nf = hopf_normal_form(prob, theta=theta, L_max=10, J_max=4)
                g, phi = nf.result.g_hat, nf.result.phi_hat
                p_worst = max(p_worst, nf.pairing_defect)
                if not (check_property_P(g) and check_property_P(phi)):
                    p_worst = max(p_worst, 1.0)
                sign = 1.0 if theta == 0.0 else -1.0
                ms = invariant_manifold(phi, theta, sign * np.array([0.02, 0.05, 0.08]), k=k)
                real_worst = max(real_worst, ms.realness_defect)
    ok = p_worst <= 1e-12 and pattern_ok and real_worst <= 1e-8
    ok = report(capsys, 9, ok, f"(P)/pairing defect {p_worst:.1e} (<= 1e-12), pattern/R1/R2 scan={pattern_ok}, "
                f"realness {real_worst:.1e} (<= 1e-8)", time.perf_counter() - t0, 120)
    assert ok


def test_criterion_10_gevrey_diagnostics(capsys):
    t0 = time.perf_counter()
    spec = Spectrum((-1.0,), (), 1)
    rs = explicit_resonance_set(spec, [(0, (1,))], 1)
    f = TruncatedSeries.from_dict({(0, (0,), 0): 1.0}, 1, 1, 20, 1)
    phi = solve_conjugacy(f, spec, rs).phi_hat
    fit = gevrey_fit(phi.extend(21, 1).mul_x(1), 1)
    control = TruncatedSeries.from_dict({(l, (0,), 0): 1 / math.factorial(l) for l in range(1, 21)},
                                        1, 1, 20, 1)
    cfit = gevrey_fit(control, 1)
    ok = (abs(fit.K_fit - 1) <= 0.1 and abs(fit.T_fit - 1) <= 0.1 and not fit.subgeometric
          and cfit.subgeometric)
    ok = report(capsys, 10, ok, f"Euler K={fit.K_fit:.4f} T={fit.T_fit:.4f}, control trend "
                f"{cfit.ratio_trend:.3f} (subgeometric={cfit.subgeometric})", time.perf_counter() - t0, 10)
    assert ok
