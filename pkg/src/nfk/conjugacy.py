"""Formal normal form in the x-plane.

For ``dx/dt = x**(k+1)/k``, ``dy/dt = A y + x f(x, y)`` we look for
``y = z + x phi(x, z)`` turning the system into ``dz/dt = A z + x g(x, z)``
with ``g`` supported on the resonance set. Substituting gives

    g - A phi + (d_z phi) A z + (1/k) x**(k+1) d_x phi
        = f(x, z + x phi) - x (d_z phi) g - (1/k) x**k phi.

Every term on the right except the linear ones carries an extra factor of
``x``, so the coefficient of ``x**l`` reads
``g_l - A phi_l + (d_z phi_l) A z = H_l`` with ``H_l`` built from lower
orders only, and each order is a slot system handled by
:func:`nfk.jordan.solve_slots`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jordan import solve_slots, x_plane_T
from .series import (DimensionError, TruncatedSeries, add, compose_shift, get_basis, matvec_z,
                     mul, partial_z, sum_series, x_weighted_derivative)
from .spectrum import ResonanceSet, Spectrum


@dataclass
class NormalFormResult:
    """Output of :func:`solve_conjugacy`.

    ``phi_hat`` includes its ``x**0`` row, so the transformation is the single
    change of variables ``y = z + x phi_hat(x, z)``. ``order_zero`` repeats
    the ``x**0`` rows of ``g_hat`` and ``phi_hat``.
    """

    g_hat: TruncatedSeries
    phi_hat: TruncatedSeries
    residual_norm: float
    order_zero: tuple[TruncatedSeries, TruncatedSeries]
    residual_rel: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _check_problem(f: TruncatedSeries, spec: Spectrum) -> None:
    if f.n_vars != spec.n or f.n_comps != spec.n:
        raise DimensionError(f"f must have {spec.n} variables and components, "
                             f"got {f.n_vars} and {f.n_comps}")


def dz_phi_times(phi: TruncatedSeries, v: TruncatedSeries) -> TruncatedSeries:
    """``(d_z phi) v``, i.e. component ``i`` is ``sum_q d phi_i/d z_q * v_q``."""
    terms = [mul(partial_z(phi, q), v.component(q)) for q in range(phi.n_vars)]
    return sum_series(terms)


def linear_operator(g: TruncatedSeries, phi: TruncatedSeries, spec: Spectrum) -> TruncatedSeries:
    """``g - A phi + (d_z phi) A z``."""
    n = spec.n
    A = spec.matrix()
    zvec = TruncatedSeries.stack([TruncatedSeries.variable(s, n, phi.L_max, phi.J_max)
                                  for s in range(n)])
    Az = matvec_z(A, zvec)
    return add(add(g, -matvec_z(A, phi)), dz_phi_times(phi, Az))


def _rows_upto(s: TruncatedSeries, L: int) -> TruncatedSeries:
    return s.truncate(L_max=L)


def solve_order_zero(f: TruncatedSeries, spec: Spectrum, rset: ResonanceSet
                     ) -> tuple[TruncatedSeries, TruncatedSeries, TruncatedSeries]:
    """Solve ``g(0,z) - A phi(0,z) + (d_z phi(0,z)) A z = f(0,z)``.

    Returns ``(g0, phi0, f_shifted)`` where ``g0``, ``phi0`` hold only
    ``x**0`` rows and ``f_shifted`` is the right-hand side after the change
    ``y = u + x phi0(u)``. Its ``x**0`` part equals ``g0``, which lies on the
    resonance set, so the remaining problem has no non-resonant order-zero data.
    """
    _check_problem(f, spec)
    mask = rset.mask(spec.n, f.J_max)
    G, Phi = solve_slots(f.coeffs[:1], spec, mask, f.J_max, x_plane_T)
    shape = f.coeffs.shape
    g0 = np.zeros(shape, dtype=complex)
    p0 = np.zeros(shape, dtype=complex)
    g0[0], p0[0] = G[0], Phi[0]
    g0 = TruncatedSeries(g0, f.n_vars, f.L_max, f.J_max)
    phi0 = TruncatedSeries(p0, f.n_vars, f.L_max, f.J_max)
    if not np.any(p0):
        return g0, phi0, f
    # f1 = f(x, u + x phi0) + A phi0 - (d phi0) A u - (1/k) x**k phi0 - x (d phi0) f1
    k = spec.k
    zero_g = TruncatedSeries.zeros(f.n_vars, f.n_comps, f.L_max, f.J_max)
    base = add(compose_shift(f, phi0), -linear_operator(zero_g, phi0, spec))
    base = add(base, -phi0.mul_x(k).scale(1.0 / k))
    f1 = base
    for _ in range(f.L_max + 1):
        f1 = add(base, -dz_phi_times(phi0, f1).mul_x(1))
    return g0, phi0, f1


def solve_conjugacy(f: TruncatedSeries, spec: Spectrum, rset: ResonanceSet,
                    L_max: int | None = None, J_max: int | None = None) -> NormalFormResult:
    """Solve for ``(g, phi)`` order by order in ``x`` up to the truncation box."""
    _check_problem(f, spec)
    f = f.truncate(L_max, J_max)
    L, J = f.L_max, f.J_max
    n, k = spec.n, spec.k
    mask = rset.mask(n, J)
    M = len(get_basis(n, J))
    g_arr = np.zeros((L + 1, M, n), dtype=complex)
    p_arr = np.zeros((L + 1, M, n), dtype=complex)
    for l in range(L + 1):
        H = f.coeffs[l].copy() if l == 0 else np.zeros((M, n), dtype=complex)
        if l >= 1:
            phi_l = TruncatedSeries(p_arr[:l + 1], n, l, J)
            g_l = TruncatedSeries(g_arr[:l + 1], n, l, J)
            f_l = f.truncate(L_max=l)
            H += compose_shift(f_l, phi_l).coeffs[l]
            H -= dz_phi_times(phi_l, g_l).coeffs[l - 1]
            if l - k >= 0:
                H -= (l - k + 1) / k * p_arr[l - k]
        G, Phi = solve_slots(H[None], spec, mask, J, x_plane_T)
        g_arr[l], p_arr[l] = G[0], Phi[0]
    g = TruncatedSeries(g_arr, n, L, J)
    phi = TruncatedSeries(p_arr, n, L, J)
    result = NormalFormResult(g, phi, 0.0, (g.truncate(L_max=0), phi.truncate(L_max=0)))
    res, rel = conjugacy_residual(f, spec, result, relative=True)
    result.residual_norm = res
    result.residual_rel = rel
    return result


def conjugacy_defect(f: TruncatedSeries, spec: Spectrum, g: TruncatedSeries,
                     phi: TruncatedSeries) -> TruncatedSeries:
    """Left side minus right side of the conjugation equation, over the full box."""
    k = spec.k
    lhs = add(linear_operator(g, phi, spec), x_weighted_derivative(phi, k))
    rhs = add(compose_shift(f, phi), -dz_phi_times(phi, g).mul_x(1))
    rhs = add(rhs, -phi.mul_x(k).scale(1.0 / k))
    return add(lhs, -rhs)


def conjugacy_residual(f: TruncatedSeries, spec: Spectrum, result: NormalFormResult,
                       relative: bool = False):
    """Largest coefficient of the defect.

    The check covers every slot of the truncation box, which is exact because
    no retained coefficient depends on discarded ones. With ``relative=True``
    the pair ``(absolute, absolute / scale)`` is returned, where ``scale`` is
    the largest coefficient magnitude among ``f``, ``g`` and ``phi``.
    """
    g, phi = result.g_hat, result.phi_hat
    L = min(f.L_max, g.L_max, phi.L_max)
    J = min(f.J_max, g.J_max, phi.J_max)
    f, g, phi = f.truncate(L, J), g.truncate(L, J), phi.truncate(L, J)
    d = conjugacy_defect(f, spec, g, phi)
    res = d.max_abs()
    if not relative:
        return res
    scale = max(f.max_abs(), g.max_abs(), phi.max_abs(), 1e-300)
    return res, res / scale


def row_scaled_residual(f: TruncatedSeries, spec: Spectrum, g: TruncatedSeries,
                        phi: TruncatedSeries) -> float:
    """Defect at each ``x``-order divided by the largest coefficient up to that order.

    Unlike a single global scale this stays sensitive to errors in low orders
    when high-order coefficients grow factorially.
    """
    L = min(f.L_max, g.L_max, phi.L_max)
    J = min(f.J_max, g.J_max, phi.J_max)
    f, g, phi = f.truncate(L, J), g.truncate(L, J), phi.truncate(L, J)
    d = np.abs(conjugacy_defect(f, spec, g, phi).coeffs).max(axis=(1, 2))
    rows = np.max([np.abs(s.coeffs).max(axis=(1, 2)) for s in (f, g, phi)], axis=0)
    scale = np.maximum(np.maximum.accumulate(rows), 1e-300)
    return float((d / scale).max())


def jordan_rescale(series: TruncatedSeries, r: float) -> TruncatedSeries:
    """Apply ``z -> (z_1, r z_2, ..., r**(n-1) z_n)`` to a vector field component table.

    Slot ``(j, i)`` is multiplied by ``r**(sum_s (s-1) j_s - (i-1))`` (1-based
    ``s``, ``i``); for a scalar series only the ``j`` factor is used. Using
    ``1/r`` undoes the map.
    """
    if not r > 0:
        raise ValueError("scale r must be positive")
    n = series.n_vars
    exps = series.basis.exps
    wj = (float(r) ** (exps @ np.arange(n))) if n else np.ones(1)
    if series.n_comps == 1:
        wi = np.ones(1)
    elif series.n_comps == n:
        wi = float(r) ** (-np.arange(n, dtype=float))
    else:
        raise DimensionError("series must have 1 or n components")
    return type(series)(series.coeffs * wj[None, :, None] * wi[None, None, :],
                        series.n_vars, series.L_max, series.J_max)
