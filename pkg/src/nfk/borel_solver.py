"""Borel-plane fixed point for ``(G, Phi)``.

The Borel image of the conjugation equation reads ``LHS(G, Phi) = RHS(G, Phi)``
with

    LHS = G - A Phi + (d_z Phi) A z + w**k Phi
    RHS = h*(f, u_x * Phi) - u_x * ((d_z Phi) * G) - (1/k) w**(k-1) * Phi

where ``*`` is the order-k convolution and ``u_x = 1/Gamma(1/k)`` is the
Borel image of ``x``. ``LHS`` is inverted slot by slot
(:func:`nfk.jordan.phi_backward_induction`) and the map
``(G, Phi) -> LHS^{-1}(RHS(G, Phi))`` is iterated from zero. Every term of
``RHS`` raises the ``x``-order, so at finite truncation the iteration becomes
stationary after at most ``L_max + 1`` steps.

Order-zero data (``f(0, z) != 0``) live in the unit row of the Borel series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .borel import BorelSeries
from .convolution import convolve_series, h_star, u_x
from .jordan import phi_backward_induction
from .series import DimensionError, TruncatedSeries, matvec_z, partial_z, sum_series
from .spectrum import ResonanceSet, Spectrum


class IterationLimit(RuntimeError):
    """The fixed-point iteration did not settle within ``max_iter`` steps."""


def _linear_z(spec: Spectrum, M_max: int, J_max: int) -> BorelSeries:
    """``A z`` carried by the unit row (a pure multiplier in ``z``)."""
    n = spec.n
    zs = BorelSeries.stack([BorelSeries.variable(s, n, M_max, J_max) for s in range(n)])
    return matvec_z(spec.matrix(), zs)


def dz_conv(Phi: BorelSeries, V: BorelSeries, k: int) -> BorelSeries:
    """``sum_q (d Phi/d z_q) * V_q`` with ``*`` the convolution."""
    return sum_series(convolve_series(partial_z(Phi, q), V.component(q), k)
                      for q in range(Phi.n_vars))


def lhs_apply(G: BorelSeries, Phi: BorelSeries, spec: Spectrum) -> BorelSeries:
    """``G - A Phi + (d_z Phi) A z + w**k Phi``."""
    if G.n_vars != spec.n or Phi.n_vars != spec.n:
        raise DimensionError("G and Phi must live in n variables")
    L = min(G.L_max, Phi.L_max)
    J = min(G.J_max, Phi.J_max)
    G = TruncatedSeries.truncate(G, L, J)
    Phi = TruncatedSeries.truncate(Phi, L, J)
    Az = _linear_z(spec, L - 1, J)
    out = G - matvec_z(spec.matrix(), Phi)
    out = out + dz_conv(Phi, Az, spec.k)
    return out + Phi.mul_wk(spec.k)


def lhs_inverse(H: BorelSeries, spec: Spectrum, rset: ResonanceSet) -> tuple[BorelSeries, BorelSeries]:
    """Resonance-split inverse: ``G = H``-part on the set, ``Phi`` elsewhere."""
    return phi_backward_induction(H, spec, rset)


def rhs_apply(G: BorelSeries, Phi: BorelSeries, f: TruncatedSeries, spec: Spectrum,
              k: int | None = None) -> BorelSeries:
    """Borel image of ``f(x, z + x phi) - x (d_z phi) g - (1/k) x**k phi``."""
    k = spec.k if k is None else k
    L = min(G.L_max, Phi.L_max, f.L_max)
    J = min(G.J_max, Phi.J_max, f.J_max)
    G = TruncatedSeries.truncate(G, L, J)
    Phi = TruncatedSeries.truncate(Phi, L, J)
    M_max = L - 1
    ux = u_x(k, spec.n, M_max, J)
    shift = convolve_series(ux, Phi, k)
    out = h_star(f, shift, k)
    out = out - convolve_series(ux, dz_conv(Phi, G, k), k)
    wk1 = BorelSeries.from_dict({(k - 1, (0,) * spec.n, 0): 1.0}, spec.n, 1, M_max, J)
    return out - convolve_series(wk1, Phi, k).scale(1.0 / k)


@dataclass
class FixedPointTrace:
    corrections: list[float] = field(default_factory=list)
    first_changed_row: list[int] = field(default_factory=list)
    iterations: int = 0

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "corrections": self.corrections,
                "first_changed_row": self.first_changed_row}


def _first_changed_row(a: np.ndarray, b: np.ndarray, tol: float) -> int:
    diff = np.max(np.abs(a - b), axis=(1, 2))
    rows = np.nonzero(diff > tol)[0]
    return int(rows[0]) if rows.size else a.shape[0]


def fixed_point_solve(f: TruncatedSeries, spec: Spectrum, rset: ResonanceSet,
                      max_iter: int | None = None, tol: float = 0.0,
                      return_trace: bool = False):
    """Picard iteration ``(G, Phi) <- LHS^{-1}(RHS(G, Phi))`` from ``(0, 0)``.

    Stops once consecutive iterates differ by at most ``tol`` times the
    largest coefficient. ``Phi`` is the Borel image of ``phi`` including its
    order-zero part (kept in the unit row).
    """
    if f.n_vars != spec.n or f.n_comps != spec.n:
        raise DimensionError("f must have n variables and n components")
    n, L, J = spec.n, f.L_max, f.J_max
    max_iter = L + 3 if max_iter is None else max_iter
    G = BorelSeries.zeros(n, n, L - 1, J)
    Phi = BorelSeries.zeros(n, n, L - 1, J)
    trace = FixedPointTrace()
    for it in range(1, max_iter + 1):
        G_new, Phi_new = lhs_inverse(rhs_apply(G, Phi, f, spec), spec, rset)
        scale = max(G_new.max_abs(), Phi_new.max_abs(), 1e-300)
        change = max(np.max(np.abs(G_new.coeffs - G.coeffs)), np.max(np.abs(Phi_new.coeffs - Phi.coeffs)))
        trace.corrections.append(float(change))
        stacked_new = np.concatenate([G_new.coeffs, Phi_new.coeffs], axis=2)
        stacked_old = np.concatenate([G.coeffs, Phi.coeffs], axis=2)
        trace.first_changed_row.append(_first_changed_row(stacked_new, stacked_old, tol * scale))
        G, Phi = G_new, Phi_new
        trace.iterations = it
        if change <= tol * scale:
            break
    else:
        raise IterationLimit(f"no convergence within {max_iter} iterations "
                             f"(last correction {trace.corrections[-1]:.3e})")
    if return_trace:
        return G, Phi, trace
    return G, Phi
