"""The order-k convolution in the Borel plane.

For functions of ``w``,

    (H * J)(w) = w * int_0^1 (s(1-s))**((1-k)/k) H(w (1-s)**(1/k)) J(w s**(1/k)) ds,

which on monomials gives ``w**a * w**b = B((b+1)/k, (a+1)/k) w**(a+b+1)``.
On :class:`~nfk.borel.BorelSeries` the product is computed exactly from
these Beta coefficients, with the unit row acting as the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gammaln, roots_jacobi, roots_legendre

from .borel import BorelSeries, borel_transform
from .series import (DimensionError, TruncatedSeries, bilinear, coefficients_by_monomial,
                     substitute)


@dataclass(frozen=True)
class QuadratureConfig:
    """Quadrature settings for :func:`convolve_numeric`.

    ``method="split"`` splits the interval at ``s = 1/2`` and substitutes
    ``s = t**k`` (resp. ``1 - s = t**k``) so that both the kernel singularity
    and the ``s**(1/k)`` branch point disappear; Gauss-Legendre with
    ``node_count`` nodes is then used on each half. ``method="jacobi"`` uses
    Gauss-Jacobi nodes for the kernel weight directly, which is exact only
    when the integrand is polynomial in ``s``.
    """

    node_count: int = 64
    tolerance: float = 1e-10
    method: str = "split"

    def __post_init__(self):
        if self.node_count < 8:
            raise ValueError("node_count must be >= 8")
        if self.method not in ("split", "jacobi"):
            raise ValueError(f"unknown quadrature method {self.method!r}")

    @staticmethod
    def jacobi_exponent(k: int) -> float:
        return (1 - k) / k


def convolve_monomial(a: int, b: int, k: int) -> tuple[int, float]:
    """Degree and coefficient of ``w**a * w**b`` under the order-``k`` convolution."""
    if a < 0 or b < 0:
        raise ValueError("monomial degrees must be non-negative")
    if k < 1:
        raise ValueError("rank k must be >= 1")
    return a + b + 1, float(beta_fn((b + 1) / k, (a + 1) / k))


@lru_cache(maxsize=None)
def _row_weights(L: int, k: int) -> np.ndarray:
    """``W[l1, l2]``: factor for row ``l1`` times row ``l2`` landing on row ``l1 + l2``."""
    W = np.ones((L + 1, L + 1))
    r = np.arange(1, L + 1, dtype=float)
    g = gammaln(r / k)
    for l1 in range(1, L + 1):
        for l2 in range(1, L + 1 - l1):
            W[l1, l2] = math.exp(g[l1 - 1] + g[l2 - 1] - gammaln((l1 + l2) / k))
    return W


def convolve_series(H: BorelSeries, J: BorelSeries, k: int) -> BorelSeries:
    """Exact convolution of truncated Borel series (bilinear in ``z``-monomials)."""
    if not isinstance(H, BorelSeries) or not isinstance(J, BorelSeries):
        raise TypeError("convolve_series expects BorelSeries operands")
    if H.n_vars != J.n_vars:
        raise DimensionError(f"n_vars mismatch: {H.n_vars} vs {J.n_vars}")
    L = min(H.L_max, J.L_max)
    Jm = min(H.J_max, J.J_max)
    a = TruncatedSeries.truncate(H, L, Jm)
    b = TruncatedSeries.truncate(J, L, Jm)
    W = _row_weights(L, k)
    out = bilinear(a.coeffs, b.coeffs, H.n_vars, L, Jm, weights=lambda la, lb: W[la, lb])
    return BorelSeries(out, H.n_vars, L, Jm)


def u_x(k: int, n_vars: int, M_max: int, J_max: int) -> BorelSeries:
    """The Borel image of ``x``: the constant ``1/Gamma(1/k)``."""
    return BorelSeries.from_dict({(0, (0,) * n_vars, 0): 1.0 / math.gamma(1.0 / k)},
                                 n_vars, 1, M_max, J_max)


def _check_finite(v: np.ndarray) -> None:
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite value in convolution integrand")


@lru_cache(maxsize=None)
def _legendre(N: int) -> tuple[np.ndarray, np.ndarray]:
    return roots_legendre(N)


def convolve_numeric(H: Callable, J: Callable, w: complex, k: int,
                     cfg: QuadratureConfig | None = None) -> complex:
    """Quadrature value of the order-``k`` convolution of callables at ``w``.

    ``H`` and ``J`` must accept numpy arrays of complex arguments.
    """
    cfg = cfg or QuadratureConfig()
    w = complex(w)
    if w == 0:
        return 0j
    e = QuadratureConfig.jacobi_exponent(k)
    if cfg.method == "jacobi":
        x, wt = roots_jacobi(cfg.node_count, e, e)
        s = (1 + x) / 2
        vals = np.asarray(H(w * (1 - s) ** (1 / k)), dtype=complex) * \
            np.asarray(J(w * s ** (1 / k)), dtype=complex)
        _check_finite(vals)
        return complex(w * np.sum(wt * vals) * 4.0 ** (-e) / 2)
    x, wt = _legendre(cfg.node_count)
    top = 2.0 ** (-1.0 / k)
    t = (x + 1) * top / 2
    wt = wt * top / 2
    rest = (1 - t ** k) ** (1.0 / k)
    kern = k * (1 - t ** k) ** e
    left = np.asarray(H(w * rest), dtype=complex) * np.asarray(J(w * t), dtype=complex)
    right = np.asarray(H(w * t), dtype=complex) * np.asarray(J(w * rest), dtype=complex)
    vals = kern * (left + right)
    _check_finite(vals)
    return complex(w * np.sum(wt * vals))


def conv_power(H: BorelSeries, j: Sequence[int], k: int) -> BorelSeries:
    """``H_1**j_1 * ... * H_n**j_n`` in the convolution algebra (``|j| >= 1``)."""
    j = tuple(int(t) for t in j)
    if len(j) != H.n_comps:
        raise DimensionError(f"index length {len(j)} differs from {H.n_comps} components")
    if sum(j) < 1:
        raise ValueError("conv_power needs |j| >= 1; the empty power is the unit")
    out = None
    for s, p in enumerate(j):
        for _ in range(p):
            comp = H.component(s)
            out = comp if out is None else convolve_series(out, comp, k)
    return out


def h_star(f: TruncatedSeries, Psi: BorelSeries, k: int) -> BorelSeries:
    """Borel image of ``f(x, z + psi)`` where ``Psi`` is the Borel image of ``psi``.

    Expands ``sum_j F_j * (z + Psi)**j`` with ``F_j`` the (unital) Borel
    transform of the ``z**j`` coefficient of ``f``.
    """
    n = f.n_vars
    if Psi.n_vars != n or Psi.n_comps != n:
        raise DimensionError("shift must be an n-component series in n variables")
    L = min(f.L_max, Psi.L_max)
    Jm = min(f.J_max, Psi.J_max)
    f = TruncatedSeries.truncate(f, L, Jm)
    Psi = TruncatedSeries.truncate(Psi, L, Jm)
    M_max = L - 1
    parts = {j: borel_transform(F, k, unital=True)
             for j, F in coefficients_by_monomial(f).items()}
    if not parts:
        return BorelSeries.zeros(n, f.n_comps, M_max, Jm)
    ys = [BorelSeries.variable(s, n, M_max, Jm) + Psi.component(s) for s in range(n)]
    one = BorelSeries.unit(n, M_max, Jm)
    return substitute(parts, ys, one, lambda a, b: convolve_series(a, b, k))
