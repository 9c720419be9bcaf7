"""Order-k Borel transform, its formal inverse and Gevrey growth fits.

A :class:`BorelSeries` reuses the dense layout of
:class:`~nfk.series.TruncatedSeries` with one extra convention: array row
``r >= 1`` holds the coefficient of ``w**(r-1)`` and row ``0`` holds a
"unit" part. Under the formal Laplace transform row ``r`` maps to ``x**r``,
so the unit row is the image of ``x**0`` terms. Series that come from
``O(x)`` data have an empty unit row; the unit row only appears when a
problem has non-vanishing order-zero data.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
from scipy.special import gamma, gammaln

from .series import MultiIndex, TruncatedSeries, get_basis, monomial_values


def gamma_ratio_rows(rows: np.ndarray, k: int) -> np.ndarray:
    """``Gamma(rows / k)`` for positive integer rows.

    ``scipy.special.gamma`` is exact at small integers, so factorial rows
    divide out without rounding; ``gammaln`` takes over where it overflows.
    """
    t = np.asarray(rows, dtype=float) / k
    with np.errstate(over="ignore"):
        out = gamma(t)
    big = ~np.isfinite(out)
    out[big] = np.exp(gammaln(t[big]))
    return out


class BorelSeries(TruncatedSeries):
    """Truncated ``sum c[m, j] w**m z**j`` plus an optional unit part.

    ``M_max`` is the largest stored ``w``-degree; internally ``L_max = M_max + 1``.
    """

    __slots__ = ()

    @property
    def M_max(self) -> int:
        return self.L_max - 1

    @classmethod
    def zeros(cls, n_vars: int, n_comps: int, M_max: int, J_max: int) -> "BorelSeries":
        M = len(get_basis(n_vars, J_max))
        return cls(np.zeros((M_max + 2, M, n_comps), dtype=complex), n_vars, M_max + 1, J_max)

    @classmethod
    def from_dict(cls, data: Mapping[tuple[int, MultiIndex, int], complex], n_vars: int,
                  n_comps: int, M_max: int, J_max: int,
                  unit: Mapping[tuple[MultiIndex, int], complex] | None = None) -> "BorelSeries":
        """Build from ``{(m, j, i): value}`` (``w``-degree ``m``) and optional unit terms."""
        shifted = {(m + 1, j, i): v for (m, j, i), v in data.items()}
        for (j, i), v in (unit or {}).items():
            shifted[(0, j, i)] = shifted.get((0, j, i), 0) + v
        base = TruncatedSeries.from_dict(shifted, n_vars, n_comps, M_max + 1, J_max)
        return cls(base.coeffs, n_vars, M_max + 1, J_max)

    @classmethod
    def unit(cls, n_vars: int, M_max: int, J_max: int, n_comps: int = 1) -> "BorelSeries":
        """Multiplicative unit of the convolution algebra (image of ``x**0 = 1``)."""
        out = cls.zeros(n_vars, n_comps, M_max, J_max)
        arr = out.coeffs.copy()
        arr[0, 0, :] = 1.0
        return cls(arr, n_vars, M_max + 1, J_max)

    @classmethod
    def variable(cls, q: int, n_vars: int, M_max: int, J_max: int) -> "BorelSeries":
        """``z_q`` carried by the unit part."""
        out = cls.zeros(n_vars, 1, M_max, J_max)
        arr = out.coeffs.copy()
        j = tuple(1 if s == q else 0 for s in range(n_vars))
        arr[0, out.basis.index[j], 0] = 1.0
        return cls(arr, n_vars, M_max + 1, J_max)

    def __getitem__(self, key):
        m, j = key
        return super().__getitem__((m + 1, j))

    def coeff(self, m: int, j: Sequence[int], i: int = 0) -> complex:
        return complex(self[m, j][i])

    def unit_part(self) -> np.ndarray:
        """Unit-row coefficients ``[monomial, component]``."""
        return self.coeffs[0]

    def has_unit_part(self) -> bool:
        return bool(np.any(self.coeffs[0]))

    def items(self, tol: float = 0.0) -> Iterator[tuple[int, MultiIndex, int, complex]]:
        """Nonzero ``w``-polynomial entries as ``(m, j, i, value)``."""
        for r, j, i, v in super().items(tol):
            if r >= 1:
                yield r - 1, j, i, v

    def unit_items(self, tol: float = 0.0) -> Iterator[tuple[MultiIndex, int, complex]]:
        for r, j, i, v in super().items(tol):
            if r == 0:
                yield j, i, v

    def to_dict(self) -> dict:
        return {(m, j, i): v for m, j, i, v in self.items()}

    def truncate(self, M_max: int | None = None, J_max: int | None = None) -> "BorelSeries":
        return super().truncate(None if M_max is None else M_max + 1, J_max)

    def extend(self, M_max: int, J_max: int) -> "BorelSeries":
        return super().extend(M_max + 1, J_max)

    def drop_unit(self) -> "BorelSeries":
        return self.drop_constant()

    def mul_wk(self, k: int) -> "BorelSeries":
        """Multiply the function part by ``w**k``; the unit part is annihilated."""
        arr = np.zeros_like(self.coeffs)
        L = self.L_max
        if 1 + k <= L:
            arr[1 + k:] = self.coeffs[1:L + 1 - k]
        return type(self)(arr, self.n_vars, self.L_max, self.J_max)

    def evaluate(self, w: complex, z: Sequence[complex]) -> np.ndarray:
        """Value of the ``w``-polynomial part at ``(w, z)`` (the unit part is ignored)."""
        zpow = monomial_values(self.basis, z)
        wpow = np.zeros(self.L_max + 1, dtype=complex)
        wpow[1:] = np.asarray(w, dtype=complex) ** np.arange(self.L_max)
        return np.einsum("l,m,lmc->c", wpow, zpow, self.coeffs)

    def w_coefficients(self, z: Sequence[complex], comp: int = 0) -> np.ndarray:
        """Coefficients of the ``w``-polynomial obtained by fixing ``z``."""
        zpow = monomial_values(self.basis, z)
        return self.coeffs[1:, :, comp] @ zpow

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            raise TypeError("use convolve_series for products in the Borel plane")
        return self.scale(other)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        nz = int(np.count_nonzero(self.coeffs))
        return (f"BorelSeries(n_vars={self.n_vars}, n_comps={self.n_comps}, "
                f"M_max={self.M_max}, J_max={self.J_max}, nonzero={nz})")


class ConstantTermError(ValueError):
    """The series has ``x**0`` terms, which have no Borel image as a function."""


def borel_transform(h: TruncatedSeries, k: int, unital: bool = False) -> BorelSeries:
    """``x**l z**j -> w**(l-1) z**j / Gamma(l/k)``.

    With ``unital=True`` the ``x**0`` terms are kept in the unit part instead
    of raising :class:`ConstantTermError`.
    """
    if k < 1:
        raise ValueError("rank k must be >= 1")
    if h.L_max < 1:
        raise ValueError("need L_max >= 1 for a Borel transform")
    if not unital and not h.is_O_x():
        raise ConstantTermError("series has x**0 terms; pass unital=True to keep them")
    arr = h.coeffs.copy()
    rows = np.arange(1, h.L_max + 1)
    g = gamma_ratio_rows(rows, k)[:, None, None]
    # divide real and imaginary parts separately: complex division rounds
    arr[1:] = arr[1:].real / g + 1j * (arr[1:].imag / g)
    return BorelSeries(arr, h.n_vars, h.L_max, h.J_max)


def inverse_borel(H: BorelSeries, k: int) -> TruncatedSeries:
    """Formal Laplace transform: ``w**m -> Gamma((m+1)/k) x**(m+1)``; unit part -> ``x**0``."""
    arr = H.coeffs.copy()
    rows = np.arange(1, H.L_max + 1)
    arr[1:] = arr[1:] * gamma_ratio_rows(rows, k)[:, None, None]
    return TruncatedSeries(arr, H.n_vars, H.L_max, H.J_max)


def as_borel(h: TruncatedSeries) -> BorelSeries:
    """Reinterpret a raw coefficient array in Borel layout (no rescaling)."""
    return BorelSeries(h.coeffs, h.n_vars, h.L_max, h.J_max)


# -- Gevrey diagnostics ------------------------------------------------------

def order_norms(h: TruncatedSeries, R: float = 1.0) -> np.ndarray:
    """``||h_l|| = max_i sum_j |h[l, j, i]| R**|j|`` for every order ``l``."""
    weights = float(R) ** h.basis.degrees
    return np.max(np.einsum("lmc,m->lc", np.abs(h.coeffs), weights), axis=1)


@dataclass
class GevreyFit:
    """Least-squares Gevrey-1/k constants ``||h_l|| ~ K T**(l-1) Gamma(l/k)``."""

    K_fit: float
    T_fit: float
    k_assumed: int
    residual: float
    per_order_norms: list[float]
    degenerate: bool = False
    ratio_trend: float = 0.0
    subgeometric: bool = False
    orders_used: list[int] = field(default_factory=list)

    def bound_holds(self, slack: float = 0.5) -> bool:
        """Check ``||h_l|| <= K T**(l-1) Gamma(l/k) (1 + slack)`` on the fitted orders."""
        if self.degenerate:
            return False
        for l in self.orders_used:
            bound = self.K_fit * self.T_fit ** (l - 1) * math.gamma(l / self.k_assumed)
            if self.per_order_norms[l] > bound * (1 + slack):
                return False
        return True

    def to_dict(self) -> dict:
        return {"K": self.K_fit, "T": self.T_fit, "k": self.k_assumed,
                "residual": self.residual, "norms": list(self.per_order_norms),
                "degenerate": self.degenerate, "ratio_trend": self.ratio_trend,
                "subgeometric": self.subgeometric}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "norm"])
        for l, v in enumerate(self.per_order_norms):
            w.writerow([l, format(v, ".17g")])
        return buf.getvalue()


SUBGEOMETRIC_TREND = -1e-2


def gevrey_fit(h: TruncatedSeries, k: int, R: float = 1.0, l_min: int = 2) -> GevreyFit:
    """Fit ``log||h_l|| - log Gamma(l/k)`` linearly in ``l - 1`` over ``l >= l_min``.

    The slope gives ``log T`` and the intercept ``log K``. Besides the fit,
    the trend of successive log-ratios of the Borel coefficients
    ``||h_l|| / Gamma(l/k)`` is reported: geometric growth gives a flat
    trend, while the Borel coefficients of a convergent series fall off like
    ``1/Gamma(l/k)`` and their log-ratios keep decreasing.
    """
    if h.L_max < 6:
        raise ValueError("gevrey_fit needs L_max >= 6")
    norms = order_norms(h, R)
    if not np.any(norms > 0):
        raise ValueError("cannot fit an all-zero series")
    ls = [l for l in range(l_min, h.L_max + 1) if norms[l] > 0]
    if len(ls) < 2:
        return GevreyFit(float("nan"), float("nan"), k, float("nan"), norms.tolist(),
                         degenerate=True, orders_used=ls)
    la = np.array(ls, dtype=float)
    y = np.log(norms[ls]) - gammaln(la / k)
    X = np.column_stack([np.ones_like(la), la - 1])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    trend = 0.0
    consecutive = [l for l in ls if l + 1 in ls]
    if len(consecutive) >= 2:
        lr = np.array([y[ls.index(l + 1)] - y[ls.index(l)] for l in consecutive])
        trend = float(np.polyfit(np.array(consecutive, dtype=float), lr, 1)[0])
    return GevreyFit(float(np.exp(coef[0])), float(np.exp(coef[1])), k, resid, norms.tolist(),
                     degenerate=False, ratio_trend=trend,
                     subgeometric=trend < SUBGEOMETRIC_TREND, orders_used=ls)
