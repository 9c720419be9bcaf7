"""Doubly truncated power series in ``x`` and ``z = (z_1, ..., z_n)``.

A series is stored densely: ``coeffs[l, m, i]`` is the coefficient of
``x**l * z**j`` in component ``i``, where ``j`` is the ``m``-th multi-index of
a :class:`Basis`. Truncation is a box, ``l <= L_max`` and ``|j| <= J_max``.
Monomials are ordered by total degree, so lowering ``J_max`` keeps a prefix of
the basis.

Products are computed through cached pair tables; the coefficient at
``(l, j)`` of any product depends only on slots ``(l', j')`` with
``l' <= l`` and ``|j'| <= |j|``, so box truncation never corrupts retained
coefficients.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

MultiIndex = tuple[int, ...]

RTOL = 1e-12


class DimensionError(ValueError):
    """Raised when operands have incompatible variable or component counts."""


def degree(j: Sequence[int]) -> int:
    return int(sum(j))


def unit_index(q: int, n: int) -> MultiIndex:
    """Multi-index ``e_q`` (0-based ``q``)."""
    if not 0 <= q < n:
        raise ValueError(f"variable index {q} out of range for n={n}")
    return tuple(1 if s == q else 0 for s in range(n))


def multi_indices(n: int, max_degree: int) -> list[MultiIndex]:
    """All ``j`` in ``N_0^n`` with ``|j| <= max_degree``, graded then reverse-lex."""
    out: list[MultiIndex] = []
    for d in range(max_degree + 1):
        level = [j for j in itertools.product(range(d + 1), repeat=n) if sum(j) == d]
        level.sort(reverse=True)
        out.extend(level)
    if n == 0:
        return [()]
    return out


class Basis:
    """Monomial basis of ``z``-polynomials with total degree at most ``J``."""

    def __init__(self, n: int, J: int):
        if n < 0 or J < 0:
            raise ValueError("n and J must be non-negative")
        self.n = n
        self.J = J
        self.monomials = multi_indices(n, J)
        self.index = {j: m for m, j in enumerate(self.monomials)}
        self.exps = np.array(self.monomials, dtype=np.int64).reshape(len(self.monomials), n)
        self.degrees = self.exps.sum(axis=1) if n else np.zeros(1, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.monomials)

    def size_upto(self, J: int) -> int:
        """Number of monomials with degree ``<= J`` (a prefix of the basis)."""
        return int(np.count_nonzero(self.degrees <= J))

    def __repr__(self) -> str:
        return f"Basis(n={self.n}, J={self.J})"


@lru_cache(maxsize=None)
def get_basis(n: int, J: int) -> Basis:
    return Basis(n, J)


@lru_cache(maxsize=None)
def _z_pairs(n: int, J: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    basis = get_basis(n, J)
    ia, ib, ic = [], [], []
    for a, ja in enumerate(basis.monomials):
        room = J - sum(ja)
        for b in range(basis.size_upto(room)):
            jb = basis.monomials[b]
            ia.append(a)
            ib.append(b)
            ic.append(basis.index[tuple(x + y for x, y in zip(ja, jb))])
    return (np.array(ia, dtype=np.int64), np.array(ib, dtype=np.int64),
            np.array(ic, dtype=np.int64))


@lru_cache(maxsize=None)
def _xz_pairs(n: int, L: int, J: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Flattened pair table over ``(l, j)`` slots for a box-truncated product.

    Returns flat indices ``(ia, ib, ic)`` into arrays of shape ``(L+1)*M`` and
    the row indices ``(la, lb)`` of each pair (used for weighted products).
    """
    za, zb, zc = _z_pairs(n, J)
    M = len(get_basis(n, J))
    lpairs = [(l1, l2) for l1 in range(L + 1) for l2 in range(L + 1 - l1)]
    la = np.repeat(np.array([p[0] for p in lpairs], dtype=np.int64), za.size)
    lb = np.repeat(np.array([p[1] for p in lpairs], dtype=np.int64), za.size)
    za_t = np.tile(za, len(lpairs))
    zb_t = np.tile(zb, len(lpairs))
    zc_t = np.tile(zc, len(lpairs))
    return la * M + za_t, lb * M + zb_t, (la + lb) * M + zc_t, la, lb


def bilinear(a: np.ndarray, b: np.ndarray, n: int, L: int, J: int,
             weights: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Box-truncated product of coefficient arrays of shape ``(L+1, M, c)``.

    ``weights(la, lb)`` optionally scales the contribution of row pair
    ``(la, lb)``; this turns the Cauchy product into other row-graded
    products such as the Borel-plane convolution.
    """
    M = len(get_basis(n, J))
    ca, cb = a.shape[2], b.shape[2]
    if ca != cb and 1 not in (ca, cb):
        raise DimensionError(f"cannot multiply {ca}-component by {cb}-component series")
    c = max(ca, cb)
    ia, ib, ic, la, lb = _xz_pairs(n, L, J)
    af = a.reshape((L + 1) * M, ca)
    bf = b.reshape((L + 1) * M, cb)
    # drop pairs touching zero slots
    nz_a = np.any(af != 0, axis=1)
    nz_b = np.any(bf != 0, axis=1)
    keep = nz_a[ia] & nz_b[ib]
    ia, ib, ic = ia[keep], ib[keep], ic[keep]
    vals = af[ia] * bf[ib]
    if weights is not None:
        vals = vals * weights(la[keep], lb[keep])[:, None]
    size = (L + 1) * M
    out = np.empty((size, c), dtype=complex)
    for comp in range(c):
        v = vals[:, comp]
        out[:, comp] = (np.bincount(ic, weights=v.real, minlength=size)
                        + 1j * np.bincount(ic, weights=v.imag, minlength=size))
    return out.reshape(L + 1, M, c)


class TruncatedSeries:
    """Formal series ``sum h[l, j] x**l z**j`` with values in ``C**n_comps``.

    Instances are immutable; the coefficient array is flagged read-only.
    """

    __slots__ = ("n_vars", "L_max", "J_max", "coeffs")

    def __init__(self, coeffs: np.ndarray, n_vars: int, L_max: int, J_max: int):
        coeffs = np.array(coeffs, dtype=complex)
        basis = get_basis(n_vars, J_max)
        if coeffs.ndim != 3 or coeffs.shape[:2] != (L_max + 1, len(basis)):
            raise DimensionError(
                f"coefficient array of shape {coeffs.shape} does not match "
                f"(L_max+1, M, c) = ({L_max + 1}, {len(basis)}, c)")
        coeffs.setflags(write=False)
        self.n_vars = n_vars
        self.L_max = L_max
        self.J_max = J_max
        self.coeffs = coeffs

    # -- construction -----------------------------------------------------
    @classmethod
    def zeros(cls, n_vars: int, n_comps: int, L_max: int, J_max: int) -> "TruncatedSeries":
        M = len(get_basis(n_vars, J_max))
        return cls(np.zeros((L_max + 1, M, n_comps), dtype=complex), n_vars, L_max, J_max)

    @classmethod
    def from_dict(cls, data: Mapping[tuple[int, MultiIndex, int], complex], n_vars: int,
                  n_comps: int, L_max: int, J_max: int) -> "TruncatedSeries":
        """Build from ``{(l, j, i): value}``; entries outside the box are dropped."""
        basis = get_basis(n_vars, J_max)
        arr = np.zeros((L_max + 1, len(basis), n_comps), dtype=complex)
        for (l, j, i), v in data.items():
            j = tuple(int(t) for t in j)
            if len(j) != n_vars:
                raise DimensionError(f"multi-index {j} has wrong length for n={n_vars}")
            if min(j, default=0) < 0 or l < 0:
                raise ValueError(f"negative exponent in slot {(l, j)}")
            if not 0 <= i < n_comps:
                raise DimensionError(f"component {i} out of range")
            if l > L_max or sum(j) > J_max:
                continue
            arr[l, basis.index[j], i] += v
        return cls(arr, n_vars, L_max, J_max)

    @classmethod
    def monomial(cls, l: int, j: Sequence[int], value, n_comps: int = 1, *,
                 L_max: int, J_max: int) -> "TruncatedSeries":
        """``value * x**l * z**j``; ``value`` is a scalar or length-``n_comps`` vector."""
        vec = np.broadcast_to(np.asarray(value, dtype=complex), (n_comps,))
        data = {(l, tuple(j), i): vec[i] for i in range(n_comps) if vec[i] != 0}
        return cls.from_dict(data, len(j), n_comps, L_max, J_max)

    @classmethod
    def variable(cls, q: int, n_vars: int, L_max: int, J_max: int) -> "TruncatedSeries":
        """The scalar series ``z_q`` (0-based)."""
        return cls.monomial(0, unit_index(q, n_vars), 1.0, L_max=L_max, J_max=J_max)

    @classmethod
    def x_power(cls, p: int, n_vars: int, L_max: int, J_max: int) -> "TruncatedSeries":
        return cls.monomial(p, (0,) * n_vars, 1.0, L_max=L_max, J_max=J_max)

    @classmethod
    def stack(cls, parts: Sequence["TruncatedSeries"]) -> "TruncatedSeries":
        """Concatenate scalar series into a vector series."""
        L = min(p.L_max for p in parts)
        J = min(p.J_max for p in parts)
        arrs = [TruncatedSeries.truncate(p, L, J).coeffs for p in parts]
        return cls(np.concatenate(arrs, axis=2), parts[0].n_vars, L, J)

    # -- accessors --------------------------------------------------------
    @property
    def n_comps(self) -> int:
        return self.coeffs.shape[2]

    @property
    def basis(self) -> Basis:
        return get_basis(self.n_vars, self.J_max)

    def __getitem__(self, key: tuple[int, Sequence[int]]) -> np.ndarray:
        l, j = key
        j = tuple(j)
        if l > self.L_max or sum(j) > self.J_max:
            raise KeyError(f"slot {(l, j)} beyond truncation")
        return self.coeffs[l, self.basis.index[j]]

    def coeff(self, l: int, j: Sequence[int], i: int = 0) -> complex:
        return complex(self[l, j][i])

    def items(self, tol: float = 0.0) -> Iterator[tuple[int, MultiIndex, int, complex]]:
        """Nonzero entries as ``(l, j, i, value)``."""
        ls, ms, is_ = np.nonzero(np.abs(self.coeffs) > tol)
        mons = self.basis.monomials
        for l, m, i in zip(ls, ms, is_):
            yield int(l), mons[m], int(i), complex(self.coeffs[l, m, i])

    def to_dict(self) -> dict[tuple[int, MultiIndex, int], complex]:
        return {(l, j, i): v for l, j, i, v in self.items()}

    def component(self, i: int) -> "TruncatedSeries":
        return type(self)(self.coeffs[:, :, i:i + 1], self.n_vars, self.L_max, self.J_max)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def is_O_x(self) -> bool:
        return not np.any(self.coeffs[0])

    def x_part(self, l: int) -> "TruncatedSeries":
        """Only the ``x**l`` terms."""
        arr = np.zeros_like(self.coeffs)
        arr[l] = self.coeffs[l]
        return type(self)(arr, self.n_vars, self.L_max, self.J_max)

    def drop_constant(self) -> "TruncatedSeries":
        """The series minus its ``x**0`` terms."""
        arr = self.coeffs.copy()
        arr[0] = 0
        return type(self)(arr, self.n_vars, self.L_max, self.J_max)

    def truncate(self, L_max: int | None = None, J_max: int | None = None) -> "TruncatedSeries":
        L = self.L_max if L_max is None else min(L_max, self.L_max)
        J = self.J_max if J_max is None else min(J_max, self.J_max)
        if L == self.L_max and J == self.J_max:
            return self
        M = self.basis.size_upto(J)
        return type(self)(self.coeffs[:L + 1, :M], self.n_vars, L, J)

    def extend(self, L_max: int, J_max: int) -> "TruncatedSeries":
        """Same coefficients in a larger box (new slots are zero, not unknown)."""
        if L_max < self.L_max or J_max < self.J_max:
            raise ValueError("extend() cannot shrink the truncation")
        big = get_basis(self.n_vars, J_max)
        arr = np.zeros((L_max + 1, len(big), self.n_comps), dtype=complex)
        arr[:self.L_max + 1, :len(self.basis)] = self.coeffs
        return type(self)(arr, self.n_vars, L_max, J_max)

    def mul_x(self, p: int = 1) -> "TruncatedSeries":
        """Multiply by ``x**p`` (top rows fall off the box)."""
        arr = np.zeros_like(self.coeffs)
        if p <= self.L_max:
            arr[p:] = self.coeffs[:self.L_max + 1 - p]
        return type(self)(arr, self.n_vars, self.L_max, self.J_max)

    def z_polynomials(self) -> np.ndarray:
        """Alias of the coefficient array, indexed ``[l, monomial, component]``."""
        return self.coeffs

    def evaluate(self, x: complex, z: Sequence[complex]) -> np.ndarray:
        """Evaluate the truncated polynomial at a point."""
        zpow = monomial_values(self.basis, z)
        xpow = np.asarray(x, dtype=complex) ** np.arange(self.L_max + 1)
        return np.einsum("l,m,lmc->c", xpow, zpow, self.coeffs)

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "TruncatedSeries") -> None:
        if type(other) is not type(self):
            raise TypeError(f"expected TruncatedSeries, got {type(other).__name__}")
        if other.n_vars != self.n_vars:
            raise DimensionError(f"n_vars mismatch: {self.n_vars} vs {other.n_vars}")

    def __add__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return add(self, other)

    def __sub__(self, other: "TruncatedSeries") -> "TruncatedSeries":
        return add(self, -other)

    def __neg__(self) -> "TruncatedSeries":
        return type(self)(-self.coeffs, self.n_vars, self.L_max, self.J_max)

    def scale(self, factor) -> "TruncatedSeries":
        """Multiply by a scalar, or componentwise by a length-``n_comps`` vector."""
        f = np.asarray(factor, dtype=complex)
        return type(self)(self.coeffs * f, self.n_vars, self.L_max, self.J_max)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return mul(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def allclose(self, other: "TruncatedSeries", rtol: float = RTOL, atol: float = 0.0) -> bool:
        self._check(other)
        L = min(self.L_max, other.L_max)
        J = min(self.J_max, other.J_max)
        a = TruncatedSeries.truncate(self, L, J).coeffs
        b = TruncatedSeries.truncate(other, L, J).coeffs
        if a.shape != b.shape:
            return False
        scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
        return bool(np.max(np.abs(a - b), initial=0.0) <= atol + rtol * scale)

    def __repr__(self) -> str:
        nz = int(np.count_nonzero(self.coeffs))
        return (f"TruncatedSeries(n_vars={self.n_vars}, n_comps={self.n_comps}, "
                f"L_max={self.L_max}, J_max={self.J_max}, nonzero={nz})")


def monomial_values(basis: Basis, z: Sequence[complex]) -> np.ndarray:
    """Values ``z**j`` for every monomial of ``basis``."""
    z = np.asarray(z, dtype=complex).reshape(basis.n)
    if basis.n == 0:
        return np.ones(1, dtype=complex)
    return np.prod(z[None, :] ** basis.exps, axis=1)


def _common(a: TruncatedSeries, b: TruncatedSeries) -> tuple[TruncatedSeries, TruncatedSeries]:
    a._check(b)
    L = min(a.L_max, b.L_max)
    J = min(a.J_max, b.J_max)
    return TruncatedSeries.truncate(a, L, J), TruncatedSeries.truncate(b, L, J)


def add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Coefficientwise sum; the result carries the smaller truncation."""
    a, b = _common(a, b)
    if a.n_comps != b.n_comps:
        raise DimensionError(f"cannot add {a.n_comps}- and {b.n_comps}-component series")
    return type(a)(a.coeffs + b.coeffs, a.n_vars, a.L_max, a.J_max)


def mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Truncated Cauchy product (componentwise, or scalar times vector)."""
    a, b = _common(a, b)
    if type(a) is not TruncatedSeries or type(b) is not TruncatedSeries:
        raise TypeError("mul() is the x-plane Cauchy product; use convolve_series in the Borel plane")
    out = bilinear(a.coeffs, b.coeffs, a.n_vars, a.L_max, a.J_max)
    return TruncatedSeries(out, a.n_vars, a.L_max, a.J_max)


def sum_series(parts: Iterable[TruncatedSeries]) -> TruncatedSeries:
    it = iter(parts)
    total = next(it)
    for p in it:
        total = add(total, p)
    return total


@lru_cache(maxsize=None)
def _derivative_map(n: int, J: int, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    basis = get_basis(n, J)
    src, dst, fac = [], [], []
    for m, j in enumerate(basis.monomials):
        if j[q] > 0:
            lowered = list(j)
            lowered[q] -= 1
            src.append(m)
            dst.append(basis.index[tuple(lowered)])
            fac.append(j[q])
    return np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(fac, dtype=float)


def partial_z_array(coeffs: np.ndarray, n: int, J: int, q: int) -> np.ndarray:
    """``d/dz_q`` on a raw ``(rows, M, c)`` array."""
    if not 0 <= q < n:
        raise ValueError(f"invalid variable index q={q} for n={n}")
    src, dst, fac = _derivative_map(n, J, q)
    out = np.zeros_like(coeffs)
    out[:, dst] = coeffs[:, src] * fac[None, :, None]
    return out


def partial_z(a: TruncatedSeries, q: int) -> TruncatedSeries:
    """``d a / d z_q`` (0-based ``q``)."""
    return type(a)(partial_z_array(a.coeffs, a.n_vars, a.J_max, q),
                           a.n_vars, a.L_max, a.J_max)


def x_weighted_derivative(a: TruncatedSeries, k: int) -> TruncatedSeries:
    """``(1/k) x**(k+1) d a/dx``: slot ``(l, j)`` moves to ``(l+k, j)`` times ``l/k``."""
    if k < 1:
        raise ValueError("rank k must be >= 1")
    arr = np.zeros_like(a.coeffs)
    L = a.L_max
    if k <= L:
        ls = np.arange(L + 1 - k, dtype=float)
        arr[k:] = a.coeffs[:L + 1 - k] * (ls / k)[:, None, None]
    return TruncatedSeries(arr, a.n_vars, a.L_max, a.J_max)


def matvec_z(A: np.ndarray, a: TruncatedSeries) -> TruncatedSeries:
    """Apply a constant matrix to the component vector: ``(A a)_i = sum_q A[i,q] a_q``."""
    return type(a)(np.einsum("iq,lmq->lmi", np.asarray(A, dtype=complex), a.coeffs),
                           a.n_vars, a.L_max, a.J_max)


def substitute(coeff_by_j: Mapping[MultiIndex, np.ndarray], ys: Sequence, one,
               product: Callable) -> object:
    """Evaluate ``sum_j F_j * prod_s ys[s]**j_s`` for an abstract product.

    ``coeff_by_j`` maps a multi-index to a series-like object ``F_j``;
    ``product`` multiplies two such objects and ``one`` is the unit.
    Powers are cached so each ``ys[s]**p`` is built once.
    """
    powers: dict[tuple[int, int], object] = {}

    def power(s: int, p: int):
        if p == 0:
            return one
        key = (s, p)
        if key not in powers:
            powers[key] = ys[s] if p == 1 else product(power(s, p - 1), ys[s])
        return powers[key]

    total = None
    for j, F in coeff_by_j.items():
        term = F
        for s, p in enumerate(j):
            if p:
                term = product(term, power(s, p))
        total = term if total is None else total + term
    return total


def coefficients_by_monomial(f: TruncatedSeries) -> dict[MultiIndex, TruncatedSeries]:
    """Split ``f`` as ``sum_j F_j(x) z**j`` with ``F_j`` placed at ``j = 0``."""
    out: dict[MultiIndex, TruncatedSeries] = {}
    zero = (0,) * f.n_vars
    for m, j in enumerate(f.basis.monomials):
        block = f.coeffs[:, m, :]
        if not np.any(block):
            continue
        arr = np.zeros_like(f.coeffs)
        arr[:, f.basis.index[zero], :] = block
        out[j] = TruncatedSeries(arr, f.n_vars, f.L_max, f.J_max)
    return out


def compose_shift(f: TruncatedSeries, phi: TruncatedSeries) -> TruncatedSeries:
    """``f(x, z + x*phi(x, z))`` expanded and truncated."""
    f, phi = _common(f, phi)
    n = f.n_vars
    if phi.n_comps != n:
        raise DimensionError(f"shift must have {n} components, got {phi.n_comps}")
    xphi = phi.mul_x(1)
    ys = [add(TruncatedSeries.variable(s, n, f.L_max, f.J_max), xphi.component(s))
          for s in range(n)]
    one = TruncatedSeries.monomial(0, (0,) * n, 1.0, L_max=f.L_max, J_max=f.J_max)
    parts = coefficients_by_monomial(f)
    if not parts:
        return TruncatedSeries.zeros(n, f.n_comps, f.L_max, f.J_max)
    return substitute(parts, ys, one, mul)


# -- interchange ----------------------------------------------------------

def to_records(s: TruncatedSeries, key: str = "l", tol: float = 0.0) -> list[dict]:
    """Interchange records ``{l, j, i, re, im}`` with 1-based component ``i``."""
    recs = []
    for l, j, i, v in s.items(tol):
        recs.append({key: l, "j": list(j), "i": i + 1, "re": v.real, "im": v.imag})
    return recs


def from_records(records: Iterable[Mapping], n_vars: int, n_comps: int, L_max: int,
                 J_max: int, key: str = "l") -> TruncatedSeries:
    data: dict[tuple[int, MultiIndex, int], complex] = {}
    for r in records:
        slot = (int(r[key]), tuple(int(t) for t in r["j"]), int(r.get("i", 1)) - 1)
        data[slot] = data.get(slot, 0) + complex(float(r.get("re", 0.0)), float(r.get("im", 0.0)))
    return TruncatedSeries.from_dict(data, n_vars, n_comps, L_max, J_max)


def binomial(n: int, k: int) -> int:
    return math.comb(n, k)
