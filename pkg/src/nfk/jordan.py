"""Slot-wise inversion of the homological operator, including Jordan couplings.

At a fixed order the unknowns ``G[i, j]`` and ``Phi[i, j]`` obey

    G_ij - c_ij Phi_ij = H_ij + r xi_i Phi_{i+1, j} - r sum_s xi_s (j_s + 1) Phi_{i, j + d_s}

with ``c_ij = lam_i - <j, lam>`` (minus ``w**k`` in the Borel plane) and
``d_s = e_s - e_{s+1}``. On resonant slots ``Phi = 0`` and ``G`` absorbs the
right side; elsewhere ``G = 0`` and ``Phi = T(rhs)`` with ``T(h) = -h/c``.
The couplings point to component ``i + 1`` and to ``j + d_s``, which precedes
``j`` when multi-indices are compared from the right, so sweeping ``i``
downwards and ``j`` upwards in that order solves the system in one pass.

The module also holds the path combinatorics that unroll this recursion and
a sparse direct solver used as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .borel import BorelSeries
from .series import MultiIndex, get_basis
from .spectrum import ResonanceSet, Spectrum, ZERO_DIVISOR


class ZeroDivisorError(ArithmeticError):
    """A non-resonant slot has a vanishing divisor."""


# -- path combinatorics ------------------------------------------------------

def d_vector(s: int, n: int) -> tuple[int, ...]:
    """``d_s = e_s - e_{s+1}`` for 1-based ``s`` in ``1..n-1``."""
    if not 1 <= s <= n - 1:
        raise ValueError(f"d_s needs 1 <= s <= n-1, got s={s}, n={n}")
    return tuple(1 if t == s - 1 else (-1 if t == s else 0) for t in range(n))


def _step_back(v: MultiIndex, s: int) -> MultiIndex | None:
    """``v + d_s`` (0-based ``s``) if it stays in ``N_0^n``."""
    if v[s + 1] == 0:
        return None
    out = list(v)
    out[s] += 1
    out[s + 1] -= 1
    return tuple(out)


def cone(j: Sequence[int], n: int | None = None) -> set[MultiIndex]:
    """All ``m != j`` from which a path leads to ``j``."""
    j = tuple(j)
    n = len(j) if n is None else n
    seen: set[MultiIndex] = set()
    stack = [j]
    while stack:
        v = stack.pop()
        for s in range(n - 1):
            u = _step_back(v, s)
            if u is not None and u not in seen:
                seen.add(u)
                stack.append(u)
    seen.discard(j)
    return seen


def weighted_position(v: Sequence[int]) -> int:
    return sum((t + 1) * x for t, x in enumerate(v))


@dataclass
class PathSet:
    """Paths ``(p_1, ..., p_l)`` (1-based steps) with ``j = m - sum d_{p_t}``."""

    source: MultiIndex
    target: MultiIndex
    paths: list[tuple[int, ...]]

    @property
    def lengths(self) -> set[int]:
        return {len(p) for p in self.paths}

    @property
    def length(self) -> int | None:
        ls = self.lengths
        if not ls:
            return None
        if len(ls) > 1:
            raise ValueError(f"paths from {self.source} to {self.target} have lengths {sorted(ls)}")
        return ls.pop()

    def to_dict(self) -> dict:
        return {"source": list(self.source), "target": list(self.target),
                "length": self.length, "paths": [list(p) for p in self.paths]}


def enumerate_paths(m: Sequence[int], j: Sequence[int], n: int | None = None) -> PathSet:
    """All step sequences leading from ``m`` to ``j``."""
    m, j = tuple(m), tuple(j)
    n = len(j) if n is None else n
    memo: dict[MultiIndex, list[tuple[int, ...]]] = {}

    def paths_from(v: MultiIndex) -> list[tuple[int, ...]]:
        # each step moves one unit from position p to p+1
        if v == j:
            return [()]
        if v in memo:
            return memo[v]
        out = []
        if sum(v) == sum(j) and weighted_position(v) < weighted_position(j):
            for s in range(n - 1):
                if v[s] > 0:
                    u = list(v)
                    u[s] -= 1
                    u[s + 1] += 1
                    for tail in paths_from(tuple(u)):
                        out.append((s + 1,) + tail)
        memo[v] = out
        return out

    return PathSet(m, j, paths_from(m))


def path_length_sets(j: Sequence[int], n: int | None = None) -> dict[MultiIndex, set[int]]:
    """For every ``m`` in the cone of ``j`` (and ``j`` itself), the set of path lengths.

    Computed by dynamic programming, so it scales where listing paths would not.
    """
    j = tuple(j)
    n = len(j) if n is None else n
    lengths: dict[MultiIndex, set[int]] = {j: {0}}
    frontier = [j]
    while frontier:
        nxt = []
        for v in frontier:
            for s in range(n - 1):
                u = _step_back(v, s)
                if u is None:
                    continue
                new = {l + 1 for l in lengths[v]}
                if u not in lengths:
                    lengths[u] = set()
                    nxt.append(u)
                lengths[u] |= new
        frontier = nxt
    return lengths


# -- slot solver -------------------------------------------------------------

@lru_cache(maxsize=None)
def _slot_order(n: int, J: int) -> tuple[int, ...]:
    mons = get_basis(n, J).monomials
    return tuple(sorted(range(len(mons)), key=lambda m: tuple(reversed(mons[m]))))


@lru_cache(maxsize=None)
def _neighbours(n: int, J: int) -> np.ndarray:
    """``nb[m, s]`` is the index of ``j_m + d_s`` or ``-1``."""
    basis = get_basis(n, J)
    nb = -np.ones((len(basis), max(n - 1, 1)), dtype=np.int64)
    for m, j in enumerate(basis.monomials):
        for s in range(n - 1):
            u = _step_back(j, s)
            if u is not None:
                nb[m, s] = basis.index[u]
    return nb


def x_plane_T(h: np.ndarray, c: complex) -> np.ndarray:
    return -h / c


def borel_T(k: int) -> Callable[[np.ndarray, complex], np.ndarray]:
    """``h -> -h/(c - w**k)`` on rows ``[unit, w**0, w**1, ...]``.

    The unit row is not multiplied by ``w**k``, so it is simply divided by
    ``-c``; the polynomial rows follow ``Phi_m = (Phi_{m-k} - h_m)/c``.
    """
    def T(h: np.ndarray, c: complex) -> np.ndarray:
        out = np.empty_like(h)
        out[0] = -h[0] / c
        for r in range(1, h.shape[0]):
            prev = out[r - k] if r - k >= 1 else 0.0
            out[r] = (prev - h[r]) / c
        return out
    return T


def _check_divisor(c: complex, lam_scale: float, where) -> None:
    if abs(c) <= ZERO_DIVISOR * max(1.0, lam_scale):
        raise ZeroDivisorError(f"vanishing divisor at non-resonant slot {where}")


def solve_slots(H: np.ndarray, spec: Spectrum, mask: np.ndarray, J: int,
                T: Callable[[np.ndarray, complex], np.ndarray] = x_plane_T) -> tuple[np.ndarray, np.ndarray]:
    """Solve the slot system for an array ``H[row, monomial, component]``.

    Returns ``(G, Phi)`` of the same shape. ``mask[m, i]`` marks resonant slots.
    """
    n = spec.n
    basis = get_basis(n, J)
    D = spec.divisors(J)
    order = _slot_order(n, J)
    nb = _neighbours(n, J)
    exps = basis.exps
    r = spec.r
    lam_scale = max(abs(v) for v in spec.lam)
    G = np.zeros_like(H, dtype=complex)
    Phi = np.zeros_like(H, dtype=complex)
    for i in reversed(range(n)):
        up = i < n - 1 and spec.xi[i]
        for m in order:
            rhs = H[:, m, i].astype(complex, copy=True)
            if up:
                rhs += r * Phi[:, m, i + 1]
            for s in range(n - 1):
                if spec.xi[s] and nb[m, s] >= 0:
                    rhs -= r * (exps[m, s] + 1) * Phi[:, nb[m, s], i]
            if mask[m, i]:
                G[:, m, i] = rhs
            else:
                if not np.any(rhs):
                    continue
                _check_divisor(D[m, i], lam_scale, (i + 1, basis.monomials[m]))
                Phi[:, m, i] = T(rhs, D[m, i])
    return G, Phi


def phi_backward_induction(H: BorelSeries, spec: Spectrum,
                           rset: ResonanceSet) -> tuple[BorelSeries, BorelSeries]:
    """Invert the Borel-plane homological operator on ``H``; returns ``(G, Phi)``."""
    mask = rset.mask(spec.n, H.J_max)
    G, Phi = solve_slots(H.coeffs, spec, mask, H.J_max, borel_T(spec.k))
    return (BorelSeries(G, H.n_vars, H.L_max, H.J_max),
            BorelSeries(Phi, H.n_vars, H.L_max, H.J_max))


def phi_n_solution(H: BorelSeries, spec: Spectrum, rset: ResonanceSet) -> BorelSeries:
    """Last component of ``Phi`` as an explicit sum over paths.

    ``Phi_nj = T[n,j] H_nj + sum_{m in cone(j)} sum_{paths} K[..] o ... o T[n,m] H_nm``
    with ``K[i,s,v](h) = -r xi_s (v_s + 1) T[i,v](h)``. Sources ``m`` in the
    resonance set contribute nothing because ``Phi`` vanishes there.
    """
    n = spec.n
    J = H.J_max
    basis = get_basis(n, J)
    D = spec.divisors(J)
    T = borel_T(spec.k)
    i = n - 1
    out = np.zeros((H.L_max + 1, len(basis), 1), dtype=complex)
    for m_j, j in enumerate(basis.monomials):
        if (i, j) in rset:
            continue
        acc = T(H.coeffs[:, m_j, i], D[m_j, i])
        for m in cone(j, n):
            if (i, m) in rset:
                continue
            h = H.coeffs[:, basis.index[m], i]
            if not np.any(h):
                continue
            start = T(h, D[basis.index[m], i])
            for path in enumerate_paths(m, j, n).paths:
                v = list(m)
                val = start
                for p in path:
                    s = p - 1
                    if not spec.xi[s]:
                        val = None
                        break
                    v[s] -= 1
                    v[s + 1] += 1
                    val = -spec.r * (v[s] + 1) * T(val, D[basis.index[tuple(v)], i])
                if val is not None:
                    acc = acc + val
        out[:, m_j, 0] = acc
    return BorelSeries(out, n, H.L_max, J)


def dense_oracle(H: BorelSeries, spec: Spectrum,
                 rset: ResonanceSet) -> tuple[BorelSeries, BorelSeries]:
    """Assemble and solve the full truncated linear system for ``(G, Phi)`` at once.

    The operator ``G - A Phi + (dPhi/dz) A z + w**k Phi`` is built from the
    full matrix ``A`` without using its Jordan structure, together with the
    constraints ``Phi = 0`` on resonant slots and ``G = 0`` elsewhere.
    """
    n, J, k = spec.n, H.J_max, spec.k
    basis = get_basis(n, J)
    M = len(basis)
    R = H.L_max + 1
    A = spec.matrix()
    N = R * M * n

    def idx(r, m, i):
        return (r * M + m) * n + i

    rows, cols, vals = [], [], []

    def put(row, col, v):
        if v != 0:
            rows.append(row)
            cols.append(col)
            vals.append(v)

    mask = rset.mask(n, J)
    for r in range(R):
        for m, j in enumerate(basis.monomials):
            for i in range(n):
                e = idx(r, m, i)
                put(e, e, 1.0)                      # G
                for q in range(n):                  # -A Phi
                    put(e, N + idx(r, m, q), -A[i, q])
                for s in range(n):                  # (dPhi_i/dz_s) (A z)_s
                    for t in range(n):
                        if A[s, t] == 0:
                            continue
                        src = list(j)
                        src[s] += 1
                        src[t] -= 1
                        if min(src) < 0:
                            continue
                        mm = basis.index[tuple(src)]
                        put(e, N + idx(r, mm, i), A[s, t] * src[s])
                if r >= 1 + k:                      # w**k Phi on polynomial rows
                    put(e, N + idx(r - k, m, i), 1.0)
                # constraint row
                if mask[m, i]:
                    put(N + e, N + e, 1.0)
                else:
                    put(N + e, e, 1.0)
    mat = sp.csc_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(2 * N, 2 * N))
    rhs = np.zeros(2 * N, dtype=complex)
    rhs[:N] = H.coeffs.reshape(-1)
    sol = spsolve(mat, rhs)
    if not np.all(np.isfinite(sol)):
        raise ZeroDivisorError("dense system is singular; check the resonance set")
    G = sol[:N].reshape(R, M, n)
    Phi = sol[N:].reshape(R, M, n)
    return BorelSeries(G, n, H.L_max, J), BorelSeries(Phi, n, H.L_max, J)


def geometric_radius(spec: Spectrum, rset: ResonanceSet, J: int | None = None) -> float:
    """Radius ``0.9 * min |c|**(1/k)`` on which the divisor expansions converge."""
    J = rset.J_max if J is None else J
    D = spec.divisors(J)
    mask = rset.mask(spec.n, J)
    vals = np.abs(D[~mask])
    if vals.size == 0:
        return math.inf
    return 0.9 * float(np.min(vals)) ** (1.0 / spec.k)


def default_jordan_scale(K: float, n: int) -> float:
    """``r = 1/(2 K (n - 1))`` for ``n >= 2``."""
    if n < 2:
        return 1.0
    return 1.0 / (2.0 * K * (n - 1))
