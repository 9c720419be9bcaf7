"""Complexified zero-Hopf problems.

A real system ``(1/k) x**(k+1) du/dx = B u + x h(x, u)`` with
``B = [[0, b], [-b, 0]]`` becomes ``A = diag(-ib, ib)`` in the coordinates
``y_1 = u_1 + i u_2``, ``y_2 = u_1 - i u_2``. Realness survives as the
coefficient symmetry ``c_2[l, (j1, j2)] = conj(c_1[l, (j2, j1)])``, which is
called property (P) below.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .conjugacy import NormalFormResult, solve_conjugacy
from .laplace import SectorSpec, ksum_evaluate
from .series import (DimensionError, TruncatedSeries, coefficients_by_monomial, get_basis,
                     mul, substitute)
from .spectrum import ResonanceSet, Spectrum

SYMMETRY_DRIFT = 1e-12


class PatternError(ValueError):
    """The normal form has coefficients outside the expected resonant pattern."""


def _swap_index(basis) -> np.ndarray:
    return np.array([basis.index[(j[1], j[0])] for j in basis.monomials], dtype=np.int64)


def symmetry_defect(series: TruncatedSeries, relative: bool = True) -> float:
    """Largest ``|c_2[l,(j1,j2)] - conj c_1[l,(j2,j1)]|``.

    With ``relative=True`` each ``x``-order is divided by its largest
    coefficient, which keeps the check meaningful when coefficients grow
    factorially with the order.
    """
    if series.n_vars != 2 or series.n_comps != 2:
        raise DimensionError("property (P) needs a 2-component series in 2 variables")
    sw = _swap_index(series.basis)
    c1 = series.coeffs[:, :, 0]
    c2 = series.coeffs[:, :, 1]
    diff = np.abs(c2 - np.conj(c1[:, sw]))
    if not relative:
        return float(diff.max(initial=0.0))
    scale = np.maximum(np.abs(series.coeffs).max(axis=(1, 2)), 1e-300)
    return float((diff.max(axis=1) / scale).max(initial=0.0))


def check_property_P(series: TruncatedSeries, tol: float = 1e-12, relative: bool = True) -> bool:
    return symmetry_defect(series, relative) <= tol


def enforce_property_P(series: TruncatedSeries) -> TruncatedSeries:
    """Average each coefficient with its (P)-partner to remove rounding drift."""
    sw = _swap_index(series.basis)
    c1 = series.coeffs[:, :, 0]
    c2 = series.coeffs[:, :, 1]
    new2 = 0.5 * (c2 + np.conj(c1[:, sw]))
    new1 = np.conj(new2[:, sw])
    return TruncatedSeries(np.stack([new1, new2], axis=2), 2, series.L_max, series.J_max)


def complexify(h1: TruncatedSeries, h2: TruncatedSeries) -> TruncatedSeries:
    """``f_1 = (h_1 + i h_2)(x, u(y))``, ``f_2 = (h_1 - i h_2)(x, u(y))``.

    ``u_1 = (y_1 + y_2)/2`` and ``u_2 = (y_1 - y_2)/(2i)``. The result is
    symmetrized so that property (P) holds to the last bit; the symmetrization
    is refused if it would move a coefficient by more than a rounding amount.
    """
    for h in (h1, h2):
        if h.n_vars != 2 or h.n_comps != 1:
            raise DimensionError("h_1, h_2 must be scalar series in (x, u_1, u_2)")
        if np.any(h.coeffs.imag != 0):
            raise ValueError("h_1, h_2 must have real coefficients")
    L = min(h1.L_max, h2.L_max)
    J = min(h1.J_max, h2.J_max)
    h1, h2 = h1.truncate(L, J), h2.truncate(L, J)
    y1 = TruncatedSeries.variable(0, 2, L, J)
    y2 = TruncatedSeries.variable(1, 2, L, J)
    u1 = (y1 + y2).scale(0.5)
    u2 = (y1 - y2).scale(-0.5j)
    one = TruncatedSeries.monomial(0, (0, 0), 1.0, L_max=L, J_max=J)
    parts = []
    for F in (h1 + h2.scale(1j), h1 - h2.scale(1j)):
        pieces = coefficients_by_monomial(F)
        if pieces:
            parts.append(substitute(pieces, [u1, u2], one, mul))
        else:
            parts.append(TruncatedSeries.zeros(2, 1, L, J))
    f = TruncatedSeries.stack(parts)
    drift = symmetry_defect(f, relative=True)
    if drift > SYMMETRY_DRIFT:
        raise ArithmeticError(f"complexified data violate (P) by {drift:.2e}")
    return enforce_property_P(f)


def in_R1(j1: int, j2: int, N: int) -> bool:
    return (j1 == j2 + 1 and j2 <= N) or (j1 > N + 1 and j2 > N)


def in_R2(j1: int, j2: int, N: int) -> bool:
    return in_R1(j2, j1, N)


def hopf_resonance_sets(N: int, J_max: int = 12, b: float = 1.0, theta: float = 0.0,
                        k: int = 1) -> ResonanceSet:
    """The resonance set with projections ``R_1``, ``R_2`` up to ``|j| <= J_max``.

    ``C`` is the smallest value of ``|lam_i - <j, lam>| / (1 + |j|)`` over the
    complement, found by scanning; in terms of the integer gaps this is ``b``
    times ``min |j_1 - (j_2 + 1)| / (1 + |j|)``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if theta not in (0.0, math.pi) and not math.isclose(theta, math.pi):
        raise ValueError("zero-Hopf problems use theta in {0, pi}")
    pairs = set()
    gaps = []
    for j in get_basis(2, J_max).monomials:
        j1, j2 = j
        for i, member, gap in ((0, in_R1(j1, j2, N), abs(j1 - (j2 + 1))),
                               (1, in_R2(j1, j2, N), abs(j2 - (j1 + 1)))):
            if member:
                pairs.add((i, j))
            else:
                gaps.append(gap / (1 + j1 + j2))
    C = b * min(gaps) if gaps else math.inf
    # divisors of non-members are purely imaginary: angular distance pi/2 to the real ray
    return ResonanceSet(frozenset(pairs), J_max, C, math.pi / 2, theta)


def hopf_spectrum(b: float, k: int) -> Spectrum:
    return Spectrum((-1j * b, 1j * b), (0,), k, 1.0)


@dataclass
class HopfProblem:
    b: float
    k: int
    h1: TruncatedSeries
    h2: TruncatedSeries
    N: int = 1

    def complexified(self) -> TruncatedSeries:
        return complexify(self.h1, self.h2)


@dataclass
class HopfNormalForm:
    """Coefficients of ``g_1 = z_1 (sum_{j<N} h10_j(x) (z_1 z_2)**j + (z_1 z_2)**N h11)``.

    ``h10[l, j]`` is the ``x**l`` coefficient of ``h10_j``; ``h11`` is a scalar
    series in ``(x, z_1, z_2)``. ``h20`` and ``h21`` are the partners read off
    ``g_2``.
    """

    h10: np.ndarray
    h11: TruncatedSeries
    h20: np.ndarray
    h21: TruncatedSeries
    N: int
    b: float
    pairing_defect: float = 0.0
    result: NormalFormResult | None = None

    def to_dict(self) -> dict:
        L, N = self.h10.shape
        return {"N": self.N, "b": self.b, "pairing_defect": self.pairing_defect,
                "h10": [[{"l": l, "j": j, "re": float(self.h10[l, j].real),
                          "im": float(self.h10[l, j].imag)} for j in range(N)]
                        for l in range(L)]}


def _split_g(g_comp: np.ndarray, basis, N: int, first: int) -> tuple[np.ndarray, np.ndarray]:
    """Split one component of ``g`` (``first`` is the index carrying the extra power)."""
    L = g_comp.shape[0]
    h10 = np.zeros((L, N), dtype=complex)
    h11 = np.zeros((L, len(basis)), dtype=complex)
    for m, j in enumerate(basis.monomials):
        col = g_comp[:, m]
        if not np.any(col):
            continue
        a, c = (j[0], j[1]) if first == 0 else (j[1], j[0])
        if a == c + 1 and c < N:
            h10[:, c] = col
            continue
        a2, c2 = a - (N + 1), c - N
        if a2 >= 0 and c2 >= 0 and (a2 == c2 == 0 or (a2 >= 1 and c2 >= 1)):
            jj = (a2, c2) if first == 0 else (c2, a2)
            h11[:, basis.index[jj]] = col
            continue
        raise PatternError(f"g_{first + 1} has a coefficient at z**{j} outside the pattern")
    return h10, h11


def hopf_normal_form(problem: HopfProblem | None = None, *, result: NormalFormResult | None = None,
                     N: int | None = None, b: float | None = None, theta: float = 0.0,
                     J_max: int = 8, L_max: int = 10) -> HopfNormalForm:
    """Solve (if needed) and read off ``h10``, ``h11`` and their partners."""
    if result is None:
        if problem is None:
            raise ValueError("either a problem or a solver result is required")
        N, b = problem.N, problem.b
        f = problem.complexified().truncate(L_max, J_max)
        spec = hopf_spectrum(problem.b, problem.k)
        rset = hopf_resonance_sets(problem.N, f.J_max, problem.b, theta, problem.k)
        result = solve_conjugacy(f, spec, rset)
    g = result.g_hat
    basis = g.basis
    h10, h11 = _split_g(g.coeffs[:, :, 0], basis, N, 0)
    h20, h21 = _split_g(g.coeffs[:, :, 1], basis, N, 1)
    sw = _swap_index(basis)
    scale = max(np.abs(g.coeffs).max(initial=0.0), 1e-300)
    defect = max(np.abs(h20 - np.conj(h10)).max(initial=0.0),
                 np.abs(h21 - np.conj(h11[:, sw])).max(initial=0.0)) / scale
    mk = lambda arr: TruncatedSeries(arr[:, :, None], 2, g.L_max, g.J_max)
    return HopfNormalForm(h10, mk(h11), h20, mk(h21), N, b, float(defect), result)


def polar_form(nf: HopfNormalForm, x: float, rr: float, angle: float = 0.0) -> tuple[float, float]:
    """Radial and angular rates at real ``x`` and ``z_1 = rr e^{i angle}``.

    Uses the truncated polynomials for ``h10`` and ``h11``.
    """
    x = float(x)
    xp = x ** np.arange(nf.h10.shape[0])
    h10 = xp @ nf.h10
    z1 = rr * np.exp(1j * angle)
    h11 = nf.h11.evaluate(x, [z1, np.conj(z1)])[0]
    powers = rr ** (2 * np.arange(nf.N))
    s_re = float(np.sum(h10.real * powers) + rr ** (2 * nf.N) * h11.real)
    s_im = float(np.sum(h10.imag * powers) + rr ** (2 * nf.N) * h11.imag)
    return x * s_re * rr, -nf.b + x * s_im


@dataclass
class ManifoldSamples:
    x: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    realness_defect: float

    def to_csv(self) -> str:
        lines = ["x,u1_re,u1_im,u2_re,u2_im"]
        for x, a, c in zip(self.x, self.u1, self.u2):
            lines.append(",".join(format(v, ".17g") for v in (x, a.real, a.imag, c.real, c.imag)))
        return "\n".join(lines) + "\n"


def invariant_manifold(phi: TruncatedSeries, theta: float, xs, sec: SectorSpec | None = None,
                       k: int = 1, pade: bool = True, workers: int = 1) -> ManifoldSamples:
    """``u_1 = x (phi_1 + phi_2)/2``, ``u_2 = x (phi_1 - phi_2)/(2i)`` at ``z = 0``.

    ``phi`` is k-summed in direction ``theta`` (0 or pi). Samples must be real
    and lie in ``omega_k``; the realness defect is ``max |Im u_1| + |Im u_2|``.
    """
    if not (theta == 0.0 or math.isclose(theta, math.pi)):
        raise ValueError("zero-Hopf manifolds use theta in {0, pi}")
    sec = sec or SectorSpec(theta=theta, alpha=math.pi / 4, nu=0.1, mu=1.0, k=k)
    if sec.theta != theta:
        sec = sec.replace(theta=theta)
    xs = np.asarray(xs, dtype=float)
    evaluate = lambda x: ksum_evaluate(phi, np.zeros(2), x, sec, pade=pade)
    if workers > 1 and xs.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            vals = list(pool.map(evaluate, xs))
    else:
        vals = [evaluate(x) for x in xs]
    v = np.array(vals, dtype=complex).reshape(xs.size, 2)
    u1 = xs * (v[:, 0] + v[:, 1]) / 2
    u2 = xs * (v[:, 0] - v[:, 1]) / 2j
    defect = float(np.max(np.abs(u1.imag) + np.abs(u2.imag), initial=0.0))
    return ManifoldSamples(xs, u1, u2, defect)
