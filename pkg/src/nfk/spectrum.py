"""Eigenvalue data, resonance sets and the small-divisor conditions.

Components are 0-based internally. The JSON form uses 1-based component
indices, matching the series interchange records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .series import MultiIndex, get_basis, multi_indices

ZERO_DIVISOR = 1e-12


class ValidationError(ValueError):
    """Input data violates a structural requirement."""


@dataclass(frozen=True)
class Spectrum:
    """Linear part ``A = diag(lam) + r * Xi`` in Jordan form.

    ``xi[s] = 1`` places ``r`` at matrix position ``(s, s+1)`` and requires
    ``lam[s] == lam[s+1]``.
    """

    lam: tuple[complex, ...]
    xi: tuple[int, ...] = ()
    k: int = 1
    r: float = 1.0

    def __post_init__(self):
        lam = tuple(complex(v) for v in self.lam)
        n = len(lam)
        xi = tuple(int(v) for v in self.xi) if len(self.xi) else (0,) * max(n - 1, 0)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "xi", xi)
        if n < 1:
            raise ValidationError("at least one eigenvalue is required")
        if len(xi) != n - 1:
            raise ValidationError(f"xi must have n-1 = {n - 1} entries, got {len(xi)}")
        if any(v not in (0, 1) for v in xi):
            raise ValidationError("xi entries must be 0 or 1")
        for i, v in enumerate(lam):
            if v == 0:
                raise ValidationError(f"eigenvalue lambda_{i + 1} is zero")
        for s, flag in enumerate(xi):
            if flag and abs(lam[s] - lam[s + 1]) > 1e-14 * max(1.0, abs(lam[s])):
                raise ValidationError(
                    f"xi_{s + 1} = 1 requires lambda_{s + 1} == lambda_{s + 2}")
        if int(self.k) != self.k or self.k < 1:
            raise ValidationError("rank k must be a positive integer")
        object.__setattr__(self, "k", int(self.k))
        if not self.r > 0:
            raise ValidationError("Jordan scale r must be positive")

    @property
    def n(self) -> int:
        return len(self.lam)

    @property
    def lam_array(self) -> np.ndarray:
        return np.array(self.lam, dtype=complex)

    @property
    def semisimple(self) -> bool:
        return not any(self.xi)

    def matrix(self) -> np.ndarray:
        A = np.diag(self.lam_array)
        for s, flag in enumerate(self.xi):
            if flag:
                A[s, s + 1] = self.r
        return A

    def with_r(self, r: float) -> "Spectrum":
        return Spectrum(self.lam, self.xi, self.k, r)

    def divisors(self, J: int) -> np.ndarray:
        """Array ``D[m, i] = lam_i - <j_m, lam>`` over the basis of degree ``<= J``."""
        basis = get_basis(self.n, J)
        lam = self.lam_array
        return lam[None, :] - (basis.exps @ lam)[:, None]


def divisor(spec: Spectrum, i: int, j: Sequence[int]) -> complex:
    """``lam_i - <j, lam>`` with 0-based component ``i``."""
    if not 0 <= i < spec.n:
        raise ValueError(f"component {i} out of range for n={spec.n}")
    if len(j) != spec.n:
        raise ValueError("multi-index length differs from n")
    return spec.lam[i] - sum(js * ls for js, ls in zip(j, spec.lam))


def d_step(s: int, n: int) -> tuple[int, ...]:
    """``e_s - e_{s+1}`` for 0-based ``s``."""
    return tuple(1 if t == s else (-1 if t == s + 1 else 0) for t in range(n))


@dataclass(frozen=True)
class ResonanceSet:
    """Finite set of resonant slots ``(i, j)`` with ``|j| <= J_max``."""

    pairs: frozenset
    J_max: int
    C: float = 0.0
    sector_margin: float = 0.0
    theta: float = 0.0

    def __contains__(self, item) -> bool:
        i, j = item
        j = tuple(j)
        if sum(j) > self.J_max:
            raise KeyError(f"resonance membership of |j|={sum(j)} beyond J_max={self.J_max}")
        return (i, j) in self.pairs

    def mask(self, n: int, J: int) -> np.ndarray:
        """Boolean array ``[m, i]`` over the basis of degree ``<= J``."""
        if J > self.J_max:
            raise KeyError(f"resonance set only known up to |j| = {self.J_max}")
        basis = get_basis(n, J)
        out = np.zeros((len(basis), n), dtype=bool)
        for i, j in self.pairs:
            if sum(j) <= J:
                out[basis.index[j], i] = True
        return out

    def sorted_pairs(self) -> list[tuple[int, MultiIndex]]:
        return sorted(self.pairs, key=lambda p: (sum(p[1]), p[0], p[1]))

    def replace(self, **kw) -> "ResonanceSet":
        data = dict(pairs=self.pairs, J_max=self.J_max, C=self.C,
                    sector_margin=self.sector_margin, theta=self.theta)
        data.update(kw)
        return ResonanceSet(**data)


def jordan_closure(pairs: Iterable[tuple[int, MultiIndex]], spec: Spectrum) -> frozenset:
    """Smallest superset closed under ``i -> i+1`` and ``j -> j + d_s`` where ``xi`` allows."""
    n = spec.n
    out = set((int(i), tuple(j)) for i, j in pairs)
    stack = list(out)
    while stack:
        i, j = stack.pop()
        new = []
        if i < n - 1 and spec.xi[i]:
            new.append((i + 1, j))
        for s in range(n - 1):
            if spec.xi[s]:
                jj = tuple(a + b for a, b in zip(j, d_step(s, n)))
                if min(jj) >= 0:
                    new.append((i, jj))
        for p in new:
            if p not in out:
                out.add(p)
                stack.append(p)
    return frozenset(out)


def _angular_distance(z: complex, direction: float) -> float:
    if z == 0:
        return 0.0
    d = math.remainder(math.atan2(z.imag, z.real) - direction, 2 * math.pi)
    return abs(d)


def complement_divisors(rset: ResonanceSet, spec: Spectrum,
                        J: int | None = None) -> list[tuple[int, MultiIndex, complex]]:
    J = rset.J_max if J is None else J
    out = []
    for j in multi_indices(spec.n, J):
        for i in range(spec.n):
            if (i, j) not in rset.pairs:
                out.append((i, j, divisor(spec, i, j)))
    return out


def min_angular_distance(rset: ResonanceSet, spec: Spectrum, theta: float) -> float:
    dists = [_angular_distance(c, spec.k * theta) for _, _, c in complement_divisors(rset, spec)]
    return min(dists) if dists else math.pi


def minimal_resonance_set(spec: Spectrum, C: float, J_max: int, theta: float = 0.0,
                          sector_margin: float | None = None) -> ResonanceSet:
    """Jordan-closed set of all slots with ``|divisor| < C (1 + |j|)``.

    Exact resonances are always included. The sector margin defaults to half
    the smallest angular distance between a non-member divisor and the ray
    ``k * theta``.
    """
    if not C > 0:
        raise ValidationError("C must be positive")
    seed = []
    for j in multi_indices(spec.n, J_max):
        for i in range(spec.n):
            c = divisor(spec, i, j)
            if abs(c) <= ZERO_DIVISOR * max(1.0, abs(spec.lam[i])) or abs(c) < C * (1 + sum(j)):
                seed.append((i, j))
    pairs = frozenset(p for p in jordan_closure(seed, spec) if sum(p[1]) <= J_max)
    rset = ResonanceSet(pairs, J_max, float(C), 0.0, float(theta))
    if sector_margin is None:
        sector_margin = 0.5 * min_angular_distance(rset, spec, theta)
    return rset.replace(sector_margin=float(sector_margin))


def explicit_resonance_set(spec: Spectrum, pairs: Iterable[tuple[int, Sequence[int]]],
                           J_max: int, theta: float = 0.0, C: float | None = None,
                           sector_margin: float | None = None) -> ResonanceSet:
    """Wrap user-given pairs (0-based ``i``) and fill in the derived constants."""
    pairs = frozenset((int(i), tuple(int(t) for t in j)) for i, j in pairs)
    for i, j in pairs:
        if not 0 <= i < spec.n or len(j) != spec.n:
            raise ValidationError(f"invalid resonance pair {(i + 1, j)}")
    rset = ResonanceSet(frozenset(p for p in pairs if sum(p[1]) <= J_max), J_max, 0.0, 0.0, theta)
    if C is None:
        comp = complement_divisors(rset, spec)
        C = min((abs(c) / (1 + sum(j)) for _, j, c in comp), default=math.inf)
    if sector_margin is None:
        sector_margin = 0.5 * min_angular_distance(rset, spec, theta)
    return rset.replace(C=float(C), sector_margin=float(sector_margin))


def check_resonance_invariants(rset: ResonanceSet, spec: Spectrum) -> list[str]:
    """Exhaustive check of the set invariants; returns the violations."""
    problems = []
    for i, j, c in complement_divisors(rset, spec):
        if abs(c) <= ZERO_DIVISOR * max(1.0, abs(spec.lam[i])):
            problems.append(f"exact resonance at {(i + 1, j)} outside the set")
        elif abs(c) < rset.C * (1 + sum(j)) * (1 - 1e-12):
            problems.append(f"small divisor {c} at {(i + 1, j)} outside the set")
        if rset.sector_margin > 0 and _angular_distance(c, spec.k * rset.theta) < rset.sector_margin / 2:
            problems.append(f"divisor {c} at {(i + 1, j)} inside the critical sector")
    closed = jordan_closure(rset.pairs, spec)
    for p in closed - rset.pairs:
        if sum(p[1]) <= rset.J_max:
            problems.append(f"set not Jordan-closed: missing {(p[0] + 1, p[1])}")
    return problems


@dataclass(frozen=True)
class SectorCheck:
    ok: bool
    worst_distance: float
    margin: float

    def __bool__(self) -> bool:
        return self.ok


def check_sector_condition(rset: ResonanceSet, spec: Spectrum,
                           theta: float | None = None) -> SectorCheck:
    """No non-member divisor may lie in the open sector of opening ``margin`` around ``k*theta``.

    ``worst_distance`` is the minimal angular distance of a non-member divisor
    to the critical ray (``pi`` when the complement is empty).
    """
    theta = rset.theta if theta is None else theta
    dist = min_angular_distance(rset, spec, theta)
    margin = rset.sector_margin
    if not any(True for _ in complement_divisors(rset, spec)):
        return SectorCheck(True, math.pi, margin)
    ok = margin > 0 and dist >= margin / 2
    return SectorCheck(bool(ok), dist, margin)


def distance_to_borel_image(c: complex, k: int, nu: float, theta: float, alpha: float) -> float:
    """Distance from ``c`` to ``{w**k : w in B(nu) U S(theta, alpha)}``.

    The image is the disk of radius ``nu**k`` together with the closed cone of
    half-opening ``k*alpha/2`` around ``k*theta``.
    """
    d_disk = max(0.0, abs(c) - nu ** k)
    half = k * alpha / 2
    if half >= math.pi:
        return 0.0
    phi = _angular_distance(c, k * theta)
    if phi <= half:
        d_cone = 0.0
    elif phi >= half + math.pi / 2:
        d_cone = abs(c)
    else:
        d_cone = abs(c) * math.sin(phi - half)
    return min(d_disk, d_cone)


@dataclass(frozen=True)
class DivisorBound:
    K: float
    worst_slot: tuple[int, MultiIndex] | None
    alpha: float
    nu: float
    sampled_min: float

    def to_dict(self) -> dict:
        return {"K": self.K, "alpha": self.alpha, "nu": self.nu, "sampled_min": self.sampled_min,
                "worst_slot": None if self.worst_slot is None
                else [self.worst_slot[0] + 1, list(self.worst_slot[1])]}


class BoundFailure(RuntimeError):
    """A divisor bound was not positive on the sampled domain."""


def divisor_lower_bound(rset: ResonanceSet, spec: Spectrum, nu: float,
                        alpha: float | None = None, theta: float | None = None,
                        samples: int = 256) -> DivisorBound:
    """Largest ``K`` with ``|lam_i - <j,lam> - w**k| >= K/(1+|j|)`` on ``Omega``.

    The minimum over ``w`` is computed in closed form from the geometry of the
    image of ``Omega`` under ``w -> w**k``; a sampled minimum over
    ``samples`` points per non-member slot is reported alongside as a check.
    ``alpha`` defaults to ``sector_margin / k``.
    """
    theta = rset.theta if theta is None else theta
    if alpha is None:
        alpha = rset.sector_margin / spec.k
    k = spec.k
    best = math.inf
    worst = None
    sampled = math.inf
    # sample points of Omega: disk boundary, rays of the sector on a geometric radial grid
    n_ang = max(8, samples // 16)
    disk = nu * np.exp(1j * np.linspace(-math.pi, math.pi, n_ang, endpoint=False))
    rays = theta + np.linspace(-alpha / 2, alpha / 2, 9)
    comp = complement_divisors(rset, spec)
    for i, j, c in comp:
        d = distance_to_borel_image(c, k, nu, theta, alpha)
        val = (1 + sum(j)) * d
        if val < best:
            best, worst = val, (i, j)
        # radial grid concentrated around |c|^{1/k}
        rc = abs(c) ** (1.0 / k) if c != 0 else 1.0
        radii = rc * np.geomspace(1e-3, 1e3, max(16, samples // 8))
        pts = np.concatenate([disk, (radii[:, None] * np.exp(1j * rays[None, :])).ravel()])
        s = (1 + sum(j)) * float(np.min(np.abs(c - pts ** k)))
        sampled = min(sampled, s)
    if not comp:
        best = math.inf
    if not best > 0:
        raise BoundFailure(f"divisor bound vanishes at slot {worst} (K={best})")
    return DivisorBound(best, worst, alpha, nu, sampled)


# -- serialization ---------------------------------------------------------

def _cjson(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def spectrum_to_json(spec: Spectrum, rset: ResonanceSet | None = None) -> dict:
    out = {"n": spec.n, "k": spec.k, "r": spec.r,
           "lambda": [_cjson(v) for v in spec.lam], "xi": list(spec.xi)}
    if rset is not None:
        out.update({"C": rset.C, "theta": rset.theta, "sector_margin": rset.sector_margin,
                    "J_max": rset.J_max,
                    "pairs": [[i + 1, list(j)] for i, j in rset.sorted_pairs()]})
    return out


def parse_complex(v) -> complex:
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def spectrum_from_json(data: dict) -> tuple[Spectrum, ResonanceSet | None]:
    lam = [parse_complex(v) for v in data["lambda"]]
    n = int(data.get("n", len(lam)))
    if n != len(lam):
        raise ValidationError(f"n={n} but {len(lam)} eigenvalues given")
    spec = Spectrum(tuple(lam), tuple(data.get("xi", [0] * (n - 1))), int(data.get("k", 1)),
                    float(data.get("r", 1.0)))
    rset = None
    if "pairs" in data:
        rset = ResonanceSet(frozenset((int(i) - 1, tuple(int(t) for t in j)) for i, j in data["pairs"]),
                            int(data.get("J_max", max((sum(j) for _, j in data["pairs"]), default=0))),
                            float(data.get("C", 0.0)), float(data.get("sector_margin", 0.0)),
                            float(data.get("theta", 0.0)))
    return spec, rset
