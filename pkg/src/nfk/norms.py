"""Weighted sup-norms on Borel-plane functions and the associated constants.

``||H||_{mu,k} = sup_{w in Omega} |H(w)| (1 + mu**(2k) |w|**(2k)) exp(-mu**k |w|**k)``.

Suprema are estimated by sampling, so every value returned here is a lower
bound of the true norm. Verification routines compare such lower bounds
against closed-form right-hand sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .borel import BorelSeries, borel_transform
from .convolution import convolve_monomial
from .laplace import SectorSpec
from .series import TruncatedSeries


@dataclass(frozen=True)
class NormEstimate:
    value: float
    mu: float
    k: int
    sample_count: int
    converged: bool
    domain: SectorSpec | None = None

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"norm": self.value, "mu": self.mu, "k": self.k,
                "samples": self.sample_count, "converged": self.converged}


def weight(t: np.ndarray, mu: float, k: int) -> np.ndarray:
    s = (mu * np.asarray(t, dtype=float)) ** k
    return (1 + s * s) * np.exp(-s)


def _callable(H) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(H, BorelSeries):
        if H.n_comps != 1 or len(H.basis) != 1:
            raise ValueError("norm_mu_k expects a scalar function of w; use norm_series_z")
        coeffs = H.coeffs[1:, 0, 0]
        return lambda w: np.polyval(coeffs[::-1], w)
    if isinstance(H, np.ndarray) or isinstance(H, (list, tuple)):
        coeffs = np.asarray(H, dtype=complex)
        return lambda w: np.polyval(coeffs[::-1], w)
    return H


def _sampled_sup(f, sec: SectorSpec, mu: float, k: int, N: int) -> float:
    n_rays = 7
    n_disk_r, n_disk_a = 8, 32
    n_rad = max(16, (N - n_disk_r * n_disk_a) // n_rays)
    angles = sec.theta + np.linspace(-sec.alpha / 2, sec.alpha / 2, n_rays)
    dirs = np.exp(1j * angles)
    # disk B(nu)
    rr = np.linspace(0, sec.nu, n_disk_r)
    disk = (rr[:, None] * np.exp(1j * np.linspace(-np.pi, np.pi, n_disk_a, endpoint=False))[None, :]).ravel()
    best = float(np.max(np.abs(f(disk)) * weight(np.abs(disk), mu, k)))
    # rays out to the decay horizon
    t_h = (40.0 ** (1.0 / k)) / mu
    for _ in range(30):
        v_end = np.abs(f(t_h * dirs)) * weight(t_h, mu, k)
        if np.all(v_end <= 1e-16 * max(best, 1e-300)) and best > 0:
            break
        best = max(best, float(np.max(v_end)))
        t_h *= 1.5
    half = n_rad // 2
    t = np.unique(np.concatenate([np.linspace(0, t_h, n_rad - half),
                                  np.geomspace(t_h * 1e-6, t_h, half)]))
    vals = np.abs(f(t[None, :] * dirs[:, None])) * weight(t, mu, k)[None, :]
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite value while sampling the norm")
    r_best, i_best = np.unravel_index(np.argmax(vals), vals.shape)
    best = max(best, float(vals[r_best, i_best]))
    # local refinement around the best ray sample
    lo = t[max(i_best - 1, 0)]
    hi = t[min(i_best + 1, t.size - 1)]
    for _ in range(3):
        tt = np.linspace(lo, hi, 33)
        vv = np.abs(f(tt * dirs[r_best])) * weight(tt, mu, k)
        j = int(np.argmax(vv))
        best = max(best, float(vv[j]))
        step = (hi - lo) / 32
        lo, hi = max(tt[j] - step, 0.0), tt[j] + step
    return best


def norm_mu_k(H, sec: SectorSpec, samples: int = 512, mu: float | None = None) -> NormEstimate:
    """Sampled ``||H||_{mu,k}`` over ``Omega(nu, theta, alpha)``.

    ``H`` may be a callable (vectorized in ``w``), an array of ascending
    ``w``-polynomial coefficients, or a scalar ``BorelSeries`` without ``z``.
    The estimate is marked converged when doubling the sample count changes
    it by less than 0.1%.
    """
    mu = sec.mu if mu is None else mu
    if not mu > 0:
        raise ValueError("mu must be positive")
    f = _callable(H)
    v1 = _sampled_sup(f, sec, mu, sec.k, samples)
    v2 = _sampled_sup(f, sec, mu, sec.k, 2 * samples)
    value = max(v1, v2)
    converged = abs(v2 - v1) <= 1e-3 * max(value, 1e-300)
    return NormEstimate(value, mu, sec.k, 2 * samples, bool(converged), sec)


def norm_series_z(H: BorelSeries, sec: SectorSpec, samples: int = 512,
                  mu: float | None = None) -> NormEstimate:
    """``sum_j max_i ||H_{j,i}||_{mu,k} mu**(-|j|)`` for a Borel series in ``z``."""
    mu = sec.mu if mu is None else mu
    if H.has_unit_part():
        raise ValueError("the unit part has no sup-norm")
    total = 0.0
    converged = True
    count = 0
    for m, j in enumerate(H.basis.monomials):
        block = H.coeffs[1:, m, :]
        if not np.any(block):
            continue
        best = 0.0
        for i in range(H.n_comps):
            if np.any(block[:, i]):
                est = norm_mu_k(block[:, i], sec, samples, mu)
                best = max(best, est.value)
                converged &= est.converged
                count += est.sample_count
        total += best * mu ** (-sum(j))
    return NormEstimate(total, mu, sec.k, count, converged, sec)


def q_k(k: int) -> float:
    """``2**((4k-1)/k) pi / (2 cos(pi (k-1)/(2k)))``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return 2.0 ** ((4 * k - 1) / k) * math.pi / (2 * math.cos(math.pi * (k - 1) / (2 * k)))


def C_k(k: int) -> float:
    """``k * 384 * exp(-2 - sqrt(15)/2) * (4 + sqrt(15))**2``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    s15 = math.sqrt(15.0)
    return k * 384.0 * math.exp(-2 - s15 / 2) * (4 + s15) ** 2


def convolve_poly(a: np.ndarray, b: np.ndarray, k: int) -> np.ndarray:
    """Exact convolution of ascending ``w``-polynomial coefficient arrays."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.zeros(a.size + b.size, dtype=complex)
    for p in np.nonzero(a)[0]:
        for q in np.nonzero(b)[0]:
            deg, c = convolve_monomial(int(p), int(q), k)
            out[deg] += c * a[p] * b[q]
    return out


def verify_conv_bound(H, J, sec: SectorSpec, samples: int = 512) -> float:
    """``(q_k/mu) ||H|| ||J|| - ||H * J||`` for ``w``-polynomials (non-negative if the bound holds)."""
    H = np.atleast_1d(np.asarray(H, dtype=complex))
    J = np.atleast_1d(np.asarray(J, dtype=complex))
    k, mu = sec.k, sec.mu
    nH = norm_mu_k(H, sec, samples).value
    nJ = norm_mu_k(J, sec, samples).value
    if nH == 0 or nJ == 0:
        return 0.0
    nHJ = norm_mu_k(convolve_poly(H, J, k), sec, samples).value
    return q_k(k) / mu * nH * nJ - nHJ


class GrowthHypothesisError(ValueError):
    """Coefficients exceed the assumed geometric bound."""


def verify_borel_bound(h: TruncatedSeries, K: float, T: float, sec: SectorSpec,
                       samples: int = 512) -> float:
    """``2**n K C_k - ||B_k(h)||_{mu,k}`` with the ``z``-series norm.

    Requires ``|h[l, j]| <= K T**(l - 1 + |j|)`` and ``mu > 2**(1/k) T``.
    """
    k, mu = sec.k, sec.mu
    if not mu > 2.0 ** (1.0 / k) * T:
        raise GrowthHypothesisError(f"mu={mu} must exceed 2**(1/k) T = {2.0 ** (1.0 / k) * T}")
    degs = h.basis.degrees
    ls = np.arange(h.L_max + 1)
    bound = K * float(T) ** (ls[:, None] - 1 + degs[None, :])
    if np.any(np.abs(h.coeffs).max(axis=2) > bound * (1 + 1e-12)):
        raise GrowthHypothesisError("coefficients violate |h_lj| <= K T**(l-1+|j|)")
    B = borel_transform(h, k)
    return 2 ** h.n_vars * K * C_k(k) - norm_series_z(B, sec, samples).value
