"""Order-k Laplace transform along rays, sector geometry and k-sums."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz

from .borel import BorelSeries, borel_transform
from .series import TruncatedSeries


class DomainError(ValueError):
    """A point lies outside the domain on which an operation is defined."""


class TailBoundError(RuntimeError):
    """The Laplace integrand did not decay to tolerance within the search range."""


def _wrap(angle: float) -> float:
    return math.remainder(angle, 2 * math.pi)


@dataclass(frozen=True)
class SectorSpec:
    """Borel-plane domain ``Omega = B(nu) U S(theta, alpha)`` and its x-plane partner.

    ``omega_k = B(nu) & S(theta, alpha + pi/k)``. The constructor enforces
    ``0 < alpha < pi`` and ``nu < (sin(k alpha/4))**(1/k) / mu``.
    """

    theta: float = 0.0
    alpha: float = math.pi / 2
    nu: float = 0.2
    mu: float = 1.0
    k: int = 1

    def __post_init__(self):
        if not 0 < self.alpha < math.pi:
            raise DomainError(f"opening alpha={self.alpha} must lie in (0, pi)")
        if self.k < 1 or int(self.k) != self.k:
            raise DomainError("rank k must be a positive integer")
        if not self.mu > 0:
            raise DomainError("mu must be positive")
        if not self.nu > 0:
            raise DomainError("nu must be positive")
        if not self.nu < self.nu_limit:
            raise DomainError(f"nu={self.nu} violates nu < sin(k alpha/4)**(1/k)/mu = {self.nu_limit}")

    @property
    def nu_limit(self) -> float:
        return math.sin(self.k * self.alpha / 4) ** (1.0 / self.k) / self.mu

    def replace(self, **kw) -> "SectorSpec":
        data = dict(theta=self.theta, alpha=self.alpha, nu=self.nu, mu=self.mu, k=self.k)
        data.update(kw)
        return SectorSpec(**data)

    def to_dict(self) -> dict:
        return {"theta": self.theta, "alpha": self.alpha, "nu": self.nu, "mu": self.mu, "k": self.k}


def in_sector(z: complex, theta: float, opening: float) -> bool:
    """``z != 0`` and ``|Arg z - theta| < opening/2``."""
    z = complex(z)
    if z == 0:
        return False
    return abs(_wrap(math.atan2(z.imag, z.real) - theta)) < opening / 2


def in_omega_borel(w: complex, sec: SectorSpec) -> bool:
    return abs(w) < sec.nu or in_sector(w, sec.theta, sec.alpha)


def in_omega_x(x: complex, sec: SectorSpec) -> bool:
    return abs(x) < sec.nu and in_sector(x, sec.theta, sec.alpha + math.pi / sec.k)


def integration_ray(x: complex, sec: SectorSpec) -> float:
    """Ray direction inside ``S(theta, alpha)`` as close as possible to ``Arg x``."""
    d = _wrap(math.atan2(complex(x).imag, complex(x).real) - sec.theta)
    half = 0.999 * sec.alpha / 2
    return sec.theta + min(max(d, -half), half)


def _as_callable(H, z=None, comp: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(H, BorelSeries):
        if H.has_unit_part():
            raise DomainError("the unit part has no Laplace integral; remove it first")
        zz = np.zeros(H.n_vars) if z is None else z
        coeffs = H.w_coefficients(zz, comp)
        return lambda w: np.polyval(coeffs[::-1], w)
    if isinstance(H, np.ndarray):
        coeffs = np.asarray(H, dtype=complex)
        return lambda w: np.polyval(coeffs[::-1], w)
    return H


def laplace_numeric_with_error(H, x: complex, sec: SectorSpec, tol: float = 1e-13,
                               theta_prime: float | None = None, z=None, comp: int = 0,
                               check_domain: bool = True) -> tuple[complex, float]:
    """``int_0^{theta' oo} H(w) exp(-(w/x)**k) k dw`` and an error estimate.

    ``H`` is a callable accepting complex arrays, a ``BorelSeries`` (evaluated
    at ``z``, component ``comp``) or an array of ``w``-polynomial coefficients.
    The integral is computed in the scaled variable ``w = |x| s e^{i theta'}``
    with adaptive Gauss-Kronrod quadrature on ``[0, S]``; ``S`` is enlarged
    until the integrand at ``S`` is negligible.
    """
    x = complex(x)
    k = sec.k
    if check_domain and not in_omega_x(x, sec):
        raise DomainError(f"x={x} is outside omega_k(nu={sec.nu}, theta={sec.theta}, alpha={sec.alpha})")
    if x == 0:
        raise DomainError("x = 0 is not in omega_k")
    tp = integration_ray(x, sec) if theta_prime is None else theta_prime
    f = _as_callable(H, z, comp)
    ax = abs(x)
    arg_x = math.atan2(x.imag, x.real)
    rot = np.exp(1j * k * (tp - arg_x))
    if rot.real <= 0:
        raise DomainError(f"ray {tp} gives no decay for x={x}")
    e_ray = np.exp(1j * tp)
    pref = k * ax * e_ray

    def integrand(s):
        v = complex(f(np.array([ax * s * e_ray]))[0] * np.exp(-rot * s ** k)) * pref
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise TailBoundError(f"non-finite integrand at |w| = {ax * s:.3e}")
        return v

    S = (60.0 / rot.real) ** (1.0 / k)
    for _ in range(8):
        val, err = quad(integrand, 0.0, S, complex_func=True, epsabs=0.0,
                         epsrel=max(tol, 2e-14), limit=400)
        tail = abs(integrand(S)) * S + abs(integrand(2 * S)) * 2 * S
        if tail <= tol * max(abs(val), 1e-300):
            return complex(val), float(abs(err) + tail)
        S *= 1.5
    raise TailBoundError(f"integrand not negligible at |w| = {ax * S:.3e}")


def laplace_numeric(H, x: complex, sec: SectorSpec, tol: float = 1e-13,
                    theta_prime: float | None = None, z=None, comp: int = 0) -> complex:
    return laplace_numeric_with_error(H, x, sec, tol, theta_prime, z, comp)[0]


# -- Pade ---------------------------------------------------------------------

def robust_pade(c: Sequence[complex], m: int, n: int, tol: float = 1e-14
                ) -> tuple[np.ndarray, np.ndarray]:
    """Type ``[m/n]`` Pade approximant with SVD-based degree reduction.

    Returns ascending coefficient arrays ``(a, b)`` with ``b[0] = 1``.
    Singular values below ``tol * ||c||`` are treated as zero and the degrees
    lowered accordingly, which removes spurious pole-zero pairs.
    """
    c = np.zeros(m + n + 1, dtype=complex) if len(c) == 0 else np.asarray(c, dtype=complex)
    c = np.concatenate([c, np.zeros(max(0, m + n + 1 - c.size), dtype=complex)])[:m + n + 1]
    ts = tol * np.linalg.norm(c)
    if np.linalg.norm(c[:m + 1]) <= ts:
        return np.zeros(1, dtype=complex), np.ones(1, dtype=complex)
    row = np.concatenate([[c[0]], np.zeros(n, dtype=complex)])
    while True:
        if n == 0:
            a, b = c[:m + 1].copy(), np.ones(1, dtype=complex)
            break
        Z = toeplitz(c[:m + n + 1], row[:n + 1])
        C = Z[m + 1:m + n + 1, :]
        rho = int(np.sum(np.linalg.svd(C, compute_uv=False) > ts))
        if rho == n:
            _, _, Vh = np.linalg.svd(C)
            b = Vh[-1].conj()
            D = np.diag(np.abs(b) + np.sqrt(np.finfo(float).eps))
            Q, _ = np.linalg.qr((C @ D).conj().T, mode="complete")
            b = D @ Q[:, n]
            b = b / np.linalg.norm(b)
            a = Z[:m + 1, :n + 1] @ b
            lead = int(np.argmax(np.abs(b) > tol))
            a, b = a[lead:], b[lead:]
            break
        m -= n - rho
        n = rho
        row = row[:n + 1]
    nz_a = np.nonzero(np.abs(a) > ts)[0]
    a = a[:nz_a[-1] + 1] if nz_a.size else np.zeros(1, dtype=complex)
    nz_b = np.nonzero(np.abs(b) > tol)[0]
    b = b[:nz_b[-1] + 1]
    return a / b[0], b / b[0]


def pade_callable(coeffs: Sequence[complex], m: int | None = None, n: int | None = None,
                  tol: float = 1e-14) -> Callable[[np.ndarray], np.ndarray]:
    coeffs = np.asarray(coeffs, dtype=complex)
    deg = coeffs.size - 1
    if n is None:
        n = deg // 2
    if m is None:
        m = deg - n
    a, b = robust_pade(coeffs, m, n, tol)
    return lambda w: np.polyval(a[::-1], w) / np.polyval(b[::-1], w)


# -- k-sums -------------------------------------------------------------------

def ksum_evaluate(phi_hat: TruncatedSeries, z: Sequence[complex], x: complex, sec: SectorSpec,
                  pade: bool = False, tol: float = 1e-13) -> np.ndarray:
    """k-sum of ``phi_hat`` at ``(x, z)``: ``phi_0(z) + L(B_k(phi_hat - phi_0))(x)``.

    With ``pade=True`` the Borel polynomial (at fixed ``z``) is replaced by
    its diagonal Pade approximant before integrating.
    """
    if not in_omega_x(x, sec):
        raise DomainError(f"x={x} is outside omega_k")
    z = np.zeros(phi_hat.n_vars) if z is None else np.asarray(z, dtype=complex)
    B = borel_transform(phi_hat.drop_constant(), sec.k)
    const = phi_hat.x_part(0)
    out = np.empty(phi_hat.n_comps, dtype=complex)
    for i in range(phi_hat.n_comps):
        coeffs = B.w_coefficients(z, i)
        H = pade_callable(coeffs) if pade else coeffs
        out[i] = const.evaluate(0.0, z)[i] + laplace_numeric(H, x, sec, tol)
    return out


def operator_norm_bound(sec: SectorSpec) -> float:
    """``Gamma(1/k) nu / (sin(k alpha/4) - mu**k nu**k)**(1/k)``."""
    k = sec.k
    gap = math.sin(k * sec.alpha / 4) - (sec.mu * sec.nu) ** k
    if gap <= 0:
        raise DomainError("nu too large for the Laplace operator bound")
    return math.gamma(1.0 / k) * sec.nu / gap ** (1.0 / k)


def commutation_check(H, x: complex, sec: SectorSpec, step: float | None = None,
                      z=None, comp: int = 0, tol: float = 1e-14) -> float:
    """``|(1/k) x**(k+1) d/dx L(H)(x) - L(w**k H)(x)|`` with a 5-point derivative."""
    x = complex(x)
    k = sec.k
    f = _as_callable(H, z, comp)
    h = 1e-3 * abs(x) if step is None else step
    if h < 1e-12 * abs(x):
        raise FloatingPointError("finite-difference step underflows")
    tp = integration_ray(x, sec)

    def L(xx):
        return laplace_numeric(f, xx, sec, tol, theta_prime=tp)

    # differentiate along the direction of x so all stencil points stay in omega_k
    u = x / abs(x)
    d = (-L(x + 2 * h * u) + 8 * L(x + h * u) - 8 * L(x - h * u) + L(x - 2 * h * u)) / (12 * h * u)
    lhs = x ** (k + 1) / k * d
    rhs = laplace_numeric(lambda w: w ** k * f(w), x, sec, tol, theta_prime=tp)
    return float(abs(lhs - rhs))


def sector_sweep_csv(H, xs: Sequence[complex], sec: SectorSpec, tol: float = 1e-13) -> str:
    """CSV with columns ``x_re, x_im, value_re, value_im, est_error``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x_re", "x_im", "value_re", "value_im", "est_error"])
    for x in xs:
        v, e = laplace_numeric_with_error(H, x, sec, tol)
        x = complex(x)
        w.writerow([format(x.real, ".17g"), format(x.imag, ".17g"),
                    format(v.real, ".17g"), format(v.imag, ".17g"), format(e, ".3e")])
    return buf.getvalue()
