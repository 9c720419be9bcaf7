from __future__ import annotations

import numpy as np
import pytest

from nfk.borel import BorelSeries
from nfk.series import TruncatedSeries, multi_indices
from nfk.spectrum import Spectrum


def random_series(rng, n_vars, n_comps, L, J, deg=None, l_max=None, density=0.7,
                  real=False, start=0):
    """Random polynomial series with |coeff| <= 1."""
    deg = J if deg is None else deg
    l_max = L if l_max is None else l_max
    data = {}
    for j in multi_indices(n_vars, deg):
        for l in range(start, l_max + 1):
            for i in range(n_comps):
                if rng.random() < density:
                    v = rng.uniform(-1, 1)
                    if not real:
                        v = complex(v, rng.uniform(-1, 1)) / np.sqrt(2)
                    data[(l, j, i)] = v
    return TruncatedSeries.from_dict(data, n_vars, n_comps, L, J)


def random_borel(rng, n_vars, n_comps, M, J, density=0.7):
    data = {}
    for j in multi_indices(n_vars, J):
        for m in range(M + 1):
            for i in range(n_comps):
                if rng.random() < density:
                    data[(m, j, i)] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return BorelSeries.from_dict(data, n_vars, n_comps, M, J)


def random_spectrum(rng, n, k, jordan: bool, r: float = 0.7) -> Spectrum:
    """Eigenvalues in the left half plane, away from the critical ray."""
    if jordan and n > 1:
        lam = (complex(rng.uniform(-2, -0.5), rng.uniform(-1, 1)),) * n
        xi = tuple(int(v) for v in rng.integers(0, 2, n - 1))
        if not any(xi):
            xi = (1,) + xi[1:]
        return Spectrum(lam, xi, k, r)
    lam = tuple(complex(rng.uniform(-2, -0.5), rng.uniform(-1, 1)) for _ in range(n))
    return Spectrum(lam, (0,) * (n - 1), k, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
