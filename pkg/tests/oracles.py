"""Independent reference solvers used only by the tests."""

from __future__ import annotations

import numpy as np

from nfk.conjugacy import conjugacy_defect
from nfk.series import TruncatedSeries


def xplane_linearization_oracle(f: TruncatedSeries, spec, rset):
    """Solve the conjugation equation order by order by probing the defect.

    At order ``l`` the defect is affine in the unknown row ``l`` of ``(g, phi)``
    (``g`` on the resonance set, ``phi`` off it), so its matrix is obtained
    column by column from unit perturbations and the row is fixed by least squares.
    """
    n, L, J = spec.n, f.L_max, f.J_max
    mask = rset.mask(n, J)
    M = mask.shape[0]
    g = np.zeros((L + 1, M, n), dtype=complex)
    p = np.zeros((L + 1, M, n), dtype=complex)
    slots = [(m, i) for m in range(M) for i in range(n)]

    def defect_row(l):
        d = conjugacy_defect(f, spec, TruncatedSeries(g, n, L, J), TruncatedSeries(p, n, L, J))
        return d.coeffs[l].ravel()

    for l in range(L + 1):
        base = defect_row(l)
        cols = []
        for m, i in slots:
            target = g if mask[m, i] else p
            target[l, m, i] = 1.0
            cols.append(defect_row(l) - base)
            target[l, m, i] = 0.0
        A = np.column_stack(cols)
        sol, *_ = np.linalg.lstsq(A, -base, rcond=None)
        for (m, i), v in zip(slots, sol):
            (g if mask[m, i] else p)[l, m, i] = v
    return TruncatedSeries(g, n, L, J), TruncatedSeries(p, n, L, J)
