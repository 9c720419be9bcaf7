"""Problem files, result files and deterministic JSON output.

A problem file is JSON (or TOML with the same layout)::

    {
      "n": 1, "k": 1, "lambda": [{"re": -1, "im": 0}], "xi": [], "r": 1.0,
      "f": [{"l": 0, "j": [0], "i": 1, "re": 1, "im": 0}],
      "truncation": {"L_max": 20, "J_max": 1},
      "resonance": {"pairs": [[1, [1]]]},
      "sector": {"theta": 0.0, "alpha": 1.5707963267948966, "nu": 0.2, "mu": 1.0},
      "tolerance": 1e-10
    }

``resonance`` holds either explicit ``pairs`` (1-based component, exponent
list) or a constant ``C`` from which the minimal set is built. A zero-Hopf
problem replaces ``lambda``/``f`` by a ``hopf`` block
``{"b", "N", "h1", "h2"}`` whose series use records over ``(u_1, u_2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hopf import HopfProblem, complexify, hopf_resonance_sets, hopf_spectrum
from .laplace import SectorSpec
from .series import TruncatedSeries, from_records, to_records
from .spectrum import (ResonanceSet, Spectrum, ValidationError, check_resonance_invariants,
                       explicit_resonance_set, minimal_resonance_set, parse_complex,
                       spectrum_to_json)


def _flat(v) -> bool:
    if isinstance(v, (list, tuple)):
        return all(not isinstance(t, (dict, list, tuple, complex)) for t in v)
    return not isinstance(v, (dict, complex, np.ndarray))


def dumps(obj, indent: int = 2) -> str:
    """JSON text with floats at 17 significant digits and fixed key order.

    Non-finite floats become ``null``. Complex numbers become ``{re, im}``.
    Records whose values are all scalars or flat lists go on one line.
    """
    pad = " " * indent

    def enc(v, level: int) -> str:
        if isinstance(v, bool) or v is None:
            return json.dumps(v)
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            v = float(v)
            if not math.isfinite(v):
                return "null"
            s = format(v, ".17g")
            if "e" not in s and "." not in s and "n" not in s:
                s += ".0"
            return s
        if isinstance(v, (complex, np.complexfloating)):
            return enc({"re": v.real, "im": v.imag}, level)
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, np.ndarray):
            return enc(v.tolist(), level)
        inner = pad * (level + 1)
        if isinstance(v, dict):
            if not v:
                return "{}"
            if all(_flat(t) for t in v.values()):
                return "{" + ", ".join(f"{json.dumps(str(key))}: {enc(val, level + 1)}"
                                       for key, val in v.items()) + "}"
            items = [f"{inner}{json.dumps(str(key))}: {enc(val, level + 1)}" for key, val in v.items()]
            return "{\n" + ",\n".join(items) + "\n" + pad * level + "}"
        if isinstance(v, (list, tuple)):
            if not v:
                return "[]"
            if all(_flat(t) for t in v):
                return "[" + ", ".join(enc(t, level + 1) for t in v) + "]"
            return "[\n" + ",\n".join(inner + enc(t, level + 1) for t in v) + "\n" + pad * level + "]"
        raise TypeError(f"cannot serialize {type(v).__name__}")

    return enc(obj, 0) + "\n"


def load_document(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        import tomli
        return tomli.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


@dataclass
class ProblemSpec:
    spectrum: Spectrum
    f: TruncatedSeries
    rset: ResonanceSet
    sector: SectorSpec
    L_max: int
    J_max: int
    M_max: int
    tolerance: float = 1e-10
    hopf: HopfProblem | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.spectrum.n

    @property
    def k(self) -> int:
        return self.spectrum.k


def _require(data: dict, key: str):
    if key not in data:
        raise ValidationError(f"problem file is missing '{key}'")
    return data[key]


def _sector(data: dict, k: int, theta_default: float) -> SectorSpec:
    s = data.get("sector", {})
    try:
        return SectorSpec(theta=float(s.get("theta", theta_default)),
                          alpha=float(s.get("alpha", math.pi / 4)),
                          nu=float(s.get("nu", 0.1)), mu=float(s.get("mu", 1.0)), k=k)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def parse_problem(data: dict) -> ProblemSpec:
    """Build and validate a :class:`ProblemSpec` from a decoded document."""
    trunc = data.get("truncation", {})
    L = int(trunc.get("L_max", 12))
    J = int(trunc.get("J_max", 4))
    M = int(trunc.get("M_max", L - 1))
    if L < 1 or J < 1:
        raise ValidationError("L_max and J_max must be >= 1")
    if M != L - 1:
        raise ValidationError(f"M_max must equal L_max - 1 = {L - 1}, got {M}")
    k = int(data.get("k", 1))
    tol = float(data.get("tolerance", 1e-10))
    if "hopf" in data:
        hb = data["hopf"]
        b = float(_require(hb, "b"))
        N = int(hb.get("N", 1))
        if not b > 0:
            raise ValidationError("hopf.b must be positive")
        if N < 1:
            raise ValidationError("hopf.N must be >= 1")
        theta = float(data.get("sector", {}).get("theta", 0.0))
        if not (theta == 0.0 or math.isclose(theta, math.pi)):
            raise ValidationError("zero-Hopf problems use theta in {0, pi}")
        h1 = from_records(hb.get("h1", []), 2, 1, L, J)
        h2 = from_records(hb.get("h2", []), 2, 1, L, J)
        if np.any(h1.coeffs.imag) or np.any(h2.coeffs.imag):
            raise ValidationError("hopf.h1 and hopf.h2 must be real")
        hp = HopfProblem(b, k, h1, h2, N)
        spec = hopf_spectrum(b, k)
        return ProblemSpec(spec, complexify(h1, h2), hopf_resonance_sets(N, J, b, theta, k),
                           _sector(data, k, theta), L, J, M, tol, hp, data)
    lam = [parse_complex(v) for v in _require(data, "lambda")]
    n = int(data.get("n", len(lam)))
    if n != len(lam):
        raise ValidationError(f"n={n} but {len(lam)} eigenvalues given")
    spec = Spectrum(tuple(lam), tuple(data.get("xi", [0] * (n - 1))), k, float(data.get("r", 1.0)))
    f = from_records(_require(data, "f"), n, n, L, J)
    sec = _sector(data, k, 0.0)
    res = data.get("resonance", {})
    if "pairs" in res:
        pairs = [(int(i) - 1, tuple(int(t) for t in j)) for i, j in res["pairs"]]
        for i, j in pairs:
            if not 0 <= i < n or len(j) != n:
                raise ValidationError(f"resonance pair {(i + 1, j)} does not fit n={n}")
        rset = explicit_resonance_set(spec, pairs, J, sec.theta, C=res.get("C"))
    elif "C" in res:
        rset = minimal_resonance_set(spec, float(res["C"]), J, sec.theta)
    else:
        raise ValidationError("resonance needs 'pairs' or 'C'")
    problems = check_resonance_invariants(rset, spec)
    if problems:
        raise ValidationError("; ".join(problems[:5]))
    return ProblemSpec(spec, f, rset, sec, L, J, M, tol, None, data)


def load_problem(path: str | Path) -> ProblemSpec:
    return parse_problem(load_document(path))


def result_to_json(problem: ProblemSpec, g: TruncatedSeries, phi: TruncatedSeries,
                   diagnostics: dict) -> dict:
    return {"spectrum": spectrum_to_json(problem.spectrum, problem.rset),
            "L_max": g.L_max, "J_max": g.J_max,
            "g": to_records(g), "phi": to_records(phi),
            "diagnostics": diagnostics}


def result_from_json(data: dict, n: int) -> tuple[TruncatedSeries, TruncatedSeries]:
    L, J = int(_require(data, "L_max")), int(_require(data, "J_max"))
    return (from_records(_require(data, "g"), n, n, L, J),
            from_records(_require(data, "phi"), n, n, L, J))
