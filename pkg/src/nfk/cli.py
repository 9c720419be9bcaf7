"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 validation error,
3 numerical failure. Errors are written to stderr as a JSON object
``{"error": kind, "message": ...}``.

CSV outputs
-----------
laplace
    ``x_re, x_im, value_re, value_im, est_error``
gevrey (``--csv``)
    ``l, norm`` with ``norm = max_i sum_j |h_{l,j,i}|``
hopf (``--csv``)
    ``x, u1_re, u1_im, u2_re, u2_im`` for the invariant manifold at ``z = 0``
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .borel import BorelSeries, borel_transform, gevrey_fit
from .borel_solver import IterationLimit, fixed_point_solve, rhs_apply
from .conjugacy import NormalFormResult, row_scaled_residual, solve_conjugacy
from .convolution import QuadratureConfig, convolve_numeric
from .hopf import hopf_normal_form, invariant_manifold, polar_form, symmetry_defect
from .jordan import dense_oracle, phi_backward_induction
from .laplace import SectorSpec, TailBoundError, sector_sweep_csv
from .norms import convolve_poly
from .problem import ProblemSpec, dumps, load_document, parse_problem, result_from_json, result_to_json
from .series import TruncatedSeries, from_records
from .spectrum import ValidationError, check_sector_condition, divisor_lower_bound, parse_complex

ROUTE_TOL = 1e-9
P_TOL = 1e-12
REALNESS_TOL = 1e-8


def threads() -> int:
    raw = os.environ.get("NFK_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"NFK_THREADS must be a positive integer, got {raw!r}")
    if value < 1:
        raise ValidationError(f"NFK_THREADS must be a positive integer, got {raw!r}")
    return value


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _complex_list(values) -> list[complex]:
    return [parse_complex(v) for v in values]


def _sector_from(data: dict, args, k: int) -> SectorSpec:
    """Sector for the data commands; defaults are ``alpha = pi/2``, ``nu = 0.2``."""
    s = dict(data.get("sector", {}))
    if args.theta is not None:
        s["theta"] = args.theta
    if args.mu is not None:
        s["mu"] = args.mu
    return SectorSpec(theta=float(s.get("theta", 0.0)), alpha=float(s.get("alpha", math.pi / 2)),
                      nu=float(s.get("nu", 0.2)), mu=float(s.get("mu", 1.0)), k=k)


def _load(args) -> ProblemSpec:
    data = load_document(args.spec)
    if args.theta is not None:
        data.setdefault("sector", {})["theta"] = args.theta
    if args.mu is not None:
        data.setdefault("sector", {})["mu"] = args.mu
    return parse_problem(data)


def _tolerance(args, problem: ProblemSpec | None = None) -> float:
    if args.tol is not None:
        return args.tol
    return problem.tolerance if problem is not None else 1e-10


def _solve(problem: ProblemSpec) -> NormalFormResult:
    return solve_conjugacy(problem.f, problem.spectrum, problem.rset)


def _gevrey_block(phi: TruncatedSeries, k: int) -> dict:
    if phi.L_max + 1 < 6 or not np.any(phi.coeffs):
        return {"K_fit": None, "T_fit": None}
    fit = gevrey_fit(phi.extend(phi.L_max + 1, phi.J_max).mul_x(1), k)
    return {"K_fit": fit.K_fit, "T_fit": fit.T_fit}


# -- subcommands ---------------------------------------------------------------

def cmd_normal_form(args) -> int:
    problem = _load(args)
    result = _solve(problem)
    tol = _tolerance(args, problem)
    diag = {"residual": result.residual_norm, "residual_rel": result.residual_rel}
    diag.update(_gevrey_block(result.phi_hat, problem.k))
    _emit(dumps(result_to_json(problem, result.g_hat, result.phi_hat, diag)), args.out)
    return 0 if result.residual_rel <= tol else 1


def cmd_borel(args) -> int:
    data = load_document(args.spec)
    k = int(data.get("k", 1))
    n, c = int(data["n_vars"]), int(data.get("n_comps", 1))
    h = from_records(data["series"], n, c, int(data["L_max"]), int(data["J_max"]))
    B = borel_transform(h, k, unital=True)
    out = {"k": k, "n_vars": n, "n_comps": c, "M_max": B.M_max, "J_max": B.J_max,
           "unit": [{"j": list(j), "i": i + 1, "re": v.real, "im": v.imag}
                    for j, i, v in B.unit_items()],
           "series": [{"m": m, "j": list(j), "i": i + 1, "re": v.real, "im": v.imag}
                      for m, j, i, v in B.items()]}
    _emit(dumps(out), args.out)
    return 0


def cmd_laplace(args) -> int:
    data = load_document(args.spec)
    k = int(data.get("k", 1))
    coeffs = np.array(_complex_list(data["coeffs"]), dtype=complex)
    xs = _complex_list(data["x"])
    sec = _sector_from(data, args, k)
    tol = args.tol if args.tol is not None else float(data.get("tolerance", 1e-13))
    _emit(sector_sweep_csv(coeffs, xs, sec, tol), args.out)
    return 0


def cmd_convolve(args) -> int:
    data = load_document(args.spec)
    k = int(data.get("k", 1))
    a = np.array(_complex_list(data["a"]), dtype=complex)
    b = np.array(_complex_list(data["b"]), dtype=complex)
    exact = convolve_poly(a, b, k)
    cfg = QuadratureConfig(node_count=args.nodes or 64, tolerance=args.tol or 1e-8)
    ws = _complex_list(data.get("w", [0.3, {"re": 0.5, "im": 0.2}]))
    pa = lambda w: np.polyval(a[::-1], w)
    pb = lambda w: np.polyval(b[::-1], w)
    checks = []
    worst = 0.0
    for w in ws:
        num = convolve_numeric(pa, pb, w, k, cfg)
        ex = complex(np.polyval(exact[::-1], w))
        err = abs(num - ex) / max(abs(ex), 1e-300)
        worst = max(worst, err)
        checks.append({"w": w, "exact": ex, "numeric": num, "rel_error": err})
    out = {"k": k, "coeffs": [complex(v) for v in exact], "quadrature": checks}
    _emit(dumps(out), args.out)
    return 0 if worst <= cfg.tolerance else 1


def cmd_gevrey(args) -> int:
    data = load_document(args.spec)
    if "phi" in data:
        n = len(data["spectrum"]["lambda"])
        _, phi = result_from_json(data, n)
        k = int(data["spectrum"]["k"])
        h = phi.extend(phi.L_max + 1, phi.J_max).mul_x(1)
    else:
        k = int(data.get("k", 1))
        h = from_records(data["series"], int(data["n_vars"]), int(data.get("n_comps", 1)),
                         int(data["L_max"]), int(data["J_max"]))
    fit = gevrey_fit(h, k, R=float(data.get("R", 1.0)))
    _emit(dumps(fit.to_dict()), args.out)
    if args.csv:
        Path(args.csv).write_text(fit.to_csv())
    return 0


def _hopf_samples(problem: ProblemSpec, count: int = 6) -> np.ndarray:
    sign = 1.0 if problem.sector.theta == 0.0 else -1.0
    return sign * np.linspace(0.1, 0.9, count) * problem.sector.nu


def cmd_hopf(args) -> int:
    problem = _load(args)
    if problem.hopf is None:
        raise ValidationError("the problem file has no 'hopf' block")
    result = _solve(problem)
    nf = hopf_normal_form(result=result, N=problem.hopf.N, b=problem.hopf.b)
    xs = _hopf_samples(problem)
    ms = invariant_manifold(result.phi_hat, problem.sector.theta, xs, problem.sector,
                            problem.k, pade=not args.no_pade, workers=threads())
    polar = []
    for x in xs:
        for rr in (0.0, 0.1, 0.2):
            rad, ang = polar_form(nf, float(x), rr)
            polar.append({"x": float(x), "r": rr, "radial": rad, "angular": ang})
    pg, pp = symmetry_defect(result.g_hat), symmetry_defect(result.phi_hat)
    out = {"b": problem.hopf.b, "N": problem.hopf.N, "k": problem.k,
           "theta": problem.sector.theta,
           "residual_rel": result.residual_rel,
           "property_P": {"g": pg, "phi": pp},
           "pairing_defect": nf.pairing_defect,
           "realness_defect": ms.realness_defect,
           "h10": nf.to_dict()["h10"], "polar": polar}
    _emit(dumps(out), args.out)
    if args.csv:
        Path(args.csv).write_text(ms.to_csv())
    ok = max(pg, pp) <= P_TOL and ms.realness_defect <= REALNESS_TOL
    return 0 if ok else 1


def _route_error(problem: ProblemSpec, g: TruncatedSeries, phi: TruncatedSeries) -> float:
    G, Phi = fixed_point_solve(problem.f, problem.spectrum, problem.rset)
    k = problem.k
    worst = 0.0
    for X, Y in ((G, borel_transform(g, k, unital=True)), (Phi, borel_transform(phi, k, unital=True))):
        Y = TruncatedSeries.truncate(Y, X.L_max, X.J_max)
        scale = np.maximum(np.abs(X.coeffs).max(axis=(1, 2)), 1.0)
        worst = max(worst, float((np.abs(X.coeffs - Y.coeffs).max(axis=(1, 2)) / scale).max()))
    return worst


def _oracle_error(problem: ProblemSpec) -> float:
    n, L, J = problem.n, problem.L_max, problem.J_max
    zero = BorelSeries.zeros(n, n, L - 1, J)
    H = rhs_apply(zero, zero, problem.f, problem.spectrum).drop_unit()
    G1, P1 = phi_backward_induction(H, problem.spectrum, problem.rset)
    G2, P2 = dense_oracle(H, problem.spectrum, problem.rset)
    scale = max(G1.max_abs(), P1.max_abs(), 1e-300)
    return max(np.abs(G1.coeffs - G2.coeffs).max(), np.abs(P1.coeffs - P2.coeffs).max()) / scale


def cmd_verify(args) -> int:
    problem = _load(args)
    tol = _tolerance(args, problem)
    if args.result:
        g, phi = result_from_json(load_document(args.result), problem.n)
    else:
        res = _solve(problem)
        g, phi = res.g_hat, res.phi_hat
    checks = []

    def record(name, value, threshold, ok=None):
        ok = (value <= threshold) if ok is None else ok
        checks.append({"name": name, "pass": bool(ok), "value": value, "threshold": threshold})

    record("residual", row_scaled_residual(problem.f, problem.spectrum, g, phi), tol)
    record("route_equivalence", _route_error(problem, g, phi), ROUTE_TOL)
    record("jordan_oracle", _oracle_error(problem), 1e-10)
    sc = check_sector_condition(problem.rset, problem.spectrum)
    record("sector_condition", sc.worst_distance, sc.margin / 2, ok=sc.ok)
    if np.any(~problem.rset.mask(problem.n, problem.J_max)):
        bound = divisor_lower_bound(problem.rset, problem.spectrum, problem.sector.nu)
        record("divisor_bound", bound.K, 0.0, ok=bound.K > 0)
    if problem.hopf is not None:
        record("property_P_g", symmetry_defect(g), P_TOL)
        record("property_P_phi", symmetry_defect(phi), P_TOL)
    ok = all(c["pass"] for c in checks)
    _emit(dumps({"checks": checks, "all_pass": ok}), args.out)
    return 0 if ok else 1


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nfk", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"nfk {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("spec", help="problem or data file (JSON, or TOML by suffix)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("--nodes", type=int, default=None, help="quadrature node count")
    common.add_argument("--theta", type=float, default=None, help="summation direction")
    common.add_argument("--mu", type=float, default=None, help="norm parameter mu")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("normal-form", parents=[common], help="solve for (g, phi)").set_defaults(func=cmd_normal_form)
    sub.add_parser("borel", parents=[common], help="order-k Borel transform of a series").set_defaults(func=cmd_borel)
    sub.add_parser("laplace", parents=[common], help="Laplace sweep of a w-polynomial (CSV)").set_defaults(func=cmd_laplace)
    sub.add_parser("convolve", parents=[common], help="convolution of two w-polynomials").set_defaults(func=cmd_convolve)
    g = sub.add_parser("gevrey", parents=[common], help="Gevrey growth fit")
    g.add_argument("--csv", help="also write (l, norm) CSV")
    g.set_defaults(func=cmd_gevrey)
    h = sub.add_parser("hopf", parents=[common], help="zero-Hopf normal form and manifold")
    h.add_argument("--csv", help="also write manifold CSV")
    h.add_argument("--no-pade", action="store_true", help="integrate the Borel polynomial directly")
    h.set_defaults(func=cmd_hopf)
    v = sub.add_parser("verify", parents=[common], help="run the check suite")
    v.add_argument("--result", help="result file from normal-form to check")
    v.set_defaults(func=cmd_verify)
    return p


def _fail(kind: str, exc: BaseException, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads()
        return args.func(args)
    except (ArithmeticError, FloatingPointError, IterationLimit, TailBoundError,
            np.linalg.LinAlgError) as exc:
        return _fail("numerical", exc, 3)
    except (ValueError, KeyError, OSError) as exc:
        return _fail("validation", exc, 2)


if __name__ == "__main__":
    sys.exit(main())
