"""Command-line front end: ``mixvol <command> --input FILE ...``."""

from __future__ import annotations

import argparse
import math
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__, bounds, discriminant, geometry as geo, mvexact, scaling, solver
from .io import InputError, dumps_report, read_input

COMMANDS = ("capacity", "mixed-volume", "bounds", "scale", "decompose", "discriminant", "selftest")

EXIT_OK = 0
EXIT_UNCERTIFIED = 2
EXIT_ZERO = 3
EXIT_INPUT = 64


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixvol", description="Mixed volumes via capacity of the Minkowski polynomial.")
    p.add_argument("command", nargs="?", choices=COMMANDS, help="pipeline to run")
    p.add_argument("--command", dest="command_flag", choices=COMMANDS, help="alternative to the positional command")
    p.add_argument("--input", help="body-tuple or matrix-tuple JSON file")
    p.add_argument("--epsilon", type=float, default=1e-4, help="relative additive-gap target, in (0, 1)")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact", help="volume oracle")
    p.add_argument("--samples", type=int, default=100_000, help="hit-or-miss samples per oracle call")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: derived from the input hash)")
    p.add_argument("--normalization", choices=("partial", "classical"), default="partial",
                   help="mixed volume as the coefficient derivative (partial) or divided by n! (classical)")
    p.add_argument("--output", help="report path (default: stdout); .csv for scale trajectories")
    p.add_argument("--method", choices=("ellipsoid", "pg"), default="ellipsoid")
    p.add_argument("--exact", action="store_true", help="mixed-volume: also compute the polarization value")
    p.add_argument("--n", type=int, help="bounds: dimension")
    p.add_argument("--k", type=int, help="bounds: affine-dimension cap")
    p.add_argument("--iters", type=int, default=200, help="scale: iteration budget")
    p.add_argument("--only", type=int, nargs="*", help="selftest: criterion numbers to run")
    p.add_argument("--timing", action="store_true", help="add wall time to the report (breaks byte-identity)")
    p.add_argument("--version", action="version", version=f"mixvol {__version__}")
    return p


class UsageError(Exception):
    pass


def _normalize(value, n: int, how: str):
    if value is None or how == "partial":
        return value
    if isinstance(value, Fraction):
        return value / math.factorial(n)
    return float(value) / math.factorial(n)


def _seed(args, digest: str | None) -> int:
    if args.seed is not None:
        return args.seed
    return int(digest[:16], 16) if digest else 0


def _load(args, kind):
    if not args.input:
        raise UsageError("--input is required for this command")
    obj, digest = read_input(args.input)
    if not isinstance(obj, kind):
        want = "a body tuple" if kind is geo.BodyTuple else "a matrix tuple"
        raise UsageError(f"{args.input}: expected {want}")
    return obj, digest


def _report_base(args, digest, seed) -> dict:
    return {
        "command": args.command,
        "input_hash": digest,
        "seed": seed,
        "normalization": args.normalization,
        "version": __version__,
    }


def _capacity_fields(rep: solver.CapacityReport, n: int, how: str) -> dict:
    d = rep.to_dict()
    d["mv_lower"] = _normalize(rep.mv_lower, n, how)
    d["mv_upper"] = _normalize(rep.mv_upper, n, how)
    d["mv_upper_certified"] = _normalize(rep.mv_upper * math.exp(rep.additive_gap), n, how)
    d["oracle_calls"] = d.pop("calls")
    return d


def cmd_capacity(args):
    tup, digest = _load(args, geo.BodyTuple)
    seed = _seed(args, digest)
    ok, cert = solver.indecomposability_check(tup)
    if not ok:
        raise UsageError(f"tuple is decomposable (subset {list(cert)}); use the mixed-volume command")
    rep = solver.minimize_capacity(tup, tol=args.epsilon, mode=args.mode, seed=seed,
                                   method=args.method, samples=args.samples)
    out = _report_base(args, digest, seed) | _capacity_fields(rep, tup.n, args.normalization)
    out["bounds"] = bounds.lower_bounds_report(rep.cap_estimate, tup.aff_dims())
    return out, EXIT_OK if rep.certified else EXIT_UNCERTIFIED


def cmd_mixed_volume(args):
    tup, digest = _load(args, geo.BodyTuple)
    seed = _seed(args, digest)
    rep = solver.approx_mixed_volume(tup, tol=args.epsilon, mode=args.mode, seed=seed,
                                     method=args.method, samples=args.samples)
    out = _report_base(args, digest, seed) | _capacity_fields(rep, tup.n, args.normalization)
    if args.exact:
        exact = mvexact.mixed_volume_polarization(tup).value
        out["mv_exact"] = _normalize(exact, tup.n, args.normalization)
        out["bracket_contains_exact"] = bool(
            rep.mv_lower * (1 - 1e-9) <= float(exact) <= rep.mv_upper * math.exp(rep.additive_gap) * (1 + 1e-9))
    if rep.zero:
        return out, EXIT_ZERO
    return out, EXIT_OK if rep.certified else EXIT_UNCERTIFIED


def cmd_bounds(args):
    if args.input:
        tup, digest = _load(args, geo.BodyTuple)
        aff = tup.aff_dims()
        n = tup.n
    else:
        if args.n is None or args.k is None:
            raise UsageError("bounds needs --n and --k, or --input")
        n, k = args.n, args.k
        if not 1 <= k <= n:
            raise UsageError("bounds needs 1 <= k <= n")
        aff, digest = [n] * k + [k] * (n - k), None
    bf = bounds.bound_factors(sorted(aff, reverse=True))
    rows = [{"i": i, "aff": a, "D": d, "lambda": lam}
            for i, (a, d, lam) in enumerate(zip(sorted(aff, reverse=True), bf.D, bf.lambdas), start=1)]
    out = {"command": "bounds", "input_hash": digest, "n": n, "aff": list(aff), "table": rows,
           "svg_factor": bf.product, "vdw_factor": bf.vdw, "version": __version__}
    ks = [args.k] if args.k else [k for k in range(1, n + 1) if bounds.schrijver_admissible(aff, k)]
    out["schrijver"] = [{"k": k, "factor": bounds.schrijver_factor(n, k)} for k in ks]
    if 2 in ks:
        out["af2_factor"] = bounds.af2_factor(n)
    return out, EXIT_OK


def cmd_scale(args):
    tup, digest = _load(args, geo.BodyTuple)
    f = scaling.minkowski_functional(tup)
    traj = scaling.sinkhorn_iterate(f, max_iters=args.iters, tol=args.epsilon)
    if args.output and args.output.endswith(".csv"):
        traj.to_csv(args.output)
        return None, EXIT_OK if traj.converged else EXIT_UNCERTIFIED
    last = traj.last
    out = {"command": "scale", "input_hash": digest, "converged": traj.converged,
           "iterations": len(traj.states) - 1, "x": last.x, "f_value": last.f_value, "gamma": last.gamma,
           "trajectory": [{"iteration": k, "f_value": s.f_value, "max_abs_gamma_minus_1": s.deviation}
                          for k, s in enumerate(traj.states)],
           "version": __version__}
    return out, EXIT_OK if traj.converged else EXIT_UNCERTIFIED


def cmd_decompose(args):
    tup, digest = _load(args, geo.BodyTuple)
    dec = solver.decompose(tup)
    out = {"command": "decompose", "input_hash": digest, "zero": dec.zero,
           "certificate": [list(S) for S in dec.certificate],
           "blocks": [{"indices": list(ix), "basis": np.round(B, 15)} for ix, B in dec.blocks],
           "version": __version__}
    return out, EXIT_ZERO if dec.zero else EXIT_OK


def _sqrt_psd(A):
    w, V = np.linalg.eigh(A)
    return V @ np.diag(np.sqrt(np.clip(w, 0, None))) @ V.T


def cmd_discriminant(args):
    A, digest = _load(args, discriminant.MatrixTuple)
    n = A.n
    D = discriminant.mixed_discriminant_polarization(A)
    out = {"command": "discriminant", "input_hash": digest, "n": n,
           "mixed_discriminant": _normalize(D, n, args.normalization),
           "normalization": args.normalization, "version": __version__}
    lo, hi = discriminant.barvinok_bracket([_sqrt_psd(M) for M in A.matrices])
    out["ellipsoid_mixed_volume_bracket"] = {"convention": "classical-D/classical-V", "lower": lo, "upper": hi}
    if D <= 1e-12 * max(1.0, abs(discriminant.det_poly_eval(A, np.ones(n)))):
        return out, EXIT_ZERO
    ok, cert = discriminant.indecomposable(A)
    if not ok:
        out["decomposable_subset"] = list(cert)
        return out, EXIT_UNCERTIFIED
    rep = discriminant.det_capacity(A, tol=args.epsilon, method=args.method)
    out["capacity"] = _capacity_fields(rep, n, args.normalization)
    out["vdw_bracket_holds"] = bool(rep.mv_lower * (1 - 1e-9) <= D <= rep.mv_upper * math.exp(rep.additive_gap) * (1 + 1e-9))
    return out, EXIT_OK if rep.certified else EXIT_UNCERTIFIED


def cmd_selftest(args):
    from .acceptance import run_all

    results = run_all(args.only, echo=lambda line: print(line, file=sys.stderr, flush=True))
    out = {"command": "selftest", "passed": sum(r.passed for r in results), "total": len(results),
           "results": [{"number": r.number, "title": r.title, "passed": r.passed, "detail": r.detail}
                       for r in results],
           "version": __version__}
    return out, EXIT_OK if all(r.passed for r in results) else EXIT_UNCERTIFIED


HANDLERS = {
    "capacity": cmd_capacity, "mixed-volume": cmd_mixed_volume, "bounds": cmd_bounds, "scale": cmd_scale,
    "decompose": cmd_decompose, "discriminant": cmd_discriminant, "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command and args.command_flag and args.command != args.command_flag:
        parser.error("positional command and --command disagree")
    args.command = args.command or args.command_flag
    if not args.command:
        parser.error("a command is required")
    try:
        if not 0 < args.epsilon < 1:
            raise UsageError("--epsilon must lie in (0, 1)")
        if args.mode == "mc" and args.samples < 1000:
            raise UsageError("--samples must be at least 1000 in mc mode")
        t0 = time.perf_counter()
        report, code = HANDLERS[args.command](args)
    except (InputError, UsageError, geo.GeometryError, discriminant.DiscriminantError,
            solver.SolverError, mvexact.OracleError) as exc:
        print(f"mixvol: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if report is not None:
        if args.timing:
            report["wall_time_s"] = time.perf_counter() - t0
        text = dumps_report(report)
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
