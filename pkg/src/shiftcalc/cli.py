"""Command-line front end: ``shiftcalc SUBCOMMAND ...``.

Reports are JSON on stdout (sorted keys, so identical inputs give identical
bytes); a short summary goes to stderr.  Exit codes: 0 success, 1 failed
check or theorem violation, 2 usage error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .circle import ACTION_NAMES, ineffectivity_kernel, make_action, newman_check, zid_circle
from .errors import (ChartFailure, InconsistentKernel, NoClosedOrbits, NumericFailure,
                     ShiftCalcError, TheoremViolation)
from .flows import FLOW_NAMES, linear_flow, make_flow, write_orbit_csv
from .linear_flow import imaginary_spectrum, period_divergence_probe, point_period
from .matrix_core import read_matrix
from .orbits import Grid, classify_orbit, orbit_samples
from .shifts import SHIFT_NAMES, apply_phi, make_fmap, make_shift, read_shift_csv
from .zid import classify_zid, reconstruct_alpha, zid_membership

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _UsageError(Exception):
    pass


def _clean(obj):
    """JSON-safe copy: numpy scalars and arrays to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _digest(inputs: dict) -> str:
    blob = json.dumps(_clean(inputs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise _UsageError(f"bad point {text!r}; expected x1,...,xn") from exc


def _read_points(text: str) -> np.ndarray:
    rows = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].strip().startswith("#"):
            continue
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            if rows:
                raise _UsageError(f"bad points row {row!r}")
    if not rows or len({len(r) for r in rows}) != 1:
        raise _UsageError("points file needs rows x1,...,xn of equal length")
    return np.array(rows)


def _flow_from_args(args):
    if getattr(args, "matrix", None):
        text = _read_text(args.matrix)
        return linear_flow(read_matrix(text)), {"matrix_file": text}
    return make_flow(args.flow), {"flow": args.flow}


# ---------------------------------------------------------------------------
# subcommands; each returns (inputs, tol, result, exit code, summary line)

def cmd_linflow(args):
    text = _read_text(args.matrix)
    A = read_matrix(text)
    inputs = {"matrix_file": text, "tol": args.tol, "point": args.point,
              "scales": args.scales, "horizon": args.horizon}
    rep = imaginary_spectrum(A, args.tol)
    result = {"spectrum": rep.to_dict()}
    code = EXIT_OK
    if args.point:
        result["point_period"] = point_period(A, _parse_point(args.point), args.tol,
                                              args.horizon).to_dict()
    if args.scales:
        scales = [float(s) for s in args.scales.split(",")]
        try:
            result["divergence_probe"] = [{"scale": s, "min_period_bound": b}
                                          for s, b in period_divergence_probe(A, scales, args.tol)]
        except NoClosedOrbits as exc:
            result["divergence_probe"] = {"error": str(exc)}
            code = EXIT_CHECK
    summary = (f"closed orbits: {rep.has_closed_orbits}; "
               f"min period bound: {rep.min_period_bound}")
    return inputs, rep.tol_used, result, code, summary


def cmd_orbit(args):
    flow, src = _flow_from_args(args)
    z = _parse_point(args.point)
    inputs = {**src, "point": args.point, "horizon": args.horizon, "tol": args.tol}
    verdict = classify_orbit(flow, z, args.horizon, args.tol)
    result = {"orbit": verdict.to_dict()}
    if flow.matrix is not None:
        result["linear_verdict"] = point_period(flow.matrix, z, horizon=args.horizon).to_dict()
    if args.dump_orbit:
        ts, X = orbit_samples(flow, z, args.horizon)
        with open(args.dump_orbit, "w") as fh:
            write_orbit_csv(fh, ts, X)
        result["orbit_csv"] = {"path": args.dump_orbit, "rows": int(len(ts))}
    summary = f"orbit of {z.tolist()}: {verdict.kind}" + (
        f", period {verdict.period:.12g}" if verdict.period is not None else "")
    return inputs, args.tol, result, EXIT_OK, summary


def cmd_zid(args):
    flow = make_flow(args.flow)
    inputs = {"flow": args.flow, "grid": args.grid, "horizon": args.horizon, "tol": args.tol}
    z = classify_zid(flow, Grid.parse(args.grid), args.horizon, args.tol)
    return inputs, args.tol, {"zid": z.to_dict()}, EXIT_OK, f"Z_id case: {z.case}"


def _load_shift(spec: str):
    name = spec.partition(":")[0]
    if name in SHIFT_NAMES:
        return make_shift(spec), spec
    if Path(spec).is_file():
        text = _read_text(spec)
        return read_shift_csv(text), text
    raise _UsageError(f"--alpha must be a builtin ({', '.join(SHIFT_NAMES)}) or a CSV file")


def cmd_phi(args):
    flow = make_flow(args.flow)
    alpha, alpha_src = _load_shift(args.alpha)
    pts_text = _read_text(args.points)
    P = _read_points(pts_text)
    inputs = {"flow": args.flow, "alpha": alpha_src, "points": pts_text, "tol": args.tol,
              "check_membership": args.check_membership}
    images = apply_phi(flow, alpha)(P)
    values = np.atleast_1d(alpha(P))
    table = [{"point": p, "alpha": a, "image": q}
             for p, a, q in zip(P.tolist(), values.tolist(), images.tolist())]
    result = {"table": table}
    code = EXIT_OK
    summary = f"evaluated phi({alpha.name}) at {len(P)} points"
    if args.check_membership:
        m = zid_membership(flow, alpha, P, args.tol)
        result["membership"] = m.to_dict()
        code = EXIT_OK if m.passed else EXIT_CHECK
        summary += f"; membership {'passed' if m.passed else 'failed'} (max residual {m.max_residual:.3g})"
    return inputs, args.tol, result, code, summary


def cmd_reconstruct(args):
    flow = make_flow(args.flow)
    y = _parse_point(args.point)
    fmap = make_fmap(flow, args.fmap)
    inputs = {"flow": args.flow, "fmap": args.fmap, "point": args.point, "seed": args.seed,
              "radius": args.radius, "samples": args.samples, "sample_seed": args.sample_seed,
              "tol": args.tol}
    rec = reconstruct_alpha(flow, fmap, y, args.seed, args.radius, args.samples,
                            args.sample_seed, tol=args.tol)
    code = EXIT_OK if rec.max_residual < args.tol else EXIT_CHECK
    summary = f"reconstructed {len(rec.values)} samples; max residual {rec.max_residual:.3g}"
    return inputs, args.tol, {"reconstruction": rec.to_dict()}, code, summary


def cmd_circle(args):
    action = make_action(args.action)
    grid = Grid.parse(args.grid)
    inputs = {"action": args.action, "grid": args.grid, "tol": args.tol}
    kernel = ineffectivity_kernel(action, grid, args.tol)
    result = {"kernel": kernel.to_dict(),
              "zid": zid_circle(action, grid, args.tol, kernel).to_dict()}
    code = EXIT_OK
    if kernel.is_full:
        result["newman"] = {"skipped": "trivial action; every point is fixed"}
        summary = "trivial action"
    else:
        try:
            nr = newman_check(action, grid, args.tol, kernel)
            result["newman"] = nr.to_dict()
            summary = f"kernel order {kernel.order}; fixed-set interior empty: {nr.interior_empty}"
        except TheoremViolation as exc:
            result["newman"] = {"violation": str(exc), "report": exc.report}
            code = EXIT_CHECK
            summary = f"kernel order {kernel.order}; THEOREM VIOLATION: {exc}"
    return inputs, args.tol, result, code, summary


_DEMO_RADII = (0.0, 0.5, 1.0, 2.0)


def cmd_demo(args):
    if args.name != "example61":
        raise _UsageError(f"unknown demo {args.name!r}; available: example61")
    grid_spec = "-2,2,9;-2,2,9"
    inputs = {"demo": args.name, "grid": grid_spec, "horizon": args.horizon, "tol": args.tol}
    grid = Grid.parse(grid_spec)
    phi = classify_zid(make_flow("example61-phi"), grid, args.horizon, args.tol)
    psi = classify_zid(make_flow("example61-psi"), grid, args.horizon, args.tol)
    samples = dict(phi.generator_samples)
    checks = []
    for r in _DEMO_RADII:
        got = samples.get((r, 0.0))
        want = 1.0 / (1.0 + r * r)
        checks.append({"radius": r, "mu": got, "expected": want,
                       "passed": got is not None and abs(got - want) <= 1e-5})
    ok = (phi.case == "infinite_cyclic" and psi.case == "trivial"
          and all(c["passed"] for c in checks))
    result = {"phi": phi.to_dict(), "psi": psi.to_dict(), "generator_checks": checks,
              "check_tol": 1e-5, "passed": ok}
    summary = (f"Phi: {phi.case}; Psi: {psi.case}; generator at |z|=0,0.5,1,2: "
               + ", ".join("-" if c["mu"] is None else f"{c['mu']:.9g}" for c in checks))
    return inputs, args.tol, result, EXIT_OK if ok else EXIT_CHECK, summary


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shiftcalc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"shiftcalc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol=1e-8):
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized probes")

    s = sub.add_parser("linflow", help="closed orbits of a linear flow e^{At}")
    s.add_argument("--matrix", required=True, help="matrix file, one row per line")
    s.add_argument("--tol", type=float, default=None,
                   help="imaginary-axis tolerance (default 1e-9 (1 + |A|))")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--point", help="x1,...,xn: also classify this point")
    s.add_argument("--scales", help="s1,s2,...: period bounds of A/s")
    s.add_argument("--horizon", type=float, default=1e3)
    s.set_defaults(run=cmd_linflow)

    s = sub.add_parser("orbit", help="classify one orbit",
                       description=f"Flows: {', '.join(FLOW_NAMES)}.")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--flow", help="NAME[:key=value,...]")
    src.add_argument("--matrix", help="linear flow from a matrix file")
    s.add_argument("--point", required=True)
    s.add_argument("--horizon", type=float, required=True)
    s.add_argument("--dump-orbit", metavar="FILE", help="write orbit samples as CSV t,x1,...,xn")
    common(s)
    s.set_defaults(run=cmd_orbit)

    s = sub.add_parser("zid", help="structure of Z_id on a grid",
                       description=f"Flows: {', '.join(FLOW_NAMES)}.")
    s.add_argument("--flow", required=True)
    s.add_argument("--grid", required=True, help='"lo,hi,steps;..." one triple per axis')
    s.add_argument("--horizon", type=float, default=2.0)
    common(s)
    s.set_defaults(run=cmd_zid)

    s = sub.add_parser("phi", help="evaluate phi(alpha) on points",
                       description=f"Shift builtins: {', '.join(SHIFT_NAMES)} "
                                   "(e.g. constant:0.5, bump:center=0,radius=1,height=1); "
                                   "or a CSV file x1,...,xn,value.")
    s.add_argument("--flow", required=True)
    s.add_argument("--alpha", required=True)
    s.add_argument("--points", required=True, help="CSV file of points")
    s.add_argument("--check-membership", action="store_true")
    common(s)
    s.set_defaults(run=cmd_phi)

    s = sub.add_parser("reconstruct", help="rebuild a shift function near a regular point")
    s.add_argument("--flow", required=True)
    s.add_argument("--fmap", required=True, help="identity, time:A or phi:SHIFT")
    s.add_argument("--point", required=True)
    s.add_argument("--seed", type=float, required=True, help="value of alpha at the point")
    s.add_argument("--radius", type=float, default=0.2)
    s.add_argument("--samples", type=int, default=50)
    s.add_argument("--sample-seed", type=int, default=0, help="seed for the sample points")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(run=cmd_reconstruct)

    s = sub.add_parser("circle", help="kernel, Z_id and fixed set of a circle action",
                       description=f"Actions: {', '.join(ACTION_NAMES)}.")
    s.add_argument("--action", required=True, help="NAME[:k]")
    s.add_argument("--grid", required=True)
    common(s)
    s.set_defaults(run=cmd_circle)

    s = sub.add_parser("demo", help="worked examples")
    s.add_argument("name", help="example61")
    s.add_argument("--horizon", type=float, default=2.0)
    common(s)
    s.set_defaults(run=cmd_demo)
    return p


def _glue_negative_values(argv):
    """Turn ``--grid -2,2,9`` into ``--grid=-2,2,9`` so argparse accepts
    values that start with a minus sign."""
    out = []
    for tok in argv:
        if (out and out[-1].startswith("--") and "=" not in out[-1]
                and len(tok) > 1 and tok[0] == "-" and (tok[1].isdigit() or tok[1] == ".")):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _glue_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        inputs, tol, result, code, summary = args.run(args)
    except (_UsageError, ValueError, ChartFailure, InconsistentKernel) as exc:
        # InvalidArgument and DomainError are ValueErrors
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE if not isinstance(exc, (ChartFailure, InconsistentKernel)) else EXIT_CHECK
    except TheoremViolation as exc:
        print(f"theorem violation: {exc}", file=stderr)
        return EXIT_CHECK
    except (NumericFailure, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=stderr)
        return EXIT_NUMERIC
    except ShiftCalcError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_CHECK
    report = {
        "command": args.command,
        "tool_version": __version__,
        "inputs_digest": _digest({"command": args.command, "seed": getattr(args, "seed", None),
                                  **inputs}),
        "inputs": inputs,
        "tol": tol,
        "result": result,
    }
    stdout.write(json.dumps(_clean(report), sort_keys=True, indent=2) + "\n")
    print(summary, file=stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
