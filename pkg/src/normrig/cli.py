"""Command-line front end.

Subcommands: build, verify, figure5, stats, equilateral4.  Norms are given
as compact flags: ``p:2``, ``p:inf``, ``poly:@vertices.json``,
``blend:p:inf,0.1``.  Exit codes: 0 claim holds, 1 usage or input error,
2 violation found, 3 budget exhausted / inconclusive.  The environment
variable NORMRIG_SEED supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from normrig import _backend
from normrig.norms import Norm2, NormError, blend_norm, p_norm, polygonal_norm
from normrig.serialize import (SchemaError, load_witness, save_report,
                               save_witness)
from normrig.svgout import save_svg
from normrig.verify import (BudgetError, PlanError, approx_gap_check,
                            enumerate_placements, equilateral_search, falsify)
from normrig.witness import (BuildError, InvariantError, approx_set,
                             build_rational, figure5_config)


def parse_norm_flag(spec: str) -> Norm2:
    if spec.startswith("p:"):
        val = spec[2:]
        if val.lower() in ("inf", "infinity"):
            return p_norm(math.inf)
        return p_norm(float(val))
    if spec.startswith("poly:@"):
        path = spec[len("poly:@"):]
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        verts = data["vertices"] if isinstance(data, dict) else data
        return polygonal_norm(verts)
    if spec.startswith("blend:"):
        rest = spec[len("blend:"):]
        base_str, _, lam_str = rest.rpartition(",")
        if not base_str:
            raise NormError(f"blend flag needs a base and a lambda: {spec!r}")
        return blend_norm(parse_norm_flag(base_str), float(lam_str))
    raise NormError(f"unrecognized norm flag: {spec!r}")


def _parse_point(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise BuildError(f"point must be 'x,y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _default_seed() -> int:
    return int(os.environ.get("NORMRIG_SEED", "0"))


def _unit_step(norm: Norm2, length: float) -> tuple[float, float]:
    nx = norm.eval((1.0, 0.0))
    return (length / nx, 0.0)


def cmd_build(args) -> int:
    norm = parse_norm_flag(args.source_norm)
    if (args.q is None) == (args.eps is None):
        print("build: exactly one of --q and --eps is required", file=sys.stderr)
        return 1
    x = _parse_point(args.x) if args.x else (0.0, 0.0)
    if args.q is not None:
        q = Fraction(args.q)
        if args.y:
            y = _parse_point(args.y)
        else:
            step = _unit_step(norm, float(q) * args.rho)
            y = (x[0] + step[0], x[1] + step[1])
        ws = build_rational(norm, x, y, q, args.rho)
    else:
        if not args.y:
            print("build --eps requires --y", file=sys.stderr)
            return 1
        y = _parse_point(args.y)
        ws = approx_set(norm, x, y, args.eps, args.rho)
    ws.check_invariants()
    save_witness(ws, args.out)
    if args.svg:
        save_svg(ws, args.svg)
    print(f"wrote {args.out}: {len(ws.points)} points, {len(ws.edges)} edges, "
          f"target {ws.target_distance:.12g}")
    return 0


def cmd_verify(args) -> int:
    ws = load_witness(args.infile)
    target = parse_norm_flag(args.target_norm)
    if args.mode == "enumerate":
        rep = enumerate_placements(ws, target, direction_grid=args.grid,
                                   tol=args.tol)
    else:
        rep = falsify(ws, target, restarts=args.restarts, seed=args.seed,
                      tol=args.tol, require_injective=not args.allow_non_injective)
    if args.out:
        save_report(rep, args.out)
    print(f"{rep.mode}: {rep.placements_found} consistent placements "
          f"({rep.injective_found} injective), {rep.violations_found} violations, "
          f"budget {rep.search_budget_used}")
    if ws.approximate:
        ok = approx_gap_check(ws, target, rep)
        print(f"approximate set: gap bound {ws.eps} "
              f"{'holds' if ok else 'VIOLATED'} "
              f"(worst injective gap {rep.max_abs_anchor_gap_injective})")
        if rep.placements_found == 0:
            return 3
        return 0 if ok else 2
    return rep.exit_code()


def cmd_figure5(args) -> int:
    norm = parse_norm_flag(args.source_norm)
    x = _parse_point(args.x) if args.x else (0.0, 0.0)
    if args.y:
        y = _parse_point(args.y)
    else:
        step = _unit_step(norm, 2.0 * args.d)
        y = (x[0] + step[0], x[1] + step[1])
    ws = figure5_config(norm, x, y)
    ws.check_invariants()
    save_witness(ws, args.out)
    if args.svg:
        save_svg(ws, args.svg)
    path = ws.trace.get("lambda_path", [])
    print(f"wrote {args.out}: {len(ws.points)} points, {len(ws.edges)} edges; "
          f"refinement path {path}")
    return 0


def _trace_depth(node) -> int:
    if not isinstance(node, dict):
        return 0
    children = node.get("children", [])
    if not children:
        return 1
    return 1 + max(_trace_depth(c) for c in children)


def cmd_stats(args) -> int:
    norm = parse_norm_flag(args.source_norm)
    rows = []
    for m in range(1, args.max_num + 1):
        for n in range(1, args.max_den + 1):
            q = Fraction(m, n)
            if q.numerator != m or q.denominator != n:
                continue  # not reduced; already covered
            x = (0.0, 0.0)
            step = _unit_step(norm, float(q) * args.rho)
            ws = build_rational(norm, x, step, q, args.rho)
            rows.append((f"{m}/{n}", len(ws.points), len(ws.edges),
                         _trace_depth(ws.trace)))
    lines = []
    if args.csv:
        lines.append("q,points,edges,depth")
        for r in rows:
            lines.append(f"{r[0]},{r[1]},{r[2]},{r[3]}")
    else:
        lines.append(f"{'q':>8} {'points':>8} {'edges':>8} {'depth':>6}")
        for r in rows:
            lines.append(f"{r[0]:>8} {r[1]:>8} {r[2]:>8} {r[3]:>6}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_equilateral4(args) -> int:
    target = parse_norm_flag(args.target_norm)
    res = equilateral_search(target, args.d, n_points=args.n,
                             restarts=args.restarts, seed=args.seed)
    print(f"best residual {res.best_residual:.6e} after {res.restarts_used} "
          f"restarts")
    for px, py in res.best_points:
        print(f"  {px:.12g}, {py:.12g}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="normrig",
        description="Witness-set construction and placement rigidity checks "
                    "for two-dimensional normed planes "
                    f"(kernel backend: {_backend.BACKEND})")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build a witness set for a rational "
                                     "ratio or an eps-approximate one")
    b.add_argument("--q", help="distance ratio m/n")
    b.add_argument("--eps", type=float, help="approximation bound")
    b.add_argument("--rho", type=float, default=1.0)
    b.add_argument("--source-norm", default="p:2")
    b.add_argument("--x", help="anchor x as 'x,y' (default 0,0)")
    b.add_argument("--y", help="anchor y as 'x,y'")
    b.add_argument("--out", required=True)
    b.add_argument("--svg")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="enumerate or search placements of a "
                                      "witness set in a target norm")
    v.add_argument("--in", dest="infile", required=True)
    v.add_argument("--target-norm", default="p:2")
    v.add_argument("--mode", choices=("enumerate", "falsify"),
                   default="enumerate")
    v.add_argument("--grid", type=int, default=720,
                   help="direction grid for enumeration")
    v.add_argument("--restarts", type=int, default=1000)
    v.add_argument("--seed", type=int, default=_default_seed())
    v.add_argument("--tol", type=float, default=1e-6)
    v.add_argument("--allow-non-injective", action="store_true",
                   help="count non-injective placements as violations too")
    v.add_argument("--out", help="write the report JSON here")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("figure5", help="build the 11-point doubling gadget")
    f.add_argument("--source-norm", default="p:2")
    f.add_argument("--d", type=float, default=1.0, help="edge length")
    f.add_argument("--x")
    f.add_argument("--y")
    f.add_argument("--out", required=True)
    f.add_argument("--svg")
    f.set_defaults(func=cmd_figure5)

    s = sub.add_parser("stats", help="table of witness-set sizes per ratio")
    s.add_argument("--max-num", type=int, default=3)
    s.add_argument("--max-den", type=int, default=3)
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--source-norm", default="p:2")
    s.add_argument("--csv", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    e = sub.add_parser("equilateral4", help="search for n mutually "
                                            "unit-distant points")
    e.add_argument("--target-norm", default="p:2")
    e.add_argument("--d", type=float, default=1.0)
    e.add_argument("--n", type=int, default=4)
    e.add_argument("--restarts", type=int, default=10000)
    e.add_argument("--seed", type=int, default=_default_seed())
    e.set_defaults(func=cmd_equilateral4)

    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except (NormError, SchemaError, BuildError, InvariantError, PlanError,
            FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
