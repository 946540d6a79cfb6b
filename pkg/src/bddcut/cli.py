"""Command-line interface: ``bddcut <command> ...``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bdd as bddmod
from .compile import BuildConfig, build_with_stats
from .driver import (VARIANTS, CutVerificationError, LoopConfig, build_bdds, oracle,
                     root_loop, verify_cuts)
from .lifting import Inequality, sequential_lift, tighten_rhs
from .model import generate_linear, generate_soc_cc, generate_soc_k, read_instance, write_instance
from .separation import EMIT_TOL, cglp_cut, cut_to_inequality, mincut_cut

FAMILIES = ("soc-cc", "soc-k", "linear")


def _fmt(v: float) -> str:
    return repr(float(v))


def format_cut(tag: str, q: Inequality, violation: float | None = None) -> str:
    parts = [tag, *map(_fmt, q.pi), "<=", _fmt(q.pi0)]
    if violation is not None:
        parts.append(_fmt(violation))
    return " ".join(parts)


def parse_cuts(text: str, n: int) -> list[Inequality]:
    """Lines ``tag c_1 .. c_n <= rhs [violation]``; ``#`` starts a comment."""
    cuts = []
    for num, line in enumerate(text.splitlines(), 1):
        toks = line.split("#", 1)[0].split()
        if not toks:
            continue
        if len(toks) not in (n + 3, n + 4) or toks[n + 1] != "<=":
            raise ValueError(f"line {num}: expected 'tag c_1 .. c_{n} <= rhs [violation]'")
        try:
            vals = [float(t) for t in toks[1:n + 1]]
            rhs = float(toks[n + 2])
        except ValueError as exc:
            raise ValueError(f"line {num}: {exc}") from None
        cuts.append(Inequality(vals, rhs))
    return cuts


def _build_cfg(args) -> BuildConfig:
    return BuildConfig(max_width=args.width, split_threshold=args.delta,
                       max_refinement_rounds=args.build_rounds)


def _read_point(path: str, n: int) -> np.ndarray:
    x = np.array(Path(path).read_text().split(), dtype=float)
    if x.shape != (n,):
        raise SystemExit(f"error: point file has {x.size} values, expected {n}")
    return x


def _load_bdd(args, inst):
    if getattr(args, "bdd", None):
        return bddmod.loads(Path(args.bdd).read_text())
    bdd, _ = build_with_stats(inst.constraints[args.constraint], _build_cfg(args))
    return bdd


def cmd_gen(args) -> int:
    if args.family == "soc-cc":
        inst = generate_soc_cc(args.n, args.m, args.omega, args.t, args.seed)
    elif args.family == "soc-k":
        inst = generate_soc_k(args.n, args.m, args.omega, args.t, args.seed)
    else:
        inst = generate_linear(args.n, args.m, args.t, args.seed)
    _emit(args.output, write_instance(inst))
    return 0


def cmd_build(args) -> int:
    inst = read_instance(args.instance)
    con = inst.constraints[args.constraint]
    bdd, stats = build_with_stats(con, _build_cfg(args))
    text = bddmod.to_dot(bdd) if args.dot else bddmod.dumps(bdd)
    _emit(args.output, text)
    info = (f"nodes {bdd.num_nodes} arcs {bdd.num_arcs} width {bdd.width} "
            f"rounds {stats.rounds} splits {stats.splits} exact {int(stats.exact)}")
    if args.oracle:
        pts = bddmod.enumerate_paths(bdd) if not bdd.is_empty else frozenset()
        from .driver import all_points
        feas = {tuple(int(v) for v in p) for blk in all_points(inst.n)
                for p in blk[np.asarray(con.is_feasible(blk), dtype=bool)]}
        if not feas <= pts or (stats.exact and feas != pts):
            print(info, file=sys.stderr)
            print("verification failed: BDD path set does not match the feasible set",
                  file=sys.stderr)
            return 1
        info += " oracle ok"
    print(info, file=sys.stderr)
    return 0


def cmd_lift(args) -> int:
    inst = read_instance(args.instance)
    bdd = _load_bdd(args, inst)
    pi = [float(t) for t in args.pi.replace(",", " ").split()]
    ineq = Inequality(pi, args.pi0 if args.pi0 is not None else 0.0)
    if args.pi0 is None or args.tighten:
        ineq = tighten_rhs(bdd, ineq)
    lifted, rep = sequential_lift(bdd, ineq)
    lines = [format_cut("input", ineq)]
    for k, s in enumerate(rep.steps):
        lines.append(f"step {k} index {s.index} lambda {_fmt(s.lam)}")
    lines.append(f"reason {rep.reason}")
    if rep.skipped:
        lines.append("fixed " + " ".join(map(str, rep.skipped)))
    lines.append(format_cut("lifted", lifted))
    _emit(args.output, "\n".join(lines) + "\n")
    return 0


def cmd_separate(args) -> int:
    inst = read_instance(args.instance)
    x = _read_point(args.point, inst.n)
    cfg = _build_cfg(args)
    lines = []
    bdds = build_bdds(inst, cfg)
    for j, bdd in enumerate(bdds):
        if bdd.is_empty:
            continue
        found = []
        if args.family in ("flow", "both"):
            found.append(mincut_cut(bdd, x, args.tol))
        if args.family in ("cglp", "both"):
            found.append(cglp_cut(bdd, x, args.tol))
        for cut in found:
            if cut is None:
                continue
            q = tighten_rhs(bdd, cut_to_inequality(cut))
            if args.lift:
                q, _ = sequential_lift(bdd, q)
            lines.append(format_cut(f"{cut.family}:{j}", q, float(q.violation(x))))
    _emit(args.output, "".join(ln + "\n" for ln in lines))
    return 0


def cmd_root(args) -> int:
    inst = read_instance(args.instance)
    cfg = LoopConfig(variant=args.variant, max_rounds=args.rounds, tol=args.tol,
                     build=_build_cfg(args), seed=args.seed)
    bdds = build_bdds(inst, cfg.build)
    opt = None
    pts = None
    if args.oracle:
        pts, opt = oracle(inst)
    rep = root_loop(inst, cfg, bdds=bdds, optimum=opt)
    out = rep.rounds_csv() if args.csv else rep.to_text()
    _emit(args.output, out)
    if args.cuts_out:
        Path(args.cuts_out).write_text("".join(
            format_cut(f"{c.family}:{c.bdd}", c.inequality, c.violation) + "\n" for c in rep.cuts))
    status = 0 if rep.valid else 2
    if args.oracle:
        try:
            vr = verify_cuts(rep.inequalities(), points=pts)
        except CutVerificationError as exc:
            print(f"verification failed: {exc}", file=sys.stderr)
            return 1
        print(f"verified {vr.num_cuts} cuts on {vr.num_points} points, "
              f"max violation {vr.max_violation:.3e}", file=sys.stderr)
        if opt is not None and rep.final_bound < opt - 1e-6 * max(1.0, abs(opt)):
            print("verification failed: bound below the enumerated optimum", file=sys.stderr)
            return 1
    return status


def cmd_verify(args) -> int:
    inst = read_instance(args.instance)
    cuts = parse_cuts(Path(args.cuts).read_text(), inst.n)
    try:
        vr = verify_cuts(cuts, inst)
    except CutVerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {vr.num_cuts} cuts valid on {vr.num_points} feasible points "
          f"(max violation {vr.max_violation:.3e})")
    return 0


def _emit(path: str | None, text: str) -> None:
    if path and path != "-":
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _add_build_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--width", type=int, default=None, help="maximum layer width (default: unbounded)")
    p.add_argument("--delta", type=float, default=1e-6, help="split threshold")
    p.add_argument("--build-rounds", type=int, default=1000, help="refinement round limit")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bddcut", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded random instance")
    p.add_argument("--family", choices=FAMILIES, default="soc-cc")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.2, help="tightness")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("build", help="compile one constraint to a BDD dump")
    p.add_argument("instance")
    p.add_argument("--constraint", type=int, default=0)
    p.add_argument("--dot", action="store_true", help="emit Graphviz instead of the dump")
    p.add_argument("--oracle", action="store_true", help="check against enumeration")
    p.add_argument("-o", "--output")
    _add_build_opts(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("lift", help="sequentially lift an inequality over a BDD")
    p.add_argument("instance")
    p.add_argument("--constraint", type=int, default=0)
    p.add_argument("--bdd", help="use a BDD dump instead of compiling")
    p.add_argument("--pi", required=True, help="coefficients, space or comma separated")
    p.add_argument("--pi0", type=float, default=None, help="rhs (tightened when omitted)")
    p.add_argument("--tighten", action="store_true", help="tighten the rhs before lifting")
    p.add_argument("-o", "--output")
    _add_build_opts(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("separate", help="separate a point with every constraint's BDD")
    p.add_argument("instance")
    p.add_argument("--point", required=True, help="file with n whitespace-separated values")
    p.add_argument("--family", choices=("flow", "cglp", "both"), default="both")
    p.add_argument("--lift", action="store_true")
    p.add_argument("--tol", type=float, default=EMIT_TOL)
    p.add_argument("-o", "--output")
    _add_build_opts(p)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("root", help="run the root cutting-plane loop")
    p.add_argument("instance")
    p.add_argument("--variant", choices=VARIANTS, default="flow")
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--tol", type=float, default=EMIT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle", action="store_true", help="enumerate, report the gap, verify cuts")
    p.add_argument("--csv", action="store_true", help="per-round CSV instead of the summary")
    p.add_argument("--cuts-out", help="write the cuts to this file")
    p.add_argument("-o", "--output")
    _add_build_opts(p)
    p.set_defaults(func=cmd_root)

    p = sub.add_parser("verify", help="check a cut file against the enumerated feasible set")
    p.add_argument("instance")
    p.add_argument("--cuts", required=True)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
