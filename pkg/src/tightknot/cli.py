"""Command-line driver: tighten, measure, roundout, contacts.

Exit codes: 0 success, 1 usage, 2 data error, 3 non-convergence (the best
state is still written when an output path was given).  Input files are
never modified; every output goes to an explicitly named path.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .descent import RunConfig, run
from .fileio import ParseError, apply_config, export_contacts, read_vect, write_vect
from .geometry import grad_length, polygon_length
from .rigidity import build_rigidity_matrix, resolve
from .roundout import rop_upper_bound
from .thickness import cthi, find_active_sets, prop_len, pthi

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print("%s: error: %s" % (self.prog, message), file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="tightknot",
                  description="Tighten polygonal knots and links and "
                              "certify ropelength upper bounds.")
    sub = top.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tighten", parents=[], help="run constrained descent",
                       description="Tighten a VECT polygon down the "
                                   "resolution schedule.")
    t.add_argument("input", help="input .vect file")
    t.add_argument("--tau", type=float, default=None, help="tube stiffness")
    t.add_argument("--maxerr", type=float, default=None,
                   help="thickness error band")
    t.add_argument("--res-schedule", default=None, metavar="L1,L2,...",
                   help="vertices per unit ropelength per stage")
    t.add_argument("--residual-target", type=float, default=None,
                   help="convergence residual ratio")
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--max-steps", type=int, default=None)
    t.add_argument("--config", default=None,
                   help="key = value file with RunConfig overrides")
    t.add_argument("--out", default=None, help="write the final state here")
    t.add_argument("--log", default=None, help="write the TSV run trace here")

    m = sub.add_parser("measure", help="print the invariants of a polygon")
    m.add_argument("input", help="input .vect file")

    r = sub.add_parser("roundout",
                       help="certified smooth ropelength upper bound")
    r.add_argument("input", help="input .vect file")

    c = sub.add_parser("contacts", help="export the self-contact map")
    c.add_argument("input", help="input .vect file")
    c.add_argument("--format", choices=("csv", "svg"), default="csv")
    c.add_argument("--out", default=None,
                   help="output path (default: stdout)")
    return top


def _read(path: str):
    with open(path, "rb") as f:
        return read_vect(f.read())


def _active(poly, tau=1.0):
    # contacts of the polygon's own inscribed tube, whatever its scale
    return find_active_sets(poly, tau=tau, target=cthi(poly, tau),
                            strut_tol=2e-4, kink_tol=2e-4)


def _cmd_tighten(args) -> int:
    poly = _read(args.input)
    cfg = RunConfig()
    if args.config is not None:
        with open(args.config, "r") as f:
            cfg = apply_config(cfg, f.read())
    flags = {"tau": args.tau, "max_err": args.maxerr,
             "residual_target": args.residual_target, "seed": args.seed,
             "max_steps": args.max_steps}
    if args.res_schedule is not None:
        flags["schedule"] = tuple(
            float(x) for x in args.res_schedule.replace(",", " ").split())
    cfg = dataclasses.replace(
        cfg, **{k: v for k, v in flags.items() if v is not None})

    state, rep = run(poly, cfg)
    if args.out is not None:
        with open(args.out, "wb") as f:
            f.write(write_vect(state.poly))
    if args.log is not None:
        with open(args.log, "w") as f:
            f.write("\n".join(rep.trace) + "\n")
    print("status %s" % rep.status)
    print("steps %d" % rep.steps)
    print("stage %d" % rep.stage)
    print("prop %.17g" % rep.prop_len)
    print("pthi %.17g" % rep.pthi)
    print("cthi %.17g" % rep.cthi)
    print("residual %.17g" % rep.residual_ratio)
    print("struts %d" % rep.num_struts)
    print("kinks %d" % rep.num_kinks)
    return 0 if rep.status == "converged" else 3


def _cmd_measure(args) -> int:
    poly = _read(args.input)
    acts = _active(poly)
    print("len %.17g" % polygon_length(poly))
    print("pthi %.17g" % pthi(poly))
    print("cthi %.17g" % cthi(poly, 1.0))
    print("prop %.17g" % prop_len(poly))
    print("struts %d" % len(acts.struts))
    print("kinks %d" % len(acts.kinks))
    return 0


def _cmd_roundout(args) -> int:
    poly = _read(args.input)
    _, info = rop_upper_bound(poly)
    for f in dataclasses.fields(info):
        val = getattr(info, f.name)
        if isinstance(val, float):
            print("%s %.17g" % (f.name, val))
        else:
            print("%s %s" % (f.name, val))
    return 0


def _cmd_contacts(args) -> int:
    poly = _read(args.input)
    acts = _active(poly)
    # contact forces balancing pure length descent at this state
    res = resolve(grad_length(poly), build_rigidity_matrix(poly, acts))
    blob = export_contacts(poly, acts, res.multipliers, format=args.format)
    if args.out is None:
        sys.stdout.write(blob.decode())
    else:
        with open(args.out, "wb") as f:
            f.write(blob)
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    handler = {"tighten": _cmd_tighten, "measure": _cmd_measure,
               "roundout": _cmd_roundout, "contacts": _cmd_contacts}
    try:
        return handler[args.command](args)
    except (OSError, ParseError, ValueError) as e:
        print("tightknot: %s" % e, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
