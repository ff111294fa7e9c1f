"""Command-line front end.

Exit codes: 0 on success, 1 when learning fails or runs out of time, 2 on
bad input (unknown flags, malformed files, invalid parameters).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .depth import deepest_point
from .driver import LearnConfig, learn
from .geometry import SignedWeightedRanges, empirical_error
from .mwu import TimeLimitExceeded
from .oracles import exhaustive_opt, gen_consistent, gen_cover_gadget

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_INPUT = 2


class BadInput(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seldist", description="Learn a discrete distribution from box selectivities.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic workload")
    g.add_argument("--n", type=_positive_int, default=50)
    g.add_argument("--d", type=_positive_int, default=2)
    g.add_argument("--support", type=_positive_int, default=3, help="atoms of the hidden distribution")
    g.add_argument("--seed", type=_nonneg_int, default=0)
    g.add_argument("--gadget", type=int, metavar="M", help="write the cover gadget with M slabs instead")
    g.add_argument("--truth", help="also write the hidden distribution here")
    g.add_argument("--out", required=True)

    lp = sub.add_parser("learn", help="fit a distribution to a workload")
    lp.add_argument("--workload", required=True)
    lp.add_argument("--delta", type=float, default=0.1)
    lp.add_argument("--error", choices=("l1", "l2", "linf"), default="l1")
    lp.add_argument("--seed", type=_nonneg_int, default=0)
    lp.add_argument("--exact-depth", action="store_true", help="solve deepest-point queries exactly")
    lp.add_argument("--no-reduce", action="store_true", help="skip the support reduction")
    lp.add_argument("--reduce-reps", type=_positive_int)
    lp.add_argument("--c3", type=float, default=64.0)
    lp.add_argument("--mu-scale", type=float, default=8.0)
    lp.add_argument("--retries", type=_nonneg_int, default=0)
    lp.add_argument("--sink", action="store_true", help="complete the result to total weight one")
    lp.add_argument("--depth-method", choices=("auto", "sweep", "grid"), default="auto")
    lp.add_argument("--time-limit", type=float, help="seconds before giving up")
    lp.add_argument("--timing", action="store_true", help="record wall time in the report")
    lp.add_argument("--out", required=True)
    lp.add_argument("--report")

    ev = sub.add_parser("eval", help="print the error of a distribution on a workload")
    ev.add_argument("--workload", required=True)
    ev.add_argument("--dist", required=True)
    ev.add_argument("--error", choices=("l1", "l2", "linf"), default="l1")

    od = sub.add_parser("oracle-depth", help="print the deepest point for per-box weights")
    od.add_argument("--workload", required=True)
    od.add_argument("--weights", required=True)
    od.add_argument("--method", choices=("auto", "sweep", "grid"), default="grid")

    oo = sub.add_parser("oracle-opt", help="brute-force best error on a tiny workload")
    oo.add_argument("--workload", required=True)
    oo.add_argument("--error", choices=("l1", "l2", "linf"), default="l1")
    oo.add_argument("--grid-weights", type=_positive_int, default=200)
    return p


def _cmd_gen(args):
    if args.gadget is not None:
        try:
            Z = gen_cover_gadget(args.d, args.gadget)
        except ValueError as exc:
            raise BadInput(str(exc)) from None
        truth = None
    else:
        Z, gt = gen_consistent(args.n, args.d, args.support, args.seed)
        truth = gt.distribution
    io.save_workload(Z, args.out)
    if args.truth:
        if truth is None:
            raise BadInput("--truth has no meaning for the cover gadget")
        io.save_distribution(truth, args.truth)
    return EXIT_OK


def _cmd_learn(args):
    try:
        cfg = LearnConfig(delta=args.delta, mode=args.error, seed=args.seed, exact_depth=args.exact_depth,
                          c3=args.c3, mu_scale=args.mu_scale, reduce=not args.no_reduce,
                          reduce_reps=args.reduce_reps, retries=args.retries, sink=args.sink,
                          depth_method=args.depth_method, time_limit=args.time_limit)
    except ValueError as exc:
        raise BadInput(str(exc)) from None
    Z = io.load_workload(args.workload)
    try:
        report = learn(Z, cfg)
    except TimeLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED
    io.save_distribution(report.distribution, args.out)
    # the reported error is recomputed from the file just written
    check = empirical_error(io.load_distribution(args.out), Z, cfg.mode)
    if check != report.achieved_error:
        print(f"error: written distribution has error {check!r}, expected {report.achieved_error!r}",
              file=sys.stderr)
        return EXIT_FAILED
    if args.report:
        Path(args.report).write_text(io.dumps_report(report, cfg, args.timing), encoding="utf-8")
    print(repr(report.achieved_error))
    return EXIT_OK


def _cmd_eval(args):
    Z = io.load_workload(args.workload)
    D = io.load_distribution(args.dist)
    if D.d != Z.d:
        raise BadInput(f"distribution has dimension {D.d}, workload has {Z.d}")
    print(repr(empirical_error(D, Z, args.error)))
    return EXIT_OK


def _cmd_oracle_depth(args):
    Z = io.load_workload(args.workload)
    omega = io.load_weights(args.weights, Z.n)
    if args.method == "sweep" and Z.d != 2:
        raise BadInput("the sweep needs a two-dimensional workload")
    res = deepest_point(SignedWeightedRanges(Z.lo, Z.hi, omega), args.method)
    print(json.dumps({"point": [float(v) for v in res.point], "value": float(res.value)}))
    return EXIT_OK


def _cmd_oracle_opt(args):
    Z = io.load_workload(args.workload)
    try:
        value = exhaustive_opt(Z, args.error, args.grid_weights)
    except ValueError as exc:
        raise BadInput(str(exc)) from None
    print(repr(value))
    return EXIT_OK


COMMANDS = {
    "gen": _cmd_gen,
    "learn": _cmd_learn,
    "eval": _cmd_eval,
    "oracle-depth": _cmd_oracle_depth,
    "oracle-opt": _cmd_oracle_opt,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (BadInput, io.WorkloadFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (RuntimeError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
