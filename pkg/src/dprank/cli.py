"""Command-line interface: ``dprank {aggregate,bound,simulate,sweep,density}``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, formats
from .errors import DPRankError, InvariantViolation
from .geometry import EXACT_MAX_DIM, distance_density
from .privacy import PrivacyParams, add_noise
from .ranking import (
    Histogram,
    PositionalRule,
    aggregate,
    cyclic_to_lex,
    score_matrix,
)
from .simulator import ExperimentConfig, sweep

# Rows a, b, c over rankings abc, acb, cab, cba, bca, bac.
REFERENCE_BORDA_M3 = np.array([
    [1, 1, 0.5, 0, 0, 0.5],
    [0.5, 0, 0, 0.5, 1, 1],
    [0, 0.5, 1, 1, 0.5, 0],
])


def _privacy_args(p, voters=True):
    p.add_argument("--epsilon", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--delta", type=float)
    g.add_argument("--delta-scale", type=float, help="delta = scale / voters")
    if voters:
        p.add_argument("--voters", type=int)


def _params(args, N=None) -> PrivacyParams:
    N = N if N is not None else args.voters
    if args.epsilon is None or N is None or (args.delta is None and args.delta_scale is None):
        raise formats.ConfigError("privacy parameters incomplete; need",
                                  ["--epsilon", "--delta|--delta-scale", "--voters"])
    if args.delta_scale is not None:
        return PrivacyParams.with_delta_scale(args.epsilon, args.delta_scale, N)
    return PrivacyParams(args.epsilon, args.delta, N)


def _emit(args, content: str, command: str, config: dict):
    if args.out:
        formats.write_with_manifest(args.out, content, command, config)
    else:
        sys.stdout.write(content)


def check_cyclic_order() -> bool:
    S = score_matrix(PositionalRule.borda(3))
    return bool(np.array_equal(S[:, cyclic_to_lex()], REFERENCE_BORDA_M3))


def cmd_aggregate(args) -> int:
    if args.check_cyclic_order:
        if not check_cyclic_order():
            raise InvariantViolation("Borda score matrix differs from the reference matrix")
        print("cyclic-order check: ok")
        if args.ballots is None and args.histogram is None:
            return 0
    if args.histogram:
        h = formats.parse_histogram_csv(Path(args.histogram).read_text(), args.candidates)
    elif args.ballots:
        h = Histogram.from_ballots(formats.read_ballots(args.ballots))
    else:
        raise formats.ConfigError("nothing to aggregate; pass a ballot file or", ["--histogram"])
    rule = PositionalRule.parse(args.rule, h.M)
    truth = aggregate(rule, h)
    print(f"ranking: {truth}")
    print("scores: " + ",".join(formats.fmt(s) for s in truth.scores))
    print(f"tied: {'yes' if truth.tied else 'no'}")
    if args.epsilon is not None:
        params = _params(args, N=int(round(h.total)))
        noisy = aggregate(rule, add_noise(h, params, args.seed).value)
        print(f"noisy_ranking: {noisy}")
        print("noisy_scores: " + ",".join(formats.fmt(s) for s in noisy.scores))
        print(f"differs: {'yes' if noisy.order != truth.order else 'no'}")
    return 0


def cmd_bound(args) -> int:
    params = _params(args)
    M = args.candidates
    rule = PositionalRule.parse(args.rule, M) if args.rule else PositionalRule.borda(M)
    q = bounds.BoundQuery(M, params, tau=args.tau, rule=rule)
    if args.method == "all":
        methods = ["theorem1", "lemma3", "simplified"]
        if math.factorial(M) <= EXACT_MAX_DIM:
            methods.append("ruleSpecific")
    else:
        methods = [args.method]
    results = {m: bounds.compute(m, q) for m in methods}
    rows = [[m, M, params.N, params.epsilon, params.delta, r.tau, r.value]
            for m, r in results.items()]
    content = formats.to_csv(["method", "M", "N", "epsilon", "delta", "tau", "value"], rows)
    config = {"candidates": M, "rule": rule.spec(), "epsilon": params.epsilon,
              "delta": params.delta, "voters": params.N, "method": args.method, "tau": args.tau}
    _emit(args, content, "bound", config)
    if args.method == "all" and args.tau is None:
        bad = bounds.check_dominance(results, q)
        if bad:
            raise InvariantViolation("; ".join(bad))
    return 0


def _run_sweep(args, config: ExperimentConfig, command: str) -> int:
    rows = sweep(config, workers=args.workers)
    _emit(args, formats.sweep_csv(rows), command, formats.config_to_dict(config))
    return 0


def cmd_simulate(args) -> int:
    M = args.candidates
    raw = {"candidates": M, "rule": args.rule, "epsilon": args.epsilon, "voters": args.voters,
           "trials": args.trials, "seed": args.seed}
    if args.delta is not None:
        raw["delta"] = args.delta
    if args.delta_scale is not None:
        raw["delta_scale"] = args.delta_scale
    raw = {k: v for k, v in raw.items() if v is not None}
    return _run_sweep(args, formats.build_config(raw), "simulate")


def cmd_sweep(args) -> int:
    return _run_sweep(args, formats.load_config(args.config), "sweep")


def cmd_density(args) -> int:
    rule = PositionalRule.parse(args.rule, args.candidates)
    i, j = (int(x) for x in args.pair.split(","))
    dens = distance_density(rule, (i, j), points=args.points, seed=args.seed)
    content = formats.to_csv(["l", "p_d"], dens.rows())
    config = {"candidates": args.candidates, "rule": rule.spec(), "pair": args.pair,
              "points": args.points, "seed": args.seed, "exact": dens.exact}
    _emit(args, content, "density", config)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dprank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="aggregate a ballot file, optionally with noise")
    p.add_argument("ballots", nargs="?", help="one ballot per line, e.g. 0,2,1")
    p.add_argument("--histogram", help="CSV with header perm_index,count instead of ballots")
    p.add_argument("--candidates", type=int, default=3, help="M for --histogram input")
    p.add_argument("--rule", default="borda")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check-cyclic-order", "--check-paper-order", dest="check_cyclic_order",
                   action="store_true",
                   help="verify the 3-candidate Borda score matrix against the reference")
    _privacy_args(p, voters=False)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("bound", help="analytic error-rate bounds")
    p.add_argument("--candidates", type=int, default=3)
    p.add_argument("--rule", default=None)
    p.add_argument("--method", default="all", choices=["all", *bounds.METHODS])
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--out")
    _privacy_args(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="Monte Carlo error rate at one parameter point")
    p.add_argument("--candidates", type=int, default=3)
    p.add_argument("--rule", default="borda")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    _privacy_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run an experiment config (.cfg, manifest .json, or bundled name)")
    p.add_argument("config", help="path, or one of: figure2, figure3")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("density", help="export the distance density on a grid")
    p.add_argument("--candidates", type=int, default=3)
    p.add_argument("--rule", default="borda")
    p.add_argument("--pair", default="0,1")
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DPRankError as exc:
        print(f"dprank: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"dprank: error: {exc}", file=sys.stderr)
        return formats.ConfigError.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
