"""Shared driver for the sweep scripts."""
import argparse
import time
from dataclasses import replace

from dprank.formats import config_to_dict, load_config, sweep_csv, write_with_manifest
from dprank.simulator import sweep


def run(name: str, description: str):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--trials", type=int, help="override the configured trial count")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", help="CSV path (a manifest is written next to it)")
    ap.add_argument("--plot", help="PNG path; needs matplotlib")
    args = ap.parse_args()

    cfg = load_config(name)
    if args.trials:
        cfg = replace(cfg, trials=args.trials)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)

    t0 = time.perf_counter()
    rows = sweep(cfg, workers=args.workers)
    elapsed = time.perf_counter() - t0

    print(f"{cfg.axis:>8} {'rate':>8} {'ci95':>17} {'ruleSpec':>9} {'jensen':>9} {'general':>9}")
    for r in rows:
        lo, hi = r.estimate.ci95
        print(f"{r.value:>8g} {r.estimate.point:8.4f} [{lo:.4f}, {hi:.4f}] "
              f"{r.rule_specific:9.4f} {r.jensen:9.4f} {r.general:9.4f}")
    print(f"{cfg.trials} trials per point, {elapsed:.1f}s")

    if args.out:
        write_with_manifest(args.out, sweep_csv(rows), f"scripts/{name}", config_to_dict(cfg))
    if args.plot:
        plot(rows, cfg.axis, args.plot)


def plot(rows, axis, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = [r.value for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    lo = [r.estimate.point - r.estimate.ci95[0] for r in rows]
    hi = [r.estimate.ci95[1] - r.estimate.point for r in rows]
    ax.errorbar(x, [r.estimate.point for r in rows], yerr=[lo, hi], fmt="o", label="simulated")
    ax.plot(x, [r.rule_specific for r in rows], label="rule-specific bound")
    ax.plot(x, [r.jensen for r in rows], label="Jensen bound")
    ax.plot(x, [r.general for r in rows], label="general bound")
    if axis == "N":
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("epsilon" if axis == "epsilon" else "voters")
    ax.set_ylabel("ranking error rate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
