"""Throughput of batched noisy aggregation and of the ballot-list scorer."""
import argparse
import time

import numpy as np

from dprank.ranking import PositionalRule, aggregate_ballots, all_permutations, candidate_scores, rank_scores
from dprank.sampling import sample_simplex_uniform
from dprank.privacy import stream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--candidates", type=int, nargs="+", default=[3, 4, 5, 6])
    ap.add_argument("--batch", type=int, default=100_000)
    ap.add_argument("--ballots", type=int, default=200_000)
    args = ap.parse_args()

    for M in args.candidates:
        rule = PositionalRule.borda(M)
        n = all_permutations(M).shape[0]
        g = stream(0, M)
        batch = max(1, args.batch * 6 // n)
        V = sample_simplex_uniform(n, g, size=batch)
        t0 = time.perf_counter()
        rank_scores(candidate_scores(rule, V))
        dt = time.perf_counter() - t0
        print(f"M={M}: {batch / dt:,.0f} distributions/s (batch {batch})")

    perms = all_permutations(3)
    ballots = perms[np.random.default_rng(0).integers(0, 6, size=args.ballots)]
    t0 = time.perf_counter()
    aggregate_ballots(PositionalRule.borda(3), ballots)
    dt = time.perf_counter() - t0
    print(f"ballot scorer: {args.ballots / dt:,.0f} ballots/s")


if __name__ == "__main__":
    main()
