#!/usr/bin/env python3
"""Print per-iteration mean and spread for both mean-shift modes on one
sample, showing the cubic-vs-geometric collapse difference."""

import argparse
import math

from blurshift.experiments import ExperimentConfig, run_convergence_rate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--tau", type=float, default=2.0)
    parser.add_argument("--n-points", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config = ExperimentConfig(
        kind="convergence_rate", tau=args.tau, n_points=args.n_points,
        replications=1, seed=args.seed,
    )
    report = run_convergence_rate(config)
    for series in (report.blurring, report.nonblurring):
        print(f"# {series.mode}: tau={args.tau}, {args.n_points} points, "
              f"seed {args.seed}")
        print(f"{'iter':>5} {'mean':>12} {'std':>13} {'log10(std)':>11}")
        for t in range(series.means.size):
            std = series.stds[t]
            log = math.log10(std) if std > 0 else float("-inf")
            print(f"{t:>5d} {series.means[t]:>12.6f} {std:>13.6e} {log:>11.3f}")
        print()


if __name__ == "__main__":
    main()
