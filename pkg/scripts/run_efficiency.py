#!/usr/bin/env python3
"""Sweep the efficiency study over bandwidths and print the comparison table.

Each row: spread of the sample mean vs the two mean-shift location
statistics over many replications of 100 standard-normal points.
"""

import argparse

from blurshift.experiments import ExperimentConfig, run_efficiency


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--taus", default="0.5,1,2")
    parser.add_argument("--reps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--n-points", type=int, default=100)
    args = parser.parse_args()

    taus = [float(t) for t in args.taus.split(",")]
    print(f"# efficiency: {args.reps} replications of {args.n_points} points, "
          f"seed {args.seed}")
    print(f"{'tau':>6} {'std(sample mean)':>18} {'std(blurring)':>15} "
          f"{'std(nonblurring)':>18} {'excluded':>9}")
    for tau in taus:
        config = ExperimentConfig(
            kind="efficiency", tau=tau, n_points=args.n_points,
            replications=args.reps, seed=args.seed,
        )
        rep = run_efficiency(config)
        print(f"{tau:>6g} {rep.sample_mean.std:>18.4f} {rep.blurring.std:>15.4f} "
              f"{rep.nonblurring.std:>18.4f} {rep.excluded_replications:>9d}")


if __name__ == "__main__":
    main()
