"""Random assignment: alpha-EF rate against alpha and m, with the closed-form failure bound.

    python scripts/alpha_tradeoff.py --trials 500 --seed 5
"""

import argparse

from groupfair.bounds import approx_ef_failure_bound, approx_ef_threshold
from groupfair.experiments import Check, ExperimentConfig, sweep

ALPHAS = [0.3, 0.5, 0.7, 0.8, 0.9, 0.95]
MU_MIN = 0.5  # mean of Uniform(0, 1)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 4])
    ap.add_argument("--m", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--trials", type=int, default=500)
    ap.add_argument("--seed", type=int, default=5)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    g, n = len(args.sizes), sum(args.sizes)
    print(f"{'m':>6} {'alpha':>5} {'success':>8} {'fail_bound':>10} {'m_needed':>9}")
    for m in args.m:
        cfg = ExperimentConfig(tuple(args.sizes), m, mechanism="random_assignment",
                               checks=(Check("alpha_ef", ALPHAS[0]),), trials=args.trials,
                               master_seed=args.seed)
        for row in sweep(cfg, "alpha", ALPHAS, workers=args.workers).rows:
            bound = approx_ef_failure_bound(row.alpha, MU_MIN, m, g, n).value
            need = approx_ef_threshold(row.alpha, MU_MIN, g, n)
            print(f"{m:>6} {row.alpha:>5} {row.estimate:>8.3f} {bound:>10.3g} {need:>9.0f}")


if __name__ == "__main__":
    main()
