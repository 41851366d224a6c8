"""Empirical probability that an envy-free allocation exists when m < n.

Compares the exhaustive-search rate with g^-(n-m) over small (g, group size, m),
skipping points whose g^m enumeration exceeds the budget.

    python scripts/nonexistence_table.py --trials 2000 --seed 3
"""

import argparse

from groupfair.bounds import nonexistence_bound
from groupfair.experiments import Check, ExperimentConfig, estimate

BUDGET = 10**5


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    print(f"{'g':>2} {'size':>4} {'n':>3} {'m':>3} {'rate':>8} {'ci_high':>8} {'bound':>10}")
    for g in (2, 3, 4):
        for size in (1, 2, 3):
            n = g * size
            for m in range(1, n):
                if g**m > BUDGET:
                    break
                cfg = ExperimentConfig((size,) * g, m, mechanism="none", checks=(Check("exists_ef"),),
                                       trials=args.trials, master_seed=args.seed)
                (row,) = estimate(cfg, workers=args.workers)
                bound = nonexistence_bound(g, n, m).value
                flag = "" if row.ci_low <= bound else "  above bound"
                print(f"{g:>2} {size:>4} {n:>3} {m:>3} {row.estimate:>8.4f} {row.ci_high:>8.4f} {bound:>10.3g}{flag}")


if __name__ == "__main__":
    main()
