"""EF rate of the greedy rules as the number of items grows, for several n.

Prints a CSV with one row per (mechanism, sizes, m). For each n the m at which
the rate first reaches 0.9 is summarized on stderr, next to n ln n for scale.

    python scripts/phase_transition.py --trials 1000 --seed 1 > phase.csv
"""

import argparse
import csv
import math
import sys

from groupfair.experiments import ExperimentConfig, sweep

SETTINGS = [
    ("greedy_total", (2, 2)),
    ("greedy_total", (3, 3)),
    ("greedy_total", (5, 5)),
    ("greedy_total", (3, 3, 3)),
    ("greedy_average", (2, 4)),
    ("greedy_average", (4, 8)),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--max-m", type=int, default=1280)
    args = ap.parse_args()

    ms = []
    m = 5
    while m <= args.max_m:
        ms.append(m)
        m *= 2
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["mechanism", "sizes", "n", "m", "estimate", "ci_low", "ci_high"])
    for mechanism, sizes in SETTINGS:
        cfg = ExperimentConfig(sizes, ms[0], mechanism=mechanism, trials=args.trials, master_seed=args.seed)
        rows = sweep(cfg, "m", ms, workers=args.workers).rows
        for r in rows:
            out.writerow([mechanism, "-".join(map(str, sizes)), r.n, r.m,
                          f"{r.estimate:.4f}", f"{r.ci_low:.4f}", f"{r.ci_high:.4f}"])
        hit = next((r.m for r in rows if r.estimate >= 0.9), None)
        n = sum(sizes)
        print(f"{mechanism} {sizes}: rate >= 0.9 from m={hit}  (n ln n = {n * math.log(n):.1f})",
              file=sys.stderr)


if __name__ == "__main__":
    main()
