#!/usr/bin/env python3
"""How the number of active partial-sum bounds grows with problem size.

Runs the geometric solver on unbounded scale-invariant instances and counts
interior hull vertices (one per active bound). The mean should grow like
log m; the CSV has columns m, trials, mean_active, std_active.

    python3 scripts/active_growth.py --family crashing --trials 50 \
        --m-list 100 1000 10000 100000 --out growth.csv
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

import numpy as np

from nested_alloc import active_growth_experiment
from nested_alloc.hull import growth_rows_to_csv


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--family", choices=["crashing", "fuelopt"], default="crashing")
    parser.add_argument("--m-list", type=int, nargs="+",
                        default=[100, 1000, 10_000, 100_000])
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--out", default="growth.csv")
    args = parser.parse_args()

    rows = active_growth_experiment(args.family, args.m_list, args.trials, args.seed)
    Path(args.out).write_text(growth_rows_to_csv(rows))

    means = np.array([r[2] for r in rows])
    logs = np.log(np.asarray(args.m_list, dtype=float))
    slope, intercept = np.polyfit(logs, means, 1)
    for (m, trials, mean, std) in rows:
        print(f"m={m:>8}  mean={mean:7.2f}  std={std:6.2f}")
    print(f"fit: mean ~ {slope:.2f} * ln(m) + {intercept:.2f}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
