#!/usr/bin/env python3
"""Benchmark sweeps: solve time and active-constraint counts.

Two standard protocols:
  * scale sweep: m = n over a geometric grid of sizes, many seeds per size;
  * sparsity sweep: n fixed, m swept from 1 to n.

Writes the usual benchmark CSV (one row per run plus an aggregate row per
cell). Examples:

    python3 scripts/run_benchmarks.py --protocol scale --family crashing \
        --max-n 100000 --out scale.csv
    python3 scripts/run_benchmarks.py --protocol sparsity --family crashing \
        --n 100000 --out sweep.csv
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from nested_alloc.cli import main as cli_main


def geometric_grid(max_n: int) -> list[int]:
    grid = []
    n = 10
    while n <= max_n:
        for k in (1, 2, 5):
            if k * n <= max_n:
                grid.append(k * n)
        n *= 10
    return grid


def build_config(args) -> dict:
    if args.protocol == "scale":
        n_list = geometric_grid(args.max_n)
        m_list = None
    else:
        n_list = [args.n]
        m_list = [m for m in (1, 2, 5, 10, 50, 100, 1000, 10_000, 100_000, args.n) if m <= args.n]
        m_list = sorted(set(m_list))
    return {
        "families": [args.family],
        "n_list": n_list,
        "m_list": m_list,
        "trials": args.trials,
        "seed": args.seed,
        "epsilon": args.epsilon,
        "mode": "cont",
        "solver": args.solver,
        "time_limit_s": args.time_limit_s,
        "output": args.out,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--protocol", choices=["scale", "sparsity"], default="scale")
    parser.add_argument("--family", default="crashing")
    parser.add_argument("--max-n", type=int, default=10_000, help="scale protocol only")
    parser.add_argument("--n", type=int, default=100_000, help="sparsity protocol only")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epsilon", type=float, default=1e-8)
    parser.add_argument("--solver", choices=["decomp", "greedy", "hull"], default="decomp")
    parser.add_argument("--time-limit-s", type=float, default=600.0)
    parser.add_argument("--out", default="bench.csv")
    args = parser.parse_args()

    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(build_config(args), fh)
        config_path = fh.name
    return cli_main(["bench", config_path])


if __name__ == "__main__":
    sys.exit(main())
