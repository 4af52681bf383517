#!/usr/bin/env python3
"""Reward grid with statistics beyond the arithmetic mean.

Re-runs the Gaussian reward setting ranking arms by the per-arm median
(outlier-robust) and by the power mean with exponent 2 (a compromise between
mean and maximum), one results CSV per statistic.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csebandit import ExperimentGrid, run_grid, summarize


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output-prefix", default="robust_grid")
    parser.add_argument("--repetitions", type=int, default=100)
    parser.add_argument("--base-seed", type=int, default=3)
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    for statistic in ("median", "power-mean"):
        output = f"{args.output_prefix}_{statistic.replace('-', '_')}.csv"
        grid = ExperimentGrid(
            env_kind="gaussian-subset",
            env_params={"epsilon": 0.1},
            algorithms=("csws", "csr", "csh"),
            statistic=statistic,
            n_values=(50,) if args.quick else (50, 100),
            k_values=(2, 4) if args.quick else (2, 4, 6, 8, 10),
            budgets=(100, 500) if args.quick else (50, 100, 200, 300, 500),
            repetitions=20 if args.quick else args.repetitions,
            base_seed=args.base_seed,
            output=output,
        )
        rows = run_grid(grid)
        print(f"[{statistic}] {len(rows)} rows -> {output}")
        for s in summarize(rows):
            print(
                f"  {s.algo:<5} n={s.n:<4} k={s.k:<3} B={s.B:<4} "
                f"success={s.success_rate:.3f}"
            )


if __name__ == "__main__":
    main()
