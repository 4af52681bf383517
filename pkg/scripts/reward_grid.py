#!/usr/bin/env python3
"""Reward-setting success-rate grid.

Runs the synthetic subset-dependent Gaussian reward experiment: forced
dominant arm (gap 0.1), empirical-mean statistic, all three elimination
schedules plus the Borda round-robin baseline, over the full published grid
of arm counts, subset sizes and budgets.

Full grid:  n in {50, 100}, k in {2, 4, 6, 8, 10}, B in {50, 100, 200, 300, 500}
Quick mode: n = 50, k in {2, 4}, B in {100, 500}, 20 repetitions
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csebandit import ExperimentGrid, run_grid, summarize
from csebandit.harness import write_rows, write_summary


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="reward_grid.csv", help="results CSV path")
    parser.add_argument("--summary", default=None, help="optional summary CSV path")
    parser.add_argument("--repetitions", type=int, default=100)
    parser.add_argument("--base-seed", type=int, default=1)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--force-distinct-gbw", action="store_true",
                        help="drag the Borda winner away from the Condorcet winner")
    parser.add_argument("--quick", action="store_true", help="small sanity-check grid")
    args = parser.parse_args()

    grid = ExperimentGrid(
        env_kind="gaussian-subset",
        env_params={"epsilon": args.epsilon, "force_distinct_gbw": args.force_distinct_gbw},
        algorithms=("csws", "csr", "csh", "rr"),
        statistic="empirical-mean",
        n_values=(50,) if args.quick else (50, 100),
        k_values=(2, 4) if args.quick else (2, 4, 6, 8, 10),
        budgets=(100, 500) if args.quick else (50, 100, 200, 300, 500),
        repetitions=20 if args.quick else args.repetitions,
        base_seed=args.base_seed,
        output=args.output,
    )
    print(f"running {len(grid.cells())} cells x {grid.repetitions} repetitions ...")
    rows = run_grid(grid)
    print(f"{len(rows)} rows -> {args.output}")
    summary = summarize(rows)
    if args.summary:
        write_summary(args.summary, summary)
        print(f"{len(summary)} groups -> {args.summary}")
    for s in summary:
        print(
            f"  {s.algo:<5} n={s.n:<4} k={s.k:<3} B={s.B:<4} "
            f"success={s.success_rate:.3f} [{s.wilson_low:.3f}, {s.wilson_high:.3f}]"
        )


if __name__ == "__main__":
    main()
