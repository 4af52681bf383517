#!/usr/bin/env python3
"""Preference-setting success-rate grid.

Same synthetic instances as the reward grid, but the learner only sees
one-hot winner feedback per pull and ranks arms by winner frequencies.
With --force-distinct-gbw the prospective Borda winner gets a doubled gap on
every set avoiding the dominant arm, which reliably fools the round-robin
baseline while the elimination schedules keep finding the dominant arm.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csebandit import ExperimentGrid, run_grid, summarize
from csebandit.harness import write_summary


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="preference_grid.csv")
    parser.add_argument("--summary", default=None)
    parser.add_argument("--repetitions", type=int, default=100)
    parser.add_argument("--base-seed", type=int, default=2)
    parser.add_argument("--epsilon", type=float, default=0.1)
    parser.add_argument("--force-distinct-gbw", action="store_true")
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    grid = ExperimentGrid(
        env_kind="categorical-preference",
        env_params={
            "epsilon": args.epsilon,
            "force_distinct_gbw": args.force_distinct_gbw,
            "gap_structure": "sampled",
        },
        algorithms=("csws", "csr", "csh", "rr"),
        statistic="winner-frequency",
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
    for s in summary:
        print(
            f"  {s.algo:<5} n={s.n:<4} k={s.k:<3} B={s.B:<4} "
            f"success={s.success_rate:.3f}"
        )


if __name__ == "__main__":
    main()
