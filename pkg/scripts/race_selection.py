#!/usr/bin/env python3
"""Algorithm-selection replication with censored race feedback.

Twenty simulated solvers with log-normal runtimes; pulling a subset races
its members in parallel and reveals only the fastest finisher, charging that
minimum runtime to the simulated wall clock.  The single-arm halving baseline
runs solvers one at a time (with a k-times-enlarged budget for fairness) and
pays full runtimes, which is where its wall-clock handicap comes from.

Emits success rates and mean simulated wall clocks per (k, B) cell.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from csebandit import ExperimentGrid, run_grid, summarize
from csebandit.harness import write_summary


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--output", default="race_selection.csv")
    parser.add_argument("--summary", default=None)
    parser.add_argument("--arms", type=int, default=20)
    parser.add_argument("--repetitions", type=int, default=100)
    parser.add_argument("--base-seed", type=int, default=4)
    parser.add_argument("--quick", action="store_true")
    args = parser.parse_args()

    grid = ExperimentGrid(
        env_kind="censored-race",
        env_params={},
        algorithms=("csws", "csr", "csh", "rr", "sh"),
        statistic="winner-frequency",
        n_values=(args.arms,),
        k_values=(4, 8) if args.quick else (2, 4, 8, 16),
        budgets=(300,) if args.quick else (100, 200, 300, 500),
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
            f"  {s.algo:<5} k={s.k:<3} B={s.B:<4} success={s.success_rate:.3f} "
            f"wallclock={s.mean_wallclock:10.1f}s"
        )


if __name__ == "__main__":
    main()
