"""Command-line entry point.

Subcommands:
  budget     print the schedule, allocations, sufficient budgets and bounds
  gen        write an environment spec (or a grid config) as JSON
  run        execute a grid config and emit the results CSV
  verify     run the deterministic budget-boundary suites
  summarize  aggregate a results CSV into per-cell success rates
"""

from __future__ import annotations

import json
import sys

import click

from . import harness
from .budget import budget_report
from .env import EnvironmentSpec, make_environment_spec, profile_from_json

GAP_FIELDS = ("sufficient_budget", "lower_bound_gcw", "lower_bound_gbw_gcopew")


@click.group()
def main():
    """Budgeted best-arm identification for combinatorial semi-bandit feedback."""


@main.command("budget")
@click.option("--variant", type=click.Choice(["csws", "csr", "csh", "rr"]), required=True)
@click.option("--n", "n", type=int, required=True, help="Number of arms.")
@click.option("--k", "k", type=int, required=True, help="Maximum subset size.")
@click.option("--budget", "-B", "total_budget", type=int, default=None, help="Total budget B.")
@click.option("--profile", "profile_path", type=click.Path(exists=True), default=None,
              help="Limit-profile JSON enabling gap-dependent quantities.")
@click.option("--gaps/--no-gaps", default=False,
              help="Require the gap-dependent fields (errors without a profile).")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--output", "-o", type=click.Path(), default=None)
def cmd_budget(variant, n, k, total_budget, profile_path, gaps, fmt, output):
    """Schedule constants, per-round allocations and budget bounds."""
    profile = None
    if profile_path is not None:
        with open(profile_path) as handle:
            profile = profile_from_json(json.load(handle))
    if gaps and profile is None:
        raise click.UsageError(
            "gap-dependent fields need a --profile: " + ", ".join(GAP_FIELDS)
        )
    report = budget_report(variant, n, k, budget=total_budget, profile=profile)
    if fmt == "json":
        text = json.dumps(report.to_json(), indent=2, sort_keys=True)
    else:
        lines = [
            f"variant                 {report.variant}",
            f"n, k                    {report.n}, {report.k}",
            f"rounds R                {report.rounds}",
            f"partitions P_r          {' '.join(str(p) for p in report.partitions)}",
            f"max distinct query sets {report.max_distinct_query_sets}",
        ]
        if report.per_round_budgets is not None:
            lines.append(
                f"b_r at B={report.budget:<13} {' '.join(str(b) for b in report.per_round_budgets)}"
            )
        if report.sufficient_budget is not None:
            lines.append(f"sufficient budget z     {report.sufficient_budget}")
            lines.append(f"lower bound (GCW)       {report.lower_bound_gcw}")
            lines.append(f"lower bound (GBW/GCopeW){report.lower_bound_gbw_gcopew:>8}")
        for note in report.notes:
            lines.append(f"note: {note}")
        text = "\n".join(lines)
    if output:
        with open(output, "w") as handle:
            handle.write(text + "\n")
    else:
        click.echo(text)


@main.command("gen")
@click.option("--kind", type=click.Choice(
    ["gaussian-subset", "categorical-preference", "censored-race", "deterministic-sequence"]),
    required=True)
@click.option("--n", "n", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--epsilon", type=float, default=0.1)
@click.option("--force-distinct-gbw", is_flag=True, default=False)
@click.option("--gap-structure", type=click.Choice(["sampled", "uniform-gap"]), default="sampled")
@click.option("--output", "-o", type=click.Path(), default=None)
def cmd_gen(kind, n, k, seed, epsilon, force_distinct_gbw, gap_structure, output):
    """Write an environment spec JSON."""
    params = {}
    if kind in ("gaussian-subset", "categorical-preference"):
        params["epsilon"] = epsilon
        params["force_distinct_gbw"] = force_distinct_gbw
    if kind == "categorical-preference":
        params["gap_structure"] = gap_structure
    spec = make_environment_spec(kind, n, k, seed, **params)
    text = spec.dumps()
    if output:
        with open(output, "w") as handle:
            handle.write(text + "\n")
    else:
        click.echo(text)


@main.command("run")
@click.option("--grid", "grid_path", type=click.Path(exists=True), required=True,
              help="Grid config JSON (see README for the schema).")
@click.option("--output", "-o", type=click.Path(), default=None,
              help="Results CSV path (overrides the grid's own output field).")
@click.option("--repetitions", type=int, default=None, help="Override grid repetitions.")
@click.option("--base-seed", type=int, default=None, help="Override grid base seed.")
@click.option("--workers", type=int, default=None, help="Parallel workers (default CSE_WORKERS).")
def cmd_run(grid_path, output, repetitions, base_seed, workers):
    """Execute a grid config and write the results CSV."""
    grid = harness.ExperimentGrid.load(grid_path)
    overrides = {}
    if output is not None:
        overrides["output"] = output
    if repetitions is not None:
        overrides["repetitions"] = repetitions
    if base_seed is not None:
        overrides["base_seed"] = base_seed
    if overrides:
        from dataclasses import replace

        grid = replace(grid, **overrides)
    rows = harness.run_grid(grid, workers=workers)
    if grid.output is None:
        click.echo(harness.CSV_HEADER)
        for row in rows:
            click.echo(",".join(row.to_csv_fields()))
    else:
        click.echo(f"{len(rows)} rows -> {grid.output}")


@main.command("verify")
@click.option("--suite", type=click.Choice(["necessity", "roundrobin", "all"]), default="all")
def cmd_verify(suite):
    """Run the deterministic budget-boundary suites; nonzero exit on mismatch."""
    cases = []
    if suite in ("necessity", "all"):
        cases += harness.necessity_boundary_cases()
    if suite in ("roundrobin", "all"):
        cases += harness.round_robin_boundary_cases()
    failures = 0
    for case in cases:
        click.echo(case.line())
        failures += 0 if case.passed else 1
    click.echo(f"{len(cases) - failures}/{len(cases)} boundary cases passed")
    if failures:
        sys.exit(1)


@main.command("summarize")
@click.argument("results_csv", type=click.Path(exists=True))
@click.option("--output", "-o", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "text"]), default="csv")
def cmd_summarize(results_csv, output, fmt):
    """Aggregate a results CSV into per-cell success rates with Wilson bands."""
    rows = harness.read_rows(results_csv)
    summary = harness.summarize(rows)
    if fmt == "csv":
        if output is None:
            click.echo(harness.SUMMARY_HEADER)
            for row in summary:
                click.echo(",".join(row.to_csv_fields()))
        else:
            harness.write_summary(output, summary)
            click.echo(f"{len(summary)} groups -> {output}")
    else:
        for row in summary:
            clock = "" if row.mean_wallclock is None else f"  clock={row.mean_wallclock:.2f}s"
            click.echo(
                f"{row.algo:<5} {row.env:<22} n={row.n:<4} k={row.k:<3} B={row.B:<6} "
                f"rate={row.success_rate:.3f} [{row.wilson_low:.3f}, {row.wilson_high:.3f}]"
                f"{clock}"
            )


if __name__ == "__main__":
    main()
