#!/usr/bin/env python3
"""Render figures from csebandit results CSVs.

Three figure kinds, selected with --kind:

  success-curves     one facet per (n, k): success rate vs budget with Wilson
                     bands, one line per algorithm
  runtime-panel      success facets on top, mean simulated wall clock below
                     (the bottom row is skipped with a warning when the CSV
                     carries no wall-clock column values)
  budget-comparison  gap-free sufficient-budget multipliers vs n per subset
                     size, read from a JSON array of budget reports

Every figure writes a sidecar CSV next to the image holding exactly the data
series plotted; for the two results-driven kinds the sidecar reproduces the
harness summarize output byte for byte.  Inputs are never modified.

Examples:
  python render.py --kind success-curves results.csv -o success.png
  python render.py --kind runtime-panel race.csv -o race.png
  python render.py --kind budget-comparison --reports sweep.json -o budget.png
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from figdata import (
    aggregate,
    budget_multiplier,
    read_budget_reports,
    read_results,
    write_budget_sidecar,
    write_sidecar,
)

ALGO_STYLE = {
    "csws": ("tab:blue", "o"),
    "csr": ("tab:orange", "s"),
    "csh": ("tab:green", "^"),
    "rr": ("tab:red", "d"),
    "sh": ("tab:purple", "v"),
}


def sidecar_path(image_path: str) -> str:
    stem = image_path.rsplit(".", 1)[0] if "." in image_path else image_path
    return stem + "_data.csv"


def _facets(groups):
    return sorted({(g.n, g.k) for g in groups})


def _apply_filters(groups, algos, envs):
    if algos:
        groups = [g for g in groups if g.algo in algos]
    if envs:
        groups = [g for g in groups if g.env in envs]
    return groups


def _plot_success_axis(ax, facet_groups, title):
    for algo in sorted({g.algo for g in facet_groups}):
        series = sorted((g for g in facet_groups if g.algo == algo), key=lambda g: g.B)
        budgets = [g.B for g in series]
        rates = [g.success_rate for g in series]
        lows = [g.wilson_low for g in series]
        highs = [g.wilson_high for g in series]
        color, marker = ALGO_STYLE.get(algo, ("gray", "x"))
        ax.plot(budgets, rates, color=color, marker=marker, label=algo)
        ax.fill_between(budgets, lows, highs, color=color, alpha=0.15)
    ax.set_xlabel("budget B")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)


def render_success_curves(groups, output, facets=None):
    facets = _facets(groups) if facets is None else facets
    fig, axes = plt.subplots(
        1, max(len(facets), 1), figsize=(4.2 * max(len(facets), 1), 3.4), squeeze=False
    )
    for ax, (n, k) in zip(axes[0], facets):
        facet_groups = [g for g in groups if (g.n, g.k) == (n, k)]
        if not facet_groups:
            print(f"warning: facet (n={n}, k={k}) is empty after filtering; skipped")
            ax.set_visible(False)
            continue
        _plot_success_axis(ax, facet_groups, f"n={n}, k={k}")
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_runtime_panel(groups, output, facets=None):
    facets = _facets(groups) if facets is None else facets
    with_clock = [g for g in groups if g.mean_wallclock is not None]
    rows = 2 if with_clock else 1
    if not with_clock:
        print("warning: no simulated wall-clock values in the CSV; runtime row skipped")
    fig, axes = plt.subplots(
        rows, max(len(facets), 1), figsize=(4.2 * max(len(facets), 1), 3.2 * rows),
        squeeze=False,
    )
    for col, (n, k) in enumerate(facets):
        facet_groups = [g for g in groups if (g.n, g.k) == (n, k)]
        if not facet_groups:
            print(f"warning: facet (n={n}, k={k}) is empty after filtering; skipped")
            for r in range(rows):
                axes[r][col].set_visible(False)
            continue
        _plot_success_axis(axes[0][col], facet_groups, f"n={n}, k={k}")
        if rows == 2:
            ax = axes[1][col]
            for algo in sorted({g.algo for g in facet_groups}):
                series = sorted(
                    (g for g in facet_groups if g.algo == algo and g.mean_wallclock is not None),
                    key=lambda g: g.B,
                )
                if not series:
                    continue
                color, marker = ALGO_STYLE.get(algo, ("gray", "x"))
                ax.errorbar(
                    [g.B for g in series],
                    [g.mean_wallclock for g in series],
                    yerr=[1.96 * (g.wallclock_se or 0.0) for g in series],
                    color=color,
                    marker=marker,
                    label=algo,
                    capsize=3,
                )
            ax.set_xlabel("budget B")
            ax.set_ylabel("simulated wall clock [s]")
            ax.set_yscale("log")
            ax.grid(alpha=0.3)
            ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def render_budget_comparison(docs, output):
    variants = sorted({d["variant"] for d in docs})
    ks = sorted({d["k"] for d in docs})
    fig, axes = plt.subplots(1, len(ks), figsize=(4.2 * len(ks), 3.4), squeeze=False)
    for ax, k in zip(axes[0], ks):
        for variant in variants:
            series = sorted((d for d in docs if d["k"] == k and d["variant"] == variant),
                            key=lambda d: d["n"])
            if not series:
                print(f"warning: no reports for variant {variant} at k={k}; skipped")
                continue
            color, marker = ALGO_STYLE.get(variant, ("gray", "x"))
            ax.plot(
                [d["n"] for d in series],
                [budget_multiplier(d) for d in series],
                color=color,
                marker=marker,
                label=variant,
            )
        ax.set_xlabel("number of arms n")
        ax.set_ylabel("sufficient-budget multiplier")
        ax.set_title(f"k={k}")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("results", nargs="?", help="results CSV (success/runtime kinds)")
    parser.add_argument("--kind", required=True,
                        choices=["success-curves", "runtime-panel", "budget-comparison"])
    parser.add_argument("--reports", help="budget report sweep JSON (budget-comparison kind)")
    parser.add_argument("--output", "-o", required=True, help="output image path")
    parser.add_argument("--algos", help="comma-separated algorithm filter")
    parser.add_argument("--envs", help="comma-separated environment filter")
    args = parser.parse_args(argv)

    if args.kind == "budget-comparison":
        if not args.reports:
            parser.error("budget-comparison needs --reports")
        docs = read_budget_reports(args.reports)
        render_budget_comparison(docs, args.output)
        write_budget_sidecar(sidecar_path(args.output), docs)
    else:
        if not args.results:
            parser.error(f"{args.kind} needs a results CSV argument")
        rows = read_results(args.results)
        all_groups = aggregate(rows)
        facets = _facets(all_groups)  # facets emptied by a filter warn, not vanish
        groups = _apply_filters(
            all_groups,
            set(args.algos.split(",")) if args.algos else None,
            set(args.envs.split(",")) if args.envs else None,
        )
        if args.kind == "success-curves":
            render_success_curves(groups, args.output, facets)
        else:
            render_runtime_panel(groups, args.output, facets)
        write_sidecar(sidecar_path(args.output), groups)
    print(f"wrote {args.output} and {sidecar_path(args.output)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
