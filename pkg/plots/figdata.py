"""Data layer for the figure pipeline.

Reads the results CSV emitted by the experiment harness and reproduces its
summary aggregation bit-for-bit (same grouping, same Wilson interval, same
float formatting), so every figure's sidecar table can be compared byte-wise
against the harness' own summarize output.  This package deliberately
imports nothing from the learner package — the CSV/JSON schemas are the
contract.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

RESULTS_HEADER = (
    "algo,statistic,env,n,k,B,seed,returned_arm,true_best,success,"
    "pulls_used,distinct_query_sets,simulated_wallclock,flags"
)
SUMMARY_HEADER = (
    "algo,statistic,env,n,k,B,repetitions,successes,success_rate,"
    "wilson_low,wilson_high,mean_wallclock,wallclock_se"
)


class SchemaError(ValueError):
    """The input file does not match the published schema."""


@dataclass(frozen=True)
class Row:
    algo: str
    statistic: str
    env: str
    n: int
    k: int
    B: int
    success: int
    wallclock: float | None


def read_results(path: str) -> list[Row]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        expected = RESULTS_HEADER.split(",")
        if header != expected:
            missing = [c for c in expected if header is None or c not in header]
            raise SchemaError(f"results CSV misses column(s): {', '.join(missing) or header}")
        rows = []
        for fields in reader:
            rows.append(
                Row(
                    algo=fields[0],
                    statistic=fields[1],
                    env=fields[2],
                    n=int(fields[3]),
                    k=int(fields[4]),
                    B=int(fields[5]),
                    success=int(fields[9]),
                    wallclock=None if fields[12] == "" else float(fields[12]),
                )
            )
    return rows


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054):
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return center - half, center + half


@dataclass(frozen=True)
class Group:
    algo: str
    statistic: str
    env: str
    n: int
    k: int
    B: int
    repetitions: int
    successes: int
    success_rate: float
    wilson_low: float
    wilson_high: float
    mean_wallclock: float | None
    wallclock_se: float | None

    def csv_fields(self) -> list[str]:
        return [
            self.algo,
            self.statistic,
            self.env,
            str(self.n),
            str(self.k),
            str(self.B),
            str(self.repetitions),
            str(self.successes),
            repr(self.success_rate),
            repr(self.wilson_low),
            repr(self.wilson_high),
            "" if self.mean_wallclock is None else repr(self.mean_wallclock),
            "" if self.wallclock_se is None else repr(self.wallclock_se),
        ]


def aggregate(rows: list[Row]) -> list[Group]:
    """Identical aggregation to the harness summarize (order, math, floats)."""
    buckets: dict[tuple, list[Row]] = {}
    for row in rows:
        buckets.setdefault((row.algo, row.statistic, row.env, row.n, row.k, row.B), []).append(row)
    groups = []
    for key in sorted(buckets):
        members = buckets[key]
        trials = len(members)
        successes = sum(r.success for r in members)
        low, high = wilson_interval(successes, trials)
        clocks = [r.wallclock for r in members if r.wallclock is not None]
        mean_clock = se_clock = None
        if clocks:
            mean_clock = float(np.mean(clocks))
            se_clock = (
                float(np.std(clocks, ddof=1) / math.sqrt(len(clocks))) if len(clocks) > 1 else 0.0
            )
        groups.append(
            Group(
                algo=key[0],
                statistic=key[1],
                env=key[2],
                n=key[3],
                k=key[4],
                B=key[5],
                repetitions=trials,
                successes=successes,
                success_rate=successes / trials,
                wilson_low=low,
                wilson_high=high,
                mean_wallclock=mean_clock,
                wallclock_se=se_clock,
            )
        )
    return groups


def write_sidecar(path: str, groups: list[Group]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_HEADER.split(","))
        for group in groups:
            writer.writerow(group.csv_fields())


# --- budget-report sweeps (for the sufficient-budget comparison figure) ---

REPORT_FIELDS = ("variant", "n", "k", "rounds", "partitions")


def read_budget_reports(path: str) -> list[dict]:
    with open(path) as handle:
        docs = json.load(handle)
    if not isinstance(docs, list):
        raise SchemaError("budget report sweep must be a JSON array of report objects")
    for doc in docs:
        missing = [f for f in REPORT_FIELDS if f not in doc]
        if missing:
            raise SchemaError(f"budget report misses field(s): {', '.join(missing)}")
    return docs


def budget_multiplier(doc: dict) -> int:
    """Gap-free sufficient-budget multiplier ceil(n/k) * R of one report."""
    return -(-doc["n"] // doc["k"]) * doc["rounds"]


BUDGET_SIDECAR_HEADER = "variant,n,k,rounds,multiplier"


def write_budget_sidecar(path: str, docs: list[dict]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(BUDGET_SIDECAR_HEADER.split(","))
        for doc in sorted(docs, key=lambda d: (d["variant"], d["k"], d["n"])):
            writer.writerow(
                [doc["variant"], str(doc["n"]), str(doc["k"]), str(doc["rounds"]),
                 str(budget_multiplier(doc))]
            )
