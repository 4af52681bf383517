"""Reproducible experiment grids: seeded multi-run execution, CSV emission,
success-rate summaries, and the deterministic budget-boundary suites.

A grid is the cross product of environment kind, arm counts, subset sizes,
budgets and algorithms, executed for a fixed number of repetitions.  Every
(cell, repetition) pair derives its own environment seed from the base seed,
so reruns are byte-identical and cells never share randomness.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .algo import (
    RunConfig,
    RunRecord,
    partition_trace,
    run_cse,
    run_round_robin,
    run_sh_baseline,
    schedule_for,
)
from .budget import round_robin_budget_z, sufficient_budget_z
from .core import ParameterError, QuerySet
from .env import (
    EnvironmentSpec,
    build_environment,
    make_borda_boundary_instance,
    make_environment_spec,
    necessity_ladder_spec,
)
from .stats import StatisticKind, kind_from_name

CSE_VARIANTS = ("csws", "csr", "csh")
ALGORITHMS = CSE_VARIANTS + ("rr", "sh")

CSV_HEADER = (
    "algo,statistic,env,n,k,B,seed,returned_arm,true_best,success,"
    "pulls_used,distinct_query_sets,simulated_wallclock,flags"
)


@dataclass(frozen=True)
class ExperimentGrid:
    env_kind: str
    env_params: dict[str, Any] = field(default_factory=dict)
    algorithms: tuple[str, ...] = CSE_VARIANTS
    statistic: str = "empirical-mean"
    n_values: tuple[int, ...] = (10,)
    k_values: tuple[int, ...] = (2,)
    budgets: tuple[int, ...] = (100,)
    repetitions: int = 100
    base_seed: int = 0
    partition_order: str = "seeded-shuffle"
    rr_order: str = "shuffle"
    output: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ParameterError("repetitions must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ParameterError(f"unknown algorithms: {sorted(unknown)}")

    def cells(self) -> list[tuple[str, int, int, int]]:
        return [
            (algo, n, k, B)
            for algo in self.algorithms
            for n in self.n_values
            for k in self.k_values
            for B in self.budgets
            if k <= n
        ]

    def to_json(self) -> dict[str, Any]:
        return {
            "env": {"kind": self.env_kind, **self.env_params},
            "algorithms": list(self.algorithms),
            "statistic": self.statistic,
            "n_values": list(self.n_values),
            "k_values": list(self.k_values),
            "budgets": list(self.budgets),
            "repetitions": self.repetitions,
            "base_seed": self.base_seed,
            "partition_order": self.partition_order,
            "rr_order": self.rr_order,
            "output": self.output,
        }

    @staticmethod
    def from_json(doc: dict[str, Any]) -> "ExperimentGrid":
        env = dict(doc["env"])
        kind = env.pop("kind")
        return ExperimentGrid(
            env_kind=kind,
            env_params=env,
            algorithms=tuple(doc.get("algorithms", CSE_VARIANTS)),
            statistic=doc.get("statistic", "empirical-mean"),
            n_values=tuple(doc["n_values"]),
            k_values=tuple(doc["k_values"]),
            budgets=tuple(doc["budgets"]),
            repetitions=int(doc.get("repetitions", 100)),
            base_seed=int(doc.get("base_seed", 0)),
            partition_order=doc.get("partition_order", "seeded-shuffle"),
            rr_order=doc.get("rr_order", "shuffle"),
            output=doc.get("output"),
        )

    @staticmethod
    def load(path: str) -> "ExperimentGrid":
        with open(path) as handle:
            return ExperimentGrid.from_json(json.load(handle))


@dataclass(frozen=True)
class ResultRow:
    algo: str
    statistic: str
    env: str
    n: int
    k: int
    B: int
    seed: int
    returned_arm: int
    true_best: int
    success: int
    pulls_used: int
    distinct_query_sets: int
    simulated_wallclock: float | None
    flags: tuple[str, ...]

    def to_csv_fields(self) -> list[str]:
        return [
            self.algo,
            self.statistic,
            self.env,
            str(self.n),
            str(self.k),
            str(self.B),
            str(self.seed),
            str(self.returned_arm),
            str(self.true_best),
            str(self.success),
            str(self.pulls_used),
            str(self.distinct_query_sets),
            "" if self.simulated_wallclock is None else repr(self.simulated_wallclock),
            "|".join(self.flags),
        ]

    @staticmethod
    def from_csv_fields(fields: list[str]) -> "ResultRow":
        return ResultRow(
            algo=fields[0],
            statistic=fields[1],
            env=fields[2],
            n=int(fields[3]),
            k=int(fields[4]),
            B=int(fields[5]),
            seed=int(fields[6]),
            returned_arm=int(fields[7]),
            true_best=int(fields[8]),
            success=int(fields[9]),
            pulls_used=int(fields[10]),
            distinct_query_sets=int(fields[11]),
            simulated_wallclock=None if fields[12] == "" else float(fields[12]),
            flags=tuple(f for f in fields[13].split("|") if f),
        )


def derive_seed(base_seed: int, cell_index: int, repetition: int) -> int:
    """Stable per-(cell, repetition) environment seed."""
    ss = np.random.SeedSequence([base_seed & 0x7FFFFFFFFFFFFFFF, cell_index, repetition])
    return int(ss.generate_state(1, np.uint64)[0] & 0x7FFFFFFFFFFFFFFF)


def run_single(
    algo: str,
    spec: EnvironmentSpec,
    budget: int,
    statistic: StatisticKind,
    seed: int,
    partition_order: str = "seeded-shuffle",
    rr_order: str = "shuffle",
) -> ResultRow:
    """Build the environment, run one algorithm, compare to the true winner."""
    env = build_environment(spec)
    truth = env.true_best()
    flags: tuple[str, ...]
    if algo in CSE_VARIANTS:
        config = RunConfig(
            budget=budget,
            schedule=schedule_for(algo, spec.n, spec.k),
            statistic=statistic,
            partition_order=partition_order,
            seed=seed,
        )
        record = run_cse(config, env)
        flags = record.flags
    elif algo == "rr":
        record = run_round_robin(budget, env, statistic, enumeration_order=rr_order, seed=seed)
        flags = record.flags
    elif algo == "sh":
        record = run_sh_baseline(spec.k * budget, spec.n, env)
        flags = record.flags + ("sh_inflated_budget",)
    else:
        raise ParameterError(f"unknown algorithm {algo!r}")
    exhausted = "budget_exhausted" in flags
    success = int(record.returned_arm == truth and not exhausted)
    wallclock = record.simulated_wallclock if spec.kind == "censored-race" else None
    return ResultRow(
        algo=algo,
        statistic=statistic.name,
        env=spec.kind,
        n=spec.n,
        k=spec.k,
        B=budget,
        seed=seed,
        returned_arm=record.returned_arm,
        true_best=truth,
        success=success,
        pulls_used=record.pulls_used,
        distinct_query_sets=record.distinct_query_sets,
        simulated_wallclock=wallclock,
        flags=flags,
    )


def _run_task(args) -> ResultRow:
    grid, cell_index, repetition = args
    algo, n, k, budget = grid.cells()[cell_index]
    seed = derive_seed(grid.base_seed, cell_index, repetition)
    spec = make_environment_spec(grid.env_kind, n, k, seed, **grid.env_params)
    return run_single(
        algo,
        spec,
        budget,
        kind_from_name(grid.statistic),
        seed,
        partition_order=grid.partition_order,
        rr_order=grid.rr_order,
    )


def run_grid(grid: ExperimentGrid, workers: int | None = None) -> list[ResultRow]:
    """Execute the full grid; rows come back in (cell, repetition) order.

    Per-run failures are recorded in the row's flags and never abort the grid.
    ``CSE_WORKERS`` (or ``workers``) > 1 fans repetitions out to processes;
    the merge order stays deterministic either way.
    """
    if workers is None:
        workers = int(os.environ.get("CSE_WORKERS", "1"))
    tasks = [
        (grid, ci, rep)
        for ci in range(len(grid.cells()))
        for rep in range(grid.repetitions)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=8))
    else:
        rows = [_run_task(t) for t in tasks]
    if grid.output:
        write_rows(grid.output, rows)
    return rows


def write_rows(path: str, rows: list[ResultRow]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER.split(","))
        for row in rows:
            writer.writerow(row.to_csv_fields())


def read_rows(path_or_text: str, is_text: bool = False) -> list[ResultRow]:
    if is_text:
        handle = io.StringIO(path_or_text)
        return _read_rows_handle(handle)
    with open(path_or_text, newline="") as handle:
        return _read_rows_handle(handle)


def _read_rows_handle(handle) -> list[ResultRow]:
    reader = csv.reader(handle)
    header = next(reader)
    if header != CSV_HEADER.split(","):
        raise ParameterError(f"unexpected CSV header: {header}")
    return [ResultRow.from_csv_fields(fields) for fields in reader]


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ParameterError("empty group")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return center - half, center + half


SUMMARY_HEADER = (
    "algo,statistic,env,n,k,B,repetitions,successes,success_rate,"
    "wilson_low,wilson_high,mean_wallclock,wallclock_se"
)


@dataclass(frozen=True)
class SummaryRow:
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

    def to_csv_fields(self) -> list[str]:
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


def summarize(rows: list[ResultRow]) -> list[SummaryRow]:
    """Per-(algo, statistic, env, n, k, B) success rates with Wilson bands."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault((row.algo, row.statistic, row.env, row.n, row.k, row.B), []).append(row)
    out = []
    for key in sorted(groups):
        members = groups[key]
        trials = len(members)
        successes = sum(r.success for r in members)
        low, high = wilson_interval(successes, trials)
        clocks = [r.simulated_wallclock for r in members if r.simulated_wallclock is not None]
        mean_clock = se_clock = None
        if clocks:
            mean_clock = float(np.mean(clocks))
            se_clock = float(np.std(clocks, ddof=1) / math.sqrt(len(clocks))) if len(clocks) > 1 else 0.0
        out.append(
            SummaryRow(
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
    return out


def write_summary(path: str, summary: list[SummaryRow]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SUMMARY_HEADER.split(","))
        for row in summary:
            writer.writerow(row.to_csv_fields())


# ---------------------------------------------------------------------------
# Deterministic budget-boundary suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCase:
    suite: str
    variant: str
    instance: str
    budget: int
    expected_success: bool
    observed_success: bool
    flags: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return self.expected_success == self.observed_success

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        want = "finds winner" if self.expected_success else "misses winner"
        return (
            f"[{status}] {self.suite} {self.variant:<4} {self.instance:<28} "
            f"B={self.budget:<6} expected: {want}"
        )


# 20 boundary instances: five (n, k) cells x four gap parameterizations.
# (12, 3) is deliberately absent: there the halving variant's realized
# partition count exceeds the schedule value, so its physical spend can top B
# and the clean boundary does not exist (see the decisions ledger).
NECESSITY_CELLS = ((6, 2), (9, 2), (12, 2), (6, 3), (9, 3))
NECESSITY_PARAMS = ((0.5, 2), (0.6, 3), (0.75, 2), (0.8, 4))


def necessity_boundary_instances():
    """The criterion-1 instance family with strict off-grid gap margins."""
    instances = []
    for n, k in NECESSITY_CELLS:
        for amplitude, base in NECESSITY_PARAMS:
            inverses = tuple(base + (k - j) for j in range(2, k + 1))
            spec, profile = necessity_ladder_spec(n, k, amplitude, inverses)
            name = f"necessity(n={n},k={k},A={amplitude},m={base})"
            instances.append((name, spec, profile))
    return instances


def necessity_boundary_cases() -> list[BoundaryCase]:
    """Exact success/failure at one pull above/below the sufficient budget."""
    cases = []
    for name, spec, profile in necessity_boundary_instances():
        for variant in CSE_VARIANTS:
            schedule = schedule_for(variant, spec.n, spec.k)
            trace = partition_trace(profile, schedule, 0)
            z = sufficient_budget_z(schedule, profile, trace)
            for budget, expected in ((z + 1, True), (z - 1, False)):
                config = RunConfig(
                    budget=budget,
                    schedule=schedule,
                    statistic=StatisticKind.empirical_mean(),
                    partition_order="sorted",
                )
                record = run_cse(config, build_environment(spec))
                observed = record.returned_arm == 0 and "budget_exhausted" not in record.flags
                cases.append(
                    BoundaryCase(
                        suite="necessity-boundary",
                        variant=variant,
                        instance=name,
                        budget=budget,
                        expected_success=expected,
                        observed_success=observed,
                        flags=record.flags,
                    )
                )
    return cases


RR_BOUNDARY_PARAMS = (
    (4, 2, 0.5, 3),
    (5, 2, 0.6, 2),
    (6, 2, 0.75, 4),
    (4, 3, 0.5, 3),
    (5, 3, 0.8, 2),
    (6, 3, 0.6, 3),
    (4, 2, 0.9, 2),
    (5, 2, 0.45, 4),
    (6, 3, 0.9, 2),
    (5, 3, 0.55, 3),
)


def round_robin_boundary_instances():
    """Ten Borda-level worst cases; success iff whole cycles reach the target."""
    instances = []
    for n, k, amplitude, m in RR_BOUNDARY_PARAMS:
        scores = [0.9]
        scores.append(0.9 - 2.0 * amplitude / (m - 0.5))
        for j in range(2, n):
            scores.append(scores[1] - 0.07 * (j - 1))
        spec = make_borda_boundary_instance(scores, amplitude, n, k)
        from .core import LimitProfile, RateFunction

        profile = LimitProfile(
            n=n,
            k=k,
            rate=RateFunction.reciprocal(amplitude),
            limits={
                q: tuple(scores[a] for a in q)
                for q in _all_k_sets(n, k)
            },
            declared_gcw=0,
        )
        name = f"borda(n={n},k={k},A={amplitude},m={m})"
        instances.append((name, spec, profile, m))
    return instances


def _all_k_sets(n: int, k: int):
    from .core import enumerate_query_sets

    return list(enumerate_query_sets(n, k))


def round_robin_boundary_cases() -> list[BoundaryCase]:
    cases = []
    for name, spec, profile, m in round_robin_boundary_instances():
        z_rr = round_robin_budget_z(profile)
        per_cycle = math.comb(spec.n, spec.k)
        for cycles in range(max(1, m - 2), m + 2):
            budget = cycles * per_cycle
            env = build_environment(spec)
            record = run_round_robin(
                budget, env, StatisticKind.empirical_mean(), enumeration_order="lex"
            )
            observed = record.returned_arm == spec.gcw
            cases.append(
                BoundaryCase(
                    suite="roundrobin-boundary",
                    variant="rr",
                    instance=name,
                    budget=budget,
                    expected_success=budget >= z_rr,
                    observed_success=observed,
                    flags=record.flags,
                )
            )
    return cases


def boundary_checks() -> list[BoundaryCase]:
    return necessity_boundary_cases() + round_robin_boundary_cases()
