"""Acceptance gate: one test per criterion, each printing a PASS line.

Deterministic boundary criteria are exact (no tolerance); statistical
criteria pin base seeds and check ordering at the 95% level via Wilson
intervals.  Each criterion also asserts its stated runtime budget.
"""

import math
import time

import numpy as np
import pytest

from csebandit import (
    ExperimentGrid,
    QuerySet,
    RateFunction,
    StatisticState,
    StatisticKind,
    Transform,
    all_query_sets_up_to,
    check_instance_membership,
    make_gcw_lowerbound_instance,
    max_query_sets,
    run_grid,
    schedule_for,
    stochastic_sufficient_budget,
    summarize,
    wilson_interval,
)
from csebandit.harness import (
    necessity_boundary_cases,
    necessity_boundary_instances,
    round_robin_boundary_cases,
)

from _oracles import (
    batch_mean,
    batch_median,
    batch_power_mean,
    batch_r_transform,
    batch_winner_frequency,
)


def report(criterion, detail):
    print(f"[criterion {criterion}] PASS  {detail}")


def test_criterion_1_necessity_boundary():
    """Exact success at z+1 and failure at z-1 for every variant and instance."""
    start = time.time()
    cases = necessity_boundary_cases()
    elapsed = time.time() - start
    instances = {c.instance for c in cases}
    assert len(instances) == 20
    failures = [c for c in cases if not c.passed]
    assert failures == [], [c.line() for c in failures]
    exhausted = [c for c in cases if "budget_exhausted" in c.flags]
    assert exhausted == []  # the boundary instances never trip the cap
    assert elapsed < 10.0, f"criterion 1 took {elapsed:.1f}s"
    report(1, f"{len(cases)} boundary cases over {len(instances)} instances in {elapsed:.2f}s")


def test_criterion_2_round_robin_boundary():
    """Success iff complete cycles reach the Borda sufficiency threshold."""
    start = time.time()
    cases = round_robin_boundary_cases()
    elapsed = time.time() - start
    instances = {c.instance for c in cases}
    assert len(instances) == 10
    failures = [c for c in cases if not c.passed]
    assert failures == [], [c.line() for c in failures]
    assert elapsed < 10.0, f"criterion 2 took {elapsed:.1f}s"
    report(2, f"{len(cases)} cycle budgets over {len(instances)} instances in {elapsed:.2f}s")


def test_criterion_3_budget_and_structure_invariants():
    """No run exceeds its budget, round cap, or query-set bound."""
    start = time.time()
    env_settings = (
        ("gaussian-subset", {}, "empirical-mean"),
        ("categorical-preference", {}, "winner-frequency"),
        ("censored-race", {}, "winner-frequency"),
        ("deterministic-sequence", {"family": "necessity-ladder"}, "empirical-mean"),
    )
    violations = []
    total = 0
    for env_kind, params, stat in env_settings:
        grid = ExperimentGrid(
            env_kind=env_kind,
            env_params=params,
            algorithms=("csws", "csr", "csh"),
            statistic=stat,
            n_values=(6, 9, 12, 20),
            k_values=(2, 3, 4),
            budgets=(40, 100, 300),
            repetitions=50,
            base_seed=303,
        )
        rows = run_grid(grid)
        total += len(rows)
        for row in rows:
            schedule = schedule_for(row.algo, row.n, row.k)
            if row.pulls_used > row.B:
                violations.append(("pulls", row))
            if row.distinct_query_sets > max_query_sets(row.algo, row.n, row.k):
                violations.append(("distinct", row))
            if "round_cap_exceeded" in row.flags:
                violations.append(("rounds", row))
            formula = sum(
                p * schedule.per_partition_budget(row.B, r)
                for r, p in enumerate(schedule.partitions, start=1)
            )
            if formula > row.B:
                violations.append(("allocation", row))
    elapsed = time.time() - start
    assert violations == [], violations[:5]
    assert elapsed < 120.0, f"criterion 3 took {elapsed:.1f}s"
    report(3, f"{total} runs, zero violations, {elapsed:.1f}s")


def test_criterion_3_round_counts_within_schedule():
    """Direct rounds <= R check on the records themselves (not just flags)."""
    from csebandit import RunConfig, build_environment, run_cse
    from csebandit.env import make_environment_spec

    for variant in ("csws", "csr", "csh"):
        for n in (6, 9, 12, 20):
            for k in (2, 3, 4):
                schedule = schedule_for(variant, n, k)
                for B in (40, 100, 300):
                    spec = make_environment_spec("gaussian-subset", n, k, seed=5)
                    config = RunConfig(budget=B, schedule=schedule,
                                       statistic=StatisticKind.empirical_mean(), seed=5)
                    record = run_cse(config, build_environment(spec))
                    assert record.rounds_executed <= schedule.rounds, (variant, n, k, B)


def _random_stream(rng, kind):
    width = int(rng.integers(2, 5))
    length = int(rng.integers(1, 201))
    if kind == "winner":
        obs = np.zeros((length, width))
        obs[np.arange(length), rng.integers(0, width, size=length)] = 1.0
        return obs
    return rng.normal(size=(length, width))


def test_criterion_4_statistics_oracle_equivalence():
    """Incremental aggregates equal from-scratch batch recomputation."""
    start = time.time()
    rng = np.random.default_rng(404)
    clip = Transform.clip(-1.0, 1.0)
    kinds = (
        ("mean", StatisticKind.empirical_mean(), batch_mean, 1e-12),
        ("winner", StatisticKind.winner_frequency(), batch_winner_frequency, 0.0),
        (
            "r-transform",
            StatisticKind.r_transform_mean(clip),
            lambda s: batch_r_transform(s, clip.fn),
            1e-12,
        ),
        ("median", StatisticKind.median(), batch_median, 1e-12),
        ("power-mean", StatisticKind.power_mean(2), lambda s: batch_power_mean(s, 2), 1e-12),
    )
    checked = 0
    for label, kind, oracle, tol in kinds:
        stream_kind = "winner" if label == "winner" else "real"
        for i in range(1000):
            obs = _random_stream(rng, stream_kind)
            state = StatisticState(kind, QuerySet(tuple(range(obs.shape[1]))))
            if i % 5 == 0:
                for row in obs:  # strictly per-pull updates
                    state.update(row)
            else:
                cut = int(rng.integers(1, obs.shape[0] + 1))
                state.update(obs[:cut])
                if cut < obs.shape[0]:
                    state.update(obs[cut:])
            expected = oracle(obs)
            if tol == 0.0:
                np.testing.assert_array_equal(state.values(), expected)
            else:
                np.testing.assert_allclose(state.values(), expected, atol=tol, rtol=0)
            assert state.t == obs.shape[0]
            checked += 1
    elapsed = time.time() - start
    assert checked == 5000
    assert elapsed < 10.0, f"criterion 4 took {elapsed:.1f}s"
    report(4, f"{checked} streams across 5 statistic kinds in {elapsed:.1f}s")


def _rates(summary, algo):
    row = [s for s in summary if s.algo == algo]
    assert len(row) == 1
    return row[0]


def test_criterion_5_reward_replication():
    """Qualitative replication: halving beats round-robin at small k, and
    round-robin collapses when Borda and Condorcet winners are forced apart."""
    start = time.time()
    grid_a = ExperimentGrid(
        env_kind="gaussian-subset",
        env_params={"epsilon": 0.1},
        algorithms=("csh", "rr"),
        statistic="empirical-mean",
        n_values=(50,),
        k_values=(2,),
        budgets=(500,),
        repetitions=100,
        base_seed=20250,
    )
    summary_a = summarize(run_grid(grid_a))
    csh, rr = _rates(summary_a, "csh"), _rates(summary_a, "rr")
    assert csh.success_rate - rr.success_rate >= 0.10
    assert csh.wilson_low > rr.wilson_high  # ordering holds at the 95% level

    grid_b = ExperimentGrid(
        env_kind="gaussian-subset",
        env_params={"epsilon": 0.1, "force_distinct_gbw": True},
        algorithms=("csws", "csr", "csh", "rr"),
        statistic="empirical-mean",
        n_values=(50,),
        k_values=(2,),
        budgets=(500,),
        repetitions=100,
        base_seed=20251,
    )
    summary_b = summarize(run_grid(grid_b))
    rr_b = _rates(summary_b, "rr")
    best = max((_rates(summary_b, v) for v in ("csws", "csr", "csh")),
               key=lambda s: s.success_rate)
    assert rr_b.success_rate <= 0.25
    assert best.success_rate >= rr_b.success_rate + 0.25
    assert best.wilson_low > rr_b.wilson_high
    elapsed = time.time() - start
    assert elapsed < 300.0, f"criterion 5 took {elapsed:.1f}s"
    report(
        5,
        f"(a) csh {csh.success_rate:.2f} vs rr {rr.success_rate:.2f}; "
        f"(b) rr {rr_b.success_rate:.2f} vs best CSE {best.success_rate:.2f}; "
        f"{elapsed:.1f}s",
    )


def test_criterion_6_preference_sufficiency():
    """At the published sufficient budget the failure rate stays below delta."""
    start = time.time()
    delta, epsilon, n, k = 0.1, 0.2, 8, 2
    schedule = schedule_for("csh", n, k)
    budget = stochastic_sufficient_budget("preference", delta, epsilon, k, schedule)
    grid = ExperimentGrid(
        env_kind="categorical-preference",
        env_params={"epsilon": epsilon, "gap_structure": "uniform-gap"},
        algorithms=("csh",),
        statistic="winner-frequency",
        n_values=(n,),
        k_values=(k,),
        budgets=(budget,),
        repetitions=200,
        base_seed=606,
    )
    summary = summarize(run_grid(grid))[0]
    elapsed = time.time() - start
    assert summary.success_rate >= 1.0 - delta
    assert elapsed < 180.0, f"criterion 6 took {elapsed:.1f}s"
    report(6, f"B={budget}: success {summary.success_rate:.3f} >= {1 - delta} in {elapsed:.1f}s")


def test_criterion_7_race_replication():
    """Set-racing learners finish faster than round-robin and the single-arm
    baseline, at the 95% level, for both subset sizes."""
    start = time.time()
    grid = ExperimentGrid(
        env_kind="censored-race",
        env_params={},
        algorithms=("csws", "csr", "csh", "rr", "sh"),
        statistic="winner-frequency",
        n_values=(20,),
        k_values=(4, 8),
        budgets=(300,),
        repetitions=100,
        base_seed=707,
    )
    summary = summarize(run_grid(grid))
    details = []
    for k in (4, 8):
        group = {s.algo: s for s in summary if s.k == k}
        for cse in ("csws", "csr", "csh"):
            for baseline in ("rr", "sh"):
                a, b = group[cse], group[baseline]
                assert a.mean_wallclock < b.mean_wallclock, (k, cse, baseline)
                # 95% separation of the mean estimates
                assert a.mean_wallclock + 1.96 * a.wallclock_se < (
                    b.mean_wallclock - 1.96 * b.wallclock_se
                ), (k, cse, baseline)
        details.append(
            f"k={k}: cse<= {max(group[v].mean_wallclock for v in ('csws', 'csr', 'csh')):.0f}s, "
            f"rr {group['rr'].mean_wallclock:.0f}s, sh {group['sh'].mean_wallclock:.0f}s"
        )
    elapsed = time.time() - start
    assert elapsed < 180.0, f"criterion 7 took {elapsed:.1f}s"
    report(7, "; ".join(details) + f"; {elapsed:.1f}s")


def test_criterion_8_adversarial_membership():
    """Every generated adversarial instance stays inside its rate envelope."""
    start = time.time()
    rng = np.random.default_rng(808)
    checked = 0
    for n, k in ((4, 2), (5, 2), (5, 3), (6, 3)):
        for rate in (RateFunction.power_law(1.0, 0.5), RateFunction.reciprocal(0.9)):
            limits = {}
            for q in all_query_sets_up_to(n, k):
                vals = np.sort(rng.uniform(0.1, 0.9, size=len(q)))[::-1]
                if vals[0] - vals[1] < 0.05:
                    vals[0] = vals[1] + 0.05
                limits[q] = tuple(float(v) for v in vals)
            b_prime, specs = make_gcw_lowerbound_instance(limits, rate)
            for spec in specs:
                violations = check_instance_membership(spec, limits, rate, 10 * b_prime)
                assert violations == [], (n, k, spec.gcw, violations[:3])
                checked += 1
    # necessity instances lie exactly on their reciprocal envelope
    for name, spec, profile in necessity_boundary_instances():
        reference = {q: profile.limit_vector(q) for q in all_query_sets_up_to(spec.n, spec.k)}
        violations = check_instance_membership(spec, reference, profile.rate, 200)
        assert violations == [], (name, violations[:3])
        checked += 1
    elapsed = time.time() - start
    report(8, f"{checked} adversarial instances inside their envelopes in {elapsed:.1f}s")
