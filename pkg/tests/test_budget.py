import math

import pytest

from csebandit import (
    EliminationPolicy,
    InvalidProfileError,
    LimitProfile,
    ParameterError,
    QuerySet,
    RateFunction,
    Schedule,
    all_query_sets_up_to,
    enumerate_query_sets,
    lower_bound_gbw_gcopew,
    lower_bound_gcw,
    max_query_sets,
    necessity_ladder_spec,
    partition_trace,
    round_robin_budget_z,
    schedule_for,
    stochastic_sufficiency,
    stochastic_sufficient_budget,
    sufficient_budget_table,
    sufficient_budget_z,
)
from csebandit.budget import budget_report

from _oracles import (
    hand_borda_table,
    preference_constant_highprec,
    reward_constant_highprec,
    scan_rate_inverse,
)

SQRT_RATE = RateFunction.power_law(1.0, 0.5)


def pair_profile(limits, rate=SQRT_RATE, gcw=0):
    table = {QuerySet(arms): vals for arms, vals in limits.items()}
    n = 1 + max(a for arms in limits for a in arms)
    return LimitProfile(n=n, k=2, rate=rate, limits=table, declared_gcw=gcw)


def uniform_gap_profile(n, k, delta, rate=SQRT_RATE):
    """Every set containing arm 0 has all gaps exactly delta."""
    table = {}
    for q in all_query_sets_up_to(n, k):
        if 0 in q:
            table[q] = tuple(0.8 if a == 0 else 0.8 - delta for a in q)
        else:
            base = 0.5
            table[q] = tuple(base - 0.01 * i for i, a in enumerate(q))
    return LimitProfile(n=n, k=k, rate=rate, limits=table, declared_gcw=0)


class TestSufficientBudgetGeneric:
    def test_single_round_single_partition(self):
        # z = R * P * ceil(inverse(0.2)) = 25, by the scan oracle
        schedule = Schedule(1, (1,), EliminationPolicy.winner_stays())
        profile = pair_profile({(0, 1): (0.9, 0.5)})
        trace = [(1, QuerySet((0, 1)), 1)]
        assert scan_rate_inverse(SQRT_RATE, 0.2) == 25
        assert sufficient_budget_z(schedule, profile, trace) == 25

    def test_instantaneous_rate_collapses_to_r_max_p(self):
        schedule = Schedule(2, (3, 1), EliminationPolicy.winner_stays())
        profile = pair_profile({(0, 1): (0.9, 0.5)}, rate=RateFunction.table([0.0]))
        trace = [(1, QuerySet((0, 1)), 1), (2, QuerySet((0, 1)), 1)]
        assert sufficient_budget_z(schedule, profile, trace) == 2 * 3

    def test_necessity_boundary_inverse(self):
        # A = 0.6, half-gap 0.3: smallest t with 0.6/t <= 0.3 is 2
        schedule = Schedule(1, (1,), EliminationPolicy.winner_stays())
        profile = pair_profile({(0, 1): (0.8, 0.2)}, rate=RateFunction.reciprocal(0.6))
        trace = [(1, QuerySet((0, 1)), 1)]
        assert sufficient_budget_z(schedule, profile, trace) == 2

    def test_default_trace_comes_from_dry_run(self):
        spec, profile = necessity_ladder_spec(6, 2, 0.5, (3,))
        schedule = schedule_for("csws", 6, 2)
        z_default = sufficient_budget_z(schedule, profile)
        z_explicit = sufficient_budget_z(schedule, profile, partition_trace(profile, schedule, 0))
        assert z_default == z_explicit == 36

    def test_a2_violation_detected(self):
        schedule = Schedule(1, (1,), EliminationPolicy.winner_stays())
        profile = pair_profile({(0, 1): (0.2, 0.8)}, gcw=0)  # arm 0 does not dominate
        with pytest.raises(InvalidProfileError):
            sufficient_budget_z(schedule, profile, [(1, QuerySet((0, 1)), 1)])


class TestSufficientBudgetTable:
    def test_gap_factor_example(self):
        # the real-valued identity: inverse of 1/sqrt(t) at 0.1 is exactly 100
        assert scan_rate_inverse(SQRT_RATE, 0.1) == 100

    def test_uniform_gaps_factor_out(self):
        profile = uniform_gap_profile(8, 3, 0.2)
        q = QuerySet((0, 1))
        half_gap = (profile.limit_of(q, 0) - profile.limit_of(q, 1)) / 2
        factor = scan_rate_inverse(SQRT_RATE, half_gap)
        for variant in ("csws", "csr", "csh"):
            schedule = schedule_for(variant, 8, 3)
            z = sufficient_budget_table(variant, 8, 3, profile)
            assert z == math.ceil(8 / 3) * schedule.rounds * factor

    def test_k2_winner_stays_equals_halving(self):
        profile = pair_profile(
            {(0, 1): (0.9, 0.4), (0, 2): (0.8, 0.3), (1, 2): (0.5, 0.2)}
        )
        assert sufficient_budget_table("csws", 3, 2, profile) == sufficient_budget_table(
            "csh", 3, 2, profile
        )

    def test_reject_worst_uses_easiest_gap(self):
        # CSR's min over arms equals the generic (f+1) = |Q| order gap
        profile = uniform_gap_profile(6, 3, 0.2)
        table = {}
        for q in all_query_sets_up_to(6, 3, containing=0):
            vals = list(profile.limit_vector(q))
            # make gaps heterogeneous: worst arm much further away
            vals = [v - 0.2 * i if a != 0 else v for i, (a, v) in enumerate(zip(q, vals))]
            table[q] = tuple(vals)
        prof2 = LimitProfile(n=6, k=3, rate=SQRT_RATE, limits=table, declared_gcw=0)
        z_csr = sufficient_budget_table("csr", 6, 3, prof2)
        schedule = schedule_for("csr", 6, 3)
        worst = 0
        from csebandit import rate_inverse

        for q in table:
            vals = prof2.limit_vector(q)
            star = prof2.limit_of(q, 0)
            largest_gap = star - min(v for a, v in zip(q, vals) if a != 0)
            worst = max(worst, rate_inverse(SQRT_RATE, largest_gap / 2))
        assert z_csr == math.ceil(6 / 3) * schedule.rounds * worst

    def test_n_equals_k_single_partition(self):
        profile = uniform_gap_profile(3, 3, 0.2)
        q = QuerySet((0, 1, 2))
        half_gap = (profile.limit_of(q, 0) - profile.limit_of(q, 1)) / 2
        factor = scan_rate_inverse(SQRT_RATE, half_gap)
        z = sufficient_budget_table("csws", 3, 3, profile)
        assert z == schedule_for("csws", 3, 3).rounds * factor  # ceil(n/k) = 1


class TestZMonotonicity:
    def test_larger_gaps_never_increase_z(self):
        for delta_small, delta_big in ((0.1, 0.2), (0.2, 0.4)):
            small = uniform_gap_profile(6, 2, delta_small)
            big = uniform_gap_profile(6, 2, delta_big)
            for variant in ("csws", "csr", "csh"):
                assert sufficient_budget_table(variant, 6, 2, big) <= sufficient_budget_table(
                    variant, 6, 2, small
                )

    def test_slower_rate_never_decreases_z(self):
        fast = uniform_gap_profile(6, 2, 0.2, rate=RateFunction.power_law(1.0, 0.5))
        slow = uniform_gap_profile(6, 2, 0.2, rate=RateFunction.power_law(2.0, 0.5))
        for variant in ("csws", "csr", "csh"):
            assert sufficient_budget_table(variant, 6, 2, slow) >= sufficient_budget_table(
                variant, 6, 2, fast
            )


class TestRoundRobinBudget:
    def test_worked_three_arm_example(self):
        profile = pair_profile(hand_borda_table(), rate=RateFunction.reciprocal(0.6))
        # Borda scores (0.85, 0.4, 0.25): runner-up gap 0.225 -> inverse 3
        assert scan_rate_inverse(RateFunction.reciprocal(0.6), 0.225) == 3
        assert round_robin_budget_z(profile) == 3 * 3

    def test_instantaneous_rate(self):
        profile = pair_profile(hand_borda_table(), rate=RateFunction.table([0.0]))
        assert round_robin_budget_z(profile) == math.comb(3, 2)

    def test_borda_tie_rejected(self):
        table = {(0, 1): (0.5, 0.5), (0, 2): (0.6, 0.4), (1, 2): (0.6, 0.4)}
        profile = pair_profile(table)
        with pytest.raises(InvalidProfileError):
            round_robin_budget_z(profile)


class TestLowerBounds:
    def extreme_gap_profile(self, n, k, spread):
        ladder = [0.9] + [0.9 - spread] * (k - 1)
        return LimitProfile(
            n=n, k=k, rate=SQRT_RATE,
            limit_fn=lambda q: tuple(ladder[: len(q)]),
            declared_gcw=0,
        )

    def test_worked_gcw_bound(self):
        profile = self.extreme_gap_profile(20, 4, 0.4)
        assert scan_rate_inverse(SQRT_RATE, 0.2) == 25
        assert lower_bound_gcw(profile) == math.ceil(20 / 4) * 25

    def test_n_equals_k(self):
        profile = self.extreme_gap_profile(4, 4, 0.4)
        assert lower_bound_gcw(profile) == 25

    def test_borda_copeland_constant(self):
        profile = self.extreme_gap_profile(6, 2, 0.4)
        expected = (math.comb(5, 1) * 25) // 4
        assert lower_bound_gbw_gcopew(profile) == expected

    def test_tie_rejected(self):
        profile = LimitProfile(
            n=4, k=2, rate=SQRT_RATE,
            limit_fn=lambda q: (0.5, 0.5), declared_gcw=None,
        )
        with pytest.raises(InvalidProfileError):
            lower_bound_gcw(profile)


class TestStochasticSufficiency:
    def test_preference_constant_matches_highprec_oracle(self):
        got = stochastic_sufficiency("preference", 0.1, 0.1, 2, 4)
        oracle = preference_constant_highprec("0.1", "0.1", 4)
        assert abs(got - oracle) <= 1  # float vs 50-digit rounding order
        assert abs(got - 45577) <= 1  # the frozen reference value

    def test_reward_constant_matches_highprec_oracle(self):
        got = stochastic_sufficiency("reward", 0.1, 0.1, 2, 4, sigma=0.25)
        oracle = reward_constant_highprec("0.1", "0.1", 2, 4, "0.25")
        assert abs(got - oracle) <= 1

    def test_halving_epsilon_quadruples(self):
        base = stochastic_sufficiency("preference", 0.1, 0.2, 2, 4)
        finer = stochastic_sufficiency("preference", 0.1, 0.1, 2, 4)
        assert finer >= 4 * base

    def test_sigma_zero_rejected(self):
        with pytest.raises(ParameterError):
            stochastic_sufficiency("reward", 0.1, 0.1, 2, 4, sigma=0.0)

    def test_total_budget_multiplies_schedule(self):
        schedule = schedule_for("csh", 8, 2)
        constant = stochastic_sufficiency("preference", 0.1, 0.2, 2, schedule.rounds)
        total = stochastic_sufficient_budget("preference", 0.1, 0.2, 2, schedule)
        assert total == constant * schedule.rounds * max(schedule.partitions)

    def test_domain_validation(self):
        with pytest.raises(ParameterError):
            stochastic_sufficiency("preference", 1.5, 0.1, 2, 4)
        with pytest.raises(ParameterError):
            stochastic_sufficiency("preference", 0.1, -0.1, 2, 4)


class TestMaxQuerySets:
    def test_round_robin_is_binomial(self):
        assert max_query_sets("rr", 6, 3) == 20

    @pytest.mark.parametrize("variant", ["csws", "csr", "csh"])
    def test_bound_dominates_schedule_sum(self, variant):
        for n in (6, 9, 12, 16, 20, 50, 100):
            for k in (2, 3, 4, 8):
                if k > n:
                    continue
                schedule = schedule_for(variant, n, k)
                assert max_query_sets(variant, n, k) >= sum(schedule.partitions)

    def test_worked_examples(self):
        assert max_query_sets("csws", 20, 4) >= 5 + 2 + 1 + 1
        assert max_query_sets("csh", 16, 4) >= 4 + 2 + 1 + 1 + 1 + 1


class TestAllocationInequality:
    @pytest.mark.parametrize("variant", ["csws", "csr", "csh"])
    def test_schedule_times_floor_never_exceeds_budget(self, variant):
        for n in (6, 9, 12, 20, 50):
            for k in (2, 3, 4):
                schedule = schedule_for(variant, n, k)
                for budget in (40, 100, 300, 999):
                    spent = sum(
                        p * schedule.per_partition_budget(budget, r)
                        for r, p in enumerate(schedule.partitions, start=1)
                    )
                    assert spent <= budget


def test_budget_report_assembly():
    report = budget_report("csws", 20, 4, budget=500)
    assert report.rounds == 4
    assert report.partitions == (5, 2, 1, 1)
    assert report.per_round_budgets == (25, 62, 125, 125)
    assert report.sufficient_budget is None
    profile = uniform_gap_profile(6, 2, 0.2)
    full = budget_report("csws", 6, 2, budget=100, profile=profile)
    assert full.sufficient_budget is not None
    assert full.lower_bound_gcw is not None
