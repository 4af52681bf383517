import pytest

from csebandit import (
    EnvironmentSpec,
    LimitProfile,
    QuerySet,
    RateFunction,
    all_query_sets_up_to,
    build_environment,
    enumerate_query_sets,
    find_gbw_gcopew,
    find_gcw,
)

from _oracles import hand_borda_table

SQRT_RATE = RateFunction.power_law(1.0, 0.5)


def pair_profile(limits, gcw=None):
    table = {QuerySet(arms): vals for arms, vals in limits.items()}
    n = 1 + max(a for arms in limits for a in arms)
    return LimitProfile(n=n, k=2, rate=SQRT_RATE, limits=table, declared_gcw=gcw)


def test_worked_three_arm_instance():
    profile = pair_profile(hand_borda_table())
    report = find_gbw_gcopew(profile)
    assert find_gcw(profile) == 0
    assert report.gcw == 0
    assert report.borda_scores == pytest.approx((0.85, 0.4, 0.25))
    assert report.copeland_scores == pytest.approx((1.0, 0.5, 0.0))
    assert report.gbw_set == (0,)
    assert report.gcopew_set == (0,)


def test_cyclic_instance_has_no_condorcet_winner():
    # 0 beats 1, 1 beats 2, 2 beats 0
    profile = pair_profile({(0, 1): (0.7, 0.3), (1, 2): (0.7, 0.3), (0, 2): (0.3, 0.7)})
    assert find_gcw(profile) is None


def test_gaussian_forced_profile_smalln_exhaustive():
    for seed in range(3):
        spec = EnvironmentSpec(kind="gaussian-subset", n=7, k=3, seed=seed)
        env = build_environment(spec)
        lazy = env.latent_limits()
        table = {q: lazy.limit_vector(q) for q in all_query_sets_up_to(7, 3)}
        explicit = LimitProfile(n=7, k=3, rate=SQRT_RATE, limits=table)
        assert find_gcw(explicit) == env.true_best()


def test_generative_profile_uses_declared_winner():
    spec = EnvironmentSpec(kind="gaussian-subset", n=40, k=5, seed=2)
    profile = build_environment(spec).latent_limits()
    assert find_gcw(profile) == profile.declared_gcw


def test_all_equal_limits_everyone_wins_borda_and_copeland():
    table = {q: (0.5, 0.5) for q in enumerate_query_sets(4, 2)}
    profile = LimitProfile(n=4, k=2, rate=SQRT_RATE, limits=table)
    report = find_gbw_gcopew(profile)
    assert report.gbw_set == (0, 1, 2, 3)
    assert report.gcopew_set == (0, 1, 2, 3)
    assert report.gcw is None  # ties violate strict dominance


def test_distinct_borda_and_condorcet_winners():
    # forced construction: arm 1's mean is lifted by 2*eps on every pair
    # avoiding arm 0, which wins all its own pairs by eps
    spec = EnvironmentSpec(kind="gaussian-subset", n=6, k=2, seed=11,
                           force_distinct_gbw=True)
    env = build_environment(spec)
    lazy = env.latent_limits()
    table = {q: lazy.limit_vector(q) for q in enumerate_query_sets(6, 2)}
    profile = LimitProfile(n=6, k=2, rate=SQRT_RATE, limits=table)
    report = find_gbw_gcopew(profile)
    assert report.gcw == env.i_star
    assert report.gbw_set == (env.i_borda,)
    assert report.gcw not in report.gbw_set


def test_scores_live_in_their_ranges():
    profile = pair_profile(hand_borda_table())
    report = find_gbw_gcopew(profile)
    lows = min(min(v) for v in profile.limits.values())
    highs = max(max(v) for v in profile.limits.values())
    for b in report.borda_scores:
        assert lows <= b <= highs
    for c in report.copeland_scores:
        assert 0.0 <= c <= 1.0


def test_reports_are_deterministic():
    profile = pair_profile(hand_borda_table())
    assert find_gbw_gcopew(profile) == find_gbw_gcopew(profile)
