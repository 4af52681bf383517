"""Closed-form budget quantities: per-round allocations, sufficient budgets,
worst-case lower bounds, stochastic sufficiency constants, and query-set
count bounds.

All schedule arithmetic is exact integer arithmetic (repeated multiplication
and comparison); floating point appears only inside rate-function inversions
and the stochastic constants, where it is the quantity itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .core import (
    InvalidProfileError,
    LimitProfile,
    ParameterError,
    QuerySet,
    Schedule,
    all_query_sets_up_to,
    enumerate_query_sets,
    rate_inverse,
)
from .algo import ceil_log, csr_first_loop_rounds, partition_trace, schedule_for

ENUMERATION_LIMIT = 500_000


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


@dataclass(frozen=True)
class BudgetReport:
    variant: str
    n: int
    k: int
    rounds: int
    partitions: tuple[int, ...]
    max_distinct_query_sets: int
    budget: int | None = None
    per_round_budgets: tuple[int, ...] | None = None
    sufficient_budget: int | None = None
    lower_bound_gcw: int | None = None
    lower_bound_gbw_gcopew: int | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_json(self) -> dict[str, Any]:
        return {
            "variant": self.variant,
            "n": self.n,
            "k": self.k,
            "rounds": self.rounds,
            "partitions": list(self.partitions),
            "max_distinct_query_sets": self.max_distinct_query_sets,
            "budget": self.budget,
            "per_round_budgets": (
                None if self.per_round_budgets is None else list(self.per_round_budgets)
            ),
            "sufficient_budget": self.sufficient_budget,
            "lower_bound_gcw": self.lower_bound_gcw,
            "lower_bound_gbw_gcopew": self.lower_bound_gbw_gcopew,
            "notes": list(self.notes),
        }


def _profile_sets(profile: LimitProfile, containing: int | None = None) -> list[QuerySet]:
    if profile.enumerable:
        sets = list(profile.limits)
    else:
        total = sum(math.comb(profile.n, s) for s in range(2, profile.k + 1))
        if total > ENUMERATION_LIMIT:
            raise InvalidProfileError(
                f"profile spans {total} sets; pass an explicit set family instead"
            )
        sets = list(all_query_sets_up_to(profile.n, profile.k))
    if containing is not None:
        sets = [q for q in sets if containing in q]
    return sets


def _require_gcw(profile: LimitProfile) -> int:
    if profile.declared_gcw is None:
        raise InvalidProfileError("profile declares no generalized Condorcet winner")
    return profile.declared_gcw


def sufficient_budget_z(
    schedule: Schedule, profile: LimitProfile, trace=None
) -> int:
    """Generic sufficient budget z(f, R, {P_r}) over the winner's block trace.

    ``trace`` is a sequence of (round, block, keep) entries for the rounds in
    which the winner's block is actually played; by default it comes from a
    sorted-mode dry run against the exact limits.  One entry contributes
    P_r * ceil(rate_inverse(rate, gap/2)) with the (keep+1)-th order-statistic
    gap of its block; z is R times the largest contribution.
    """
    i_star = _require_gcw(profile)
    if trace is None:
        trace = partition_trace(profile, schedule, i_star)
    if not trace:
        raise InvalidProfileError("empty partition trace; the winner is never played")
    worst = 0
    for round_index, block, keep in trace:
        gap = profile.gap(block, i_star, keep + 1)
        if gap <= 0:
            raise InvalidProfileError(
                f"(A2) violated on {block}: winner {i_star} does not dominate"
            )
        pulls = rate_inverse(profile.rate, gap / 2.0)
        worst = max(worst, schedule.partition_count(round_index) * pulls)
    return schedule.rounds * worst


def sufficient_budget_table(variant: str, n: int, k: int, profile: LimitProfile) -> int:
    """Per-variant closed forms: ceil(n/k) * R * (worst gap inversion).

    Winner-stays takes the worst gap over every set containing the winner;
    reject-worst needs only the easiest arm of the worst set; halving uses the
    gap to the (floor(|Q|/2)+1)-th best member.
    """
    i_star = _require_gcw(profile)
    variant = variant.lower()
    schedule = schedule_for(variant, n, k)
    sets = _profile_sets(profile, containing=i_star)
    if not sets:
        raise InvalidProfileError("no sets containing the winner are available")
    worst = 0
    for q in sets:
        s_star = profile.limit_of(q, i_star)
        gaps = [s_star - profile.limit_of(q, j) for j in q if j != i_star]
        if min(gaps) <= 0:
            raise InvalidProfileError(f"(A2) violated on {q}")
        if variant == "csws":
            gap = min(gaps)  # slowest arm to separate
        elif variant == "csr":
            gap = max(gaps)  # only the worst arm must separate
        elif variant == "csh":
            gap = s_star - profile.order_statistic(q, len(q) // 2 + 1)
            if gap <= 0:
                raise InvalidProfileError(f"(A2) violated on {q}")
        else:
            raise ParameterError(f"unknown variant {variant!r}")
        worst = max(worst, rate_inverse(profile.rate, gap / 2.0))
    return _ceil_div(n, k) * schedule.rounds * worst


def borda_limits(profile: LimitProfile) -> list[float]:
    """Asymptotic Borda scores: per-arm averages over all size-k sets."""
    n, k = profile.n, profile.k
    if math.comb(n, k) > ENUMERATION_LIMIT:
        raise InvalidProfileError(f"C({n},{k}) too large to enumerate Borda scores")
    totals = [0.0] * n
    for q in enumerate_query_sets(n, k):
        vals = profile.limit_vector(q)
        for arm, v in zip(q, vals):
            totals[arm] += v
    per_arm = math.comb(n - 1, k - 1)
    return [t / per_arm for t in totals]


def round_robin_budget_z(profile: LimitProfile) -> int:
    """C(n,k) times the worst Borda-gap inversion against the Borda winner."""
    scores = borda_limits(profile)
    best = max(range(profile.n), key=lambda a: scores[a])
    ties = [a for a in range(profile.n) if math.isclose(scores[a], scores[best], rel_tol=1e-12)]
    if len(ties) > 1:
        raise InvalidProfileError(f"Borda winner is not unique (arms {ties})")
    worst = 0
    for rho in range(profile.n):
        if rho == best:
            continue
        gap = (scores[best] - scores[rho]) / 2.0
        worst = max(worst, rate_inverse(profile.rate, gap))
    return math.comb(profile.n, profile.k) * worst


def lower_bound_gcw(profile: LimitProfile, sets=None) -> int:
    """ceil(n/k) times the smallest extreme-gap inversion over the sets.

    Over a generative profile the minimum is restricted to the supplied (or
    enumerated-when-feasible) family, making the result an upper estimate of
    the true bound.
    """
    if sets is None:
        sets = _profile_sets(profile)
    best = None
    for q in sets:
        vals = sorted(profile.limit_vector(q), reverse=True)
        if not vals[0] > vals[1]:
            raise InvalidProfileError(f"top limits tie on {q}")
        inv = rate_inverse(profile.rate, (vals[0] - vals[-1]) / 2.0)
        best = inv if best is None else min(best, inv)
    if best is None:
        raise InvalidProfileError("no sets available for the lower bound")
    return _ceil_div(profile.n, profile.k) * best


def lower_bound_gbw_gcopew(profile: LimitProfile, sets=None) -> int:
    """Concrete constant of the Omega(C(n-1,k-1)) Borda/Copeland bound:
    one quarter of C(n-1,k-1) times the smallest extreme-gap inversion."""
    if sets is None:
        sets = _profile_sets(profile)
    best = None
    for q in sets:
        vals = sorted(profile.limit_vector(q), reverse=True)
        if not vals[0] > vals[1]:
            raise InvalidProfileError(f"top limits tie on {q}")
        inv = rate_inverse(profile.rate, (vals[0] - vals[-1]) / 2.0)
        best = inv if best is None else min(best, inv)
    return (math.comb(profile.n - 1, profile.k - 1) * best) // 4


REWARD = "reward"
PREFERENCE = "preference"


def stochastic_sufficiency(
    setting: str,
    delta: float,
    epsilon: float,
    k: int,
    rounds: int,
    sigma: float | None = None,
) -> int:
    """Per-partition pull count guaranteeing the winner with confidence 1-delta.

    These are the explicit constants behind the sub-Gaussian reward and the
    categorical winner-feedback sufficiency results; multiply by
    R * max_r P_r for the total budget (:func:`stochastic_sufficient_budget`).
    """
    if not 0 < delta < 1:
        raise ParameterError(f"delta must be in (0,1) (got {delta})")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive (got {epsilon})")
    if rounds < 1 or k < 2:
        raise ParameterError(f"need rounds >= 1 and k >= 2 (got {rounds}, {k})")
    if setting == REWARD:
        if sigma is None or sigma <= 0:
            raise ParameterError("the reward setting needs sigma > 0")
        boost = (1.0 + math.sqrt(0.5)) ** 2
        lead = 48.0 * boost * sigma**2 / epsilon**2
        outer = 2.0 * (10.0 * k * rounds) ** (2.0 / 3.0) / (delta ** (2.0 / 3.0) * math.log(1.5))
        inner = (
            72.0
            * (10.0 * k * rounds) ** (2.0 / 3.0)
            * boost
            * sigma**2
            / (delta ** (2.0 / 3.0) * epsilon**2 * math.log(1.5))
        )
        if math.log(inner) <= 0:
            raise ParameterError("parameters degenerate the iterated logarithm")
        return math.ceil(lead * math.log(outer * math.log(inner))) + 1
    if setting == PREFERENCE:
        g = 32.0 * math.sqrt(2.0 * rounds / (3.0 * delta)) * math.pi / epsilon**2
        if math.log(g) <= 0:
            raise ParameterError("parameters degenerate the iterated logarithm")
        return math.ceil((32.0 / epsilon**2) * (math.log(g * math.e) + math.log(math.log(g)))) + 1
    raise ParameterError(f"unknown setting {setting!r} (expected reward or preference)")


def stochastic_sufficient_budget(
    setting: str,
    delta: float,
    epsilon: float,
    k: int,
    schedule: Schedule,
    sigma: float | None = None,
) -> int:
    constant = stochastic_sufficiency(setting, delta, epsilon, k, schedule.rounds, sigma)
    return constant * schedule.rounds * max(schedule.partitions)


def max_query_sets(variant: str, n: int, k: int) -> int:
    """Closed-form upper bounds on the number of distinct sets each learner
    can query (geometric partial sums with ceilings absorbed)."""
    if not 2 <= k <= n:
        raise ParameterError(f"need 2 <= k <= n (n={n}, k={k})")
    variant = variant.lower()
    if variant == "rr":
        return math.comb(n, k)
    if variant == "csws":
        rounds = ceil_log(n, k) + 1
        raw = rounds + n * (1.0 - 1.0 / k ** (ceil_log(n, k) + 1)) / (k - 1)
    elif variant == "csr":
        rounds = csr_first_loop_rounds(n, k) + k - 1
        raw = rounds + n * (1.0 - (1.0 - 1.0 / k) ** rounds)
    elif variant == "csh":
        rounds = ceil_log(n, 2) + ceil_log(k, 2)
        raw = rounds + (2.0 * n / k) * (1.0 - 1.0 / 2.0**rounds)
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    return math.ceil(raw)


def budget_report(
    variant: str,
    n: int,
    k: int,
    budget: int | None = None,
    profile: LimitProfile | None = None,
) -> BudgetReport:
    """Assemble the printable report; gap-dependent fields need a profile."""
    variant = variant.lower()
    notes: list[str] = []
    if variant == "rr":
        rounds, partitions = 1, (math.comb(n, k),)
    else:
        schedule = schedule_for(variant, n, k)
        rounds, partitions = schedule.rounds, schedule.partitions
    per_round = None
    if budget is not None:
        if variant == "rr":
            per_round = (budget // math.comb(n, k),)
        else:
            per_round = tuple(
                schedule.per_partition_budget(budget, r) for r in range(1, rounds + 1)
            )
    sufficient = lb_gcw = lb_borda = None
    if profile is not None:
        if variant == "rr":
            sufficient = round_robin_budget_z(profile)
        else:
            sufficient = sufficient_budget_table(variant, n, k, profile)
        lb_gcw = lower_bound_gcw(profile)
        lb_borda = lower_bound_gbw_gcopew(profile)
        notes.append("lower_bound_gbw_gcopew is the constant of an Omega(C(n-1,k-1)) bound")
    else:
        notes.append("pass a profile to fill the gap-dependent fields")
    return BudgetReport(
        variant=variant,
        n=n,
        k=k,
        rounds=rounds,
        partitions=partitions,
        max_distinct_query_sets=max_query_sets(variant, n, k),
        budget=budget,
        per_round_budgets=per_round,
        sufficient_budget=sufficient,
        lower_bound_gcw=lb_gcw,
        lower_bound_gbw_gcopew=lb_borda,
        notes=tuple(notes),
    )
