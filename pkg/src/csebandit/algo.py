"""Learners: the generic combinatorial successive elimination loop with its
winner-stays / reject-worst / halving schedules, the Borda round-robin
baseline, and the single-arm successive-halving baseline for race feedback.

The elimination loop follows the two-phase structure: while at least k arms
are active, partition them into size-k blocks (a short final block is carried
unplayed into the next round), query each full block b_r = floor(B / (P_r R))
times and keep the best f(k) arms per block; once fewer than k arms remain,
repeatedly eliminate from the whole remaining set until one arm is left.

One deliberate guard sits on top: when the loop reaches the last scheduled
round with every active arm fitting into a single query set, that round keeps
exactly one arm.  Without it, halving schedules with odd k exceed their own
round budget (the schedule's round count assumes per-round halving, which
ceil(k/2)-of-k survival does not deliver); the guard closes the run inside
R rounds whenever that is structurally possible.  Runs that still overflow
(only possible for odd k and large n) are flagged ``round_cap_exceeded``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    BudgetExhaustedError,
    EliminationPolicy,
    InvalidDimensionError,
    LimitProfile,
    ParameterError,
    QuerySet,
    Schedule,
    UnsupportedEnvironmentError,
)
from .env import CensoredRaceEnvironment, Environment
from .stats import StatisticKind, StatisticState, empirical_borda

SORTED = "sorted"
SEEDED_SHUFFLE = "seeded-shuffle"
LOWEST_INDEX = "lowest-index"
SEEDED_RANDOM = "seeded-random"


@dataclass(frozen=True)
class RunConfig:
    budget: int
    schedule: Schedule
    statistic: StatisticKind
    partition_order: str = SEEDED_SHUFFLE
    tie_break: str = LOWEST_INDEX
    seed: int = 0

    def __post_init__(self):
        if self.budget < 1:
            raise ParameterError(f"budget must be >= 1 (got {self.budget})")
        if self.partition_order not in (SORTED, SEEDED_SHUFFLE):
            raise ParameterError(f"unknown partition order {self.partition_order!r}")
        if self.tie_break not in (LOWEST_INDEX, SEEDED_RANDOM):
            raise ParameterError(f"unknown tie break {self.tie_break!r}")


@dataclass(frozen=True)
class RoundLog:
    round_index: int
    per_block_budget: int
    blocks: tuple[QuerySet, ...]
    keeps: tuple[int, ...]
    remainder: tuple[int, ...]
    forced_finish: bool


@dataclass(frozen=True)
class RunRecord:
    returned_arm: int
    pulls_used: int
    distinct_query_sets: int
    rounds_executed: int
    rounds: tuple[RoundLog, ...]
    simulated_wallclock: float
    flags: tuple[str, ...]

    def block_of(self, arm: int, round_index: int) -> QuerySet | None:
        """The played block containing ``arm`` in the given round, if any."""
        for log in self.rounds:
            if log.round_index == round_index:
                for q in log.blocks:
                    if arm in q:
                        return q
        return None


def _tie_order(arms, rng: np.random.Generator | None, tie_break: str) -> dict[int, int]:
    ordered = sorted(arms)
    if tie_break == SEEDED_RANDOM:
        if rng is None:
            raise ParameterError("seeded-random tie break needs a generator")
        ordered = [ordered[i] for i in rng.permutation(len(ordered))]
    return {arm: pos for pos, arm in enumerate(ordered)}


def arm_elimination(
    arms,
    pulls: int,
    keep: int,
    env: Environment,
    statistic: StatisticKind,
    states: dict[QuerySet, StatisticState] | None = None,
    tie_break: str = LOWEST_INDEX,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Query the arm set ``pulls`` times and keep the ``keep`` best.

    Ranking is by the running statistic after the pulls, ties broken by the
    tie rule.  ``pulls == 0`` selects by the tie rule alone.  Statistic state
    is shared through ``states`` so re-queried sets continue accumulating.
    """
    arms = tuple(sorted(arms))
    if len(arms) < 2:
        raise InvalidDimensionError(f"elimination needs at least 2 arms, got {arms}")
    if not 1 <= keep <= len(arms) - 1:
        raise ParameterError(f"keep={keep} invalid for {len(arms)} arms")
    tie_pos = _tie_order(arms, rng, tie_break)
    if pulls == 0:
        return sorted(arms, key=lambda a: tie_pos[a])[:keep]
    q = QuerySet(arms)
    if states is None:
        states = {}
    state = states.get(q)
    if state is None:
        state = StatisticState(statistic, q)
        states[q] = state
    try:
        obs = env.pull_batch(q, pulls)
    except BudgetExhaustedError as exc:
        if exc.partial is not None:
            state.update(exc.partial)
        raise
    state.update(obs)
    values = state.values()
    ranked = sorted(arms, key=lambda a: (-values[q.index(a)], tie_pos[a]))
    return ranked[:keep]


def _best_effort_arm(
    active, states: dict[QuerySet, StatisticState], tie_break: str, rng
) -> int:
    """Fallback winner when the budget dies mid-run: best current statistic
    among the active arms, falling back to the tie rule when nothing was seen."""
    best, best_val = None, -math.inf
    for q, state in states.items():
        if state.t == 0:
            continue
        values = state.values()
        for arm in q:
            if arm in active and values[q.index(arm)] > best_val:
                best, best_val = arm, values[q.index(arm)]
    if best is not None:
        return best
    tie_pos = _tie_order(active, rng, tie_break)
    return min(active, key=lambda a: tie_pos[a])


def run_cse(config: RunConfig, env: Environment, enforce_cap: bool = True) -> RunRecord:
    """One full combinatorial successive elimination run."""
    schedule = config.schedule
    n, k = env.n, env.k
    if config.statistic.name not in env.supported_statistics:
        raise UnsupportedEnvironmentError(
            f"{env.spec.kind} feedback does not drive the {config.statistic.name} statistic"
        )
    schedule.policy.validate(k)
    if enforce_cap:
        env.set_budget_cap(env.ledger.total_pulls + config.budget)
    start_pulls = env.ledger.total_pulls
    start_clock = env.ledger.simulated_wallclock
    rng = np.random.default_rng(np.random.SeedSequence([config.seed & 0x7FFFFFFFFFFFFFFF, 11]))
    states: dict[QuerySet, StatisticState] = {}
    flags: list[str] = []
    logs: list[RoundLog] = []
    active = list(range(n))
    r = 1
    try:
        while len(active) > 1:
            b_r = schedule.per_partition_budget(config.budget, r)
            if b_r == 0 and "b_r_zero_uninformed" not in flags:
                flags.append("b_r_zero_uninformed")
            if r > schedule.rounds and "round_cap_exceeded" not in flags:
                flags.append("round_cap_exceeded")
            natural_keep = schedule.policy(min(len(active), k))
            if r >= schedule.rounds and len(active) <= k and natural_keep > 1:
                # final-round contraction: close out within the scheduled rounds
                block = tuple(sorted(active))
                survivors = arm_elimination(
                    block, b_r, 1, env, config.statistic, states, config.tie_break, rng
                )
                logs.append(RoundLog(r, b_r, (QuerySet(block),), (1,), (), True))
                active = sorted(survivors)
            elif len(active) >= k:
                ordered = sorted(active)
                if config.partition_order == SEEDED_SHUFFLE:
                    ordered = [ordered[i] for i in rng.permutation(len(ordered))]
                chunks = [ordered[i : i + k] for i in range(0, len(ordered), k)]
                remainder: tuple[int, ...] = ()
                if len(chunks[-1]) < k:
                    remainder = tuple(sorted(chunks.pop()))
                next_active = list(remainder)
                blocks, keeps = [], []
                for chunk in chunks:
                    keep = schedule.policy(k)
                    survivors = arm_elimination(
                        chunk, b_r, keep, env, config.statistic, states, config.tie_break, rng
                    )
                    blocks.append(QuerySet(chunk))
                    keeps.append(keep)
                    next_active.extend(survivors)
                logs.append(RoundLog(r, b_r, tuple(blocks), tuple(keeps), remainder, False))
                active = sorted(next_active)
            else:
                block = tuple(sorted(active))
                keep = schedule.policy(len(active))
                survivors = arm_elimination(
                    block, b_r, keep, env, config.statistic, states, config.tie_break, rng
                )
                logs.append(RoundLog(r, b_r, (QuerySet(block),), (keep,), (), False))
                active = sorted(survivors)
            r += 1
        returned = active[0]
    except BudgetExhaustedError:
        flags.append("budget_exhausted")
        returned = _best_effort_arm(active, states, config.tie_break, rng)
    return RunRecord(
        returned_arm=returned,
        pulls_used=env.ledger.total_pulls - start_pulls,
        distinct_query_sets=env.ledger.distinct_query_sets,
        rounds_executed=len(logs),
        rounds=tuple(logs),
        simulated_wallclock=env.ledger.simulated_wallclock - start_clock,
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def ceil_log(n: int, base: int) -> int:
    """Smallest m >= 0 with base**m >= n, by exact integer arithmetic."""
    if n < 1 or base < 2:
        raise ParameterError(f"ceil_log needs n >= 1 and base >= 2 (n={n}, base={base})")
    m, v = 0, 1
    while v < n:
        v *= base
        m += 1
    return m


def csr_first_loop_rounds(n: int, k: int) -> int:
    """Smallest m >= 0 with n * ((k-1)/k)**m <= 1, by exact integer arithmetic."""
    m = 0
    while n * (k - 1) ** m > k**m:
        m += 1
    return m


def schedule_for(variant: str, n: int, k: int) -> Schedule:
    """The three published schedules, computed without floating-point logs."""
    if not 2 <= k <= n:
        raise InvalidDimensionError(f"need 2 <= k <= n (n={n}, k={k})")
    variant = variant.lower()
    if variant == "csws":
        rounds = ceil_log(n, k) + 1
        parts = tuple(_ceil_div(n, k**r) for r in range(1, rounds + 1))
        return Schedule(rounds, parts, EliminationPolicy.winner_stays(), "CSWS")
    if variant == "csr":
        rounds = csr_first_loop_rounds(n, k) + k - 1
        parts = tuple(
            _ceil_div(n * (k - 1) ** (r - 1), k**r) for r in range(1, rounds + 1)
        )
        return Schedule(rounds, parts, EliminationPolicy.reject_worst(), "CSR")
    if variant == "csh":
        rounds = ceil_log(n, 2) + ceil_log(k, 2)
        parts = tuple(_ceil_div(n, 2 ** (r - 1) * k) for r in range(1, rounds + 1))
        return Schedule(rounds, parts, EliminationPolicy.halving(), "CSH")
    raise ParameterError(f"unknown variant {variant!r} (expected csws, csr or csh)")


# ---------------------------------------------------------------------------
# Dry run: partition trace against ground-truth limits
# ---------------------------------------------------------------------------


class _LimitOracleEnvironment(Environment):
    """Internal environment whose observations are the exact limits.

    Running it through the real elimination loop yields the idealized
    partition trajectory (every comparison resolved by the true limit order),
    which is what sufficient-budget formulas quantify over.
    """

    def __init__(self, profile: LimitProfile):
        spec = type("spec", (), {})()  # lightweight stand-in; never serialized
        spec.kind = "limit-oracle"
        spec.n, spec.k, spec.seed = profile.n, profile.k, 0
        self.spec = spec
        self.n, self.k = profile.n, profile.k
        from .env import PullLedger

        self.ledger = PullLedger()
        self.budget_cap = None
        self.profile = profile

    def _draw(self, q: QuerySet, start: int, count: int) -> np.ndarray:
        vals = np.asarray(self.profile.limit_vector(q), dtype=float)
        return np.broadcast_to(vals, (count, len(q))).copy()

    def latent_limits(self) -> LimitProfile:
        return self.profile

    def true_best(self) -> int:
        if self.profile.declared_gcw is None:
            raise UnsupportedEnvironmentError("profile declares no winner")
        return self.profile.declared_gcw

    @property
    def supported_statistics(self) -> tuple[str, ...]:
        return ("empirical-mean",)


def partition_trace(
    profile: LimitProfile, schedule: Schedule, arm: int
) -> list[tuple[int, QuerySet, int]]:
    """(round, block, keep) entries for the rounds in which ``arm`` is played,
    from a sorted-mode dry run driven by the exact limits."""
    oracle = _LimitOracleEnvironment(profile)
    config = RunConfig(
        budget=schedule.rounds * max(schedule.partitions),
        schedule=schedule,
        statistic=StatisticKind.empirical_mean(),
        partition_order=SORTED,
        tie_break=LOWEST_INDEX,
    )
    record = run_cse(config, oracle, enforce_cap=False)
    trace = []
    for log in record.rounds:
        for q, keep in zip(log.blocks, log.keeps):
            if arm in q:
                trace.append((log.round_index, q, keep))
    return trace


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def run_round_robin(
    budget: int,
    env: Environment,
    statistic: StatisticKind,
    enumeration_order: str = "shuffle",
    seed: int = 0,
    max_materialized: int = 200_000,
) -> RunRecord:
    """Cycle through the size-k sets, one pull each per cycle, then return the
    arm with the best empirical Borda score over everything observed."""
    if budget < 1:
        raise ParameterError(f"budget must be >= 1 (got {budget})")
    if statistic.name not in env.supported_statistics:
        raise UnsupportedEnvironmentError(
            f"{env.spec.kind} feedback does not drive the {statistic.name} statistic"
        )
    if enumeration_order not in ("lex", "shuffle"):
        raise ParameterError(f"unknown enumeration order {enumeration_order!r}")
    n, k = env.n, env.k
    env.set_budget_cap(env.ledger.total_pulls + budget)
    start_pulls = env.ledger.total_pulls
    start_clock = env.ledger.simulated_wallclock
    total_sets = math.comb(n, k)
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0x7FFFFFFFFFFFFFFF, 13]))
    from .core import enumerate_query_sets

    if total_sets <= max_materialized:
        sequence = list(enumerate_query_sets(n, k))
        if enumeration_order == "shuffle":
            sequence = [sequence[i] for i in rng.permutation(total_sets)]
    else:
        wanted = min(budget, total_sets)
        if enumeration_order == "lex":
            gen = enumerate_query_sets(n, k)
            sequence = [next(gen) for _ in range(wanted)]
        else:
            seen: set[tuple[int, ...]] = set()
            sequence = []
            while len(sequence) < wanted:
                pick = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
                if pick not in seen:
                    seen.add(pick)
                    sequence.append(QuerySet(pick))
    states: dict[QuerySet, StatisticState] = {}
    flags: list[str] = []
    base, extra = divmod(budget, len(sequence))
    for idx, q in enumerate(sequence):
        pulls = base + (1 if idx < extra else 0)
        if pulls == 0:
            break
        state = states.get(q)
        if state is None:
            state = StatisticState(statistic, q)
            states[q] = state
        state.update(env.pull_batch(q, pulls))
    if budget < total_sets:
        flags.append("partial_coverage")
    scores: dict[int, float] = {}
    for arm in range(n):
        try:
            scores[arm] = empirical_borda(states, arm)
        except Exception:
            continue
    if not scores:
        raise ParameterError("round robin observed no arms; budget too small")
    best = min(scores, key=lambda a: (-scores[a], a))
    return RunRecord(
        returned_arm=best,
        pulls_used=env.ledger.total_pulls - start_pulls,
        distinct_query_sets=env.ledger.distinct_query_sets,
        rounds_executed=_ceil_div(budget, len(sequence)),
        rounds=(),
        simulated_wallclock=env.ledger.simulated_wallclock - start_clock,
        flags=tuple(flags),
    )


def run_sh_baseline(effective_budget: int, n: int, env: Environment) -> RunRecord:
    """Classic single-arm successive halving on raw runtimes (lower is better).

    Only the censored-race environment supports singleton pulls; each pull
    charges the arm's full runtime to the simulated wall clock, which is the
    structural handicap the set-racing learners avoid.
    """
    if not isinstance(env, CensoredRaceEnvironment):
        raise UnsupportedEnvironmentError("the single-arm baseline needs a race environment")
    if effective_budget < 1:
        raise ParameterError(f"budget must be >= 1 (got {effective_budget})")
    env.set_budget_cap(env.ledger.total_pulls + effective_budget)
    start_pulls = env.ledger.total_pulls
    start_clock = env.ledger.simulated_wallclock
    rounds_total = max(1, ceil_log(n, 2))
    survivors = list(range(n))
    totals = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    flags: list[str] = []
    rounds_executed = 0
    try:
        while len(survivors) > 1:
            pulls = effective_budget // (len(survivors) * rounds_total)
            if pulls == 0:
                if "b_r_zero_uninformed" not in flags:
                    flags.append("b_r_zero_uninformed")
            else:
                for arm in survivors:
                    runtimes = env.pull_single_batch(arm, pulls)
                    totals[arm] += runtimes.sum()
                    counts[arm] += len(runtimes)
            keep = _ceil_div(len(survivors), 2)

            def mean_runtime(arm: int) -> float:
                return totals[arm] / counts[arm] if counts[arm] else math.inf

            survivors = sorted(survivors, key=lambda a: (mean_runtime(a), a))[:keep]
            rounds_executed += 1
        returned = survivors[0]
    except BudgetExhaustedError:
        flags.append("budget_exhausted")
        returned = min(
            survivors,
            key=lambda a: (totals[a] / counts[a] if counts[a] else math.inf, a),
        )
    return RunRecord(
        returned_arm=returned,
        pulls_used=env.ledger.total_pulls - start_pulls,
        distinct_query_sets=env.ledger.distinct_query_sets,
        rounds_executed=rounds_executed,
        rounds=(),
        simulated_wallclock=env.ledger.simulated_wallclock - start_clock,
        flags=tuple(flags),
    )
