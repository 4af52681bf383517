"""Shared vocabulary for budgeted subset-feedback bandits.

Conventions used throughout the package:

- Arms are plain integer indices in ``[0, n)``.
- A query set is an immutable, canonically sorted tuple of 2..k distinct arms
  (:class:`QuerySet`).  Pulling a query set yields one observation per member
  arm, aligned with the sorted arm order.
- A rate function ``gamma(t)`` is a non-increasing envelope of the distance
  between a running statistic and its limit; its quasi-inverse
  ``rate_inverse(gamma, alpha) = min{t >= 1 : gamma(t) <= alpha}`` converts a
  target accuracy into a pull count.
- A :class:`LimitProfile` stores the ground-truth limit value of every arm in
  every query set (explicitly for small instances, via a generative rule for
  large ones) together with one rate function.

Everything in this module is an immutable value; operations are pure.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass, field


class BanditError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(BanditError, ValueError):
    """A size/shape precondition was violated (k out of range, misaligned vector)."""


class DomainError(BanditError, ValueError):
    """An observation lies outside the statistic's expected domain."""


class HorizonExceededError(BanditError):
    """A rate function never reached the requested accuracy within the horizon."""


class NoDataError(BanditError):
    """A statistic was read before any observation arrived."""


class BudgetExhaustedError(BanditError):
    """A pull was requested beyond the harness-imposed budget cap.

    ``partial`` carries observations drawn before the cap bound, if any.
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedEnvironmentError(BanditError):
    """The requested operation is not defined for this environment kind."""


class InvalidProfileError(BanditError):
    """A limit profile violates a precondition (missing GCW, ties, Borda tie)."""


class ParameterError(BanditError, ValueError):
    """A numeric parameter is outside its admissible domain."""


RATE_INVERSE_HORIZON = 10**9


@dataclass(frozen=True, order=True)
class QuerySet:
    """A canonically sorted set of 2..k distinct arms; the unit of one pull."""

    arms: tuple[int, ...]

    def __init__(self, arms):
        canonical = tuple(sorted(int(a) for a in arms))
        if len(canonical) < 2:
            raise InvalidDimensionError(f"query set needs at least 2 arms, got {canonical}")
        if len(set(canonical)) != len(canonical):
            raise InvalidDimensionError(f"duplicate arms in query set {canonical}")
        if canonical[0] < 0:
            raise InvalidDimensionError(f"negative arm index in {canonical}")
        object.__setattr__(self, "arms", canonical)

    def __len__(self) -> int:
        return len(self.arms)

    def __iter__(self) -> Iterator[int]:
        return iter(self.arms)

    def __contains__(self, arm: int) -> bool:
        return arm in self.arms

    def index(self, arm: int) -> int:
        return self.arms.index(arm)

    def key(self) -> str:
        """Stable string form used for JSON map keys, e.g. ``"0,2,5"``."""
        return ",".join(str(a) for a in self.arms)

    @staticmethod
    def from_key(key: str) -> "QuerySet":
        return QuerySet(int(tok) for tok in key.split(","))

    def __repr__(self) -> str:
        return f"QuerySet({self.key()})"


def enumerate_query_sets(n: int, k: int, containing: int | None = None) -> Iterator[QuerySet]:
    """Yield every size-``k`` subset of ``[0, n)`` once, in lexicographic order.

    With ``containing`` set, only subsets including that arm are yielded
    (C(n-1, k-1) of them); order stays lexicographic.
    """
    if k < 2 or k > n:
        raise InvalidDimensionError(f"subset size k={k} must satisfy 2 <= k <= n={n}")
    if containing is None:
        for combo in itertools.combinations(range(n), k):
            yield QuerySet(combo)
        return
    if not 0 <= containing < n:
        raise InvalidDimensionError(f"arm {containing} outside [0, {n})")
    others = [a for a in range(n) if a != containing]
    for combo in itertools.combinations(others, k - 1):
        yield QuerySet(combo + (containing,))


def all_query_sets_up_to(n: int, k: int, containing: int | None = None) -> Iterator[QuerySet]:
    """Every subset of size 2..k (the full action space for max size k)."""
    for size in range(2, k + 1):
        yield from enumerate_query_sets(n, size, containing)


@dataclass(frozen=True)
class RateFunction:
    """Non-increasing convergence-rate envelope, restricted to three checkable kinds.

    kinds:
      - ``power-law``:   gamma(t) = c * t**(-p), c > 0, p > 0
      - ``reciprocal``:  gamma(t) = amplitude / t
      - ``table``:       gamma(t) = values[t-1], held constant past the end
    """

    kind: str
    c: float = 1.0
    p: float = 0.5
    amplitude: float = 1.0
    values: tuple[float, ...] = ()

    @staticmethod
    def power_law(c: float, p: float) -> "RateFunction":
        if c <= 0 or p <= 0:
            raise ParameterError(f"power-law rate needs c > 0, p > 0 (got c={c}, p={p})")
        return RateFunction(kind="power-law", c=float(c), p=float(p))

    @staticmethod
    def reciprocal(amplitude: float) -> "RateFunction":
        if amplitude <= 0:
            raise ParameterError(f"reciprocal rate needs amplitude > 0 (got {amplitude})")
        return RateFunction(kind="reciprocal", amplitude=float(amplitude))

    @staticmethod
    def table(values) -> "RateFunction":
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ParameterError("table rate needs at least one value")
        if any(v < 0 for v in vals):
            raise ParameterError("table rate values must be non-negative")
        for a, b in zip(vals, vals[1:]):
            if b > a:
                raise ParameterError("table rate must be non-increasing")
        return RateFunction(kind="table", values=vals)

    def __call__(self, t: int) -> float:
        if t < 1:
            raise ParameterError(f"rate functions are defined on t >= 1 (got {t})")
        if self.kind == "power-law":
            return self.c * float(t) ** (-self.p)
        if self.kind == "reciprocal":
            return self.amplitude / t
        if self.kind == "table":
            return self.values[min(t, len(self.values)) - 1]
        raise ParameterError(f"unknown rate kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "power-law":
            return {"kind": "power-law", "c": self.c, "p": self.p}
        if self.kind == "reciprocal":
            return {"kind": "reciprocal", "amplitude": self.amplitude}
        return {"kind": "table", "values": list(self.values)}

    @staticmethod
    def from_json(doc: Mapping) -> "RateFunction":
        kind = doc["kind"]
        if kind == "power-law":
            return RateFunction.power_law(doc["c"], doc["p"])
        if kind == "reciprocal":
            return RateFunction.reciprocal(doc["amplitude"])
        if kind == "table":
            return RateFunction.table(doc["values"])
        raise ParameterError(f"unknown rate kind {kind!r}")


def rate_inverse(rate: RateFunction, alpha: float, horizon: int = RATE_INVERSE_HORIZON) -> int:
    """Smallest t >= 1 with rate(t) <= alpha.

    Power-law and reciprocal kinds start from the closed form and correct the
    float boundary locally so the exactness contract (rate(t*) <= alpha and
    rate(t*-1) > alpha) always holds.  Table kinds use doubling-then-bisection
    over the monotone prefix and fail with :class:`HorizonExceededError` when
    the held tail never drops to alpha.
    """
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive (got {alpha})")
    if rate(1) <= alpha:
        return 1
    if rate.kind in ("power-law", "reciprocal"):
        if rate.kind == "power-law":
            guess = (rate.c / alpha) ** (1.0 / rate.p)
        else:
            guess = rate.amplitude / alpha
        t = max(1, math.ceil(guess))
        while t > 1 and rate(t - 1) <= alpha:
            t -= 1
        while rate(t) > alpha:
            t += 1
        if t > horizon:
            raise HorizonExceededError(f"rate never reached {alpha} within horizon {horizon}")
        return t
    # table kind: constant past the end, so check the tail first
    if rate(len(rate.values)) > alpha:
        raise HorizonExceededError(
            f"table rate stays above {alpha} forever (tail={rate.values[-1]})"
        )
    lo, hi = 1, 1
    while rate(hi) > alpha:
        lo, hi = hi, min(hi * 2, len(rate.values))
    while lo < hi:
        mid = (lo + hi) // 2
        if rate(mid) <= alpha:
            hi = mid
        else:
            lo = mid + 1
    return lo


@dataclass(frozen=True)
class EliminationPolicy:
    """A keep-count rule f: block size -> number of survivors, with f(x) <= x-1."""

    name: str
    keep: Callable[[int], int]

    def __call__(self, size: int) -> int:
        kept = self.keep(size)
        if not 1 <= kept <= size - 1:
            raise ParameterError(
                f"policy {self.name!r} returned keep={kept} for block size {size}"
            )
        return kept

    def validate(self, k: int) -> None:
        for x in range(2, k + 1):
            self(x)

    @staticmethod
    def winner_stays() -> "EliminationPolicy":
        return EliminationPolicy("winner-stays", lambda s: 1)

    @staticmethod
    def reject_worst() -> "EliminationPolicy":
        return EliminationPolicy("reject-worst", lambda s: s - 1)

    @staticmethod
    def halving() -> "EliminationPolicy":
        return EliminationPolicy("halving", lambda s: -(-s // 2))


@dataclass(frozen=True)
class Schedule:
    """(R, P_1..P_R, keep rule) triple parameterizing one elimination run."""

    rounds: int
    partitions: tuple[int, ...]
    policy: EliminationPolicy
    name: str = "custom"

    def __post_init__(self):
        if self.rounds < 1:
            raise ParameterError(f"need at least one round (got {self.rounds})")
        if len(self.partitions) != self.rounds:
            raise ParameterError(
                f"schedule needs one partition count per round "
                f"({self.rounds} rounds, {len(self.partitions)} entries)"
            )
        if any(p < 1 for p in self.partitions):
            raise ParameterError(f"partition counts must be >= 1: {self.partitions}")
        if any(b > a for a, b in zip(self.partitions, self.partitions[1:])):
            raise ParameterError(f"partition counts must be non-increasing: {self.partitions}")

    def partition_count(self, round_index: int) -> int:
        """Schedule value P_r, clamped to the last entry past round R."""
        return self.partitions[min(round_index, self.rounds) - 1]

    def per_partition_budget(self, total_budget: int, round_index: int) -> int:
        """b_r = floor(B / (P_r * R)) with the schedule value P_r."""
        return total_budget // (self.partition_count(round_index) * self.rounds)


@dataclass(frozen=True)
class LimitProfile:
    """Ground-truth limits S_{i|Q} plus a single rate function.

    Small instances carry an explicit ``limits`` table mapping each QuerySet to
    the per-arm limit tuple (aligned with the set's sorted arms).  Large
    instances supply ``limit_fn`` instead and must declare their GCW, since
    exhaustive verification is then impossible.
    """

    n: int
    k: int
    rate: RateFunction
    limits: Mapping[QuerySet, tuple[float, ...]] | None = None
    limit_fn: Callable[[QuerySet], tuple[float, ...]] | None = field(default=None, compare=False)
    declared_gcw: int | None = None

    def __post_init__(self):
        if self.n < 2 or not 2 <= self.k <= self.n:
            raise InvalidDimensionError(f"need n >= 2 and 2 <= k <= n (n={self.n}, k={self.k})")
        if self.limits is None and self.limit_fn is None:
            raise InvalidProfileError("profile needs an explicit table or a generative rule")
        if self.limits is not None:
            for q, vals in self.limits.items():
                if len(vals) != len(q):
                    raise InvalidProfileError(f"{q} has {len(q)} arms but {len(vals)} limits")

    @property
    def enumerable(self) -> bool:
        return self.limits is not None

    def limit_vector(self, q: QuerySet) -> tuple[float, ...]:
        if self.limits is not None:
            try:
                return self.limits[q]
            except KeyError:
                raise InvalidProfileError(f"profile has no limits for {q}") from None
        return tuple(self.limit_fn(q))

    def limit_of(self, q: QuerySet, arm: int) -> float:
        return self.limit_vector(q)[q.index(arm)]

    def order_statistic(self, q: QuerySet, l: int) -> float:
        """l-th largest limit within q (1-indexed: l=1 is the maximum)."""
        vals = sorted(self.limit_vector(q), reverse=True)
        if not 1 <= l <= len(vals):
            raise ParameterError(f"order statistic index {l} outside 1..{len(vals)}")
        return vals[l - 1]

    def gap(self, q: QuerySet, i_star: int, l: int) -> float:
        """Delta_(l)|Q = S_{i*|Q} - S_(l)|Q for a set containing i_star."""
        return self.limit_of(q, i_star) - self.order_statistic(q, l)

    def is_gcw_on(self, q: QuerySet, arm: int) -> bool:
        vals = self.limit_vector(q)
        own = vals[q.index(arm)]
        return all(own > v for j, v in zip(q, vals) if j != arm)

    def verify_gcw(self, arm: int, sample_sets: int = 1000, seed: int = 0) -> bool:
        """Check strict dominance of ``arm`` on every set containing it.

        Exhaustive when the profile is an explicit table; on generative
        profiles a seeded sample of ``sample_sets`` subsets is checked instead.
        Ties count as violations.
        """
        if self.limits is not None:
            return all(
                self.is_gcw_on(q, arm)
                for q in all_query_sets_up_to(self.n, self.k, containing=arm)
                if q in self.limits
            )
        import numpy as np

        rng = np.random.default_rng(seed)
        others = [a for a in range(self.n) if a != arm]
        for _ in range(sample_sets):
            size = int(rng.integers(2, self.k + 1))
            members = rng.choice(others, size=size - 1, replace=False)
            q = QuerySet(tuple(int(m) for m in members) + (arm,))
            if not self.is_gcw_on(q, arm):
                return False
        return True
