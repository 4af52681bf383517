"""Incremental per-(query set, arm) statistics.

A :class:`StatisticState` owns the running aggregate s_{i|Q}(t) for one query
set within one run.  Updates are incremental; ``values()`` always equals the
batch statistic over every observation seen so far (exactly for counts, to
float accumulation error otherwise).
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from .core import DomainError, InvalidDimensionError, NoDataError, ParameterError, QuerySet

MEAN = "empirical-mean"
WINNER = "winner-frequency"
R_TRANSFORM = "r-transform-mean"
MEDIAN = "median"
POWER_MEAN = "power-mean"


@dataclass(frozen=True)
class Transform:
    """A named real-to-real transform from the small machine-checkable family."""

    name: str
    fn: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def identity() -> "Transform":
        return Transform("identity", lambda x: x)

    @staticmethod
    def clip(lo: float, hi: float) -> "Transform":
        if lo >= hi:
            raise ParameterError(f"clip needs lo < hi (got [{lo}, {hi}])")
        return Transform(f"clip[{lo},{hi}]", lambda x: np.clip(x, lo, hi))

    @staticmethod
    def indicator_threshold(theta: float) -> "Transform":
        return Transform(
            f"indicator>={theta}", lambda x: (x >= theta).astype(float)
        )


@dataclass(frozen=True)
class StatisticKind:
    name: str
    q: float = 1.0
    transform: Transform | None = None

    @staticmethod
    def empirical_mean() -> "StatisticKind":
        return StatisticKind(MEAN)

    @staticmethod
    def winner_frequency() -> "StatisticKind":
        return StatisticKind(WINNER)

    @staticmethod
    def r_transform_mean(transform: Transform) -> "StatisticKind":
        return StatisticKind(R_TRANSFORM, transform=transform)

    @staticmethod
    def median() -> "StatisticKind":
        return StatisticKind(MEDIAN)

    @staticmethod
    def power_mean(q: float) -> "StatisticKind":
        if q < 1:
            raise ParameterError(f"power mean needs exponent q >= 1 (got {q})")
        return StatisticKind(POWER_MEAN, q=float(q))


def kind_from_name(name: str, q: float = 2.0) -> StatisticKind:
    """Resolve the CLI/CSV spelling of a statistic kind."""
    if name == MEAN:
        return StatisticKind.empirical_mean()
    if name == WINNER:
        return StatisticKind.winner_frequency()
    if name == MEDIAN:
        return StatisticKind.median()
    if name == POWER_MEAN or name.startswith("power-mean"):
        if ":" in name:
            q = float(name.split(":", 1)[1])
        return StatisticKind.power_mean(q)
    raise ParameterError(f"unknown statistic kind {name!r}")


class StatisticState:
    """Running aggregate for one query set.

    The per-arm value layout follows the set's sorted arm order.  Median keeps
    the full sample (t is bounded by the round budget); everything else keeps
    O(|Q|) running sums or counts.
    """

    def __init__(self, kind: StatisticKind, query_set: QuerySet):
        self.kind = kind
        self.query_set = query_set
        self.t = 0
        width = len(query_set)
        if kind.name in (MEAN, R_TRANSFORM, POWER_MEAN):
            self._sums = np.zeros(width)
        elif kind.name == WINNER:
            self._wins = np.zeros(width, dtype=np.int64)
        elif kind.name == MEDIAN:
            self._samples: list[np.ndarray] = []
        else:
            raise ParameterError(f"unknown statistic kind {kind.name!r}")

    def _check(self, obs: np.ndarray) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        if obs.ndim == 1:
            obs = obs[None, :]
        if obs.shape[1] != len(self.query_set):
            raise InvalidDimensionError(
                f"observation width {obs.shape[1]} != |Q| = {len(self.query_set)}"
            )
        if not np.isfinite(obs).all():
            raise DomainError("observations must be finite")
        if self.kind.name == WINNER:
            if not np.isin(obs, (0.0, 1.0)).all():
                raise DomainError("winner feedback must be 0/1 valued")
            if not (obs.sum(axis=1) == 1.0).all():
                raise DomainError("winner feedback must have exactly one 1 per pull")
        return obs

    def update(self, obs) -> "StatisticState":
        """Fold in observations for the next pull(s); returns self."""
        obs = self._check(obs)
        count = obs.shape[0]
        if self.kind.name == MEAN:
            self._sums += obs.sum(axis=0)
        elif self.kind.name == R_TRANSFORM:
            self._sums += self.kind.transform.fn(obs).sum(axis=0)
        elif self.kind.name == POWER_MEAN:
            self._sums += (obs ** self.kind.q).sum(axis=0)
        elif self.kind.name == WINNER:
            self._wins += obs.astype(np.int64).sum(axis=0)
        else:
            self._samples.append(obs)
        self.t += count
        return self

    def values(self) -> np.ndarray:
        """Per-arm statistic vector after t pulls."""
        if self.t == 0:
            raise NoDataError(f"no observations yet for {self.query_set}")
        if self.kind.name in (MEAN, R_TRANSFORM):
            return self._sums / self.t
        if self.kind.name == POWER_MEAN:
            m = self._sums / self.t
            return np.sign(m) * np.abs(m) ** (1.0 / self.kind.q)
        if self.kind.name == WINNER:
            return self._wins / self.t
        return np.median(np.concatenate(self._samples, axis=0), axis=0)

    def value_of(self, arm: int) -> float:
        return float(self.values()[self.query_set.index(arm)])


def empirical_borda(per_set_states: Mapping[QuerySet, StatisticState], arm: int) -> float:
    """Unweighted average of s_{arm|Q} over observed sets containing the arm.

    Only sets with at least one pull contribute; an arm with no observed set
    raises :class:`NoDataError` (callers rank it below every observed arm).
    """
    seen = [
        state.value_of(arm)
        for q, state in per_set_states.items()
        if arm in q and state.t >= 1
    ]
    if not seen:
        raise NoDataError(f"arm {arm} appears in no observed query set")
    return float(np.mean(seen))
