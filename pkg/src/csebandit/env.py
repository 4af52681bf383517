"""Feedback environments: given a query set and its pull index, produce one
observation per member arm.

Four kinds are shipped, all driven by a single 64-bit seed:

- ``gaussian-subset``: independent per-(set, arm) Gaussian rewards with
  lazily derived means/deviations and a forced dominant arm.
- ``categorical-preference``: one-hot winner feedback drawn from a per-set
  categorical distribution.
- ``censored-race``: latent log-normal runtimes per arm; a pull races the
  set's arms in parallel and reveals only the fastest finisher, charging the
  minimum runtime to a simulated wall clock.  Singleton pulls (raw runtime)
  exist only here, for the single-arm halving baseline.
- ``deterministic-sequence``: adversarial instances that feed exact target
  statistics through the empirical mean (observation = telescoped increment).

Environment specs serialize to JSON; deterministic tables use nested maps
``{"0,1": {"0": 0.8, "1": 0.2}}`` keyed by the sorted arm list.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from .core import (
    BudgetExhaustedError,
    InvalidDimensionError,
    InvalidProfileError,
    LimitProfile,
    ParameterError,
    QuerySet,
    RateFunction,
    UnsupportedEnvironmentError,
    rate_inverse,
)

GAUSSIAN = "gaussian-subset"
CATEGORICAL = "categorical-preference"
RACE = "censored-race"
DETERMINISTIC = "deterministic-sequence"

NOMINAL_MEAN_RATE = RateFunction.power_law(1.0, 0.5)


def _limits_to_json(limits: Mapping[QuerySet, tuple[float, ...]]) -> dict:
    return {
        q.key(): {str(arm): float(v) for arm, v in zip(q, vals)}
        for q, vals in limits.items()
    }


def _limits_from_json(doc: Mapping[str, Mapping[str, float]]) -> dict[QuerySet, tuple[float, ...]]:
    out = {}
    for key, arm_map in doc.items():
        q = QuerySet.from_key(key)
        out[q] = tuple(float(arm_map[str(arm)]) for arm in q)
    return out


@dataclass(frozen=True)
class EnvironmentSpec:
    """Serializable description of one feedback environment."""

    kind: str
    n: int
    k: int
    seed: int = 0
    # gaussian / categorical
    epsilon: float = 0.1
    force_distinct_gbw: bool = False
    sigma_range: tuple[float, float] = (0.05, 0.2)
    gap_structure: str = "sampled"  # categorical: sampled | uniform-gap | explicit
    probs: Mapping[QuerySet, tuple[float, ...]] | None = None
    # censored race
    loc_range: tuple[float, float] = (-0.7, 1.6)
    scale_range: tuple[float, float] = (0.3, 1.0)
    loc: tuple[float, ...] | None = None
    scale: tuple[float, ...] | None = None
    # deterministic sequence
    family: str | None = None  # necessity-table | necessity-ladder | gcw-lowerbound | borda-boundary
    limits: Mapping[QuerySet, tuple[float, ...]] | None = None
    amplitude: float = 0.0
    ladder: tuple[float, ...] | None = None
    scores: tuple[float, ...] | None = None
    b_prime: int | None = None
    rate: RateFunction | None = None
    gcw: int | None = None

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, CATEGORICAL, RACE, DETERMINISTIC):
            raise ParameterError(f"unknown environment kind {self.kind!r}")
        if self.n < 2 or not 2 <= self.k <= self.n:
            raise InvalidDimensionError(f"need n >= 2 and 2 <= k <= n (n={self.n}, k={self.k})")
        if self.kind in (GAUSSIAN, CATEGORICAL) and self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive (got {self.epsilon})")
        if self.kind == DETERMINISTIC and self.family is None:
            raise ParameterError("deterministic-sequence spec needs a family")

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind, "n": self.n, "k": self.k, "seed": self.seed}
        if self.kind in (GAUSSIAN, CATEGORICAL):
            doc["epsilon"] = self.epsilon
            doc["force_distinct_gbw"] = self.force_distinct_gbw
        if self.kind == GAUSSIAN:
            doc["sigma_range"] = list(self.sigma_range)
        if self.kind == CATEGORICAL:
            doc["gap_structure"] = self.gap_structure
            if self.probs is not None:
                doc["probs"] = _limits_to_json(self.probs)
        if self.kind == RACE:
            doc["loc_range"] = list(self.loc_range)
            doc["scale_range"] = list(self.scale_range)
            if self.loc is not None:
                doc["loc"] = list(self.loc)
                doc["scale"] = list(self.scale)
        if self.kind == DETERMINISTIC:
            doc["family"] = self.family
            doc["amplitude"] = self.amplitude
            if self.limits is not None:
                doc["limits"] = _limits_to_json(self.limits)
            if self.ladder is not None:
                doc["ladder"] = list(self.ladder)
            if self.scores is not None:
                doc["scores"] = list(self.scores)
            if self.b_prime is not None:
                doc["b_prime"] = self.b_prime
            if self.rate is not None:
                doc["rate"] = self.rate.to_json()
            if self.gcw is not None:
                doc["gcw"] = self.gcw
        return doc

    @staticmethod
    def from_json(doc: Mapping[str, Any]) -> "EnvironmentSpec":
        kw: dict[str, Any] = {
            "kind": doc["kind"],
            "n": int(doc["n"]),
            "k": int(doc["k"]),
            "seed": int(doc.get("seed", 0)),
        }
        for key in ("epsilon", "force_distinct_gbw", "gap_structure", "family", "amplitude"):
            if key in doc:
                kw[key] = doc[key]
        for key in ("sigma_range", "loc_range", "scale_range", "loc", "scale", "ladder", "scores"):
            if key in doc and doc[key] is not None:
                kw[key] = tuple(doc[key])
        if doc.get("probs") is not None:
            kw["probs"] = _limits_from_json(doc["probs"])
        if doc.get("limits") is not None:
            kw["limits"] = _limits_from_json(doc["limits"])
        if doc.get("b_prime") is not None:
            kw["b_prime"] = int(doc["b_prime"])
        if doc.get("rate") is not None:
            kw["rate"] = RateFunction.from_json(doc["rate"])
        if doc.get("gcw") is not None:
            kw["gcw"] = int(doc["gcw"])
        return EnvironmentSpec(**kw)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @staticmethod
    def loads(text: str) -> "EnvironmentSpec":
        return EnvironmentSpec.from_json(json.loads(text))


@dataclass
class PullLedger:
    """Pull accounting for one run; counts never decrease."""

    total_pulls: int = 0
    counts: dict = field(default_factory=dict)  # QuerySet | int -> pulls
    simulated_wallclock: float = 0.0

    def record(self, key, count: int, wallclock: float = 0.0) -> int:
        """Record ``count`` pulls of ``key``; returns the new per-key total."""
        new = self.counts.get(key, 0) + count
        self.counts[key] = new
        self.total_pulls += count
        self.simulated_wallclock += wallclock
        return new

    @property
    def distinct_query_sets(self) -> int:
        return len(self.counts)


def _seq(seed: int, *salt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0x7FFFFFFFFFFFFFFF, *salt]))


class Environment:
    """Base environment: seeded, budget-cappable, batch-oriented."""

    def __init__(self, spec: EnvironmentSpec):
        self.spec = spec
        self.n = spec.n
        self.k = spec.k
        self.ledger = PullLedger()
        self.budget_cap: int | None = None

    def set_budget_cap(self, cap: int | None) -> None:
        self.budget_cap = cap

    @property
    def remaining_budget(self) -> int | None:
        if self.budget_cap is None:
            return None
        return self.budget_cap - self.ledger.total_pulls

    def _validate_set(self, q: QuerySet) -> None:
        if len(q) > self.k:
            raise InvalidDimensionError(f"{q} exceeds max subset size k={self.k}")
        if q.arms[-1] >= self.n:
            raise InvalidDimensionError(f"{q} references arms outside [0, {self.n})")

    def pull_batch(self, q: QuerySet, count: int) -> np.ndarray:
        """Draw ``count`` consecutive observations of ``q`` (rows = pulls).

        When a budget cap binds mid-batch, the affordable prefix is drawn and
        recorded, then :class:`BudgetExhaustedError` is raised with the prefix
        attached.
        """
        self._validate_set(q)
        if count < 1:
            raise ParameterError(f"pull count must be >= 1 (got {count})")
        remaining = self.remaining_budget
        if remaining is not None and count > remaining:
            partial = None
            if remaining > 0:
                start = self.ledger.counts.get(q, 0)
                partial = self._draw(q, start, remaining)
                self.ledger.record(q, remaining, self._wallclock_of(partial))
            raise BudgetExhaustedError(
                f"budget cap {self.budget_cap} reached while pulling {q}", partial=partial
            )
        start = self.ledger.counts.get(q, 0)
        obs = self._draw(q, start, count)
        self.ledger.record(q, count, self._wallclock_of(obs))
        return obs

    def pull(self, q: QuerySet) -> np.ndarray:
        return self.pull_batch(q, 1)[0]

    def _draw(self, q: QuerySet, start: int, count: int) -> np.ndarray:
        raise NotImplementedError

    def _wallclock_of(self, obs: np.ndarray) -> float:
        return 0.0

    def latent_limits(self) -> LimitProfile:
        raise NotImplementedError

    def true_best(self) -> int:
        raise NotImplementedError

    @property
    def supported_statistics(self) -> tuple[str, ...]:
        raise NotImplementedError


class GaussianSubsetEnvironment(Environment):
    """Independent N(mu_{i|Q}, sigma_{i|Q}^2) rewards with a forced GCW.

    Per-set parameters are a pure function of (seed, Q): mu ~ U[0,1] and sigma
    ~ U[sigma_range] per member arm, then the designated winner's mean is
    lifted to max-of-others + epsilon.  With ``force_distinct_gbw`` a second
    arm gets max-of-others + 2*epsilon on every set avoiding the winner, which
    drags the Borda winner away from the Condorcet winner.
    """

    def __init__(self, spec: EnvironmentSpec):
        super().__init__(spec)
        master = _seq(spec.seed, 0)
        self.i_star = int(master.integers(spec.n))
        self.i_borda = int((self.i_star + 1 + master.integers(spec.n - 1)) % spec.n)
        self._params: dict[QuerySet, tuple[np.ndarray, np.ndarray]] = {}
        self._streams: dict[QuerySet, np.random.Generator] = {}

    def params(self, q: QuerySet) -> tuple[np.ndarray, np.ndarray]:
        cached = self._params.get(q)
        if cached is not None:
            return cached
        rng = _seq(self.spec.seed, 1, *q.arms)
        mu = rng.uniform(0.0, 1.0, size=len(q))
        lo, hi = self.spec.sigma_range
        sigma = rng.uniform(lo, hi, size=len(q))
        eps = self.spec.epsilon
        if self.i_star in q:
            idx = q.index(self.i_star)
            others = np.delete(mu, idx)
            mu[idx] = others.max() + eps
        elif self.spec.force_distinct_gbw and self.i_borda in q:
            idx = q.index(self.i_borda)
            others = np.delete(mu, idx)
            mu[idx] = others.max() + 2 * eps
        self._params[q] = (mu, sigma)
        return mu, sigma

    def _stream(self, q: QuerySet) -> np.random.Generator:
        rng = self._streams.get(q)
        if rng is None:
            rng = _seq(self.spec.seed, 2, *q.arms)
            self._streams[q] = rng
        return rng

    def _draw(self, q: QuerySet, start: int, count: int) -> np.ndarray:
        mu, sigma = self.params(q)
        return self._stream(q).normal(mu, sigma, size=(count, len(q)))

    def latent_limits(self) -> LimitProfile:
        return LimitProfile(
            n=self.n,
            k=self.k,
            rate=NOMINAL_MEAN_RATE,
            limit_fn=lambda q: tuple(self.params(q)[0]),
            declared_gcw=self.i_star,
        )

    def true_best(self) -> int:
        return self.i_star

    @property
    def supported_statistics(self) -> tuple[str, ...]:
        return ("empirical-mean", "r-transform-mean", "median", "power-mean")


class CategoricalPreferenceEnvironment(Environment):
    """One-hot winner feedback drawn from Cat(p_Q).

    gap_structure:
      - ``explicit``: per-set probability tables supplied in the environment spec.
      - ``uniform-gap``: on sets containing the winner, p_{i*} - p_j = epsilon
        exactly for every other member; sets avoiding the winner are uniform.
      - ``sampled``: per-set weights derived from the Gaussian mean machinery
        (same forcing rules) and normalized, preserving strict dominance.
    """

    def __init__(self, spec: EnvironmentSpec):
        super().__init__(spec)
        if spec.gap_structure not in ("explicit", "uniform-gap", "sampled"):
            raise ParameterError(f"unknown gap_structure {spec.gap_structure!r}")
        if spec.gap_structure == "explicit":
            if spec.probs is None:
                raise ParameterError("explicit categorical spec needs probability tables")
            for q, p in spec.probs.items():
                arr = np.asarray(p, dtype=float)
                if arr.min() < 0 or abs(arr.sum() - 1.0) > 1e-9:
                    raise ParameterError(f"probabilities for {q} must form a distribution")
            self.i_star = None
        else:
            if spec.gap_structure == "uniform-gap" and spec.epsilon >= 1.0:
                raise ParameterError("uniform-gap needs epsilon < 1")
            master = _seq(spec.seed, 0)
            self.i_star = int(master.integers(spec.n))
            self.i_borda = int((self.i_star + 1 + master.integers(spec.n - 1)) % spec.n)
        self._probs: dict[QuerySet, np.ndarray] = {}
        self._streams: dict[QuerySet, np.random.Generator] = {}

    def probabilities(self, q: QuerySet) -> np.ndarray:
        cached = self._probs.get(q)
        if cached is not None:
            return cached
        if self.spec.gap_structure == "explicit":
            try:
                p = np.asarray(self.spec.probs[q], dtype=float)
            except KeyError:
                raise InvalidProfileError(f"no probabilities declared for {q}") from None
        elif self.spec.gap_structure == "uniform-gap":
            w = len(q)
            if self.i_star in q:
                p = np.full(w, (1.0 - self.spec.epsilon) / w)
                p[q.index(self.i_star)] += self.spec.epsilon
            else:
                p = np.full(w, 1.0 / w)
        else:
            rng = _seq(self.spec.seed, 1, *q.arms)
            weights = rng.uniform(0.0, 1.0, size=len(q))
            eps = self.spec.epsilon
            if self.i_star in q:
                idx = q.index(self.i_star)
                weights[idx] = np.delete(weights, idx).max() + eps
            elif self.spec.force_distinct_gbw and self.i_borda in q:
                idx = q.index(self.i_borda)
                weights[idx] = np.delete(weights, idx).max() + 2 * eps
            p = weights / weights.sum()
        self._probs[q] = p
        return p

    def _stream(self, q: QuerySet) -> np.random.Generator:
        rng = self._streams.get(q)
        if rng is None:
            rng = _seq(self.spec.seed, 2, *q.arms)
            self._streams[q] = rng
        return rng

    def _draw(self, q: QuerySet, start: int, count: int) -> np.ndarray:
        p = self.probabilities(q)
        winners = self._stream(q).choice(len(q), size=count, p=p)
        obs = np.zeros((count, len(q)))
        obs[np.arange(count), winners] = 1.0
        return obs

    def latent_limits(self) -> LimitProfile:
        return LimitProfile(
            n=self.n,
            k=self.k,
            rate=NOMINAL_MEAN_RATE,
            limits=(
                {q: tuple(np.asarray(p, dtype=float)) for q, p in self.spec.probs.items()}
                if self.spec.gap_structure == "explicit"
                else None
            ),
            limit_fn=(
                None
                if self.spec.gap_structure == "explicit"
                else lambda q: tuple(self.probabilities(q))
            ),
            declared_gcw=self.i_star,
        )

    def true_best(self) -> int:
        if self.i_star is None:
            raise UnsupportedEnvironmentError("explicit categorical spec declares no winner")
        return self.i_star

    @property
    def supported_statistics(self) -> tuple[str, ...]:
        return ("winner-frequency", "empirical-mean")


class CensoredRaceEnvironment(Environment):
    """Latent log-normal runtimes; a pull reveals only the fastest finisher.

    Pull cost on the simulated wall clock is the minimum runtime of the raced
    set (the race stops at the first finisher).  Singleton pulls return the
    raw runtime and charge it fully; they exist for the single-arm baseline.
    """

    def __init__(self, spec: EnvironmentSpec):
        super().__init__(spec)
        if spec.loc is not None:
            if spec.scale is None or len(spec.loc) != spec.n or len(spec.scale) != spec.n:
                raise ParameterError("explicit race parameters need n locations and n scales")
            self.loc = np.asarray(spec.loc, dtype=float)
            self.scale = np.asarray(spec.scale, dtype=float)
        else:
            rng = _seq(spec.seed, 1)
            self.loc = rng.uniform(*spec.loc_range, size=spec.n)
            self.scale = rng.uniform(*spec.scale_range, size=spec.n)
        if (self.scale < 0).any():
            raise ParameterError("runtime scales must be non-negative")
        self._rng = _seq(spec.seed, 2)
        self._mc_cache: dict[QuerySet, tuple[tuple[float, ...], tuple[float, ...]]] = {}

    def _draw(self, q: QuerySet, start: int, count: int) -> np.ndarray:
        arms = np.asarray(q.arms)
        runtimes = self._rng.lognormal(self.loc[arms], self.scale[arms], size=(count, len(q)))
        winners = runtimes.argmin(axis=1)  # argmin ties break toward the lowest index
        obs = np.zeros((count, len(q)))
        obs[np.arange(count), winners] = 1.0
        self._last_cost = float(runtimes.min(axis=1).sum())
        return obs

    def _wallclock_of(self, obs: np.ndarray) -> float:
        return self._last_cost

    def pull_single_batch(self, arm: int, count: int) -> np.ndarray:
        """Run one arm ``count`` times, observing and charging raw runtimes."""
        if not 0 <= arm < self.n:
            raise InvalidDimensionError(f"arm {arm} outside [0, {self.n})")
        if count < 1:
            raise ParameterError(f"pull count must be >= 1 (got {count})")
        remaining = self.remaining_budget
        if remaining is not None and count > remaining:
            partial = None
            if remaining > 0:
                partial = self._rng.lognormal(self.loc[arm], self.scale[arm], size=remaining)
                self.ledger.record(arm, remaining, float(partial.sum()))
            raise BudgetExhaustedError(
                f"budget cap {self.budget_cap} reached while running arm {arm}", partial=partial
            )
        runtimes = self._rng.lognormal(self.loc[arm], self.scale[arm], size=count)
        self.ledger.record(arm, count, float(runtimes.sum()))
        return runtimes

    def expected_runtime(self, arm: int) -> float:
        return float(np.exp(self.loc[arm] + self.scale[arm] ** 2 / 2.0))

    def win_probabilities(
        self, q: QuerySet, n_samples: int = 10**6
    ) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """Monte-Carlo P(arm finishes first in q) with standard errors."""
        cached = self._mc_cache.get(q)
        if cached is not None:
            return cached
        arms = np.asarray(q.arms)
        rng = _seq(self.spec.seed, 3, *q.arms)
        samples = rng.lognormal(self.loc[arms], self.scale[arms], size=(n_samples, len(q)))
        wins = np.bincount(samples.argmin(axis=1), minlength=len(q))
        p = wins / n_samples
        se = np.sqrt(p * (1 - p) / n_samples)
        result = (tuple(float(x) for x in p), tuple(float(x) for x in se))
        self._mc_cache[q] = result
        return result

    def latent_limits(self) -> LimitProfile:
        return LimitProfile(
            n=self.n,
            k=self.k,
            rate=NOMINAL_MEAN_RATE,
            limit_fn=lambda q: self.win_probabilities(q)[0],
            declared_gcw=None,
        )

    def true_best(self) -> int:
        """Arm with the smallest expected runtime."""
        return int(np.argmin([self.expected_runtime(a) for a in range(self.n)]))

    @property
    def supported_statistics(self) -> tuple[str, ...]:
        return ("winner-frequency", "empirical-mean")


class DeterministicSequenceEnvironment(Environment):
    """Adversarial instances feeding exact target statistics.

    The target family fixes s_{i|Q}(t) in closed form; the environment emits
    the unique observation sequence whose running empirical mean reproduces
    it: o(t) = t*s(t) - (t-1)*s(t-1).  Only the empirical-mean statistic is
    supported (other statistics cannot be driven this way).
    """

    def __init__(self, spec: EnvironmentSpec):
        super().__init__(spec)
        fam = spec.family
        if fam in ("necessity-table", "gcw-lowerbound"):
            if spec.limits is None:
                raise ParameterError(f"{fam} spec needs explicit limit tables")
        elif fam == "necessity-ladder":
            if spec.ladder is None or len(spec.ladder) < spec.k:
                raise ParameterError("ladder spec needs k values (best to worst)")
        elif fam == "borda-boundary":
            if spec.scores is None or len(spec.scores) != spec.n:
                raise ParameterError("borda-boundary spec needs one score per arm")
        else:
            raise ParameterError(f"unknown deterministic family {fam!r}")
        if fam == "gcw-lowerbound" and (spec.b_prime is None or spec.b_prime < 1):
            raise ParameterError("gcw-lowerbound spec needs b_prime >= 1")
        self._argmax_cache: dict[QuerySet, int] = {}

    def _limit_vector(self, q: QuerySet) -> np.ndarray:
        fam = self.spec.family
        if fam == "necessity-ladder":
            return np.asarray(self.spec.ladder[: len(q)], dtype=float)
        if fam == "borda-boundary":
            return np.asarray([self.spec.scores[a] for a in q], dtype=float)
        try:
            return np.asarray(self.spec.limits[q], dtype=float)
        except KeyError:
            raise InvalidProfileError(f"instance declares no limits for {q}") from None

    def statistic_values(self, q: QuerySet, ts: np.ndarray) -> np.ndarray:
        """Target s_{.|Q}(t) matrix for the pull indices in ``ts`` (rows)."""
        self._validate_set(q)
        ts = np.asarray(ts, dtype=float)[:, None]
        vals = self._limit_vector(q)
        fam = self.spec.family
        if fam in ("necessity-table", "necessity-ladder"):
            if self.spec.amplitude == 0.0:
                return np.broadcast_to(vals, (ts.shape[0], len(q))).copy()
            signs = np.ones(len(q))
            top = self._argmax_cache.get(q)
            if top is None:
                top = int(vals.argmax())
                tied = np.isclose(vals, vals[top]).sum()
                if tied > 1:
                    raise ParameterError(f"argmax tie in {q}; necessity instances need strict maxima")
                self._argmax_cache[q] = top
            signs[top] = -1.0
            return vals + signs * (self.spec.amplitude / ts)
        if fam == "borda-boundary":
            signs = np.where(np.asarray(q.arms) == self.spec.gcw, -1.0, 1.0)
            return vals + signs * (self.spec.amplitude / ts)
        # gcw-lowerbound: midpoint before b_prime, declared limits afterwards
        midpoint = (vals.max() + vals.min()) / 2.0
        out = np.broadcast_to(vals, (ts.shape[0], len(q))).copy()
        out[ts[:, 0] < self.spec.b_prime] = midpoint
        return out

    def _draw(self, q: QuerySet, start: int, count: int) -> np.ndarray:
        ts = np.arange(start + 1, start + count + 1)
        s_now = self.statistic_values(q, ts)
        s_prev = np.zeros_like(s_now)
        if start >= 1:
            s_prev[0] = self.statistic_values(q, np.asarray([start]))[0]
        if count > 1:
            s_prev[1:] = s_now[:-1]
        return ts[:, None] * s_now - (ts[:, None] - 1) * s_prev

    def latent_limits(self) -> LimitProfile:
        rate = self.spec.rate
        if rate is None:
            rate = (
                RateFunction.reciprocal(self.spec.amplitude)
                if self.spec.amplitude > 0
                else RateFunction.table([0.0])
            )
        if self.spec.family == "necessity-ladder":
            ladder = self.spec.ladder
            return LimitProfile(
                n=self.n,
                k=self.k,
                rate=rate,
                limit_fn=lambda q: tuple(ladder[: len(q)]),
                declared_gcw=self.spec.gcw,
            )
        if self.spec.family == "borda-boundary":
            scores = self.spec.scores
            return LimitProfile(
                n=self.n,
                k=self.k,
                rate=rate,
                limit_fn=lambda q: tuple(scores[a] for a in q),
                declared_gcw=self.spec.gcw,
            )
        return LimitProfile(
            n=self.n, k=self.k, rate=rate, limits=dict(self.spec.limits), declared_gcw=self.spec.gcw
        )

    def true_best(self) -> int:
        if self.spec.gcw is None:
            raise UnsupportedEnvironmentError("instance declares no winner")
        return self.spec.gcw

    @property
    def supported_statistics(self) -> tuple[str, ...]:
        return ("empirical-mean",)


_BUILDERS = {
    GAUSSIAN: GaussianSubsetEnvironment,
    CATEGORICAL: CategoricalPreferenceEnvironment,
    RACE: CensoredRaceEnvironment,
    DETERMINISTIC: DeterministicSequenceEnvironment,
}


def build_environment(spec: EnvironmentSpec) -> Environment:
    return _BUILDERS[spec.kind](spec)


# ---------------------------------------------------------------------------
# Adversarial instance generators
# ---------------------------------------------------------------------------


def make_necessity_instance(
    profile: LimitProfile, beta_amplitude: float, snap_to_grid: bool = True
) -> tuple[EnvironmentSpec, LimitProfile]:
    """Worst-case instance s = S -+ beta(t) with beta(t) = A/t.

    The statistic of each set's unique best arm approaches its limit from
    below, every other arm from above, so orderings flip exactly when beta
    crosses half the relevant gap.  With ``snap_to_grid`` each half-gap is
    adjusted to the nearest A/m so the crossing lands on an integer pull count
    (the exact tie point of the worst-case construction); the adjusted profile is
    returned.  ``snap_to_grid=False`` keeps the limits as given, which yields
    strict inequalities on both sides of every crossing.
    """
    if beta_amplitude <= 0:
        raise ParameterError(f"beta amplitude must be positive (got {beta_amplitude})")
    if not profile.enumerable:
        raise InvalidProfileError("necessity instances need an explicit limit table")
    adjusted: dict[QuerySet, tuple[float, ...]] = {}
    for q, vals in profile.limits.items():
        arr = np.asarray(vals, dtype=float)
        top = int(arr.argmax())
        if np.isclose(arr, arr[top]).sum() > 1:
            raise ParameterError(f"argmax tie in {q}; strict dominance is required")
        if snap_to_grid:
            out = arr.copy()
            for j in range(len(arr)):
                if j == top:
                    continue
                half_gap = (arr[top] - arr[j]) / 2.0
                if half_gap > beta_amplitude:
                    raise ParameterError(
                        f"amplitude {beta_amplitude} too small for half-gap {half_gap} in {q}"
                    )
                m = max(1, round(beta_amplitude / half_gap))
                out[j] = arr[top] - 2.0 * beta_amplitude / m
            adjusted[q] = tuple(float(v) for v in out)
        else:
            adjusted[q] = tuple(float(v) for v in arr)
    gcw = _table_gcw(profile.n, profile.k, adjusted)
    if gcw is None:
        raise InvalidProfileError("necessity instances need a generalized Condorcet winner")
    spec = EnvironmentSpec(
        kind=DETERMINISTIC,
        n=profile.n,
        k=profile.k,
        family="necessity-table",
        limits=adjusted,
        amplitude=float(beta_amplitude),
        rate=RateFunction.reciprocal(beta_amplitude),
        gcw=gcw,
    )
    new_profile = LimitProfile(
        n=profile.n,
        k=profile.k,
        rate=RateFunction.reciprocal(beta_amplitude),
        limits=adjusted,
        declared_gcw=gcw,
    )
    return spec, new_profile


def _table_gcw(n: int, k: int, limits: Mapping[QuerySet, tuple[float, ...]]) -> int | None:
    """Unique strict dominator across all tabulated sets, if any."""
    candidates = set(range(n))
    for q, vals in limits.items():
        arr = np.asarray(vals)
        top = int(arr.argmax())
        if np.isclose(arr, arr[top]).sum() > 1:
            candidates -= set(q.arms)
        else:
            candidates -= set(q.arms) - {q.arms[top]}
        if not candidates:
            return None
    # a candidate must actually appear in some set to be meaningful
    seen = set()
    for q in limits:
        seen.update(q.arms)
    candidates &= seen
    if len(candidates) == 1:
        return candidates.pop()
    return None


def make_gcw_lowerbound_instance(
    limits: Mapping[QuerySet, tuple[float, ...]], rate: RateFunction
) -> tuple[int, list[EnvironmentSpec]]:
    """The indistinguishability family behind the GCW budget lower bound.

    Every instance shows each set the midpoint of its extreme limits until
    pull B', then reveals permuted limits.  The base instance crowns arm 0;
    the l-th swapped instance (l >= 1) crowns arm l and coincides with the
    base before B' everywhere, and at all times on sets avoiding arm l.
    Returns (B', [base, swap_1, ..., swap_{n-1}]).
    """
    n = 1 + max(max(q.arms) for q in limits)
    k = max(len(q) for q in limits)
    b_prime = None
    for q, vals in limits.items():
        arr = np.sort(np.asarray(vals, dtype=float))[::-1]
        if not arr[0] > arr[1]:
            raise InvalidProfileError(f"top limits tie in {q}; the construction needs S(1) > S(2)")
        inv = rate_inverse(rate, (arr[0] - arr[-1]) / 2.0)
        b_prime = inv if b_prime is None else min(b_prime, inv)

    def assign(q: QuerySet, vals, winner: int | None) -> tuple[float, ...]:
        """Give ``winner`` the top value, others the remaining order stats."""
        arr = np.asarray(vals, dtype=float)
        if winner is None or winner not in q:
            return tuple(float(v) for v in arr)
        order = sorted(range(len(q)), key=lambda i: (-arr[i], q.arms[i]))
        ranked = sorted(arr, reverse=True)
        out = np.empty(len(q))
        out[q.index(winner)] = ranked[0]
        rest = iter(ranked[1:])
        for idx in order:
            if q.arms[idx] != winner:
                out[idx] = next(rest)
        return tuple(float(v) for v in out)

    base_tables = {q: assign(q, vals, 0) for q, vals in limits.items()}
    specs = [
        EnvironmentSpec(
            kind=DETERMINISTIC,
            n=n,
            k=k,
            family="gcw-lowerbound",
            limits=base_tables,
            b_prime=b_prime,
            rate=rate,
            gcw=0,
        )
    ]
    for l in range(1, n):
        tables = {}
        for q, base_vals in base_tables.items():
            if l not in q:
                tables[q] = base_vals
                continue
            arr = np.asarray(base_vals, dtype=float)
            top = int(arr.argmax())
            swapped = arr.copy()
            swapped[q.index(l)], swapped[top] = arr[top], arr[q.index(l)]
            tables[q] = tuple(float(v) for v in swapped)
        specs.append(
            EnvironmentSpec(
                kind=DETERMINISTIC,
                n=n,
                k=k,
                family="gcw-lowerbound",
                limits=tables,
                b_prime=b_prime,
                rate=rate,
                gcw=l,
            )
        )
    return b_prime, specs


def make_borda_boundary_instance(
    scores, beta_amplitude: float, n: int, k: int
) -> EnvironmentSpec:
    """Borda-level worst case: the winner's statistic rises to its score,
    every other arm's falls, uniformly across all sets containing them."""
    scores = tuple(float(s) for s in scores)
    if len(scores) != n:
        raise ParameterError(f"need one score per arm ({n}), got {len(scores)}")
    if len(set(scores)) != n:
        raise ParameterError("borda-boundary scores must be distinct")
    if beta_amplitude <= 0:
        raise ParameterError("beta amplitude must be positive")
    return EnvironmentSpec(
        kind=DETERMINISTIC,
        n=n,
        k=k,
        family="borda-boundary",
        scores=scores,
        amplitude=float(beta_amplitude),
        rate=RateFunction.reciprocal(beta_amplitude),
        gcw=int(np.argmax(scores)),
    )


def necessity_ladder_spec(
    n: int, k: int, amplitude: float, target_inverses
) -> tuple[EnvironmentSpec, LimitProfile]:
    """Homogeneous necessity instance with rank-dependent limits.

    Arm order is global (arm 0 best); within any set the j-th ranked member
    holds ladder value V_j, so every size-s set shares one gap structure and
    sufficient budgets depend only on block sizes.  ``target_inverses`` are
    the desired quasi-inverse values M_2..M_k of the half-gaps; half-gaps are
    placed strictly between grid points (A/(M - 1/2)) so ordering flips are
    strict on both sides of each crossing.
    """
    ms = tuple(int(m) for m in target_inverses)
    if len(ms) != k - 1:
        raise ParameterError(f"need k-1 = {k - 1} target inverses, got {len(ms)}")
    if any(m < 2 for m in ms):
        raise ParameterError("target inverses must be >= 2 (degenerate budgets otherwise)")
    if any(b >= a for a, b in zip(ms, ms[1:])):
        raise ParameterError("target inverses must be strictly decreasing")
    if amplitude <= 0:
        raise ParameterError("amplitude must be positive")
    ladder = [1.0]
    for m in ms:
        ladder.append(1.0 - 2.0 * amplitude / (m - 0.5))
    spec = EnvironmentSpec(
        kind=DETERMINISTIC,
        n=n,
        k=k,
        family="necessity-ladder",
        ladder=tuple(ladder),
        amplitude=float(amplitude),
        rate=RateFunction.reciprocal(amplitude),
        gcw=0,
    )
    profile = LimitProfile(
        n=n,
        k=k,
        rate=RateFunction.reciprocal(amplitude),
        limit_fn=lambda q: tuple(ladder[: len(q)]),
        declared_gcw=0,
    )
    return spec, profile


def seeded_necessity_ladder(n: int, k: int, seed: int) -> EnvironmentSpec:
    """Deterministic grid instance: ladder parameters derived from the seed."""
    rng = _seq(seed, 7)
    base = int(rng.integers(2, 5))
    amplitude = float(rng.uniform(0.4, 0.9))
    ms = tuple(base + (k - j) for j in range(2, k + 1))
    spec, _ = necessity_ladder_spec(n, k, amplitude, ms)
    return replace(spec, seed=seed)


def check_instance_membership(
    spec: EnvironmentSpec,
    reference_limits: Mapping[QuerySet, tuple[float, ...]],
    rate: RateFunction,
    t_max: int,
    atol: float = 1e-12,
) -> list[str]:
    """Verify a deterministic instance against its admissible envelope.

    Checks, for every tabulated set: (a) the instance's limits are a
    permutation of the reference limits, and (b) |s_{i|Q}(t) - lim| <= gamma(t)
    for t = 1..t_max (with ``atol`` slack for float noise).  Returns a list of
    violation descriptions; empty means the instance is admissible.
    """
    env = build_environment(spec)
    if not isinstance(env, DeterministicSequenceEnvironment):
        raise UnsupportedEnvironmentError("membership checks apply to deterministic instances")
    violations = []
    ts = np.arange(1, t_max + 1)
    gammas = np.asarray([rate(int(t)) for t in ts])
    for q, ref_vals in reference_limits.items():
        inst_vals = np.asarray(env._limit_vector(q))
        if not np.allclose(np.sort(inst_vals), np.sort(np.asarray(ref_vals)), atol=1e-9):
            violations.append(f"{q}: limits are not a permutation of the reference")
            continue
        s = env.statistic_values(q, ts)
        dev = np.abs(s - inst_vals[None, :])
        bad = dev > gammas[:, None] + atol
        if bad.any():
            t_bad = int(ts[bad.any(axis=1).argmax()])
            violations.append(f"{q}: |s - lim| exceeds gamma at t={t_bad}")
    return violations


def profile_to_json(profile: LimitProfile) -> dict:
    """Serialize an explicit-table limit profile (generative rules cannot roam)."""
    if not profile.enumerable:
        raise InvalidProfileError("only explicit-table profiles serialize to JSON")
    return {
        "n": profile.n,
        "k": profile.k,
        "rate": profile.rate.to_json(),
        "limits": _limits_to_json(profile.limits),
        "gcw": profile.declared_gcw,
    }


def profile_from_json(doc: Mapping) -> LimitProfile:
    return LimitProfile(
        n=int(doc["n"]),
        k=int(doc["k"]),
        rate=RateFunction.from_json(doc["rate"]),
        limits=_limits_from_json(doc["limits"]),
        declared_gcw=None if doc.get("gcw") is None else int(doc["gcw"]),
    )


def make_environment_spec(kind: str, n: int, k: int, seed: int, **params) -> EnvironmentSpec:
    """Factory used by the experiment harness to stamp out per-cell specs."""
    if kind == DETERMINISTIC:
        family = params.get("family", "necessity-ladder")
        if family == "necessity-ladder":
            return seeded_necessity_ladder(n, k, seed)
        raise ParameterError(f"grid cells cannot synthesize deterministic family {family!r}")
    allowed = {
        GAUSSIAN: ("epsilon", "force_distinct_gbw", "sigma_range"),
        CATEGORICAL: ("epsilon", "force_distinct_gbw", "gap_structure", "probs"),
        RACE: ("loc_range", "scale_range", "loc", "scale"),
    }[kind]
    unknown = set(params) - set(allowed)
    if unknown:
        raise ParameterError(f"parameters {sorted(unknown)} not valid for kind {kind!r}")
    for key in ("sigma_range", "loc_range", "scale_range", "loc", "scale"):
        if key in params and params[key] is not None:
            params[key] = tuple(params[key])
    return EnvironmentSpec(kind=kind, n=n, k=k, seed=seed, **params)
