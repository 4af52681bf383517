"""Ground-truth winner computation against a limit profile."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import (
    InvalidProfileError,
    LimitProfile,
    all_query_sets_up_to,
    enumerate_query_sets,
)

ENUMERATION_LIMIT = 500_000


@dataclass(frozen=True)
class WinnerReport:
    gcw: int | None
    gbw_set: tuple[int, ...]
    gcopew_set: tuple[int, ...]
    borda_scores: tuple[float, ...]
    copeland_scores: tuple[float, ...]


def find_gcw(profile: LimitProfile, sample_sets: int = 1000, seed: int = 0) -> int | None:
    """The unique arm strictly dominating every set containing it, if any.

    Explicit tables are scanned exhaustively (over the tabulated sets);
    generative profiles can only confirm their declared winner, via a seeded
    sample of subsets.  Absence is a valid answer, never an error.
    """
    if profile.enumerable:
        candidates = set(range(profile.n))
        seen: set[int] = set()
        for q, vals in profile.limits.items():
            seen.update(q.arms)
            ranked = sorted(zip(vals, q.arms), reverse=True)
            top_val, top_arm = ranked[0]
            if math.isclose(top_val, ranked[1][0], rel_tol=1e-12, abs_tol=1e-15):
                candidates -= set(q.arms)
            else:
                candidates -= set(q.arms) - {top_arm}
            if not candidates:
                return None
        candidates &= seen
        if len(candidates) == 1:
            return candidates.pop()
        return None
    if profile.declared_gcw is None:
        return None
    if profile.verify_gcw(profile.declared_gcw, sample_sets=sample_sets, seed=seed):
        return profile.declared_gcw
    return None


def find_gbw_gcopew(profile: LimitProfile) -> WinnerReport:
    """Borda and Copeland scores over every size-k set, with full argmax sets.

    Borda is the per-arm average limit over the C(n-1, k-1) sets containing
    it; Copeland is the fraction of those sets whose maximum the arm attains
    (ties attain jointly).  Multiple winners are legitimate.
    """
    n, k = profile.n, profile.k
    if math.comb(n, k) > ENUMERATION_LIMIT:
        raise InvalidProfileError(f"C({n},{k}) too large to enumerate")
    if profile.enumerable:
        missing = [q for q in enumerate_query_sets(n, k) if q not in profile.limits]
        if missing:
            raise InvalidProfileError(
                f"profile misses {len(missing)} size-{k} sets (e.g. {missing[0]})"
            )
    borda_totals = [0.0] * n
    cope_totals = [0.0] * n
    for q in enumerate_query_sets(n, k):
        vals = profile.limit_vector(q)
        top = max(vals)
        for arm, v in zip(q, vals):
            borda_totals[arm] += v
            if math.isclose(v, top, rel_tol=1e-12, abs_tol=1e-15):
                cope_totals[arm] += 1.0
    per_arm = math.comb(n - 1, k - 1)
    borda = tuple(t / per_arm for t in borda_totals)
    copeland = tuple(t / per_arm for t in cope_totals)
    best_b = max(borda)
    best_c = max(copeland)
    gbw = tuple(a for a in range(n) if math.isclose(borda[a], best_b, rel_tol=1e-12, abs_tol=1e-15))
    gcopew = tuple(
        a for a in range(n) if math.isclose(copeland[a], best_c, rel_tol=1e-12, abs_tol=1e-15)
    )
    return WinnerReport(
        gcw=find_gcw(profile),
        gbw_set=gbw,
        gcopew_set=gcopew,
        borda_scores=borda,
        copeland_scores=copeland,
    )


def assumption_a2_holds(profile: LimitProfile, arm: int) -> bool:
    """Exhaustive (A2) check for enumerable profiles: strict dominance of
    ``arm`` on every subset of size 2..k containing it."""
    if not profile.enumerable:
        return profile.verify_gcw(arm)
    for q in all_query_sets_up_to(profile.n, profile.k, containing=arm):
        if q in profile.limits and not profile.is_gcw_on(q, arm):
            return False
    return True
