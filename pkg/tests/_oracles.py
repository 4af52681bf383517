"""Independent reference computations for the test suite.

Everything here recomputes expected values from first principles (brute-force
enumeration, linear scans, from-scratch batch statistics, high-precision
arithmetic) without touching the code paths under test.
"""

from __future__ import annotations

import math
from decimal import Decimal, getcontext

import numpy as np


def powerset_k_subsets(n: int, k: int, containing=None):
    """All size-k subsets by filtering the full powerset (n small)."""
    out = []
    for mask in range(1 << n):
        members = tuple(i for i in range(n) if mask >> i & 1)
        if len(members) == k and (containing is None or containing in members):
            out.append(members)
    return sorted(out)


def scan_rate_inverse(rate_fn, alpha: float, t_max: int = 10**7) -> int:
    """Linear scan for min{t >= 1 : rate(t) <= alpha}."""
    for t in range(1, t_max + 1):
        if rate_fn(t) <= alpha:
            return t
    raise AssertionError("scan exhausted")


def batch_mean(stream) -> np.ndarray:
    return np.asarray(stream, dtype=float).mean(axis=0)


def batch_winner_frequency(stream) -> np.ndarray:
    stream = np.asarray(stream)
    return stream.sum(axis=0) / stream.shape[0]


def batch_power_mean(stream, q: float) -> np.ndarray:
    m = (np.asarray(stream, dtype=float) ** q).mean(axis=0)
    return np.sign(m) * np.abs(m) ** (1.0 / q)


def batch_median(stream) -> np.ndarray:
    """Sort-and-pick median with explicit even-length midpoint rule."""
    stream = np.sort(np.asarray(stream, dtype=float), axis=0)
    t = stream.shape[0]
    if t % 2 == 1:
        return stream[t // 2]
    return (stream[t // 2 - 1] + stream[t // 2]) / 2.0


def batch_r_transform(stream, r_fn) -> np.ndarray:
    return r_fn(np.asarray(stream, dtype=float)).mean(axis=0)


def wilson_direct(successes: int, trials: int, z: float = 1.959963984540054):
    p = successes / trials
    denom = 1 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return center - half, center + half


def preference_constant_highprec(delta: str, epsilon: str, rounds: int) -> int:
    """The categorical winner-feedback sufficiency constant via 50-digit Decimal."""
    getcontext().prec = 50
    d, e = Decimal(delta), Decimal(epsilon)
    pi = Decimal("3.1415926535897932384626433832795028841971693993751")
    g = Decimal(32) * (Decimal(2) * rounds / (Decimal(3) * d)).sqrt() * pi / (e * e)
    value = (Decimal(32) / (e * e)) * ((g.ln() + 1) + g.ln().ln())
    return int(value.to_integral_value(rounding="ROUND_CEILING")) + 1


def reward_constant_highprec(delta: str, epsilon: str, k: int, rounds: int, sigma: str) -> int:
    """The sub-Gaussian reward sufficiency constant via 50-digit Decimal."""
    getcontext().prec = 50
    d, e, s = Decimal(delta), Decimal(epsilon), Decimal(sigma)
    boost = (1 + Decimal(0.5).sqrt()) ** 2
    ln32 = Decimal(1.5).ln()
    kr = (Decimal(10) * k * rounds) ** (Decimal(2) / 3)
    d23 = d ** (Decimal(2) / 3)
    lead = 48 * boost * s * s / (e * e)
    outer = 2 * kr / (d23 * ln32)
    inner = 72 * kr * boost * s * s / (d23 * e * e * ln32)
    value = lead * (outer * inner.ln()).ln()
    return int(value.to_integral_value(rounding="ROUND_CEILING")) + 1


def simulate_schedule_counts(variant: str, n: int, k: int):
    """Independent (R, P_r) recomputation via fractions.Fraction."""
    from fractions import Fraction

    def ceil_frac(x: Fraction) -> int:
        return -((-x.numerator) // x.denominator)

    if variant == "csws":
        m = 0
        while Fraction(k) ** m < n:
            m += 1
        rounds = m + 1
        parts = [ceil_frac(Fraction(n, k**r)) for r in range(1, rounds + 1)]
    elif variant == "csr":
        ratio = Fraction(k - 1, k)
        m = 0
        while n * ratio**m > 1:
            m += 1
        rounds = m + k - 1
        parts = [ceil_frac(n * ratio ** (r - 1) / k) for r in range(1, rounds + 1)]
    elif variant == "csh":
        m = 0
        while 2**m < n:
            m += 1
        m2 = 0
        while 2**m2 < k:
            m2 += 1
        rounds = m + m2
        parts = [ceil_frac(Fraction(n, 2 ** (r - 1) * k)) for r in range(1, rounds + 1)]
    else:
        raise ValueError(variant)
    return rounds, parts


def hand_borda_table():
    """The worked three-arm pair instance: limits chosen so the Borda scores
    are (0.85, 0.4, 0.25) and the Copeland scores (1, 0.5, 0)."""
    return {
        (0, 1): (0.9, 0.3),
        (0, 2): (0.8, 0.3),
        (1, 2): (0.5, 0.2),
    }
