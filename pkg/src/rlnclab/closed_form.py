"""Closed-form failure probabilities of random coding on the butterfly network.

All functions take the field order ``q`` as a plain integer >= 2 and return
exact rationals.  ``q`` need not be a prime power here; :func:`threshold_search`
reports the realizable order separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from .field import prime_power

__all__ = [
    "InvalidDimension",
    "Target",
    "invertible_probability",
    "butterfly_success",
    "butterfly_failure",
    "limit_failure",
    "convergence_rate_check",
    "ThresholdResult",
    "threshold_search",
    "RATE_CONSTANTS",
]

Target = Literal["sink", "network", "average"]

# q * P(q) -> these constants as q grows, with p = 0
RATE_CONSTANTS = {"sink": 5, "average": 5, "network": 9}


class InvalidDimension(ValueError):
    pass


def _check_q(q: int) -> None:
    if int(q) != q or q < 2:
        raise ValueError(f"field order must be an integer >= 2, got {q!r}")


def _check_p(p) -> Fraction:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"erasure probability {p} is outside [0, 1]")
    return p


def invertible_probability(n: int, q: int) -> Fraction:
    """Probability that a uniform n x n matrix over GF(q) is invertible."""
    if n < 1:
        raise InvalidDimension(f"matrix dimension must be >= 1, got {n}")
    _check_q(q)
    prob = Fraction(1)
    for i in range(1, n + 1):
        prob *= 1 - Fraction(1, q**i)
    return prob


def butterfly_success(q: int, p=0, target: Target = "network") -> Fraction:
    _check_q(q)
    p = _check_p(p)
    if target == "network":
        return Fraction((q + 1) * (q - 1) ** 10, q**11) * (1 - p) ** 9
    if target in ("sink", "average"):
        return Fraction((q + 1) * (q - 1) ** 6, q**7) * (1 - p) ** 6
    raise ValueError(f"unknown target {target!r}")


def butterfly_failure(q: int, p=0, target: Target = "network") -> Fraction:
    """Per-sink, whole-network or average failure probability, exactly."""
    return 1 - butterfly_success(q, p, target)


def limit_failure(p, target: Target = "network") -> Fraction:
    """Failure probability as the field order goes to infinity."""
    p = _check_p(p)
    if target == "network":
        return 1 - (1 - p) ** 9
    if target in ("sink", "average"):
        return 1 - (1 - p) ** 6
    raise ValueError(f"unknown target {target!r}")


def convergence_rate_check(target: Target, q_list) -> list[tuple[int, Fraction]]:
    """``(q, q * failure(q))`` rows; the second column tends to 5 (sink) or 9 (network)."""
    return [(q, q * butterfly_failure(q, 0, target)) for q in q_list]


@dataclass(frozen=True)
class ThresholdResult:
    target_success: Fraction
    minimal_integer_q: int
    minimal_prime_power_q: int


def threshold_search(target_success) -> ThresholdResult:
    """Smallest q whose whole-network success probability reaches ``target_success``.

    Network success increases with q, so a doubling bracket followed by
    bisection finds the least integer; the least prime power at or above it
    is then found by a linear scan.
    """
    target = Fraction(target_success)
    if not 0 < target < 1:
        raise ValueError("target success probability must lie strictly between 0 and 1")
    ok = lambda q: butterfly_success(q) >= target  # noqa: E731
    lo, hi = 1, 2
    while not ok(hi):
        lo, hi = hi, hi * 2
    # invariant: not ok(lo) (or lo == 1), ok(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    q = hi
    while prime_power(q) is None:
        q += 1
    return ThresholdResult(target, hi, q)
