"""Failure probabilities of random codes: exact enumeration and Monte Carlo.

Exact values are :class:`fractions.Fraction` end to end.  Both engines reduce
to histograms over per-trial success bitmasks (bit ``s`` set when sink ``s``
decodes), from which per-sink, whole-network and average failure follow.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

import numpy as np

from . import kernels
from .engine import ErasurePattern, code_from_indices, decoding_report, propagate
from .field import FieldSpec
from .network import NetworkSpec
from .rng import RandomStream

__all__ = [
    "SearchSpaceTooLarge",
    "ExactRational",
    "Estimate",
    "ErasureModel",
    "Tally",
    "FailureProbabilities",
    "Polynomial",
    "FailurePolynomials",
    "enumerate_exact",
    "monte_carlo",
    "erasure_polynomial",
    "pattern_success_counts",
    "DEFAULT_BUDGET",
    "MC_BLOCK",
]

ExactRational = Fraction

DEFAULT_BUDGET = 2**26
# Trials per Monte Carlo substream; fixed so replays never depend on parallelism.
MC_BLOCK = 1 << 16


class SearchSpaceTooLarge(ValueError):
    def __init__(self, required: int, allowed: int):
        super().__init__(f"enumeration needs {required} evaluations, budget allows {allowed}")
        self.required = required
        self.allowed = allowed


def parse_probability(text: str | Fraction | int | float) -> Fraction:
    """Parse ``"a/b"`` or a decimal string into an exact rational in [0, 1]."""
    if isinstance(text, float):
        raise TypeError("pass probabilities as strings or Fractions to keep them exact")
    try:
        p = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse probability {text!r}") from exc
    if not 0 <= p <= 1:
        raise ValueError(f"probability {text!r} is outside [0, 1]")
    return p


@dataclass(frozen=True)
class ErasureModel:
    """I.i.d. deletion of each real channel with probability ``p``."""

    p: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", parse_probability(self.p))


@dataclass(frozen=True)
class Estimate:
    mean: float
    trials: int
    seed: int

    @property
    def std_error(self) -> float:
        return math.sqrt(self.mean * (1.0 - self.mean) / self.trials)

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        """Normal-approximation interval; Wilson score when fewer than 10 events either way."""
        n = self.trials
        k = self.mean * n
        if min(k, n - k) >= 10:
            half = z * self.std_error
            return max(0.0, self.mean - half), min(1.0, self.mean + half)
        denom = 1 + z * z / n
        centre = (self.mean + z * z / (2 * n)) / denom
        half = z * math.sqrt(self.mean * (1 - self.mean) / n + z * z / (4 * n * n)) / denom
        return max(0.0, centre - half), min(1.0, centre + half)

    def __float__(self) -> float:
        return self.mean


Probability = Union[Fraction, Estimate]


@dataclass(frozen=True)
class Tally:
    """Raw counts: decoding successes per sink and at every sink, out of ``total``."""

    total: int
    per_sink_success: Mapping[str, int]
    network_success: int


@dataclass(frozen=True)
class FailureProbabilities:
    per_sink: Mapping[str, Probability]
    network: Probability
    average: Probability
    tally: Tally | None = field(default=None, compare=False)

    def success(self, which: str = "network") -> Probability:
        value = self.network if which == "network" else self.average if which == "average" else self.per_sink[which]
        if isinstance(value, Estimate):
            return Estimate(1.0 - value.mean, value.trials, value.seed)
        return 1 - value


def _histogram_marginals(hist, n_sinks: int) -> tuple[list[int], int]:
    hist = [int(x) for x in hist]
    per = [sum(c for m, c in enumerate(hist) if m >> s & 1) for s in range(n_sinks)]
    return per, hist[(1 << n_sinks) - 1]


# -- exact enumeration ---------------------------------------------------------


def _support(erasure: ErasureModel | None, n_real: int) -> list[int]:
    """Erasure bitmasks with nonzero probability."""
    if erasure is None or erasure.p == 0:
        return [0]
    if erasure.p == 1:
        return [(1 << n_real) - 1]
    return list(range(1 << n_real))


def _check_budget(spec: NetworkSpec, field: FieldSpec, n_patterns: int, budget: int) -> None:
    n_pairs = len(spec.adjacent_pairs())
    required = field.order**n_pairs * n_patterns
    if required > budget:
        raise SearchSpaceTooLarge(required, budget)


def pattern_success_counts(
    spec: NetworkSpec,
    field: FieldSpec,
    masks: list[int],
    *,
    workers: int | None = None,
    backend: str | None = None,
) -> dict[int, np.ndarray]:
    """Success-bitmask histogram over all codes, for each erasure bitmask."""
    prog = kernels.compile_network(spec)
    if masks and max(masks) >> kernels.MAX_ERASABLE:
        raise ValueError(f"erasure enumeration supports at most {kernels.MAX_ERASABLE} real channels")
    return {m: kernels.enumerate_histogram(prog, field, m, workers=workers, backend=backend) for m in masks}


def _weight(p: Fraction, erased: int, n_real: int) -> Fraction:
    return p**erased * (1 - p) ** (n_real - erased)


def enumerate_exact(
    spec: NetworkSpec,
    field: FieldSpec,
    erasure: ErasureModel | None = None,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int | None = None,
    backend: str | None = None,
) -> FailureProbabilities:
    """Exact failure probabilities by iterating every code (and erasure pattern)."""
    n_real = len(spec.real_channels)
    masks = _support(erasure, n_real)
    _check_budget(spec, field, len(masks), budget)
    total = field.order ** len(spec.adjacent_pairs())
    counts = pattern_success_counts(spec, field, masks, workers=workers, backend=backend)
    n_s = len(spec.sinks)
    per_ok = [Fraction(0)] * n_s
    net_ok = Fraction(0)
    tally = None
    for m, hist in counts.items():
        per, joint = _histogram_marginals(hist, n_s)
        w = Fraction(1) if len(masks) == 1 else _weight(erasure.p, bin(m).count("1"), n_real)
        per_ok = [acc + w * Fraction(c, total) for acc, c in zip(per_ok, per)]
        net_ok += w * Fraction(joint, total)
        if len(masks) == 1:
            tally = Tally(total, dict(zip(spec.sinks, per)), joint)
    per_sink = {t: 1 - ok for t, ok in zip(spec.sinks, per_ok)}
    average = sum(per_sink.values(), Fraction(0)) / n_s
    return FailureProbabilities(per_sink, 1 - net_ok, average, tally)


# -- erasure polynomials -------------------------------------------------------


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in ``p`` with exact coefficients, lowest degree first."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        c = [Fraction(x) for x in self.coeffs]
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def one_minus_p_power(cls, n: int, scale=1) -> Polynomial:
        """``scale * (1 - p)**n``."""
        return cls(tuple(Fraction(scale) * math.comb(n, k) * (-1) ** k for k in range(n + 1)))

    def __call__(self, p) -> Fraction:
        p = Fraction(p)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * p + c
        return acc

    def __add__(self, other) -> Polynomial:
        other = other if isinstance(other, Polynomial) else Polynomial((other,))
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return Polynomial(tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> Polynomial:
        other = other if isinstance(other, Polynomial) else Polynomial((other,))
        return self + (-other)

    def __rsub__(self, other) -> Polynomial:
        return (-self) + other

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __str__(self) -> str:
        terms = [f"{c}*p^{k}" if k else str(c) for k, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) or "0"


@dataclass(frozen=True)
class FailurePolynomials:
    """Failure probabilities as exact polynomials in the channel failure probability."""

    per_sink: Mapping[str, Polynomial]
    network: Polynomial
    average: Polynomial

    def success(self, which: str = "network") -> Polynomial:
        poly = self.network if which == "network" else self.average if which == "average" else self.per_sink[which]
        return 1 - poly

    def evaluate(self, p) -> FailureProbabilities:
        return FailureProbabilities({t: f(p) for t, f in self.per_sink.items()}, self.network(p), self.average(p))


def erasure_polynomial(
    spec: NetworkSpec,
    field: FieldSpec,
    *,
    budget: int = DEFAULT_BUDGET,
    workers: int | None = None,
    backend: str | None = None,
) -> FailurePolynomials:
    n_real = len(spec.real_channels)
    masks = list(range(1 << n_real))
    _check_budget(spec, field, len(masks), budget)
    total = field.order ** len(spec.adjacent_pairs())
    counts = pattern_success_counts(spec, field, masks, workers=workers, backend=backend)
    n_s = len(spec.sinks)
    # group conditional success counts by number of erased channels
    per_by_k = [[0] * n_s for _ in range(n_real + 1)]
    joint_by_k = [0] * (n_real + 1)
    for m, hist in counts.items():
        k = bin(m).count("1")
        per, joint = _histogram_marginals(hist, n_s)
        per_by_k[k] = [a + b for a, b in zip(per_by_k[k], per)]
        joint_by_k[k] += joint

    def build(count_by_k) -> Polynomial:
        poly = Polynomial(())
        for k, c in enumerate(count_by_k):
            if c:
                # p^k (1-p)^(n-k)
                base = Polynomial.one_minus_p_power(n_real - k, Fraction(c, total))
                poly = poly + Polynomial((Fraction(0),) * k + base.coeffs)
        return poly

    per_sink = {t: 1 - build([row[s] for row in per_by_k]) for s, t in enumerate(spec.sinks)}
    average = Polynomial(())
    for poly in per_sink.values():
        average = average + poly
    average = Polynomial(tuple(c / n_s for c in average.coeffs))
    return FailurePolynomials(per_sink, 1 - build(joint_by_k), average)


# -- Monte Carlo ---------------------------------------------------------------


def _block_outcomes(spec, field, prog, erasure, seed, block, n, backend):
    stream = RandomStream(seed, (block,))
    coeffs = stream.integers(field.order, size=(n, prog.n_pairs))
    if erasure is not None and erasure.p > 0:
        erased = stream.bernoulli(erasure.p, (n, prog.n_real))
        masks = (erased.astype(np.int64) << np.arange(prog.n_real, dtype=np.int64)).sum(axis=1)
    else:
        masks = np.zeros(n, dtype=np.int64)
    if field.has_tables and prog.n_real <= kernels.MAX_ERASABLE:
        return kernels.batch_outcomes(prog, field, coeffs, masks, backend=backend)
    # large fields: the reference engine, one code at a time
    out = np.zeros(n, dtype=np.uint32)
    for t in range(n):
        erased_ids = [cid for b, cid in enumerate(prog.real_ids) if int(masks[t]) >> b & 1]
        rep = decoding_report(spec, propagate(spec, code_from_indices(spec, field, coeffs[t]), ErasurePattern.of(*erased_ids)))
        out[t] = sum(1 << s for s, sink in enumerate(spec.sinks) if rep[sink].success)
    return out


def monte_carlo(
    spec: NetworkSpec,
    field: FieldSpec,
    erasure: ErasureModel | None,
    trials: int,
    seed: int,
    *,
    workers: int | None = None,
    backend: str | None = None,
) -> FailureProbabilities:
    """Estimate failure probabilities from ``trials`` independent random codes.

    Trial ``t`` lives in block ``t // MC_BLOCK`` and draws from the substream
    keyed by that block, so the tallies are identical for any worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prog = kernels.compile_network(spec)
    blocks = [(b, min(MC_BLOCK, trials - b * MC_BLOCK)) for b in range(-(-trials // MC_BLOCK))]

    def run(item):
        b, n = item
        out = _block_outcomes(spec, field, prog, erasure, seed, b, n, backend)
        return np.bincount(out, minlength=1 << prog.n_sinks).astype(np.int64)

    n_workers = kernels.worker_count(workers)
    if n_workers == 1 or len(blocks) == 1:
        parts = [run(b) for b in blocks]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(run, blocks))
    hist = np.sum(parts, axis=0)
    per, joint = _histogram_marginals(hist, prog.n_sinks)

    def est(ok: int) -> Estimate:
        return Estimate((trials - ok) / trials, trials, seed)

    per_sink = {t: est(c) for t, c in zip(spec.sinks, per)}
    # mean of per-sink frequencies, i.e. failures over |T| * trials sink-trials
    average = Estimate(sum(trials - c for c in per) / (trials * len(per)), trials, seed)
    return FailureProbabilities(per_sink, est(joint), average, Tally(trials, dict(zip(spec.sinks, per)), joint))
