"""Random linear network codes on a NetworkSpec, one code at a time.

This is the readable reference path built on :class:`FieldElement`.  Bulk
enumeration and simulation go through :mod:`rlnclab.kernels`, which must agree
with it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .field import FieldElement, FieldSpec, sample_uniform
from .network import BUTTERFLY_NAME, NetworkSpec, build_butterfly, topological_order

__all__ = [
    "CoefficientSetMismatch",
    "NotButterfly",
    "CoefficientAssignment",
    "ErasurePattern",
    "KernelTable",
    "SinkDecoding",
    "DecodingReport",
    "sample_code",
    "propagate",
    "decoding_report",
    "rank",
    "structural_factorization_check",
    "butterfly_code",
]

Pair = tuple[str, str]


class CoefficientSetMismatch(ValueError):
    pass


class NotButterfly(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientAssignment:
    entries: Mapping[Pair, FieldElement]
    field: FieldSpec

    def __post_init__(self):
        for pair, value in self.entries.items():
            if value.field != self.field:
                raise CoefficientSetMismatch(f"coefficient {pair} is not in {self.field}")

    def __getitem__(self, pair: Pair) -> FieldElement:
        return self.entries[pair]

    def __len__(self) -> int:
        return len(self.entries)

    def replace(self, **changes: FieldElement | int) -> CoefficientAssignment:
        """Copy with entries overridden; keys are ``"e_in,e_out"`` strings."""
        entries = dict(self.entries)
        for key, value in changes.items():
            pair = tuple(key.split(","))
            if pair not in entries:
                raise CoefficientSetMismatch(f"no coefficient for pair {pair}")
            entries[pair] = self.field(value)
        return CoefficientAssignment(entries, self.field)


@dataclass(frozen=True)
class ErasurePattern:
    erased: frozenset[str] = frozenset()

    @classmethod
    def of(cls, *ids: str) -> ErasurePattern:
        return cls(frozenset(ids))


@dataclass(frozen=True)
class KernelTable:
    kernels: Mapping[str, tuple[FieldElement, ...]]

    def __getitem__(self, cid: str) -> tuple[FieldElement, ...]:
        return self.kernels[cid]

    def as_indices(self, cid: str) -> tuple[int, ...]:
        return tuple(x.index for x in self.kernels[cid])


@dataclass(frozen=True)
class SinkDecoding:
    sink: str
    columns: tuple[str, ...]
    matrix: tuple[tuple[FieldElement, ...], ...]  # w rows
    rank: int
    success: bool


@dataclass(frozen=True)
class DecodingReport:
    sinks: dict[str, SinkDecoding] = field(default_factory=dict)

    def __getitem__(self, sink: str) -> SinkDecoding:
        return self.sinks[sink]

    @property
    def all_succeed(self) -> bool:
        return all(d.success for d in self.sinks.values())


def sample_code(spec: NetworkSpec, field: FieldSpec, rng) -> CoefficientAssignment:
    """One uniform draw per adjacent pair, in :meth:`NetworkSpec.adjacent_pairs` order."""
    return CoefficientAssignment({pair: sample_uniform(field, rng) for pair in spec.adjacent_pairs()}, field)


def code_from_indices(spec: NetworkSpec, field: FieldSpec, indices) -> CoefficientAssignment:
    pairs = spec.adjacent_pairs()
    if len(indices) != len(pairs):
        raise CoefficientSetMismatch(f"expected {len(pairs)} coefficients, got {len(indices)}")
    return CoefficientAssignment({pr: field.from_index(int(i)) for pr, i in zip(pairs, indices)}, field)


def propagate(
    spec: NetworkSpec, code: CoefficientAssignment, erasure: ErasurePattern | None = None
) -> KernelTable:
    erased = erasure.erased if erasure is not None else frozenset()
    pairs = set(spec.adjacent_pairs())
    if set(code.entries) != pairs:
        raise CoefficientSetMismatch("coefficient assignment does not match the network's adjacent pairs")
    if erased & set(spec.imaginary_channels):
        raise ValueError("imaginary channels cannot be erased")
    f = code.field
    zero = f.from_index(0)
    w = spec.rate
    kernels: dict[str, tuple[FieldElement, ...]] = {}
    for k, cid in enumerate(spec.imaginary_channels):
        kernels[cid] = tuple(f.from_index(1 if r == k else 0) for r in range(w))
    for cid in topological_order(spec):
        if cid in kernels:
            continue
        ch = spec.channel(cid)
        acc = [zero] * w
        for cin in spec.incoming(ch.tail):
            coef = code[(cin.id, cid)]
            acc = [a + coef * x for a, x in zip(acc, kernels[cin.id])]
        kernels[cid] = tuple(zero for _ in acc) if cid in erased else tuple(acc)
    return KernelTable(kernels)


def rank(matrix) -> int:
    """Rank of a matrix of FieldElements by fraction-free Gaussian elimination."""
    rows = [list(r) for r in matrix]
    if not rows or not rows[0]:
        return 0
    n_rows, n_cols = len(rows), len(rows[0])
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        piv = rows[r][c]
        for i in range(r + 1, n_rows):
            a = rows[i][c]
            if a:
                rows[i] = [piv * x - a * y for x, y in zip(rows[i], rows[r])]
        r += 1
        if r == n_rows:
            break
    return r


def decoding_report(spec: NetworkSpec, kernels: KernelTable) -> DecodingReport:
    out = {}
    w = spec.rate
    for t in spec.sinks:
        cols = tuple(c.id for c in spec.incoming(t) if not c.imaginary)
        matrix = tuple(tuple(kernels[cid][row] for cid in cols) for row in range(w))
        rk = rank(matrix) if cols else 0
        out[t] = SinkDecoding(t, cols, matrix, rk, rk == w)
    return DecodingReport(out)


# -- butterfly specifics -------------------------------------------------------

_BUTTERFLY_PAIRS = None


def _butterfly_pairs() -> set[Pair]:
    global _BUTTERFLY_PAIRS
    if _BUTTERFLY_PAIRS is None:
        _BUTTERFLY_PAIRS = set(build_butterfly().adjacent_pairs())
    return _BUTTERFLY_PAIRS


def butterfly_code(field: FieldSpec, source_kernel=((1, 0), (0, 1)), default=1, **overrides) -> CoefficientAssignment:
    """Butterfly code with source kernel rows (d1, d2) x columns (e1, e2) and a default elsewhere."""
    entries = {pair: field(default) for pair in _butterfly_pairs()}
    for r, d in enumerate(("d1", "d2")):
        for c, e in enumerate(("e1", "e2")):
            entries[(d, e)] = field(source_kernel[r][c])
    code = CoefficientAssignment(entries, field)
    return code.replace(**overrides) if overrides else code


def _matmul(a, b):
    return tuple(
        tuple(sum((a[i][k] * b[k][j] for k in range(1, len(b))), a[i][0] * b[0][j]) for j in range(len(b[0])))
        for i in range(len(a))
    )


def structural_factorization_check(code: CoefficientAssignment) -> bool:
    """Whether the propagated butterfly decoding matrices equal K_s*B1 and K_s*B2."""
    if set(code.entries) != _butterfly_pairs():
        raise NotButterfly("coefficient assignment is not for the butterfly network")
    k = lambda a, b: code[(a, b)]  # noqa: E731
    zero = code.field.from_index(0)
    source = ((k("d1", "e1"), k("d1", "e2")), (k("d2", "e1"), k("d2", "e2")))
    b1 = (
        (k("e1", "e3"), k("e1", "e4") * k("e4", "e7") * k("e7", "e8")),
        (zero, k("e2", "e5") * k("e5", "e7") * k("e7", "e8")),
    )
    b2 = (
        (zero, k("e1", "e4") * k("e4", "e7") * k("e7", "e9")),
        (k("e2", "e6"), k("e2", "e5") * k("e5", "e7") * k("e7", "e9")),
    )
    spec = build_butterfly()
    report = decoding_report(spec, propagate(spec, code))
    return report["t1"].matrix == _matmul(source, b1) and report["t2"].matrix == _matmul(source, b2)


def is_butterfly(spec: NetworkSpec) -> bool:
    return spec.name == BUTTERFLY_NAME or set(spec.adjacent_pairs()) == _butterfly_pairs()
