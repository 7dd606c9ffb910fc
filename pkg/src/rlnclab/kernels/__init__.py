"""Bulk evaluation of random codes: the enumeration and simulation hot loops.

A network is lowered to a :class:`Program` of flat int32 arrays; field
arithmetic goes through the dense tables of :class:`~rlnclab.field.FieldTables`.
Two interchangeable backends implement the same two primitives:

``batch_outcomes(prog, add, mul, neg, coeffs, masks)``
    success bitmask (bit ``s`` = sink ``s`` decodes) for each row of element
    indices ``coeffs[n, n_pairs]`` under erasure bitmask ``masks[n]``.

``enumerate_histogram(prog, add, mul, neg, q, start, stop, mask)``
    histogram over success bitmasks for the assignments with mixed-radix
    index in ``[start, stop)``; pair ``k`` is digit ``k`` (least significant
    first).

The compiled backend (``_ckernels``) is used when it was built; otherwise the
numpy backend (``_pykernels``) is selected.  ``RLNC_LAB_BACKEND=python``
forces the fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from types import ModuleType

import numpy as np

from ..field import FieldSpec
from ..network import NetworkSpec, topological_order
from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = [
    "Program",
    "compile_network",
    "available_backends",
    "get_backend",
    "BACKEND",
    "worker_count",
    "enumerate_histogram",
    "batch_outcomes",
    "CHUNK",
    "MAX_SINKS",
    "MAX_ERASABLE",
]

# Enumeration work units; fixed so tallies never depend on the worker count.
CHUNK = 1 << 18
MAX_SINKS = 16
MAX_ERASABLE = 63


@dataclass(frozen=True)
class Program:
    rate: int
    n_slots: int
    n_pairs: int
    n_real: int
    sinks: tuple[str, ...]
    real_ids: tuple[str, ...]
    out_slot: np.ndarray
    erase_bit: np.ndarray
    in_ptr: np.ndarray
    in_slot: np.ndarray
    in_pair: np.ndarray
    sink_ptr: np.ndarray
    sink_slot: np.ndarray

    @property
    def n_sinks(self) -> int:
        return len(self.sinks)

    def mask_of(self, erased) -> int:
        bit = {cid: i for i, cid in enumerate(self.real_ids)}
        m = 0
        for cid in erased:
            m |= 1 << bit[cid]
        return m


def compile_network(spec: NetworkSpec) -> Program:
    if len(spec.sinks) > MAX_SINKS:
        raise ValueError(f"at most {MAX_SINKS} sinks are supported by the bulk kernels")
    w = spec.rate
    real = spec.real_channels
    slot = {cid: k for k, cid in enumerate(spec.imaginary_channels)}
    slot.update({c.id: w + r for r, c in enumerate(real)})
    pair_index = {pr: k for k, pr in enumerate(spec.adjacent_pairs())}
    out_slot, erase_bit, in_ptr, in_slot, in_pair = [], [], [0], [], []
    for cid in topological_order(spec):
        if cid in spec.imaginary_channels:
            continue
        ch = spec.channel(cid)
        out_slot.append(slot[cid])
        erase_bit.append(slot[cid] - w)
        for cin in spec.incoming(ch.tail):
            in_slot.append(slot[cin.id])
            in_pair.append(pair_index[(cin.id, cid)])
        in_ptr.append(len(in_slot))
    sink_ptr, sink_slot = [0], []
    for t in spec.sinks:
        sink_slot.extend(slot[c.id] for c in spec.incoming(t) if not c.imaginary)
        sink_ptr.append(len(sink_slot))
    arr = lambda xs: np.ascontiguousarray(xs, dtype=np.int32)  # noqa: E731
    return Program(
        rate=w,
        n_slots=w + len(real),
        n_pairs=len(pair_index),
        n_real=len(real),
        sinks=tuple(spec.sinks),
        real_ids=tuple(c.id for c in real),
        out_slot=arr(out_slot),
        erase_bit=arr(erase_bit),
        in_ptr=arr(in_ptr),
        in_slot=arr(in_slot),
        in_pair=arr(in_pair),
        sink_ptr=arr(sink_ptr),
        sink_slot=arr(sink_slot),
    )


def available_backends() -> dict[str, ModuleType]:
    found = {"python": _pykernels}
    if _ckernels is not None:
        found["cython"] = _ckernels
    return found


def _select() -> tuple[str, ModuleType]:
    wanted = os.environ.get("RLNC_LAB_BACKEND", "auto").lower()
    backends = available_backends()
    if wanted in backends:
        return wanted, backends[wanted]
    if wanted not in ("auto", ""):
        raise ImportError(f"RLNC_LAB_BACKEND={wanted!r} is not available; have {sorted(backends)}")
    return ("cython", _ckernels) if _ckernels is not None else ("python", _pykernels)


BACKEND, _default = _select()


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _default
    return available_backends()[name]


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("RLNC_LAB_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _tables(field: FieldSpec):
    if not field.has_tables:
        raise ValueError(f"bulk kernels need arithmetic tables; {field} is too large")
    t = field.tables
    return t.add, t.mul, t.neg


def enumerate_histogram(
    prog: Program,
    field: FieldSpec,
    mask: int = 0,
    *,
    start: int = 0,
    stop: int | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> np.ndarray:
    """Histogram of success bitmasks over assignments ``start..stop`` (default: all)."""
    mod = get_backend(backend)
    add, mul, neg = _tables(field)
    q = field.order
    if stop is None:
        stop = q**prog.n_pairs
    bounds = [(lo, min(lo + CHUNK, stop)) for lo in range(start, stop, CHUNK)]

    def run(bound):
        return mod.enumerate_histogram(prog, add, mul, neg, q, bound[0], bound[1], mask)

    hist = np.zeros(1 << prog.n_sinks, dtype=np.int64)
    n = worker_count(workers)
    if n == 1 or len(bounds) == 1:
        for b in bounds:
            hist += run(b)
    else:
        with ThreadPoolExecutor(n) as pool:
            for part in pool.map(run, bounds):
                hist += part
    return hist


def batch_outcomes(
    prog: Program,
    field: FieldSpec,
    coeffs: np.ndarray,
    masks: np.ndarray | None = None,
    *,
    backend: str | None = None,
) -> np.ndarray:
    mod = get_backend(backend)
    add, mul, neg = _tables(field)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.int64)
    if coeffs.ndim != 2 or coeffs.shape[1] != prog.n_pairs:
        raise ValueError(f"coefficient rows must have {prog.n_pairs} entries")
    if masks is None:
        masks = np.zeros(len(coeffs), dtype=np.int64)
    masks = np.ascontiguousarray(masks, dtype=np.int64)
    return mod.batch_outcomes(prog, add, mul, neg, coeffs, masks)
