"""Single-source multicast DAGs with unit-capacity channels.

The source gets ``rate`` imaginary input channels ``d1..dw``; they are always
generated, never declared.  Channel order (for tie-breaking and for decoding
matrix columns) is declaration order, with imaginary channels first.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

__all__ = [
    "NetworkError",
    "CyclicNetwork",
    "UnknownSink",
    "InvalidNetwork",
    "Channel",
    "NetworkSpec",
    "Violation",
    "ValidationReport",
    "build_butterfly",
    "make_network",
    "validate",
    "topological_order",
    "min_cut",
    "load_network",
    "network_to_dict",
    "network_from_dict",
    "BUTTERFLY_NAME",
    "FILE_FORMAT_VERSION",
]

BUTTERFLY_NAME = "builtin:butterfly"
FILE_FORMAT_VERSION = 1


class NetworkError(ValueError):
    pass


class CyclicNetwork(NetworkError):
    pass


class UnknownSink(NetworkError):
    pass


class InvalidNetwork(NetworkError):
    pass


@dataclass(frozen=True)
class Channel:
    id: str
    tail: str
    head: str
    kind: str = "real"

    @property
    def imaginary(self) -> bool:
        return self.kind == "imaginary"


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple[str, ...]
    channels: tuple[Channel, ...]
    source: str
    sinks: tuple[str, ...]
    rate: int
    imaginary_channels: tuple[str, ...]
    name: str = ""

    @property
    def real_channels(self) -> tuple[Channel, ...]:
        return tuple(c for c in self.channels if not c.imaginary)

    @property
    def all_channels(self) -> tuple[Channel, ...]:
        """Imaginary channels first, then real channels in declaration order."""
        return self.imaginary + self.real_channels

    @property
    def imaginary(self) -> tuple[Channel, ...]:
        return tuple(Channel(cid, VIRTUAL_ORIGIN, self.source, "imaginary") for cid in self.imaginary_channels)

    def channel(self, cid: str) -> Channel:
        for c in self.all_channels:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def incoming(self, node: str) -> list[Channel]:
        return [c for c in self.all_channels if c.head == node]

    def outgoing(self, node: str) -> list[Channel]:
        return [c for c in self.real_channels if c.tail == node]

    def adjacent_pairs(self) -> list[tuple[str, str]]:
        """All ``(e_in, e_out)`` with ``head(e_in) == tail(e_out)``.

        Ordered by the topological position of ``e_out``, then of ``e_in``;
        this is also the coefficient sampling and enumeration order.
        """
        return list(_adjacent_pairs(self))


@lru_cache(maxsize=256)
def _adjacent_pairs(spec: NetworkSpec) -> tuple[tuple[str, str], ...]:
    order = topological_order(spec)
    pos = {cid: i for i, cid in enumerate(order)}
    pairs = []
    for cid in order:
        out = spec.channel(cid)
        if out.imaginary:
            continue
        for cin in sorted(spec.incoming(out.tail), key=lambda c: pos[c.id]):
            pairs.append((cin.id, out.id))
    return tuple(pairs)


VIRTUAL_ORIGIN = "<origin>"


def make_network(nodes, channels, source, sinks, rate, name="") -> NetworkSpec:
    """Build a NetworkSpec from plain data; ``channels`` holds (id, tail, head) triples."""
    rate = int(rate)
    chans = tuple(Channel(str(cid), str(t), str(h)) for cid, t, h in channels)
    taken = {c.id for c in chans}
    imaginary = []
    k = 1
    while len(imaginary) < rate:
        cid = f"d{k}"
        k += 1
        if cid not in taken:
            imaginary.append(cid)
    return NetworkSpec(
        nodes=tuple(str(n) for n in nodes),
        channels=chans,
        source=str(source),
        sinks=tuple(str(s) for s in sinks),
        rate=rate,
        imaginary_channels=tuple(imaginary),
        name=name,
    )


def build_butterfly() -> NetworkSpec:
    return make_network(
        nodes=["s", "s1", "s2", "i", "j", "t1", "t2"],
        channels=[
            ("e1", "s", "s1"),
            ("e2", "s", "s2"),
            ("e3", "s1", "t1"),
            ("e4", "s1", "i"),
            ("e5", "s2", "i"),
            ("e6", "s2", "t2"),
            ("e7", "i", "j"),
            ("e8", "j", "t1"),
            ("e9", "j", "t2"),
        ],
        source="s",
        sinks=["t1", "t2"],
        rate=2,
        name=BUTTERFLY_NAME,
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return bool(self.violations)


def _has_cycle(spec: NetworkSpec) -> bool:
    adj: dict[str, list[str]] = {}
    indeg = {n: 0 for n in spec.nodes}
    for c in spec.real_channels:
        if c.tail in indeg and c.head in indeg:
            adj.setdefault(c.tail, []).append(c.head)
            indeg[c.head] += 1
    queue = deque(n for n, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        n = queue.popleft()
        seen += 1
        for h in adj.get(n, []):
            indeg[h] -= 1
            if indeg[h] == 0:
                queue.append(h)
    return seen != len(indeg)


def _reachable(spec: NetworkSpec) -> set[str]:
    out: dict[str, list[str]] = {}
    for c in spec.real_channels:
        out.setdefault(c.tail, []).append(c.head)
    seen = {spec.source}
    stack = [spec.source]
    while stack:
        for h in out.get(stack.pop(), []):
            if h not in seen:
                seen.add(h)
                stack.append(h)
    return seen


def validate(spec: NetworkSpec) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations.append
    nodes = set(spec.nodes)
    if len(nodes) != len(spec.nodes):
        bad(Violation("duplicate-node", "node ids are not unique"))
    if spec.source not in nodes:
        bad(Violation("unknown-node", f"source {spec.source!r} is not a declared node"))
    if not spec.sinks:
        bad(Violation("no-sinks", "at least one sink is required"))
    if spec.rate < 1:
        bad(Violation("rate", f"rate must be >= 1, got {spec.rate}"))
    if len(spec.imaginary_channels) != spec.rate:
        bad(Violation("imaginary-channels", "number of imaginary channels must equal the rate"))

    ids = [c.id for c in spec.channels]
    if len(set(ids)) != len(ids):
        bad(Violation("duplicate-channel", "channel ids are not unique"))
    if set(ids) & set(spec.imaginary_channels):
        bad(Violation("imaginary-channels", "imaginary channel ids clash with real channels"))
    for c in spec.channels:
        if c.imaginary:
            bad(Violation("imaginary-channels", f"channel {c.id} is declared imaginary"))
        for end in (c.tail, c.head):
            if end not in nodes:
                bad(Violation("unknown-node", f"channel {c.id} references undeclared node {end!r}"))
        if c.tail == c.head:
            bad(Violation("self-loop", f"channel {c.id} is a self-loop at {c.tail!r}"))

    if _has_cycle(spec):
        bad(Violation("cycle", "the graph on real channels contains a directed cycle"))

    reach = _reachable(spec)
    for t in spec.sinks:
        if t not in nodes:
            bad(Violation("unknown-node", f"sink {t!r} is not a declared node"))
        if t not in reach:
            bad(Violation("unreachable-sink", f"sink {t!r} is not reachable from the source"))

    if report.ok:
        for t in spec.sinks:
            cut = min_cut(spec, t)
            if cut < spec.rate:
                report.warnings.append(
                    Violation("rate-exceeds-min-cut", f"min cut to {t!r} is {cut} < rate {spec.rate}")
                )
    return report


def topological_order(spec: NetworkSpec) -> list[str]:
    """Channel ids, imaginary first, each real channel after everything entering its tail."""
    return list(_topological_order(spec))


@lru_cache(maxsize=256)
def _topological_order(spec: NetworkSpec) -> tuple[str, ...]:
    chans = spec.all_channels
    rank = {c.id: i for i, c in enumerate(chans)}
    waiting = {c.id: len(spec.incoming(c.tail)) if not c.imaginary else 0 for c in chans}
    heap = [rank[cid] for cid, n in waiting.items() if n == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        c = chans[heapq.heappop(heap)]
        order.append(c.id)
        for nxt in spec.outgoing(c.head):
            waiting[nxt.id] -= 1
            if waiting[nxt.id] == 0:
                heapq.heappush(heap, rank[nxt.id])
    if len(order) != len(chans):
        raise CyclicNetwork("network contains a directed cycle")
    return tuple(order)


def min_cut(spec: NetworkSpec, sink: str) -> int:
    """Max number of channel-disjoint source-to-sink paths (BFS augmenting paths)."""
    if sink not in spec.sinks:
        raise UnknownSink(f"{sink!r} is not a sink of this network")
    # residual capacity per directed node pair; parallel channels add up
    cap: dict[tuple[str, str], int] = {}
    adj: dict[str, set[str]] = {}
    for c in spec.real_channels:
        cap[(c.tail, c.head)] = cap.get((c.tail, c.head), 0) + 1
        cap.setdefault((c.head, c.tail), 0)
        adj.setdefault(c.tail, set()).add(c.head)
        adj.setdefault(c.head, set()).add(c.tail)
    flow = 0
    while True:
        parent = {spec.source: None}
        queue = deque([spec.source])
        while queue and sink not in parent:
            u = queue.popleft()
            for v in sorted(adj.get(u, ())):
                if v not in parent and cap[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if sink not in parent:
            return flow
        v = sink
        while parent[v] is not None:
            u = parent[v]
            cap[(u, v)] -= 1
            cap[(v, u)] += 1
            v = u
        flow += 1


# -- network description files ---------------------------------------------


def network_to_dict(spec: NetworkSpec) -> dict:
    return {
        "version": FILE_FORMAT_VERSION,
        "nodes": list(spec.nodes),
        "channels": [{"id": c.id, "tail": c.tail, "head": c.head} for c in spec.channels],
        "source": spec.source,
        "sinks": list(spec.sinks),
        "rate": spec.rate,
    }


def network_from_dict(data: dict, name: str = "") -> NetworkSpec:
    version = data.get("version", FILE_FORMAT_VERSION)
    if version != FILE_FORMAT_VERSION:
        raise InvalidNetwork(f"unsupported network file version {version!r}")
    missing = {"nodes", "channels", "source", "sinks", "rate"} - data.keys()
    if missing:
        raise InvalidNetwork(f"network description lacks fields: {', '.join(sorted(missing))}")
    try:
        chans = [(c["id"], c["tail"], c["head"]) for c in data["channels"]]
    except (KeyError, TypeError) as exc:
        raise InvalidNetwork(f"malformed channel entry: {exc}") from None
    return make_network(data["nodes"], chans, data["source"], data["sinks"], data["rate"], name=name)


def load_network(ref: str, check: bool = True) -> NetworkSpec:
    """Resolve ``builtin:butterfly`` or read a JSON network description.

    With ``check`` (the default) an invalid network raises :class:`InvalidNetwork`.
    """
    if ref == BUTTERFLY_NAME:
        return build_butterfly()
    if ref.startswith("builtin:"):
        raise InvalidNetwork(f"unknown builtin network {ref!r}")
    path = Path(ref)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidNetwork(f"cannot read network file {ref!r}: {exc}") from None
    spec = network_from_dict(data, name=str(path))
    if not check:
        return spec
    report = validate(spec)
    if not report.ok:
        raise InvalidNetwork("; ".join(v.message for v in report.violations))
    return spec
