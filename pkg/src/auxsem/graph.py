"""Mixed graphs (path diagrams) for linear structural equation models.

A :class:`MixedGraph` holds named nodes, directed edges carrying structural
coefficients and bidirected edges carrying error covariances.  Graphs are
immutable; operations that remove edges return new graphs.

Internally every node has an integer index (declaration order) and the
adjacency is stored as integer bitmasks, which is what the compiled kernels
consume.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator


class GraphError(ValueError):
    """Invalid graph structure or graph file content."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class CycleError(GraphError):
    """The directed part of the graph contains a cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("directed cycle: " + " -> ".join(cycle + cycle[:1]))


@dataclass(frozen=True, order=True)
class DirectedEdge:
    tail: str
    head: str
    label: str = ""

    def __post_init__(self):
        if self.tail == self.head:
            raise GraphError(f"self-loop on {self.tail!r}")
        if not self.label:
            object.__setattr__(self, "label", f"{self.tail}_{self.head}")

    @property
    def key(self) -> str:
        return f"{self.tail}->{self.head}"

    def __str__(self) -> str:
        return f"{self.tail} -> {self.head} [{self.label}]"


@dataclass(frozen=True)
class BidirectedEdge:
    a: str
    b: str
    label: str = ""

    def __post_init__(self):
        if self.a == self.b:
            raise GraphError(f"bidirected self-loop on {self.a!r}")
        if not self.label:
            object.__setattr__(self, "label", f"{self.a}<>{self.b}")

    @property
    def endpoints(self) -> frozenset[str]:
        return frozenset((self.a, self.b))

    def other(self, v: str) -> str:
        return self.b if v == self.a else self.a

    def __eq__(self, other) -> bool:
        if not isinstance(other, BidirectedEdge):
            return NotImplemented
        return self.endpoints == other.endpoints and self.label == other.label

    def __hash__(self) -> int:
        return hash((self.endpoints, self.label))

    def __str__(self) -> str:
        return f"{self.a} <-> {self.b} [{self.label}]"


def bits(mask: int) -> Iterator[int]:
    """Indices of the set bits of ``mask``, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class MixedGraph:
    """Semi-Markovian path diagram ``G = (V, D, B)``.

    Node order is declaration order and drives every deterministic ordering
    downstream (candidate enumeration, serialization, matrix layout).
    """

    def __init__(self, nodes: Iterable[str], directed: Iterable[DirectedEdge] = (),
                 bidirected: Iterable[BidirectedEdge] = ()):
        self.nodes: tuple[str, ...] = tuple(nodes)
        self.index: dict[str, int] = {}
        for v in self.nodes:
            if not v:
                raise GraphError("empty node name")
            if v in self.index:
                raise GraphError(f"duplicate node {v!r}")
            self.index[v] = len(self.index)
        self.directed: tuple[DirectedEdge, ...] = tuple(directed)
        self.bidirected: tuple[BidirectedEdge, ...] = tuple(bidirected)

        n = len(self.nodes)
        pa, ch, sib = [0] * n, [0] * n, [0] * n
        self._edge_by_pair: dict[tuple[str, str], DirectedEdge] = {}
        self._bi_by_pair: dict[frozenset[str], BidirectedEdge] = {}
        labels: set[str] = set()
        for e in self.directed:
            for v in (e.tail, e.head):
                if v not in self.index:
                    raise GraphError(f"edge {e.key} uses undeclared node {v!r}")
            if (e.tail, e.head) in self._edge_by_pair:
                raise GraphError(f"duplicate directed edge {e.key}")
            if e.label in labels:
                raise GraphError(f"duplicate label {e.label!r}")
            labels.add(e.label)
            self._edge_by_pair[(e.tail, e.head)] = e
            t, h = self.index[e.tail], self.index[e.head]
            pa[h] |= 1 << t
            ch[t] |= 1 << h
        for e in self.bidirected:
            for v in (e.a, e.b):
                if v not in self.index:
                    raise GraphError(f"edge {e.a}<->{e.b} uses undeclared node {v!r}")
            if e.endpoints in self._bi_by_pair:
                raise GraphError(f"duplicate bidirected edge {e.a}<->{e.b}")
            if e.label in labels:
                raise GraphError(f"duplicate label {e.label!r}")
            labels.add(e.label)
            self._bi_by_pair[e.endpoints] = e
            i, j = self.index[e.a], self.index[e.b]
            sib[i] |= 1 << j
            sib[j] |= 1 << i
        self.pa: tuple[int, ...] = tuple(pa)
        self.ch: tuple[int, ...] = tuple(ch)
        self.sib: tuple[int, ...] = tuple(sib)
        # validates acyclicity eagerly
        self.topological_order()

    # -- basic lookups -------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, v: str) -> bool:
        return v in self.index

    def __repr__(self) -> str:
        return (f"MixedGraph({len(self.nodes)} nodes, {len(self.directed)} directed, "
                f"{len(self.bidirected)} bidirected)")

    def __eq__(self, other) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return (self.nodes == other.nodes and set(self.directed) == set(other.directed)
                and set(self.bidirected) == set(other.bidirected))

    def __hash__(self) -> int:
        return hash((self.nodes, frozenset(self.directed), frozenset(self.bidirected)))

    def _idx(self, v: str) -> int:
        try:
            return self.index[v]
        except KeyError:
            raise GraphError(f"unknown node {v!r}") from None

    def mask(self, vs: Iterable[str]) -> int:
        m = 0
        for v in vs:
            m |= 1 << self._idx(v)
        return m

    def names(self, mask: int) -> list[str]:
        return [self.nodes[i] for i in bits(mask)]

    def edge(self, tail: str, head: str) -> DirectedEdge:
        try:
            return self._edge_by_pair[(tail, head)]
        except KeyError:
            raise GraphError(f"no directed edge {tail}->{head}") from None

    def has_edge(self, tail: str, head: str) -> bool:
        return (tail, head) in self._edge_by_pair

    def bidirected_edge(self, a: str, b: str) -> BidirectedEdge:
        try:
            return self._bi_by_pair[frozenset((a, b))]
        except KeyError:
            raise GraphError(f"no bidirected edge {a}<->{b}") from None

    def has_bidirected(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self._bi_by_pair

    def find_edge(self, ref: str) -> DirectedEdge:
        """Look up a directed edge by ``"tail->head"`` key or by label."""
        ref = ref.strip()
        if "->" in ref:
            tail, head = (s.strip() for s in ref.split("->", 1))
            return self.edge(tail, head)
        for e in self.directed:
            if e.label == ref:
                return e
        raise GraphError(f"no directed edge with label {ref!r}")

    @cached_property
    def edges_by_label(self) -> dict[str, DirectedEdge | BidirectedEdge]:
        return {e.label: e for e in (*self.directed, *self.bidirected)}

    # -- structural queries ---------------------------------------------

    def parents(self, v: str) -> list[str]:
        return self.names(self.pa[self._idx(v)])

    def children(self, v: str) -> list[str]:
        return self.names(self.ch[self._idx(v)])

    def siblings(self, v: str) -> list[str]:
        return self.names(self.sib[self._idx(v)])

    def incoming(self, v: str) -> list[DirectedEdge]:
        """``Inc(v)``: directed edges with head ``v``, in tail order."""
        return [self._edge_by_pair[(p, v)] for p in self.parents(v)]

    def ancestors_mask(self, mask: int) -> int:
        """Reflexive-transitive closure of ``mask`` under parents."""
        seen = mask
        frontier = mask
        while frontier:
            nxt = 0
            for i in bits(frontier):
                nxt |= self.pa[i]
            frontier = nxt & ~seen
            seen |= frontier
        return seen

    def descendants_mask(self, mask: int) -> int:
        seen = mask
        frontier = mask
        while frontier:
            nxt = 0
            for i in bits(frontier):
                nxt |= self.ch[i]
            frontier = nxt & ~seen
            seen |= frontier
        return seen

    def ancestors(self, vs: str | Iterable[str]) -> set[str]:
        if isinstance(vs, str):
            vs = [vs]
        return set(self.names(self.ancestors_mask(self.mask(vs))))

    def descendants(self, vs: str | Iterable[str]) -> set[str]:
        if isinstance(vs, str):
            vs = [vs]
        return set(self.names(self.descendants_mask(self.mask(vs))))

    def relations(self, v: str) -> dict[str, object]:
        i = self._idx(v)
        return {
            "parents": set(self.names(self.pa[i])),
            "siblings": set(self.names(self.sib[i])),
            "ancestors": set(self.names(self.ancestors_mask(1 << i))),
            "incident_directed_edges": self.incoming(v),
        }

    def topological_order(self) -> list[str]:
        """Kahn's algorithm, ties broken by declaration order."""
        cached = self.__dict__.get("_topo")
        if cached is not None:
            return list(cached)
        n = len(self.nodes)
        indeg = [bin(self.pa[i]).count("1") for i in range(n)]
        placed = 0
        order: list[int] = []
        ready = [i for i in range(n) if indeg[i] == 0]
        while ready:
            i = min(ready)
            ready.remove(i)
            order.append(i)
            placed |= 1 << i
            for c in bits(self.ch[i]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        if len(order) < n:
            raise CycleError(self._find_cycle(~placed & ((1 << n) - 1)))
        self.__dict__["_topo"] = tuple(self.nodes[i] for i in order)
        return [self.nodes[i] for i in order]

    def _find_cycle(self, remaining: int) -> list[str]:
        # every remaining node has a remaining parent; walk back until a repeat
        start = next(bits(remaining))
        path = [start]
        seen = {start: 0}
        cur = start
        while True:
            cur = next(bits(self.pa[cur] & remaining))
            if cur in seen:
                cyc = path[seen[cur]:]
                return [self.nodes[i] for i in reversed(cyc)]
            seen[cur] = len(path)
            path.append(cur)

    # -- derived graphs -------------------------------------------------

    def remove_edges(self, edges: Iterable[DirectedEdge]) -> "MixedGraph":
        drop = set(edges)
        for e in drop:
            if self._edge_by_pair.get((e.tail, e.head)) != e:
                raise GraphError(f"edge {e.key} not in graph")
        return MixedGraph(self.nodes, [e for e in self.directed if e not in drop],
                          self.bidirected)

    def masks_without(self, edges: Iterable[DirectedEdge]) -> tuple[list[int], list[int]]:
        """Parent and child masks with ``edges`` deleted (no new graph object)."""
        pa, ch = list(self.pa), list(self.ch)
        for e in edges:
            t, h = self.index[e.tail], self.index[e.head]
            pa[h] &= ~(1 << t)
            ch[t] &= ~(1 << h)
        return pa, ch


# -- text format -------------------------------------------------------

_IDENT = r"[A-Za-z_][A-Za-z0-9_.']*"
_NODE_RE = re.compile(rf"^node\s+({_IDENT})\s*$")
_EDGE_RE = re.compile(rf"^({_IDENT})\s*(<->|->)\s*({_IDENT})\s*(?:\[\s*([^\]\s]+)\s*\])?\s*$")


def parse_graph(text: str) -> MixedGraph:
    """Parse the line-oriented graph format.

    ``node <name>`` declares a node; ``a -> b [label]`` and ``a <-> b [label]``
    declare edges (labels optional, nodes introduced on first use).  ``#``
    starts a comment.
    """
    nodes: list[str] = []
    seen: set[str] = set()
    directed: list[DirectedEdge] = []
    bidirected: list[BidirectedEdge] = []

    def declare(name: str):
        if name not in seen:
            seen.add(name)
            nodes.append(name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        m = _NODE_RE.match(stripped)
        if m:
            declare(m.group(1))
            continue
        m = _EDGE_RE.match(stripped)
        if not m:
            bad = _first_bad_column(stripped)
            raise GraphError(f"cannot parse {stripped!r}", lineno, col + bad)
        a, arrow, b, label = m.groups()
        try:
            if arrow == "->":
                edge = DirectedEdge(a, b, label or "")
                if any(d.tail == a and d.head == b for d in directed):
                    raise GraphError(f"duplicate directed edge {a}->{b}")
                declare(a)
                declare(b)
                directed.append(edge)
            else:
                edge = BidirectedEdge(a, b, label or "")
                if any(d.endpoints == edge.endpoints for d in bidirected):
                    raise GraphError(f"duplicate bidirected edge {a}<->{b}")
                declare(a)
                declare(b)
                bidirected.append(edge)
        except GraphError as exc:
            raise GraphError(str(exc), lineno, col) from None
    return MixedGraph(nodes, directed, bidirected)


def _first_bad_column(s: str) -> int:
    for k in range(len(s), 0, -1):
        prefix = s[:k]
        if _NODE_RE.match(prefix) or _EDGE_RE.match(prefix):
            return k
    m = re.match(rf"{_IDENT}\s*", s)
    return m.end() if m else 0


def serialize_graph(g: MixedGraph) -> str:
    """Canonical text form: nodes, then directed, then bidirected edges."""
    lines = [f"node {v}" for v in g.nodes]
    lines += [f"{e.tail} -> {e.head} [{e.label}]" for e in g.directed]
    lines += [f"{e.a} <-> {e.b} [{e.label}]" for e in g.bidirected]
    return "\n".join(lines) + "\n"


def load_graph(path) -> MixedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())


def relations(g: MixedGraph, v: str) -> dict[str, object]:
    return g.relations(v)


def topological_order(g: MixedGraph) -> list[str]:
    return g.topological_order()
