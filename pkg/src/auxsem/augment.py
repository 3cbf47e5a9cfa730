"""Auxiliary variables and augmented graphs.

Knowing the coefficients on some edges into ``y`` lets us form the proxy
``y* = y - sum(lambda_xy * x)`` over those known parents.  The augmented graph
adds ``y*`` as a childless node with edges ``y -> y*`` (weight +1) and
``x -> y*`` (weight minus the known coefficient).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .graph import DirectedEdge, GraphError, MixedGraph

EXTERNAL, IDENTIFIED = "external", "identified"
AUX_SUFFIX = "*"


@dataclass(frozen=True)
class KnownValue:
    source: str
    value: float | None = None
    certificate: object = field(default=None, compare=False)


class KnownEdges(Mapping[DirectedEdge, KnownValue]):
    """Immutable map from edges to where their coefficient value comes from."""

    def __init__(self, entries: Mapping[DirectedEdge, KnownValue] | None = None):
        self._entries = dict(entries or {})
        for e, kv in self._entries.items():
            if not isinstance(e, DirectedEdge):
                raise TypeError(f"known edges must be directed edges, got {e!r}")
            if kv.source not in (EXTERNAL, IDENTIFIED):
                raise ValueError(f"unknown knowledge source {kv.source!r}")

    @classmethod
    def external(cls, values: Mapping[DirectedEdge, float | None] | Iterable[DirectedEdge]) -> "KnownEdges":
        if not isinstance(values, Mapping):
            values = dict.fromkeys(values)
        return cls({e: KnownValue(EXTERNAL, None if v is None else float(v)) for e, v in values.items()})

    def __getitem__(self, e: DirectedEdge) -> KnownValue:
        return self._entries[e]

    def __iter__(self) -> Iterator[DirectedEdge]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"KnownEdges({sorted(e.key for e in self._entries)})"

    def check_graph(self, g: MixedGraph) -> None:
        for e in self._entries:
            if not g.has_edge(e.tail, e.head) or g.edge(e.tail, e.head) != e:
                raise GraphError(f"known edge {e.key} is not in the graph")

    def with_identified(self, edges: Iterable[DirectedEdge], certificate=None,
                        values: Mapping[DirectedEdge, float] | None = None) -> "KnownEdges":
        entries = dict(self._entries)
        for e in edges:
            if e not in entries:
                v = None if values is None else values.get(e)
                entries[e] = KnownValue(IDENTIFIED, v, certificate)
        return KnownEdges(entries)

    def with_values(self, values: Mapping[DirectedEdge, float]) -> "KnownEdges":
        entries = dict(self._entries)
        for e, v in values.items():
            old = entries.get(e, KnownValue(IDENTIFIED))
            entries[e] = KnownValue(old.source, float(v), old.certificate)
        return KnownEdges(entries)

    def external_only(self) -> "KnownEdges":
        return KnownEdges({e: kv for e, kv in self._entries.items() if kv.source == EXTERNAL})

    def into(self, v: str) -> list[DirectedEdge]:
        return [e for e in self._entries if e.head == v]

    def numeric(self) -> dict[DirectedEdge, float]:
        missing = [e.key for e, kv in self._entries.items() if kv.value is None]
        if missing:
            raise ValueError(f"no numeric value for known edge(s): {', '.join(sorted(missing))}")
        return {e: kv.value for e, kv in self._entries.items()}


_KNOWN_RE = re.compile(r"^\s*(\S+)\s*->\s*(\S+)\s*=\s*(\S+)\s*$")


def parse_known(text: str, g: MixedGraph) -> KnownEdges:
    """Parse lines ``tail -> head = value`` (``#`` comments allowed)."""
    values: dict[DirectedEdge, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        m = _KNOWN_RE.match(line)
        if not m:
            raise GraphError(f"expected 'tail -> head = value', got {line.strip()!r}", lineno, 1)
        tail, head, val = m.groups()
        if not g.has_edge(tail, head):
            raise GraphError(f"no edge {tail}->{head} in the graph", lineno, 1)
        try:
            number = float(val)
        except ValueError:
            raise GraphError(f"bad number {val!r}", lineno, line.index(val) + 1) from None
        e = g.edge(tail, head)
        if e in values:
            raise GraphError(f"edge {e.key} given twice", lineno, 1)
        values[e] = number
    return KnownEdges.external(values)


def load_known(path, g: MixedGraph) -> KnownEdges:
    with open(path, encoding="utf-8") as fh:
        return parse_known(fh.read(), g)


def aux_name(v: str) -> str:
    return v + AUX_SUFFIX


class AugmentedGraph:
    """A base graph plus one auxiliary node per head of the subtracted edges.

    ``graph`` is a MixedGraph over base and auxiliary nodes; ``weight(edge)``
    gives each edge's path-tracing factor as ``(coefficient, symbols)``.
    """

    def __init__(self, base: MixedGraph, subtracted: Iterable[DirectedEdge]):
        subtracted = frozenset(subtracted)
        for e in subtracted:
            if not base.has_edge(e.tail, e.head) or base.edge(e.tail, e.head) != e:
                raise GraphError(f"edge {e.key} is not in the graph")
        self.base = base
        self.subtracted = subtracted
        heads = [v for v in base.nodes if any(e.head == v for e in subtracted)]
        self.aux_nodes = {y: aux_name(y) for y in heads}
        for y, ys in self.aux_nodes.items():
            if ys in base:
                raise GraphError(f"auxiliary name {ys!r} clashes with a base node")
        self._weights: dict[DirectedEdge, tuple[Fraction, tuple[str, ...]]] = {}
        aux_edges = []
        for y, ys in self.aux_nodes.items():
            unit = DirectedEdge(y, ys, f"{y}->{ys}")
            aux_edges.append(unit)
            self._weights[unit] = (Fraction(1), ())
            for e in sorted((e for e in subtracted if e.head == y), key=lambda e: base.index[e.tail]):
                sub = DirectedEdge(e.tail, ys, f"{e.tail}->{ys}")
                aux_edges.append(sub)
                self._weights[sub] = (Fraction(-1), (e.label,))
        self.aux_edges = tuple(aux_edges)
        self.graph = MixedGraph(base.nodes + tuple(self.aux_nodes.values()),
                                base.directed + self.aux_edges, base.bidirected)

    def __repr__(self) -> str:
        return f"AugmentedGraph(aux={list(self.aux_nodes.values())})"

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.graph.nodes

    def weight(self, edge) -> tuple[Fraction, tuple[str, ...]]:
        if edge in self._weights:
            return self._weights[edge]
        return Fraction(1), (edge.label,)

    def subtracted_into(self, y: str) -> list[DirectedEdge]:
        return sorted((e for e in self.subtracted if e.head == y), key=lambda e: self.base.index[e.tail])


def augment(g: MixedGraph | AugmentedGraph, edges: Iterable[DirectedEdge]) -> AugmentedGraph:
    """``G^{E+}``.  Augmenting an augmented graph re-layers against its base."""
    if isinstance(g, AugmentedGraph):
        return AugmentedGraph(g.base, g.subtracted | frozenset(edges))
    return AugmentedGraph(g, edges)


def expand(v: str, values: Mapping[DirectedEdge, float]) -> dict[str, float]:
    """Linear combination of base variables that ``v`` (possibly ``y*``) denotes."""
    if v.endswith(AUX_SUFFIX):
        y = v[: -len(AUX_SUFFIX)]
        combo = {y: 1.0}
        for e, lam in values.items():
            if e.head == y:
                if lam is None:
                    raise ValueError(f"no numeric value for {e.key}")
                combo[e.tail] = combo.get(e.tail, 0.0) - lam
        return combo
    return {v: 1.0}


def aux_covariance(sigma, values: Mapping[DirectedEdge, float], a: str, b: str) -> float:
    """Covariance of ``a`` and ``b`` where either may be an auxiliary ``y*``.

    ``sigma`` is a CovMatrix over the base nodes.  An auxiliary ``y*``
    subtracts every edge into ``y`` that appears in ``values``.
    """
    ca, cb = expand(a, values), expand(b, values)
    for v in (*ca, *cb):
        if v not in sigma.index:
            raise GraphError(f"unknown node {v!r}")
    total = 0.0
    for u, wu in ca.items():
        for v, wv in cb.items():
            total += wu * wv * sigma[u, v]
    return total
