"""Identification by instrumental sets, auxiliary instruments and the g-HTC.

All searches are deterministic: heads are visited in node order, target edge
sets in increasing size (singletons first) and instrument sets as
lexicographic subsets of a filtered candidate pool.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from . import kernels
from .augment import EXTERNAL, KnownEdges
from .graph import DirectedEdge, MixedGraph, bits
from .separation import PathSystem, _htr_mask, d_separated, find_path_system

SIMPLE_IS, AUX_IS, QUASI, GHTC = "simpleIS", "auxIS", "quasi", "gHTC"


class BudgetExceeded(RuntimeError):
    """The candidate search for one head is larger than the configured budget."""


class SubsumptionViolation(AssertionError):
    """An edge identified by the g-HTC was missed by auxiliary instrumental sets."""


@dataclass(frozen=True)
class Budget:
    max_incoming: int = 8
    max_pool: int = 20


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class EdgeSet:
    edges: tuple[DirectedEdge, ...]

    def __post_init__(self):
        if not self.edges:
            raise ValueError("an edge set needs at least one edge")
        heads = {e.head for e in self.edges}
        if len(heads) != 1:
            raise ValueError(f"edges must share one head, got {sorted(heads)}")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("repeated edge in edge set")

    @classmethod
    def of(cls, g: MixedGraph, edges: Iterable[DirectedEdge | str]) -> "EdgeSet":
        es = [g.find_edge(e) if isinstance(e, str) else e for e in edges]
        return cls(tuple(sorted(es, key=lambda e: g.index[e.tail])))

    @property
    def head(self) -> str:
        return self.edges[0].head

    @property
    def tails(self) -> tuple[str, ...]:
        return tuple(e.tail for e in self.edges)

    @property
    def keys(self) -> list[str]:
        return [e.key for e in self.edges]

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __str__(self) -> str:
        return "{" + ", ".join(e.key for e in self.edges) + "}"


@dataclass(frozen=True)
class IdentificationCertificate:
    """Recipe for the coefficients of ``target``.

    Instrument ``z`` enters as ``z*`` with ``subtracted[z]`` removed; the head
    enters as ``y*`` with ``head_subtracted`` removed.  The coefficients solve
    ``A c = b`` with ``A[i][j] = cov(z_i*, x_j)`` and ``b[i] = cov(z_i*, y*)``.
    """

    target: EdgeSet
    instruments: tuple[str, ...]
    subtracted: Mapping[str, tuple[DirectedEdge, ...]]
    path_system: PathSystem
    method: str
    head_subtracted: tuple[DirectedEdge, ...] = ()
    round: int | None = None

    def required_edges(self) -> set[DirectedEdge]:
        req = set(self.head_subtracted)
        for es in self.subtracted.values():
            req.update(es)
        return req

    def with_round(self, r: int) -> "IdentificationCertificate":
        return IdentificationCertificate(self.target, self.instruments, self.subtracted,
                                         self.path_system, self.method, self.head_subtracted, r)

    def to_json(self) -> dict:
        return {
            "target": self.target.keys,
            "method": self.method,
            "instruments": list(self.instruments),
            "subtracted": {z: [e.key for e in self.subtracted.get(z, ())] for z in self.instruments},
            "head_subtracted": [e.key for e in self.head_subtracted],
            "paths": self.path_system.to_json(),
            "round": self.round,
        }

    def __str__(self) -> str:
        zs = []
        for z in self.instruments:
            sub = self.subtracted.get(z, ())
            zs.append(f"{z}* (minus {', '.join(e.key for e in sub)})" if sub else z)
        s = f"{self.target} via {', '.join(zs)} [{self.method}]"
        if self.head_subtracted:
            s += f", head minus {', '.join(e.key for e in self.head_subtracted)}"
        return s


@dataclass
class IdentificationResult:
    graph: MixedGraph
    method: str
    identified: list[tuple[EdgeSet, IdentificationCertificate]]
    unidentified: set[DirectedEdge]
    rounds: int
    external: KnownEdges = field(default_factory=KnownEdges)
    budget_errors: dict[str, str] = field(default_factory=dict)

    @property
    def identified_edges(self) -> set[DirectedEdge]:
        return {e for es, _ in self.identified for e in es}

    def edge_round(self) -> dict[DirectedEdge, int]:
        out: dict[DirectedEdge, int] = {}
        for es, cert in self.identified:
            for e in es:
                out.setdefault(e, cert.round)
        return out

    def known_before(self, r: int) -> KnownEdges:
        """Knowledge available at the start of round ``r``."""
        known = self.external
        for es, cert in self.identified:
            if cert.round < r:
                known = known.with_identified(es, cert)
        return known

    @property
    def complete(self) -> bool:
        return not self.unidentified

    def to_json(self) -> dict:
        order = {e: i for i, e in enumerate(self.graph.directed)}
        return {
            "method": self.method,
            "rounds": self.rounds,
            "external": sorted(e.key for e in self.external),
            "identified": [cert.to_json() for _, cert in self.identified],
            "unidentified": [e.key for e in sorted(self.unidentified, key=order.__getitem__)],
            "budget_errors": dict(self.budget_errors),
        }

    def __str__(self) -> str:
        lines = [f"method: {self.method}, rounds: {self.rounds}"]
        if self.external:
            order = {e: i for i, e in enumerate(self.graph.directed)}
            ext = sorted(self.external, key=order.__getitem__)
            lines.append("  known: " + ", ".join(f"{e.label} ({e.key})" for e in ext))
        for es, cert in self.identified:
            labels = ", ".join(e.label for e in es)
            lines.append(f"  round {cert.round}: {labels} = {cert}")
        if self.unidentified:
            order = {e: i for i, e in enumerate(self.graph.directed)}
            rest = sorted(self.unidentified, key=order.__getitem__)
            lines.append("  unidentified: " + ", ".join(f"{e.label} ({e.key})" for e in rest))
        for y, msg in self.budget_errors.items():
            lines.append(f"  budget exceeded at {y}: {msg}")
        return "\n".join(lines)


# -- single checks --------------------------------------------------------------


def _as_known(known) -> KnownEdges:
    if known is None:
        return KnownEdges()
    if isinstance(known, KnownEdges):
        return known
    return KnownEdges.external(known)


def _instrument_subtraction(g: MixedGraph, z: str, known: Iterable[DirectedEdge]) -> tuple[DirectedEdge, ...]:
    return tuple(sorted((e for e in known if e.head == z), key=lambda e: g.index[e.tail]))


def _instrument_ok(g: MixedGraph, z: str, target: EdgeSet, sub: Iterable[DirectedEdge],
                   head_sub: Iterable[DirectedEdge] = ()) -> bool:
    if z == target.head:
        return False
    return d_separated(g, z, target.head, (), [*target.edges, *sub, *head_sub])


def _certify(g: MixedGraph, Z: Sequence[str], target: EdgeSet,
             subs: Mapping[str, tuple[DirectedEdge, ...]], method: str,
             head_sub: tuple[DirectedEdge, ...] = ()) -> IdentificationCertificate | None:
    # a path may not leave z through an edge whose effect z* has cancelled
    banned = {z: [e.tail for e in subs[z]] for z in Z}
    ps = find_path_system(g, list(Z), list(target.tails), "unblocked", banned)
    if ps is None:
        return None
    return IdentificationCertificate(target, tuple(Z), dict(subs), ps, method, head_sub)


def _check_sizes(Z: Sequence[str], E: EdgeSet):
    if len(Z) != len(E):
        raise ValueError(f"need {len(E)} instruments, got {len(Z)}")
    if len(set(Z)) != len(Z):
        raise ValueError("instruments must be distinct")


def check_aux_is(g: MixedGraph, Z: Sequence[str], E: EdgeSet,
                 known=None) -> IdentificationCertificate | None:
    """Certificate iff ``Z`` (with known edges into each instrument subtracted) is an instrumental set."""
    _check_sizes(Z, E)
    known = _as_known(known)
    for z in Z:
        g._idx(z)
    subs = {z: _instrument_subtraction(g, z, known) for z in Z}
    if not all(_instrument_ok(g, z, E, subs[z]) for z in Z):
        return None
    method = AUX_IS if any(subs.values()) else SIMPLE_IS
    return _certify(g, Z, E, subs, method)


def check_simple_is(g: MixedGraph, Z: Sequence[str], E: EdgeSet) -> IdentificationCertificate | None:
    return check_aux_is(g, Z, E, None)


def _head_subtraction(g: MixedGraph, E: EdgeSet, known: KnownEdges) -> tuple[DirectedEdge, ...]:
    ext = [e for e, kv in known.items() if kv.source == EXTERNAL and e.head == E.head]
    overlap = set(ext) & set(E.edges)
    if overlap:
        raise ValueError("target overlaps the known head edges: "
                         + ", ".join(sorted(e.key for e in overlap)))
    return tuple(sorted(ext, key=lambda e: g.index[e.tail]))


def check_quasi(g: MixedGraph, Z: Sequence[str], E: EdgeSet,
                known=None) -> IdentificationCertificate | None:
    """Like :func:`check_aux_is`, but externally known edges into the head are also subtracted."""
    _check_sizes(Z, E)
    known = _as_known(known)
    head_sub = _head_subtraction(g, E, known)
    if not head_sub:
        return check_aux_is(g, Z, E, known)
    subs = {z: _instrument_subtraction(g, z, known) for z in Z}
    if not all(_instrument_ok(g, z, E, subs[z], head_sub) for z in Z):
        return None
    return _certify(g, Z, E, subs, QUASI, head_sub)


# -- search ----------------------------------------------------------------------


def _aux_pool(g: MixedGraph, E: EdgeSet, known: KnownEdges, quasi: bool):
    head_sub = _head_subtraction(g, E, known) if quasi else ()
    pool, subs = [], {}
    for z in g.nodes:
        sub = _instrument_subtraction(g, z, known)
        if _instrument_ok(g, z, E, sub, head_sub):
            pool.append(z)
            subs[z] = sub
    return pool, subs, head_sub


def _aux_certificates(g, E, known, budget, quasi):
    pool, subs, head_sub = _aux_pool(g, E, _as_known(known), quasi)
    if len(pool) > budget.max_pool:
        raise BudgetExceeded(f"{len(pool)} candidate instruments for {E} (limit {budget.max_pool})")
    if head_sub:
        method = QUASI
    for Z in itertools.combinations(pool, len(E)):
        zsubs = {z: subs[z] for z in Z}
        if not head_sub:
            method = AUX_IS if any(zsubs.values()) else SIMPLE_IS
        cert = _certify(g, Z, E, zsubs, method, head_sub)
        if cert is not None:
            yield cert


def find_certificate(g: MixedGraph, E: EdgeSet, known=None, budget: Budget = DEFAULT_BUDGET,
                     quasi: bool = False) -> IdentificationCertificate | None:
    """First auxiliary instrumental set for ``E`` in lexicographic order, or None."""
    return next(_aux_certificates(g, E, known, budget, quasi), None)


def all_certificates(g: MixedGraph, E: EdgeSet, known=None, budget: Budget = DEFAULT_BUDGET,
                     quasi: bool = False) -> list[IdentificationCertificate]:
    return list(_aux_certificates(g, E, known, budget, quasi))


# -- g-HTC ---------------------------------------------------------------------------


def _trek_reach_avoiding(g: MixedGraph, w: int, avoid: int) -> int:
    """Nodes joined to ``w`` by a trek that does not pass through ``avoid``."""
    keep = ~(1 << avoid)
    pa = [m & keep for m in g.pa]
    ch = [m & keep for m in g.ch]
    sib = [m & keep for m in g.sib]
    pa[avoid] = ch[avoid] = sib[avoid] = 0
    return kernels.dconnected_set(pa, ch, sib, w, 0, 0) | (1 << w)


def blocking_edges(g: MixedGraph, z: str, E: EdgeSet) -> list[DirectedEdge]:
    """Edges into ``z`` that must be known before ``z`` may serve as a g-HTC instrument.

    An edge ``w -> z`` counts when it ends a half-trek from the head to ``z``,
    or when it starts a trek from ``z`` to a parent of the head outside the
    target tails.
    """
    y = E.head
    iy, iz = g.index[y], g.index[z]
    htr_y = _htr_mask(g.pa, g.ch, g.sib, iy) | (1 << iy)
    others = g.pa[iy] & ~g.mask(E.tails)
    out = []
    for w in bits(g.pa[iz]):
        e = g.edge(g.nodes[w], z)
        if (htr_y >> w) & 1:
            out.append(e)
        elif others and _trek_reach_avoiding(g, w, iz) & others:
            out.append(e)
    return out


def _ghtc_pool(g: MixedGraph, E: EdgeSet, identified: set[DirectedEdge]):
    y = E.head
    iy = g.index[y]
    excluded = (1 << iy) | g.sib[iy]
    others = g.pa[iy] & ~g.mask(E.tails)
    pool, subs = [], {}
    for z in g.nodes:
        iz = g.index[z]
        if (excluded | others) >> iz & 1:
            continue
        if _htr_mask(g.pa, g.ch, g.sib, iz) & others:
            continue
        block = blocking_edges(g, z, E)
        if not set(block) <= identified:
            continue
        pool.append(z)
        subs[z] = tuple(block)
    return pool, subs


def _ghtc_certify(g, Z, E, subs):
    ps = find_path_system(g, list(Z), list(E.tails), "half_trek")
    if ps is None:
        return None
    return IdentificationCertificate(E, tuple(Z), {z: subs[z] for z in Z}, ps, GHTC)


def ghtc_admissible(g: MixedGraph, Z: Sequence[str], E: EdgeSet,
                    identified: Iterable[DirectedEdge] = ()) -> IdentificationCertificate | None:
    """Certificate iff ``Z`` satisfies the general half-trek criterion with only allowed nodes.

    The certificate subtracts each instrument's blocking edges, so it is
    evaluated exactly like an auxiliary instrumental set.
    """
    _check_sizes(Z, E)
    for z in Z:
        g._idx(z)
    pool, subs = _ghtc_pool(g, E, set(identified))
    if not set(Z) <= set(pool):
        return None
    return _ghtc_certify(g, Z, E, subs)


def find_ghtc_certificate(g: MixedGraph, E: EdgeSet, identified: Iterable[DirectedEdge] = (),
                          budget: Budget = DEFAULT_BUDGET) -> IdentificationCertificate | None:
    pool, subs = _ghtc_pool(g, E, set(identified))
    if len(pool) > budget.max_pool:
        raise BudgetExceeded(f"{len(pool)} candidate instruments for {E} (limit {budget.max_pool})")
    for Z in itertools.combinations(pool, len(E)):
        cert = _ghtc_certify(g, Z, E, subs)
        if cert is not None:
            return cert
    return None


# -- fixpoints ------------------------------------------------------------------------

Finder = Callable[[EdgeSet, KnownEdges], "IdentificationCertificate | None"]


def _fixpoint(g: MixedGraph, external: KnownEdges, finder: Finder, method: str,
              budget: Budget, max_rounds: int | None = None) -> IdentificationResult:
    external.check_graph(g)
    known = external
    identified: list[tuple[EdgeSet, IdentificationCertificate]] = []
    budget_errors: dict[str, str] = {}
    rounds = 0
    resolved = set(external)
    while resolved != set(g.directed) and (max_rounds is None or rounds < max_rounds):
        rounds += 1
        snapshot = known
        found: list[tuple[EdgeSet, IdentificationCertificate]] = []
        for y in g.nodes:
            inc = g.incoming(y)
            open_edges = [e for e in inc if e not in resolved]
            if not open_edges or y in budget_errors:
                continue
            if len(inc) > budget.max_incoming:
                budget_errors[y] = f"{len(inc)} incoming edges (limit {budget.max_incoming})"
                continue
            done: set[DirectedEdge] = set()
            try:
                for e in open_edges:
                    es = EdgeSet((e,))
                    cert = finder(es, snapshot)
                    if cert is not None:
                        found.append((es, cert.with_round(rounds)))
                        done.add(e)
                for size in range(2, len(inc) + 1):
                    for combo in itertools.combinations(inc, size):
                        if not any(e not in resolved and e not in done for e in combo):
                            continue
                        es = EdgeSet(combo)
                        cert = finder(es, snapshot)
                        if cert is not None:
                            found.append((es, cert.with_round(rounds)))
                            done.update(combo)
            except BudgetExceeded as exc:
                budget_errors[y] = str(exc)
        if not found:
            break
        for es, cert in found:
            identified.append((es, cert))
            known = known.with_identified(es, cert)
            resolved.update(es)
    unidentified = set(g.directed) - resolved
    return IdentificationResult(g, method, identified, unidentified, rounds, external, budget_errors)


def aux_is_fixpoint(g: MixedGraph, external=None, budget: Budget = DEFAULT_BUDGET,
                    quasi: bool = False) -> IdentificationResult:
    """Iterate auxiliary instrumental sets, feeding each round's results into the next.

    With ``quasi``, externally known edges into a head are also subtracted
    from the head itself.
    """
    external = _as_known(external)
    return _fixpoint(g, external,
                     lambda es, known: find_certificate(g, es, known, budget, quasi),
                     QUASI if quasi else AUX_IS, budget)


def simple_is_fixpoint(g: MixedGraph, budget: Budget = DEFAULT_BUDGET) -> IdentificationResult:
    """Instrumental sets alone: knowledge is never used, so one round suffices."""
    return _fixpoint(g, KnownEdges(), lambda es, _: find_certificate(g, es, None, budget),
                     SIMPLE_IS, budget, max_rounds=1)


def ghtc_fixpoint(g: MixedGraph, budget: Budget = DEFAULT_BUDGET) -> IdentificationResult:
    return _fixpoint(g, KnownEdges(),
                     lambda es, known: find_ghtc_certificate(g, es, set(known), budget),
                     GHTC, budget)


@dataclass
class MethodComparison:
    graph: MixedGraph
    results: dict[str, IdentificationResult]

    def verdicts(self) -> dict[DirectedEdge, dict[str, bool]]:
        ids = {m: r.identified_edges for m, r in self.results.items()}
        return {e: {m: e in ids[m] for m in self.results} for e in self.graph.directed}

    def to_json(self) -> dict:
        return {
            "methods": list(self.results),
            "edges": {e.key: v for e, v in self.verdicts().items()},
            "results": {m: r.to_json() for m, r in self.results.items()},
        }

    def __str__(self) -> str:
        methods = list(self.results)
        width = max([len(e.key) for e in self.graph.directed] + [4])
        lines = ["edge".ljust(width) + "  " + "  ".join(methods)]
        for e, v in self.verdicts().items():
            cells = ["yes".ljust(len(m)) if v[m] else "-".ljust(len(m)) for m in methods]
            lines.append(e.key.ljust(width) + "  " + "  ".join(cells))
        return "\n".join(lines)


def compare_methods(g: MixedGraph, budget: Budget = DEFAULT_BUDGET) -> MethodComparison:
    """Per-edge verdicts of the three fixpoints; raises if the g-HTC finds an edge aux-IS misses."""
    results = {
        SIMPLE_IS: simple_is_fixpoint(g, budget),
        AUX_IS: aux_is_fixpoint(g, None, budget),
        GHTC: ghtc_fixpoint(g, budget),
    }
    missed = results[GHTC].identified_edges - results[AUX_IS].identified_edges
    if missed and not results[AUX_IS].budget_errors:
        raise SubsumptionViolation("g-HTC identifies edges that aux-IS does not: "
                                   + ", ".join(sorted(e.key for e in missed)))
    return MethodComparison(g, results)
