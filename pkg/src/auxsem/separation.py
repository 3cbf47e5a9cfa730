"""Path machinery on mixed graphs.

Unblocked paths, d-separation, half-trek reachability, Left/Right sides of
treks, and systems of paths with no sided intersection.

Conventions: paths are simple.  For a trek the *top* is the unique node with
no incoming path edge; a directed path ``x -> ... -> y`` has top ``x``, so
``Left = {x}`` and ``Right`` is every node.  A trek containing a bidirected
edge ``a <-> b`` has ``Left`` ending at ``a`` and ``Right`` starting at ``b``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import kernels
from .graph import BidirectedEdge, DirectedEdge, GraphError, MixedGraph, bits

ALONG, AGAINST, BIDIRECTED = "along", "against", "bidirected"
DEFAULT_CAP = 100_000


class PathError(ValueError):
    """Malformed path, or a path of the wrong kind for the operation."""


class PathCapExceeded(RuntimeError):
    """Exhaustive enumeration found more paths than the cap allows."""


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]
    steps: tuple[tuple[DirectedEdge | BidirectedEdge, str], ...] = ()

    def __post_init__(self):
        if not self.nodes:
            raise PathError("empty path")
        if len(self.steps) != len(self.nodes) - 1:
            raise PathError("path needs exactly one edge between consecutive nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise PathError(f"path repeats a node: {self.nodes}")
        for (u, v), (e, kind) in zip(zip(self.nodes, self.nodes[1:]), self.steps):
            if kind == ALONG:
                ok = isinstance(e, DirectedEdge) and (e.tail, e.head) == (u, v)
            elif kind == AGAINST:
                ok = isinstance(e, DirectedEdge) and (e.tail, e.head) == (v, u)
            elif kind == BIDIRECTED:
                ok = isinstance(e, BidirectedEdge) and e.endpoints == {u, v}
            else:
                ok = False
            if not ok:
                raise PathError(f"step {u}-{v} does not match edge {e} ({kind})")

    @classmethod
    def single(cls, v: str) -> "Path":
        return cls((v,), ())

    @property
    def source(self) -> str:
        return self.nodes[0]

    @property
    def target(self) -> str:
        return self.nodes[-1]

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        arrows = {ALONG: "->", AGAINST: "<-", BIDIRECTED: "<->"}
        out = [self.nodes[0]]
        for (_, kind), v in zip(self.steps, self.nodes[1:]):
            out += [arrows[kind], v]
        return " ".join(out)

    def reversed(self) -> "Path":
        flip = {ALONG: AGAINST, AGAINST: ALONG, BIDIRECTED: BIDIRECTED}
        return Path(self.nodes[::-1], tuple((e, flip[k]) for e, k in reversed(self.steps)))

    def colliders(self) -> list[str]:
        out = []
        for i in range(1, len(self.nodes) - 1):
            into_prev = self.steps[i - 1][1] in (ALONG, BIDIRECTED)
            into_next = self.steps[i][1] in (AGAINST, BIDIRECTED)
            if into_prev and into_next:
                out.append(self.nodes[i])
        return out

    def is_half_trek(self) -> bool:
        kinds = [k for _, k in self.steps]
        if not kinds:
            return True
        if kinds[0] == BIDIRECTED:
            kinds = kinds[1:]
        return all(k == ALONG for k in kinds)

    def to_json(self) -> dict:
        return {"nodes": list(self.nodes), "path": str(self)}


@dataclass(frozen=True)
class SidedDecomposition:
    left: frozenset[str]
    right: frozenset[str]


@dataclass(frozen=True)
class PathSystem:
    """Paths ``paths[i]`` from ``sources[i]`` to ``targets[i]``."""

    paths: tuple[Path, ...]

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(p.source for p in self.paths)

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(p.target for p in self.paths)

    def to_json(self) -> list[dict]:
        return [p.to_json() for p in self.paths]


# -- blocking ---------------------------------------------------------------


def _check_path_in_graph(g: MixedGraph, path: Path):
    for v in path.nodes:
        if v not in g:
            raise PathError(f"node {v!r} not in graph")
    for e, _ in path.steps:
        if isinstance(e, DirectedEdge):
            if not g.has_edge(e.tail, e.head) or g.edge(e.tail, e.head) != e:
                raise PathError(f"edge {e.key} not in graph")
        elif not g.has_bidirected(e.a, e.b):
            raise PathError(f"edge {e.a}<->{e.b} not in graph")


def is_unblocked(g: MixedGraph, path: Path, given: Iterable[str] = ()) -> bool:
    """True iff every non-collider is outside ``given`` and every collider is in An(given)."""
    _check_path_in_graph(g, path)
    given = set(given)
    if path.source in given or path.target in given:
        raise PathError("path endpoints must not be in the conditioning set")
    an = g.ancestors(given) if given else set()
    colliders = set(path.colliders())
    for v in path.nodes[1:-1]:
        if v in colliders:
            if v not in an:
                return False
        elif v in given:
            return False
    return True


def _neighbours(g: MixedGraph, v: str):
    """(node, edge, kind) triples in node-index order, directed before bidirected."""
    i = g.index[v]
    out = []
    for j in bits(g.ch[i] | g.pa[i] | g.sib[i]):
        u = g.nodes[j]
        if g.ch[i] >> j & 1:
            out.append((u, g.edge(v, u), ALONG))
        if g.pa[i] >> j & 1:
            out.append((u, g.edge(u, v), AGAINST))
        if g.sib[i] >> j & 1:
            out.append((u, g.bidirected_edge(v, u), BIDIRECTED))
    return out


def enumerate_unblocked_paths(g: MixedGraph, x: str, y: str, given: Iterable[str] = (),
                              cap: int = DEFAULT_CAP) -> list[Path]:
    """All simple paths between ``x`` and ``y`` unblocked given ``given``.

    Order is lexicographic in node indices (directed steps before
    bidirected ones on ties).  Raises :class:`PathCapExceeded` rather than
    truncating.
    """
    if x == y:
        raise PathError("endpoints must differ")
    if cap <= 0:
        raise ValueError("cap must be positive")
    for v in (x, y):
        if v not in g:
            raise GraphError(f"unknown node {v!r}")
    given = set(given)
    if x in given or y in given:
        raise PathError("path endpoints must not be in the conditioning set")
    an = g.ancestors(given) if given else set()
    nbrs = {v: _neighbours(g, v) for v in g.nodes}
    found: list[Path] = []
    nodes = [x]
    steps: list = []
    on_path = {x}

    def extend(v: str, arrived_head: bool):
        for u, e, kind in nbrs[v]:
            if u in on_path:
                continue
            if v != x:
                leaves_head = kind in (AGAINST, BIDIRECTED)
                if arrived_head and leaves_head:
                    if v not in an:
                        continue
                elif v in given:
                    continue
            nodes.append(u)
            steps.append((e, kind))
            if u == y:
                if len(found) >= cap:
                    raise PathCapExceeded(f"more than {cap} unblocked paths between {x} and {y}")
                found.append(Path(tuple(nodes), tuple(steps)))
            else:
                on_path.add(u)
                extend(u, kind in (ALONG, BIDIRECTED))
                on_path.discard(u)
            nodes.pop()
            steps.pop()

    extend(x, False)
    return found


def _dconnected_mask(g: MixedGraph, x: str, given: Iterable[str],
                     removed: Iterable[DirectedEdge]) -> int:
    removed = list(removed)
    if removed:
        pa, ch = g.masks_without(removed)
    else:
        pa, ch = g.pa, g.ch
    gmask = g.mask(given)
    an = _ancestors(pa, gmask) if gmask else 0
    return kernels.dconnected_set(pa, ch, g.sib, g.index[x], gmask, an)


def _ancestors(pa, mask: int) -> int:
    seen = frontier = mask
    while frontier:
        nxt = 0
        for i in bits(frontier):
            nxt |= pa[i]
        frontier = nxt & ~seen
        seen |= frontier
    return seen


def d_separated(g: MixedGraph, x: str, y: str, given: Iterable[str] = (),
                removed: Iterable[DirectedEdge] = ()) -> bool:
    """d-separation of ``x`` and ``y`` given ``given`` in ``g`` minus ``removed`` edges."""
    given = set(given)
    for v in (x, y, *given):
        if v not in g:
            raise GraphError(f"unknown node {v!r}")
    if x == y:
        raise PathError("d-separation needs two distinct nodes")
    if x in given or y in given:
        raise PathError("endpoints must not be in the conditioning set")
    reach = _dconnected_mask(g, x, given, removed)
    return not (reach >> g.index[y]) & 1


def d_connected_set(g: MixedGraph, x: str, given: Iterable[str] = (),
                    removed: Iterable[DirectedEdge] = ()) -> set[str]:
    return set(g.names(_dconnected_mask(g, x, set(given), removed)))


# -- half-treks ---------------------------------------------------------------


def _htr_mask(pa, ch, sib, i: int) -> int:
    start = (1 << i) | sib[i]
    seen = frontier = start
    while frontier:
        nxt = 0
        for j in bits(frontier):
            nxt |= ch[j]
        frontier = nxt & ~seen
        seen |= frontier
    # v itself is excluded even when it is a descendant of a sibling
    return seen & ~(1 << i)


def half_trek_reachable(g: MixedGraph, v: str) -> set[str]:
    """``htr(v)``: nodes w != v reachable by a directed path or ``v <-> s -> ... -> w``."""
    i = g._idx(v)
    return set(g.names(_htr_mask(g.pa, g.ch, g.sib, i)))


# -- sides ---------------------------------------------------------------------


def sided_decomposition(path: Path) -> SidedDecomposition:
    """Left/Right node sets of a trek (a collider-free path)."""
    kinds = [k for _, k in path.steps]
    # a trek reads AGAINST* then (BIDIRECTED | top) then ALONG*
    i = 0
    while i < len(kinds) and kinds[i] == AGAINST:
        i += 1
    if i < len(kinds) and kinds[i] == BIDIRECTED:
        split_left, split_right = i, i + 1
        j = i + 1
    else:
        split_left = split_right = i
        j = i
    if any(k != ALONG for k in kinds[j:]):
        raise PathError(f"not a trek (has a collider): {path}")
    left = frozenset(path.nodes[: split_left + 1])
    right = frozenset(path.nodes[split_right:])
    return SidedDecomposition(left, right)


def no_sided_intersection(paths: Sequence[Path]) -> bool:
    sides = [sided_decomposition(p) for p in paths]
    for a, b in itertools.combinations(sides, 2):
        if a.left & b.left or a.right & b.right:
            return False
    return True


# -- path systems ------------------------------------------------------------

MODES = ("unblocked", "half_trek")


def _banned_masks(g: MixedGraph, sources: Sequence[str],
                  banned_first: Mapping[str, Iterable[str]] | None) -> list[int]:
    banned_first = banned_first or {}
    return [g.mask(banned_first.get(z, ())) for z in sources]


def _side_seq_to_path(g: MixedGraph, seq: list[int]) -> Path:
    n = len(g)
    nodes: list[str] = []
    steps: list = []
    prev = None
    for u in seq:
        right, v = divmod(u, n)
        name = g.nodes[v]
        if prev is None:
            nodes.append(name)
        else:
            pright, pv = prev
            pname = g.nodes[pv]
            if not pright and not right:
                steps.append((g.edge(name, pname), AGAINST))
                nodes.append(name)
            elif not pright and right:
                if pv != v:
                    steps.append((g.bidirected_edge(pname, name), BIDIRECTED))
                    nodes.append(name)
            else:
                steps.append((g.edge(pname, name), ALONG))
                nodes.append(name)
        prev = (right, v)
    # a flow path may meet a node once on each side; cutting the loop turns
    # that node into the top and only shrinks both sides
    while len(set(nodes)) < len(nodes):
        pos: dict[str, int] = {}
        for k, v in enumerate(nodes):
            if v in pos:
                i, j = pos[v], k
                nodes = nodes[:i] + nodes[j:]
                steps = steps[:i] + steps[j:]
                break
            pos[v] = k
    return Path(tuple(nodes), tuple(steps))


def find_path_system(g: MixedGraph, sources: Sequence[str], targets: Sequence[str],
                     mode: str = "unblocked",
                     banned_first: Mapping[str, Iterable[str]] | None = None) -> PathSystem | None:
    """A system of treks (or half-treks) with no sided intersection, or None.

    Each source is matched to a distinct target; the returned paths are in
    source order and ``system.targets`` gives the matching.  ``banned_first``
    maps a source to parents whose edge it may not use as its first step.
    Decided by max-flow on left/right node copies with unit vertex capacity.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if len(sources) != len(targets):
        raise ValueError("sources and targets must have the same size")
    if len(set(sources)) != len(sources) or len(set(targets)) != len(targets):
        raise ValueError("sources and targets must be distinct nodes")
    if not sources:
        return PathSystem(())
    src = [g._idx(z) for z in sources]
    tgt = [g._idx(x) for x in targets]
    seqs = kernels.path_system_flow(g.pa, g.ch, g.sib, len(g), src, tgt,
                                    mode == "half_trek", _banned_masks(g, sources, banned_first))
    if len(seqs) < len(sources):
        return None
    by_source = {}
    for seq in seqs:
        p = _side_seq_to_path(g, seq)
        by_source[p.source] = p
    return PathSystem(tuple(by_source[z] for z in sources))


def _candidate_paths(g: MixedGraph, z: str, x: str, mode: str, banned: set[str],
                     cap: int) -> list[Path]:
    if z == x:
        return [Path.single(z)]
    paths = enumerate_unblocked_paths(g, z, x, (), cap)
    if mode == "half_trek":
        paths = [p for p in paths if p.is_half_trek()]
    if banned:
        paths = [p for p in paths
                 if not (p.steps and p.steps[0][1] == AGAINST and p.nodes[1] in banned)]
    return paths


def brute_force_path_system(g: MixedGraph, sources: Sequence[str], targets: Sequence[str],
                            mode: str = "unblocked",
                            banned_first: Mapping[str, Iterable[str]] | None = None,
                            cap: int = DEFAULT_CAP) -> PathSystem | None:
    """Reference search over every matching and every tuple of simple paths."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if len(sources) != len(targets):
        raise ValueError("sources and targets must have the same size")
    banned_first = banned_first or {}
    cands = {(z, x): [(p, sided_decomposition(p)) for p in
                      _candidate_paths(g, z, x, mode, set(banned_first.get(z, ())), cap)]
             for z in sources for x in targets}
    chosen: list[tuple[Path, SidedDecomposition]] = []
    used: set[str] = set()

    def search(k: int) -> bool:
        if k == len(sources):
            return True
        z = sources[k]
        for x in targets:
            if x in used:
                continue
            for p, sd in cands[(z, x)]:
                if any(sd.left & o.left or sd.right & o.right for _, o in chosen):
                    continue
                chosen.append((p, sd))
                used.add(x)
                if search(k + 1):
                    return True
                chosen.pop()
                used.discard(x)
        return False

    if search(0):
        return PathSystem(tuple(p for p, _ in chosen))
    return None
