"""Testable implications: vanishing covariances and overidentification."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from .augment import KnownEdges
from .graph import DirectedEdge, MixedGraph
from .identify import (QUASI, IdentificationCertificate, IdentificationResult, _as_known,
                       all_certificates)
from .oracle import CovMatrix, solve_certificate
from .separation import d_separated

VANISHING_AUX, VANISHING_PLAIN, OVERIDENTIFICATION = "vanishing_aux", "vanishing_plain", "overidentification"


@dataclass(frozen=True)
class CovTerm:
    """``sign * prod(coefficients of edges) * sigma(u, v)``."""

    sign: float
    edges: tuple[DirectedEdge, ...]
    u: str
    v: str


@dataclass(frozen=True)
class Constraint:
    kind: str
    terms: tuple[CovTerm, ...] = ()
    nodes: tuple[str, ...] = ()
    subtracted: tuple[DirectedEdge, ...] = ()
    certificates: tuple[IdentificationCertificate, ...] = ()

    @property
    def formula(self) -> str:
        if self.kind == OVERIDENTIFICATION:
            a, b = self.certificates
            labels = ", ".join(e.label for e in a.target)
            return f"{labels}: [{a}] == [{b}]"
        parts = []
        for k, t in enumerate(self.terms):
            body = "*".join([e.label for e in t.edges] + [f"sigma({t.u},{t.v})"])
            if k == 0:
                parts.append(("-" if t.sign < 0 else "") + body)
            else:
                parts.append(("- " if t.sign < 0 else "+ ") + body)
        return " ".join(parts) + " = 0"

    def __str__(self) -> str:
        return f"[{self.kind}] {self.formula}"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "formula": self.formula, "nodes": list(self.nodes)}
        if self.kind == OVERIDENTIFICATION:
            out["certificates"] = [c.to_json() for c in self.certificates]
        else:
            out["terms"] = [{"sign": t.sign, "edges": [e.key for e in t.edges], "cov": [t.u, t.v]}
                            for t in self.terms]
            out["subtracted"] = [e.key for e in self.subtracted]
        return out


def _aux_constraints(g: MixedGraph, known: KnownEdges) -> list[Constraint]:
    out = []
    for z in g.nodes:
        sub = sorted(known.into(z), key=lambda e: g.index[e.tail])
        if not sub:
            continue
        # sigma(z*, s) = 0 for a plain instrument s is the equation that identified the edge
        used = {s for e in sub if known[e].certificate is not None
                for s in known[e].certificate.instruments
                if not known[e].certificate.subtracted.get(s)}
        for s in g.nodes:
            if s == z or s in used:
                continue
            if d_separated(g, z, s, (), sub) and not d_separated(g, z, s):
                terms = [CovTerm(1.0, (), z, s)] + [CovTerm(-1.0, (e,), e.tail, s) for e in sub]
                out.append(Constraint(VANISHING_AUX, tuple(terms), (z, s), tuple(sub)))
    return out


def _plain_constraints(g: MixedGraph) -> list[Constraint]:
    return [Constraint(VANISHING_PLAIN, (CovTerm(1.0, (), x, y),), (x, y))
            for x, y in itertools.combinations(g.nodes, 2) if d_separated(g, x, y)]


def _overid_constraints(g: MixedGraph, result: IdentificationResult) -> list[Constraint]:
    out = []
    quasi = result.method == QUASI
    for es, cert in result.identified:
        known = result.known_before(cert.round)
        certs = all_certificates(g, es, known, quasi=quasi)
        for other in certs[1:]:
            out.append(Constraint(OVERIDENTIFICATION, nodes=tuple(sorted(set(certs[0].instruments)
                                                                          | set(other.instruments),
                                                                          key=g.index.__getitem__)),
                                  certificates=(certs[0], other)))
    return out


def derive_constraints(g: MixedGraph, known=None, identified: IdentificationResult | None = None,
                       use_identified: bool = True) -> list[Constraint]:
    """Vanishing constraints (with and without proxies) plus overidentification.

    Proxies use the external ``known`` edges and, when ``use_identified`` is
    set, the edges identified in ``identified``.  Order: auxiliary, plain,
    overidentification, each in node order.
    """
    known = _as_known(known)
    known.check_graph(g)
    if identified is not None and use_identified:
        for es, cert in identified.identified:
            known = known.with_identified(es, cert)
    out = _aux_constraints(g, known) + _plain_constraints(g)
    if identified is not None:
        out += _overid_constraints(g, identified)
    return out


def evaluate_constraints(sigma: CovMatrix, constraints: Sequence[Constraint],
                         values: Mapping[DirectedEdge, float]) -> list[float]:
    """Absolute residual of each constraint; overidentification compares the two estimates."""
    out = []
    for c in constraints:
        if c.kind == OVERIDENTIFICATION:
            a, b = (solve_certificate(sigma, cert, values).values for cert in c.certificates)
            out.append(max(abs(a[e] - b[e]) for e in a))
            continue
        total = 0.0
        for t in c.terms:
            w = t.sign
            for e in t.edges:
                if values.get(e) is None:
                    raise KeyError(f"no numeric value for {e.key}")
                w *= values[e]
            total += w * sigma[t.u, t.v]
        out.append(abs(total))
    return out

