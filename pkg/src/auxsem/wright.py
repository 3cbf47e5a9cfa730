"""Symbolic covariances by path tracing on standardized models.

Every unblocked path (given the empty set) between two variables contributes
one monomial: the product of its edge weights.  A trek's top contributes 1
because variables are standardized, so ``W(v, v)`` is never formed here.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .separation import DEFAULT_CAP, enumerate_unblocked_paths

Symbols = tuple[tuple[str, int], ...]


class MissingSymbol(KeyError):
    pass


def _sym_key(s: str):
    return (s.lower(), s)


def _normalize(symbols: Iterable[str] | Mapping[str, int]) -> Symbols:
    counts = Counter(symbols) if not isinstance(symbols, Mapping) else Counter(dict(symbols))
    return tuple(sorted(((s, p) for s, p in counts.items() if p), key=lambda t: _sym_key(t[0])))


def _expanded(symbols: Symbols) -> tuple[str, ...]:
    return tuple(s for s, p in symbols for _ in range(p))


def _order_key(term: tuple[Fraction, Symbols]):
    coeff, symbols = term
    flat = _expanded(symbols)
    return (len(flat), tuple(_sym_key(s) for s in flat), -coeff)


@dataclass(frozen=True)
class CovExpr:
    """Polynomial in edge symbols; ``terms`` are ``(coefficient, ((symbol, power), ...))``.

    A raw expression keeps one term per path; :meth:`cancel` merges them.
    """

    terms: tuple[tuple[Fraction, Symbols], ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[object, Iterable[str] | Mapping[str, int]]]) -> "CovExpr":
        ts = [(Fraction(c), _normalize(s)) for c, s in terms]
        return cls(tuple(sorted(ts, key=_order_key)))

    @classmethod
    def symbol(cls, name: str) -> "CovExpr":
        return cls.from_terms([(1, [name])])

    def __len__(self) -> int:
        return len(self.terms)

    def symbols(self) -> set[str]:
        return {s for _, syms in self.terms for s, _ in syms}

    def cancel(self) -> "CovExpr":
        acc: dict[Symbols, Fraction] = {}
        for c, syms in self.terms:
            acc[syms] = acc.get(syms, Fraction(0)) + c
        return CovExpr.from_terms((c, dict(s)) for s, c in acc.items() if c != 0)

    def is_zero(self) -> bool:
        return not self.cancel().terms

    def __add__(self, other: "CovExpr") -> "CovExpr":
        return CovExpr.from_terms([(c, dict(s)) for c, s in self.terms + other.terms])

    def __neg__(self) -> "CovExpr":
        return CovExpr(tuple((-c, s) for c, s in self.terms))

    def __sub__(self, other: "CovExpr") -> "CovExpr":
        return self + (-other)

    def __mul__(self, other: "CovExpr") -> "CovExpr":
        out = []
        for c1, s1 in self.terms:
            for c2, s2 in other.terms:
                counts = Counter(dict(s1))
                counts.update(dict(s2))
                out.append((c1 * c2, counts))
        return CovExpr.from_terms(out)

    def equals(self, other: "CovExpr") -> bool:
        """Equality as polynomials (after cancellation)."""
        return (self - other).is_zero()

    def evaluate(self, assignment: Mapping[str, float]) -> float:
        return evaluate(self, assignment)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for k, (c, syms) in enumerate(self.terms):
            mono = "*".join(s if p == 1 else f"{s}^{p}" for s, p in syms)
            mag = abs(c)
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            if k == 0:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)

    def to_json(self) -> list[dict]:
        out = []
        for c, syms in self.terms:
            coeff = c.numerator if c.denominator == 1 else str(c)
            out.append({"coeff": coeff, "symbols": list(_expanded(syms))})
        return out


def cancel(expr: CovExpr) -> CovExpr:
    return expr.cancel()


def evaluate(expr: CovExpr, assignment: Mapping[str, float]) -> float:
    total = 0.0
    for c, syms in expr.terms:
        v = float(c)
        for s, p in syms:
            try:
                v *= float(assignment[s]) ** p
            except KeyError:
                raise MissingSymbol(s) from None
        total += v
    return total


def wright_expression(g, x: str, y: str, cap: int = DEFAULT_CAP) -> CovExpr:
    """``W(x, y)``: one monomial per unblocked path between ``x`` and ``y``.

    ``g`` is a MixedGraph or an AugmentedGraph; auxiliary edges carry their
    fixed weights (+1, or minus the subtracted coefficient's symbol).
    """
    graph = getattr(g, "graph", g)
    weight = getattr(g, "weight", _plain_weight)
    terms = []
    for path in enumerate_unblocked_paths(graph, x, y, (), cap):
        coeff = Fraction(1)
        symbols: list[str] = []
        for edge, _ in path.steps:
            c, syms = weight(edge)
            coeff *= c
            symbols.extend(syms)
        terms.append((coeff, symbols))
    return CovExpr.from_terms(terms)


def _plain_weight(edge):
    return Fraction(1), (edge.label,)
