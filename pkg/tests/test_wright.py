import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from auxsem.augment import augment
from auxsem.generate import random_graph
from auxsem.graph import parse_graph
from auxsem.oracle import augmented_instance, implied_covariance, random_instance, standardize
from auxsem.separation import AGAINST, PathCapExceeded, enumerate_unblocked_paths
from auxsem.wright import CovExpr, MissingSymbol, cancel, evaluate, wright_expression


def test_single_edge():
    assert str(wright_expression(parse_graph("x -> y [a]"), "x", "y")) == "a"


def test_bow_two_terms():
    e = wright_expression(parse_graph("x -> y [a]\nx <-> y [c]"), "x", "y")
    assert str(e) == "a + c"


def test_fig1a_aux_x(fig1a):
    aug = augment(fig1a, [fig1a.edge("w", "z")])
    assert str(wright_expression(aug, "z*", "x").cancel()) == "d - b^2*d - b*C_wz*d"


def test_fig1a_aux_y(fig1a):
    aug = augment(fig1a, [fig1a.edge("w", "z")])
    raw = wright_expression(aug, "z*", "y")
    # one monomial per path: the four back-door terms come in cancelling pairs
    assert len(raw) == 7
    done = raw.cancel()
    assert len(done) == 3
    assert str(done) == "a*d - a*b^2*d - a*b*C_wz*d"
    assert done.equals(CovExpr.symbol("a") * wright_expression(aug, "z*", "x"))


def test_fig1a_aux_s_vanishes(fig1a):
    aug = augment(fig1a, [fig1a.edge("w", "z")])
    e = wright_expression(aug, "z*", "s")
    assert str(e) == "b*g - b*g"
    for seed in range(5):
        vals = random_instance(fig1a, seed).assignment()
        assert evaluate(e, vals) == pytest.approx(0.0, abs=1e-15)


def test_evaluate_simple():
    assert evaluate(CovExpr.symbol("a"), {"a": 0.5}) == 0.5


def test_evaluate_missing():
    with pytest.raises(MissingSymbol):
        evaluate(CovExpr.symbol("a"), {})


def test_fig1a_value_matches_matrix(fig1a):
    m = standardize(random_instance(fig1a, 3))
    aug = augment(fig1a, [fig1a.edge("w", "z")])
    sigma = implied_covariance(augmented_instance(m, aug))
    value = evaluate(wright_expression(aug, "z*", "x"), m.assignment())
    assert value == pytest.approx(sigma["z*", "x"], abs=1e-8)


def test_cancel_to_empty():
    e = CovExpr.from_terms([(1, ["b", "x"]), (-1, ["x", "b"])])
    assert cancel(e).terms == ()
    assert str(cancel(e)) == "0"


def test_cancel_idempotent(fig1a):
    e = wright_expression(augment(fig1a, [fig1a.edge("w", "z")]), "z*", "y").cancel()
    assert e.cancel() == e


def test_canonical_order_and_powers():
    e = CovExpr.from_terms([(1, ["d", "b", "b"]), (2, ["a"]), (-1, ["C", "b"])])
    assert str(e) == "2*a - b*C + b^2*d"


def test_json():
    e = CovExpr.from_terms([(1, ["d"]), (-1, ["b", "b", "d"])])
    assert e.to_json() == [{"coeff": 1, "symbols": ["d"]}, {"coeff": -1, "symbols": ["b", "b", "d"]}]


def test_constant_term():
    e = CovExpr.from_terms([(Fraction(1), [])])
    assert str(e) == "1"


def test_cap_propagates():
    g = random_graph(3, 8, 1.0, 1.0)
    with pytest.raises(PathCapExceeded):
        wright_expression(g, "v0", "v7", cap=5)


def _random_augmented(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(3, 7)), 0.45, 0.3)
    sub = [e for e in g.directed if rng.random() < 0.4]
    return g, augment(g, sub), rng


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_paths_through_subtracted_edge_cancel_in_pairs(seed):
    g, aug, _ = _random_augmented(seed)
    for y, ys in aug.aux_nodes.items():
        for v in g.nodes:
            paths = enumerate_unblocked_paths(aug.graph, ys, v)
            index = {(p.nodes, tuple(e for e, _ in p.steps)): p for p in paths}
            for p in paths:
                if len(p.nodes) >= 3 and p.nodes[1] == y and p.steps[1][1] == AGAINST:
                    w = p.nodes[2]
                    e = g.edge(w, y)
                    if e not in aug.subtracted:
                        continue
                    # z* <- z <- w ... pairs with z* <- w ...
                    partner_nodes = (ys,) + p.nodes[2:]
                    partner_edges = (aug.graph.edge(w, ys),) + tuple(e for e, _ in p.steps[2:])
                    assert (partner_nodes, partner_edges) in index
                    one = wright_expression_of(aug, p)
                    two = wright_expression_of(aug, index[(partner_nodes, partner_edges)])
                    assert (one + two).is_zero()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_surviving_aux_paths(seed):
    g, aug, _ = _random_augmented(seed)
    for y, ys in aug.aux_nodes.items():
        tails = {e.tail for e in aug.subtracted_into(y)}
        for v in g.nodes:
            if v == y:
                continue
            kept = CovExpr()
            for p in enumerate_unblocked_paths(aug.graph, ys, v):
                via_head = p.nodes[1] == y
                first_cancelled = via_head and len(p.nodes) > 2 and p.nodes[2] in tails \
                    and p.steps[1][1] == AGAINST
                if (via_head and not first_cancelled) or (not via_head and y in p.nodes):
                    kept = kept + wright_expression_of(aug, p)
            assert wright_expression(aug, ys, v).equals(kept)


def wright_expression_of(aug, p):
    terms_c, syms = Fraction(1), []
    for e, _ in p.steps:
        c, s = aug.weight(e)
        terms_c *= c
        syms.extend(s)
    return CovExpr.from_terms([(terms_c, syms)])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_base_pairs_unchanged_by_augmentation(seed):
    g, aug, _ = _random_augmented(seed)
    for x, y in itertools.combinations(g.nodes, 2):
        assert wright_expression(g, x, y) == wright_expression(aug, x, y)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_wright_matches_matrix_on_augmented(seed):
    g, aug, rng = _random_augmented(seed)
    m = standardize(random_instance(g, int(rng.integers(1 << 30))))
    sigma = implied_covariance(augmented_instance(m, aug))
    vals = m.assignment()
    for a, b in itertools.combinations(aug.nodes, 2):
        assert evaluate(wright_expression(aug, a, b), vals) == pytest.approx(sigma[a, b], abs=1e-8)
