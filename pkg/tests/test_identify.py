import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from auxsem.augment import KnownEdges
from auxsem.generate import graph_corpus, random_graph
from auxsem.graph import parse_graph
from auxsem.identify import (AUX_IS, GHTC, QUASI, SIMPLE_IS, Budget, BudgetExceeded, EdgeSet, aux_is_fixpoint,
                             all_certificates, blocking_edges, check_aux_is, check_quasi,
                             check_simple_is, compare_methods, find_certificate, ghtc_admissible,
                             ghtc_fixpoint, simple_is_fixpoint)
from auxsem.oracle import implied_covariance, random_instance, verify_identification
from auxsem.augment import aux_covariance


def es(g, *refs):
    return EdgeSet.of(g, refs)


def labels_by_round(result):
    out = {}
    for edges, cert in result.identified:
        out.setdefault(cert.round, []).append(sorted(e.label for e in edges))
    return out


def test_regression_certificate():
    g = parse_graph("x -> y [a]")
    cert = check_simple_is(g, ["x"], es(g, "a"))
    assert cert is not None
    assert cert.method == SIMPLE_IS
    assert [p.nodes for p in cert.path_system.paths] == [("x",)]


def test_fig1a_z_fails_plain(fig1a):
    assert check_simple_is(fig1a, ["z"], es(fig1a, "a")) is None
    assert check_simple_is(fig1a, ["w"], es(fig1a, "a")) is None
    assert check_simple_is(fig1a, ["s"], es(fig1a, "a")) is None


def test_fig1a_s_instruments_beta(fig1a):
    assert check_simple_is(fig1a, ["s"], es(fig1a, "b")) is not None


def test_fig1a_aux_instrument(fig1a, beta):
    cert = check_aux_is(fig1a, ["z"], es(fig1a, "a"), beta)
    assert cert.method == AUX_IS
    assert cert.subtracted == {"z": (fig1a.edge("w", "z"),)}


def test_fig3_v3_after_b(fig3):
    known = KnownEdges.external([fig3.find_edge("b")])
    assert check_aux_is(fig3, ["v3"], es(fig3, "d"), known) is not None
    assert check_aux_is(fig3, ["v3"], es(fig3, "d")) is None


def test_size_mismatch(fig3):
    with pytest.raises(ValueError):
        check_aux_is(fig3, ["v1", "v2"], es(fig3, "b"))


def test_edge_set_needs_common_head(fig3):
    with pytest.raises(ValueError):
        es(fig3, "a", "c")


def test_subtracted_first_edge_is_banned():
    # w -> z is subtracted, so z* cannot reach x through w; z would otherwise look valid
    g = parse_graph("w -> z\nw -> x\nx -> y [a]\nx <-> y\nw <-> y")
    known = KnownEdges.external([g.edge("w", "z")])
    assert check_aux_is(g, ["z"], es(g, "a"), known) is None
    m = random_instance(g, 1)
    s = implied_covariance(m)
    vals = {g.edge("w", "z"): m.coefficient(g.edge("w", "z"))}
    assert abs(aux_covariance(s, vals, "z*", "x")) < 1e-12


def test_quasi_fig4a(fig4a, gamma):
    cert = check_quasi(fig4a, ["z"], es(fig4a, "a"), gamma)
    assert cert.method == QUASI
    assert cert.head_subtracted == (fig4a.edge("z", "y"),)


def test_quasi_without_knowledge_matches_aux(fig4a):
    assert check_quasi(fig4a, ["z"], es(fig4a, "a")) is None
    assert check_aux_is(fig4a, ["z"], es(fig4a, "a")) is None
    g = parse_graph("z -> x\nx -> y [a]\nx <-> y")
    assert check_quasi(g, ["z"], es(g, "a")) == check_aux_is(g, ["z"], es(g, "a"))


def test_quasi_overlap_error(fig4a, gamma):
    with pytest.raises(ValueError):
        check_quasi(fig4a, ["x", "z"], es(fig4a, "a", "g"), gamma)


def test_find_regression():
    g = parse_graph("x -> y [a]")
    assert find_certificate(g, es(g, "a")).instruments == ("x",)


def test_find_fig3_a_and_c_with_d_known(fig3):
    known = KnownEdges.external([fig3.find_edge("d")])
    for label in ("a", "c"):
        cert = find_certificate(fig3, es(fig3, label), known)
        assert cert.instruments == ("v5",)
        assert cert.subtracted["v5"] == (fig3.find_edge("d"),)


def test_find_bow(bow):
    assert find_certificate(bow, es(bow, "a")) is None


def test_find_budget():
    g = parse_graph("p -> y\n" + "\n".join(f"node q{i}" for i in range(5)))
    with pytest.raises(BudgetExceeded):
        find_certificate(g, es(g, "p->y"), budget=Budget(max_pool=3))


def test_all_certificates_fig3_b(fig3):
    certs = all_certificates(fig3, es(fig3, "b"))
    assert [c.instruments for c in certs] == [("v1",), ("v2",)]


def test_fixpoint_fig3(fig3):
    r = aux_is_fixpoint(fig3)
    assert labels_by_round(r) == {1: [["b"]], 2: [["d"]], 3: [["a"], ["c"]]}
    assert r.unidentified == set()
    assert r.rounds == 3


def test_fixpoint_fig1a(fig1a):
    r = aux_is_fixpoint(fig1a)
    rounds = r.edge_round()
    assert rounds[fig1a.find_edge("b")] == 1
    assert rounds[fig1a.find_edge("a")] == 2
    cert = dict((e, c) for edges, c in r.identified for e in edges)[fig1a.find_edge("a")]
    assert cert.instruments == ("z",)
    assert cert.subtracted["z"] == (fig1a.find_edge("b"),)


def test_fixpoint_bow(bow):
    r = aux_is_fixpoint(bow)
    assert r.unidentified == {bow.find_edge("a")}
    assert r.rounds == 1


def test_fixpoint_budget_error_is_per_head():
    lines = [f"p{i} -> y" for i in range(9)] + ["a -> b [k]"]
    g = parse_graph("\n".join(lines))
    r = aux_is_fixpoint(g, budget=Budget(max_incoming=8))
    assert "y" in r.budget_errors
    assert g.find_edge("k") in r.identified_edges


def test_joint_identification():
    # x1, x2 both confounded with y; z1, z2 are instruments only jointly
    g = parse_graph("z1 -> x1\nz1 -> x2\nz2 -> x2\nx1 -> y [a1]\nx2 -> y [a2]\n"
                    "x1 <-> y\nx2 <-> y")
    r = aux_is_fixpoint(g)
    joint = [edges for edges, _ in r.identified if len(edges) == 2]
    assert [e.keys for e in joint] == [["x1->y", "x2->y"]]
    assert verify_identification(g, r, 20).passed


def test_ghtc_v2_for_b(fig3):
    cert = ghtc_admissible(fig3, ["v2"], es(fig3, "b"))
    assert cert is not None and cert.method == GHTC
    assert blocking_edges(fig3, "v2", es(fig3, "b")) == []


def test_ghtc_v3_for_d(fig3):
    assert ghtc_admissible(fig3, ["v3"], es(fig3, "d")) is None
    assert ghtc_admissible(fig3, ["v3"], es(fig3, "d"), {fig3.find_edge("b")}) is not None


def test_ghtc_rejects_sibling(fig3):
    # v4 is a sibling of v3 and of v2
    assert ghtc_admissible(fig3, ["v4"], es(fig3, "b")) is None


def test_ghtc_fixpoint_fig3(fig3):
    r = ghtc_fixpoint(fig3)
    assert labels_by_round(r) == {1: [["b"]], 2: [["d"]], 3: [["a"], ["c"]]}


def test_ghtc_fixpoint_bow(bow):
    assert ghtc_fixpoint(bow).identified == []


def test_compare_fig3(fig3):
    v = compare_methods(fig3).verdicts()
    assert all(v[e][AUX_IS] and v[e][GHTC] for e in fig3.directed)
    assert [e.label for e in fig3.directed if v[e][SIMPLE_IS]] == ["b"]


def test_compare_bow(bow):
    v = compare_methods(bow).verdicts()
    assert v[bow.find_edge("a")] == {SIMPLE_IS: False, AUX_IS: False, GHTC: False}


def test_compare_fig1a(fig1a):
    v = compare_methods(fig1a).verdicts()[fig1a.find_edge("a")]
    assert v[AUX_IS] and not v[SIMPLE_IS]


def test_simple_fixpoint_single_round(fig3):
    assert simple_is_fixpoint(fig3).rounds == 1


def test_deterministic(fig3):
    a = json.dumps(aux_is_fixpoint(fig3).to_json())
    b = json.dumps(aux_is_fixpoint(fig3).to_json())
    assert a == b


def test_json_shape(fig1a, beta):
    data = aux_is_fixpoint(fig1a, beta).to_json()
    cert = data["identified"][-1]
    assert cert["target"] == ["x->y"]
    assert cert["subtracted"] == {"z": ["w->z"]}
    assert cert["paths"][0]["nodes"] == ["z", "x"]
    assert data["external"] == ["w->z"]


def _small_graphs(count, max_nodes, seed):
    return graph_corpus(seed, count, max_nodes)


def test_aux_without_knowledge_is_simple():
    for g in _small_graphs(60, 6, 5):
        for y in g.nodes:
            inc = g.incoming(y)
            for k in (1, 2):
                for edges in itertools.combinations(inc, k):
                    target = EdgeSet(edges)
                    for Z in itertools.permutations(g.nodes, k):
                        assert check_aux_is(g, Z, target, KnownEdges()) == check_simple_is(g, Z, target)


def test_derivation_order_respects_knowledge():
    for g in _small_graphs(60, 7, 8):
        for r in (aux_is_fixpoint(g), ghtc_fixpoint(g)):
            assert r.rounds <= max(1, len(g.directed))
            seen = set()
            for edges, cert in r.identified:
                prior = {e for e2, c2 in r.identified if c2.round < cert.round for e in e2}
                assert cert.required_edges() <= prior
                seen |= set(edges)
            assert seen | r.unidentified == set(g.directed)


def test_ghtc_certificates_are_aux_certificates():
    for g in _small_graphs(80, 7, 9):
        r = ghtc_fixpoint(g)
        for edges, cert in r.identified:
            known = KnownEdges.external(cert.required_edges())
            aux = check_aux_is(g, cert.instruments, edges, known)
            assert aux is not None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 100_000))
def test_certificates_recover_truth(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, int(rng.integers(2, 7)), 0.45, 0.3)
    for r in (aux_is_fixpoint(g), ghtc_fixpoint(g)):
        report = verify_identification(g, r, trials=5, tol=1e-6, seed=seed)
        assert report.passed, str(report)


def test_subsumption_small_corpus():
    for g in _small_graphs(60, 7, 13):
        compare_methods(g)
