import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from auxsem.generate import random_graph
from auxsem.graph import parse_graph
from auxsem.separation import (ALONG, AGAINST, BIDIRECTED, Path, PathCapExceeded, PathError,
                               brute_force_path_system, d_connected_set, d_separated,
                               enumerate_unblocked_paths, find_path_system, half_trek_reachable,
                               is_unblocked, no_sided_intersection, sided_decomposition)


def path(g, text):
    """Build a path from a string like ``"x -> y <- z <-> w"``."""
    tok = text.split()
    nodes, steps = [tok[0]], []
    for arrow, v in zip(tok[1::2], tok[2::2]):
        u = nodes[-1]
        if arrow == "->":
            steps.append((g.edge(u, v), ALONG))
        elif arrow == "<-":
            steps.append((g.edge(v, u), AGAINST))
        else:
            steps.append((g.bidirected_edge(u, v), BIDIRECTED))
        nodes.append(v)
    return Path(tuple(nodes), tuple(steps))


def test_chain_unblocked():
    g = parse_graph("x -> y\ny -> z")
    assert is_unblocked(g, path(g, "x -> y -> z"), set())


def test_collider_blocks():
    g = parse_graph("x -> y\nz -> y")
    assert not is_unblocked(g, path(g, "x -> y <- z"), set())
    assert is_unblocked(g, path(g, "x -> y <- z"), {"y"})


def test_fig1a_bidirected_collider(fig1a):
    assert not is_unblocked(fig1a, path(fig1a, "z <-> w <-> y"), set())


def test_conditioned_noncollider_blocks():
    g = parse_graph("x -> m\nm -> y")
    assert not is_unblocked(g, path(g, "x -> m -> y"), {"m"})


def test_collider_with_conditioned_descendant():
    g = parse_graph("x -> c\ny -> c\nc -> d")
    assert is_unblocked(g, path(g, "x -> c <- y"), {"d"})


def test_malformed_paths():
    g = parse_graph("x -> y\ny -> z")
    with pytest.raises(PathError):
        Path(("x", "y"), ())
    with pytest.raises(PathError):
        Path(("x", "y"), ((g.edge("y", "z"), ALONG),))
    with pytest.raises(PathError):
        is_unblocked(g, path(g, "x -> y"), {"x"})


def test_enumerate_bow():
    g = parse_graph("x -> y\nx <-> y")
    paths = enumerate_unblocked_paths(g, "x", "y")
    assert [str(p) for p in paths] == ["x -> y", "x <-> y"]


def test_enumerate_fig1a_z_x(fig1a):
    # every other route from z to x has to enter x through z
    assert [str(p) for p in enumerate_unblocked_paths(fig1a, "z", "x")] == ["z -> x"]


def test_enumerate_disconnected():
    g = parse_graph("node a\nnode b")
    assert enumerate_unblocked_paths(g, "a", "b") == []


def test_enumerate_order_is_lexicographic():
    g = parse_graph("node a\nnode b\nnode c\nnode d\na -> b\na -> c\nb -> d\nc -> d\na -> d")
    paths = enumerate_unblocked_paths(g, "a", "d")
    keys = [[g.index[v] for v in p.nodes] for p in paths]
    assert keys == sorted(keys)


def test_enumerate_cap():
    g = random_graph(3, 8, 1.0, 1.0)
    with pytest.raises(PathCapExceeded):
        enumerate_unblocked_paths(g, "v0", "v7", cap=10)


def test_enumerate_rejects_equal_endpoints():
    g = parse_graph("x -> y")
    with pytest.raises(PathError):
        enumerate_unblocked_paths(g, "x", "x")


def test_d_separated_chain():
    g = parse_graph("x -> m\nm -> y")
    assert d_separated(g, "x", "y", {"m"})
    assert not d_separated(g, "x", "y")


def test_d_separated_fig1a_after_removal(fig1a):
    removed = [fig1a.edge("x", "y"), fig1a.edge("w", "z")]
    assert d_separated(fig1a, "z", "y", (), removed)
    assert not d_separated(fig1a, "z", "y")


def test_d_separated_fig1a_w_y(fig1a):
    assert not d_separated(fig1a, "w", "y")


def test_d_separated_errors(fig1a):
    with pytest.raises(ValueError):
        d_separated(fig1a, "q", "y")
    with pytest.raises(PathError):
        d_separated(fig1a, "x", "x")


def test_d_connected_set(fig1a):
    assert d_connected_set(fig1a, "s") == {"w", "z", "x", "y"}


def test_htr_chain():
    assert half_trek_reachable(parse_graph("x -> y\ny -> z"), "x") == {"y", "z"}


def test_htr_isolated():
    assert half_trek_reachable(parse_graph("x -> y"), "y") == set()


def test_htr_sibling_then_directed():
    g = parse_graph("w <-> z\nz -> x\nx -> y\nw -> z")
    assert half_trek_reachable(g, "w") >= {"z", "x", "y"}


def test_htr_excludes_parents():
    g = parse_graph("p -> v\nv <-> s\ns -> t")
    assert half_trek_reachable(g, "v") == {"s", "t"}


def test_sides_directed_path():
    g = parse_graph("x -> y")
    sd = sided_decomposition(path(g, "x -> y"))
    assert sd.left == {"x"}
    assert sd.right == {"x", "y"}


def test_sides_bidirected_start():
    g = parse_graph("z <-> x\nx -> w")
    sd = sided_decomposition(path(g, "z <-> x -> w"))
    assert sd.left == {"z"}
    assert sd.right == {"x", "w"}


def test_sides_divergent():
    g = parse_graph("t -> x\nt -> y")
    sd = sided_decomposition(path(g, "x <- t -> y"))
    assert sd.left == {"x", "t"}
    assert sd.right == {"t", "y"}


def test_sides_rejects_collider():
    g = parse_graph("x -> y\nz -> y")
    with pytest.raises(PathError):
        sided_decomposition(path(g, "x -> y <- z"))


def test_sided_intersection_examples():
    g = parse_graph("z -> x\nz <-> x\nx -> y\nx -> w")
    # x is on both Right sides
    assert not no_sided_intersection([path(g, "x -> y"), path(g, "z -> x -> w")])
    # the directed path's top x is on its Right side, so this pair also intersects
    assert not no_sided_intersection([path(g, "x -> y"), path(g, "z <-> x -> w")])
    h = parse_graph("a -> b\nc <-> d")
    assert no_sided_intersection([path(h, "a -> b"), path(h, "c <-> d")])


def test_sided_pair_without_system_is_singular():
    """Instruments x and z for {x->y, x->w} give a singular system, so no path system may exist."""
    from auxsem.oracle import implied_covariance, random_instance
    g = parse_graph("z -> x\nz <-> x\nx -> y\nx -> w")
    assert find_path_system(g, ["x", "z"], ["y", "w"]) is None
    assert brute_force_path_system(g, ["x", "z"], ["y", "w"]) is None
    s = implied_covariance(random_instance(g, 5))
    a = np.array([[s["x", "y"], s["x", "w"]], [s["z", "y"], s["z", "w"]]])
    assert abs(np.linalg.det(a)) < 1e-12


def test_zero_length_system():
    g = parse_graph("x -> y")
    ps = find_path_system(g, ["x"], ["x"])
    assert [p.nodes for p in ps.paths] == [("x",)]


def test_find_returns_alternative_system():
    g = parse_graph("z -> x\nz -> t\nt -> w\nx -> y\nx -> w")
    ps = find_path_system(g, ["x", "z"], ["y", "w"])
    assert ps is not None
    assert no_sided_intersection(ps.paths)
    assert ps.targets == ("y", "w")


def test_find_size_mismatch():
    g = parse_graph("x -> y")
    with pytest.raises(ValueError):
        find_path_system(g, ["x"], ["x", "y"])


def test_half_trek_mode_refuses_upward_steps():
    g = parse_graph("p -> z\np -> x")
    assert find_path_system(g, ["z"], ["x"], "unblocked") is not None
    assert find_path_system(g, ["z"], ["x"], "half_trek") is None


def test_banned_first_edge():
    g = parse_graph("w -> z\nw -> x")
    assert find_path_system(g, ["z"], ["x"]) is not None
    assert find_path_system(g, ["z"], ["x"], banned_first={"z": ["w"]}) is None


def test_path_system_json():
    g = parse_graph("z -> x")
    ps = find_path_system(g, ["z"], ["x"])
    assert ps.to_json() == [{"nodes": ["z", "x"], "path": "z -> x"}]


graph_params = st.tuples(st.integers(0, 100_000), st.integers(2, 7),
                         st.sampled_from([0.2, 0.4, 0.7]), st.sampled_from([0.1, 0.3, 0.5]))


@settings(max_examples=80, deadline=None)
@given(graph_params, st.integers(0, 1000))
def test_d_separation_matches_enumeration(params, seed):
    g = random_graph(*params)
    rng = np.random.default_rng(seed)
    for x, y in itertools.permutations(g.nodes, 2):
        rest = [v for v in g.nodes if v not in (x, y)]
        given_set = {v for v in rest if rng.random() < 0.3}
        sep = d_separated(g, x, y, given_set)
        assert sep == (not enumerate_unblocked_paths(g, x, y, given_set))
        assert sep == d_separated(g, y, x, given_set)


@settings(max_examples=80, deadline=None)
@given(graph_params)
def test_sides_cover_paths(params):
    g = random_graph(*params)
    for x, y in itertools.combinations(g.nodes, 2):
        for p in enumerate_unblocked_paths(g, x, y):
            sd = sided_decomposition(p)
            assert sd.left | sd.right == set(p.nodes)
            assert p.source in sd.left and p.target in sd.right
            # the top is shared unless a bidirected edge replaces it
            has_top = all(k != BIDIRECTED for _, k in p.steps)
            assert len(sd.left & sd.right) == (1 if has_top else 0)


@settings(max_examples=60, deadline=None)
@given(graph_params, st.integers(0, 1000), st.sampled_from(["unblocked", "half_trek"]))
def test_flow_matches_brute_force(params, seed, mode):
    g = random_graph(*params)
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, min(3, len(g)) + 1))
    z = list(rng.choice(g.nodes, k, replace=False))
    x = list(rng.choice(g.nodes, k, replace=False))
    fast = find_path_system(g, z, x, mode)
    slow = brute_force_path_system(g, z, x, mode)
    assert (fast is None) == (slow is None)
    if fast is not None:
        assert no_sided_intersection(fast.paths)
        assert fast.sources == tuple(z)
        assert sorted(fast.targets) == sorted(x)
        if mode == "half_trek":
            assert all(p.is_half_trek() for p in fast.paths)
