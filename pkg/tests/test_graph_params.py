import itertools
import random

import networkx as nx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srti.core_model import ParseError
from srti.gadgets import gen_edge_gadget_tcw, gen_vertex_gadget
from srti.graph_params import (CapExceededError, ChildKind, DecompositionError, check_structure, child_kinds,
                               elimination_forest_height, feedback_edge_set, fvs_exact_small, make_nice, make_tcd,
                               parse_decomposition, serialize_decomposition, spanning_forest, tcd_from_fes,
                               tcw_exact_tiny, torso, torso_size, treedepth_exact_small, validate_tcd)


def example_graph() -> tuple[nx.Graph, object]:
    """Graph with a nice decomposition: t1 and t4 light, t2 and t3 heavy."""
    g = nx.Graph([("v11", "v12"), ("v12", "v14"), ("v14", "v15"), ("v15", "v13"),
                  ("v3", "v12"), ("v3", "v14"), ("v3", "v15"),
                  ("v21", "v22"), ("v22", "v11"), ("v21", "r1"),
                  ("v42", "v15"), ("v41", "v42"), ("v42", "v43"), ("v41", "v43"), ("v42", "v13"),
                  ("v13", "r2")])
    tcd = make_tcd("r", {"r": None, "t1": "r", "t2": "t1", "t3": "t1", "t4": "t1"},
                   {"r": {"r1", "r2"}, "t1": {"v11", "v12", "v13", "v14", "v15"}, "t2": {"v21", "v22"},
                    "t3": {"v3"}, "t4": {"v41", "v42", "v43"}})
    return g, tcd


def gnp(n, p, seed):
    g = nx.gnp_random_graph(n, p, seed=seed)
    return nx.relabel_nodes(g, {v: f"v{v}" for v in g})


def test_feedback_edge_set_examples():
    assert feedback_edge_set(nx.path_graph(6)) == set()
    assert len(feedback_edge_set(nx.cycle_graph(5))) == 1


@pytest.mark.parametrize("seed", range(20))
def test_feedback_edge_set_leaves_forest(seed):
    g = gnp(10, 0.4, seed)
    F = feedback_edge_set(g)
    h = g.copy()
    h.remove_edges_from(F)
    assert nx.is_forest(h)
    assert len(F) == g.number_of_edges() - g.number_of_nodes() + nx.number_connected_components(g)


def test_spanning_forest_searches_agree_on_size():
    g = gnp(12, 0.3, 1)
    assert spanning_forest(g, "bfs").number_of_edges() == spanning_forest(g, "dfs").number_of_edges()


def test_fvs_and_treedepth_examples():
    assert fvs_exact_small(nx.path_graph(5)) == set()
    assert len(fvs_exact_small(nx.cycle_graph(3))) == 1
    assert treedepth_exact_small(nx.path_graph(7)) == 3
    assert treedepth_exact_small(nx.complete_graph(4)) == 4
    with pytest.raises(CapExceededError):
        treedepth_exact_small(nx.path_graph(20))
    with pytest.raises(CapExceededError):
        fvs_exact_small(nx.path_graph(30))


def test_elimination_forest_checks():
    g = nx.path_graph(3)
    assert elimination_forest_height(g, {1: None, 0: 1, 2: 1}) == 2
    with pytest.raises(DecompositionError, match="unrelated"):
        elimination_forest_height(g, {0: None, 1: 0, 2: 0})
    with pytest.raises(DecompositionError, match="missing"):
        elimination_forest_height(g, {0: None, 1: 0})


def test_tree_decomposition_along_itself_has_width_one():
    g = nx.balanced_tree(2, 3)
    assert validate_tcd(g, tcd_from_fes(g)).width == 1


def test_two_bag_decomposition_width_is_vertex_count():
    g = gnp(7, 0.6, 3)
    tcd = make_tcd("a", {"a": None, "b": "a"}, {"a": set(g.nodes()), "b": set()})
    assert validate_tcd(g, tcd).width == g.number_of_nodes()


def test_four_cycle_from_fes():
    assert validate_tcd(nx.cycle_graph(4), tcd_from_fes(nx.cycle_graph(4))).width <= 3


@pytest.mark.parametrize("seed", range(40))
def test_fes_decomposition_width_bound(seed):
    g = gnp(random.Random(seed).randint(1, 12), 0.3, seed)
    tcd = tcd_from_fes(g)
    assert validate_tcd(g, tcd).width <= 2 * len(feedback_edge_set(g)) + 1


def test_gadget_star_decompositions():
    frag = gen_vertex_gadget(3, 2)
    assert validate_tcd(frag.instance(with_outside=False), frag.decomposition).width <= 4
    frag = gen_edge_gadget_tcw(1, 2, 3, 2)
    assert validate_tcd(frag.instance(with_outside=False), frag.decomposition).width <= 10


def test_structure_errors_name_the_rule():
    g = nx.path_graph(3)
    with pytest.raises(DecompositionError, match="no bag"):
        check_structure(g, make_tcd("a", {"a": None}, {"a": {0, 1}}))
    with pytest.raises(DecompositionError):
        check_structure(g, make_tcd("a", {"a": None, "b": "a"}, {"a": {0, 1}, "b": {1, 2}}))


def test_example_light_and_heavy_children():
    g, tcd = example_graph()
    kinds = child_kinds(g, tcd)
    assert kinds == {"t1": ChildKind.LIGHT, "t2": ChildKind.HEAVY, "t3": ChildKind.HEAVY, "t4": ChildKind.LIGHT}


def test_make_nice_idempotent_on_nice_input():
    g, tcd = example_graph()
    nice, kinds = make_nice(g, tcd)
    assert validate_tcd(g, nice).width == validate_tcd(g, tcd).width
    again, _ = make_nice(g, nice)
    assert again.parent == nice.parent and again.bags == nice.bags


@pytest.mark.parametrize("seed", range(30))
def test_make_nice_preserves_width_and_bounds_heavy_children(seed):
    g = gnp(random.Random(seed).randint(2, 10), 0.35, seed)
    tcd = tcd_from_fes(g, "bfs")
    before = validate_tcd(g, tcd).width
    nice, kinds = make_nice(g, tcd)
    width = validate_tcd(g, nice).width
    assert width <= before
    assert set().union(*nice.bags.values()) == set(g.nodes())
    assert len(nice.bags) <= 2 * g.number_of_nodes() + 1
    for t in nice.preorder:
        heavy = [c for c in nice.children[t] if kinds[c] is ChildKind.HEAVY]
        assert len(heavy) <= 2 * width + 1


def test_tcw_exact_tiny():
    assert tcw_exact_tiny(nx.path_graph(3)) == 1
    tri = tcw_exact_tiny(nx.cycle_graph(3))
    assert 1 <= tri <= 3
    assert tcw_exact_tiny(nx.empty_graph(1)) <= 1
    with pytest.raises(CapExceededError):
        tcw_exact_tiny(nx.path_graph(9))


@pytest.mark.parametrize("seed", range(6))
def test_exact_tiny_lower_bounds_constructions(seed):
    g = gnp(5, 0.5, seed)
    assert tcw_exact_tiny(g) <= validate_tcd(g, tcd_from_fes(g)).width


@given(st.integers(0, 10**6))
def test_suppression_independent_of_order(seed):
    rng = random.Random(seed)
    g = gnp(rng.randint(3, 8), 0.4, seed)
    tcd = tcd_from_fes(g)
    for t in tcd.preorder:
        _, _, contracted = torso(g, tcd, t)
        sizes = {torso_size(g, tcd, t, order) for order in itertools.permutations(sorted(contracted, key=repr))}
        assert len(sizes) == 1


def test_decomposition_round_trip_and_errors():
    g, tcd = example_graph()
    text = serialize_decomposition(tcd)
    back = parse_decomposition("# comment\n" + text)
    assert back.parent == tcd.parent and back.bags == tcd.bags
    with pytest.raises(ParseError):
        parse_decomposition("node a : x\n")
    with pytest.raises(ParseError):
        parse_decomposition("root a\nnode a : x\nbogus\n")
    with pytest.raises(DecompositionError):
        parse_decomposition("root a\nnode a : x\nnode b : y\n")
