import networkx as nx
import pytest
from hypothesis import given, settings

import worked_example
from conftest import cyclic3, instances, pair
from srti import tcw_solver as T
from srti.core_model import Instance, Matching, MatchingError, is_perfect, is_stable
from srti.graph_params import child_kinds, make_nice, make_tcd, tcd_from_fes
from srti.oracle import SolveMode, brute_max_size, brute_solve

ALL = worked_example.ALL


def leaf_setup():
    """Leaf {v} below a root {w}, one cut edge v-w."""
    inst = Instance.from_ranks({"v": {"w": 1}, "w": {"v": 1}})
    tcd = make_tcd("r", {"r": None, "t": "r"}, {"r": {"w"}, "t": {"v"}})
    return inst, tcd


def test_complies_examples():
    inst, tcd = leaf_setup()
    assert T.complies(inst, tcd, "t", Matching([("v", "w")]), (0,))
    assert not T.complies(inst, tcd, "t", Matching(), (1,))
    assert T.complies(inst, tcd, "t", Matching(), (-1,))
    assert not T.complies(inst, tcd, "t", Matching(), (0,))


def test_complies_rejects_edges_outside_the_node():
    inst = Instance.from_ranks({"v": {"w": 1}, "w": {"v": 1, "u": 1}, "u": {"w": 1}})
    tcd = make_tcd("r", {"r": None, "t": "r"}, {"r": {"w", "u"}, "t": {"v"}})
    with pytest.raises(MatchingError):
        T.complies(inst, tcd, "t", Matching([("u", "w")]), (-1,))


def test_leaf_table_examples():
    inst, tcd = leaf_setup()
    table = T.leaf_table(inst, tcd, "t")
    assert {h for h, m in table.items() if m is not None} == {(-1,), (0,)}
    perfect = T.leaf_table(inst, tcd, "t", SolveMode.PERFECT)
    assert {h for h, m in perfect.items() if m is not None} == {(0,)}
    lone = Instance.from_ranks({"v": {}})
    tcd1 = make_tcd("r", {"r": None, "t": "r"}, {"r": set(), "t": {"v"}})
    assert T.leaf_table(lone, tcd1, "t") == {(): Matching()}


def nice_example_instance():
    """Nice-decomposition example; v3 ranks v12 strictly first."""
    edges = [("v11", "v12"), ("v12", "v14"), ("v14", "v15"), ("v15", "v13"), ("v3", "v12"), ("v3", "v14"),
             ("v3", "v15"), ("v21", "v22"), ("v22", "v11"), ("v21", "r1"), ("v42", "v15"), ("v41", "v42"),
             ("v42", "v43"), ("v41", "v43"), ("v42", "v13"), ("v13", "r2")]
    ranks: dict = {}
    for u, w in edges:
        ranks.setdefault(u, {})[w] = 1
        ranks.setdefault(w, {})[u] = 1
    ranks["v3"] = {"v12": 1, "v14": 2, "v15": 3}
    inst = Instance.from_ranks(ranks)
    tcd = make_tcd("r", {"r": None, "t1": "r", "t2": "t1", "t3": "t1", "t4": "t1"},
                   {"r": {"r1", "r2"}, "t1": {"v11", "v12", "v13", "v14", "v15"}, "t2": {"v21", "v22"},
                    "t3": {"v3"}, "t4": {"v41", "v42", "v43"}})
    return inst, tcd


def test_example_node_t3_rank_one_promise_is_absent():
    inst, tcd = nice_example_instance()
    info = T.node_info(inst, tcd, "t3")
    i = info.cut_index[("v12", "v3")]
    for h, m in T.leaf_table(inst, tcd, "t3").items():
        if h[i] == 1:
            assert m is None


def test_example_node_t4_double_match_is_absent():
    inst, tcd = nice_example_instance()
    info = T.node_info(inst, tcd, "t4")
    idx = [info.cut_index[e] for e in (("v15", "v42"), ("v13", "v42"))]
    for h, m in T.leaf_table(inst, tcd, "t4").items():
        if all(h[i] == 0 for i in idx):
            assert m is None


def test_heavy_family_without_heavy_children():
    inst, tcd = leaf_setup()
    store = T.TableStore(inst, tcd)
    family = list(T.heavy_candidate_family(inst, tcd, "r", (), store))
    assert [dict(c.vectors) for c in family] == [{}]


def test_heavy_family_monotone_paddings():
    inst = Instance.from_ranks({"x": {"v": 1}, "v": {"x": 1, "z": 2}, "z": {"v": 1}})
    tcd = make_tcd("r", {"r": None, "t": "r", "c": "t"}, {"r": {"z"}, "t": {"x"}, "c": {"v"}})
    store = T.TableStore(inst, tcd)
    assert T.heavy_candidate_family is not None
    vectors = {c.vectors["c"] for c in T.heavy_candidate_family(inst, tcd, "t", (-1,), store, check_tables=False)}
    assert {(-1, -1), (1, -1)} <= vectors


def star_with_leaves(sigs: dict, neighbours: dict, ranks: dict):
    """Bag {x, y}; each leaf child v is adjacent to the bag vertices in neighbours[v]."""
    full = {x: dict(r) for x, r in ranks.items()}
    for v, ns in neighbours.items():
        for x in ns:
            full.setdefault(v, {})[x] = 1
            full.setdefault(x, {}).setdefault(v, 1)
    inst = Instance.from_ranks(full)
    bags = {"t": set(ranks)}
    parent = {"t": None}
    for v in neighbours:
        bags["c_" + v], parent["c_" + v] = {v}, "t"
    tcd = make_tcd("t", parent, bags)
    tables = {"c_" + v: {h: (Matching() if h in sig else None) for h in T.all_vectors(len(neighbours[v]))}
              for v, sig in sigs.items()}
    return inst, tcd, tables


def test_light_classes_grouping_and_prune():
    one = frozenset({(-1,), (0,)})
    inst, tcd, tables = star_with_leaves({"a": one, "b": one, "c": one}, {"a": ["x"], "b": ["x"], "c": ["y"]},
                                         {"x": {}, "y": {}})
    view = T.light_classes(inst, tcd, "t", tables)
    assert sorted(len(cl.members) for cl in view.classes) == [1, 2]
    assert not view.no_instance
    sig = frozenset(ALL - {(-1, -1)})
    inst, tcd, tables = star_with_leaves({v: sig for v in "abc"}, {v: ["x", "y"] for v in "abc"},
                                         {"x": {}, "y": {}})
    view = T.light_classes(inst, tcd, "t", tables)
    assert len(view.classes) == 1 and view.no_instance


def test_classify_class_examples():
    one = frozenset({(-1,), (0,)})
    inst, tcd, tables = star_with_leaves({"a": one}, {"a": ["x"]}, {"x": {}})
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert T.classify_class(cls, {"x": cls}) is T.ClassKind.GOOD
    assert T.classify_class(cls, {"x": None}) is T.ClassKind.UNMATCHED
    sig = frozenset({(0, -1), (0, 1), (-1, -1), (1, -1)})
    inst, tcd, tables = star_with_leaves({"a": sig}, {"a": ["x", "y"]}, {"x": {}, "y": {}})
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert cls.sig_at("y") == frozenset({0})
    assert cls.sig_at("x") == frozenset({-1})
    assert T.classify_class(cls, {"x": cls, "y": None}) is T.ClassKind.GOOD
    bad_sig = frozenset({(0, -1), (-1, 1), (1, 1)})
    inst, tcd, tables = star_with_leaves({"a": bad_sig}, {"a": ["x", "y"]}, {"x": {}, "y": {}})
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert T.classify_class(cls, {"x": cls, "y": None}) is T.ClassKind.BAD


def test_good_class_candidates_single_neighbour():
    one = frozenset({(-1,), (0,)})
    sigs = {v: one for v in "abcde"}
    ranks = {"x": {v: i for i, v in enumerate("cadeb", start=1)}}
    inst, tcd, tables = star_with_leaves(sigs, {v: ["x"] for v in "abcde"}, ranks)
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    (cand,) = T.good_class_candidates(inst, cls, {"x": cls})
    assert cand.picks == (("x", "c_c", "c"),) and cand.x_rank == 1
    strict = frozenset({(1,), (0,)})
    inst, tcd, tables = star_with_leaves({v: strict for v in "abcde"}, {v: ["x"] for v in "abcde"}, ranks)
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert [c.picks for c in T.good_class_candidates(inst, cls, {"x": cls})] == [(("x", "c_c", "c"),)]
    tied = {"x": {"c": 1, "a": 1, "d": 2, "e": 3, "b": 4}}
    inst, tcd, tables = star_with_leaves({v: one for v in "abcde"}, {v: ["x"] for v in "abcde"}, tied)
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert [c.x_rank for c in T.good_class_candidates(inst, cls, {"x": cls})] == [1]
    must = frozenset({(0,)})
    inst, tcd, tables = star_with_leaves({v: must for v in "abcde"}, {v: ["x"] for v in "abcde"}, tied)
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert T.good_class_candidates(inst, cls, {"x": cls}) == []


def test_singleton_class_candidate_is_the_child():
    one = frozenset({(-1,), (0,)})
    inst, tcd, tables = star_with_leaves({"a": one}, {"a": ["x"]}, {"x": {}})
    (cls,) = T.light_classes(inst, tcd, "t", tables).classes
    assert [c.picks for c in T.good_class_candidates(inst, cls, {"x": cls})] == [(("x", "c_a", "a"),)]


def test_reduce_bad_class_is_strictly_monotone():
    inst, tcd, tables = worked_example.build()
    view = T.light_classes(inst, tcd, "t", tables)
    B = T.class_of(view.classes, "c_b1")
    chain = T.reduce_bad_class(inst, B, {"x2": B, "x3": B})
    assert len(chain) >= 1
    for a, b in zip(chain, chain[1:]):
        assert a.x_rank < b.x_rank and a.other_rank > b.other_rank


def test_worked_example_clause_set():
    kinds, clauses = worked_example.clause_set()
    assert kinds == {"a": T.ClassKind.GOOD, "b": T.ClassKind.BAD, "c": T.ClassKind.BAD}
    assert clauses == worked_example.EXPECTED_CLAUSES


def test_fixed_only_formula_has_unit_clauses():
    inst, tcd = leaf_setup()
    store = T.TableStore(inst, tcd)
    partial = T.PartialEmbedding(frozenset({("v", "w")}))
    pee = T.build_pee_2sat(inst, tcd, "r", {}, partial, (), store)
    assert pee is not None and all(len(c) == 1 for c in pee.clauses)


def test_all_children_absent_gives_absent():
    inst = Instance.from_ranks({"x": {}, "v": {}})
    tcd = make_tcd("r", {"r": None, "c": "r"}, {"r": {"x"}, "c": {"v"}})
    store = T.TableStore(inst, tcd, SolveMode.PERFECT)
    assert store.table("c") == {(): None}
    assert store.get("r", ()) is None


def test_cyclic_and_pair():
    inst = cyclic3()
    tcd, _ = make_nice(inst.graph, tcd_from_fes(inst.graph))
    assert T.solve(inst, tcd) is None
    for mode in (SolveMode.EXISTENCE, SolveMode.PERFECT):
        assert T.solve(pair(), mode=mode) == Matching([("a", "b")])


def test_max_mode_rejected():
    with pytest.raises(T.SolverError):
        T.solve(pair(), mode=SolveMode.MAX)


def test_approx_unique_stable_matching():
    inst = Instance.from_ranks({"a": {"b": 1, "c": 2}, "b": {"a": 1}, "c": {"a": 1}})
    assert T.approx_max(inst) == Matching([("a", "b")])


@settings(max_examples=60)
@given(instances(max_n=8))
def test_agrees_with_brute_force(inst):
    for mode in (SolveMode.EXISTENCE, SolveMode.PERFECT):
        M = T.solve(inst, mode=mode)
        assert (M is None) == (brute_solve(inst, mode, 64) is None)
        if M is not None:
            assert is_stable(inst, M)
            if mode is SolveMode.PERFECT:
                assert is_perfect(inst, M)


@settings(max_examples=25)
@given(instances(max_n=7))
def test_bfs_decompositions_agree(inst):
    tcd, _ = make_nice(inst.graph, tcd_from_fes(inst.graph, "bfs"))
    M = T.solve(inst, tcd)
    assert (M is None) == (brute_solve(inst, SolveMode.EXISTENCE, 64) is None)


@settings(max_examples=25)
@given(instances(max_n=6))
def test_tables_match_exhaustive_reference(inst):
    tcd = T.default_decomposition(inst)
    for mode in (SolveMode.EXISTENCE, SolveMode.PERFECT):
        store = T.TableStore(inst, tcd, mode)
        for t in tcd.preorder:
            ref = T.exhaustive_table(inst, tcd, t, mode)
            assert store.signature(t) == frozenset(h for h, m in ref.items() if m is not None)


@settings(max_examples=25)
@given(instances(max_n=7))
def test_table_soundness_and_monotone_permissiveness(inst):
    tcd = T.default_decomposition(inst)
    store = T.TableStore(inst, tcd)
    for t in tcd.preorder:
        for h, M in store.table(t).items():
            if M is None:
                continue
            assert T.complies(inst, tcd, t, M, h)
            for i, v in enumerate(h):
                if v == 1:
                    relaxed = h[:i] + (-1,) + h[i + 1:]
                    assert T.complies(inst, tcd, t, M, relaxed)


@settings(max_examples=40)
@given(instances(max_n=8))
def test_approximation_ratio(inst):
    M = T.approx_max(inst)
    best = brute_max_size(inst, 64)
    assert (M is None) == (best is None)
    if M is not None:
        assert 2 * len(M) >= best


def test_decomposition_mismatch_rejected():
    inst = pair()
    tcd = make_tcd("r", {"r": None}, {"r": {"a"}})
    with pytest.raises(Exception):
        T.solve(inst, tcd)


def test_heavy_child_kinds_present_in_bfs_case():
    g = nx.cycle_graph(5)
    ranks = {f"a{u}": {} for u in g}
    for u, v in g.edges():
        ranks[f"a{u}"][f"a{v}"] = 1
        ranks[f"a{v}"][f"a{u}"] = 1
    inst = Instance.from_ranks(ranks)
    tcd = tcd_from_fes(inst.graph, "bfs")
    assert child_kinds(inst.graph, tcd)
    assert (T.solve(inst, tcd) is None) == (brute_solve(inst, SolveMode.EXISTENCE) is None)
