import itertools

import pytest
from hypothesis import given, settings

from conftest import cyclic3, instances, pair
from srti.core_model import INFINITY, Instance, Matching, is_stable
from srti.fes_solver import (DISCARD, FesStats, ReductionError, build_reduced, fes_max, lift,
                             solve_reduced_max)
from srti.graph_params import feedback_edge_set
from srti.oracle import brute_max_size


def square(ranks_b_c: int = 1) -> Instance:
    """4-cycle a-b-c-d-a."""
    return Instance.from_ranks({
        "a": {"b": 1, "d": 2},
        "b": {"c": ranks_b_c, "a": 2},
        "c": {"b": 1, "d": 2},
        "d": {"a": 1, "c": 2},
    })


def test_tree_branch_keeps_the_instance():
    inst = Instance.from_ranks({"a": {"b": 1}, "b": {"a": 2, "c": 1}, "c": {"b": 1}})
    H = build_reduced(inst, [], [], {})
    assert H.guards == {} and H.matched == Matching()
    assert set(H.instance.graph.edges) == set(inst.graph.edges)
    M = solve_reduced_max(H)
    assert lift(H, M) == Matching([("b", "c")])


def test_blocking_pair_inside_the_matched_set_discards():
    inst = square()
    assert build_reduced(inst, [("a", "b"), ("c", "d")], [("a", "b"), ("c", "d")], {}) is DISCARD


def test_orientation_sets_threshold_and_guards():
    inst = square()
    F = [("a", "d")]
    H = build_reduced(inst, F, [], {("a", "d"): "d"})
    assert H.alpha["d"] == 1 and H.alpha["a"] == INFINITY
    v1, v2 = H.guards["d"]
    assert H.instance.rank("d", v2) < H.instance.rank("d", v1)
    assert ("a", "d") not in H.instance.graph.index
    # d ranks c at 2, above its threshold 1, so the edge is pruned
    assert set(H.instance.graph.adj["d"]) == {v1, v2}


def test_oriented_endpoint_in_matched_set_discards_when_it_prefers():
    inst = square()
    F = [("a", "b"), ("c", "d")]
    # a is matched to b (rank 1) so a does not prefer d: kept
    assert build_reduced(inst, F, [("a", "b")], {("c", "d"): "d"}) is not DISCARD
    inst2 = Instance.from_ranks({"a": {"b": 2, "d": 1}, "b": {"a": 1, "c": 1}, "c": {"b": 1, "d": 1},
                                 "d": {"a": 2, "c": 1}})
    assert build_reduced(inst2, [("a", "b"), ("a", "d")], [("a", "b")], {("a", "d"): "a"}) is DISCARD


def test_reduction_errors():
    inst = square()
    with pytest.raises(ReductionError):
        build_reduced(inst, [("a", "b")], [("c", "d")], {})
    with pytest.raises(ReductionError):
        build_reduced(inst, [("a", "b"), ("b", "c")], [("a", "b"), ("b", "c")], {})
    with pytest.raises(ReductionError):
        build_reduced(inst, [("a", "c")], [], {("a", "c"): "a"})
    with pytest.raises(ReductionError):
        build_reduced(inst, [("a", "b")], [], {("a", "b"): "c"})


def test_cyclic_has_no_stable_matching():
    assert fes_max(cyclic3()) is None
    assert fes_max(pair()) == Matching([("a", "b")])


def test_empty_instance():
    assert fes_max(Instance.from_ranks({})) == Matching()


def test_stats_respect_branch_bound():
    stats = FesStats()
    fes_max(square(), stats)
    assert stats.fes_size == 1
    assert 0 < stats.branches <= stats.branch_bound
    assert stats.discarded + stats.solved <= stats.branches


@settings(max_examples=120)
@given(instances(max_n=7))
def test_matches_brute_force_maximum(inst):
    M = fes_max(inst)
    best = brute_max_size(inst, 64)
    assert (M is None) == (best is None)
    if M is not None:
        assert is_stable(inst, M) and len(M) == best


@settings(max_examples=40)
@given(instances(max_n=6))
def test_every_branch_reduces_to_forest_with_triangles(inst):
    F = sorted(feedback_edge_set(inst.graph))
    for r in range(len(F) + 1):
        for Fp in itertools.combinations(F, r):
            if len({x for e in Fp for x in e}) != 2 * r:
                continue
            rest = [e for e in F if e not in Fp]
            for ends in itertools.product((0, 1), repeat=len(rest)):
                H = build_reduced(inst, F, Fp, {e: e[i] for e, i in zip(rest, ends)})
                if H is DISCARD:
                    continue
                M = solve_reduced_max(H)
                best = brute_max_size(H.instance, 64)
                assert (M is None) == (best is None)
                if M is not None:
                    assert len(M) == best


def test_threads_give_the_sequential_answer():
    from srti.core_model import random_instance
    for seed in range(8):
        inst = random_instance(8, 0.5, 0.3, seed)
        assert fes_max(inst, threads=3) == fes_max(inst)
