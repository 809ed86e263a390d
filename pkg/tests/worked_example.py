"""Four bag vertices x1..x4 with nine light leaf children and abstract child tables.

Signatures are in (first, second) bag-neighbour order; the expected clause
set uses ("x3", 1, False) for "not x3_1".
"""

from srti import tcw_solver as T
from srti.core_model import Instance, Matching
from srti.graph_params import make_tcd

ALL = frozenset((a, b) for a in (-1, 0, 1) for b in (-1, 0, 1))

RANKS = {
    "x1": {"a1": 1, "a2": 2, "d1": 1},
    "x2": {"a1": 2, "a2": 2, "b1": 2, "b2": 1, "d1": 2, "e1": 2, "x3": 2},
    "x3": {"b1": 1, "b2": 2, "c1": 1, "c2": 2, "e1": 1, "f1": 1, "x2": 2},
    "x4": {"c1": 1, "c2": 2, "f1": 2},
}

SIGNATURES = {
    "a1": ALL - {(1, 1), (0, 1)}, "a2": ALL - {(1, 1), (0, 1)},
    "b1": ALL - {(0, -1), (0, 1)}, "b2": ALL - {(0, -1), (0, 1)},
    "c1": ALL - {(1, 0)}, "c2": ALL - {(1, 0)},
    "d1": {(-1, -1), (1, -1)}, "e1": {(-1, -1), (1, -1), (-1, 1)}, "f1": {(-1, -1)},
}


def _lit(x, j, pos=True):
    return (x, j, pos)


EXPECTED_CLAUSES = {frozenset(c) for c in [
    [_lit("x1", 1)], [_lit("x1", 1), _lit("x1", 2, False)], [_lit("x1", 2, False)],
    [_lit("x2", 1), _lit("x2", 2, False)], [_lit("x2", 1), _lit("x3", 1)], [_lit("x2", 2, False)],
    [_lit("x2", 2, False), _lit("x3", 1, False)], [_lit("x2", 2, False), _lit("x3", 2, False)],
    [_lit("x3", 1, False)], [_lit("x3", 1, False), _lit("x4", 1)], [_lit("x3", 1), _lit("x3", 2, False)],
    [_lit("x3", 2, False)], [_lit("x3", 2, False), _lit("x4", 2)],
    [_lit("x4", 1), _lit("x4", 2, False)], [_lit("x4", 2, False)],
]}


def build():
    ranks = {x: dict(r) for x, r in RANKS.items()}
    for x, r in RANKS.items():
        for v in r:
            if not v.startswith("x"):
                ranks.setdefault(v, {})[x] = 1
    inst = Instance.from_ranks(ranks)
    bags = {"t": {"x1", "x2", "x3", "x4"}}
    parent = {"t": None}
    for v in SIGNATURES:
        bags["c_" + v] = {v}
        parent["c_" + v] = "t"
    tcd = make_tcd("t", parent, bags)
    tables = {"c_" + v: {h: (Matching() if h in sig else None) for h in ALL} for v, sig in SIGNATURES.items()}
    return inst, tcd, tables


def clause_set():
    """(classification, clause set) of the encoded example."""
    inst, tcd, tables = build()
    view = T.light_classes(inst, tcd, "t", tables)
    A, B, C = (T.class_of(view.classes, f"c_{v}") for v in ("a1", "b1", "c1"))
    nm = {"x1": A, "x2": B, "x3": B, "x4": C}
    kinds = {name: T.classify_class(cl, nm) for name, cl in (("a", A), ("b", B), ("c", C))}
    pee = T.build_pee_2sat(inst, tcd, "t", nm, T.PartialEmbedding(frozenset({("a2", "x1")})), (), tables, view=view)
    return kinds, pee.clauses
