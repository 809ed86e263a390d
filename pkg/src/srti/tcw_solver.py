"""Dynamic program over a tree-cut decomposition for SRTI existence and perfect variants.

A table entry of node t and vector h over cut(t) holds a matching on
E(G[Y_t]) + cut(t) that complies with h, or ABSENT. Per cut edge, 0 means
"in the matching", 1 means "the endpoint inside Y_t is at least as happy as
with this edge", and -1 carries no promise.

Leaves are filled by enumeration. Inner nodes combine the children: heavy
children are enumerated through a threshold family, light children are
grouped into classes, and the remaining choices are decided by 2-SAT
over threshold variables x_j, read as "x's partner ranks worse than j".
Every produced entry is re-checked with `complies`.
"""

from __future__ import annotations

import enum
import itertools
import sys
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from . import twosat
from .core_model import INFINITY, Edge, Instance, Matching, MatchingError, edge_key, is_perfect, is_stable
from .graph_params import (
    ChildKind,
    TreeCutDecomposition,
    check_structure,
    child_kinds,
    make_nice,
    tcd_from_fes,
)
from .oracle import SolveMode

ABSENT = None

Vector = tuple[int, ...]


class SolverError(ValueError):
    pass


class ClassKind(enum.Enum):
    GOOD = "good"
    BAD = "bad"
    UNMATCHED = "unmatched"


# -- per-node geometry ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NodeInfo:
    node: str
    bag: frozenset
    inside: frozenset
    cut: tuple[Edge, ...]
    allowed: frozenset
    closure_edges: tuple[Edge, ...]

    @cached_property
    def cut_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.cut)}

    def inner_end(self, e: Edge) -> str:
        return e[0] if e[0] in self.inside else e[1]

    def outer_end(self, e: Edge) -> str:
        return e[1] if e[0] in self.inside else e[0]


def node_info(instance: Instance, tcd: TreeCutDecomposition, t: str) -> NodeInfo:
    g = instance.graph
    ys = tcd.subtree_vertices[t]
    cut = tuple(tcd.cut(g, t))
    internal = {e for e in g.edges if e[0] in ys and e[1] in ys}
    closure = set(ys) | {x for e in cut for x in e}
    closure_edges = tuple(e for e in g.edges if e[0] in closure and e[1] in closure)
    return NodeInfo(t, tcd.bags[t], ys, cut, frozenset(internal | set(cut)), closure_edges)


def complies(instance: Instance, decomposition: TreeCutDecomposition, t: str, M, h: Sequence[int],
             perfect: bool = False, info: NodeInfo | None = None) -> bool:
    """Whether M complies with h at node t (and matches all of Y_t if perfect)."""
    info = info or node_info(instance, decomposition, t)
    M = M if isinstance(M, Matching) else Matching(M)
    for e in M.edges:
        if e not in info.allowed:
            raise MatchingError(f"{e[0]} {e[1]} lies outside the edges available at node {t}")
    if len(h) != len(info.cut):
        raise SolverError(f"vector has {len(h)} coordinates but node {t} has {len(info.cut)} cut edges")
    rank = instance.rank
    for e, he in zip(info.cut, h):
        if (e in M.edges) != (he == 0):
            return False
        if he == 1:
            v, w = info.inner_end(e), info.outer_end(e)
            if rank(v, M.partner(v)) > rank(v, w):
                return False
    ys = info.inside
    for u, w in info.closure_edges:
        if (u, w) in M.edges:
            continue
        if rank(u, w) < rank(u, M.partner(u)) and rank(w, u) < rank(w, M.partner(w)):
            if (u not in ys and not M.is_matched(u)) or (w not in ys and not M.is_matched(w)):
                continue
            return False
    if perfect and any(not M.is_matched(v) for v in ys):
        return False
    return True


def all_vectors(length: int) -> Iterator[Vector]:
    return itertools.product((-1, 0, 1), repeat=length)


# -- tables ---------------------------------------------------------------------

def _enumerate_local(edges: Sequence[Edge]) -> Iterator[Matching]:
    from .oracle import enumerate_matchings
    return enumerate_matchings(edges)


def leaf_table(instance: Instance, decomposition: TreeCutDecomposition, t: str,
               mode: SolveMode = SolveMode.EXISTENCE, info: NodeInfo | None = None) -> dict[Vector, Matching | None]:
    """Full table of a node by enumerating matchings of E(G[Y_t]) + cut(t)."""
    info = info or node_info(instance, decomposition, t)
    return exhaustive_table(instance, decomposition, t, mode, info)


def exhaustive_table(instance: Instance, decomposition: TreeCutDecomposition, t: str,
                     mode: SolveMode = SolveMode.EXISTENCE, info: NodeInfo | None = None) -> dict[Vector, Matching | None]:
    """Reference table for any node: first complying matching per vector in enumeration order."""
    info = info or node_info(instance, decomposition, t)
    perfect = mode is SolveMode.PERFECT
    table: dict[Vector, Matching | None] = {h: ABSENT for h in all_vectors(len(info.cut))}
    pending = set(table)
    rank = instance.rank
    for M in _enumerate_local(sorted(info.allowed)):
        if not pending:
            break
        if not complies(instance, decomposition, t, M, (-1,) * 0 if not info.cut else _base_vector(info, M), perfect, info):
            continue
        options = []
        for e in info.cut:
            if e in M.edges:
                options.append((0,))
            else:
                v, w = info.inner_end(e), info.outer_end(e)
                options.append((-1, 1) if rank(v, M.partner(v)) <= rank(v, w) else (-1,))
        for h in itertools.product(*options):
            if h in pending:
                table[h] = M
                pending.discard(h)
    return table


def _base_vector(info: NodeInfo, M: Matching) -> Vector:
    return tuple(0 if e in M.edges else -1 for e in info.cut)


class TableStore:
    """Lazily filled, memoised tables of every node of one decomposition."""

    def __init__(self, instance: Instance, decomposition: TreeCutDecomposition,
                 mode: SolveMode = SolveMode.EXISTENCE, check: bool = True):
        if mode is SolveMode.MAX:
            raise SolverError("the tree-cut DP decides existence and perfect variants only")
        check_structure(instance.graph, decomposition)
        self.instance = instance
        self.tcd = decomposition
        self.mode = mode
        self.check = check
        self.kinds = child_kinds(instance.graph, decomposition)
        self.info = {t: node_info(instance, decomposition, t) for t in decomposition.preorder}
        self._memo: dict[tuple[str, Vector], Matching | None] = {}
        self._leaf: dict[str, dict] = {}
        self._classes: dict[str, "LightView"] = {}

    @property
    def perfect(self) -> bool:
        return self.mode is SolveMode.PERFECT

    def get(self, t: str, h: Vector) -> Matching | None:
        h = tuple(h)
        key = (t, h)
        if key in self._memo:
            return self._memo[key]
        if not self.tcd.children[t]:
            if t not in self._leaf:
                self._leaf[t] = leaf_table(self.instance, self.tcd, t, self.mode, self.info[t])
            entry = self._leaf[t][h]
        else:
            entry = induction_step(self.instance, self.tcd, t, h, self, self.mode)
        if self.check and entry is not ABSENT:
            if not complies(self.instance, self.tcd, t, entry, h, self.perfect, self.info[t]):
                raise AssertionError(f"stored witness at node {t} does not comply with {h}")
        self._memo[key] = entry
        return entry

    def table(self, t: str) -> dict[Vector, Matching | None]:
        return {h: self.get(t, h) for h in all_vectors(len(self.info[t].cut))}

    def signature(self, t: str) -> frozenset:
        return frozenset(h for h, m in self.table(t).items() if m is not ABSENT)


def _lookup(tables, c: str, g: Vector):
    if isinstance(tables, TableStore):
        return tables.get(c, g)
    return tables[c].get(tuple(g), ABSENT)


# -- light children and classes ---------------------------------------------------

@dataclass(frozen=True)
class Coord:
    """One cut edge of a light child, seen from the bag side."""
    bag_vertex: str
    child_vertex: str
    edge: Edge
    position: int


@dataclass(frozen=True, eq=False)
class LightChild:
    node: str
    coords: tuple[Coord, ...]
    sig: frozenset
    to_raw: Mapping[Vector, Vector]

    @property
    def neighbours(self) -> tuple[str, ...]:
        return tuple(c.bag_vertex for c in self.coords)


@dataclass(frozen=True, eq=False)
class ChildClass:
    key: tuple
    members: tuple[LightChild, ...]

    @property
    def neighbours(self) -> tuple[str, ...]:
        return self.key[0]

    @property
    def sig(self) -> frozenset:
        return self.key[1]

    @property
    def vertices(self) -> frozenset:
        return frozenset(self.key[0])

    def sig_at(self, z: str) -> frozenset:
        """Values h with (h at the other coordinate, 1 at z) in the signature."""
        n = self.neighbours
        if len(n) != 2 or n[0] == n[1]:
            return frozenset()
        i = n.index(z)
        return frozenset(v[1 - i] for v in self.sig if v[i] == 1)


@dataclass
class LightView:
    classes: list[ChildClass]
    isolated: list[str]
    no_instance: bool


def _light_child(instance: Instance, info_c: NodeInfo, bag: frozenset, sig_raw: frozenset) -> LightChild:
    rank = instance.rank
    coords = []
    for i, e in enumerate(info_c.cut):
        v = info_c.inner_end(e)
        x = info_c.outer_end(e)
        coords.append(Coord(x, v, e, i))
    coords.sort(key=lambda c: (c.bag_vertex, rank(c.bag_vertex, c.child_vertex), c.edge))
    perm = [c.position for c in coords]
    sig = frozenset(tuple(h[p] for p in perm) for h in sig_raw)
    to_raw = {}
    for canon in all_vectors(len(perm)):
        raw = [0] * len(perm)
        for j, p in enumerate(perm):
            raw[p] = canon[j]
        to_raw[canon] = tuple(raw)
    return LightChild(info_c.node, tuple(coords), sig, to_raw)


def light_classes(instance: Instance, decomposition: TreeCutDecomposition, t: str, tables) -> LightView:
    """Group light children of t by (bag neighbours, signature); flag a provable no-instance."""
    kinds = child_kinds(instance.graph, decomposition) if not isinstance(tables, TableStore) else tables.kinds
    groups: dict[tuple, list[LightChild]] = {}
    isolated = []
    for c in decomposition.children[t]:
        if kinds[c] is not ChildKind.LIGHT:
            continue
        info_c = tables.info[c] if isinstance(tables, TableStore) else node_info(instance, decomposition, c)
        if not info_c.cut:
            isolated.append(c)
            continue
        if isinstance(tables, TableStore):
            sig_raw = tables.signature(c)
        else:
            sig_raw = frozenset(h for h, m in tables[c].items() if m is not ABSENT)
        lc = _light_child(instance, info_c, decomposition.bags[t], sig_raw)
        groups.setdefault((lc.neighbours, lc.sig), []).append(lc)
    classes = [ChildClass(k, tuple(v)) for k, v in sorted(groups.items(), key=lambda kv: (kv[0][0], sorted(kv[0][1])))]
    no_instance = any(
        len(cl.members) >= 3 and len(cl.neighbours) == 2 and cl.neighbours[0] != cl.neighbours[1]
        and (-1, -1) not in cl.sig
        for cl in classes
    )
    return LightView(classes, isolated, no_instance)


def class_of(classes: Iterable[ChildClass], child: str) -> ChildClass:
    for cl in classes:
        if any(m.node == child for m in cl.members):
            return cl
    raise KeyError(child)


def classify_class(cls: ChildClass, node_matching: Mapping[str, ChildClass | None]) -> ClassKind:
    """Label a class GOOD, BAD or UNMATCHED; labels only, the resolution itself is exact."""
    hits = [x for x in dict.fromkeys(cls.neighbours) if node_matching.get(x) is cls]
    if not hits:
        return ClassKind.UNMATCHED
    n = cls.neighbours
    if len(n) != 2 or n[0] == n[1]:
        return ClassKind.GOOD
    x, y = n
    if len(hits) == 1:
        other = y if hits[0] == x else x
        if cls.sig_at(other) == frozenset({-1, 1}):
            return ClassKind.BAD
        return ClassKind.GOOD
    if ((-1, 0) not in cls.sig or (0, -1) not in cls.sig) and {(1, -1), (-1, 1)} <= cls.sig:
        return ClassKind.BAD
    return ClassKind.GOOD


# -- class resolution ---------------------------------------------------------------

def _pref(rank_at: float, p: float) -> bool:
    return rank_at < p


def _vals(preferred: bool) -> tuple[int, ...]:
    return (1,) if preferred else (1, -1)


def _pick(sig: frozenset, allowed: Sequence[Sequence[int]]) -> Vector | None:
    for v in itertools.product(*allowed):
        if v in sig:
            return v
    return None


@dataclass(frozen=True)
class Candidate:
    """Choice inside a class: which child vertex each matched bag vertex takes."""
    x_rank: int
    other_rank: float
    picks: tuple[tuple[str, str, str], ...]


def _single_candidates(instance: Instance, cls: ChildClass, x: str) -> list[Candidate]:
    """Feasible (child, edge) choices for a class with the single neighbour x, best rank first."""
    rank = instance.rank
    out = []
    for c in cls.members:
        for coord in c.coords:
            p = rank(x, coord.child_vertex)
            ok = True
            for d in cls.members:
                allowed = []
                for cd in d.coords:
                    if d is c and cd is coord:
                        allowed.append((0,))
                    else:
                        allowed.append(_vals(_pref(rank(x, cd.child_vertex), p)))
                if _pick(cls.sig, allowed) is None:
                    ok = False
                    break
            if ok:
                out.append(Candidate(p, INFINITY, ((x, c.node, coord.child_vertex),)))
    out.sort(key=lambda k: k.x_rank)
    return out


def _singly_candidates(instance: Instance, cls: ChildClass, x: str, fixed: str | None = None) -> list[Candidate]:
    """Candidates for x in a two-neighbour class whose other neighbour y is not matched into it.

    other_rank is the cap U: y must end with rank at most U (INFINITY = no cap).
    """
    rank = instance.rank
    i = cls.neighbours.index(x)
    y = cls.neighbours[1 - i]
    out = []
    for c in cls.members:
        if fixed is not None and c.coords[i].child_vertex != fixed:
            continue
        a_c = rank(x, c.coords[i].child_vertex)
        cap = INFINITY
        ok = True
        for d in cls.members:
            xv = (0,) if d is c else _vals(_pref(rank(x, d.coords[i].child_vertex), a_c))
            with_one = [None, None]
            with_one[i], with_one[1 - i] = xv, (1,)
            if _pick(cls.sig, with_one) is not None:
                continue
            with_one[1 - i] = (-1,)
            if _pick(cls.sig, with_one) is not None:
                cap = min(cap, rank(y, d.coords[1 - i].child_vertex))
                continue
            ok = False
            break
        if ok:
            out.append(Candidate(a_c, cap, ((x, c.node, c.coords[i].child_vertex),)))
    return out


def _doubly_candidates(instance: Instance, cls: ChildClass, fixed: Mapping[str, str] = {}) -> list[Candidate]:
    """Pairs (child for x, child for y) with both bag neighbours matched into the class.

    other_rank is y's rank of its partner.
    """
    rank = instance.rank
    x, y = cls.neighbours
    out = []
    for c in cls.members:
        vx = c.coords[0].child_vertex
        if x in fixed and fixed[x] != vx:
            continue
        a = rank(x, vx)
        for c2 in cls.members:
            vy = c2.coords[1].child_vertex
            if y in fixed and fixed[y] != vy:
                continue
            b = rank(y, vy)
            ok = True
            for d in cls.members:
                ax = (0,) if d is c else _vals(_pref(rank(x, d.coords[0].child_vertex), a))
                ay = (0,) if d is c2 else _vals(_pref(rank(y, d.coords[1].child_vertex), b))
                if _pick(cls.sig, (ax, ay)) is None:
                    ok = False
                    break
            if ok:
                out.append(Candidate(a, b, ((x, c.node, vx), (y, c2.node, vy))))
    return out


def _frontier(cands: list[Candidate], other_better_high: bool) -> list[Candidate]:
    """Pareto frontier: smaller x_rank is better; other_rank better when high (caps) or low (ranks)."""
    best: dict[int, Candidate] = {}
    for k in cands:
        cur = best.get(k.x_rank)
        if cur is None:
            best[k.x_rank] = k
            continue
        better = k.other_rank > cur.other_rank if other_better_high else k.other_rank < cur.other_rank
        if better:
            best[k.x_rank] = k
    out: list[Candidate] = []
    for a in sorted(best):
        k = best[a]
        if out:
            prev = out[-1].other_rank
            dominated = k.other_rank <= prev if other_better_high else k.other_rank >= prev
            if dominated:
                continue
        out.append(k)
    return out


def good_class_candidates(instance: Instance, cls: ChildClass, node_matching: Mapping[str, ChildClass | None]) -> list[Candidate]:
    """Candidate choices for a class some bag vertex is matched into (exact Pareto frontier).

    A single candidate means the class can be fixed; longer lists are monotone chains.
    """
    hits = [x for x in dict.fromkeys(cls.neighbours) if node_matching.get(x) is cls]
    if not hits:
        return []
    n = cls.neighbours
    if len(n) == 1 or n[0] == n[1]:
        cands = _single_candidates(instance, cls, n[0])
        return cands[:1]
    if len(hits) == 1:
        return _frontier(_singly_candidates(instance, cls, hits[0]), other_better_high=True)
    return _frontier(_doubly_candidates(instance, cls), other_better_high=False)


def reduce_bad_class(instance: Instance, cls: ChildClass, node_matching: Mapping[str, ChildClass | None]) -> list[Candidate]:
    """Strictly monotone chain left after deleting dominated children."""
    chain = good_class_candidates(instance, cls, node_matching)
    for a, b in zip(chain, chain[1:]):
        assert a.x_rank < b.x_rank
        hits = [x for x in dict.fromkeys(cls.neighbours) if node_matching.get(x) is cls]
        if len(hits) == 1:
            assert a.other_rank < b.other_rank
        else:
            assert a.other_rank > b.other_rank
    return chain


# -- heavy children -----------------------------------------------------------------

@dataclass(frozen=True)
class HeavyChoice:
    vectors: Mapping[str, Vector]
    partners: Mapping[str, str]
    witnesses: Mapping[str, Matching]


def _final_rank_known(instance: Instance, x: str, partner: str | None) -> float:
    return INFINITY if partner is None else instance.rank(x, partner)


def heavy_candidate_family(instance: Instance, decomposition: TreeCutDecomposition, t: str, h: Sequence[int],
                           tables, fixed_partner: Mapping[str, str | None] | None = None,
                           check_tables: bool = True) -> Iterator[HeavyChoice]:
    """Vectors for all heavy children of t, consistent with h.

    Bag vertices with a known partner (fixed_partner) induce their heavy-edge
    values directly. Every other bag vertex either takes one heavy edge, or
    picks a threshold from its heavy ranks (plus infinity): edges it ranks
    strictly better than the threshold get 1, the rest -1. Heavy-heavy edges
    are matched or oriented one way; edges leaving Y_t follow h.
    """
    store = tables if isinstance(tables, TableStore) else None
    info = store.info[t] if store else node_info(instance, decomposition, t)
    kinds = store.kinds if store else child_kinds(instance.graph, decomposition)
    rank = instance.rank
    fixed_partner = dict(fixed_partner or {})
    heavy = [c for c in decomposition.children[t] if kinds[c] is ChildKind.HEAVY]
    if not heavy:
        yield HeavyChoice({}, {}, {})
        return
    bag = info.bag
    owner = {}
    for c in heavy:
        for v in decomposition.subtree_vertices[c]:
            owner[v] = c
    cinfo = {c: (store.info[c] if store else node_info(instance, decomposition, c)) for c in heavy}
    out_partner: dict[str, str] = {}
    for e, he in zip(info.cut, h):
        if he == 0:
            out_partner[info.outer_end(e)] = info.inner_end(e)

    # per heavy child, its coordinates: ('bag', x) / ('pair', edge) / ('out', value)
    fixed_vals: dict[tuple[str, int], int] = {}
    bag_edges: dict[str, list[tuple[str, int, str]]] = {}
    pair_edges: list[tuple[Edge, tuple[str, int], tuple[str, int]]] = []
    seen_pairs: dict[Edge, tuple[str, int]] = {}
    for c in heavy:
        for i, e in enumerate(cinfo[c].cut):
            v, w = cinfo[c].inner_end(e), cinfo[c].outer_end(e)
            if w in bag:
                bag_edges.setdefault(w, []).append((c, i, v))
            elif w in owner:
                if e in seen_pairs:
                    pair_edges.append((e, seen_pairs[e], (c, i)))
                else:
                    seen_pairs[e] = (c, i)
            else:
                he = h[info.cut_index[e]]
                if he == -1 and w in out_partner and rank(w, v) < rank(w, out_partner[w]):
                    he = 1
                fixed_vals[(c, i)] = he

    free = sorted(x for x in bag_edges if x not in fixed_partner)
    for x, edges in bag_edges.items():
        if x in fixed_partner:
            p = _final_rank_known(instance, x, fixed_partner[x])
            for c, i, v in edges:
                fixed_vals[(c, i)] = 1 if rank(x, v) < p else -1

    # decisions ordered child by child so each table lookup happens as early as possible
    decisions: list[tuple[str, object]] = []
    placed: set = set()
    x_children = {x: {c for c, _, _ in bag_edges[x]} for x in free}
    for c in heavy:
        for x in free:
            if c in x_children[x] and ("x", x) not in placed:
                placed.add(("x", x))
                decisions.append(("x", x))
        for j, (_, a, b) in enumerate(pair_edges):
            if c in (a[0], b[0]) and ("pair", j) not in placed:
                placed.add(("pair", j))
                decisions.append(("pair", j))
    options: list[list[tuple]] = []
    for kind, item in decisions:
        if kind == "x":
            x = item
            opts = [("match", c, i, v) for c, i, v in sorted(bag_edges[x], key=lambda k: (rank(x, k[2]), k[2]))]
            thresholds = sorted({rank(x, v) for _, _, v in bag_edges[x]}) + [INFINITY]
            opts += [("theta", th) for th in thresholds]
        else:
            opts = [("pair", 0, 0), ("pair", 1, -1), ("pair", -1, 1)]
        options.append(opts)

    adh = {c: len(cinfo[c].cut) for c in heavy}
    # decision index after which each child's vector is complete
    deps: dict[str, int] = {c: -1 for c in heavy}
    for k, (kind, item) in enumerate(decisions):
        if kind == "x":
            for c in x_children[item]:
                deps[c] = max(deps[c], k)
        else:
            _, a, b = pair_edges[item]
            deps[a[0]] = max(deps[a[0]], k)
            deps[b[0]] = max(deps[b[0]], k)
    ready: dict[int, list[str]] = {}
    for c, k in deps.items():
        ready.setdefault(k, []).append(c)

    vals: dict[tuple[str, int], int] = dict(fixed_vals)
    partners: dict[str, str] = {}
    witnesses: dict[str, Matching] = {}

    def check(k: int) -> bool:
        for c in ready.get(k, []):
            g = tuple(vals[(c, i)] for i in range(adh[c]))
            if check_tables:
                w = _lookup(tables, c, g)
                if w is ABSENT:
                    return False
                witnesses[c] = w
        return True

    def rec(k: int) -> Iterator[HeavyChoice]:
        if k == len(options):
            vectors = {c: tuple(vals[(c, i)] for i in range(adh[c])) for c in heavy}
            yield HeavyChoice(vectors, dict(partners), dict(witnesses))
            return
        kind, item = decisions[k]
        for opt in options[k]:
            touched = []
            if kind == "x":
                x = item
                if opt[0] == "match":
                    _, c0, i0, v0 = opt
                    if v0 in partners.values():
                        continue
                    p = rank(x, v0)
                    partners[x] = v0
                    for c, i, v in bag_edges[x]:
                        vals[(c, i)] = 0 if (c, i) == (c0, i0) else (1 if rank(x, v) < p else -1)
                        touched.append((c, i))
                else:
                    th = opt[1]
                    for c, i, v in bag_edges[x]:
                        vals[(c, i)] = 1 if rank(x, v) < th else -1
                        touched.append((c, i))
            else:
                _, a, b = pair_edges[item]
                vals[a], vals[b] = opt[1], opt[2]
                touched += [a, b]
            if check(k):
                yield from rec(k + 1)
            for key in touched:
                vals.pop(key, None)
            if kind == "x":
                partners.pop(item, None)

    if not check(-1):
        return
    yield from rec(0)


# -- 2-SAT construction --------------------------------------------------------------

TRUE = "T"
FALSE = "F"


@dataclass(frozen=True)
class PartialEmbedding:
    """Fixed part of a candidate solution at a node.

    edges: matched edges incident to the bag (inside the bag, to heavy
    children, or into a fixed light class). heavy: chosen heavy vectors with
    their witnesses.
    """
    edges: frozenset = frozenset()
    heavy: HeavyChoice = HeavyChoice({}, {}, {})


@dataclass
class PeeFormula:
    formula: twosat.TwoSatFormula
    clauses: set[frozenset]
    decode: "object"
    variables: dict[tuple[str, int], int]


class _Builder:
    def __init__(self, instance: Instance, bag: Sequence[str]):
        self.instance = instance
        self.maxrk = {x: instance.max_rank(x) for x in bag}
        self.var: dict[tuple[str, int], int] = {}
        self.chain: dict[str, list[int]] = {}
        self.clauses: set[frozenset] = set()
        self.unsat = False
        for x in sorted(bag):
            for j in range(1, self.maxrk[x] + 1):
                self.var[(x, j)] = len(self.var) + 1

    def lit(self, x: str, j: float, positive: bool):
        """Literal 'p_x > j' (positive) or its negation, after chain canonicalisation."""
        if j == INFINITY or j >= self.maxrk[x] + 1:
            value = False
        elif j < 1:
            value = True
        else:
            value = None
            j = int(j)
            if x in self.chain:
                ranks = [a for a in self.chain[x] if a <= j]
                if not ranks:
                    value = True
                else:
                    j = ranks[-1]
        if value is not None:
            return TRUE if value == positive else FALSE
        return (x, j, positive)

    def add(self, *lits) -> None:
        keep = []
        for lt in lits:
            if lt == TRUE:
                return
            if lt == FALSE:
                continue
            keep.append(lt)
        if not keep:
            self.unsat = True
            return
        self.clauses.add(frozenset(keep))

    def fix(self, x: str, p: float) -> None:
        if p == INFINITY:
            self.add(self.lit(x, self.maxrk[x], True))
        else:
            self.add(self.lit(x, p - 1, True))
            self.add(self.lit(x, p, False))

    def cap(self, x: str, r: float) -> None:
        """Partner of x ranks at most r."""
        if r != INFINITY:
            self.add(self.lit(x, r, False))

    def formula(self) -> twosat.TwoSatFormula:
        f = twosat.TwoSatFormula(len(self.var))
        for cl in sorted(self.clauses, key=lambda c: sorted(map(repr, c))):
            ls = [self.var[(x, j)] * (1 if pos else -1) for x, j, pos in cl]
            f.add(ls[0], ls[-1])
        return f

    def p_value(self, x: str, assignment: Mapping[int, bool]) -> float:
        for j in range(1, self.maxrk[x] + 1):
            lt = self.lit(x, j, True)
            val = lt == TRUE if lt in (TRUE, FALSE) else assignment[self.var[(lt[0], lt[1])]]
            if not val:
                return j
        return INFINITY


def build_pee_2sat(instance: Instance, decomposition: TreeCutDecomposition, t: str,
                   node_matching: Mapping[str, ChildClass | None], partial: PartialEmbedding,
                   h: Sequence[int], tables, mode: SolveMode = SolveMode.EXISTENCE,
                   view: LightView | None = None) -> PeeFormula | None:
    """2-CNF whose models are the extensions of the partial embedding; None if trivially infeasible.

    node_matching maps each bag vertex that is matched into a light class to
    that class and each vertex left unmatched to None; vertices absent from it
    are matched by the partial embedding or by an h=0 cut edge.
    """
    store = tables if isinstance(tables, TableStore) else None
    info = store.info[t] if store else node_info(instance, decomposition, t)
    view = view or light_classes(instance, decomposition, t, tables)
    rank = instance.rank
    bag = sorted(info.bag)
    b = _Builder(instance, bag)

    partner: dict[str, str] = {}
    for u, w in partial.edges:
        for x, y in ((u, w), (w, u)):
            if x in info.bag:
                if x in partner and partner[x] != y:
                    raise SolverError(f"partial embedding matches {x} twice")
                partner[x] = y
    out_partner: dict[str, str] = {}
    for e, he in zip(info.cut, h):
        if he == 0:
            x, w = info.inner_end(e), info.outer_end(e)
            out_partner[w] = x
            if x in info.bag:
                if x in partner:
                    return None
                partner[x] = w

    # bad chains must be known before literals are built
    resolutions: dict[int, tuple[str, list[Candidate]]] = {}
    class_fixed: dict[str, tuple[str, str]] = {}
    for idx, cls in enumerate(view.classes):
        hits = [x for x in dict.fromkeys(cls.neighbours) if node_matching.get(x) is cls]
        if not hits:
            continue
        n = cls.neighbours
        pinned = {x: partner[x] for x in hits if x in partner}
        if len(n) == 1 or n[0] == n[1]:
            cands = _single_candidates(instance, cls, n[0])
            if pinned:
                cands = [k for k in cands if k.picks[0][2] == pinned[n[0]]]
            if not cands:
                return None
            resolutions[idx] = ("fixed", cands[:1])
        elif len(hits) == 1:
            cands = _frontier(_singly_candidates(instance, cls, hits[0], pinned.get(hits[0])), True)
            if not cands:
                return None
            resolutions[idx] = ("single", cands)
            if len(cands) > 1:
                b.chain[hits[0]] = [k.x_rank for k in cands]
        else:
            cands = _frontier(_doubly_candidates(instance, cls, pinned), False)
            if not cands:
                return None
            resolutions[idx] = ("double", cands)
            if len(cands) > 1:
                x, y = n
                b.chain[x] = [k.x_rank for k in cands]
                b.chain[y] = sorted(k.other_rank for k in cands)

    # chain clauses x_j or not x_{j+1}
    for x in bag:
        for j in range(1, b.maxrk[x]):
            b.add(b.lit(x, j, True), b.lit(x, j + 1, False))

    matched_into = {x for x, cl in node_matching.items() if cl is not None}
    for x in bag:
        if x in partner and x not in matched_into:
            b.fix(x, rank(x, partner[x]))
        elif node_matching.get(x, "absent") is None:
            if x in partner:
                return None
            b.fix(x, INFINITY)
    for x in matched_into:
        inner = [rank(x, v) for v in instance.graph.adj[x] if v in info.inside and v not in info.bag]
        if inner:
            b.cap(x, max(inner))

    # class constraints
    for idx, (kind, cands) in resolutions.items():
        cls = view.classes[idx]
        if kind == "fixed" or len(cands) == 1:
            k = cands[0]
            for x, _, v in k.picks:
                b.fix(x, rank(x, v))
                class_fixed[x] = (k.picks, v)
            if kind == "single":
                y = [z for z in cls.neighbours if z != k.picks[0][0]][0]
                b.cap(y, k.other_rank)
        elif kind == "single":
            x = cands[0].picks[0][0]
            y = [z for z in cls.neighbours if z != x][0]
            for k in cands:
                if k.other_rank != INFINITY:
                    b.add(b.lit(x, k.x_rank, True), b.lit(y, k.other_rank, False))
            b.cap(x, cands[-1].x_rank)
        else:
            x, y = cls.neighbours
            for k, nxt in zip(cands, cands[1:]):
                b.add(b.lit(x, k.x_rank, True), b.lit(y, nxt.other_rank, True))
            b.cap(x, cands[-1].x_rank)
            b.cap(y, cands[0].other_rank)

    # unmatched classes: relation clauses per child
    for idx, cls in enumerate(view.classes):
        if idx in resolutions:
            continue
        for c in cls.members:
            _relation_clauses(b, instance, cls.sig, c.coords)

    # edges inside the bag
    g = instance.graph
    for u, w in g.edges:
        if u in info.bag and w in info.bag and partner.get(u) != w:
            b.add(b.lit(u, rank(u, w), False), b.lit(w, rank(w, u), False))

    # cut edges at bag vertices
    for e, he in zip(info.cut, h):
        x, w = info.inner_end(e), info.outer_end(e)
        if x not in info.bag:
            continue
        if he == 1:
            b.cap(x, rank(x, w))
        elif he == -1 and w in out_partner and rank(w, x) < rank(w, out_partner[w]):
            b.cap(x, rank(x, w))

    # heavy edges left unmatched: the child vertex may still want x
    heavy = partial.heavy
    for c, g_vec in heavy.vectors.items():
        ci = store.info[c] if store else node_info(instance, decomposition, c)
        wit = heavy.witnesses.get(c) or _lookup(tables, c, g_vec)
        for e, val in zip(ci.cut, g_vec):
            v, x = ci.inner_end(e), ci.outer_end(e)
            if x in info.bag and val == -1 and rank(v, x) < rank(v, wit.partner(v)):
                b.cap(x, rank(x, v))

    if mode is SolveMode.PERFECT:
        for x in bag:
            if x not in partner and x not in matched_into:
                return None

    if b.unsat:
        return None
    formula = b.formula()

    def decode(assignment: Mapping[int, bool]) -> Matching | None:
        p = {x: b.p_value(x, assignment) for x in bag}
        final = dict(partner)
        for idx, (kind, cands) in resolutions.items():
            cls = view.classes[idx]
            if kind == "fixed" or len(cands) == 1:
                k = cands[0]
            else:
                x = cands[0].picks[0][0]
                k = next((k for k in cands if k.x_rank == p[x]), None)
                if k is None:
                    return None
            for z, _, v in k.picks:
                final[z] = v
                p[z] = rank(z, v)
        edges = set()
        for x, v in final.items():
            edges.add(edge_key(x, v))
        for c, w in heavy.witnesses.items():
            edges |= w.edges
        for cls in view.classes:
            for c in cls.members:
                allowed = []
                for cd in c.coords:
                    x = cd.bag_vertex
                    if final.get(x) == cd.child_vertex:
                        allowed.append((0,))
                    else:
                        allowed.append(_vals(rank(x, cd.child_vertex) < p[x]))
                vec = _pick(cls.sig, allowed)
                if vec is None:
                    return None
                w = _lookup(tables, c.node, c.to_raw[vec])
                if w is ABSENT:
                    return None
                edges |= w.edges
        for c in view.isolated:
            w = _lookup(tables, c, ())
            if w is ABSENT:
                return None
            edges |= w.edges
        try:
            return Matching(edges)
        except MatchingError:
            return None

    return PeeFormula(formula, set(b.clauses), decode, dict(b.var))


def _relation_clauses(b: _Builder, instance: Instance, sig: frozenset, coords: Sequence[Coord]) -> None:
    """Clauses allowing exactly the (prefers?)-patterns of the bag vertices the signature supports."""
    rank = instance.rank
    lits = [b.lit(cd.bag_vertex, rank(cd.bag_vertex, cd.child_vertex), True) for cd in coords]
    allowed_patterns = []
    patterns = list(itertools.product((True, False), repeat=len(coords)))
    for pat in patterns:
        if _pick(sig, [_vals(pv) for pv in pat]) is not None:
            allowed_patterns.append(pat)
    if not allowed_patterns:
        b.unsat = True
        return
    forbidden = [pat for pat in patterns if pat not in allowed_patterns]
    covered = set()
    for i, lt in enumerate(lits):
        for val in (True, False):
            if all(pat in forbidden for pat in patterns if pat[i] == val):
                b.add(_neg(lt) if val else lt)
                covered |= {pat for pat in patterns if pat[i] == val}
    for pat in forbidden:
        if pat in covered:
            continue
        b.add(*[_neg(lt) if val else lt for lt, val in zip(lits, pat)])


def _neg(lt):
    if lt == TRUE:
        return FALSE
    if lt == FALSE:
        return TRUE
    x, j, pos = lt
    return (x, j, not pos)


# -- induction step and solver ----------------------------------------------------

def induction_step(instance: Instance, decomposition: TreeCutDecomposition, t: str, h: Sequence[int],
                   tables: TableStore, mode: SolveMode = SolveMode.EXISTENCE) -> Matching | None:
    """Entry of node t for vector h from its children's tables."""
    h = tuple(h)
    info = tables.info[t]
    perfect = mode is SolveMode.PERFECT
    zero = [e for e, he in zip(info.cut, h) if he == 0]
    if len({x for e in zero for x in e}) != 2 * len(zero):
        return ABSENT
    view = tables._classes.get(t)
    if view is None:
        view = light_classes(instance, decomposition, t, tables)
        tables._classes[t] = view
    if view.no_instance:
        return ABSENT
    for c in view.isolated:
        if tables.get(c, ()) is ABSENT:
            return ABSENT

    fixed_out = {}
    for e in zero:
        x = info.inner_end(e)
        if x in info.bag:
            fixed_out[x] = info.outer_end(e)
    g = instance.graph
    bag_edges = [e for e in g.edges if e[0] in info.bag and e[1] in info.bag
                 and e[0] not in fixed_out and e[1] not in fixed_out]
    class_options: dict[str, list] = {x: [] for x in info.bag}
    for cls in view.classes:
        for x in dict.fromkeys(cls.neighbours):
            class_options[x].append(cls)

    from .oracle import enumerate_matchings
    for m_bag in enumerate_matchings(bag_edges):
        known = dict(fixed_out)
        for u, w in m_bag.edges:
            known[u], known[w] = w, u
        for heavy in heavy_candidate_family(instance, decomposition, t, h, tables, known):
            taken = dict(known)
            taken.update(heavy.partners)
            free = sorted(x for x in info.bag if x not in taken)
            opts = []
            for x in free:
                o = list(class_options[x])
                if not perfect:
                    o.append(None)
                opts.append(o)
            edges = set(m_bag.edges) | {edge_key(x, v) for x, v in heavy.partners.items()}
            partial = PartialEmbedding(frozenset(edges), heavy)
            for combo in itertools.product(*opts):
                nm = dict(zip(free, combo))
                if any(sum(1 for z in free if nm[z] is cl) > len(set(cl.neighbours)) for cl in set(nm.values()) if cl):
                    continue
                pee = build_pee_2sat(instance, decomposition, t, nm, partial, h, tables, mode, view)
                if pee is None:
                    continue
                assignment = twosat.solve(pee.formula)
                if assignment is None:
                    continue
                M = pee.decode(assignment)
                if M is None:
                    continue
                if complies(instance, decomposition, t, M, h, perfect, info):
                    return M
    return ABSENT


def default_decomposition(instance: Instance) -> TreeCutDecomposition:
    tcd, _ = make_nice(instance.graph, tcd_from_fes(instance.graph, search="dfs"))
    return tcd


def solve(instance: Instance, decomposition: TreeCutDecomposition | None = None,
          mode: SolveMode = SolveMode.EXISTENCE, check: bool = True) -> Matching | None:
    """A stable (perfect stable) matching, or None when none exists."""
    if mode is SolveMode.MAX:
        raise SolverError("maximum stable matching is not decided by the tree-cut DP; use approx_max or fes")
    tcd = decomposition if decomposition is not None else default_decomposition(instance)
    store = TableStore(instance, tcd, mode, check)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20 * (len(tcd.bags) + 50)))
    try:
        M = store.get(tcd.root, ())
    finally:
        sys.setrecursionlimit(limit)
    if M is ABSENT:
        return None
    if not is_stable(instance, M):
        raise AssertionError("root witness is not stable")
    if mode is SolveMode.PERFECT and not is_perfect(instance, M):
        raise AssertionError("root witness is not perfect")
    return M


def approx_max(instance: Instance, decomposition: TreeCutDecomposition | None = None) -> Matching | None:
    """Any stable matching; being maximal, it has at least half the maximum size."""
    return solve(instance, decomposition, SolveMode.EXISTENCE)
