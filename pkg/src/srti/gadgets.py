"""Hardness gadgets and instance transformations.

Two clique reductions (bounded treedepth/fvs, bounded tree-cut width), the
perfect-to-existence and maximum-to-perfect transformations, and their
witness matchings. Raw gadget ranks are kept in registries because
``Instance.from_ranks`` compresses rank gaps; stability only depends on the
order, so the compressed instance is equivalent.

Names are hierarchical: ``kind/index/local``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .core_model import Edge, Instance, Matching, break_ties, edge_key, is_stable
from .graph_params import TreeCutDecomposition, make_tcd

Ranks = dict[str, dict[str, int]]


class GadgetError(ValueError):
    """Precondition of a gadget or reduction violated."""


def _link(ranks: Ranks, a: str, b: str, rank_a: int, rank_b: int) -> None:
    """a ranks b at rank_a, b ranks a at rank_b."""
    if a == b:
        raise GadgetError(f"self-loop at {a!r}")
    ranks.setdefault(a, {})[b] = rank_a
    ranks.setdefault(b, {})[a] = rank_b


def _merge(into: Ranks, part: Mapping[str, Mapping[str, int]]) -> None:
    for a, rk in part.items():
        target = into.setdefault(a, {})
        for b, r in rk.items():
            if b in target and target[b] != r:
                raise GadgetError(f"conflicting ranks for {a!r} -> {b!r}")
            target[b] = r


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "~"
    taken.add(name)
    return name


# -- fragments ----------------------------------------------------------------

@dataclass
class Fragment:
    """A gadget: raw ranks (including its half of each boundary edge) and a witness decomposition.

    ``outside`` lists boundary agents that belong to the host, ``names`` maps
    local names to global ids, and ``decomposition`` covers the interior only.
    """

    ranks: Ranks
    outside: tuple[str, ...]
    boundary_edges: tuple[Edge, ...]
    names: dict[str, str]
    decomposition: TreeCutDecomposition | None = None
    min_size: int = 0

    @property
    def interior(self) -> list[str]:
        return sorted(a for a in self.ranks if a not in self.outside)

    def instance(self, with_outside: bool = True) -> Instance:
        if with_outside:
            return Instance.from_ranks(self.ranks)
        inner = set(self.interior)
        ranks = {a: {b: r for b, r in rk.items() if b in inner} for a, rk in self.ranks.items() if a in inner}
        return Instance.from_ranks(ranks, sorted(inner))

    def __getitem__(self, local: str) -> str:
        return self.names[local]


def _star(prefix: str, centre: Iterable[str], leaves: Sequence[Iterable[str]]) -> TreeCutDecomposition:
    root = f"{prefix}centre"
    parent: dict[str, str | None] = {root: None}
    bags = {root: set(centre)}
    for q, leaf in enumerate(leaves, start=1):
        t = f"{prefix}leaf{q}"
        parent[t] = root
        bags[t] = set(leaf)
    return make_tcd(root, parent, bags)


def gen_parallel_edge_gadget(u: str, v: str, i: int, j: int, prefix: str = "pe/") -> Fragment:
    """Six-cycle replacing edge u-v; u ranks it at i, v at j.

    Option A = {u0u1, v1v0, v2u2} and option B = {u1v1, v0v2, u2u0}.
    """
    if i < 1 or j < 1:
        raise GadgetError("parallel-edge ranks must be positive")
    loc = {x: f"{prefix}{x}" for x in ("u0", "u1", "u2", "v0", "v1", "v2")}
    loc.update(u=u, v=v)
    n = loc
    ranks: Ranks = {}
    _link(ranks, u, n["u0"], i, 2)
    _link(ranks, n["u0"], n["u1"], 1, 2)
    _link(ranks, n["u0"], n["u2"], 3, 1)
    _link(ranks, n["u1"], n["v1"], 1, 2)
    _link(ranks, n["v1"], n["v0"], 1, 3)
    _link(ranks, n["v0"], n["v2"], 1, 2)
    _link(ranks, n["v0"], v, 2, j)
    _link(ranks, n["v2"], n["u2"], 1, 2)
    inner = [loc[x] for x in ("u0", "u1", "u2", "v0", "v1", "v2")]
    dec = make_tcd(f"{prefix}bag", {f"{prefix}bag": None}, {f"{prefix}bag": inner})
    return Fragment(ranks, (u, v), (edge_key(u, n["u0"]), edge_key(n["v0"], v)), loc, dec, min_size=3)


def parallel_option(frag: Fragment, option: str) -> list[Edge]:
    n = frag.names
    if option == "A":
        pairs = (("u0", "u1"), ("v1", "v0"), ("v2", "u2"))
    elif option == "B":
        pairs = (("u1", "v1"), ("v0", "v2"), ("u2", "u0"))
    else:
        raise GadgetError(f"unknown option {option!r}")
    return [edge_key(n[a], n[b]) for a, b in pairs]


def gen_vertex_gadget(paths: int, rank: int, host: str = "ci", prefix: str = "vg/") -> Fragment:
    """Vertex gadget with ``paths`` pendant P4s, attached to ``host`` at ``rank``."""
    if paths < 1 or rank < 1:
        raise GadgetError("vertex gadget needs at least one path and a positive rank")
    loc = {x: f"{prefix}{x}" for x in ("w", "w1", "w2", "c")}
    loc["host"] = host
    for q in range(1, paths + 1):
        for s in range(1, 5):
            loc[f"p{q}.{s}"] = f"{prefix}p{q}/{s}"
    n = loc
    ranks: Ranks = {}
    _link(ranks, host, n["w"], rank, 1)
    _link(ranks, n["w"], n["c"], 1, 2)
    _link(ranks, n["w"], n["w1"], 3, 1)
    _link(ranks, n["w"], n["w2"], 2, 2)
    _link(ranks, n["w1"], n["w2"], 2, 1)
    for q in range(1, paths + 1):
        p = [n[f"p{q}.{s}"] for s in range(1, 5)]
        _link(ranks, n["c"], p[1], 1, 2)
        _link(ranks, p[1], p[0], 3, 1)
        _link(ranks, p[1], p[2], 1, 1)
        _link(ranks, p[2], p[3], 1, 1)
    dec = _star(prefix, [n["w"], n["w1"], n["w2"], n["c"]],
                [[n[f"p{q}.{s}"] for s in range(1, 5)] for q in range(1, paths + 1)])
    return Fragment(ranks, (host,), (edge_key(host, n["w"]),), loc, dec, min_size=paths + 2)


def vertex_gadget_matching(frag: Fragment, selected: bool) -> list[Edge]:
    """Case (i) (``selected`` False, size J+2) or case (ii) (size 2J+2)."""
    n = frag.names
    paths = sum(1 for k in n if k.endswith(".1"))
    out = [edge_key(n["w1"], n["w2"])]
    if not selected:
        out.append(edge_key(n["w"], n["c"]))
        out += [edge_key(n[f"p{q}.2"], n[f"p{q}.3"]) for q in range(1, paths + 1)]
        return out
    out.append(edge_key(n["host"], n["w"]))
    out.append(edge_key(n["c"], n["p1.2"]))
    out.append(edge_key(n["p1.3"], n["p1.4"]))
    for q in range(2, paths + 1):
        out.append(edge_key(n[f"p{q}.1"], n[f"p{q}.2"]))
        out.append(edge_key(n[f"p{q}.3"], n[f"p{q}.4"]))
    return out


def gen_edge_gadget_tcw(j1: int, k1: int, j2: int, k2: int, left: str = "v1", right: str = "v2",
                        prefix: str = "eg/") -> Fragment:
    """Edge gadget between ``left`` (ranks it j1, k1 paths) and ``right`` (j2, k2 paths)."""
    if j1 < 1 or j2 < 1 or k1 < 0 or k2 < 0:
        raise GadgetError("edge gadget needs positive ranks and non-negative path counts")
    loc: dict[str, str] = {"left": left, "right": right}
    ranks: Ranks = {}
    centre = []
    leaves = []
    for side, host, rank, paths in ((1, left, j1, k1), (2, right, j2, k2)):
        for x in ("w", "wp", "wpp", "x", "y"):
            loc[f"{x}.{side}"] = f"{prefix}{side}/{x}"
            centre.append(loc[f"{x}.{side}"])
        w, wp, wpp, x, y = (loc[f"{s}.{side}"] for s in ("w", "wp", "wpp", "x", "y"))
        _link(ranks, host, w, rank, 1)
        _link(ranks, w, x, 1, 3)
        _link(ranks, w, wp, 2, 2)
        _link(ranks, w, wpp, 3, 1)
        _link(ranks, wp, wpp, 1, 2)
        _link(ranks, x, y, 1, 1)
        for q in range(1, paths + 1):
            p = []
            for s in range(1, 5):
                loc[f"p{q}.{s}.{side}"] = f"{prefix}{side}/p{q}/{s}"
                p.append(loc[f"p{q}.{s}.{side}"])
            leaves.append(p)
            _link(ranks, x, p[1], 2, 2)
            _link(ranks, p[1], p[0], 3, 1)
            _link(ranks, p[1], p[2], 1, 1)
            _link(ranks, p[2], p[3], 1, 1)
    _link(ranks, loc["y.1"], loc["y.2"], 1, 1)
    dec = _star(prefix, centre, leaves)
    return Fragment(ranks, (left, right), (edge_key(left, loc["w.1"]), edge_key(loc["w.2"], right)),
                    loc, dec, min_size=5 + k1 + k2)


def edge_gadget_matching(frag: Fragment, selected: bool) -> list[Edge]:
    """M1 (both boundary edges, size 6+2k1+2k2) if ``selected``, else M3 (size 5+k1+k2)."""
    n = frag.names
    out = []
    for side, host in ((1, n["left"]), (2, n["right"])):
        paths = sum(1 for k in n if k.startswith("p") and k.endswith(f".1.{side}"))
        out.append(edge_key(n[f"wp.{side}"], n[f"wpp.{side}"]))
        if selected:
            out.append(edge_key(host, n[f"w.{side}"]))
            out.append(edge_key(n[f"x.{side}"], n[f"y.{side}"]))
            for q in range(1, paths + 1):
                out.append(edge_key(n[f"p{q}.1.{side}"], n[f"p{q}.2.{side}"]))
                out.append(edge_key(n[f"p{q}.3.{side}"], n[f"p{q}.4.{side}"]))
        else:
            out.append(edge_key(n[f"w.{side}"], n[f"x.{side}"]))
            for q in range(1, paths + 1):
                out.append(edge_key(n[f"p{q}.2.{side}"], n[f"p{q}.3.{side}"]))
    if not selected:
        out.append(edge_key(n["y.1"], n["y.2"]))
    return out


# -- host graphs --------------------------------------------------------------

def check_host_graph(G: nx.Graph, k: int) -> tuple[int, list[tuple[int, int]]]:
    """Validate a clique-instance host: vertices exactly 1..n, simple, k >= 2."""
    if k < 2:
        raise GadgetError("k must be at least 2")
    n = G.number_of_nodes()
    if set(G.nodes()) != set(range(1, n + 1)):
        raise GadgetError("host vertices must be labelled 1..n")
    if any(u == v for u, v in G.edges()):
        raise GadgetError("host graph has a self-loop")
    return n, sorted(tuple(sorted(e)) for e in G.edges())


def parse_host_graph(text: str) -> nx.Graph:
    """``n N`` header (optional) and ``u v`` edge lines; ``#`` starts a comment."""
    G = nx.Graph()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = raw.split("#", 1)[0].split()
        if not toks:
            continue
        try:
            if toks[0] == "n" and len(toks) == 2:
                G.add_nodes_from(range(1, int(toks[1]) + 1))
            elif len(toks) == 2:
                G.add_edge(int(toks[0]), int(toks[1]))
            else:
                raise ValueError
        except ValueError:
            raise GadgetError(f"line {lineno}: expected 'n N' or 'u v'") from None
    return G


def check_clique(G: nx.Graph, clique: Sequence[int], k: int) -> list[int]:
    clique = list(clique)
    if len(clique) != k or len(set(clique)) != k:
        raise GadgetError(f"a witness clique needs {k} distinct vertices")
    for a in range(k):
        for b in range(a + 1, k):
            if not G.has_edge(clique[a], clique[b]):
                raise GadgetError(f"{clique[a]} and {clique[b]} are not adjacent: not a clique")
    return clique


def _strictify(instance: Instance, first: set[str]) -> Instance:
    """Break every tie except a whole-list tie of size two; members of ``first`` lead their tie."""
    selection = {}
    for a in instance.agents:
        groups = instance.prefs[a]
        if len(groups) == 1 and len(groups[0]) == 2:
            continue
        chosen = {i: sorted(g, key=lambda w: (w not in first, w))
                  for i, g in enumerate(groups, start=1) if len(g) > 1}
        if chosen:
            selection[a] = chosen
    return break_ties(instance, selection)


# -- bounded treedepth / fvs reduction ----------------------------------------

def gen_vertex_selection_gadget(n: int, prefix: str = "vs/") -> Fragment:
    """Paths c - s^v - sbar^v - cbar for v in 1..n; c ranks s^v at v, cbar ranks sbar^v at n+1-v."""
    if n < 1:
        raise GadgetError("vertex selection needs n >= 1")
    loc = {"c": f"{prefix}c", "cbar": f"{prefix}cbar"}
    ranks: Ranks = {loc["c"]: {}, loc["cbar"]: {}}
    for v in range(1, n + 1):
        s, sb = f"{prefix}s{v}", f"{prefix}sbar{v}"
        loc[f"s{v}"], loc[f"sbar{v}"] = s, sb
        _link(ranks, loc["c"], s, v, 1)
        _link(ranks, s, sb, 1, 1)
        _link(ranks, sb, loc["cbar"], 1, n + 1 - v)
    return Fragment(ranks, (), (), loc)


def vertex_selection_matching(frag: Fragment, chosen: int) -> list[Edge]:
    """c and cbar take the path of ``chosen``; every other path is matched internally."""
    n = frag.names
    paths = sum(1 for k in n if k.startswith("sbar"))
    out = [edge_key(n["c"], n[f"s{chosen}"]), edge_key(n["cbar"], n[f"sbar{chosen}"])]
    out += [edge_key(n[f"s{v}"], n[f"sbar{v}"]) for v in range(1, paths + 1) if v != chosen]
    return out


@dataclass
class TdReduction:
    G: nx.Graph
    k: int
    n: int
    m: int
    instance: Instance
    ranks: Ranks
    target: int
    fvs: frozenset[str]
    elimination: dict[str, str | None]
    selection: dict[tuple[int, str], str] = field(default_factory=dict)
    consistency: dict[tuple[int, int, str], str] = field(default_factory=dict)
    edge_gadgets: dict[tuple[int, int, int, int], dict[str, str]] = field(default_factory=dict)
    strict_ties: bool = False

    @property
    def expected_agents(self) -> int:
        k, n, m = self.k, self.n, self.m
        return 2 * k * (n + 1) + 3 * k * (k - 1) + 16 * k * (k - 1) * m


def td_target(n: int, m: int, k: int) -> int:
    return k * (n + 1) + 8 * m * k * (k - 1) + math.comb(k, 2)


def gen_td_reduction(G: nx.Graph, k: int, strict_ties: bool = False) -> TdReduction:
    """Clique on G with k colours -> maximum stable matching of size >= target."""
    n, edges = check_host_graph(G, k)
    m = len(edges)
    ranks: Ranks = {}
    sel: dict[tuple[int, str], str] = {}
    for i in range(1, k + 1):
        frag = gen_vertex_selection_gadget(n, f"vs/{i}/")
        _merge(ranks, frag.ranks)
        sel.update({(i, local): name for local, name in frag.names.items()})
    cons: dict[tuple[int, int, str], str] = {}
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            if i == j:
                continue
            c, c1, c2 = (f"cons/{i}.{j}/{x}" for x in ("c", "c1", "c2"))
            cons[(i, j, "c")], cons[(i, j, "c1")], cons[(i, j, "c2")] = c, c1, c2
            _link(ranks, c, c1, 2, 2)
            _link(ranks, c, c2, 3, 1)
            _link(ranks, c1, c2, 1, 2)
    gadgets: dict[tuple[int, int, int, int], dict[str, str]] = {}
    arcs = sorted([(u, v) for u, v in edges] + [(v, u) for u, v in edges])
    for a in range(1, k + 1):
        for b in range(a + 1, k + 1):
            for v, w in arcs:
                pre = f"eg/{a}.{b}/{v}.{w}/"
                loc = {}
                for side in (a, b):
                    for t in range(1, 5):
                        loc[f"e{t}.{side}"] = f"{pre}{side}/e{t}"
                        loc[f"p{t}.{side}"] = f"{pre}{side}/p{t}"
                gadgets[(a, b, v, w)] = loc
                for side, other, x in ((a, b, v), (b, a, w)):
                    e = [loc[f"e{t}.{side}"] for t in range(1, 5)]
                    p = [loc[f"p{t}.{side}"] for t in range(1, 5)]
                    _link(ranks, e[0], e[1], 1, 1)
                    _link(ranks, e[1], e[2], 1, 3)
                    _link(ranks, e[2], e[3], 1, 1)
                    _link(ranks, e[2], p[2], 2, 2)
                    _link(ranks, p[0], p[1], 1, 1)
                    _link(ranks, p[1], p[2], 1, 1)
                    _link(ranks, p[2], p[3], 3, 1)
                    _link(ranks, e[0], sel[(side, "c")], 2, x)
                    _link(ranks, e[0], sel[(side, "cbar")], 3, n + 1 - x)
                    _link(ranks, e[0], cons[(side, other, "c")], 4, 1)
                _link(ranks, loc[f"e4.{a}"], loc[f"e4.{b}"], 1, 1)
    agents = sorted(ranks)
    instance = Instance.from_ranks(ranks, agents)
    if strict_ties:
        first = {sel[key] for key in sel if key[1].startswith("s")}
        instance = _strictify(instance, first)
    fvs = frozenset([sel[(i, x)] for i in range(1, k + 1) for x in ("c", "cbar")]
                    + [cons[key] for key in cons if key[2] == "c"])
    return TdReduction(G, k, n, m, instance, ranks, td_target(n, m, k), fvs,
                       _td_elimination(k, n, sel, cons, gadgets), sel, cons, gadgets, strict_ties)


def _td_elimination(k, n, sel, cons, gadgets) -> dict[str, str | None]:
    parent: dict[str, str | None] = {}
    prev = None
    for i in range(1, k + 1):
        for x in ("c", "cbar"):
            parent[sel[(i, x)]] = prev
            prev = sel[(i, x)]
    top = prev
    for i in range(1, k + 1):
        for v in range(1, n + 1):
            parent[sel[(i, f"s{v}")]] = top
            parent[sel[(i, f"sbar{v}")]] = sel[(i, f"s{v}")]
    for a in range(1, k + 1):
        for b in range(a + 1, k + 1):
            cab, cba = cons[(a, b, "c")], cons[(b, a, "c")]
            parent[cab] = top
            parent[cba] = cab
            for i, j in ((a, b), (b, a)):
                parent[cons[(i, j, "c1")]] = cba
                parent[cons[(i, j, "c2")]] = cons[(i, j, "c1")]
    for (a, b, _, _), loc in gadgets.items():
        root = loc[f"e4.{a}"]
        parent[root] = cons[(b, a, "c")]
        for side in (a, b):
            p3 = loc[f"p3.{side}"]
            parent[p3] = root
            for x in ("p2", "e2", "p4"):
                parent[loc[f"{x}.{side}"]] = p3
            parent[loc[f"p1.{side}"]] = loc[f"p2.{side}"]
            parent[loc[f"e3.{side}"]] = loc[f"e2.{side}"]
            parent[loc[f"e1.{side}"]] = loc[f"e2.{side}"]
        parent[loc[f"e4.{b}"]] = loc[f"e3.{b}"]
    return parent


def clique_witness_matching(red: TdReduction, clique: Sequence[int]) -> Matching:
    """Stable matching of size exactly the target built from a k-clique."""
    x = [None] + check_clique(red.G, clique, red.k)
    k, n = red.k, red.n
    sel, cons = red.selection, red.consistency
    edges: list[Edge] = []
    for i in range(1, k + 1):
        edges.append((sel[(i, "c")], sel[(i, f"s{x[i]}")]))
        edges.append((sel[(i, "cbar")], sel[(i, f"sbar{x[i]}")]))
        edges += [(sel[(i, f"s{v}")], sel[(i, f"sbar{v}")]) for v in range(1, n + 1) if v != x[i]]
    for (a, b, v, w), loc in red.edge_gadgets.items():
        if (v, w) == (x[a], x[b]):
            for i, j in ((a, b), (b, a)):
                edges.append((cons[(i, j, "c1")], cons[(i, j, "c2")]))
                edges.append((cons[(i, j, "c")], loc[f"e1.{i}"]))
                edges.append((loc[f"e2.{i}"], loc[f"e3.{i}"]))
                edges.append((loc[f"p2.{i}"], loc[f"p3.{i}"]))
            edges.append((loc[f"e4.{a}"], loc[f"e4.{b}"]))
        else:
            for side in (a, b):
                for s, t in (("e1", "e2"), ("e3", "e4"), ("p1", "p2"), ("p3", "p4")):
                    edges.append((loc[f"{s}.{side}"], loc[f"{t}.{side}"]))
    M = Matching(edges)
    if len(M) != red.target or not is_stable(red.instance, M):
        raise AssertionError("clique witness is not a stable matching of the target size")
    return M


# -- instance transformations -------------------------------------------------

def perfectize(instance: Instance, k: int) -> Instance:
    """Add k agents accepting everyone so that a size-(n-k)/2 stable matching becomes perfect."""
    if k < 0:
        raise GadgetError("k must be non-negative")
    if k == 0:
        return instance
    taken = set(instance.agents)
    pads = [_fresh(f"perf/x{i}", taken) for i in range(1, k + 1)]
    ranks: Ranks = {a: dict(instance.ranks_of(a)) for a in instance.agents}
    for i, x in enumerate(pads, start=1):
        ranks[x] = {}
        for j, v in enumerate(instance.agents, start=1):
            _link(ranks, x, v, j, instance.max_rank(v) + i)
    return Instance.from_ranks(ranks, list(instance.agents) + pads)


def existencefy(instance: Instance) -> Instance:
    """Hang a triangle below every agent: the result has a stable matching iff the input has a perfect one."""
    taken = set(instance.agents)
    ranks: Ranks = {a: dict(instance.ranks_of(a)) for a in instance.agents}
    agents = list(instance.agents)
    for v in instance.agents:
        v1, v2 = _fresh(f"ex/{v}/1", taken), _fresh(f"ex/{v}/2", taken)
        agents += [v1, v2]
        alpha = instance.max_rank(v)
        _link(ranks, v, v1, alpha + 1, 2)
        _link(ranks, v, v2, alpha + 2, 1)
        _link(ranks, v1, v2, 1, 2)
    return Instance.from_ranks(ranks, agents)


def break_ties_first(instance: Instance) -> Instance:
    """Break every tie by agent-id order."""
    return break_ties(instance, {a: {i: sorted(g) for i, g in enumerate(instance.prefs[a], start=1) if len(g) > 1}
                                 for a in instance.agents})


# -- bounded tree-cut width reduction -----------------------------------------

@dataclass
class TcwReduction:
    G: nx.Graph
    k: int
    n: int
    m: int
    C: int
    instance: Instance
    ranks: Ranks
    kappa: int
    target: int
    decomposition: TreeCutDecomposition
    hubs: dict[tuple[int, ...], str]
    vertex_gadgets: dict[tuple[int, int], Fragment]
    parallel_gadgets: dict[tuple[int, int, int], Fragment]
    edge_gadgets: dict[tuple[int, int, int, int], Fragment]

    @property
    def kappa_closed_form(self) -> int:
        """Closed form of the minimum-size total, with k(k-1)(n-1) parallel gadgets."""
        k, n, C = self.k, self.n, self.C
        arcs = [(u, v) for u, v in self.G.edges()] + [(v, u) for u, v in self.G.edges()]
        edge_part = math.comb(k, 2) * sum(5 + 2 * n - v - w for v, w in arcs)
        return k * (n * (C + 2) + (k - 1) * n * (n + 1) // 2) + 3 * k * (k - 1) * (n - 1) + edge_part


def tcw_padding(n: int, m: int, k: int) -> int:
    return (14 + 6 * n) * m * k * (k - 1) + 8 * k * (k - 1) * (n - 1)


def gen_tcw_reduction(G: nx.Graph, k: int) -> TcwReduction:
    """Clique on G -> maximum stable matching on a bounded tree-cut width instance."""
    n, edges = check_host_graph(G, k)
    m = len(edges)
    C = tcw_padding(n, m, k)
    hubs: dict[tuple[int, ...], str] = {}
    for i in range(1, k + 1):
        hubs[(i,)] = f"c/{i}"
        for j in range(1, k + 1):
            if i != j:
                hubs[(i, j)] = f"c/{i}.{j}"
    ranks: Ranks = {h: {} for h in hubs.values()}
    vg: dict[tuple[int, int], Fragment] = {}
    pg: dict[tuple[int, int, int], Fragment] = {}
    eg: dict[tuple[int, int, int, int], Fragment] = {}
    for i in range(1, k + 1):
        for j in range(1, n + 1):
            vg[(i, j)] = gen_vertex_gadget(C + j * (k - 1), 2 * j - 1, hubs[(i,)], f"vg/{i}/{j}/")
        for j in range(1, k + 1):
            if i == j:
                continue
            for l in range(1, n):
                pg[(i, j, l)] = gen_parallel_edge_gadget(hubs[(i,)], hubs[(i, j)], 2 * l, 2 * (n - l),
                                                         f"pe/{i}.{j}/{l}/")
    arcs = sorted([(u, v) for u, v in edges] + [(v, u) for u, v in edges])
    for a in range(1, k + 1):
        for b in range(a + 1, k + 1):
            for v, w in arcs:
                eg[(a, b, v, w)] = gen_edge_gadget_tcw(2 * (n - v) + 1, n - v, 2 * (n - w) + 1, n - w,
                                                       hubs[(a, b)], hubs[(b, a)], f"eg/{a}.{b}/{v}.{w}/")
    frags = [*vg.values(), *pg.values(), *eg.values()]
    root = "root"
    parent: dict[str, str | None] = {root: None}
    bags: dict[str, set] = {root: set(hubs.values())}
    for f in frags:
        _merge(ranks, f.ranks)
        d = f.decomposition
        for t in d.bags:
            parent[t] = root if t == d.root else d.parent[t]
            bags[t] = set(d.bags[t])
    instance = Instance.from_ranks(ranks, sorted(ranks))
    kappa = sum(f.min_size for f in frags)
    target = kappa + k * (k - 1) * n + k * (k - 1) // 2 + k * C
    return TcwReduction(G, k, n, m, C, instance, ranks, kappa, target, make_tcd(root, parent, bags),
                        hubs, vg, pg, eg)


def tcw_clique_witness(red: TcwReduction, clique: Sequence[int]) -> Matching:
    """Stable matching of size exactly the target built from a k-clique."""
    x = [None] + check_clique(red.G, clique, red.k)
    edges: list[Edge] = []
    for (i, j), f in red.vertex_gadgets.items():
        edges += vertex_gadget_matching(f, j == x[i])
    for (a, b, v, w), f in red.edge_gadgets.items():
        edges += edge_gadget_matching(f, (v, w) == (x[a], x[b]))
    for (i, _, l), f in red.parallel_gadgets.items():
        edges += parallel_option(f, "A" if l <= x[i] - 1 else "B")
    M = Matching(edges)
    if len(M) != red.target or not is_stable(red.instance, M):
        raise AssertionError("clique witness is not a stable matching of the target size")
    return M


def manifest_text(entries: Mapping[str, object]) -> str:
    return "".join(f"{key}: {value}\n" for key, value in entries.items())
