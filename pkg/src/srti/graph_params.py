"""Graph parameters and tree-cut decompositions.

Feedback edge/vertex sets, treedepth, elimination-forest checks, and
tree-cut decomposition validation (adhesion, torso-size, width), the
spanning-forest construction, niceness rewriting and a tiny exact oracle.
"""

from __future__ import annotations

import enum
import itertools
import re
from collections import Counter, deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx

from .core_model import AcceptabilityGraph, Instance, ParseError, edge_key

FVS_CAP = 14
TREEDEPTH_CAP = 10
TCW_TINY_CAP = 6


class CapExceededError(ValueError):
    pass


class DecompositionError(ValueError):
    """A decomposition violates a structural rule; the message names it."""


def as_nx(graph) -> nx.Graph:
    """Accept a networkx graph, an AcceptabilityGraph or an Instance."""
    if isinstance(graph, Instance):
        graph = graph.graph
    if isinstance(graph, AcceptabilityGraph):
        g = nx.Graph()
        g.add_nodes_from(graph.vertices)
        g.add_edges_from(graph.edges)
        return g
    if isinstance(graph, nx.Graph):
        return graph
    raise TypeError(f"unsupported graph type {type(graph).__name__}")


def _sorted_edges(g: nx.Graph) -> list[tuple]:
    return sorted(edge_key(u, v) for u, v in g.edges())


# -- feedback sets and treedepth -------------------------------------------

def spanning_forest(graph, search: str = "bfs") -> nx.Graph:
    """Spanning forest rooted at the smallest vertex of each component, neighbours in sorted order."""
    g = as_nx(graph)
    forest = nx.Graph()
    forest.add_nodes_from(g.nodes())
    seen = set()
    for root in sorted(g.nodes()):
        if root in seen:
            continue
        seen.add(root)
        if search == "bfs":
            queue = deque([root])
            while queue:
                v = queue.popleft()
                for w in sorted(g.neighbors(v)):
                    if w not in seen:
                        seen.add(w)
                        forest.add_edge(v, w)
                        queue.append(w)
        elif search == "dfs":
            stack = [(root, iter(sorted(g.neighbors(root))))]
            while stack:
                v, it = stack[-1]
                w = next(it, None)
                if w is None:
                    stack.pop()
                elif w not in seen:
                    seen.add(w)
                    forest.add_edge(v, w)
                    stack.append((w, iter(sorted(g.neighbors(w)))))
        else:
            raise ValueError(f"unknown search {search!r}")
    return forest


def feedback_edge_set(graph, search: str = "bfs") -> set[tuple]:
    """Edges outside a canonical spanning forest; G minus them is a forest."""
    g = as_nx(graph)
    forest = spanning_forest(g, search)
    return {edge_key(u, v) for u, v in g.edges() if not forest.has_edge(u, v)}


def fvs_exact_small(graph, cap: int = FVS_CAP) -> set:
    """Minimum feedback vertex set by subset enumeration in increasing size."""
    g = as_nx(graph)
    if g.number_of_nodes() > cap:
        raise CapExceededError(f"{g.number_of_nodes()} vertices exceed the fvs cap of {cap}")
    vertices = sorted(g.nodes())
    for size in range(len(vertices) + 1):
        for subset in itertools.combinations(vertices, size):
            rest = g.subgraph(set(vertices) - set(subset))
            if rest.number_of_nodes() == 0 or nx.is_forest(rest):
                return set(subset)
    raise AssertionError("unreachable: removing all vertices leaves a forest")


def treedepth_exact_small(graph, cap: int = TREEDEPTH_CAP) -> int:
    """Exact treedepth from the recursive definition, memoised on vertex subsets."""
    g = as_nx(graph)
    if g.number_of_nodes() > cap:
        raise CapExceededError(f"{g.number_of_nodes()} vertices exceed the treedepth cap of {cap}")
    adj = {v: frozenset(g.neighbors(v)) for v in g.nodes()}

    def components(vs: frozenset) -> list[frozenset]:
        out, seen = [], set()
        for s in vs:
            if s in seen:
                continue
            comp, stack = {s}, [s]
            while stack:
                v = stack.pop()
                for w in adj[v] & vs:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            seen |= comp
            out.append(frozenset(comp))
        return out

    @lru_cache(maxsize=None)
    def td(vs: frozenset) -> int:
        if len(vs) <= 1:
            return len(vs)
        comps = components(vs)
        if len(comps) > 1:
            return max(td(c) for c in comps)
        return 1 + min(td(vs - {v}) for v in vs)

    return td(frozenset(g.nodes()))


def elimination_forest_height(graph, parent: Mapping[Hashable, Hashable | None]) -> int:
    """Height (vertices on the longest root path) of a valid elimination forest.

    Raises DecompositionError if some vertex is missing, the parent links
    cycle, or an edge joins two vertices that are not ancestor and descendant.
    """
    g = as_nx(graph)
    missing = set(g.nodes()) - set(parent)
    if missing:
        raise DecompositionError(f"vertex {sorted(missing)[0]!r} missing from the elimination forest")
    depth: dict = {}

    def resolve(v) -> int:
        path = []
        while v is not None and v not in depth:
            if v in path:
                raise DecompositionError(f"parent links cycle through {v!r}")
            path.append(v)
            v = parent.get(v)
        d = 0 if v is None else depth[v]
        for u in reversed(path):
            d += 1
            depth[u] = d
        return d

    for v in parent:
        resolve(v)

    def is_ancestor(a, b) -> bool:
        while b is not None:
            if b == a:
                return True
            b = parent.get(b)
        return False

    for u, v in g.edges():
        if not (is_ancestor(u, v) or is_ancestor(v, u)):
            raise DecompositionError(f"edge {u!r} {v!r} joins unrelated vertices")
    return max(depth.values(), default=0)


# -- tree-cut decompositions -----------------------------------------------

class ChildKind(enum.Enum):
    LIGHT = "light"
    HEAVY = "heavy"


@dataclass(frozen=True, eq=False)
class TreeCutDecomposition:
    """Rooted tree with a near-partition of the graph's vertices into bags."""

    root: str
    parent: Mapping[str, str | None]
    bags: Mapping[str, frozenset]

    def __post_init__(self):
        object.__setattr__(self, "parent", dict(self.parent))
        object.__setattr__(self, "bags", {t: frozenset(b) for t, b in self.bags.items()})

    @property
    def nodes(self) -> list[str]:
        return list(self.preorder)

    @cached_property
    def children(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {t: [] for t in self.bags}
        for t, p in self.parent.items():
            if p is not None:
                out[p].append(t)
        return {t: tuple(sorted(cs)) for t, cs in out.items()}

    @cached_property
    def preorder(self) -> tuple[str, ...]:
        order, stack = [], [self.root]
        while stack:
            t = stack.pop()
            order.append(t)
            stack.extend(reversed(self.children[t]))
        return tuple(order)

    @cached_property
    def postorder(self) -> tuple[str, ...]:
        return tuple(reversed(self.preorder))

    @cached_property
    def subtree_vertices(self) -> dict[str, frozenset]:
        out: dict[str, frozenset] = {}
        for t in self.postorder:
            acc = set(self.bags[t])
            for c in self.children[t]:
                acc |= out[c]
            out[t] = frozenset(acc)
        return out

    @cached_property
    def depth(self) -> dict[str, int]:
        out = {self.root: 0}
        for t in self.preorder[1:]:
            out[t] = out[self.parent[t]] + 1
        return out

    @cached_property
    def owner(self) -> dict:
        return {v: t for t, b in self.bags.items() for v in b}

    def cut(self, graph, t: str) -> list[tuple]:
        """Edges with exactly one endpoint in Y_t, in canonical order (empty at the root)."""
        if t == self.root:
            return []
        g = as_nx(graph)
        ys = self.subtree_vertices[t]
        return sorted(edge_key(u, w) for u in ys for w in g.neighbors(u) if w not in ys)

    def rehung(self, t: str, new_parent: str) -> "TreeCutDecomposition":
        parent = dict(self.parent)
        parent[t] = new_parent
        return TreeCutDecomposition(self.root, parent, self.bags)


def make_tcd(root: str, parent: Mapping[str, str | None], bags: Mapping[str, Iterable]) -> TreeCutDecomposition:
    return TreeCutDecomposition(root, dict(parent), {t: frozenset(b) for t, b in bags.items()})


@dataclass(frozen=True)
class WidthReport:
    adhesion: Mapping[str, int]
    torso_size: Mapping[str, int]
    width: int

    def __str__(self):
        lines = [f"width {self.width}"]
        for t in self.adhesion:
            lines.append(f"node {t} adhesion {self.adhesion[t]} torso {self.torso_size[t]}")
        return "\n".join(lines)


def check_structure(graph, tcd: TreeCutDecomposition) -> None:
    g = as_nx(graph)
    if tcd.root not in tcd.bags:
        raise DecompositionError(f"root {tcd.root!r} has no bag")
    if set(tcd.parent) != set(tcd.bags):
        raise DecompositionError("parent links and bags name different node sets")
    if tcd.parent[tcd.root] is not None:
        raise DecompositionError("root has a parent")
    for t, p in tcd.parent.items():
        if t != tcd.root and p is None:
            raise DecompositionError(f"node {t!r} is a second root")
        if p is not None and p not in tcd.bags:
            raise DecompositionError(f"node {t!r} hangs under unknown node {p!r}")
    if len(tcd.preorder) != len(tcd.bags):
        raise DecompositionError("tree is not connected or has a cycle")
    seen: dict = {}
    for t in tcd.preorder:
        for v in tcd.bags[t]:
            if v not in g:
                raise DecompositionError(f"bag {t!r} holds {v!r}, which is not a graph vertex")
            if v in seen:
                raise DecompositionError(f"vertex {v!r} lies in bags {seen[v]!r} and {t!r}")
            seen[v] = t
    uncovered = set(g.nodes()) - set(seen)
    if uncovered:
        raise DecompositionError(f"vertex {sorted(uncovered)[0]!r} lies in no bag")


def torso(graph, tcd: TreeCutDecomposition, t: str) -> tuple[Counter, set, set]:
    """Torso multigraph at t as (edge multiset, bag vertices, contracted vertices).

    Contracted parts are named ('part', neighbour-node); internal edges of a
    part vanish under contraction, parallels between parts are kept.
    """
    g = as_nx(graph)
    parts: dict = {}
    ys = tcd.subtree_vertices
    for c in tcd.children[t]:
        for v in ys[c]:
            parts[v] = ("part", c)
    if t != tcd.root:
        up = ("part", tcd.parent[t])
        for v in g.nodes():
            if v not in ys[t]:
                parts[v] = up
    contracted = {("part", c) for c in tcd.children[t]}
    if t != tcd.root:
        contracted.add(("part", tcd.parent[t]))
    edges: Counter = Counter()
    for u, v in g.edges():
        a, b = parts.get(u, u), parts.get(v, v)
        if a == b and a in contracted:
            continue
        edges[_mkey(a, b)] += 1
    return edges, set(tcd.bags[t]), contracted


def _mkey(a, b):
    return (a, b) if repr(a) <= repr(b) else (b, a)


def suppress(edges: Counter, protected: set, candidates: Sequence) -> int:
    """Exhaustively suppress candidate vertices of degree <= 2; return vertices left.

    Loops count twice toward degree. Candidates are tried in the given order.
    """
    edges = Counter(edges)
    alive = set(protected) | set(candidates)
    inc: dict = {v: Counter() for v in alive}
    for (a, b), k in edges.items():
        inc[a][(a, b)] += k
        if a != b:
            inc[b][(a, b)] += k

    def degree(v):
        return sum(k * (2 if a == b else 1) for (a, b), k in inc[v].items())

    def remove_edge(e, k=1):
        a, b = e
        for x in {a, b}:
            inc[x][e] -= k
            if inc[x][e] <= 0:
                del inc[x][e]

    def add_edge(a, b):
        e = _mkey(a, b)
        for x in {a, b}:
            inc[x][e] += 1

    order = list(candidates)
    changed = True
    while changed:
        changed = False
        for v in order:
            if v not in alive or degree(v) > 2:
                continue
            ends = []
            for (a, b), k in list(inc[v].items()):
                if a == b:
                    ends = None
                    break
                ends.extend([b if a == v else a] * k)
            for e, k in list(inc[v].items()):
                remove_edge(e, k)
            if ends is not None and len(ends) == 2:
                add_edge(ends[0], ends[1])
            alive.discard(v)
            del inc[v]
            changed = True
    return len(alive)


def torso_size(graph, tcd: TreeCutDecomposition, t: str, order: Sequence | None = None) -> int:
    edges, bag, contracted = torso(graph, tcd, t)
    cands = sorted(contracted, key=repr) if order is None else list(order)
    return suppress(edges, bag, cands)


def validate_tcd(graph, tcd: TreeCutDecomposition) -> WidthReport:
    g = as_nx(graph)
    check_structure(g, tcd)
    adh, tor = {}, {}
    for t in tcd.preorder:
        adh[t] = len(tcd.cut(g, t))
        tor[t] = torso_size(g, tcd, t)
    width = max(max(adh.values()), max(tor.values()))
    return WidthReport(adh, tor, width)


def child_kinds(graph, tcd: TreeCutDecomposition) -> dict[str, ChildKind]:
    """LIGHT iff adhesion <= 2 and every edge leaving Y_t ends in the parent's bag."""
    g = as_nx(graph)
    out = {}
    for t in tcd.preorder[1:]:
        cut = tcd.cut(g, t)
        ys = tcd.subtree_vertices[t]
        pbag = tcd.bags[tcd.parent[t]]
        light = len(cut) <= 2 and all((w if u in ys else u) in pbag for u, w in cut)
        out[t] = ChildKind.LIGHT if light else ChildKind.HEAVY
    return out


def tcd_from_fes(graph, search: str = "bfs") -> TreeCutDecomposition:
    """Singleton bags along a spanning forest, components hung below an empty root."""
    g = as_nx(graph)
    forest = spanning_forest(g, search)
    names = {v: f"v{i}" for i, v in enumerate(sorted(g.nodes()))}
    parent: dict[str, str | None] = {"root": None}
    bags: dict[str, frozenset] = {"root": frozenset()}
    seen = set()
    for r in sorted(g.nodes()):
        if r in seen:
            continue
        parent[names[r]] = "root"
        for u, w in nx.bfs_edges(forest, r) if search == "bfs" else nx.dfs_edges(forest, r):
            parent[names[w]] = names[u]
        seen |= nx.node_connected_component(forest, r)
    for v, name in names.items():
        bags[name] = frozenset([v])
    return TreeCutDecomposition("root", parent, bags)


def _splice_empty(tcd: TreeCutDecomposition) -> TreeCutDecomposition:
    """Drop empty leaves and empty nodes with a single child."""
    parent, bags, root = dict(tcd.parent), dict(tcd.bags), tcd.root
    changed = True
    while changed:
        changed = False
        kids: dict[str, list[str]] = {t: [] for t in bags}
        for t, p in parent.items():
            if p is not None:
                kids[p].append(t)
        for t in sorted(bags):
            if bags[t] or len(kids[t]) > 1:
                continue
            if not kids[t]:
                if t == root:
                    continue
                del parent[t], bags[t]
            else:
                (c,) = kids[t]
                if t == root:
                    parent[c] = None
                    root = c
                else:
                    parent[c] = parent[t]
                del parent[t], bags[t]
            changed = True
            break
    return TreeCutDecomposition(root, parent, bags)


def _rehang_target(g: nx.Graph, tcd: TreeCutDecomposition, t: str) -> str | None:
    """Deepest node outside T_t whose subtree holds all outside neighbours of Y_t."""
    ys = tcd.subtree_vertices[t]
    outside = {w for u in ys for w in g.neighbors(u) if w not in ys}
    if not outside:
        return None
    p = tcd.parent[t]
    siblings = [c for c in tcd.children[p] if c != t]
    if not any(outside & tcd.subtree_vertices[c] for c in siblings):
        return None
    target = p
    while True:
        nxt = [c for c in tcd.children[target] if c != t and outside <= tcd.subtree_vertices[c]]
        if not nxt:
            return None if target == p else target
        target = nxt[0]


def make_nice(graph, tcd: TreeCutDecomposition) -> tuple[TreeCutDecomposition, dict[str, ChildKind]]:
    """Rewrite towards niceness without increasing width; returns the tree and child labels.

    Thin nodes (adhesion <= 2) whose neighbourhood reaches a sibling subtree
    are re-hung under the deepest node covering that neighbourhood; a move is
    kept only if the validated width does not grow. Empty leaves and empty
    single-child nodes are spliced out.
    """
    g = as_nx(graph)
    width = validate_tcd(g, tcd).width
    cur = _splice_empty(tcd)
    rejected: set[tuple[str, str]] = set()
    changed = True
    while changed:
        changed = False
        for t in cur.preorder[1:]:
            if len(cur.cut(g, t)) > 2:
                continue
            target = _rehang_target(g, cur, t)
            if target is None or (t, target) in rejected:
                continue
            cand = _splice_empty(cur.rehung(t, target))
            if validate_tcd(g, cand).width <= width:
                cur = cand
                changed = True
                break
            rejected.add((t, target))
    return cur, child_kinds(g, cur)


def tcw_exact_tiny(graph, cap: int = TCW_TINY_CAP) -> int:
    """Exact tree-cut width by exhaustive search.

    Ranges over set partitions of V, every labelled tree on the parts (Pruefer
    codes), and the same with one extra empty bag. Width does not depend on
    the root, so the first node is used.
    """
    g = as_nx(graph)
    n = g.number_of_nodes()
    if n > cap:
        raise CapExceededError(f"{n} vertices exceed the exact tree-cut width cap of {cap}")
    if n == 0:
        return 0
    best = n
    for parts in _set_partitions(sorted(g.nodes())):
        for extra in (0, 1):
            bags = [frozenset(p) for p in parts] + [frozenset()] * extra
            k = len(bags)
            for tree_edges in _labelled_trees(k):
                w = _width_bounded(g, bags, tree_edges, best)
                if w is not None and w < best:
                    best = w
    return best


def _width_bounded(g: nx.Graph, bags, tree_edges, bound: int) -> int | None:
    """Width of the decomposition, or None as soon as some node reaches bound."""
    names = [f"b{i}" for i in range(len(bags))]
    adj: dict[int, list[int]] = {i: [] for i in range(len(bags))}
    for a, b in tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = {names[0]: None}
    queue = deque([0])
    seen = {0}
    while queue:
        a = queue.popleft()
        for b in adj[a]:
            if b not in seen:
                seen.add(b)
                parent[names[b]] = names[a]
                queue.append(b)
    tcd = TreeCutDecomposition(names[0], parent, dict(zip(names, bags)))
    worst = 0
    for t in tcd.preorder:
        worst = max(worst, len(tcd.cut(g, t)))
        if worst >= bound:
            return None
    for t in tcd.preorder:
        worst = max(worst, torso_size(g, tcd, t))
        if worst >= bound:
            return None
    return worst


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def _labelled_trees(k: int):
    if k == 1:
        yield []
        return
    if k == 2:
        yield [(0, 1)]
        return
    for code in itertools.product(range(k), repeat=k - 2):
        yield _pruefer_decode(list(code), k)


def _pruefer_decode(code: list[int], k: int) -> list[tuple[int, int]]:
    degree = [1] * k
    for x in code:
        degree[x] += 1
    edges = []
    for x in code:
        leaf = min(i for i in range(k) if degree[i] == 1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = [i for i in range(k) if degree[i] == 1]
    edges.append((u, v))
    return edges


# -- decomposition file format v1 -------------------------------------------

_NODE_RE = re.compile(r"^node\s+(\S+)\s*:(.*)$")


def parse_decomposition(text: str) -> TreeCutDecomposition:
    bags: dict[str, frozenset] = {}
    tree_edges: list[tuple[str, str]] = []
    root = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _NODE_RE.match(line)
        if m:
            name = m.group(1)
            if name in bags:
                raise ParseError(f"node {name!r} defined twice", lineno)
            bags[name] = frozenset(m.group(2).split())
            continue
        toks = line.split()
        if toks[0] == "edge" and len(toks) == 3:
            tree_edges.append((toks[1], toks[2]))
        elif toks[0] == "root" and len(toks) == 2:
            if root is not None:
                raise ParseError("root given twice", lineno)
            root = toks[1]
        else:
            raise ParseError(f"unrecognised line {line!r}", lineno)
    if root is None:
        raise ParseError("missing 'root' line")
    for a, b in tree_edges:
        for x in (a, b):
            if x not in bags:
                raise ParseError(f"edge names unknown node {x!r}")
    if root not in bags:
        raise ParseError(f"root names unknown node {root!r}")
    if len(tree_edges) != len(bags) - 1:
        raise DecompositionError(f"{len(bags)} nodes need {len(bags) - 1} tree edges, got {len(tree_edges)}")
    adj: dict[str, list[str]] = {t: [] for t in bags}
    for a, b in tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    parent: dict[str, str | None] = {root: None}
    queue = deque([root])
    while queue:
        a = queue.popleft()
        for b in sorted(adj[a]):
            if b not in parent:
                parent[b] = a
                queue.append(b)
    if len(parent) != len(bags):
        raise DecompositionError("tree is not connected")
    return TreeCutDecomposition(root, parent, bags)


def serialize_decomposition(tcd: TreeCutDecomposition) -> str:
    lines = [f"root {tcd.root}"]
    for t in tcd.preorder:
        members = " ".join(sorted(str(v) for v in tcd.bags[t]))
        lines.append(f"node {t} : {members}".rstrip())
    for t in tcd.preorder[1:]:
        lines.append(f"edge {tcd.parent[t]} {t}")
    return "\n".join(lines) + "\n"
