"""SRTI domain model: instances, acceptability graph, ranks, matchings, stability."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

log = logging.getLogger(__name__)

INFINITY = math.inf

Edge = tuple[str, str]


class InstanceError(ValueError):
    """Malformed instance; ``agent`` names the offending agent."""

    def __init__(self, message: str, agent: str | None = None):
        super().__init__(message)
        self.agent = agent


class MatchingError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def edge_key(u: str, v: str) -> Edge:
    return (u, v) if u < v else (v, u)


_ID_RE = re.compile(r"^[^\s():#]+$")


def valid_id(token: str) -> bool:
    return bool(_ID_RE.match(token))


@dataclass(frozen=True, eq=False)
class Instance:
    """Agents with ordered tie-groups; ``prefs[v][i]`` is v's (i+1)-th group."""

    agents: tuple[str, ...]
    prefs: Mapping[str, tuple[frozenset[str], ...]]
    _ranks: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        agents = tuple(self.agents)
        object.__setattr__(self, "agents", agents)
        seen = set()
        for a in agents:
            if a in seen:
                raise InstanceError(f"agent {a!r} declared twice", a)
            seen.add(a)
        for a in self.prefs:
            if a not in seen:
                raise InstanceError(f"preferences given for unknown agent {a!r}", a)
        prefs = {}
        ranks = {}
        for a in agents:
            groups = tuple(frozenset(g) for g in self.prefs.get(a, ()))
            rk = {}
            for i, g in enumerate(groups, start=1):
                if not g:
                    raise InstanceError(f"agent {a!r} has an empty tie-group", a)
                for w in g:
                    if w == a:
                        raise InstanceError(f"agent {a!r} lists itself", a)
                    if w not in seen:
                        raise InstanceError(f"agent {a!r} lists unknown agent {w!r}", a)
                    if w in rk:
                        raise InstanceError(f"agent {a!r} lists {w!r} twice", a)
                    rk[w] = i
            prefs[a] = groups
            ranks[a] = rk
        object.__setattr__(self, "prefs", prefs)
        object.__setattr__(self, "_ranks", ranks)

    @classmethod
    def from_ranks(cls, ranks: Mapping[str, Mapping[str, int]], agents: Iterable[str] | None = None) -> "Instance":
        """Build from integer ranks; equal values tie, gaps are compressed."""
        if agents is None:
            names = set(ranks)
            for rk in ranks.values():
                names.update(rk)
            agents = sorted(names)
        prefs = {}
        for a, rk in ranks.items():
            by_value: dict[int, set[str]] = {}
            for w, r in rk.items():
                by_value.setdefault(r, set()).add(w)
            prefs[a] = tuple(frozenset(by_value[r]) for r in sorted(by_value))
        return cls(tuple(agents), prefs)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return self.agents == other.agents and self.prefs == other.prefs

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.agents)

    def rank(self, v: str, w: str) -> float:
        """rk_v(w): 1-based tie-group index, INFINITY for v itself or unlisted w."""
        return self._ranks[v].get(w, INFINITY)

    def ranks_of(self, v: str) -> Mapping[str, int]:
        return self._ranks[v]

    def max_rank(self, v: str) -> int:
        return len(self.prefs[v])

    @cached_property
    def graph(self) -> "AcceptabilityGraph":
        return build_graph(self)


@dataclass(frozen=True, eq=False)
class AcceptabilityGraph:
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    index: Mapping[Edge, int]
    adj: Mapping[str, tuple[str, ...]]
    dropped: tuple[tuple[str, str], ...] = ()

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_edge(self, u: str, v: str) -> bool:
        return edge_key(u, v) in self.index

    def incident(self, v: str) -> list[Edge]:
        return [edge_key(v, w) for w in self.adj[v]]


def build_graph(instance: Instance, strict: bool = False) -> AcceptabilityGraph:
    """Mutual-acceptance graph; one-sided listings are dropped (or rejected if strict)."""
    edges = set()
    dropped = []
    for v in instance.agents:
        for w in instance.ranks_of(v):
            if v in instance.ranks_of(w):
                edges.add(edge_key(v, w))
            else:
                dropped.append((v, w))
    dropped.sort()
    if dropped:
        if strict:
            v, w = dropped[0]
            raise InstanceError(f"agent {v!r} lists {w!r} but not vice versa", v)
        log.warning("dropped %d one-sided listing(s), e.g. %s -> %s", len(dropped), *dropped[0])
    ordered = tuple(sorted(edges))
    adj: dict[str, list[str]] = {v: [] for v in instance.agents}
    for u, v in ordered:
        adj[u].append(v)
        adj[v].append(u)
    return AcceptabilityGraph(
        vertices=tuple(sorted(instance.agents)),
        edges=ordered,
        index={e: i for i, e in enumerate(ordered, start=1)},
        adj={v: tuple(sorted(ns)) for v, ns in adj.items()},
        dropped=tuple(dropped),
    )


class Matching:
    """Set of pairwise disjoint edges with partner lookup (M(x) = x if unmatched)."""

    __slots__ = ("edges", "_partner")

    def __init__(self, edges: Iterable[Sequence[str]] = ()):
        keyed = set()
        partner: dict[str, str] = {}
        for e in edges:
            u, v = e
            if u == v:
                raise MatchingError(f"loop {u!r} in matching")
            k = edge_key(u, v)
            if k in keyed:
                continue
            for x in k:
                if x in partner:
                    raise MatchingError(f"agent {x!r} matched twice")
            partner[u] = v
            partner[v] = u
            keyed.add(k)
        self.edges = frozenset(keyed)
        self._partner = partner

    def partner(self, x: str) -> str:
        return self._partner.get(x, x)

    def is_matched(self, x: str) -> bool:
        return x in self._partner

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self) -> Iterator[Edge]:
        return iter(sorted(self.edges))

    def __contains__(self, e) -> bool:
        return edge_key(*e) in self.edges

    def __eq__(self, other):
        if isinstance(other, Matching):
            return self.edges == other.edges
        return NotImplemented

    def __hash__(self):
        return hash(self.edges)

    def __repr__(self):
        return f"Matching({sorted(self.edges)})"

    def union(self, other: Iterable[Sequence[str]]) -> "Matching":
        return Matching(list(self.edges) + [tuple(e) for e in other])


def check_matching(instance: Instance, M: Matching | Iterable) -> Matching:
    if not isinstance(M, Matching):
        M = Matching(M)
    g = instance.graph
    for e in M.edges:
        if e not in g.index:
            raise MatchingError(f"{e[0]} {e[1]} is not an acceptability edge")
    return M


@dataclass(frozen=True)
class BlockingPair:
    edge: Edge
    rank_v_w: float
    rank_v_partner: float
    rank_w_v: float
    rank_w_partner: float

    def __str__(self):
        return f"{self.edge[0]} {self.edge[1]}"


def blocks(instance: Instance, M: Matching, v: str, w: str) -> bool:
    return (instance.rank(v, w) < instance.rank(v, M.partner(v))
            and instance.rank(w, v) < instance.rank(w, M.partner(w)))


def blocking_pairs(instance: Instance, M) -> list[BlockingPair]:
    M = check_matching(instance, M)
    out = []
    for v, w in instance.graph.edges:
        if blocks(instance, M, v, w):
            out.append(BlockingPair(
                (v, w),
                instance.rank(v, w), instance.rank(v, M.partner(v)),
                instance.rank(w, v), instance.rank(w, M.partner(w)),
            ))
    return out


def is_stable(instance: Instance, M) -> bool:
    return not blocking_pairs(instance, M)


def is_perfect(instance: Instance, M) -> bool:
    M = check_matching(instance, M)
    return 2 * len(M) == instance.n and is_stable(instance, M)


def break_ties(instance: Instance, selection: Mapping[str, Mapping[int, Sequence[str]]]) -> Instance:
    """Replace each selected tie (1-based index) by the strict order given by its sequence."""
    prefs = {}
    for a in instance.agents:
        groups = list(instance.prefs[a])
        chosen = selection.get(a, {})
        for i in sorted(chosen, reverse=True):
            if not 1 <= i <= len(groups):
                raise InstanceError(f"agent {a!r} has no tie-group {i}", a)
            order = list(chosen[i])
            if len(order) != len(groups[i - 1]) or set(order) != groups[i - 1]:
                raise InstanceError(f"order for tie {i} of {a!r} is not a bijection onto it", a)
            groups[i - 1:i] = [frozenset([w]) for w in order]
        prefs[a] = tuple(groups)
    return Instance(instance.agents, prefs)


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def parse_instance(text: str) -> Instance:
    agents: list[str] = []
    prefs: dict[str, list[frozenset[str]]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError("expected 'ID : groups'", lineno)
        head, body = line.split(":", 1)
        name = head.strip()
        if not valid_id(name):
            raise ParseError(f"bad agent id {name!r}", lineno)
        if name in prefs:
            raise ParseError(f"agent {name!r} defined twice", lineno)
        groups: list[frozenset[str]] = []
        tie: list[str] | None = None
        for tok in _TOKEN.findall(body):
            if tok == "(":
                if tie is not None:
                    raise ParseError("nested '('", lineno)
                tie = []
            elif tok == ")":
                if not tie:
                    raise ParseError("unmatched or empty ')'", lineno)
                groups.append(frozenset(tie))
                tie = None
            elif not valid_id(tok):
                raise ParseError(f"bad agent id {tok!r}", lineno)
            elif tie is not None:
                tie.append(tok)
            else:
                groups.append(frozenset([tok]))
        if tie is not None:
            raise ParseError("unclosed '('", lineno)
        agents.append(name)
        prefs[name] = groups
    return Instance(tuple(agents), prefs)


def serialize_instance(instance: Instance) -> str:
    lines = []
    for a in instance.agents:
        parts = []
        for g in instance.prefs[a]:
            members = sorted(g)
            parts.append(members[0] if len(members) == 1 else "( " + " ".join(members) + " )")
        lines.append(f"{a} : " + " ".join(parts) if parts else f"{a} :")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_matching(text: str) -> Matching:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 2:
            raise ParseError("expected 'ID ID'", lineno)
        pairs.append((toks[0], toks[1]))
    try:
        return Matching(pairs)
    except MatchingError as exc:
        raise ParseError(str(exc)) from exc


def serialize_matching(M: Matching) -> str:
    return "".join(f"{u} {v}\n" for u, v in sorted(M.edges))


def random_instance(n: int, edge_prob: float, tie_prob: float, seed: int | None = None) -> Instance:
    """Mutual G(n, p) acceptability with random orders; adjacent entries merge into ties with tie_prob."""
    import random

    rng = random.Random(seed)
    agents = [f"a{i}" for i in range(1, n + 1)]
    nbrs: dict[str, list[str]] = {a: [] for a in agents}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                nbrs[agents[i]].append(agents[j])
                nbrs[agents[j]].append(agents[i])
    prefs = {}
    for a in agents:
        order = nbrs[a][:]
        rng.shuffle(order)
        groups: list[list[str]] = []
        for w in order:
            if groups and rng.random() < tie_prob:
                groups[-1].append(w)
            else:
                groups.append([w])
        prefs[a] = tuple(frozenset(grp) for grp in groups)
    return Instance(tuple(agents), prefs)
