"""Exhaustive brute-force solver used as ground truth."""

from __future__ import annotations

import enum
import os
from typing import Iterable, Iterator

from .core_model import AcceptabilityGraph, Edge, Instance, Matching, edge_key

DEFAULT_EDGE_CAP = 24


class SolveMode(enum.Enum):
    EXISTENCE = "existence"
    PERFECT = "perfect"
    MAX = "max"


class TooLargeError(RuntimeError):
    """Instance exceeds the brute-force edge cap."""


def edge_cap_from_env() -> int:
    raw = os.environ.get("SRTI_BRUTE_EDGE_CAP")
    return int(raw) if raw else DEFAULT_EDGE_CAP


def enumerate_matchings(graph: AcceptabilityGraph | Iterable[Edge]) -> Iterator[Matching]:
    """Every matching exactly once: include/exclude over the canonical edge order."""
    edges = list(graph.edges) if isinstance(graph, AcceptabilityGraph) else sorted(edge_key(*e) for e in graph)
    chosen: list[Edge] = []
    used: set[str] = set()

    def rec(i: int) -> Iterator[Matching]:
        if i == len(edges):
            yield Matching(chosen)
            return
        yield from rec(i + 1)
        u, v = edges[i]
        if u not in used and v not in used:
            chosen.append(edges[i])
            used.update((u, v))
            yield from rec(i + 1)
            used.difference_update((u, v))
            chosen.pop()

    return rec(0)


def stable_matchings(instance: Instance, edge_cap: int | None = None,
                     required: Iterable[Edge] = (), forbidden: Iterable[Edge] = (),
                     perfect: bool = False) -> Iterator[Matching]:
    """All stable matchings, optionally restricted to contain/avoid given edges or to be perfect.

    Agents are decided one at a time in agent order (a partner among the
    undecided neighbours, or unmatched). A branch is cut as soon as two decided
    agents form a blocking pair; that pair blocks every completion, so the
    output equals filtering ``enumerate_matchings`` by ``is_stable``.
    """
    g = instance.graph
    cap = edge_cap_from_env() if edge_cap is None else edge_cap
    if g.m > cap:
        raise TooLargeError(f"{g.m} edges exceed the brute-force cap of {cap}; use the fes or tcw solver")
    req = {edge_key(*e) for e in required}
    forb = {edge_key(*e) for e in forbidden}
    if req & forb:
        return
    covered = [x for e in req for x in e]
    if len(set(covered)) != len(covered):
        return
    rank = instance.rank
    mate: dict[str, str] = {}

    def blocked(y: str) -> bool:
        my = rank(y, mate[y])
        for x in g.adj[y]:
            if x in mate and x != mate[y] and rank(y, x) < my and rank(x, y) < rank(x, mate[x]):
                return True
        return False

    for u, v in req:
        mate[u], mate[v] = v, u
    if any(blocked(y) for y in mate):
        return
    agents = instance.agents

    def rec(i: int) -> Iterator[Matching]:
        while i < len(agents) and agents[i] in mate:
            i += 1
        if i == len(agents):
            yield Matching({edge_key(u, v) for u, v in mate.items() if u != v})
            return
        v = agents[i]
        options = [w for w in g.adj[v] if w not in mate and edge_key(v, w) not in forb]
        if not perfect:
            options.append(v)
        for w in options:
            mate[v], mate[w] = w, v
            if not (blocked(v) or blocked(w)):
                yield from rec(i + 1)
            del mate[v]
            mate.pop(w, None)

    yield from rec(0)


def brute_solve(instance: Instance, mode: SolveMode, edge_cap: int | None = None) -> Matching | None:
    best = None
    for M in stable_matchings(instance, edge_cap, perfect=mode is SolveMode.PERFECT):
        if mode is not SolveMode.MAX:
            return M
        if best is None or len(M) > len(best):
            best = M
    return best


def brute_max_size(instance: Instance, edge_cap: int | None = None,
                   required: Iterable[Edge] = (), forbidden: Iterable[Edge] = ()) -> int | None:
    """Largest stable matching size under edge constraints, None if none exists."""
    sizes = [len(M) for M in stable_matchings(instance, edge_cap, required, forbidden)]
    return max(sizes) if sizes else None
