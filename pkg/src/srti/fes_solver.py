"""Maximum stable matching by branching over a feedback edge set.

For every matching F' inside the feedback edge set F and every orientation f
of the remaining F-edges, the instance is reduced to a forest with pendant
guard triangles. That reduced instance is solved exactly by a tree DP, and the
best lifted matching is returned.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

from .core_model import INFINITY, Edge, Instance, Matching, edge_key, is_stable
from .graph_params import feedback_edge_set


class ReductionError(ValueError):
    pass


class StructureError(ValueError):
    """The reduced instance is not a forest with pendant triangles."""


DISCARD = None


@dataclass(frozen=True)
class ReducedInstance:
    instance: Instance
    base: Instance
    matched: Matching
    alpha: Mapping[str, float]
    guards: Mapping[str, tuple[str, str]]

    @property
    def guard_count(self) -> int:
        return len(self.guards)


@dataclass
class FesStats:
    branches: int = 0
    discarded: int = 0
    solved: int = 0
    fes_size: int = 0

    @property
    def branch_bound(self) -> int:
        return 4 ** self.fes_size


def _fresh(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "~"
    taken.add(name)
    return name


def build_reduced(instance: Instance, F: Iterable[Edge], F_prime: Iterable[Edge],
                  orientation: Mapping[Edge, str]) -> ReducedInstance | None:
    """Reduced instance for the branch (F', f), or DISCARD (None) if the branch is infeasible."""
    F = {edge_key(*e) for e in F}
    Fp = {edge_key(*e) for e in F_prime}
    if not Fp <= F:
        raise ReductionError("F' is not a subset of F")
    if len({x for e in Fp for x in e}) != 2 * len(Fp):
        raise ReductionError("F' is not a matching")
    matched = Matching(Fp)
    g = instance.graph
    for e in F:
        if e not in g.index:
            raise ReductionError(f"{e} is not an acceptability edge")
    rest = F - Fp
    for e in rest:
        if e not in orientation or orientation[e] not in e:
            raise ReductionError(f"orientation of {e} must name one of its endpoints")
    X = {x for e in Fp for x in e}
    rank = instance.rank

    def prefers(x, w):
        return rank(x, w) < rank(x, matched.partner(x))

    for u, w in g.edges:
        if u in X and w in X and (u, w) not in Fp and prefers(u, w) and prefers(w, u):
            return DISCARD

    alpha: dict[str, float] = {v: INFINITY for v in instance.agents if v not in X}
    for v in alpha:
        for x in g.adj[v]:
            if x in X and prefers(x, v):
                alpha[v] = min(alpha[v], rank(v, x))
    for e in sorted(rest):
        u = orientation[e]
        w = e[0] if e[1] == u else e[1]
        if u in X:
            if prefers(u, w):
                return DISCARD
            continue
        alpha[u] = min(alpha[u], rank(u, w))

    ranks: dict[str, dict[str, int]] = {v: {} for v in alpha}
    for u, w in g.edges:
        if u in X or w in X or (u, w) in F:
            continue
        if rank(u, w) > alpha[u] or rank(w, u) > alpha[w]:
            continue
        ranks[u][w] = rank(u, w)
        ranks[w][u] = rank(w, u)
    taken = set(instance.agents)
    guards = {}
    for v in sorted(alpha):
        a = alpha[v]
        if a == INFINITY:
            continue
        v1, v2 = _fresh(f"{v}~g1", taken), _fresh(f"{v}~g2", taken)
        guards[v] = (v1, v2)
        ranks[v][v1] = a + 2
        ranks[v][v2] = a + 1
        ranks[v1] = {v: 1, v2: 2}
        ranks[v2] = {v: 2, v1: 1}
    agents = [v for v in instance.agents if v not in X]
    for v in sorted(guards):
        agents.extend(guards[v])
    H = Instance.from_ranks(ranks, agents)
    return ReducedInstance(H, instance, matched, alpha, guards)


def solve_reduced_max(H: ReducedInstance) -> Matching | None:
    """Maximum stable matching of a forest with pendant guard triangles, or None."""
    inst = H.instance
    g = inst.graph
    guard_of = {}
    for v, (v1, v2) in H.guards.items():
        guard_of[v1] = guard_of[v2] = v
    adj = {v: [w for w in g.adj[v] if w not in guard_of] for v in inst.agents if v not in guard_of}
    for v1, v in guard_of.items():
        v2 = [w for w in H.guards[v] if w != v1][0]
        if set(g.adj[v1]) != {v, v2}:
            raise StructureError(f"guard {v1!r} is not a pendant triangle vertex")

    rank = inst.rank
    # forest DP; state of v: None (unmatched in forest), or its forest partner
    parent: dict[str, str | None] = {}
    order: list[str] = []
    for r in sorted(adj):
        if r in parent:
            continue
        parent[r] = None
        stack = [r]
        while stack:
            v = stack.pop()
            order.append(v)
            for w in adj[v]:
                if w == parent[v]:
                    continue
                if w in parent:
                    raise StructureError("forest part contains a cycle")
                parent[w] = v
                stack.append(w)
    children = {v: [w for w in adj[v] if parent.get(w) == v] for v in adj}

    def guard_options(v, partner):
        """Best local triangle completion given v's forest partner: (edges, pairs) or None."""
        if v not in H.guards:
            return 0, ()
        v1, v2 = H.guards[v]
        best = None
        for local in ((), ((v1, v2),), ((v, v1),), ((v, v2),)):
            if partner is not None and any(v in e for e in local):
                continue
            mate = {}
            for a, b in local:
                mate[a], mate[b] = b, a
            if partner is not None:
                mate[v] = partner

            def m(x):
                return mate.get(x, x)

            ok = True
            for a, b in ((v, v1), (v, v2), (v1, v2)):
                if mate.get(a) == b:
                    continue
                if rank(a, b) < rank(a, m(a)) and rank(b, a) < rank(b, m(b)):
                    ok = False
                    break
            if ok and (best is None or len(local) > len(best)):
                best = local
        return None if best is None else (len(best), best)

    def states(v):
        out = [None] + list(children[v])
        if parent[v] is not None:
            out.append(parent[v])
        return out

    NEG = None
    table: dict[str, dict] = {}
    choice: dict[tuple[str, object], dict[str, object]] = {}
    for v in reversed(order):
        tv = {}
        for s in states(v):
            g_opt = guard_options(v, s)
            if g_opt is None:
                tv[s] = NEG
                continue
            total = g_opt[0] + (1 if s is not None and s != parent[v] else 0)
            picks = {}
            feasible = True
            for c in children[v]:
                best_val, best_state = None, None
                for sc, val in table[c].items():
                    if val is NEG:
                        continue
                    if (s == c) != (sc == v):
                        continue
                    if s != c:
                        mv = rank(v, s) if s is not None else INFINITY
                        mc = rank(c, sc) if sc is not None else INFINITY
                        if rank(v, c) < mv and rank(c, v) < mc:
                            continue
                    if best_val is None or val > best_val:
                        best_val, best_state = val, sc
                if best_val is None:
                    feasible = False
                    break
                total += best_val
                picks[c] = best_state
            tv[s] = total if feasible else NEG
            choice[(v, s)] = picks
        table[v] = tv

    edges: list[Edge] = []

    for r in order:
        if parent[r] is not None:
            continue
        cands = [(val, s) for s, val in table[r].items() if val is not NEG]
        if not cands:
            return None
        best = max(val for val, _ in cands)
        s = next(s for val, s in cands if val == best)
        stack = [(r, s)]
        while stack:
            v, sv = stack.pop()
            if sv is not None and sv != parent[v]:
                edges.append(edge_key(v, sv))
            edges.extend(guard_options(v, sv)[1])
            stack.extend(choice[(v, sv)].items())
    M = Matching(edges)
    if not is_stable(inst, M):
        raise AssertionError("reduced DP produced an unstable matching")
    return M


def lift(H: ReducedInstance, M_red: Matching) -> Matching:
    guard_vertices = {x for pair in H.guards.values() for x in pair}
    kept = [e for e in M_red.edges if not (set(e) & guard_vertices)]
    return Matching(kept + list(H.matched.edges))


def _branch_family(instance: Instance, F: list[Edge], Fp: tuple[Edge, ...]) -> tuple[Matching | None, FesStats]:
    """Best lifted matching over all orientations of F - F' for one fixed F'."""
    stats = FesStats()
    best: Matching | None = None
    rest = [e for e in F if e not in Fp]
    for ends in itertools.product((0, 1), repeat=len(rest)):
        stats.branches += 1
        orient = {e: e[i] for e, i in zip(rest, ends)}
        H = build_reduced(instance, F, Fp, orient)
        if H is DISCARD:
            stats.discarded += 1
            continue
        M_red = solve_reduced_max(H)
        if M_red is None:
            continue
        stats.solved += 1
        M = lift(H, M_red)
        if len(M) != len(M_red) - H.guard_count + len(Fp):
            raise AssertionError("size accounting of the lifted matching failed")
        if not is_stable(instance, M):
            raise AssertionError("lifted matching is not stable")
        if best is None or len(M) > len(best):
            best = M
    return best, stats


def fes_max(instance: Instance, stats: FesStats | None = None, threads: int = 1) -> Matching | None:
    """Maximum-cardinality stable matching, or None when no stable matching exists.

    With ``threads`` > 1 the F' families run in a process pool; results are
    merged in the sequential order, so the output does not depend on it.
    """
    stats = stats if stats is not None else FesStats()
    F = sorted(feedback_edge_set(instance.graph))
    stats.fes_size = len(F)
    families = [Fp for r in range(len(F) + 1) for Fp in itertools.combinations(F, r)
                if len({x for e in Fp for x in e}) == 2 * len(Fp)]
    if threads > 1 and len(families) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_branch_family, itertools.repeat(instance), itertools.repeat(F), families))
    else:
        results = [_branch_family(instance, F, Fp) for Fp in families]
    best: Matching | None = None
    for M, part in results:
        stats.branches += part.branches
        stats.discarded += part.discarded
        stats.solved += part.solved
        if M is not None and (best is None or len(M) > len(best)):
            best = M
    if stats.branches > stats.branch_bound:
        raise AssertionError("branch count exceeds 2^|F| * 2^|F|")
    return best
