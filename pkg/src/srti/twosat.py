"""2-SAT via implication-graph strongly connected components.

Literals are non-zero ints: ``v`` is variable v true, ``-v`` is it false
(variables are 1-based). A unit clause is stored as ``(l, l)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

BRUTE_VAR_CAP = 20


class FormulaError(ValueError):
    pass


@dataclass
class TwoSatFormula:
    num_vars: int = 0
    clauses: list[tuple[int, int]] = field(default_factory=list)

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add(self, a: int, b: int | None = None) -> None:
        if b is None:
            b = a
        for lit in (a, b):
            if lit == 0 or abs(lit) > self.num_vars:
                raise FormulaError(f"literal {lit} out of range 1..{self.num_vars}")
        self.clauses.append((a, b))

    def evaluate(self, assignment) -> bool:
        def val(lit):
            return assignment[abs(lit)] if lit > 0 else not assignment[abs(lit)]
        return all(val(a) or val(b) for a, b in self.clauses)


def _node(lit: int) -> int:
    return 2 * (abs(lit) - 1) + (lit < 0)


def solve(f: TwoSatFormula) -> dict[int, bool] | None:
    """Satisfying assignment {var: bool} or None when unsatisfiable."""
    n = 2 * f.num_vars
    succ: list[list[int]] = [[] for _ in range(n)]
    for a, b in f.clauses:
        # (a or b) gives not a -> b and not b -> a
        succ[_node(-a)].append(_node(b))
        succ[_node(-b)].append(_node(a))
    comp = _tarjan(succ)
    out = {}
    for v in range(1, f.num_vars + 1):
        pos, neg = comp[_node(v)], comp[_node(-v)]
        if pos == neg:
            return None
        # Tarjan numbers components in reverse topological order
        out[v] = pos < neg
    return out


def _tarjan(succ: list[list[int]]) -> list[int]:
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def brute_assignments(f: TwoSatFormula) -> dict[int, bool] | None:
    """Exhaustive search; first satisfying assignment or None."""
    if f.num_vars > BRUTE_VAR_CAP:
        raise FormulaError(f"{f.num_vars} variables exceed the brute-force cap of {BRUTE_VAR_CAP}")
    for bits in itertools.product((False, True), repeat=f.num_vars):
        assignment = {i + 1: b for i, b in enumerate(bits)}
        if f.evaluate(assignment):
            return assignment
    return None
