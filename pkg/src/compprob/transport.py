"""Exact combinatorial solvers: the transportation simplex over Fractions and an
integer max-flow used for Strassen-type coupling feasibility checks.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Sequence


@dataclass(frozen=True)
class TransportSolution:
    value: Fraction
    flows: tuple[tuple[Fraction, ...], ...]
    row_potentials: tuple[Fraction, ...]
    col_potentials: tuple[Fraction, ...]
    pivots: int


def _northwest_corner(supply: list[Fraction], demand: list[Fraction]) -> dict[tuple[int, int], Fraction]:
    a, b = list(supply), list(demand)
    m, n = len(a), len(b)
    basis: dict[tuple[int, int], Fraction] = {}
    i = j = 0
    while True:
        x = min(a[i], b[j])
        basis[(i, j)] = x
        a[i] -= x
        b[j] -= x
        if i == m - 1 and j == n - 1:
            break
        # on a degenerate tie advance the row only, keeping the basis a spanning tree
        if (a[i] == 0 and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1
    return basis


def _potentials(basis, cost, m: int, n: int) -> tuple[list[Fraction], list[Fraction]]:
    u: list = [None] * m
    v: list = [None] * n
    u[0] = Fraction(0)
    rows: dict[int, list[int]] = {}
    cols: dict[int, list[int]] = {}
    for i, j in basis:
        rows.setdefault(i, []).append(j)
        cols.setdefault(j, []).append(i)
    queue = deque([("r", 0)])
    while queue:
        kind, k = queue.popleft()
        if kind == "r":
            for j in rows.get(k, ()):
                if v[j] is None:
                    v[j] = cost[k][j] - u[k]
                    queue.append(("c", j))
        else:
            for i in cols.get(k, ()):
                if u[i] is None:
                    u[i] = cost[i][k] - v[k]
                    queue.append(("r", i))
    return u, v


def _tree_path(basis, start_row: int, end_col: int) -> list[tuple[int, int]]:
    """Cells on the basis-tree path from row ``start_row`` to column ``end_col``."""
    adj: dict[tuple[str, int], list[tuple[str, int]]] = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("r", start_row), ("c", end_col)
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nb in adj.get(node, ()):
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    cells = []
    node = goal
    while parent[node] is not None:
        prev = parent[node]
        cell = (prev[1], node[1]) if prev[0] == "r" else (node[1], prev[1])
        cells.append(cell)
        node = prev
    cells.reverse()
    return cells


def solve_transport(
    supply: Sequence[Fraction], demand: Sequence[Fraction], cost: Sequence[Sequence[Fraction]]
) -> TransportSolution:
    """Minimise ``sum flow * cost`` over plans with the given marginals, exactly.

    Entering and leaving variables follow Bland's smallest-index rule, so
    degenerate pivots cannot cycle.  The returned potentials are an optimal
    dual solution: ``u_i + v_j <= cost_ij`` with equality on the basis.
    """
    supply = [Fraction(x) for x in supply]
    demand = [Fraction(x) for x in demand]
    cost = [[Fraction(c) for c in row] for row in cost]
    m, n = len(supply), len(demand)
    if m == 0 or n == 0:
        raise ValueError("empty marginal")
    if sum(supply) != sum(demand):
        raise ValueError("marginals must have equal mass")
    if any(x < 0 for x in supply + demand):
        raise ValueError("negative mass")
    basis = _northwest_corner(supply, demand)
    pivots = 0
    while True:
        u, v = _potentials(basis, cost, m, n)
        entering = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in basis and cost[i][j] - u[i] - v[j] < 0:
                    entering = (i, j)
                    break
            if entering is not None:
                break
        if entering is None:
            break
        i0, j0 = entering
        path = _tree_path(basis, i0, j0)
        # the path from row i0 to column j0 alternates minus, plus, ..., minus
        minus = path[0::2]
        plus = path[1::2]
        theta = min(basis[c] for c in minus)
        leaving = min(c for c in minus if basis[c] == theta)
        for c in minus:
            basis[c] -= theta
        for c in plus:
            basis[c] += theta
        del basis[leaving]
        basis[entering] = theta
        pivots += 1
    flows = tuple(tuple(basis.get((i, j), Fraction(0)) for j in range(n)) for i in range(m))
    value = sum((flows[i][j] * cost[i][j] for i in range(m) for j in range(n)), Fraction(0))
    return TransportSolution(value, flows, tuple(u), tuple(v), pivots)


# --------------------------------------------------------------------------
# Max-flow
# --------------------------------------------------------------------------


def _to_integers(values: Sequence[Fraction]) -> tuple[list[int], int]:
    den = 1
    for q in values:
        den = lcm(den, Fraction(q).denominator)
    return [int(Fraction(q) * den) for q in values], den


class _Dinic:
    def __init__(self, n: int):
        self.n = n
        self.head: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_edge(self, u: int, v: int, c: int) -> None:
        self.head[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(c)
        self.head[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)

    def _levels(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for e in self.head[u]:
                if self.cap[e] > 0 and level[self.to[e]] < 0:
                    level[self.to[e]] = level[u] + 1
                    queue.append(self.to[e])
        return level if level[t] >= 0 else None

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            it = [0] * self.n
            while True:
                pushed = self._augment(s, t, level, it)
                if pushed == 0:
                    break
                total += pushed

    def _augment(self, s: int, t: int, level: list[int], it: list[int]) -> int:
        # iterative depth-first search along the level graph
        stack = [s]
        edges: list[int] = []
        while stack:
            u = stack[-1]
            if u == t:
                pushed = min(self.cap[e] for e in edges)
                for e in edges:
                    self.cap[e] -= pushed
                    self.cap[e ^ 1] += pushed
                return pushed
            advanced = False
            while it[u] < len(self.head[u]):
                e = self.head[u][it[u]]
                v = self.to[e]
                if self.cap[e] > 0 and level[v] == level[u] + 1:
                    stack.append(v)
                    edges.append(e)
                    advanced = True
                    break
                it[u] += 1
            if not advanced:
                stack.pop()
                if edges:
                    edges.pop()
                    it[stack[-1]] += 1
        return 0


def bipartite_max_flow(
    supply: Sequence[Fraction], demand: Sequence[Fraction], edges: Sequence[tuple[int, int]]
) -> Fraction:
    """Max flow from sources (capacities ``supply``) to sinks (``demand``)
    through uncapacitated edges ``(source, sink)``."""
    ints, den = _to_integers(list(supply) + list(demand))
    m, n = len(supply), len(demand)
    big = sum(ints) + 1
    g = _Dinic(m + n + 2)
    s, t = m + n, m + n + 1
    for i in range(m):
        if ints[i]:
            g.add_edge(s, i, ints[i])
    for j in range(n):
        if ints[m + j]:
            g.add_edge(m + j, t, ints[m + j])
    for i, j in edges:
        g.add_edge(i, m + j, big)
    return Fraction(g.max_flow(s, t), den)
