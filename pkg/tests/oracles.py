"""Brute-force reference computations used only by the tests.

Nothing here imports the package; every oracle works from the raw
definitions (distances, subsets, intervals, cylinders) so that agreement
with the library is meaningful.
"""
from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

# ---------------------------------------------------------------------------
# Raw geometry
# ---------------------------------------------------------------------------


def unit_dist(a: Fraction, b: Fraction) -> Fraction:
    return abs(Fraction(a) - Fraction(b))


def cantor_word(i: int, length: int) -> str:
    """Little-endian bits of ``i``, zero padded."""
    return "".join(str((i >> k) & 1) for k in range(length))


def cantor_dist(i: int, j: int) -> Fraction:
    if i == j:
        return Fraction(0)
    k = 0
    while ((i >> k) & 1) == ((j >> k) & 1):
        k += 1
    return Fraction(1, 2**k)


def _subsets(n: int):
    for r in range(n + 1):
        yield from combinations(range(n), r)


# ---------------------------------------------------------------------------
# Prokhorov distance: subset scan over a candidate grid
# ---------------------------------------------------------------------------


def _prokhorov_holds(xs, ws, ys, vs, dist, eps: Fraction) -> bool:
    """``mu(A) <= nu(A^eps) + eps`` for every A, in both directions (A^eps strict)."""
    for (ps, pw, qs, qw) in ((xs, ws, ys, vs), (ys, vs, xs, ws)):
        for A in _subsets(len(ps)):
            mass = sum((pw[a] for a in A), Fraction(0))
            near = [j for j in range(len(qs)) if any(dist(ps[a], qs[j]) < eps for a in A)]
            if mass > sum((qw[j] for j in near), Fraction(0)) + eps:
                return False
    return True


def prokhorov_oracle(xs, ws, ys, vs, dist) -> Fraction:
    """Feasibility in eps is monotone and constant between consecutive
    candidates (pairwise distances and subset-mass differences), so the
    distance is the least candidate whose right neighbourhood is feasible."""
    cands = {Fraction(0), Fraction(1)}
    for x in xs:
        for y in ys:
            cands.add(Fraction(dist(x, y)))
    ma = {sum((ws[a] for a in A), Fraction(0)) for A in _subsets(len(xs))}
    mb = {sum((vs[b] for b in B), Fraction(0)) for B in _subsets(len(ys))}
    for a in ma:
        for b in mb:
            if 0 <= a - b <= 1:
                cands.add(a - b)
            if 0 <= b - a <= 1:
                cands.add(b - a)
    ordered = sorted(cands)

    def feasible_after(k: int) -> bool:
        nxt = ordered[k + 1] if k + 1 < len(ordered) else ordered[k] + 1
        return _prokhorov_holds(xs, ws, ys, vs, dist, (ordered[k] + nxt) / 2)

    # feasibility is monotone in eps, so bisect for the first feasible gap
    lo, hi = 0, len(ordered) - 1
    assert feasible_after(hi), "eps >= 1 is always feasible"
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible_after(mid):
            hi = mid
        else:
            lo = mid + 1
    return ordered[lo]


# ---------------------------------------------------------------------------
# Strassen coupling check with Edmonds-Karp on Fractions
# ---------------------------------------------------------------------------


def _edmonds_karp(cap: dict, s, t) -> Fraction:
    flow = Fraction(0)
    residual = {u: dict(vs) for u, vs in cap.items()}
    for u in list(residual):
        for v in list(residual[u]):
            residual.setdefault(v, {}).setdefault(u, Fraction(0))
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v, c in residual[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            return flow
        path = []
        v = t
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(residual[u][v] for u, v in path)
        for u, v in path:
            residual[u][v] -= push
            residual[v][u] += push
        flow += push


def strassen_less_than(xs, ws, ys, vs, dist, eps: Fraction) -> bool:
    """``rho < eps`` iff some coupling puts mass ``> 1 - eps`` on ``d < eps``."""
    cap: dict = {"s": {}, "t": {}}
    for i, w in enumerate(ws):
        cap["s"][("x", i)] = w
        cap[("x", i)] = {}
    for j, v in enumerate(vs):
        cap[("y", j)] = {"t": v}
    big = Fraction(2)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            if dist(x, y) < eps:
                cap[("x", i)][("y", j)] = big
    return _edmonds_karp(cap, "s", "t") > 1 - eps


# ---------------------------------------------------------------------------
# Wasserstein distance: exhaustive search over transport-plan vertices
# ---------------------------------------------------------------------------


def wasserstein_oracle(ws, vs, cost) -> Fraction:
    """Every vertex of the transportation polytope has a cell carrying
    ``min(supply, demand)`` of a row and column that one of them exhausts, so
    branching on that cell at each step reaches every vertex.  Masses and costs
    are scaled to integers first; the search itself is exact."""
    m, n = len(ws), len(vs)
    ws = [Fraction(w) for w in ws]
    vs = [Fraction(v) for v in vs]
    mass_den = math.lcm(*(x.denominator for x in ws + vs))
    cost_den = math.lcm(*(Fraction(c).denominator for row in cost for c in row))
    icost = [[int(Fraction(c) * cost_den) for c in row] for row in cost]

    @lru_cache(maxsize=None)
    def best(a: tuple, b: tuple) -> int:
        out = None
        for i in range(m):
            if a[i] == 0:
                continue
            for j in range(n):
                if b[j] == 0:
                    continue
                t = min(a[i], b[j])
                a2 = a[:i] + (a[i] - t,) + a[i + 1 :]
                b2 = b[:j] + (b[j] - t,) + b[j + 1 :]
                val = t * icost[i][j] + best(a2, b2)
                if out is None or val < out:
                    out = val
        return 0 if out is None else out

    total = best(tuple(int(w * mass_den) for w in ws), tuple(int(v * mass_den) for v in vs))
    return Fraction(total, mass_den * cost_den)


# ---------------------------------------------------------------------------
# Measures of simple sets
# ---------------------------------------------------------------------------


def union_length(intervals) -> Fraction:
    """Length of a union of open intervals clipped to [0, 1]."""
    pieces = sorted((max(Fraction(0), lo), min(Fraction(1), hi)) for lo, hi in intervals)
    total = Fraction(0)
    cur_lo = cur_hi = None
    for lo, hi in pieces:
        if hi <= lo:
            continue
        if cur_hi is None or lo > cur_hi:
            if cur_hi is not None:
                total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    if cur_hi is not None:
        total += cur_hi - cur_lo
    return total


def cantor_ball_prefix(center: int, radius: Fraction) -> str:
    """The open ball B(center, radius) is the cylinder of this word."""
    m = 0
    while Fraction(1, 2**m) >= radius:
        m += 1
    return cantor_word(center, m)


def bernoulli_union_weight(p: Fraction, balls) -> Fraction:
    """Bernoulli(p) mass of a union of Cantor balls, by listing all words."""
    words = [cantor_ball_prefix(c, r) for c, r in balls]
    if not words:
        return Fraction(0)
    n = max(len(w) for w in words)
    total = Fraction(0)
    for k in range(2**n):
        word = format(k, f"0{n}b") if n else ""
        if any(word.startswith(w) for w in words):
            ones = word.count("1")
            total += p**ones * (1 - p) ** (n - ones)
    return total


def step_sup_integral(steps) -> Fraction:
    """Lebesgue integral over [0, 1] of ``max_k value_k * 1{|x - c_k| < r_k}``."""
    cuts = {Fraction(0), Fraction(1)}
    for c, r, _v in steps:
        for e in (c - r, c + r):
            if 0 < e < 1:
                cuts.add(e)
    pts = sorted(cuts)
    total = Fraction(0)
    for lo, hi in zip(pts, pts[1:]):
        mid = (lo + hi) / 2
        top = max([v for c, r, v in steps if abs(mid - c) < r], default=Fraction(0))
        total += top * (hi - lo)
    return total


# ---------------------------------------------------------------------------
# Numbers a + b*sqrt(2) for the level-basis cell geometry
# ---------------------------------------------------------------------------


class QSqrt2:
    __slots__ = ("a", "b")

    def __init__(self, a, b=0):
        self.a = Fraction(a)
        self.b = Fraction(b)

    def __add__(self, o):
        o = o if isinstance(o, QSqrt2) else QSqrt2(o)
        return QSqrt2(self.a + o.a, self.b + o.b)

    def __sub__(self, o):
        o = o if isinstance(o, QSqrt2) else QSqrt2(o)
        return QSqrt2(self.a - o.a, self.b - o.b)

    def sign(self) -> int:
        a, b = self.a, self.b
        if a >= 0 and b >= 0:
            return 0 if a == 0 and b == 0 else 1
        if a <= 0 and b <= 0:
            return -1
        # opposite signs: compare a^2 with 2 b^2
        if a > 0:
            return 1 if a * a > 2 * b * b else -1
        return 1 if 2 * b * b > a * a else -1

    def __lt__(self, o):
        return (self - o).sign() < 0

    def __le__(self, o):
        return (self - o).sign() <= 0

    def __eq__(self, o):
        return (self - o).sign() == 0

    def __hash__(self):
        return hash((self.a, self.b))

    def __float__(self):
        return float(self.a) + float(self.b) * 2**0.5

    def __repr__(self):
        return f"{self.a}+{self.b}*sqrt2"


def level_basis_balls(count: int):
    """(center, radius) of the first ``count`` balls of the unit level basis:
    level L holds centers j/2^L, j = 0..2^L, with radius sqrt(2)/2^(L+1)."""
    out = []
    L = 0
    while len(out) < count:
        for j in range(2**L + 1):
            out.append((Fraction(j, 2**L), QSqrt2(0, Fraction(1, 2 ** (L + 1)))))
        L += 1
    return out[:count]


def level_cell_length(word: str) -> QSqrt2:
    """Exact Lebesgue measure of the cell of ``word``: the open ball for a 1,
    the complement of the closed ball for a 0, intersected with [0, 1]."""
    balls = level_basis_balls(len(word))
    cuts = {QSqrt2(0), QSqrt2(1)}
    for c, r in balls:
        for e in (QSqrt2(c) - r, QSqrt2(c) + r):
            if QSqrt2(0) < e < QSqrt2(1):
                cuts.add(e)
    pts = sorted(cuts, key=float)
    total = QSqrt2(0)
    for lo, hi in zip(pts, pts[1:]):
        # a segment between consecutive cuts is uniformly in or out of every ball;
        # probe with a rational point strictly inside it
        probe = _rational_between(lo, hi)
        inside = True
        for ch, (c, r) in zip(word, balls):
            d = QSqrt2(abs(probe - c))
            if ch == "1" and not d < r:
                inside = False
            if ch == "0" and not r < d:
                inside = False
        if inside:
            total = total + (hi - lo)
    return total


def _rational_between(lo: QSqrt2, hi: QSqrt2) -> Fraction:
    k = 1
    while True:
        den = 2**k
        for num in range(den + 1):
            q = QSqrt2(Fraction(num, den))
            if lo < q < hi:
                return Fraction(num, den)
        k += 1


