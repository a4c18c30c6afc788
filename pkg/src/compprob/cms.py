"""Computable metric spaces, fast Cauchy point descriptors, ideal balls and
r.e. open sets with semidecidable membership.

Ideal points are natural-number indices; each space fixes an injective
numbering (possibly with a decidable domain, see :meth:`MetricSpace.is_valid_index`).
Distances are served by an oracle returning rational enclosures of width at
most ``2**-k``.  All built-in spaces have rational distances, so their oracle
intervals are degenerate and ``space.exact`` is true.
"""
from __future__ import annotations

import bisect
import enum
import math
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .core import (
    RatInterval,
    RationalLike,
    as_rational,
    cantor_pair,
    cantor_unpair,
    pow2,
)
from .errors import FastCauchyViolation, InvalidIndex, IrrationalDistance


@dataclass(frozen=True)
class IdealBall:
    center: int
    radius: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "radius", as_rational(self.radius))
        if self.radius <= 0:
            raise ValueError("ideal balls have positive rational radius")
        if self.center < 0:
            raise InvalidIndex(f"negative ideal index {self.center}")


class Verdict(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    UNKNOWN = "unknown"


# --------------------------------------------------------------------------
# Spaces
# --------------------------------------------------------------------------


class MetricSpace(ABC):
    """A computable metric space given by its distance oracle."""

    #: True when every oracle interval is degenerate (distances are rational).
    exact: bool = True
    diameter_bound: Optional[Fraction] = None

    @abstractmethod
    def is_valid_index(self, i: int) -> bool: ...

    @abstractmethod
    def _distance(self, i: int, j: int, k: int) -> RatInterval: ...

    @abstractmethod
    def to_json(self): ...

    def check_index(self, i: int) -> int:
        if not isinstance(i, int) or isinstance(i, bool) or not self.is_valid_index(i):
            raise InvalidIndex(f"{i!r} is not an ideal point of {self!r}")
        return i

    def distance(self, i: int, j: int, k: int) -> RatInterval:
        """Enclosure of ``d(s_i, s_j)`` with width at most ``2**-k``."""
        self.check_index(i)
        self.check_index(j)
        if i == j:
            return RatInterval.point(0)
        return self._distance(i, j, k)

    def exact_distance(self, i: int, j: int) -> Fraction:
        iv = self.distance(i, j, 0)
        if iv.lo != iv.hi:
            raise IrrationalDistance(f"d(s_{i}, s_{j}) is not served exactly")
        return iv.lo

    def ideal_point_at(self, n: int) -> Optional[int]:
        """n-th entry of the ideal-point enumeration (None off the domain)."""
        return n if self.is_valid_index(n) else None

    def ideal_points(self) -> Iterator[int]:
        n = 0
        while True:
            i = self.ideal_point_at(n)
            if i is not None:
                yield i
            n += 1

    # -- ball geometry; generic versions only use the triangle inequality --

    def ball_contains(self, outer: IdealBall, inner: IdealBall, k: int = 32) -> bool:
        """Certified ``inner ⊆ outer`` (a False answer proves nothing)."""
        d = self.distance(outer.center, inner.center, k)
        return d.hi + inner.radius <= outer.radius

    def balls_disjoint(self, a: IdealBall, b: IdealBall, k: int = 32) -> bool:
        d = self.distance(a.center, b.center, k)
        return d.lo >= a.radius + b.radius

    def intersect_balls(self, a: IdealBall, b: IdealBall) -> Optional[list[IdealBall]]:
        """Exact ball cover of ``a ∩ b`` when the geometry allows it, else None."""
        if self.ball_contains(a, b):
            return [b]
        if self.ball_contains(b, a):
            return [a]
        if self.balls_disjoint(a, b):
            return []
        return None

    def complement_of_closed_ball(self, center: int, radius: Fraction) -> "REOpenSet":
        """The open set ``{x : d(x, s_center) > radius}``."""
        return _GenericClosedBallComplement(self, center, as_rational(radius))

    def close_pairs(self, sources: Sequence[int], targets: Sequence[int], eps: Fraction) -> list[tuple[int, int]]:
        """Positions ``(a, b)`` with ``d(sources[a], targets[b]) < eps`` (exact distances)."""
        return [
            (a, b)
            for a, i in enumerate(sources)
            for b, j in enumerate(targets)
            if self.exact_distance(i, j) < eps
        ]


def _floor_sqrt_interval(value: Fraction, k: int) -> RatInterval:
    """Enclosure of sqrt(value) of width 2**-k via integer square roots."""
    n, m = value.numerator, value.denominator
    scaled = n * m * 4**k
    r = math.isqrt(scaled)
    den = m * 2**k
    if r * r == scaled:
        return RatInterval.point(Fraction(r, den))
    return RatInterval(Fraction(r, den), Fraction(r + 1, den))


class UnitInterval(MetricSpace):
    """[0, 1] with ideal points the rationals p/q, numbered ``pair(p, q-1)``.

    The numbering is injective with a decidable domain (reduced fractions in
    [0, 1]); ``s_0 = 0`` and ``s_1 = 1``.
    """

    exact = True
    diameter_bound = Fraction(1)

    def is_valid_index(self, i: int) -> bool:
        if i < 0:
            return False
        p, qm1 = cantor_unpair(i)
        q = qm1 + 1
        return p <= q and math.gcd(p, q) == 1

    def point(self, i: int) -> Fraction:
        self.check_index(i)
        p, qm1 = cantor_unpair(i)
        return Fraction(p, qm1 + 1)

    def index_of(self, x: RationalLike) -> int:
        x = as_rational(x)
        if not 0 <= x <= 1:
            raise InvalidIndex(f"{x} is not in [0, 1]")
        return cantor_pair(x.numerator, x.denominator - 1)

    def _distance(self, i: int, j: int, k: int) -> RatInterval:
        return RatInterval.point(abs(self.point(i) - self.point(j)))

    def ball_interval(self, ball: IdealBall) -> tuple[Fraction, Fraction]:
        """Open interval (a, b) with ``ball = (a, b) ∩ [0, 1]``."""
        c = self.point(ball.center)
        return c - ball.radius, c + ball.radius

    def _ball_from_interval(self, a: Fraction, b: Fraction) -> list[IdealBall]:
        if a >= b or a >= 1 or b <= 0:
            return []
        if a < 0 and b > 1:
            return [IdealBall(self.index_of(Fraction(1, 2)), Fraction(1))]
        if a < 0:
            return [IdealBall(self.index_of(0), b)]
        if b > 1:
            return [IdealBall(self.index_of(1), 1 - a)]
        return [IdealBall(self.index_of((a + b) / 2), (b - a) / 2)]

    def ball_contains(self, outer: IdealBall, inner: IdealBall, k: int = 32) -> bool:
        a1, b1 = self.ball_interval(inner)
        a2, b2 = self.ball_interval(outer)
        lower_ok = a2 < 0 if a1 < 0 else a2 <= a1
        upper_ok = b2 > 1 if b1 > 1 else b2 >= b1
        return lower_ok and upper_ok

    def balls_disjoint(self, a: IdealBall, b: IdealBall, k: int = 32) -> bool:
        a1, b1 = self.ball_interval(a)
        a2, b2 = self.ball_interval(b)
        lo, hi = max(a1, a2), min(b1, b2)
        return not (lo < hi and lo < 1 and hi > 0)

    def intersect_balls(self, a: IdealBall, b: IdealBall) -> list[IdealBall]:
        a1, b1 = self.ball_interval(a)
        a2, b2 = self.ball_interval(b)
        return self._ball_from_interval(max(a1, a2), min(b1, b2))

    def complement_of_closed_ball(self, center: int, radius: Fraction) -> "REOpenSet":
        c = self.point(center)
        radius = as_rational(radius)
        balls = []
        if c - radius > 0:
            balls.append(IdealBall(self.index_of(0), c - radius))
        if c + radius < 1:
            balls.append(IdealBall(self.index_of(1), 1 - c - radius))
        return FiniteOpenSet(balls, all_at_once=True)

    def close_pairs(self, sources, targets, eps):
        order = sorted(range(len(targets)), key=lambda b: self.point(targets[b]))
        values = [self.point(targets[b]) for b in order]
        out = []
        for a, i in enumerate(sources):
            x = self.point(i)
            lo = bisect.bisect_right(values, x - eps)
            hi = bisect.bisect_left(values, x + eps)
            out.extend((a, order[t]) for t in range(lo, hi))
        return out

    def to_json(self):
        return "unit_interval"

    def __repr__(self) -> str:
        return "UnitInterval()"

    def __eq__(self, other) -> bool:
        return isinstance(other, UnitInterval)

    def __hash__(self) -> int:
        return hash("unit_interval")


def _lowest_set_bit(x: int) -> int:
    return (x & -x).bit_length() - 1


class CantorSpace(MetricSpace):
    """Binary sequences with ``d(w, w') = 2**-min{n : w_n != w'_n}``.

    Ideal points are finite words padded with zeros.  Index ``i`` stands for
    the sequence whose bits are the binary digits of ``i``, least significant
    first: a bijection between naturals and zero-padded words.
    """

    exact = True
    diameter_bound = Fraction(1)

    def is_valid_index(self, i: int) -> bool:
        return i >= 0

    @staticmethod
    def index_of(word: str) -> int:
        if any(c not in "01" for c in word):
            raise InvalidIndex(f"{word!r} is not a binary word")
        return sum(1 << n for n, c in enumerate(word) if c == "1")

    @staticmethod
    def word(i: int, length: int) -> str:
        return "".join("1" if (i >> n) & 1 else "0" for n in range(length))

    def _distance(self, i: int, j: int, k: int) -> RatInterval:
        return RatInterval.point(pow2(-_lowest_set_bit(i ^ j)))

    @staticmethod
    def cylinder_length(radius: Fraction, closed: bool = False) -> int:
        """Length K with ``B(s, radius)`` equal to the cylinder of s's first K bits."""
        m = 0
        if closed:
            while pow2(-m) > radius:
                m += 1
        else:
            while pow2(-m) >= radius:
                m += 1
        return m

    @staticmethod
    def cylinder_radius(length: int) -> Fraction:
        return pow2(1 - length)

    def ball_cylinder(self, ball: IdealBall) -> tuple[int, int]:
        """(prefix bits as an index below 2**K, K)."""
        K = self.cylinder_length(ball.radius)
        return ball.center & ((1 << K) - 1), K

    def cylinder_ball(self, prefix_index: int, length: int) -> IdealBall:
        return IdealBall(prefix_index & ((1 << length) - 1), self.cylinder_radius(length))

    def ball_contains(self, outer: IdealBall, inner: IdealBall, k: int = 32) -> bool:
        u1, k1 = self.ball_cylinder(inner)
        u2, k2 = self.ball_cylinder(outer)
        return k1 >= k2 and (u1 & ((1 << k2) - 1)) == u2

    def balls_disjoint(self, a: IdealBall, b: IdealBall, k: int = 32) -> bool:
        return not (self.ball_contains(a, b) or self.ball_contains(b, a))

    def intersect_balls(self, a: IdealBall, b: IdealBall) -> list[IdealBall]:
        if self.ball_contains(a, b):
            return [b]
        if self.ball_contains(b, a):
            return [a]
        return []

    def complement_of_closed_ball(self, center: int, radius: Fraction) -> "REOpenSet":
        K = self.cylinder_length(as_rational(radius), closed=True)
        balls = [self.cylinder_ball(center ^ (1 << t), t + 1) for t in range(K)]
        return FiniteOpenSet(balls, all_at_once=True)

    def close_pairs(self, sources, targets, eps):
        K = self.cylinder_length(as_rational(eps))
        mask = (1 << K) - 1
        groups: dict[int, list[int]] = {}
        for b, j in enumerate(targets):
            groups.setdefault(j & mask, []).append(b)
        return [(a, b) for a, i in enumerate(sources) for b in groups.get(i & mask, ())]

    def to_json(self):
        return "cantor"

    def __repr__(self) -> str:
        return "CantorSpace()"

    def __eq__(self, other) -> bool:
        return isinstance(other, CantorSpace)

    def __hash__(self) -> int:
        return hash("cantor")


class ProductSpace(MetricSpace):
    """X × Y with the max metric; index ``pair(i_X, i_Y)``."""

    def __init__(self, left: MetricSpace, right: MetricSpace):
        self.left = left
        self.right = right
        self.exact = left.exact and right.exact
        if left.diameter_bound is not None and right.diameter_bound is not None:
            self.diameter_bound = max(left.diameter_bound, right.diameter_bound)
        else:
            self.diameter_bound = None

    def is_valid_index(self, i: int) -> bool:
        if i < 0:
            return False
        a, b = cantor_unpair(i)
        return self.left.is_valid_index(a) and self.right.is_valid_index(b)

    def components(self, i: int) -> tuple[int, int]:
        self.check_index(i)
        return cantor_unpair(i)

    def index_of(self, a: int, b: int) -> int:
        return cantor_pair(self.left.check_index(a), self.right.check_index(b))

    def _distance(self, i: int, j: int, k: int) -> RatInterval:
        a1, b1 = cantor_unpair(i)
        a2, b2 = cantor_unpair(j)
        dl = self.left.distance(a1, a2, k)
        dr = self.right.distance(b1, b2, k)
        return RatInterval(max(dl.lo, dr.lo), max(dl.hi, dr.hi))

    def to_json(self):
        return {"product": [self.left.to_json(), self.right.to_json()]}

    def __repr__(self) -> str:
        return f"ProductSpace({self.left!r}, {self.right!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, ProductSpace) and (self.left, self.right) == (other.left, other.right)

    def __hash__(self) -> int:
        return hash(("product", self.left, self.right))


class EuclideanPoints(MetricSpace):
    """A finite set of rational points of the plane with the Euclidean metric.

    Distances are square roots, served as shrinking rational enclosures; this
    is the reference user-defined space with an inexact oracle.
    """

    exact = False

    def __init__(self, points: Sequence[tuple[RationalLike, RationalLike]]):
        self.points = tuple((as_rational(x), as_rational(y)) for x, y in points)
        if not self.points:
            raise ValueError("need at least one point")
        sq = max(
            (ax - bx) ** 2 + (ay - by) ** 2
            for ax, ay in self.points
            for bx, by in self.points
        )
        self.diameter_bound = _floor_sqrt_interval(sq, 0).hi

    def is_valid_index(self, i: int) -> bool:
        return 0 <= i < len(self.points)

    def _distance(self, i: int, j: int, k: int) -> RatInterval:
        (ax, ay), (bx, by) = self.points[i], self.points[j]
        return _floor_sqrt_interval((ax - bx) ** 2 + (ay - by) ** 2, k)

    def ideal_point_at(self, n: int) -> Optional[int]:
        return n % len(self.points)

    def to_json(self):
        return {"euclidean_points": [[str(x), str(y)] for x, y in self.points]}

    def __repr__(self) -> str:
        return f"EuclideanPoints({len(self.points)} points)"


class OracleSpace(MetricSpace):
    """Wrap a user-supplied distance oracle ``(i, j, k) -> RatInterval``."""

    def __init__(
        self,
        oracle: Callable[[int, int, int], RatInterval],
        is_valid: Callable[[int], bool] = lambda i: i >= 0,
        diameter_bound: Optional[RationalLike] = None,
        exact: bool = False,
        name: str = "oracle",
    ):
        self._oracle = oracle
        self._is_valid = is_valid
        self.diameter_bound = None if diameter_bound is None else as_rational(diameter_bound)
        self.exact = exact
        self.name = name

    def is_valid_index(self, i: int) -> bool:
        return self._is_valid(i)

    def _distance(self, i: int, j: int, k: int) -> RatInterval:
        iv = self._oracle(i, j, k)
        if iv.width > pow2(-k):
            raise ValueError(f"oracle returned width {iv.width} > 2^-{k}")
        return iv

    def to_json(self):
        return {"oracle": self.name}


def builtin_spaces() -> dict[str, object]:
    """The built-in spaces; ``product`` is a constructor taking two spaces."""
    return {"unit_interval": UnitInterval(), "cantor": CantorSpace(), "product": ProductSpace}


# --------------------------------------------------------------------------
# Points
# --------------------------------------------------------------------------


class PointDescriptor:
    """A point as a fast Cauchy stream of ideal-point indices.

    ``constant_from = c`` declares the stream constant from stage c on, so the
    point *is* the ideal point ``s_{i_c}``.  The fast Cauchy contract
    ``d(s_{i_n}, s_{i_{n+1}}) < 2**-n`` is checked lazily on consumed prefixes.
    """

    def __init__(self, index_at: Callable[[int], int], constant_from: Optional[int] = None):
        self._index_at = index_at
        self.constant_from = constant_from
        self._verified: dict[int, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def ideal(cls, i: int) -> "PointDescriptor":
        return cls(lambda _n: i, constant_from=0)

    @classmethod
    def from_prefix(cls, indices: Sequence[int], constant_from: Optional[int] = None) -> "PointDescriptor":
        """Finite prefix; the stream repeats entry ``constant_from`` (default: the last)."""
        seq = tuple(indices)
        if not seq:
            raise ValueError("empty ideal stream")
        c = len(seq) - 1 if constant_from is None else constant_from
        if not 0 <= c < len(seq):
            raise ValueError("constant_from must index into the prefix")
        seq = seq[: c + 1]
        return cls(lambda n: seq[min(n, c)], constant_from=c)

    def ideal_index_at(self, n: int) -> int:
        if self.constant_from is not None and n > self.constant_from:
            n = self.constant_from
        return self._index_at(n)

    @property
    def limit_index(self) -> Optional[int]:
        if self.constant_from is None:
            return None
        return self._index_at(self.constant_from)

    def verify_prefix(self, space: MetricSpace, upto: int) -> None:
        """Reject the stream if the oracle proves a fast-Cauchy violation before ``upto``."""
        if self.constant_from is not None:
            upto = min(upto, self.constant_from)
        key = id(space)
        with self._lock:
            done = self._verified.get(key, 0)
        if upto <= done:
            return
        prev = self._index_at(done)
        for n in range(done, upto):
            nxt = self._index_at(n + 1)
            if space.distance(prev, nxt, n + 2).lo >= pow2(-n):
                raise FastCauchyViolation(
                    f"d(s_{prev}, s_{nxt}) >= 2^-{n} at stage {n}"
                )
            prev = nxt
        with self._lock:
            if self._verified.get(key, 0) < upto:
                self._verified[key] = upto

    def __repr__(self) -> str:
        if self.constant_from is not None:
            return f"PointDescriptor(limit=s_{self.limit_index})"
        return f"PointDescriptor(s_{self.ideal_index_at(0)}, ...)"


def unit_point(x: RationalLike) -> PointDescriptor:
    """A rational point of [0, 1] as a constant stream."""
    return PointDescriptor.ideal(UnitInterval().index_of(x))


def unit_point_from_approximations(approx: Callable[[int], Fraction]) -> PointDescriptor:
    """Point of [0, 1] from rationals with ``|approx(n) - x| <= 2**-(n+2)``."""
    space = UnitInterval()

    def index_at(n: int) -> int:
        return space.index_of(min(max(as_rational(approx(n)), Fraction(0)), Fraction(1)))

    return PointDescriptor(index_at)


def cantor_point(bits: "str | Callable[[int], int]") -> PointDescriptor:
    """A Cantor-space point from a finite word (then zeros) or a bit function."""
    if isinstance(bits, str):
        word = bits.rstrip("0")
        idx = CantorSpace.index_of(word)
        return PointDescriptor(lambda n: idx & ((1 << (n + 1)) - 1), constant_from=max(len(word) - 1, 0))

    def index_at(n: int) -> int:
        return sum(1 << t for t in range(n + 1) if bits(t))

    return PointDescriptor(index_at)


def _enclosure_one_side(x: PointDescriptor, j: int, space: MetricSpace, k: int) -> RatInterval:
    """Enclosure of d(x, s_j) with width <= 2**-k (nested in k for exact spaces)."""
    if x.limit_index is not None:
        return space.distance(x.limit_index, j, k)
    m = k + 3
    x.verify_prefix(space, m)
    iv = space.distance(x.ideal_index_at(m), j, k + 1)
    return iv.widen(pow2(-m + 1)).clamp_below(Fraction(0))


def point_distance(x: PointDescriptor, y: PointDescriptor, space: MetricSpace, k: int) -> RatInterval:
    """Enclosure of ``d(x, y)`` of width at most ``2**-k``."""
    if y.limit_index is not None:
        return _enclosure_one_side(x, y.limit_index, space, k)
    if x.limit_index is not None:
        return _enclosure_one_side(y, x.limit_index, space, k)
    m = k + 4
    x.verify_prefix(space, m)
    y.verify_prefix(space, m)
    iv = space.distance(x.ideal_index_at(m), y.ideal_index_at(m), k + 1)
    return iv.widen(pow2(-m + 2)).clamp_below(Fraction(0))


def distance_to_ideal(x: PointDescriptor, j: int, space: MetricSpace, stage: int) -> RatInterval:
    """Stage-``stage`` enclosure of d(x, s_j), nested across stages.

    For inexact oracles the enclosures at stages 0..stage are intersected so
    that verdicts derived from them never flip.
    """
    if space.exact:
        return _enclosure_one_side(x, j, space, stage)
    iv = _enclosure_one_side(x, j, space, 0)
    for m in range(1, stage + 1):
        iv = iv.intersect(_enclosure_one_side(x, j, space, m))
    return iv


def in_ball_at_stage(x: PointDescriptor, ball: IdealBall, space: MetricSpace, stage: int) -> Verdict:
    """Inside/Outside once ``d(x, c) < r`` or ``d(x, c) > r`` is proven, else Unknown.

    Outside semidecides the complement of the *closed* ball.
    """
    iv = distance_to_ideal(x, ball.center, space, stage)
    if iv.hi < ball.radius:
        return Verdict.INSIDE
    if iv.lo > ball.radius:
        return Verdict.OUTSIDE
    return Verdict.UNKNOWN


# --------------------------------------------------------------------------
# r.e. open sets
# --------------------------------------------------------------------------


class REOpenSet:
    """An open set given as a stage-indexed growing finite union of ideal balls.

    ``balls_upto(stage)`` is the finite union available at ``stage``; its
    union grows with the stage and the represented set is the union over all
    stages.
    """

    def balls_upto(self, stage: int) -> list[IdealBall]:
        raise NotImplementedError

    def contains_at(self, x: PointDescriptor, space: MetricSpace, stage: int) -> bool:
        return any(
            in_ball_at_stage(x, b, space, stage) is Verdict.INSIDE for b in self.balls_upto(stage)
        )


class FiniteOpenSet(REOpenSet):
    """A finite union; ball n is enumerated at stage n unless ``all_at_once``."""

    def __init__(self, balls: Iterable[IdealBall], all_at_once: bool = False):
        self.balls = tuple(balls)
        self.all_at_once = all_at_once

    def ball_at(self, n: int) -> Optional[IdealBall]:
        if self.all_at_once:
            return None
        return self.balls[n] if n < len(self.balls) else None

    def balls_upto(self, stage: int) -> list[IdealBall]:
        if self.all_at_once:
            return list(self.balls)
        return list(self.balls[: stage + 1])

    def __repr__(self) -> str:
        return f"FiniteOpenSet({list(self.balls)!r})"


EMPTY = FiniteOpenSet(())


class EnumeratedOpenSet(REOpenSet):
    """Union of the balls produced by ``ball_at(n)`` for n = 0, 1, 2, ..."""

    def __init__(self, ball_at: Callable[[int], Optional[IdealBall]]):
        self._ball_at = ball_at

    def ball_at(self, n: int) -> Optional[IdealBall]:
        return self._ball_at(n)

    def balls_upto(self, stage: int) -> list[IdealBall]:
        out = []
        for n in range(stage + 1):
            b = self._ball_at(n)
            if b is not None:
                out.append(b)
        return out


class StagedOpenSet(REOpenSet):
    """Open set given directly by its stage-s finite union (must grow in s)."""

    def __init__(self, fn: Callable[[int], Iterable[IdealBall]]):
        self._fn = fn

    def balls_upto(self, stage: int) -> list[IdealBall]:
        return list(self._fn(stage))


class UnionOpenSet(REOpenSet):
    def __init__(self, sets: Iterable[REOpenSet]):
        self.sets = tuple(sets)

    def balls_upto(self, stage: int) -> list[IdealBall]:
        out: list[IdealBall] = []
        for s in self.sets:
            out.extend(s.balls_upto(stage))
        return out


class IntersectionOpenSet(REOpenSet):
    """``u ∩ v`` covered by ball intersections.

    Pairs of enumerated balls are intersected exactly when the space can do
    it; otherwise sub-balls ``B(t, q)`` with ``hi d(t, c_i) + q < r_i`` are
    dovetailed over ideal points t, the stage bounding how many are tried.
    """

    def __init__(self, u: REOpenSet, v: REOpenSet, space: MetricSpace):
        self.u, self.v, self.space = u, v, space

    def _refine(self, a: IdealBall, b: IdealBall, stage: int) -> list[IdealBall]:
        out = []
        for n in range(stage + 1):
            t = self.space.ideal_point_at(n)
            if t is None:
                continue
            slack = min(
                a.radius - self.space.distance(t, a.center, stage).hi,
                b.radius - self.space.distance(t, b.center, stage).hi,
            )
            if slack > 0:
                q = slack / 2
                out.append(IdealBall(t, q))
        return out

    def balls_upto(self, stage: int) -> list[IdealBall]:
        out: list[IdealBall] = []
        for a in self.u.balls_upto(stage):
            for b in self.v.balls_upto(stage):
                exact = self.space.intersect_balls(a, b)
                out.extend(exact if exact is not None else self._refine(a, b, stage))
        return out


class _GenericClosedBallComplement(REOpenSet):
    """``{x : d(x, c) > r}`` covered by balls ``B(t, lo d(t, c) - r)``."""

    def __init__(self, space: MetricSpace, center: int, radius: Fraction):
        self.space, self.center, self.radius = space, center, radius

    def balls_upto(self, stage: int) -> list[IdealBall]:
        out = []
        for n in range(stage + 1):
            t = self.space.ideal_point_at(n)
            if t is None:
                continue
            q = self.space.distance(t, self.center, stage).lo - self.radius
            if q > 0:
                out.append(IdealBall(t, q))
        return out


def reopen_union(u: REOpenSet, v: REOpenSet) -> REOpenSet:
    return UnionOpenSet((u, v))


def reopen_intersection(u: REOpenSet, v: REOpenSet, space: MetricSpace) -> REOpenSet:
    return IntersectionOpenSet(u, v, space)


def intersect_all(sets: Sequence[REOpenSet], space: MetricSpace) -> REOpenSet:
    if not sets:
        raise ValueError("intersection of no sets is the whole space; pass it explicitly")
    acc = sets[0]
    for s in sets[1:]:
        acc = IntersectionOpenSet(acc, s, space)
    return acc
