"""Binary representations of computable probability spaces.

A representation is a basis of almost-decidable balls ``B_i = B(c_i, r_i)``
together with its complements ``C_i = X \\ closed B(c_i, r_i)``.  A point in
``B_i`` gets bit 1 at position i, a point in ``C_i`` gets bit 0; cells
``Γ(w)`` intersect the sets selected by the bits of ``w``.

Radii are computable reals given by nested rational intervals.  Three bases
are provided:

* :class:`UnitLevelBasis` for [0, 1]: level L has centers ``j/2**L`` and the
  radius ``2**(-L-1) * sqrt(2)`` (irrational, so it avoids every rational
  distance between ideal points);
* :class:`CantorLevelBasis`: level L has the words of length L as centers
  and radius ``3 * 2**(-L-1)``, so every ball is a clopen cylinder;
* :class:`PairedBasis`: any space, ball ``pair(i, n)`` is centered at the
  i-th ideal point with a radius found by :func:`radius_search` inside the
  n-th seed interval.
"""
from __future__ import annotations

import math
import threading
from abc import ABC, abstractmethod
from functools import lru_cache
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from .cms import (
    CantorSpace,
    FiniteOpenSet,
    IdealBall,
    MetricSpace,
    PointDescriptor,
    REOpenSet,
    StagedOpenSet,
    UnitInterval,
    distance_to_ideal,
    intersect_all,
)
from .core import RatInterval, RationalLike, as_rational, cantor_unpair, pow2
from .errors import BudgetExhausted, InvalidExpansion, InvalidParameter, RepMismatch
from .measures import MeasureDescriptor

#: Largest dyadic subdivision depth tried by the radius search.
MAX_SPLIT_DEPTH = 12


# --------------------------------------------------------------------------
# Radii
# --------------------------------------------------------------------------


class AlmostDecidableRadius(ABC):
    """A computable radius given by nested intervals ``J_0 ⊇ J_1 ⊇ ...``."""

    @abstractmethod
    def interval_at(self, k: int) -> RatInterval: ...

    def enclosure(self, stage: int) -> RatInterval:
        """Enclosure used for stage-``stage`` membership decisions."""
        return self.interval_at(stage)

    def stages_json(self, count: int) -> list[list[str]]:
        return [self.interval_at(k).to_json() for k in range(count)]


class ExactRadius(AlmostDecidableRadius):
    def __init__(self, r: RationalLike):
        self.r = as_rational(r)

    def interval_at(self, k: int) -> RatInterval:
        return RatInterval.point(self.r)


@lru_cache(maxsize=256)
def sqrt2_enclosure(p: int) -> RatInterval:
    """``[a/2^p, (a+1)/2^p]`` around sqrt(2); nested in p."""
    a = math.isqrt(2 * 4**p)
    return RatInterval(Fraction(a, 2**p), Fraction(a + 1, 2**p))


class ScaledSqrt2Radius(AlmostDecidableRadius):
    """``q * sqrt(2)`` with ``J_k`` refined until it avoids the k-th ideal distance.

    ``J_k`` is the dyadic enclosure at precision ``p_k = max(k, p_{k-1}, sep_k)``
    where ``sep_k`` is the first precision separating the enclosure from
    ``d(center, s_{t_k})``, ``t_k`` the k-th ideal point.
    """

    def __init__(self, q: Fraction, center: int, space: MetricSpace):
        self.q = q
        self.center = center
        self.space = space
        self._precisions: list[int] = []
        self._lock = threading.Lock()

    def value_enclosure(self, p: int) -> RatInterval:
        e = sqrt2_enclosure(p)
        return RatInterval(e.lo * self.q, e.hi * self.q)

    def _separation(self, k: int) -> tuple[Optional[int], int]:
        t = self.space.ideal_point_at(k)
        if t is None:
            return None, 0
        d = self.space.exact_distance(self.center, t)
        p = 0
        while True:
            e = self.value_enclosure(p)
            if d < e.lo or d > e.hi:
                return t, p
            p += 1

    def precision_at(self, k: int) -> int:
        with self._lock:
            done = len(self._precisions)
        if k < done:
            return self._precisions[k]
        precs = list(self._precisions)
        for m in range(len(precs), k + 1):
            _, sep = self._separation(m)
            precs.append(max(m, sep, precs[-1] if precs else 0))
        with self._lock:
            if len(precs) > len(self._precisions):
                self._precisions = precs
        return precs[k]

    def interval_at(self, k: int) -> RatInterval:
        return self.value_enclosure(self.precision_at(k))

    def enclosure(self, stage: int) -> RatInterval:
        return self.value_enclosure(stage)

    def v_certificate(self, k: int) -> Optional[tuple[int, Fraction, RatInterval]]:
        """(ideal point t_k, d(center, s_t), J_k) with the distance outside J_k."""
        t, _ = self._separation(k)
        if t is None:
            return None
        return t, self.space.exact_distance(self.center, t), self.interval_at(k)


class SearchedRadius(AlmostDecidableRadius):
    """Radius built by the nested-interval search (see :func:`radius_search`).

    Step k narrows ``J_k`` to a dyadic piece ``J_{k+1}`` that is certified

    * in ``U_k``: ``mu(closed B(c, J.hi)) < mu(B(c, J.lo)) + 1/(k+1)``, using
      ``mu(closed B) <= 1 - lower(mu(X \\ closed B))``;
    * in ``V_k``: left or right of the enclosure of ``d(c, s_{t_k})``.

    Candidates (depth, certification stage) are dovetailed; each step may
    spend at most ``stage_budget`` candidate checks.
    """

    def __init__(
        self,
        space: MetricSpace,
        mu: MeasureDescriptor,
        center: int,
        seed: RatInterval,
        stage_budget: int,
    ):
        if seed.lo <= 0:
            raise InvalidParameter("seed intervals must be positive")
        self.space = space
        self.mu = mu
        self.center = center
        self.stage_budget = stage_budget
        self.steps = 0
        self._intervals = [seed]
        self._certs: list[dict] = []
        self._lock = threading.Lock()

    def _u_ok(self, piece: RatInterval, k: int, stage: int) -> bool:
        inner = FiniteOpenSet([IdealBall(self.center, piece.lo)], all_at_once=True)
        lb_open = self.mu.valuation_lower(inner, stage)
        outer = self.space.complement_of_closed_ball(self.center, piece.hi)
        ub_closed = 1 - self.mu.valuation_lower(outer, stage)
        return ub_closed < lb_open + Fraction(1, k + 1)

    def _v_ok(self, piece: RatInterval, k: int, depth: int) -> Optional[RatInterval]:
        t = self.space.ideal_point_at(k)
        if t is None:
            return RatInterval.point(0)
        d = self.space.distance(self.center, t, depth + k + 2)
        if piece.hi < d.lo or piece.lo > d.hi:
            return d
        return None

    def _step(self, k: int) -> None:
        J = self._intervals[k]
        for b in range(self.stage_budget):
            depth_m1, stage = cantor_unpair(b)
            depth = depth_m1 + 1
            if depth > MAX_SPLIT_DEPTH:
                continue
            width = J.width / 2**depth
            for j in range(2**depth):
                piece = RatInterval(J.lo + j * width, J.lo + (j + 1) * width)
                self.steps += 1
                d = self._v_ok(piece, k, depth)
                if d is None or not self._u_ok(piece, k, stage):
                    continue
                self._intervals.append(piece)
                self._certs.append({"depth": depth, "stage": stage, "distance": d})
                return
        raise BudgetExhausted(
            f"no certified refinement of J_{k} within {self.stage_budget} candidates",
            partial=list(self._intervals),
        )

    def interval_at(self, k: int) -> RatInterval:
        with self._lock:
            while len(self._intervals) <= k:
                self._step(len(self._intervals) - 1)
            return self._intervals[k]

    def certificate(self, k: int) -> dict:
        """Certificate recorded for the step ``J_k -> J_{k+1}``."""
        self.interval_at(k + 1)
        return self._certs[k]


def radius_search(
    space: MetricSpace,
    mu: MeasureDescriptor,
    center: int,
    seed: RatInterval,
    stage_budget: int,
    levels: int = 0,
) -> SearchedRadius:
    """Start the nested-interval radius search; ``levels`` steps are run eagerly."""
    space.check_index(center)
    r = SearchedRadius(space, mu, center, seed, stage_budget)
    if levels:
        r.interval_at(levels)
    return r


def u_certificate(
    space: MetricSpace, mu: MeasureDescriptor, center: int, radius: AlmostDecidableRadius, k: int, max_stage: int
) -> Optional[int]:
    """First stage certifying ``mu(closed B) < mu(B) + 1/(k+1)`` on ``J_k``, if any."""
    J = radius.interval_at(k)
    inner = FiniteOpenSet([IdealBall(center, J.lo)], all_at_once=True) if J.lo > 0 else None
    outer = space.complement_of_closed_ball(center, J.hi)
    for s in range(max_stage + 1):
        lb_open = mu.valuation_lower(inner, s) if inner is not None else Fraction(0)
        if 1 - mu.valuation_lower(outer, s) < lb_open + Fraction(1, k + 1):
            return s
    return None


# --------------------------------------------------------------------------
# Bases
# --------------------------------------------------------------------------


class Basis(ABC):
    space: MetricSpace
    name: str = "basis"

    @abstractmethod
    def center(self, i: int) -> int: ...

    @abstractmethod
    def radius(self, i: int) -> AlmostDecidableRadius: ...

    def witness_candidates(self, n: int, previous: Optional[int], limit: int) -> Iterable[int]:
        """Ball indices below ``limit`` worth trying as n-witnesses, in increasing order."""
        return range(limit)

    def overlapping(self, i: int) -> Iterable[int]:
        """Indices ``j <= i`` whose balls may meet ball i (a superset is fine)."""
        return range(i + 1)


class UnitLevelBasis(Basis):
    name = "unit_levels"

    def __init__(self):
        self.space = UnitInterval()
        self._radii: dict[int, ScaledSqrt2Radius] = {}
        self._lock = threading.Lock()

    @staticmethod
    def offset(level: int) -> int:
        return 2**level - 1 + level

    @classmethod
    def locate(cls, i: int) -> tuple[int, int]:
        if i < 0:
            raise InvalidParameter("ball indices are natural numbers")
        level = max(i.bit_length() - 1, 0)
        while cls.offset(level + 1) <= i:
            level += 1
        while cls.offset(level) > i:
            level -= 1
        return level, i - cls.offset(level)

    @classmethod
    def index(cls, level: int, j: int) -> int:
        return cls.offset(level) + j

    @staticmethod
    def base_radius(level: int) -> Fraction:
        return pow2(-level - 1)

    def center_value(self, i: int) -> Fraction:
        level, j = self.locate(i)
        return Fraction(j, 2**level)

    def center(self, i: int) -> int:
        return self.space.index_of(self.center_value(i))

    def radius(self, i: int) -> ScaledSqrt2Radius:
        with self._lock:
            r = self._radii.get(i)
            if r is None:
                level, _ = self.locate(i)
                r = ScaledSqrt2Radius(self.base_radius(level), self.center(i), self.space)
                self._radii[i] = r
            return r

    def _near(self, level: int, c: Fraction, reach: Fraction) -> list[int]:
        scale = 2**level
        lo = max(0, math.floor((c - reach) * scale))
        hi = min(scale, math.ceil((c + reach) * scale))
        return [self.index(level, j) for j in range(lo, hi + 1) if abs(Fraction(j, scale) - c) < reach]

    def witness_candidates(self, n, previous, limit):
        out = []
        for level in range(n + 1, n + 4):
            if self.offset(level) >= limit:
                break
            if previous is None:
                idx = [self.index(level, j) for j in range(2**level + 1)]
            else:
                plevel, _ = self.locate(previous)
                reach = 2 * (self.base_radius(plevel) + self.base_radius(level))
                idx = self._near(level, self.center_value(previous), reach)
            out.extend(i for i in idx if i < limit)
        return out

    def overlapping(self, i):
        level, _ = self.locate(i)
        c = self.center_value(i)
        out = []
        for l in range(level + 1):
            out.extend(j for j in self._near(l, c, 2 * (self.base_radius(l) + self.base_radius(level))) if j <= i)
        return sorted(out)


class CantorLevelBasis(Basis):
    name = "cantor_levels"

    def __init__(self):
        self.space = CantorSpace()

    @staticmethod
    def offset(level: int) -> int:
        return 2**level - 1

    @staticmethod
    def locate(i: int) -> tuple[int, int]:
        level = (i + 1).bit_length() - 1
        return level, i - (2**level - 1)

    @classmethod
    def index(cls, level: int, word: int) -> int:
        return cls.offset(level) + word

    def center(self, i: int) -> int:
        return self.locate(i)[1]

    def radius(self, i: int) -> ExactRadius:
        level, _ = self.locate(i)
        return ExactRadius(3 * pow2(-level - 1))

    def witness_candidates(self, n, previous, limit):
        out = []
        for level in range(n + 2, n + 4):
            if self.offset(level) >= limit:
                break
            if previous is None:
                words = range(2**level)
            else:
                plevel, pword = self.locate(previous)
                if plevel > level:
                    continue
                words = (pword | (e << plevel) for e in range(2 ** (level - plevel)))
            out.extend(sorted(i for i in (self.index(level, w) for w in words) if i < limit))
        return out

    def overlapping(self, i):
        level, word = self.locate(i)
        return [self.index(l, word & ((1 << l) - 1)) for l in range(level + 1)]


def seed_interval(n: int) -> RatInterval:
    """n-th interval ``[p/q, (p+1)/q]`` (p, q >= 1) of a dense enumeration."""
    pm1, qm1 = cantor_unpair(n)
    q = qm1 + 1
    return RatInterval(Fraction(pm1 + 1, q), Fraction(pm1 + 2, q))


class PairedBasis(Basis):
    """Ball ``pair(i, n)``: i-th ideal point, radius searched inside seed n."""

    name = "paired"

    def __init__(self, space: MetricSpace, mu: MeasureDescriptor, stage_budget: int):
        self.space = space
        self.mu = mu
        self.stage_budget = stage_budget
        self._radii: dict[int, SearchedRadius] = {}
        self._lock = threading.Lock()
        self._points: list[int] = []

    def ideal_point(self, i: int) -> int:
        n = self._points[-1] + 1 if self._points else 0
        while len(self._points) <= i:
            t = self.space.ideal_point_at(n)
            if t is not None and t not in self._points:
                self._points.append(t)
            n += 1
        return self._points[i]

    def center(self, k: int) -> int:
        i, _ = cantor_unpair(k)
        return self.ideal_point(i)

    def radius(self, k: int) -> SearchedRadius:
        with self._lock:
            r = self._radii.get(k)
            if r is None:
                i, n = cantor_unpair(k)
                r = SearchedRadius(self.space, self.mu, self.ideal_point(i), seed_interval(n), self.stage_budget)
                self._radii[k] = r
            return r


# --------------------------------------------------------------------------
# Representations
# --------------------------------------------------------------------------


def _open_intervals_intersect(a: list[tuple[Fraction, Fraction]], b: list[tuple[Fraction, Fraction]]):
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


class BinaryRep:
    def __init__(self, measure: MeasureDescriptor, basis: Basis):
        if measure.space != basis.space:
            raise InvalidParameter("measure and basis live on different spaces")
        self.space = basis.space
        self.measure = measure
        self.basis = basis
        self.digest = measure.digest()
        self.steps = 0
        self._lower_cache: dict[tuple[str, int], Fraction] = {}
        self._lock = threading.Lock()

    # -- single balls --

    def ball_enclosure(self, i: int, stage: int) -> tuple[int, RatInterval]:
        return self.basis.center(i), self.basis.radius(i).enclosure(stage)

    def bit_at_stage(self, x: PointDescriptor, i: int, stage: int) -> Optional[int]:
        c, J = self.ball_enclosure(i, stage)
        d = distance_to_ideal(x, c, self.space, stage)
        self.steps += 1
        if d.hi < J.lo:
            return 1
        if d.lo > J.hi:
            return 0
        return None

    def bit(self, x: PointDescriptor, i: int, stage_budget: int) -> int:
        for s in range(stage_budget + 1):
            b = self.bit_at_stage(x, i, s)
            if b is not None:
                return b
        raise BudgetExhausted(f"bit {i} undecided after stage {stage_budget}")

    # -- cells --

    def _cell_intervals(self, word: str, stage: int) -> list[tuple[Fraction, Fraction]]:
        pieces = [(Fraction(-1), Fraction(2))]
        for i, ch in enumerate(word):
            c, J = self.ball_enclosure(i, stage)
            cv = self.space.point(c)
            if ch == "1":
                sel = [(cv - J.lo, cv + J.lo)] if J.lo > 0 else []
            else:
                sel = [(Fraction(-1), cv - J.hi), (cv + J.hi, Fraction(2))]
            pieces = _open_intervals_intersect(pieces, sel)
            if not pieces:
                break
        return pieces

    def open_cell(self, word: str) -> REOpenSet:
        """Open inner version of ``Γ(word)`` as an r.e. open set (grows with stage)."""
        if any(ch not in "01" for ch in word):
            raise InvalidParameter(f"{word!r} is not a binary word")
        space = self.space
        if not word:
            return FiniteOpenSet([IdealBall(space.ideal_point_at(0) or 0, (space.diameter_bound or 1) + 1)], True)
        if isinstance(space, UnitInterval):

            def balls(stage: int) -> list[IdealBall]:
                out = []
                for a, b in self._cell_intervals(word, stage):
                    out.extend(space._ball_from_interval(a, b))
                return out

            return StagedOpenSet(balls)

        def generic(stage: int) -> list[IdealBall]:
            sets = []
            for i, ch in enumerate(word):
                c, J = self.ball_enclosure(i, stage)
                if ch == "1":
                    if J.lo <= 0:
                        return []
                    sets.append(FiniteOpenSet([IdealBall(c, J.lo)], all_at_once=True))
                else:
                    sets.append(space.complement_of_closed_ball(c, J.hi))
            return intersect_all(sets, space).balls_upto(stage)

        return StagedOpenSet(generic)

    def cell_lower(self, word: str, stage: int) -> Fraction:
        key = (word, stage)
        with self._lock:
            hit = self._lower_cache.get(key)
        if hit is None:
            hit = self.measure.valuation_lower(self.open_cell(word), stage)
            with self._lock:
                self._lower_cache[key] = hit
        return hit

    def complement_lower(self, i: int, stage: int) -> Fraction:
        c, J = self.ball_enclosure(i, stage)
        return self.measure.valuation_lower(self.space.complement_of_closed_ball(c, J.hi), stage)

    def to_json(self, radii: int = 8, stages: int = 4) -> dict:
        return {
            "space": self.space.to_json(),
            "measure": self.measure.doc,
            "basis": self.basis.name,
            "radii": [
                {"center": self.basis.center(i), "stages": self.basis.radius(i).stages_json(stages)}
                for i in range(radii)
            ],
            "descriptor_digest": self.digest,
        }

    def check_document(self, doc: dict) -> None:
        """Reject a stored rep whose digest or radii disagree with this one."""
        if doc.get("descriptor_digest") != self.digest:
            raise RepMismatch("descriptor digest differs from the measure's")
        if doc.get("basis", self.basis.name) != self.basis.name:
            raise RepMismatch("basis kind differs")
        for i, entry in enumerate(doc.get("radii", [])):
            if entry.get("center", self.basis.center(i)) != self.basis.center(i):
                raise RepMismatch(f"radius {i} has a different center")
            mine = self.basis.radius(i).stages_json(len(entry.get("stages", [])))
            if entry.get("stages", []) != mine:
                raise RepMismatch(f"radius {i} enclosures differ")


def lebesgue_rep(measure: Optional[MeasureDescriptor] = None) -> BinaryRep:
    from .measures import lebesgue_unit

    return BinaryRep(measure or lebesgue_unit(), UnitLevelBasis())


def unit_level_rep(measure: MeasureDescriptor) -> BinaryRep:
    return BinaryRep(measure, UnitLevelBasis())


def cantor_rep(measure: MeasureDescriptor) -> BinaryRep:
    return BinaryRep(measure, CantorLevelBasis())


def paired_rep(measure: MeasureDescriptor, stage_budget: int) -> BinaryRep:
    return BinaryRep(measure, PairedBasis(measure.space, measure, stage_budget))


# --------------------------------------------------------------------------
# Encoding and decoding
# --------------------------------------------------------------------------


class Expansion:
    """Lazily computed expansion ``b(x)``; bits are memoised."""

    def __init__(self, rep: BinaryRep, x: PointDescriptor, stage_budget: int):
        self.rep = rep
        self.x = x
        self.stage_budget = stage_budget
        self._bits: dict[int, int] = {}

    def bit(self, i: int) -> int:
        b = self._bits.get(i)
        if b is None:
            b = self.rep.bit(self.x, i, self.stage_budget)
            self._bits[i] = b
        return b

    def prefix(self, n: int) -> str:
        return "".join(str(self.bit(i)) for i in range(n))

    def __len__(self) -> int:
        return 2**62


def encode(rep: BinaryRep, x: PointDescriptor, n: int, stage_budget: int) -> str:
    """First ``n`` bits of ``b(x)``; BudgetExhausted carries the decided prefix."""
    bits = []
    for i in range(n):
        try:
            bits.append(str(rep.bit(x, i, stage_budget)))
        except BudgetExhausted as exc:
            raise BudgetExhausted(str(exc), partial="".join(bits)) from None
    return "".join(bits)


def encode_lazy(rep: BinaryRep, x: PointDescriptor, stage_budget: int) -> Expansion:
    return Expansion(rep, x, stage_budget)


Omega = Union[str, Expansion, Callable[[int], int]]


def _bit_reader(omega: Omega) -> tuple[Callable[[int], int], int]:
    if isinstance(omega, str):
        if any(ch not in "01" for ch in omega):
            raise InvalidParameter("expansions are binary strings")

        def read(i: int) -> int:
            if i >= len(omega):
                raise BudgetExhausted(f"expansion prefix too short for bit {i}")
            return int(omega[i])

        return read, len(omega)
    if isinstance(omega, Expansion):
        return omega.bit, 2**62
    return omega, 2**62


class DecodedPoint(PointDescriptor):
    """``δ(ω)`` as the stream of witness centers; later witnesses are found lazily."""

    def __init__(self, rep: BinaryRep, omega: Omega, stage_budget: int):
        self.rep = rep
        self.read, self.limit = _bit_reader(omega)
        self.stage_budget = stage_budget
        self.witnesses: list[int] = []
        self._wlock = threading.Lock()
        super().__init__(self._center_at)

    def _center_at(self, n: int) -> int:
        return self.rep.basis.center(self.witness(n))

    def witness(self, n: int) -> int:
        with self._wlock:
            while len(self.witnesses) <= n:
                self.witnesses.append(self._find_witness(len(self.witnesses)))
            return self.witnesses[n]

    def _radius_hi(self, i: int) -> Fraction:
        return self.rep.basis.radius(i).enclosure(self.stage_budget).hi

    def _proven_empty(self, i: int) -> bool:
        """Sound but partial emptiness check for ``Γ(ω_0 .. ω_i)``."""
        rep, space, s = self.rep, self.rep.space, self.stage_budget
        c, J = rep.ball_enclosure(i, s)
        mine = IdealBall(c, J.hi)
        others = set(rep.basis.overlapping(i)) | set(self.witnesses)
        for j in sorted(others):
            if j >= i or j >= self.limit:
                continue
            cj, Jj = rep.ball_enclosure(j, s)
            if self.read(j) == 1:
                if space.balls_disjoint(IdealBall(cj, Jj.hi), mine):
                    return True
            elif Jj.lo > 0 and space.ball_contains(IdealBall(cj, Jj.lo), mine):
                # ball i sits inside the closed ball the 0 bit excludes
                return True
        return False

    def _find_witness(self, n: int) -> int:
        previous = self.witnesses[n - 1] if n else None
        target = pow2(-(n + 1))
        for i in self.rep.basis.witness_candidates(n, previous, self.limit):
            if self._radius_hi(i) >= target or self.read(i) != 1:
                continue
            if self._proven_empty(i):
                raise InvalidExpansion(f"cell of the prefix ending at bit {i} is empty")
            return i
        raise BudgetExhausted(f"no {n}-witness found")


def decode(rep: BinaryRep, omega: Omega, k: int, stage_budget: int) -> DecodedPoint:
    """Decode ω; the witnesses for n <= k are found eagerly.

    Stage n of the returned stream is the center of an n-witness: a ball
    with radius below ``2**-(n+1)`` whose bit is 1.
    """
    p = DecodedPoint(rep, omega, stage_budget)
    p.witness(k)
    return p


# --------------------------------------------------------------------------
# Cell measures and the pushforward measure
# --------------------------------------------------------------------------

#: Words up to this length get the complementary upper bound over all same-length cells.
FULL_UPPER_MAX_LEN = 8


def cell_measure(rep: BinaryRep, word: str, stage: int) -> RatInterval:
    """Two-sided enclosure of ``mu(Γ(word))``, nested in ``stage``."""
    lower = rep.cell_lower(word, stage)
    upper = Fraction(1)
    n = len(word)
    if n <= FULL_UPPER_MAX_LEN:
        others = Fraction(0)
        for v in range(2**n):
            w = format(v, f"0{n}b") if n else ""
            if w != word:
                others += rep.cell_lower(w, stage)
        upper = min(upper, 1 - others)
    for i, ch in enumerate(word):
        if ch == "1":
            upper = min(upper, 1 - rep.complement_lower(i, stage))
    return RatInterval(lower, max(upper, lower))


class PushforwardMeasure:
    """``mu_δ`` on Cantor space: cylinder ``[w]`` gets ``mu(Γ(w))``.

    Only lower bounds of open sets are served, which is what valuations and
    integrals consume.
    """

    def __init__(self, rep: BinaryRep):
        self.rep = rep
        self.space = CantorSpace()

    def valuation_lower(self, u: REOpenSet, stage: int) -> Fraction:
        cyls = set()
        for b in u.balls_upto(stage):
            cyls.add(self.space.ball_cylinder(b))
        kept = [
            (w, K)
            for w, K in cyls
            if not any(K2 < K and (w & ((1 << K2) - 1)) == w2 for w2, K2 in cyls)
        ]
        total = Fraction(0)
        for w, K in sorted(kept):
            total += self.rep.cell_lower(CantorSpace.word(w, K), stage)
        return total

    def cylinder_upper(self, word: str, stage: int) -> Fraction:
        return cell_measure(self.rep, word, stage).hi


def cantor_cylinder_measure(mu: MeasureDescriptor, word: str) -> Optional[Fraction]:
    """Exact cylinder mass for Bernoulli descriptors (None for other measures)."""
    doc = mu.doc or {}
    builtin = doc.get("builtin") if isinstance(doc, dict) else None
    if isinstance(builtin, dict) and "bernoulli" in builtin:
        p = as_rational(builtin["bernoulli"])
        ones = word.count("1")
        return p**ones * (1 - p) ** (len(word) - ones)
    return None
