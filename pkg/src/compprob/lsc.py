"""Lower semicontinuous functions ``X -> [0, +inf]`` as enumerated suprema of
step and hat functions, evaluated by stage.

Every node supports three staged views:

* ``eval_lower(x, space, stage)``: a certified lower bound of ``f(x)``,
  nondecreasing in ``stage``;
* ``superlevel(c, space, stage_budget)``: an r.e. open set converging to
  ``{x : f(x) > c}``;
* ``step_minorant(space, stage)``: a finite list of steps whose supremum lies
  below ``f`` (None for nodes that are not suprema, i.e. sums).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .cms import (
    EMPTY,
    FiniteOpenSet,
    IdealBall,
    MetricSpace,
    PointDescriptor,
    REOpenSet,
    StagedOpenSet,
    UnionOpenSet,
    Verdict,
    distance_to_ideal,
    in_ball_at_stage,
    intersect_all,
)
from .core import RationalLike, as_rational, positive_part, pow2

ZERO_Q = Fraction(0)

#: Cap on the threshold tuples explored when extracting superlevels of sums.
SUM_TUPLE_CAP = 20000


def _cap(stage: int, budget: Optional[int]) -> int:
    return stage if budget is None else min(stage, budget)


class LscFunction:
    """Base class for lsc function nodes."""

    def eval_lower(self, x: PointDescriptor, space: MetricSpace, stage: int) -> Fraction:
        raise NotImplementedError

    def superlevel(self, c: RationalLike, space: MetricSpace, stage_budget: Optional[int] = None) -> REOpenSet:
        raise NotImplementedError

    def step_minorant(self, space: MetricSpace, stage: int) -> Optional[list["StepFunction"]]:
        return None

    def threshold_candidates(self, stage: int) -> set[Fraction]:
        """Finite levels ``a`` used to split superlevels of sums into ``f > a`` pieces."""
        return set()

    def lower_on_ball(self, ball: IdealBall, space: MetricSpace, stage: int) -> Fraction:
        """Staged lower bound of ``f`` valid at every point of ``ball``."""
        raise NotImplementedError


def hat_resolution(stage: int) -> int:
    """Staircase depth used for hats at ``stage``: unbounded but slow-growing,
    so integrals of hats converge without the step count exploding."""
    return math.isqrt(2 * stage)


# --------------------------------------------------------------------------
# Basic functions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StepFunction(LscFunction):
    """``value`` on the open ball, 0 elsewhere."""

    ball: IdealBall
    value: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", as_rational(self.value))
        if self.value <= 0:
            raise ValueError("step values are positive")

    def eval_lower(self, x, space, stage):
        if in_ball_at_stage(x, self.ball, space, stage) is Verdict.INSIDE:
            return self.value
        return ZERO_Q

    def superlevel(self, c, space, stage_budget=None):
        return FiniteOpenSet([self.ball], all_at_once=True) if self.value > as_rational(c) else EMPTY

    def step_minorant(self, space, stage):
        return [self]

    def lower_on_ball(self, ball, space, stage):
        return self.value if space.ball_contains(self.ball, ball) else ZERO_Q

    def threshold_candidates(self, stage):
        return {self.value * (1 - pow2(-j)) for j in range(1, stage + 1)}

    def scaled(self, w: Fraction) -> "StepFunction":
        return StepFunction(self.ball, self.value * w)


@dataclass(frozen=True)
class HatFunction(LscFunction):
    """``q * [1 - [d(y, s) - r]^+ / eps]^+``: q on B(s, r), zero beyond r + eps."""

    value: Fraction
    center: int
    inner_radius: Fraction
    slope_width: Fraction

    def __post_init__(self) -> None:
        for name in ("value", "inner_radius", "slope_width"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        if self.value <= 0 or self.slope_width <= 0 or self.inner_radius < 0:
            raise ValueError("hat needs q > 0, eps > 0, r >= 0")

    def at_distance(self, d: Fraction) -> Fraction:
        return self.value * positive_part(1 - positive_part(d - self.inner_radius) / self.slope_width)

    def eval_lower(self, x, space, stage):
        # h is antitone in d, so the upper end of the enclosure is the safe side
        d_hi = distance_to_ideal(x, self.center, space, stage).hi
        return self.at_distance(d_hi)

    def lower_on_ball(self, ball, space, stage):
        d_sup = space.distance(ball.center, self.center, stage).hi + ball.radius
        return self.at_distance(d_sup)

    def superlevel_radius(self, c: Fraction) -> Optional[Fraction]:
        if self.value <= c:
            return None
        return self.inner_radius + self.slope_width * (1 - c / self.value)

    def superlevel(self, c, space, stage_budget=None):
        r = self.superlevel_radius(as_rational(c))
        return EMPTY if r is None else FiniteOpenSet([IdealBall(self.center, r)], all_at_once=True)

    def staircase(self, K: int) -> list["StepFunction"]:
        """Steps ``q(1 - j/2^K)`` on ``B(s, r + eps j/2^K)``, all below the hat.

        Their supremum is within ``q 2^-K`` of the hat, and the staircase for
        K + 1 contains the one for K.
        """
        out = []
        for j in range(2**K):
            radius = self.inner_radius + self.slope_width * Fraction(j, 2**K)
            if radius > 0:
                out.append(StepFunction(IdealBall(self.center, radius), self.value * (1 - Fraction(j, 2**K))))
        return out

    def step_minorant(self, space, stage):
        return self.staircase(hat_resolution(stage))

    def threshold_candidates(self, stage):
        t = min(stage, 4)
        return {self.value * Fraction(j, 2**t) for j in range(1, 2**t)}

    def scaled(self, w: Fraction) -> "HatFunction":
        return HatFunction(self.value * w, self.center, self.inner_radius, self.slope_width)


# --------------------------------------------------------------------------
# Suprema of basics
# --------------------------------------------------------------------------


class EnumeratedSup(LscFunction):
    """``sup_n basic_at(n)``; the empty supremum is the constant 0."""

    def __init__(self, basic_at: Callable[[int], "Optional[StepFunction | HatFunction]"]):
        self._basic_at = basic_at

    def basics_upto(self, stage: int) -> list:
        out = []
        for n in range(stage + 1):
            b = self._basic_at(n)
            if b is not None:
                out.append(b)
        return out

    def eval_lower(self, x, space, stage):
        return max((b.eval_lower(x, space, stage) for b in self.basics_upto(stage)), default=ZERO_Q)

    def superlevel(self, c, space, stage_budget=None):
        c = as_rational(c)

        def balls(stage: int) -> list[IdealBall]:
            out: list[IdealBall] = []
            for b in self.basics_upto(_cap(stage, stage_budget)):
                out.extend(b.superlevel(c, space).balls_upto(stage))
            return out

        return StagedOpenSet(balls)

    def step_minorant(self, space, stage):
        out: list[StepFunction] = []
        for b in self.basics_upto(stage):
            out.extend(b.step_minorant(space, stage))
        return out

    def lower_on_ball(self, ball, space, stage):
        return max((b.lower_on_ball(ball, space, stage) for b in self.basics_upto(stage)), default=ZERO_Q)

    def threshold_candidates(self, stage):
        out: set[Fraction] = set()
        for b in self.basics_upto(stage):
            out |= b.threshold_candidates(stage)
        return out


class FiniteSup(EnumeratedSup):
    """A finite supremum whose basics are all available from stage 0."""

    def __init__(self, basics: Iterable):
        self.basics = tuple(basics)
        super().__init__(lambda n: None)

    def basics_upto(self, stage: int) -> list:
        return list(self.basics)

    def __repr__(self) -> str:
        return f"FiniteSup({list(self.basics)!r})"


ZERO = FiniteSup(())


def step(center: int, radius: RationalLike, value: RationalLike) -> StepFunction:
    return StepFunction(IdealBall(center, as_rational(radius)), as_rational(value))


def hat(value: RationalLike, center: int, inner_radius: RationalLike, slope_width: RationalLike) -> HatFunction:
    return HatFunction(as_rational(value), center, as_rational(inner_radius), as_rational(slope_width))


# --------------------------------------------------------------------------
# Combinators
# --------------------------------------------------------------------------


class SupNode(LscFunction):
    def __init__(self, children: Sequence[LscFunction]):
        self.children = tuple(children)

    def eval_lower(self, x, space, stage):
        return max((f.eval_lower(x, space, stage) for f in self.children), default=ZERO_Q)

    def superlevel(self, c, space, stage_budget=None):
        return UnionOpenSet(f.superlevel(c, space, stage_budget) for f in self.children)

    def lower_on_ball(self, ball, space, stage):
        return max((f.lower_on_ball(ball, space, stage) for f in self.children), default=ZERO_Q)

    def step_minorant(self, space, stage):
        out: list[StepFunction] = []
        for f in self.children:
            steps = f.step_minorant(space, stage)
            if steps is None:
                return None
            out.extend(steps)
        return out

    def threshold_candidates(self, stage):
        out: set[Fraction] = set()
        for f in self.children:
            out |= f.threshold_candidates(stage)
        return out


class ScaleNode(LscFunction):
    def __init__(self, f: LscFunction, weight: RationalLike):
        self.f = f
        self.weight = as_rational(weight)
        if self.weight <= 0:
            raise ValueError("scale factor must be positive")

    def eval_lower(self, x, space, stage):
        return self.weight * self.f.eval_lower(x, space, stage)

    def superlevel(self, c, space, stage_budget=None):
        return self.f.superlevel(as_rational(c) / self.weight, space, stage_budget)

    def lower_on_ball(self, ball, space, stage):
        return self.weight * self.f.lower_on_ball(ball, space, stage)

    def step_minorant(self, space, stage):
        steps = self.f.step_minorant(space, stage)
        return None if steps is None else [s.scaled(self.weight) for s in steps]

    def threshold_candidates(self, stage):
        return {self.weight * a for a in self.f.threshold_candidates(stage)}


class SumNode(LscFunction):
    """Finite weighted sum kept as a node and evaluated lazily."""

    def __init__(self, terms: Sequence[tuple[RationalLike, LscFunction]]):
        self.terms = tuple((as_rational(w), f) for w, f in terms)
        if any(w <= 0 for w, _ in self.terms):
            raise ValueError("sum weights must be positive")

    def eval_lower(self, x, space, stage):
        return sum((w * f.eval_lower(x, space, stage) for w, f in self.terms), ZERO_Q)

    def lower_on_ball(self, ball, space, stage):
        return sum((w * f.lower_on_ball(ball, space, stage) for w, f in self.terms), ZERO_Q)

    def _minimal_tuples(self, c: Fraction, stage: int) -> list[tuple]:
        """Threshold tuples (None = unconstrained) with ``sum w_i a_i >= c``.

        Only minimal tuples are kept: lowering any constrained entry to the
        previous candidate would break the inequality.
        """
        options = []
        for w, f in self.terms:
            cands = sorted(a for a in f.threshold_candidates(stage) if a >= 0)
            options.append([None] + cands)
        size = math.prod(len(o) for o in options)
        while size > SUM_TUPLE_CAP:
            # thin the longest candidate list, keeping its largest entries
            longest = max(range(len(options)), key=lambda i: len(options[i]))
            opts = options[longest]
            options[longest] = [None] + opts[1:][1::2]
            size = math.prod(len(o) for o in options)

        def total(tup) -> Fraction:
            return sum((w * a for (w, _), a in zip(self.terms, tup) if a is not None), ZERO_Q)

        out = []
        for tup in itertools.product(*options):
            if all(a is None for a in tup) or total(tup) < c:
                continue
            minimal = True
            for i, a in enumerate(tup):
                if a is None:
                    continue
                pos = options[i].index(a)
                lowered = tup[:i] + (options[i][pos - 1],) + tup[i + 1 :]
                if any(b is not None for b in lowered) and total(lowered) >= c:
                    minimal = False
                    break
            if minimal:
                out.append(tup)
        return out

    def superlevel(self, c, space, stage_budget=None):
        c = as_rational(c)
        cache: dict[int, list[IdealBall]] = {}

        def balls(stage: int) -> list[IdealBall]:
            s = _cap(stage, stage_budget)
            out: list[IdealBall] = []
            # pieces found at earlier stages are kept so the union only grows
            for t in range(s + 1):
                if t not in cache:
                    pieces = []
                    for tup in self._minimal_tuples(c, t):
                        sets = [
                            f.superlevel(a, space, t) for (w, f), a in zip(self.terms, tup) if a is not None
                        ]
                        pieces.append(intersect_all(sets, space))
                    cache[t] = pieces
                for piece in cache[t]:
                    out.extend(piece.balls_upto(stage))
            return out

        return StagedOpenSet(balls)

    def threshold_candidates(self, stage):
        t = min(stage, 3)
        bound = sum((w * max(f.threshold_candidates(stage), default=ZERO_Q) for w, f in self.terms), ZERO_Q)
        top = math.ceil(bound * 2**t)
        return {Fraction(j, 2**t) for j in range(1, top + 1)}


class IndicatorNode(LscFunction):
    """0/1 indicator of an r.e. open set."""

    def __init__(self, u: REOpenSet):
        self.u = u

    def eval_lower(self, x, space, stage):
        return Fraction(1) if self.u.contains_at(x, space, stage) else ZERO_Q

    def superlevel(self, c, space, stage_budget=None):
        if as_rational(c) >= 1:
            return EMPTY
        u = self.u
        return StagedOpenSet(lambda s: u.balls_upto(_cap(s, stage_budget)))

    def step_minorant(self, space, stage):
        return [StepFunction(b, Fraction(1)) for b in self.u.balls_upto(stage)]

    def lower_on_ball(self, ball, space, stage):
        inside = any(space.ball_contains(b, ball) for b in self.u.balls_upto(stage))
        return Fraction(1) if inside else ZERO_Q

    def threshold_candidates(self, stage):
        return {Fraction(1) - pow2(-j) for j in range(1, stage + 1)}


class LevelCountNode(LscFunction):
    """``x -> sup{n : x in U_0 ∩ ... ∩ U_n}`` for a sequence of r.e. open sets.

    A point outside ``U_0`` gets the empty supremum, read as 0.
    """

    def __init__(self, levels: Callable[[int], REOpenSet]):
        self.levels = levels
        self._meets: dict[tuple[int, int], REOpenSet] = {}

    def meet(self, n: int, space: MetricSpace) -> REOpenSet:
        """``V_n = U_0 ∩ ... ∩ U_n``."""
        key = (n, id(space))
        if key not in self._meets:
            self._meets[key] = intersect_all([self.levels(i) for i in range(n + 1)], space)
        return self._meets[key]

    def eval_lower(self, x, space, stage):
        value = ZERO_Q
        for n in range(stage + 1):
            if not self.levels(n).contains_at(x, space, stage):
                break
            value = Fraction(n)
        return value

    def lower_on_ball(self, ball, space, stage):
        value = ZERO_Q
        for n in range(stage + 1):
            if not any(space.ball_contains(b, ball) for b in self.levels(n).balls_upto(stage)):
                break
            value = Fraction(n)
        return value

    def superlevel(self, c, space, stage_budget=None):
        c = as_rational(c)
        if c < 0:
            raise ValueError("thresholds are nonnegative")
        m = math.floor(c) + 1
        v = self.meet(m, space)
        return StagedOpenSet(lambda s: v.balls_upto(_cap(s, stage_budget)))

    def step_minorant(self, space, stage):
        out = []
        for n in range(1, stage + 1):
            out.extend(StepFunction(b, Fraction(n)) for b in self.meet(n, space).balls_upto(stage))
        return out

    def threshold_candidates(self, stage):
        return {Fraction(2 * m - 1, 2) for m in range(1, stage + 1)}


# --------------------------------------------------------------------------
# Public constructors
# --------------------------------------------------------------------------


def lsc_sup(*fs: LscFunction) -> LscFunction:
    return SupNode(fs)


def lsc_scale(f: LscFunction, weight: RationalLike) -> LscFunction:
    return ScaleNode(f, weight)


def lsc_sum(terms: Sequence[tuple[RationalLike, LscFunction]]) -> LscFunction:
    return SumNode(terms)


def indicator(u: REOpenSet) -> LscFunction:
    return IndicatorNode(u)


def eval_lower(f: LscFunction, x: PointDescriptor, space: MetricSpace, stage: int) -> Fraction:
    return f.eval_lower(x, space, stage)


def superlevel(f: LscFunction, c: RationalLike, space: MetricSpace, stage_budget: Optional[int] = None) -> REOpenSet:
    if as_rational(c) < 0:
        raise ValueError("superlevel thresholds are nonnegative")
    return f.superlevel(c, space, stage_budget)
