"""Randomness tests: integral tests as lsc functions, Martin-Löf tests as
sequences of r.e. open sets, converters between them, a finite universal
combinator, deficiency reports and transport along binary representations.
"""
from __future__ import annotations

import enum
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .binaryrep import BinaryRep, PushforwardMeasure, cantor_cylinder_measure
from .cms import (
    CantorSpace,
    FiniteOpenSet,
    IdealBall,
    MetricSpace,
    PointDescriptor,
    REOpenSet,
    StagedOpenSet,
    intersect_all,
)
from .core import fmt_rational, pow2
from .errors import BudgetExhausted, CertificateViolation, UncertifiedBounds
from .lsc import LevelCountNode, LscFunction, SumNode, superlevel
from .measures import MeasureDescriptor, integrate_lower


class Certificate(enum.Enum):
    BY_CONSTRUCTION = "by_construction"
    USER_ASSERTED = "asserted"


class MLCertificate(enum.Enum):
    CYLINDER_EXACT = "cylinder_exact"
    BY_CONSTRUCTION = "by_construction"
    ASSERTED = "asserted"


class IntegralMonitor:
    """Process-wide record of every staged integral bound computed for a test."""

    def __init__(self):
        self._lock = threading.Lock()
        self.checks = 0
        self.max_lower = Fraction(0)
        self.violations: list[tuple[str, str, int, Fraction]] = []

    def record(self, test: "IntegralTest", stage: int, value: Fraction) -> None:
        with self._lock:
            self.checks += 1
            self.max_lower = max(self.max_lower, value)
            if value > 1:
                self.violations.append((test.label, test.certificate.value, stage, value))

    def by_construction_violations(self) -> list:
        with self._lock:
            return [v for v in self.violations if v[1] == Certificate.BY_CONSTRUCTION.value]


MONITOR = IntegralMonitor()


@dataclass
class IntegralTest:
    """Lsc ``f >= 0`` with ``∫ f dmu <= 1``, plus the reason to believe the bound."""

    f: LscFunction
    measure: object
    certificate: Certificate
    label: str = "test"

    @property
    def space(self) -> MetricSpace:
        return self.measure.space

    def eval_lower(self, x: PointDescriptor, stage: int) -> Fraction:
        return self.f.eval_lower(x, self.space, stage)

    def integral_lower(self, stage: int) -> Fraction:
        """Staged lower bound of the integral; a bound above 1 is a hard error."""
        value = integrate_lower(self.measure, self.f, stage)
        MONITOR.record(self, stage, value)
        if value > 1:
            raise CertificateViolation(
                f"{self.label}: staged integral bound {value} > 1 at stage {stage} "
                f"({self.certificate.value} certificate)"
            )
        return value


@dataclass
class MLTest:
    """Uniformly r.e. open sets ``U_n`` with ``mu(U_n) <= 2**-n``."""

    levels: Callable[[int], REOpenSet]
    measure: object
    certificate: Optional[MLCertificate]
    label: str = "ml-test"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def space(self) -> MetricSpace:
        return self.measure.space

    def level(self, n: int) -> REOpenSet:
        if n not in self._cache:
            self._cache[n] = self.levels(n)
        return self._cache[n]

    def contains_at(self, x: PointDescriptor, n: int, stage: int) -> bool:
        return self.level(n).contains_at(x, self.space, stage)

    def measure_upper(self, n: int, stage: int) -> Optional[Fraction]:
        """Certified upper bound of ``mu(U_n)`` from cylinder masses (Cantor space only)."""
        if not isinstance(self.space, CantorSpace):
            return None
        cyls = {self.space.ball_cylinder(b) for b in self.level(n).balls_upto(stage)}
        kept = [(w, K) for w, K in cyls if not any(K2 < K and (w & ((1 << K2) - 1)) == w2 for w2, K2 in cyls)]
        total = Fraction(0)
        for w, K in kept:
            word = CantorSpace.word(w, K)
            if isinstance(self.measure, PushforwardMeasure):
                total += self.measure.cylinder_upper(word, stage)
            elif isinstance(self.measure, MeasureDescriptor):
                exact = cantor_cylinder_measure(self.measure, word)
                if exact is None:
                    return None
                total += exact
            else:
                return None
        return total

    def check_bounds(self, levels: int, stage: int) -> None:
        """Verify ``mu(U_n) <= 2**-n`` for ``n < levels`` (cylinder-exact tests)."""
        for n in range(levels):
            ub = self.measure_upper(n, stage)
            if ub is None:
                raise UncertifiedBounds(f"no cylinder bound available for level {n}")
            if ub > pow2(-n):
                raise UncertifiedBounds(f"level {n}: mass bound {ub} exceeds 2^-{n}")


# --------------------------------------------------------------------------
# Converters and combinators
# --------------------------------------------------------------------------


def integral_to_ml(t: IntegralTest, stage_budget: Optional[int] = None) -> MLTest:
    """Level n is the superlevel ``{t > 2**n}``; Markov gives ``mu <= 2**-n``."""

    def levels(n: int) -> REOpenSet:
        return superlevel(t.f, pow2(n), t.space, stage_budget)

    return MLTest(levels, t.measure, MLCertificate.BY_CONSTRUCTION, label=f"F({t.label})")


#: Levels and stage used to spot-check cylinder-exact bounds before conversion.
SPOT_CHECK_LEVELS = 4
SPOT_CHECK_STAGE = 12


def ml_to_integral(u: MLTest) -> IntegralTest:
    """``x -> sup{n : x in U_0 ∩ ... ∩ U_n}``, whose integral is at most 1."""
    if u.certificate is None:
        raise UncertifiedBounds("ML test without a certificate")
    if u.certificate is MLCertificate.CYLINDER_EXACT:
        u.check_bounds(SPOT_CHECK_LEVELS, SPOT_CHECK_STAGE)
    return IntegralTest(LevelCountNode(u.level), u.measure, Certificate.BY_CONSTRUCTION, label=f"G({u.label})")


def finite_universal(tests: Sequence[IntegralTest]) -> IntegralTest:
    """``sum_i 2**(-i-1) t_i``: dominates each ``t_i`` with constant ``2**(-i-1)``."""
    if not tests:
        raise ValueError("need at least one test")
    mu = tests[0].measure
    for t in tests[1:]:
        same = t.measure is mu or getattr(t.measure, "doc", None) == getattr(mu, "doc", object())
        if not same:
            raise ValueError("tests must share their measure")
    f = SumNode([(pow2(-i - 1), t.f) for i, t in enumerate(tests)])
    return IntegralTest(f, mu, Certificate.BY_CONSTRUCTION, label="universal")


@dataclass(frozen=True)
class DeficiencyReport:
    point: str
    test: str
    stage: int
    lower_bound: Fraction

    @property
    def nonrandom_level(self) -> Optional[int]:
        """Largest k with ``lower_bound > 2**k`` (None if the bound is at most 1)."""
        if self.lower_bound <= 1:
            return None
        k = 0
        while self.lower_bound > pow2(k + 1):
            k += 1
        return k

    def to_json(self) -> dict:
        level = self.nonrandom_level
        return {
            "point": self.point,
            "test": self.test,
            "stage": self.stage,
            "lower_bound": fmt_rational(self.lower_bound),
            "verdict": "no evidence" if level is None else f"non-random at level {level}",
        }


def deficiency(x: PointDescriptor, t: IntegralTest, stage: int) -> DeficiencyReport:
    return DeficiencyReport(repr(x), t.label, stage, t.eval_lower(x, stage))


# --------------------------------------------------------------------------
# ML tests from full-measure open sets
# --------------------------------------------------------------------------


def inner_balls(u: REOpenSet, stage: int) -> list[IdealBall]:
    """Balls of u enumerated by ``stage`` shrunk by the factor ``1 - 2**-stage``.

    Their closures lie inside u and they exhaust u as the stage grows.
    """
    if stage < 1:
        return []
    return [IdealBall(b.center, b.radius * (1 - pow2(-stage))) for b in u.balls_upto(stage)]


def full_measure_open_to_ml(u: REOpenSet, mu: MeasureDescriptor, stage_budget: int) -> MLTest:
    """ML test covering ``X \\ u`` for an r.e. open u of full measure.

    Level i is the complement of the closed inner approximation found at the
    first stage s where the inner open part has staged mass ``> 1 - 2**-i``.
    """
    space = mu.space
    found: dict[int, int] = {}

    def stage_for(i: int) -> int:
        if i not in found:
            for s in range(1, stage_budget + 1):
                inner = FiniteOpenSet(inner_balls(u, s), all_at_once=True)
                if mu.valuation_lower(inner, s) > 1 - pow2(-i):
                    found[i] = s
                    break
            else:
                raise BudgetExhausted(f"mass above 1 - 2^-{i} not certified by stage {stage_budget}")
        return found[i]

    def levels(i: int) -> REOpenSet:
        s = stage_for(i)
        balls = inner_balls(u, s)
        if not balls:
            return FiniteOpenSet([IdealBall(space.ideal_point_at(0) or 0, (space.diameter_bound or 1) + 1)], True)
        return intersect_all([space.complement_of_closed_ball(b.center, b.radius) for b in balls], space)

    return MLTest(levels, mu, MLCertificate.BY_CONSTRUCTION, label="full-measure-complement")


# --------------------------------------------------------------------------
# Transport along a binary representation
# --------------------------------------------------------------------------


class TransportedNode(LscFunction):
    """``t ∘ b``: evaluate the Cantor-side test on the cylinder of the decided prefix."""

    def __init__(self, rep: BinaryRep, f: LscFunction, stage_budget: int, bits_for_stage: Callable[[int], int]):
        self.rep = rep
        self.f = f
        self.stage_budget = stage_budget
        self.bits_for_stage = bits_for_stage
        self.cantor = CantorSpace()

    def prefix(self, x: PointDescriptor, stage: int) -> str:
        """Bits of ``b(x)`` decided at ``stage``, up to the first undecided one."""
        s = min(stage, self.stage_budget)
        bits = []
        for i in range(self.bits_for_stage(s)):
            b = self.rep.bit_at_stage(x, i, s)
            if b is None:
                break
            bits.append(str(b))
        return "".join(bits)

    def eval_lower(self, x, space, stage):
        word = self.prefix(x, stage)
        ball = self.cantor.cylinder_ball(CantorSpace.index_of(word), len(word))
        return self.f.lower_on_ball(ball, self.cantor, min(stage, self.stage_budget))

    def custom_integral_lower(self, mu, stage):
        # ∫ t∘b dmu = ∫ t dmu_δ
        return integrate_lower(PushforwardMeasure(self.rep), self.f, stage)

    def superlevel(self, c, space, stage_budget=None):
        cantor_set = self.f.superlevel(c, self.cantor, stage_budget)
        rep = self.rep

        def balls(stage: int) -> list[IdealBall]:
            out: list[IdealBall] = []
            for b in cantor_set.balls_upto(stage):
                w, K = self.cantor.ball_cylinder(b)
                out.extend(rep.open_cell(CantorSpace.word(w, K)).balls_upto(stage))
            return out

        return StagedOpenSet(balls)


def default_bits_for_stage(rep: BinaryRep) -> Callable[[int], int]:
    offset = getattr(rep.basis, "offset", None)
    if offset is None:
        return lambda s: s + 1
    return lambda s: offset(s + 1)


def transport_test(rep: BinaryRep, cantor_test: IntegralTest, stage_budget: int) -> IntegralTest:
    """Pull a test for ``mu_δ`` on Cantor space back to a test for ``mu`` on X."""
    if not isinstance(cantor_test.space, CantorSpace):
        raise ValueError("the transported test must live on Cantor space")
    node = TransportedNode(rep, cantor_test.f, stage_budget, default_bits_for_stage(rep))
    return IntegralTest(node, rep.measure, Certificate.BY_CONSTRUCTION, label=f"transport({cantor_test.label})")


# --------------------------------------------------------------------------
# Built-in tests
# --------------------------------------------------------------------------


def cylinder_sequence_test(mu, prefix_of: Callable[[int], str], label: str = "cylinders") -> MLTest:
    """``U_n`` = the cylinder of the word ``prefix_of(n)`` (caller keeps ``mu(U_n) <= 2**-n``)."""
    cantor = CantorSpace()

    def levels(n: int) -> REOpenSet:
        word = prefix_of(n)
        return FiniteOpenSet([cantor.cylinder_ball(CantorSpace.index_of(word), len(word))], all_at_once=True)

    return MLTest(levels, mu, MLCertificate.CYLINDER_EXACT, label=label)


def zeros_test(mu: Optional[MeasureDescriptor] = None) -> MLTest:
    """``U_n = [0^{n+1}]`` under the uniform (or given) measure on Cantor space."""
    from .measures import bernoulli

    mu = mu or bernoulli(Fraction(1, 2))
    return cylinder_sequence_test(mu, lambda n: "0" * (n + 1), label="zeros")


def point_prefix_test(rep: BinaryRep, x: PointDescriptor, stage_budget: int) -> MLTest:
    """Cylinders around ``b(x)`` for a level basis, as an ML test for ``mu_δ``.

    Level n is the cylinder of ``b(x)`` through basis level n+1, which lies
    inside one ball of radius below ``2**-n``.
    """
    from .binaryrep import encode

    offset = rep.basis.offset
    cache: dict[int, str] = {}

    def prefix_of(n: int) -> str:
        if n not in cache:
            cache[n] = encode(rep, x, offset(n + 2), stage_budget)
        return cache[n]

    return cylinder_sequence_test(PushforwardMeasure(rep), prefix_of, label="point-prefix")
