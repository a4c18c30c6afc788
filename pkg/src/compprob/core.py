"""Exact rational scalars, rational intervals and stage-indexed semicomputable reals.

Everything here is exact: values are :class:`fractions.Fraction`, and the
"stage" argument threaded through the package is the only source of fuel for
semicomputations.  A lower semicomputable real is modelled as a monotone map
``stage -> Fraction | None`` where ``None`` is the bottom element (no lower
bound produced yet).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

Rational = Fraction
RationalLike = Union[int, Fraction, str]

#: Bottom of the lower reals / top of the upper reals.  Kept as ``None`` so it
#: can never be confused with a finite bound in arithmetic.
SENTINEL = None


def as_rational(x: RationalLike) -> Fraction:
    """Parse an int, Fraction or ``"p/q"`` string into a Fraction.

    Floats are rejected: nothing on the computation path is floating point.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if not s or any(c in s for c in ".eE"):
            raise ValueError(f"not a canonical rational string: {x!r}")
        return Fraction(s)
    raise TypeError(f"cannot interpret {type(x).__name__} as an exact rational")


def fmt_rational(q: Fraction) -> str:
    """Canonical ``"p/q"`` rendering (denominator always present)."""
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def approx_decimal(q: Fraction, digits: int = 12) -> str:
    """Decimal rendering for human eyes only; never parsed back."""
    q = Fraction(q)
    sign = "-" if q < 0 else ""
    q = abs(q)
    scaled = q.numerator * 10**digits // q.denominator
    whole, frac = divmod(scaled, 10**digits)
    return f"{sign}{whole}.{frac:0{digits}d}"


def pow2(n: int) -> Fraction:
    """2**n as an exact Fraction, for any integer n."""
    return Fraction(2**n) if n >= 0 else Fraction(1, 2 ** (-n))


def positive_part(q: Fraction) -> Fraction:
    return q if q > 0 else Fraction(0)


# --------------------------------------------------------------------------
# Pairing and enumerations used for dovetailing
# --------------------------------------------------------------------------


def cantor_pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def cantor_unpair(z: int) -> tuple[int, int]:
    if z < 0:
        raise ValueError("pairing codes are natural numbers")
    w = (math.isqrt(8 * z + 1) - 1) // 2
    y = z - w * (w + 1) // 2
    return w - y, y


def calkin_wilf(n: int) -> Fraction:
    """n-th positive rational of the Calkin-Wilf enumeration (bijective)."""
    # the binary digits of n+1 below the leading one drive the tree walk
    a, b = 1, 1
    for bit in bin(n + 1)[3:]:
        if bit == "0":
            b = a + b
        else:
            a = a + b
    return Fraction(a, b)


# --------------------------------------------------------------------------
# Rational intervals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RatInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_rational(self.lo))
        object.__setattr__(self, "hi", as_rational(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, q: RationalLike) -> "RatInterval":
        q = as_rational(q)
        return cls(q, q)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, q: RationalLike) -> bool:
        q = as_rational(q)
        return self.lo <= q <= self.hi

    def contains_interval(self, other: "RatInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "RatInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def intersect(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(max(self.lo, other.lo), min(self.hi, other.hi))

    def widen(self, eps: Fraction) -> "RatInterval":
        return RatInterval(self.lo - eps, self.hi + eps)

    def clamp_below(self, floor: Fraction) -> "RatInterval":
        return RatInterval(max(self.lo, floor), max(self.hi, floor))

    def __add__(self, other: "RatInterval") -> "RatInterval":
        return interval_add(self, other)

    def __sub__(self, other: "RatInterval") -> "RatInterval":
        return interval_sub(self, other)

    def __mul__(self, other: "RatInterval") -> "RatInterval":
        return interval_mul(self, other)

    def to_json(self) -> list[str]:
        return [fmt_rational(self.lo), fmt_rational(self.hi)]

    @classmethod
    def from_json(cls, doc: Sequence[RationalLike]) -> "RatInterval":
        lo, hi = doc
        return cls(as_rational(lo), as_rational(hi))


def interval_add(a: RatInterval, b: RatInterval) -> RatInterval:
    return RatInterval(a.lo + b.lo, a.hi + b.hi)


def interval_sub(a: RatInterval, b: RatInterval) -> RatInterval:
    return RatInterval(a.lo - b.hi, a.hi - b.lo)


def interval_mul(a: RatInterval, b: RatInterval) -> RatInterval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return RatInterval(min(products), max(products))


def interval_min(a: RatInterval, b: RatInterval) -> RatInterval:
    return RatInterval(min(a.lo, b.lo), min(a.hi, b.hi))


def interval_max(a: RatInterval, b: RatInterval) -> RatInterval:
    return RatInterval(max(a.lo, b.lo), max(a.hi, b.hi))


# --------------------------------------------------------------------------
# Staged semicomputable reals
# --------------------------------------------------------------------------

Bound = Optional[Fraction]


class StagedLowerReal:
    """Monotone stage-indexed lower bounds; the value is the supremum.

    ``bound_at(n)`` returns a Fraction or ``None`` (no bound yet, i.e. the
    bottom element).  Callers supplying a raw function are responsible for
    monotonicity; every combinator in this module preserves it.
    """

    __slots__ = ("_fn",)

    def __init__(self, fn: Callable[[int], Bound]):
        self._fn = fn

    def bound_at(self, stage: int) -> Bound:
        if stage < 0:
            raise ValueError("stages are natural numbers")
        b = self._fn(stage)
        return None if b is None else as_rational(b)

    def value_or_zero(self, stage: int) -> Fraction:
        """Lower bound for a nonnegative quantity: the sentinel reads as 0."""
        b = self.bound_at(stage)
        return Fraction(0) if b is None else max(b, Fraction(0))

    @classmethod
    def constant(cls, q: RationalLike) -> "StagedLowerReal":
        q = as_rational(q)
        return cls(lambda _n: q)

    @classmethod
    def bottom(cls) -> "StagedLowerReal":
        return cls(lambda _n: None)

    @classmethod
    def from_table(cls, table: Sequence[Bound]) -> "StagedLowerReal":
        """Finite table of bounds; stages past the end repeat the last entry."""
        if not table:
            return cls.bottom()
        frozen = tuple(None if b is None else as_rational(b) for b in table)
        for prev, nxt in zip(frozen, frozen[1:]):
            if nxt is None and prev is not None:
                raise ValueError("lower bounds cannot drop back to the sentinel")
            if prev is not None and nxt is not None and nxt < prev:
                raise ValueError("lower bounds must be nondecreasing")
        return cls(lambda n: frozen[min(n, len(frozen) - 1)])

    def __repr__(self) -> str:
        return f"StagedLowerReal(stage0={self.bound_at(0)!r})"


class StagedUpperReal:
    """Antitone stage-indexed upper bounds; ``None`` is the +inf sentinel."""

    __slots__ = ("_fn",)

    def __init__(self, fn: Callable[[int], Bound]):
        self._fn = fn

    def bound_at(self, stage: int) -> Bound:
        if stage < 0:
            raise ValueError("stages are natural numbers")
        b = self._fn(stage)
        return None if b is None else as_rational(b)

    @classmethod
    def constant(cls, q: RationalLike) -> "StagedUpperReal":
        q = as_rational(q)
        return cls(lambda _n: q)

    @classmethod
    def top(cls) -> "StagedUpperReal":
        return cls(lambda _n: None)

    def negate(self) -> StagedLowerReal:
        def fn(n: int) -> Bound:
            b = self.bound_at(n)
            return None if b is None else -b

        return StagedLowerReal(fn)


def lower_sup(xs: Iterable[StagedLowerReal]) -> StagedLowerReal:
    """Pointwise-in-stage maximum; the empty supremum is bottom."""
    items = tuple(xs)

    def fn(n: int) -> Bound:
        best: Bound = None
        for x in items:
            b = x.bound_at(n)
            if b is not None and (best is None or b > best):
                best = b
        return best

    return StagedLowerReal(fn)


def lower_weighted_sum(pairs: Iterable[tuple[RationalLike, StagedLowerReal]]) -> StagedLowerReal:
    """Stagewise sum of ``w * x``; intended for nonnegative quantities.

    A summand still at the sentinel contributes 0; the result is the sentinel
    only when every summand is.  The empty sum is the constant 0.
    """
    items = tuple((as_rational(w), x) for w, x in pairs)
    for w, _ in items:
        if w <= 0:
            raise ValueError("weights must be positive")
    if not items:
        return StagedLowerReal.constant(0)

    def fn(n: int) -> Bound:
        total = Fraction(0)
        seen = False
        for w, x in items:
            b = x.bound_at(n)
            if b is not None:
                seen = True
                total += w * b
        return total if seen else None

    return StagedLowerReal(fn)


def exceeds_at(x: StagedLowerReal, threshold: RationalLike, stage: int) -> bool:
    b = x.bound_at(stage)
    return b is not None and b > as_rational(threshold)


def check_monotone(x: StagedLowerReal, stages: Iterable[int]) -> bool:
    """True iff the bounds at the given increasing stages never decrease."""
    prev: Bound = None
    for n in stages:
        b = x.bound_at(n)
        if prev is not None and (b is None or b < prev):
            return False
        prev = b if b is not None else prev
    return True
