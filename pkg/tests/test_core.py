from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from compprob.core import (
    RatInterval,
    StagedLowerReal,
    StagedUpperReal,
    approx_decimal,
    as_rational,
    calkin_wilf,
    cantor_pair,
    cantor_unpair,
    check_monotone,
    exceeds_at,
    fmt_rational,
    interval_add,
    interval_mul,
    interval_sub,
    lower_sup,
    lower_weighted_sum,
    pow2,
)

rationals = st.fractions(min_value=-8, max_value=8, max_denominator=64)


def test_as_rational_accepts_exact_forms():
    assert as_rational("3/4") == Fraction(3, 4)
    assert as_rational(2) == Fraction(2)
    assert as_rational(Fraction(1, 3)) == Fraction(1, 3)


@pytest.mark.parametrize("bad", [0.5, True, "0.5", "1e3", ""])
def test_as_rational_rejects_inexact(bad):
    with pytest.raises((TypeError, ValueError)):
        as_rational(bad)


@given(rationals)
def test_fmt_roundtrip(q):
    s = fmt_rational(q)
    assert "/" in s
    assert as_rational(s) == q


def test_approx_is_truncated_decimal():
    assert approx_decimal(Fraction(1, 3), 4) == "0.3333"
    assert approx_decimal(Fraction(-1, 2), 2) == "-0.50"


@given(st.integers(0, 500), st.integers(0, 500))
def test_pairing_bijective(x, y):
    assert cantor_unpair(cantor_pair(x, y)) == (x, y)


def test_calkin_wilf_hits_small_rationals_once():
    seen = [calkin_wilf(n) for n in range(2000)]
    assert len(set(seen)) == len(seen)
    for p in range(1, 8):
        for q in range(1, 8):
            assert Fraction(p, q) in seen


def test_pow2():
    assert pow2(3) == 8 and pow2(-3) == Fraction(1, 8) and pow2(0) == 1


@given(rationals, rationals, rationals, rationals)
def test_interval_arithmetic_encloses(a, b, c, d):
    x = RatInterval(min(a, b), max(a, b))
    y = RatInterval(min(c, d), max(c, d))
    for p in (x.lo, x.mid, x.hi):
        for q in (y.lo, y.mid, y.hi):
            assert interval_add(x, y).contains(p + q)
            assert interval_sub(x, y).contains(p - q)
            assert interval_mul(x, y).contains(p * q)


def test_interval_rejects_reversed_and_roundtrips_json():
    with pytest.raises(ValueError):
        RatInterval(1, 0)
    iv = RatInterval(Fraction(1, 3), Fraction(1, 2))
    assert RatInterval.from_json(iv.to_json()) == iv
    assert iv.width == Fraction(1, 6)


def test_sentinel_conventions():
    bot = StagedLowerReal.bottom()
    assert bot.bound_at(5) is None
    assert bot.value_or_zero(5) == 0
    assert lower_sup([]).bound_at(0) is None
    assert lower_weighted_sum([]).bound_at(3) == 0
    mixed = lower_weighted_sum([(1, bot), (Fraction(1, 2), StagedLowerReal.constant(4))])
    assert mixed.bound_at(0) == 2
    assert lower_weighted_sum([(1, bot)]).bound_at(0) is None


def test_from_table_checks_monotonicity():
    x = StagedLowerReal.from_table([None, Fraction(1, 4), Fraction(1, 2)])
    assert x.bound_at(0) is None and x.bound_at(9) == Fraction(1, 2)
    with pytest.raises(ValueError):
        StagedLowerReal.from_table([1, 0])
    with pytest.raises(ValueError):
        StagedLowerReal.from_table([1, None])


def test_exceeds_and_negate():
    x = StagedLowerReal(lambda n: Fraction(n, n + 1))
    assert not exceeds_at(x, Fraction(1, 2), 1)
    assert exceeds_at(x, Fraction(1, 2), 2)
    assert check_monotone(x, range(20))
    up = StagedUpperReal(lambda n: Fraction(1, n + 1))
    assert up.negate().bound_at(3) == Fraction(-1, 4)
    assert StagedUpperReal.top().bound_at(0) is None


@given(st.lists(st.lists(rationals, min_size=1, max_size=6), min_size=1, max_size=4))
def test_sup_and_sum_preserve_monotonicity(tables):
    reals = [StagedLowerReal.from_table(sorted(t)) for t in tables]
    assert check_monotone(lower_sup(reals), range(8))
    pos = [StagedLowerReal.from_table(sorted(abs(q) for q in t)) for t in tables]
    assert check_monotone(lower_weighted_sum([(Fraction(1, 2), r) for r in pos]), range(8))


def test_negative_stage_rejected():
    with pytest.raises(ValueError):
        StagedLowerReal.constant(0).bound_at(-1)
