"""Staged lower bounds of mu(U) for a few ball unions, next to the exact value."""
from __future__ import annotations

import argparse
from fractions import Fraction

from compprob.cms import CantorSpace, FiniteOpenSet, IdealBall, UnitInterval
from compprob.measures import bernoulli, lebesgue_unit

U = UnitInterval()
C = CantorSpace()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-stage", type=int, default=24)
    ap.add_argument("--step", type=int, default=4)
    args = ap.parse_args()

    half = Fraction(1, 2)
    cases = [
        ("lebesgue B(1/2,1/4)", lebesgue_unit(), [IdealBall(U.index_of(half), Fraction(1, 4))], half),
        ("lebesgue B(0,1/3) u B(1,1/3)", lebesgue_unit(),
         [IdealBall(U.index_of(0), Fraction(1, 3)), IdealBall(U.index_of(1), Fraction(1, 3))], Fraction(2, 3)),
        ("bernoulli(1/3) [1] u [00]", bernoulli(Fraction(1, 3)),
         [C.cylinder_ball(C.index_of("1"), 1), C.cylinder_ball(C.index_of("00"), 2)], Fraction(1, 3) + Fraction(4, 9)),
    ]
    for name, mu, balls, truth in cases:
        u = FiniteOpenSet(balls, all_at_once=True)
        print(f"{name}: exact {truth}")
        for s in range(0, args.max_stage + 1, args.step):
            v = mu.valuation_lower(u, s)
            print(f"  stage {s:2d}  lower {float(v):.8f}  gap {float(truth - v):.2e}")


if __name__ == "__main__":
    main()
