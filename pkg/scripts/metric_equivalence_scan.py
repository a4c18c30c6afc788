"""Random ideal-measure pairs: Prokhorov rho, Wasserstein W, and the two-sided
bounds W <= 2 rho and rho < eps whenever eps^2 > W (checked on a rational grid)."""
from __future__ import annotations

import argparse
import random
from fractions import Fraction

from compprob.cms import CantorSpace, UnitInterval
from compprob.measures import IdealMeasure, check_equivalence_bounds


def random_measure(rng: random.Random, space, support: int) -> IdealMeasure:
    k = rng.randint(1, support)
    if isinstance(space, UnitInterval):
        pts = rng.sample([space.index_of(Fraction(a, 8)) for a in range(9)], k)
    else:
        pts = rng.sample(range(32), k)
    raw = [rng.randint(1, 9) for _ in range(k)]
    return IdealMeasure([(p, Fraction(r, sum(raw))) for p, r in zip(pts, raw)])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=50)
    ap.add_argument("--support", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    for space in (UnitInterval(), CantorSpace()):
        worst_ratio, bad = Fraction(0), 0
        for _ in range(args.pairs):
            rep = check_equivalence_bounds(random_measure(rng, space, args.support),
                                           random_measure(rng, space, args.support), space)
            bad += not rep.ok
            if rep.rho:
                worst_ratio = max(worst_ratio, rep.wasserstein / rep.rho)
        print(f"{type(space).__name__}: {args.pairs} pairs, max W/rho = {worst_ratio} "
              f"({float(worst_ratio):.4f}, bound 2), {bad} violations")


if __name__ == "__main__":
    main()
