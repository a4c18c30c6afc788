"""The level-basis binary representation of Lebesgue measure on [0, 1]:
round trips of sampled rationals and the convergence of cell-measure sums."""
from __future__ import annotations

import argparse
import random
from fractions import Fraction

from compprob.binaryrep import decode, encode_lazy, lebesgue_rep
from compprob.cms import UnitInterval, unit_point


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=20)
    ap.add_argument("--precision", type=int, default=16)
    ap.add_argument("--length", type=int, default=4, help="word length for the cell sums")
    args = ap.parse_args()
    rep, U = lebesgue_rep(), UnitInterval()
    rng = random.Random(1)
    worst = Fraction(0)
    for _ in range(args.points):
        x = Fraction(rng.randint(1, 9998), 9999)
        p = decode(rep, encode_lazy(rep, unit_point(x), 40), args.precision, 40)
        worst = max(worst, abs(U.point(p.ideal_index_at(args.precision)) - x))
    print(f"round trip: worst error {float(worst):.2e} at precision {args.precision}")
    words = [format(k, f"0{args.length}b") for k in range(2**args.length)]
    for s in range(0, 25, 4):
        total = sum(rep.cell_lower(w, s) for w in words)
        print(f"stage {s:2d}: sum of cell lower bounds over |w|={args.length} is 1 - {float(1 - total):.3e}")


if __name__ == "__main__":
    main()
