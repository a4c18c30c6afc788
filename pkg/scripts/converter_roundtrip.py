"""Converting the ML test U_n = [0^{n+1}] to an integral test and back.

The integral test counts consecutive levels containing x; its superlevel
{count > 2^n} is U_{2^n + 1}, so the round trip lands on deeper levels."""
from __future__ import annotations

import argparse
import random

from compprob.cms import cantor_point
from compprob.randomness import integral_to_ml, ml_to_integral, zeros_test


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--stage", type=int, default=16)
    args = ap.parse_args()
    z = zeros_test()
    fg = integral_to_ml(ml_to_integral(z), stage_budget=24)
    rng = random.Random(0)
    for n in range(4):
        same = deeper = 0
        for _ in range(args.samples):
            x = cantor_point("".join(rng.choice("0001") for _ in range(40)))
            got = fg.contains_at(x, n, args.stage)
            same += got == z.contains_at(x, n, args.stage)
            deeper += got == z.contains_at(x, 2**n + 1, args.stage)
        print(f"level {n}: agrees with U_{n} on {same}/{args.samples}, with U_{2**n + 1} on {deeper}/{args.samples}")


if __name__ == "__main__":
    main()
