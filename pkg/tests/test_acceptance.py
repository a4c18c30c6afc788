"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line and then
asserts the same condition, so ``pytest -s`` shows a readable scoreboard."""
from __future__ import annotations

import json
import random
import subprocess
import sys
import time
from fractions import Fraction

from compprob.binaryrep import cell_measure, decode, encode_lazy, lebesgue_rep
from compprob.cms import CantorSpace, FiniteOpenSet, IdealBall, UnitInterval, cantor_point, unit_point
from compprob.core import pow2
from compprob.lsc import FiniteSup, step
from compprob.measures import (
    IdealMeasure,
    bernoulli,
    check_equivalence_bounds,
    integrate_lower,
    lebesgue_unit,
    prokhorov_exact,
    prokhorov_less_than,
    wasserstein_exact,
)
from compprob.randomness import (
    MONITOR,
    cylinder_sequence_test,
    finite_universal,
    integral_to_ml,
    ml_to_integral,
    point_prefix_test,
    transport_test,
    zeros_test,
)

from oracles import (
    QSqrt2,
    bernoulli_union_weight,
    cantor_dist,
    level_cell_length,
    prokhorov_oracle,
    step_sup_integral,
    strassen_less_than,
    union_length,
    unit_dist,
    wasserstein_oracle,
)

U = UnitInterval()
C = CantorSpace()

# The Lebesgue representation reaches sum_{|w|=4} cell_lower(w) >= 1 - 2^-10 here.
CELL_SUM_STAGE = 16
# The level count of the all-zeros point under U_n = [0^{n+1}] exceeds 10 here.
ZEROS_G_STAGE = 11


def report(n: int, ok: bool, detail: str) -> None:
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


# -- random ideal measures -------------------------------------------------------


def _weights(rng: random.Random, k: int) -> list[Fraction]:
    raw = [rng.randint(1, 9) for _ in range(k)]
    return [Fraction(r, sum(raw)) for r in raw]


def random_unit_atoms(rng: random.Random, max_support: int = 5):
    k = rng.randint(1, max_support)
    pts = rng.sample(sorted({Fraction(a, b) for b in range(1, 9) for a in range(b + 1)}), k)
    return pts, _weights(rng, k)


def random_cantor_atoms(rng: random.Random, max_support: int = 5):
    k = rng.randint(1, max_support)
    return rng.sample(range(32), k), _weights(rng, k)


def unit_measure(pts, ws) -> IdealMeasure:
    return IdealMeasure([(U.index_of(p), w) for p, w in zip(pts, ws)])


def cantor_measure(pts, ws) -> IdealMeasure:
    return IdealMeasure(list(zip(pts, ws)))


SETTINGS = [
    ("unit", U, random_unit_atoms, unit_measure, unit_dist),
    ("cantor", C, random_cantor_atoms, cantor_measure, cantor_dist),
]


# -- 1 -----------------------------------------------------------------------------


def test_criterion_1_exact_distances_match_oracles():
    rng = random.Random(20240101)
    start = time.perf_counter()
    mismatches, pairs = [], 0
    for name, space, draw, build, dist in SETTINGS:
        for _ in range(100):
            (xs, ws), (ys, vs) = draw(rng), draw(rng)
            mu, nu = build(xs, ws), build(ys, vs)
            rho = prokhorov_exact(mu, nu, space)
            w = wasserstein_exact(mu, nu, space)
            cost = [[dist(x, y) for y in ys] for x in xs]
            if rho != prokhorov_oracle(xs, ws, ys, vs, dist) or w != wasserstein_oracle(ws, vs, cost):
                mismatches.append((name, xs, ws, ys, vs))
            pairs += 1
    elapsed = time.perf_counter() - start
    ok = not mismatches and pairs >= 200 and elapsed < 60
    report(1, ok, f"{pairs} pairs, {len(mismatches)} mismatches, {elapsed:.1f}s")
    assert ok, mismatches[:3]


# -- 2 -----------------------------------------------------------------------------


def test_criterion_2_metric_axioms():
    rng = random.Random(77)
    start = time.perf_counter()
    failures, triples = [], 0
    for name, space, draw, build, _dist in SETTINGS:
        for _ in range(50):
            a, b, c = (build(*draw(rng)) for _ in range(3))
            for metric in (prokhorov_exact, wasserstein_exact):
                dab, dba = metric(a, b, space), metric(b, a, space)
                dbc, dac = metric(b, c, space), metric(a, c, space)
                checks = [
                    dab == dba,
                    metric(a, a, space) == 0,
                    dac <= dab + dbc,
                    a == b or dab > 0,
                ]
                if not all(checks):
                    failures.append((name, metric.__name__, checks))
            triples += 1
    elapsed = time.perf_counter() - start
    ok = not failures and triples >= 100 and elapsed < 60
    report(2, ok, f"{triples} triples x 2 metrics, {len(failures)} failures, {elapsed:.1f}s")
    assert ok, failures[:3]


# -- 3 -----------------------------------------------------------------------------


def test_criterion_3_prokhorov_wasserstein_equivalence():
    rng = random.Random(31337)
    violations, pairs, eps_total = [], 0, 0
    for name, space, draw, build, dist in SETTINGS:
        assert space.diameter_bound == 1
        for _ in range(60):
            (xs, ws), (ys, vs) = draw(rng), draw(rng)
            mu, nu = build(xs, ws), build(ys, vs)
            rep = check_equivalence_bounds(mu, nu, space)
            if not rep.w_le_scaled_rho or rep.eps_violations:
                violations.append((name, "report", xs, ws, ys, vs))
            for eps in rep.eps_checked:
                # second route: max-flow coupling check, and the oracle's own flow
                if not prokhorov_less_than(mu, nu, space, eps):
                    violations.append((name, "flow", eps))
                if not strassen_less_than(xs, ws, ys, vs, dist, eps):
                    violations.append((name, "oracle", eps))
            eps_total += len(rep.eps_checked)
            pairs += 1
    ok = not violations
    report(3, ok, f"{pairs} pairs, {eps_total} eps values, {len(violations)} violations")
    assert ok, violations[:3]


# -- 4 -----------------------------------------------------------------------------


def _unit_unions():
    rng = random.Random(4)
    out = []
    for _ in range(20):
        balls = []
        for _ in range(rng.randint(1, 4)):
            c = Fraction(rng.randint(0, 16), 16)
            r = Fraction(rng.randint(1, 8), 32)
            balls.append((c, r))
        out.append(balls)
    return out


def _cantor_unions():
    rng = random.Random(5)
    out = []
    for _ in range(20):
        balls = []
        for _ in range(rng.randint(1, 4)):
            length = rng.randint(0, 5)
            balls.append((rng.randrange(2**length), C.cylinder_radius(length) if length else Fraction(2)))
        out.append(balls)
    return out


def test_criterion_4_valuations_converge_from_below():
    start = time.perf_counter()
    stages = list(range(0, 25, 2))
    problems = []
    cases = []
    for balls in _unit_unions():
        u = FiniteOpenSet([IdealBall(U.index_of(c), r) for c, r in balls], all_at_once=True)
        cases.append((lebesgue_unit(), u, union_length([(c - r, c + r) for c, r in balls])))
    p = Fraction(1, 3)
    for balls in _cantor_unions():
        u = FiniteOpenSet([IdealBall(c, r) for c, r in balls], all_at_once=True)
        cases.append((bernoulli(p), u, bernoulli_union_weight(p, balls)))
    for k, (mu, u, truth) in enumerate(cases):
        vals = [mu.valuation_lower(u, s) for s in stages]
        if vals != sorted(vals) or vals[-1] > truth or truth - vals[-1] > pow2(-8):
            problems.append((k, truth, vals[-1]))
    elapsed = time.perf_counter() - start
    ok = not problems and elapsed < 120
    report(4, ok, f"{len(cases)} unions on 2 measures, stages {stages[0]}..{stages[-1]}, {len(problems)} problems, {elapsed:.1f}s")
    assert ok, problems[:3]


# -- 5 -----------------------------------------------------------------------------


def test_criterion_5_integrals_converge_from_below():
    rng = random.Random(55)
    mu = lebesgue_unit()
    stages = list(range(0, 25, 4))
    problems, worst = [], Fraction(0)
    for k in range(50):
        steps = []
        for _ in range(rng.randint(1, 6)):
            steps.append((Fraction(rng.randint(0, 16), 16), Fraction(rng.randint(1, 8), 32), Fraction(rng.randint(1, 8), 4)))
        f = FiniteSup([step(U.index_of(c), r, v) for c, r, v in steps])
        truth = step_sup_integral(steps)
        vals = [integrate_lower(mu, f, s) for s in stages]
        gap = truth - vals[-1]
        worst = max(worst, gap)
        if vals != sorted(vals) or vals[-1] > truth or gap > pow2(-6):
            problems.append((k, truth, vals[-1]))
    ok = not problems
    report(5, ok, f"50 step sups, worst gap {float(worst):.2e} at stage {stages[-1]}, {len(problems)} problems")
    assert ok, problems[:3]


# -- 6 -----------------------------------------------------------------------------


def test_criterion_6_lebesgue_binary_representation():
    rep = lebesgue_rep()
    rng = random.Random(66)
    # (a) roundtrip; non-boundary rationals: denominators coprime to the dyadic centers' spheres
    far = []
    points = set()
    while len(points) < 100:
        points.add(Fraction(rng.randint(1, 9998), 9999))
    for x in sorted(points):
        p = decode(rep, encode_lazy(rep, unit_point(x), 40), 16, 40)
        if abs(U.point(p.ideal_index_at(16)) - x) > pow2(-16):
            far.append(x)
    # (b) lower sums over |w| = 4
    words = [format(k, "04b") for k in range(16)]
    sums = {s: sum(rep.cell_lower(w, s) for w in words) for s in range(0, CELL_SUM_STAGE + 1)}
    sums_ok = all(v <= 1 for v in sums.values()) and sums[CELL_SUM_STAGE] >= 1 - pow2(-10)
    # (c) enclosures against exact cell lengths in Q(sqrt 2)
    outside = []
    for L in range(5):
        for k in range(2**L):
            w = format(k, f"0{L}b") if L else ""
            truth = level_cell_length(w)
            for s in (4, 10, CELL_SUM_STAGE):
                e = cell_measure(rep, w, s)
                if not (QSqrt2(e.lo) <= truth <= QSqrt2(e.hi)):
                    outside.append((w, s))
    ok = not far and sums_ok and not outside
    report(
        6,
        ok,
        f"(a) {100 - len(far)}/100 within 2^-16; (b) sum at stage {CELL_SUM_STAGE} = 1 - "
        f"{float(1 - sums[CELL_SUM_STAGE]):.2e}, max {float(max(sums.values())):.6f}; (c) {len(outside)} enclosure misses",
    )
    assert ok


# -- 7 -----------------------------------------------------------------------------


def test_criterion_7_converters():
    z = zeros_test()
    g = ml_to_integral(z)
    fg = integral_to_ml(g, stage_budget=24)
    rng = random.Random(7)
    disagreements = []
    for _ in range(50):
        x_bits = "".join(rng.choice("01") for _ in range(48))
        n, s = rng.randint(0, 4), rng.randint(4, 20)
        x = cantor_point(x_bits)
        if fg.contains_at(x, n, s) != z.contains_at(x, n, s):
            disagreements.append((x_bits[:8], n, s))
    zeros_value = g.eval_lower(cantor_point("0" * 64), ZEROS_G_STAGE)
    capped = []
    for _ in range(200):
        bits = "".join(rng.choice("01") for _ in range(64))
        if "1" not in bits[:8]:
            continue
        x = cantor_point(bits)
        if any(g.eval_lower(x, s) > 8 for s in (4, 12, 20)):
            capped.append(bits[:8])
    ok = not disagreements and zeros_value > 10 and not capped
    report(
        7,
        ok,
        f"{50 - len(disagreements)}/50 F(G(U)) verdicts agree with U; G(0^inf) = {zeros_value} at stage "
        f"{ZEROS_G_STAGE}; {len(capped)} first-8-bit points above 8",
    )
    assert ok, f"disagreeing (prefix, level, stage): {disagreements[:5]}"


# -- 8 -----------------------------------------------------------------------------


def test_criterion_8_finite_universal_domination():
    mu = bernoulli(Fraction(1, 2))
    prefixes = [lambda n: "0" * (n + 1), lambda n: "1" * (n + 1), lambda n: ("01" * (n + 1))[: n + 1],
                lambda n: "1" + "0" * n]
    tests = [ml_to_integral(cylinder_sequence_test(mu, p, label=f"t{i}")) for i, p in enumerate(prefixes)]
    # the fourth sequence has mass 2^-(n+1) on [1 0^n]
    u = finite_universal(tests)
    rng = random.Random(8)
    points = [cantor_point(b) for b in ("0" * 40, "1" * 40, "01" * 20, "1" + "0" * 39)]
    points += [cantor_point("".join(rng.choice("01") for _ in range(40))) for _ in range(12)]
    violations, comparisons = [], 0
    for x in points:
        for s in range(21):
            ux = u.eval_lower(x, s)
            for i, t in enumerate(tests):
                comparisons += 1
                if ux < pow2(-i - 1) * t.eval_lower(x, s):
                    violations.append((i, s))
    ok = not violations
    report(8, ok, f"4 tests, {len(points)} points, stages 0..20, {comparisons} comparisons, {len(violations)} violations")
    assert ok


# -- 9 -----------------------------------------------------------------------------


def test_criterion_9_certified_tests_stay_below_one():
    mu = bernoulli(Fraction(1, 2))
    g = ml_to_integral(zeros_test(mu))
    ones = ml_to_integral(cylinder_sequence_test(mu, lambda n: "1" * (n + 1), label="ones"))
    u = finite_universal([g, ones])
    rep = lebesgue_rep()
    transported = transport_test(rep, ml_to_integral(point_prefix_test(rep, unit_point(Fraction(0)), 16)), 16)
    for t, top in ((g, 16), (ones, 16), (u, 12), (transported, 6)):
        for s in range(0, top + 1, 2):
            t.integral_lower(s)
    bad = MONITOR.by_construction_violations()
    ok = not bad and MONITOR.checks > 0
    report(9, ok, f"{MONITOR.checks} monitored integral bounds so far, max {MONITOR.max_lower}, {len(bad)} certified violations")
    assert ok


# -- 10 ----------------------------------------------------------------------------

ATOMS = lambda *pairs: json.dumps({"atoms": [{"point": p, "weight": w} for p, w in pairs]})  # noqa: E731
LEB = '{"builtin": "lebesgue_unit"}'
FAIR = '{"builtin": {"bernoulli": "1/2"}}'
ZEROS = '{"kind": "ml", "levels": {"builtin": "zeros"}, "certificate": "cylinder_exact"}'
INVOCATIONS = [
    ["dist", "--kind", "prokhorov", "--space", "unit_interval", "--measure", ATOMS((0, "1")), "--measure", ATOMS((4, "1"))],
    ["dist", "--kind", "wasserstein", "--space", "cantor", "--measure", ATOMS((0, "1/2"), (1, "1/2")), "--measure", ATOMS((3, "1"))],
    ["val", "--measure", LEB, "--set", '{"balls": [{"center": 4, "radius": "1/4"}]}', "--stage", "12", "--history"],
    ["integrate", "--measure", LEB, "--function", '{"basics": [{"hat": {"value": "1", "center": 4, "inner_radius": "1/4", "slope_width": "1/8"}}]}', "--stage", "10"],
    ["encode", "--measure", LEB, "--point", '{"sqrt": "1/2"}', "--budget", "0"],
    ["encode", "--measure", LEB, "--point", '{"rational": "1/3"}', "--bits", "24", "--approx"],
    ["decode", "--measure", LEB, "--omega", "1111001100001100000000001100000000000000", "--precision", "3"],
    ["cellmeasure", "--measure", LEB, "--word", "0110", "--stage", "12", "--approx"],
    ["testconv", "--measure", FAIR, "--test", ZEROS, "--point", '{"bits": "0001"}'],
    ["deficiency", "--measure", FAIR, "--test", ZEROS, "--point", '{"bits": "00000000"}', "--stage", "14"],
    ["checkbounds", "--space", "unit_interval", "--measure", ATOMS((0, "1")), "--measure", ATOMS((0, "1/2"), (1, "1/2"))],
    ["val", "--measure", '{"builtin": "nope"}', "--set", '{"balls": []}'],
]


def test_criterion_10_cli_is_deterministic():
    unstable = []
    codes = []
    for argv in INVOCATIONS:
        runs = [subprocess.run([sys.executable, "-m", "compprob", *argv], capture_output=True) for _ in range(3)]
        outs = {(r.returncode, r.stdout) for r in runs}
        codes.append(runs[0].returncode)
        if len(outs) != 1 or not runs[0].stdout:
            unstable.append(argv[0])
    ok = not unstable
    report(10, ok, f"{len(INVOCATIONS)} invocations x 3 runs, exit codes {sorted(set(codes))}, {len(unstable)} unstable")
    assert ok, unstable
