"""Command-line front end.  Every command prints one JSON object with sorted
keys; rationals are ``"p/q"`` strings.  Exit codes: 0 success, 1 error,
2 budget exhausted (the partial result is still printed).
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from typing import Any, Optional, Sequence

from . import documents as docs
from .binaryrep import BinaryRep, cell_measure, decode, encode
from .cms import MetricSpace, UnitInterval
from .core import approx_decimal, fmt_rational
from .errors import BudgetExhausted, CompProbError, MalformedDocument
from .measures import (
    check_equivalence_bounds,
    integrate_lower,
    prokhorov_exact,
    wasserstein_with_plan,
)
from .randomness import IntegralTest, MLTest, deficiency, integral_to_ml, ml_to_integral

_RATIONAL = re.compile(r"^-?\d+/\d+$")


def read_document(value: str) -> Any:
    """A path to a JSON file, inline JSON, or a bare word such as ``cantor``."""
    if os.path.isfile(value):
        with open(value, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = value
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        if re.fullmatch(r"[A-Za-z_]+", value):
            return value
        raise MalformedDocument(f"not JSON and not a file: {value[:60]!r}") from None


def _with_approx(obj: Any) -> Any:
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            out[k] = _with_approx(v)
            if isinstance(v, str) and _RATIONAL.match(v):
                out[f"{k}_approx"] = approx_decimal(Fraction(v))
            elif isinstance(v, list) and v and all(isinstance(e, str) and _RATIONAL.match(e) for e in v):
                out[f"{k}_approx"] = [approx_decimal(Fraction(e)) for e in v]
        return out
    if isinstance(obj, list):
        return [_with_approx(v) for v in obj]
    return obj


def _space(args, measure=None) -> MetricSpace:
    if args.space is not None:
        return docs.load_space(read_document(args.space))
    if measure is not None:
        return measure.space
    raise MalformedDocument("--space is required")


def _measure(args, index: int = 0):
    if not args.measure or len(args.measure) <= index:
        raise MalformedDocument("--measure is required")
    space = docs.load_space(read_document(args.space)) if args.space else None
    return docs.load_measure(read_document(args.measure[index]), space)


def _ideal_pair(args):
    if not args.measure or len(args.measure) != 2:
        raise MalformedDocument("give exactly two --measure documents")
    space = _space(args)
    mu = docs.load_ideal_measure(read_document(args.measure[0]), space)
    nu = docs.load_ideal_measure(read_document(args.measure[1]), space)
    return space, mu, nu


def _rep(args) -> BinaryRep:
    if args.rep is not None:
        return docs.load_rep(read_document(args.rep))
    doc = {"measure": read_document(args.measure[0]) if args.measure else None}
    if args.space:
        doc["space"] = read_document(args.space)
    return docs.load_rep(doc)


def _point(args, space: MetricSpace):
    if args.point is None:
        raise MalformedDocument("--point is required")
    return docs.load_point(read_document(args.point), space)


def _test(args, measure) -> IntegralTest | MLTest:
    if args.test is None:
        raise MalformedDocument("--test is required")
    return docs.load_test(read_document(args.test), measure)


def cmd_dist(args) -> dict:
    space, mu, nu = _ideal_pair(args)
    if args.kind == "prokhorov":
        return {"kind": "prokhorov", "value": fmt_rational(prokhorov_exact(mu, nu, space))}
    res = wasserstein_with_plan(mu, nu, space)
    plan = [
        {"from": mu.support[i], "to": nu.support[j], "mass": fmt_rational(m)}
        for i, row in enumerate(res.plan.flows)
        for j, m in enumerate(row)
        if m
    ]
    return {"kind": "wasserstein", "value": fmt_rational(res.value), "plan": plan}


def cmd_checkbounds(args) -> dict:
    space, mu, nu = _ideal_pair(args)
    return check_equivalence_bounds(mu, nu, space).to_json()


def _history(fn, stage: int, history: bool) -> dict:
    out = {"stage": stage, "lower": fmt_rational(fn(stage))}
    if history:
        out["history"] = [fmt_rational(fn(s)) for s in range(stage + 1)]
    return out


def cmd_val(args) -> dict:
    mu = _measure(args)
    if args.set is None:
        raise MalformedDocument("--set is required")
    u = docs.load_open_set(read_document(args.set), mu.space)
    return _history(lambda s: mu.valuation_lower(u, s), args.stage, args.history)


def cmd_integrate(args) -> dict:
    mu = _measure(args)
    if args.function is None:
        raise MalformedDocument("--function is required")
    f = docs.load_lsc(read_document(args.function))
    return _history(lambda s: integrate_lower(mu, f, s), args.stage, args.history)


def cmd_encode(args) -> dict:
    rep = _rep(args)
    x = _point(args, rep.space)
    try:
        bits = encode(rep, x, args.bits, args.budget)
    except BudgetExhausted as exc:
        exc.partial = exc.partial or ""
        raise
    return {"bits": bits}


def cmd_decode(args) -> dict:
    rep = _rep(args)
    if args.omega is None:
        raise MalformedDocument("--omega is required")
    p = decode(rep, args.omega, args.precision, args.budget)
    stream = [p.ideal_index_at(n) for n in range(args.precision + 1)]
    out: dict = {"ideal_stream": stream, "witnesses": p.witnesses[: args.precision + 1]}
    if isinstance(rep.space, UnitInterval):
        out["centers"] = [fmt_rational(rep.space.point(i)) for i in stream]
    return out


def cmd_cellmeasure(args) -> dict:
    rep = _rep(args)
    if args.word is None or set(args.word) - {"0", "1"}:
        raise MalformedDocument("--word must be a binary string")
    enc = cell_measure(rep, args.word, args.stage)
    return {"word": args.word, "stage": args.stage, "lower": fmt_rational(enc.lo), "upper": fmt_rational(enc.hi)}


def cmd_testconv(args) -> dict:
    mu = _measure(args)
    t = _test(args, mu)
    x = _point(args, mu.space)
    rows = []
    if isinstance(t, MLTest):
        g = ml_to_integral(t)
        back = integral_to_ml(g, args.budget)
        for n in range(args.levels + 1):
            rows.append(
                {
                    "level": n,
                    "original": t.contains_at(x, n, args.stage),
                    "converted": back.contains_at(x, n, args.stage),
                }
            )
        return {
            "direction": "ml_to_integral_to_ml",
            "integral_lower": fmt_rational(g.eval_lower(x, args.stage)),
            "levels": rows,
        }
    u = integral_to_ml(t, args.budget)
    for n in range(args.levels + 1):
        rows.append({"level": n, "member": u.contains_at(x, n, args.stage)})
    return {"direction": "integral_to_ml", "levels": rows}


def cmd_deficiency(args) -> dict:
    mu = _measure(args)
    t = _test(args, mu)
    if isinstance(t, MLTest):
        t = ml_to_integral(t)
    x = _point(args, mu.space)
    report = deficiency(x, t, args.stage).to_json()
    # the point's repr is not stable across runs
    report["point"] = read_document(args.point)
    return report


COMMANDS = {
    "dist": cmd_dist,
    "val": cmd_val,
    "integrate": cmd_integrate,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "cellmeasure": cmd_cellmeasure,
    "testconv": cmd_testconv,
    "deficiency": cmd_deficiency,
    "checkbounds": cmd_checkbounds,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--stage", type=int, default=12)
    common.add_argument("--budget", type=int, default=24)
    common.add_argument("--space")
    common.add_argument("--measure", action="append")
    common.add_argument("--test")
    common.add_argument("--approx", action="store_true", help="add non-authoritative decimal renderings")

    parser = argparse.ArgumentParser(prog="compprob", description="Exact computable-probability queries.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("dist", parents=[common], help="exact distance between two ideal measures")
    p.add_argument("--kind", choices=["prokhorov", "wasserstein"], default="prokhorov")
    p = sub.add_parser("val", parents=[common], help="staged lower bound of mu(U)")
    p.add_argument("--set")
    p.add_argument("--history", action="store_true")
    p = sub.add_parser("integrate", parents=[common], help="staged lower bound of an integral")
    p.add_argument("--function")
    p.add_argument("--history", action="store_true")
    for name in ("encode", "decode", "cellmeasure"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--rep")
        if name == "encode":
            p.add_argument("--point")
            p.add_argument("--bits", type=int, default=16)
        elif name == "decode":
            p.add_argument("--omega")
            p.add_argument("--precision", type=int, default=8)
        else:
            p.add_argument("--word")
    p = sub.add_parser("testconv", parents=[common], help="compare a test with its converted form")
    p.add_argument("--point")
    p.add_argument("--levels", type=int, default=4)
    p = sub.add_parser("deficiency", parents=[common], help="lower bound of a test at a point")
    p.add_argument("--point")
    sub.add_parser("checkbounds", parents=[common], help="check the Prokhorov/Wasserstein bounds")
    return parser


def _emit(obj: dict, approx: bool) -> None:
    if approx:
        obj = _with_approx(obj)
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    approx = getattr(args, "approx", False)
    if args.stage < 0 or args.budget < 0:
        _emit({"status": "error", "error": "invalid_parameter", "message": "stage and budget must be >= 0"}, False)
        return 1
    try:
        result = COMMANDS[args.command](args)
    except BudgetExhausted as exc:
        out: dict = {"status": "budget_exhausted", "message": str(exc)}
        if isinstance(exc.partial, str):
            out["bits"] = exc.partial
        elif exc.partial is not None:
            out["partial"] = [[fmt_rational(iv.lo), fmt_rational(iv.hi)] for iv in exc.partial]
        _emit(out, approx)
        return 2
    except (CompProbError, ValueError, TypeError, KeyError, IndexError) as exc:
        code = getattr(exc, "code", "malformed_document")
        _emit({"status": "error", "error": code, "message": str(exc)}, False)
        return 1
    result["status"] = "ok"
    _emit(result, approx)
    return 0


if __name__ == "__main__":
    sys.exit(main())
