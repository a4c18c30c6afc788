from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from compprob.cli import main

HALF, QUARTER = 4, 13  # ideal indices of 1/2 and 1/4 in the unit interval
ZERO = 0


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    assert out.endswith("\n") and out.count("\n") == 1
    return code, json.loads(out)


def atoms(*pairs):
    return json.dumps({"atoms": [{"point": p, "weight": w} for p, w in pairs]})


def test_prokhorov_between_two_diracs(capsys):
    code, out = run(capsys, "dist", "--kind", "prokhorov", "--space", "unit_interval",
                    "--measure", atoms((ZERO, "1")), "--measure", atoms((HALF, "1")))
    assert code == 0
    assert out == {"kind": "prokhorov", "status": "ok", "value": "1/2"}


def test_wasserstein_reports_a_plan(capsys):
    code, out = run(capsys, "dist", "--kind", "wasserstein", "--space", "unit_interval",
                    "--measure", atoms((ZERO, "1/2"), (HALF, "1/2")), "--measure", atoms((QUARTER, "1")))
    assert code == 0
    assert out["value"] == "1/4"
    assert sum(Fraction(p["mass"]) for p in out["plan"]) == 1


def test_valuation_of_a_ball_is_below_its_length(capsys):
    ball = json.dumps({"balls": [{"center": HALF, "radius": "1/4"}]})
    code, out = run(capsys, "val", "--measure", '{"builtin": "lebesgue_unit"}', "--set", ball,
                    "--stage", "12", "--history")
    assert code == 0
    assert Fraction(out["lower"]) <= Fraction(1, 2)
    hist = [Fraction(v) for v in out["history"]]
    assert hist == sorted(hist) and hist[-1] == Fraction(out["lower"])


def test_integrate_a_step(capsys):
    f = json.dumps({"basics": [{"step": {"center": HALF, "radius": "1/4", "value": "2"}}]})
    code, out = run(capsys, "integrate", "--measure", '{"builtin": "lebesgue_unit"}', "--function", f,
                    "--stage", "10")
    assert code == 0
    assert 0 < Fraction(out["lower"]) <= 1


def test_encode_boundary_point_with_no_budget(capsys):
    code, out = run(capsys, "encode", "--measure", '{"builtin": "lebesgue_unit"}',
                    "--point", '{"sqrt": "1/2"}', "--budget", "0", "--bits", "8")
    assert code == 2
    assert out["status"] == "budget_exhausted" and out["bits"] == ""


def test_encode_then_decode(capsys):
    code, enc = run(capsys, "encode", "--measure", '{"builtin": "lebesgue_unit"}',
                    "--point", '{"rational": "1/3"}', "--bits", "40")
    assert code == 0 and len(enc["bits"]) == 40
    code, dec = run(capsys, "decode", "--measure", '{"builtin": "lebesgue_unit"}',
                    "--omega", enc["bits"], "--precision", "3")
    assert code == 0
    last = Fraction(dec["centers"][-1])
    assert abs(last - Fraction(1, 3)) < Fraction(1, 8)


def test_cellmeasure_encloses(capsys):
    code, out = run(capsys, "cellmeasure", "--measure", '{"builtin": "lebesgue_unit"}',
                    "--word", "1", "--stage", "10")
    assert code == 0
    assert Fraction(out["lower"]) <= Fraction(out["upper"])
    code, out = run(capsys, "cellmeasure", "--measure", '{"builtin": "lebesgue_unit"}', "--word", "12")
    assert code == 1 and out["error"] == "malformed_document"


ZEROS = json.dumps({"kind": "ml", "levels": {"builtin": "zeros"}, "certificate": "cylinder_exact"})
FAIR = json.dumps({"builtin": {"bernoulli": "1/2"}})


def test_deficiency_verdict(capsys):
    code, out = run(capsys, "deficiency", "--measure", FAIR, "--test", ZEROS,
                    "--point", json.dumps({"bits": "0" * 40}), "--stage", "14")
    assert code == 0
    assert out["lower_bound"] == "14/1"
    assert out["verdict"] == "non-random at level 3"


def test_testconv_rows(capsys):
    code, out = run(capsys, "testconv", "--measure", FAIR, "--test", ZEROS,
                    "--point", json.dumps({"bits": "0" * 40}), "--levels", "2")
    assert code == 0
    assert out["direction"] == "ml_to_integral_to_ml"
    assert [r["level"] for r in out["levels"]] == [0, 1, 2]
    assert all(r["original"] and r["converted"] for r in out["levels"])


def test_checkbounds(capsys):
    code, out = run(capsys, "checkbounds", "--space", "unit_interval",
                    "--measure", atoms((ZERO, "1")), "--measure", atoms((HALF, "1")))
    assert code == 0
    assert out["w_le_scaled_rho"] and out["rho_squared_le_w"] and out["eps_violations"] == []


def test_approx_is_added_alongside_the_exact_value(capsys):
    code, out = run(capsys, "dist", "--space", "unit_interval", "--approx",
                    "--measure", atoms((ZERO, "1")), "--measure", atoms((QUARTER, "1")))
    assert code == 0
    assert out["value"] == "1/4"
    assert out["value_approx"].startswith("0.25")


@pytest.mark.parametrize(
    "argv",
    [
        ["val", "--measure", '{"builtin": "nope"}', "--set", '{"balls": []}'],
        ["dist", "--space", "unit_interval", "--measure", atoms((0, "1"))],
        ["val", "--measure", "{not json", "--set", '{"balls": []}'],
        ["deficiency", "--measure", FAIR, "--test", '{"kind": "integral", "f": {"basics": []}}',
         "--point", '{"bits": "0"}'],
        ["val", "--stage", "-1", "--measure", '{"builtin": "lebesgue_unit"}', "--set", '{"balls": []}'],
    ],
)
def test_malformed_input_exits_with_an_error_object(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 1
    assert out["status"] == "error" and out["error"] and out["message"]


def test_module_entry_point_is_byte_identical():
    argv = [sys.executable, "-m", "compprob", "dist", "--space", "unit_interval",
            "--measure", atoms((ZERO, "1")), "--measure", atoms((HALF, "1"))]
    outs = {subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)}
    assert len(outs) == 1
    assert json.loads(outs.pop())["value"] == "1/2"
