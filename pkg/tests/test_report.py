import csv
import io
import json
import pathlib
import re
from fractions import Fraction

import mpmath
import pytest

import sawlab
from sawlab import report
from sawlab.config import config_db
from sawlab.report import EXIT_BUDGET, EXIT_FAIL, EXIT_OK, FAIL, INCONCLUSIVE, PASS

CHECK_ID = re.compile(r"\"((?:walks|hw|lace|series|hex|grassmann)\.[a-z_0-9]+)\"")


def test_every_emitted_check_id_has_an_anchor():
    package_dir = pathlib.Path(sawlab.__file__).parent
    emitted = set()
    for source in package_dir.glob("*.py"):
        emitted.update(CHECK_ID.findall(source.read_text()))
    anchors = config_db.anchor_db["anchors"]
    assert emitted
    assert emitted <= set(anchors)
    assert all(statement for statement in anchors.values())


def test_reference_lookup():
    assert "b_n b_m" in report.reference_for("walks.bridge_supermultiplicative")
    with pytest.raises(KeyError):
        report.reference_for("walks.nonexistent")


def test_decimal_strings():
    assert report.decimal_string(Fraction(6, 2)) == "3"
    assert report.decimal_string(Fraction(-1, 3)) == "-1/3"
    assert report.decimal_string(True) == "true"
    assert report.decimal_string(2374444) == "2374444"
    assert report.decimal_string(mpmath.mpf(1) / 3, digits=5) == "0.33333"
    assert report.decimal_string("zc") == "zc"


def test_make_report_stringifies_inputs_and_witnesses():
    made = report.make_report("walks.monotone", {"n": 4, "lambda": Fraction(1, 2)}, PASS,
                              [{"n": 2, "holds": True, "note": "ok"}])
    assert made.inputs == {"n": "4", "lambda": "1/2"}
    assert made.witnesses == [{"n": "2", "holds": True, "note": "ok"}]
    assert made.passed
    with pytest.raises(ValueError):
        report.make_report("walks.monotone", {}, "maybe")


def test_inequality_report_keeps_the_first_violation():
    rows = [{"n": 1, "holds": True}, {"n": 2, "holds": False}, {"n": 3, "holds": False}]
    made = report.inequality_report("walks.monotone", {}, rows)
    assert made.outcome == FAIL
    assert made.witnesses == [{"n": "2", "holds": False}]


def test_residual_report():
    assert report.residual_report("grassmann.norm", {}, 1e-12, 1e-9).outcome == PASS
    assert report.residual_report("grassmann.norm", {}, 1e-3, 1e-9).outcome == FAIL


def _with_outcome(outcome):
    return report.make_report("walks.monotone", {}, outcome)


def test_exit_codes():
    assert report.exit_code([]) == EXIT_OK
    assert report.exit_code([_with_outcome(PASS), _with_outcome(INCONCLUSIVE)]) == EXIT_OK
    assert report.exit_code([_with_outcome(PASS), _with_outcome(FAIL)]) == EXIT_FAIL
    assert report.exit_code([_with_outcome(INCONCLUSIVE)]) == EXIT_BUDGET
    assert report.summarize([_with_outcome(PASS), _with_outcome(FAIL)]) == {PASS: 1, FAIL: 1, INCONCLUSIVE: 0}


def test_stopwatch_and_timing():
    with report.stopwatch() as timing:
        pass
    assert timing["seconds"] >= 0
    timed = report.with_timing(_with_outcome(PASS), timing)
    assert timed.timing == timing
    assert timed.to_dict()["timing"] == timing


def test_renderers():
    reports = [_with_outcome(PASS), report.make_report("walks.sandwich", {"n": 3}, FAIL, [{"n": 3}])]

    header, rows = report.report_rows(reports)
    parsed = list(csv.reader(io.StringIO(report.render_csv(header, rows))))
    assert parsed[0] == ["check_id", "outcome", "inputs", "witness"]
    assert parsed[2][:2] == ["walks.sandwich", FAIL]
    assert json.loads(parsed[2][3]) == {"n": "3"}

    human = report.render_human(reports)
    assert "walks.sandwich" in human
    assert "witness" in human
    assert human.endswith("1 passed, 1 failed, 0 inconclusive")

    assert json.loads(report.render_json({"b": 1, "a": [Fraction(1, 2).numerator]})) == {"a": [1], "b": 1}
