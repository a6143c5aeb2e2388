"""Check reports and their serialisations."""
import csv
import io
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

import mpmath

from sawlab.config import config_db

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

DECIMAL_DIGITS = 30


@dataclass(frozen=True)
class CheckReport:
    check_id: str
    reference: str
    inputs: Mapping[str, str]
    outcome: str
    witnesses: Sequence[Mapping[str, Any]]
    timing: Mapping[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.outcome == PASS

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def decimal_string(value: Any, digits: int = DECIMAL_DIGITS) -> str:
    """Exact values verbatim ("p/q" for rationals), high-precision reals to ``digits`` significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, (mpmath.mpf, mpmath.mpc, float, complex)):
        return mpmath.nstr(value, digits)
    return str(value)


def reference_for(check_id: str) -> str:
    anchors = config_db.anchor_db["anchors"]
    if check_id not in anchors:
        raise KeyError("Check id missing from the anchor manifest", check_id)
    return anchors[check_id]


def make_report(
    check_id: str,
    inputs: Mapping[str, Any],
    outcome: str,
    witnesses: Sequence[Mapping[str, Any]] = (),
) -> CheckReport:
    if outcome not in (PASS, FAIL, INCONCLUSIVE):
        raise ValueError("Unknown outcome", outcome)
    return CheckReport(
        check_id=check_id,
        reference=reference_for(check_id),
        inputs={key: decimal_string(value) for key, value in inputs.items()},
        outcome=outcome,
        witnesses=[_stringify(row) for row in witnesses],
    )


def _stringify(row: Mapping[str, Any]) -> Dict[str, Any]:
    return {key: value if isinstance(value, (bool, str)) else decimal_string(value) for key, value in row.items()}


def inequality_report(check_id: str, inputs: Mapping[str, Any], rows: Iterable[Mapping[str, Any]]) -> CheckReport:
    """Pass when every row has ``holds``; otherwise fail with the first violating row as witness."""
    rows = list(rows)
    for row in rows:
        if not row["holds"]:
            logger.info("%s violated at %s", check_id, {k: v for k, v in row.items() if k != "holds"})
            return make_report(check_id, inputs, FAIL, [row])
    return make_report(check_id, inputs, PASS, rows)


def residual_report(check_id: str, inputs: Mapping[str, Any], residual, tolerance, **extra: Any) -> CheckReport:
    outcome = PASS if residual < tolerance else FAIL
    return make_report(check_id, inputs, outcome, [dict(residual=residual, tolerance=tolerance, **extra)])


@contextmanager
def stopwatch() -> Iterator[Dict[str, Any]]:
    timing: Dict[str, Any] = {}
    started = time.perf_counter()
    try:
        yield timing
    finally:
        timing["seconds"] = round(time.perf_counter() - started, 6)


def with_timing(report: CheckReport, timing: Mapping[str, Any]) -> CheckReport:
    return replace(report, timing=dict(timing))


def exit_code(reports: Sequence[CheckReport]) -> int:
    """0 when everything passed, 1 on any failure, 3 when only inconclusive outcomes remain."""
    if any(report.outcome == FAIL for report in reports):
        return EXIT_FAIL
    if reports and all(report.outcome == INCONCLUSIVE for report in reports):
        return EXIT_BUDGET
    return EXIT_OK


def summarize(reports: Sequence[CheckReport]) -> Dict[str, int]:
    counts = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
    for report in reports:
        counts[report.outcome] += 1
    return counts


def render_json(document: Mapping[str, Any]) -> str:
    return json.dumps(document, sort_keys=True, indent=2)


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([decimal_string(value) for value in row])
    return buffer.getvalue()


def report_rows(reports: Sequence[CheckReport]) -> Tuple[List[str], List[List[str]]]:
    header = ["check_id", "outcome", "inputs", "witness"]
    rows = []
    for report in reports:
        witness = json.dumps(report.witnesses[0], sort_keys=True) if report.witnesses else ""
        rows.append([report.check_id, report.outcome, json.dumps(dict(report.inputs), sort_keys=True), witness])
    return header, rows


def render_human(reports: Sequence[CheckReport]) -> str:
    lines = []
    for report in reports:
        lines.append(f"[{report.outcome.upper():>12}] {report.check_id}: {report.reference}")
        if report.witnesses and report.outcome != PASS:
            lines.append(f"               witness: {dict(report.witnesses[0])}")
    counts = summarize(reports)
    lines.append(f"{counts[PASS]} passed, {counts[FAIL]} failed, {counts[INCONCLUSIVE]} inconclusive")
    return "\n".join(lines)
