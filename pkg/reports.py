"""
Report module for the q-series verification suite
Handles the VerificationReport record and its JSON and text renderings
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

from hp_real import render

PASS = "PASS"
FAIL = "FAIL"
INCONCLUSIVE = "INCONCLUSIVE"
PASS_DEGENERATE = "PASS-degenerate"


@dataclass
class VerificationReport:
    """
    Outcome of one CLI invocation

    Every value is a JSON-native type (decimal strings for reals) so that
    parse(emit(r)) == r and reruns are byte-identical.
    """
    command: str
    target: str
    params: Dict[str, str]
    variant: str
    precision: Optional[int]
    order: Optional[int]
    grid: List[str]
    outcome: str
    rows: List[Dict[str, object]] = field(default_factory=list)
    mismatch: Optional[Dict[str, int]] = None
    summary: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.outcome in (PASS, PASS_DEGENERATE)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls(**json.loads(text))

    def to_text(self) -> str:
        lines = [f"{self.command} {self.target} [{self.variant}]: {self.outcome}"]
        if self.params:
            lines.append("params: " + ", ".join(f"{k}={v}" for k, v in self.params.items()))
        if self.precision is not None:
            lines.append(f"precision: {self.precision} digits")
        if self.order is not None:
            lines.append(f"order: {self.order}")
        if self.grid:
            lines.append("grid: " + " ".join(self.grid))
        for key, value in self.summary.items():
            lines.append(f"{key}: {value}")
        if self.mismatch:
            lines.append("first mismatch: " + ", ".join(f"{k}={v}" for k, v in self.mismatch.items()))
        for row in self.rows:
            lines.append("  " + "  ".join(f"{k}={v}" for k, v in row.items()))
        return "\n".join(lines) + "\n"


def fmt_param(value) -> str:
    return str(value)


def fmt_real(value, digits: int) -> str:
    return render(value, digits)


def fmt_slope(value: Optional[float]) -> Optional[str]:
    return None if value is None else f"{value:.6f}"


def _outcome_row(label: str, value: str, report) -> Dict[str, object]:
    row = {label: value, "outcome": PASS if report.passed else FAIL}
    if report.mismatch:
        row.update(report.mismatch.to_dict())
    return row


def from_identity(report) -> VerificationReport:
    """Single q_formal.IdentityReport"""
    return VerificationReport(
        command="verify", target=f"family-{report.family}",
        params={"k": str(report.k)}, variant=report.variant, precision=None,
        order=report.order, grid=[], outcome=PASS if report.passed else FAIL,
        rows=[_outcome_row("variant", report.variant, report)],
        mismatch=report.mismatch.to_dict() if report.mismatch else None,
    )


def from_variants(family: str, k: int, order: int, reports: Sequence, winner: Optional[str]) -> VerificationReport:
    """All registered variants of a family, one row each"""
    rows = [_outcome_row("variant", r.variant, r) for r in reports]
    return VerificationReport(
        command="verify", target=f"family-{family}", params={"k": str(k)}, variant="all",
        precision=None, order=order, grid=[], outcome=PASS if winner else INCONCLUSIVE,
        rows=rows, summary={"winner": winner},
    )


def from_bailey(report) -> VerificationReport:
    """q_formal.BaileyCheckReport"""
    return VerificationReport(
        command="verify", target="bailey-pair", params={"pair": report.pair_id, "n_max": str(report.n_max)},
        variant="relation", precision=None, order=report.order, grid=[],
        outcome=PASS if report.passed else FAIL, rows=[_outcome_row("pair", report.pair_id, report)],
        mismatch=report.mismatch.to_dict() if report.mismatch else None,
    )


def _term_rows(spec, digits: int) -> List[Dict[str, object]]:
    return [{"power": term.power, "kind": term.kind,
             "exact": None if term.exact_part is None else str(term.exact_part),
             "coeff": fmt_real(term.coeff, digits)} for term in spec.terms]


def from_slope(report, spec=None) -> VerificationReport:
    """asym_engine.SlopeReport, optionally with the expansion terms"""
    digits = report.digits
    rows = [{"t": str(pt.t), "lhs": fmt_real(pt.lhs, digits), "truncation": fmt_real(pt.truncation, digits),
             "remainder": fmt_real(pt.remainder, digits)} for pt in report.points]
    summary = {"slope": fmt_slope(report.slope), "expected": report.expected, "pass": report.passed}
    if spec is not None:
        summary["terms"] = _term_rows(spec, digits)
    return VerificationReport(
        command="expand", target=report.target,
        params={k: fmt_param(v) for k, v in report.params.items()},
        variant=report.variant, precision=digits, order=report.order,
        grid=[str(pt.t) for pt in report.points], outcome=report.outcome, rows=rows, summary=summary,
    )


def from_arbitration(report, digits: int) -> VerificationReport:
    """asym_engine.ArbitrationReport"""
    rows = [{"variant": r.variant, "slope": fmt_slope(r.slope), "expected": r.expected,
             "pass": r.passed} for r in report.reports]
    first = report.reports[0]
    return VerificationReport(
        command="expand", target=report.target,
        params={k: fmt_param(v) for k, v in report.params.items()},
        variant="all", precision=digits, order=first.order,
        grid=[str(pt.t) for pt in first.points], outcome=report.outcome, rows=rows,
        summary={"winner": report.winner, "margin": fmt_slope(report.margin)},
    )


def from_lvalues(label: str, params: Dict[str, str], values: Sequence) -> VerificationReport:
    """Exact value table, values[n] at row n"""
    rows = [{"n": n, "value": str(v)} for n, v in enumerate(values)]
    return VerificationReport(
        command="lvalues", target=label, params=params, variant="exact", precision=None,
        order=len(values) - 1, grid=[], outcome=PASS, rows=rows,
    )
