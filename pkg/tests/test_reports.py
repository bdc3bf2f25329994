import io
from fractions import Fraction

import pandas as pd

import csv_helper
from asym_engine import build_expansion, remainder_slope
from q_formal import verify_identity, verify_variants
from reports import (
    VerificationReport,
    from_identity,
    from_lvalues,
    from_slope,
    from_variants,
)


def test_identity_report_round_trip():
    report = from_identity(verify_identity("A", 1, 20))
    assert report.outcome == "PASS"
    assert report.passed
    assert VerificationReport.from_json(report.to_json()) == report


def test_variant_report_names_winner_and_losers():
    results, winner = verify_variants("B", 1, 20)
    report = from_variants("B", 1, 20, results, winner)
    assert report.summary["winner"] == "beta1"
    losers = [row for row in report.rows if row["outcome"] == "FAIL"]
    assert {row["variant"] for row in losers} == {"beta0", "beta2"}
    assert all("q_exp" in row for row in losers)
    assert VerificationReport.from_json(report.to_json()) == report


def test_json_is_deterministic():
    first = from_identity(verify_identity("C", 1, 15)).to_json()
    second = from_identity(verify_identity("C", 1, 15)).to_json()
    assert first == second


def test_text_rendering():
    report = from_lvalues("L-chi", {"d": "-4"}, [Fraction(1, 2), 0, Fraction(-1, 2)])
    text = report.to_text()
    assert text.splitlines()[0] == "lvalues L-chi [exact]: PASS"
    assert "  n=2  value=-1/2" in text


def test_slope_report_csv_columns():
    params = {"k": 1, "v": 0, "w": 1}
    result = remainder_slope("T11", params, 3, precision=50)
    report = from_slope(result, build_expansion("T11", params, 3, 50))
    assert report.outcome == "PASS-degenerate"
    assert VerificationReport.from_json(report.to_json()) == report
    df = pd.read_csv(io.StringIO(csv_helper.report_rows_to_csv(report)), dtype=str)
    assert list(df.columns) == ["target", "k", "v", "w", "t", "lhs", "truncation", "remainder",
                                "slope", "expected", "pass"]
    assert len(df) == 7
    assert df["t"].iloc[0] == "1/16"


def test_lvalues_csv():
    report = from_lvalues("L-lm", {"l": "2", "m": "1"}, [Fraction(1, 2), Fraction(-1, 2)])
    text = csv_helper.report_rows_to_csv(report)
    assert text.splitlines() == ["target,l,m,n,value", "L-lm,2,1,0,1/2", "L-lm,2,1,1,-1/2"]
