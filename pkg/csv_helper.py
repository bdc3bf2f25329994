"""
CSV Helper functions for the q-series verification suite
Handles exporting report rows and the run history via CSV
"""
import io
import logging

import pandas as pd

import db_manager

logger = logging.getLogger(__name__)

SLOPE_COLUMNS = ["t", "lhs", "truncation", "remainder", "slope", "expected", "pass"]


def _to_csv(df):
    csv_buffer = io.StringIO()
    df.to_csv(csv_buffer, index=False, lineterminator="\n")
    return csv_buffer.getvalue()


def report_rows_to_csv(report):
    """
    Render the detail rows of a VerificationReport as CSV

    Slope reports get the fixed column order target, params..., t, lhs,
    truncation, remainder, slope, expected, pass; every other report keeps
    its row keys in order, prefixed with target and the params.

    Args:
        report (reports.VerificationReport): the report

    Returns:
        str: CSV data as a string
    """
    param_names = list(report.params)
    records = []
    for row in report.rows:
        record = {"target": report.target}
        record.update({name: report.params[name] for name in param_names})
        record.update(row)
        records.append(record)

    if report.command == "expand" and "slope" in report.summary:
        for record in records:
            record["slope"] = report.summary["slope"]
            record["expected"] = report.summary["expected"]
            record["pass"] = report.summary["pass"]
        columns = ["target"] + param_names + SLOPE_COLUMNS
    else:
        columns = ["target"] + param_names
        for record in records:
            columns.extend(key for key in record if key not in columns)

    df = pd.DataFrame(records, columns=columns, dtype=object)
    return _to_csv(df)


def export_runs_to_csv(limit=None):
    """
    Export the run history from the database to CSV

    Returns:
        str: CSV data as a string, None when there are no runs
    """
    try:
        runs = db_manager.list_runs(limit)

        if not runs:
            return None

        df = pd.DataFrame(runs)
        return _to_csv(df)

    except Exception as e:
        logger.error("error exporting run history to CSV: %s", e)
        return None
