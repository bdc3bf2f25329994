import pytest
from sqlalchemy.exc import ArgumentError, OperationalError

import csv_helper
import db_manager
import models
from reports import VerificationReport, from_lvalues


def make_report(target="L-chi"):
    return from_lvalues(target, {"d": "-4"}, [1, 0])


def test_get_db_url_fallbacks(monkeypatch):
    monkeypatch.delenv("QSERIES_DB_URL", raising=False)
    monkeypatch.delenv("DATABASE_URL", raising=False)
    assert models.get_db_url() == models.DEFAULT_DB_URL
    monkeypatch.setenv("DATABASE_URL", "sqlite:///other.db")
    assert models.get_db_url() == "sqlite:///other.db"
    monkeypatch.setenv("QSERIES_DB_URL", "sqlite:///mine.db")
    assert models.get_db_url() == "sqlite:///mine.db"


def test_save_and_list_runs(db):
    first = db_manager.save_report(make_report("first"))
    second = db_manager.save_report(make_report("second"))
    assert second > first
    runs = db_manager.list_runs()
    assert [run["target"] for run in runs] == ["second", "first"]
    assert db_manager.list_runs(limit=1)[0]["id"] == second


def test_stored_report_round_trips(db):
    report = make_report()
    run_id = db_manager.save_report(report)
    stored = db_manager.get_run_report(run_id)
    assert VerificationReport.from_json(stored) == report
    runs = db_manager.list_runs()
    assert runs[0]["fingerprint"] == db_manager.fingerprint(report.to_json())
    assert db_manager.get_run_report(run_id + 100) is None


def test_baselines(db):
    assert db_manager.get_baseline("x") is None
    assert db_manager.check_baseline("x", "1.0", 10) is None
    assert db_manager.record_baseline("x", "0.12345678901234567890", 20)
    assert not db_manager.record_baseline("x", "9", 20)
    assert db_manager.get_baseline("x") == {"name": "x", "value": "0.12345678901234567890", "precision": 20}
    assert db_manager.check_baseline("x", "0.1234567890123456", 15)
    assert not db_manager.check_baseline("x", "0.1234567", 15)


def test_baseline_check_below_minimum_precision(db):
    assert db_manager.record_baseline("y", "0.1234567890123456789", 20)
    assert db_manager.check_baseline("y", "0.1234567890123456789", 15)
    assert db_manager.check_baseline("y", "0.12345678901234", 10)
    assert not db_manager.check_baseline("y", "0.1234567899", 12)


def test_bad_url_fails_without_retrying(monkeypatch):
    def no_sleep(seconds):
        raise AssertionError("a bad URL must not be retried")

    monkeypatch.setattr(models.time, "sleep", no_sleep)
    monkeypatch.setattr(db_manager.time, "sleep", no_sleep)
    with pytest.raises(ArgumentError):
        db_manager.setup_database("nosuchdriver://x")


def test_export_runs_to_csv(db):
    assert csv_helper.export_runs_to_csv() is None
    db_manager.save_report(make_report())
    text = csv_helper.export_runs_to_csv()
    assert text.splitlines()[0] == "id,command,target,variant,outcome,fingerprint,created_at"


def test_execute_with_retry_recovers(monkeypatch):
    monkeypatch.setattr(db_manager.time, "sleep", lambda s: None)
    calls = []

    def flaky():
        calls.append(1)
        if len(calls) < 3:
            raise OperationalError("select 1", {}, Exception("gone away"))
        return "ok"

    assert db_manager.execute_with_retry(flaky) == "ok"
    assert len(calls) == 3


def test_execute_with_retry_gives_up(monkeypatch):
    monkeypatch.setattr(db_manager.time, "sleep", lambda s: None)

    def broken():
        raise OperationalError("select 1", {}, Exception("gone away"))

    with pytest.raises(OperationalError):
        db_manager.execute_with_retry(broken)
