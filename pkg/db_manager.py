from models import VerificationRun, Baseline, Session
import hashlib
import logging
import time
from sqlalchemy.exc import SQLAlchemyError, OperationalError

from hp_real import MIN_DIGITS, PrecisionContext, to_hreal

logger = logging.getLogger(__name__)


def setup_database(db_url=None):
    """Initialize the run-history store; connection retries happen in models.setup_database"""
    # Import here so a test can reconfigure models before the first call
    from models import setup_database as _setup

    try:
        _setup(db_url)
    except SQLAlchemyError as e:
        logger.error("database setup failed: %s", e)
        raise
    logger.info("database setup completed successfully")


def execute_with_retry(func, *args, **kwargs):
    """Execute a database function with retry logic for handling connection issues"""
    max_tries = 5
    retry_delay = 1  # seconds

    for attempt in range(max_tries):
        try:
            return func(*args, **kwargs)
        except (OperationalError, SQLAlchemyError) as e:
            if attempt < max_tries - 1:
                logger.warning("database operation failed (attempt %d/%d): %s; retrying in %ss",
                               attempt + 1, max_tries, e, retry_delay)
                time.sleep(retry_delay)
                retry_delay *= 2  # Exponential backoff
            else:
                logger.error("failed after %d attempts: %s", max_tries, e)
                raise


def fingerprint(report_json):
    return hashlib.sha256(report_json.encode("utf-8")).hexdigest()


def save_report(report):
    """
    Store a VerificationReport in the run history

    Args:
        report (reports.VerificationReport): the report to store

    Returns:
        int | None: id of the new run, None if the store is unavailable
    """
    def _save_report(report):
        session = Session()
        try:
            payload = report.to_json()
            run = VerificationRun(
                command=report.command,
                target=report.target,
                variant=report.variant,
                outcome=report.outcome,
                fingerprint=fingerprint(payload),
                report=payload,
            )
            session.add(run)
            session.commit()
            return run.id
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    try:
        return execute_with_retry(_save_report, report)
    except Exception as e:
        logger.error("failed to save report: %s", e)
        return None


def list_runs(limit=None):
    """Run history, newest first, as a list of dictionaries"""
    def _list_runs(limit):
        session = Session()
        try:
            query = session.query(VerificationRun).order_by(VerificationRun.id.desc())
            if limit is not None:
                query = query.limit(limit)
            return [{"id": run.id, "command": run.command, "target": run.target,
                     "variant": run.variant, "outcome": run.outcome,
                     "fingerprint": run.fingerprint,
                     "created_at": run.created_at.isoformat() if run.created_at else None}
                    for run in query.all()]
        finally:
            session.close()

    try:
        return execute_with_retry(_list_runs, limit)
    except Exception as e:
        logger.error("failed to list runs: %s", e)
        return []


def get_run_report(run_id):
    """Stored report JSON of one run, or None"""
    def _get_run_report(run_id):
        session = Session()
        try:
            run = session.get(VerificationRun, run_id)
            return run.report if run else None
        finally:
            session.close()

    try:
        return execute_with_retry(_get_run_report, run_id)
    except Exception as e:
        logger.error("failed to load run %s: %s", run_id, e)
        return None


def record_baseline(name, value, precision):
    """Add a regression baseline; False if the name already exists"""
    def _record_baseline(name, value, precision):
        session = Session()
        try:
            if session.query(Baseline).filter_by(name=name).first():
                return False
            session.add(Baseline(name=name, value=value, precision=precision))
            session.commit()
            return True
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    try:
        return execute_with_retry(_record_baseline, name, value, precision)
    except Exception as e:
        logger.error("failed to record baseline %s: %s", name, e)
        return False


def get_baseline(name):
    """Get a baseline as a dictionary, or None"""
    def _get_baseline(name):
        session = Session()
        try:
            row = session.query(Baseline).filter_by(name=name).first()
            if row is None:
                return None
            return {"name": row.name, "value": row.value, "precision": row.precision}
        finally:
            session.close()

    try:
        return execute_with_retry(_get_baseline, name)
    except Exception as e:
        logger.error("failed to get baseline %s: %s", name, e)
        return None


def check_baseline(name, value, digits):
    """
    Compare a value against a stored baseline

    Args:
        name (str): baseline name
        value (str): decimal string to check
        digits (int): number of significant digits that must agree

    Returns:
        bool | None: agreement to `digits` digits, None if no baseline exists
    """
    stored = get_baseline(name)
    if stored is None:
        return None
    p = PrecisionContext(max(digits + 5, stored["precision"] + 5, MIN_DIGITS))
    expected = to_hreal(stored["value"], p)
    got = to_hreal(value, p)
    tol = p.ctx.mpf(10) ** (1 - digits) * max(abs(expected), p.ctx.mpf(10) ** (-digits))
    ok = abs(got - expected) <= tol
    if not ok:
        logger.warning("baseline %s mismatch: stored %s, got %s", name, stored["value"], value)
    return bool(ok)
