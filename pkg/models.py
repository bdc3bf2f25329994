# Design the ORM model for the run-history store
# Defaults to a local SQLite file; any SQLAlchemy URL works via QSERIES_DB_URL

from sqlalchemy import Column, String, Integer, Text, DateTime, create_engine
from sqlalchemy.orm import declarative_base, sessionmaker
from sqlalchemy.exc import OperationalError
import os
import time
import logging
import datetime
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

# Create a base class for declarative models
Base = declarative_base()

DEFAULT_DB_URL = "sqlite:///qseries_runs.db"

# Define ORM models

class VerificationRun(Base):
    __tablename__ = 'verification_runs'

    id = Column(Integer, primary_key=True)
    command = Column(String(20), nullable=False)
    target = Column(String(50), nullable=False)
    variant = Column(String(50))
    outcome = Column(String(20), nullable=False)
    fingerprint = Column(String(64), nullable=False)  # sha256 of the report JSON
    created_at = Column(DateTime, default=lambda: datetime.datetime.now(datetime.timezone.utc))
    report = Column(Text, nullable=False)


class Baseline(Base):
    __tablename__ = 'baselines'

    id = Column(Integer, primary_key=True)
    name = Column(String(100), unique=True, nullable=False)
    value = Column(Text, nullable=False)  # decimal string
    precision = Column(Integer, nullable=False)
    created_at = Column(DateTime, default=lambda: datetime.datetime.now(datetime.timezone.utc))


# Database connection and session management
def get_db_url():
    """Get database URL from QSERIES_DB_URL, then DATABASE_URL, then the local SQLite file"""
    db_url = os.environ.get('QSERIES_DB_URL') or os.environ.get('DATABASE_URL')
    if db_url:
        return db_url
    return DEFAULT_DB_URL


# Session factory; bound to an engine by configure()
Session = sessionmaker()
engine = None


def configure(db_url=None):
    """Create the engine for db_url (or the environment URL) and bind Session to it"""
    global engine
    db_url = db_url or get_db_url()
    options = {"pool_pre_ping": True, "echo": False}
    if not db_url.startswith("sqlite"):
        options.update(pool_recycle=300, pool_timeout=30, pool_size=3, max_overflow=5)
    if engine is not None:
        engine.dispose()
    engine = create_engine(db_url, **options)
    Session.configure(bind=engine)
    logger.debug("bound session factory to %s", engine.url.render_as_string(hide_password=True))
    return engine


def setup_database(db_url=None):
    """
    Initialize the database engine and tables

    A bad URL or missing driver raises at once; only connection failures are retried.
    """
    configure(db_url)

    max_retries = 5
    retry_delay = 1  # Initial delay in seconds

    for attempt in range(max_retries):
        try:
            # Create tables if they don't exist
            Base.metadata.create_all(engine, checkfirst=True)
            logger.info("created run-history tables on attempt %d", attempt + 1)
            return engine
        except OperationalError as e:
            if attempt < max_retries - 1:
                logger.warning("error setting up tables (attempt %d/%d): %s; retrying in %ss",
                               attempt + 1, max_retries, e, retry_delay)
                time.sleep(retry_delay)
                retry_delay *= 2  # Exponential backoff
            else:
                logger.error("failed to set up database after %d attempts: %s", max_retries, e)
                raise
