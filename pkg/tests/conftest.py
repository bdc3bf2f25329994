import random

import pytest

import db_manager
import models


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def db(tmp_path, monkeypatch):
    """Run-history store in a temporary SQLite file"""
    url = f"sqlite:///{tmp_path / 'runs.db'}"
    monkeypatch.setenv("QSERIES_DB_URL", url)
    db_manager.setup_database(url)
    yield url
    if models.engine is not None:
        models.engine.dispose()
