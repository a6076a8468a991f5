"""Shared test fixtures."""

import pytest


@pytest.fixture(autouse=True)
def isolated_ledger(tmp_path, monkeypatch):
    """Route the run ledger to a throwaway SQLite file for every test."""
    import src.tracking.run_ledger as run_ledger
    from src.config import get_settings

    monkeypatch.setenv("SLICEKIT_LEDGER_URL", f"sqlite:///{tmp_path / 'ledger.db'}")
    get_settings.cache_clear()
    run_ledger._run_ledger = None
    yield
    run_ledger._run_ledger = None
    get_settings.cache_clear()
