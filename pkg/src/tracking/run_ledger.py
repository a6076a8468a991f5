"""Tamper-Evident Run Ledger"""

import hashlib
import json
import warnings
from datetime import datetime, timezone
from typing import Any, Optional

from sqlalchemy import create_engine, text
from sqlalchemy.exc import SQLAlchemyError

from src.config import get_settings


class LedgerWriteWarning(UserWarning):
    """A ledger row could not be written; the run itself continues."""


_CREATE_TABLE = """
    CREATE TABLE IF NOT EXISTS run_ledger (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        event_timestamp TEXT NOT NULL,
        action TEXT NOT NULL,
        stage TEXT,
        seed INTEGER,
        config_digest TEXT,
        details TEXT,
        previous_hash TEXT,
        current_hash TEXT NOT NULL
    )
"""


class RunLedger:
    """
    Append-only record of pipeline runs.

    Features:
    - Hash chaining for tamper detection
    - Seed and config digest stored with every row
    - Timestamps live here only, never in deterministic outputs
    """

    def __init__(self, database_url: Optional[str] = None, enabled: Optional[bool] = None):
        """Initialize with database connection."""
        settings = get_settings()
        self._db_url = database_url or settings.ledger_url
        self.enabled = settings.ledger_enabled if enabled is None else enabled
        self._engine = create_engine(self._db_url) if self.enabled else None
        self._last_hash: Optional[str] = None
        if self._engine is not None:
            with self._engine.begin() as conn:
                conn.execute(text(_CREATE_TABLE))

    def _get_last_hash(self) -> Optional[str]:
        """Hash of the newest row."""
        if self._last_hash:
            return self._last_hash
        with self._engine.connect() as conn:
            row = conn.execute(
                text("SELECT current_hash FROM run_ledger ORDER BY id DESC LIMIT 1")
            ).fetchone()
        self._last_hash = row[0] if row else None
        return self._last_hash

    @staticmethod
    def _compute_hash(entry: dict, previous_hash: Optional[str]) -> str:
        """sha256 of the canonical entry, prefixed by the previous hash."""
        payload = json.dumps(entry, sort_keys=True, default=str)
        if previous_hash:
            payload = previous_hash + payload
        return hashlib.sha256(payload.encode()).hexdigest()

    def log(
        self,
        action: str,
        stage: Optional[str] = None,
        seed: Optional[int] = None,
        config_digest: Optional[str] = None,
        details: Optional[dict[str, Any]] = None,
    ) -> Optional[int]:
        """
        Record a pipeline action.

        Args:
            action: What ran (e.g., "GENERATE_DATASET", "TRAIN_MODEL")
            stage: Pipeline stage name, if part of a larger run
            seed: Seed the action ran with
            config_digest: Digest of the resolved configuration
            details: Extra JSON-serializable context (paths, metrics)

        Returns:
            Row id, or None when the ledger is disabled
        """
        if not self.enabled:
            return None

        entry = {
            "event_timestamp": datetime.now(timezone.utc).isoformat(),
            "action": action,
            "stage": stage,
            "seed": seed,
            "config_digest": config_digest,
            "details": json.dumps(details, sort_keys=True, default=str) if details else None,
        }
        try:
            previous_hash = self._get_last_hash()
            current_hash = self._compute_hash(entry, previous_hash)
            with self._engine.begin() as conn:
                result = conn.execute(
                    text("""
                        INSERT INTO run_ledger (
                            event_timestamp, action, stage, seed, config_digest,
                            details, previous_hash, current_hash
                        ) VALUES (
                            :event_timestamp, :action, :stage, :seed, :config_digest,
                            :details, :previous_hash, :current_hash
                        )
                    """),
                    {**entry, "previous_hash": previous_hash, "current_hash": current_hash},
                )
                row_id = result.lastrowid
            self._last_hash = current_hash
            return row_id
        except SQLAlchemyError as e:
            warnings.warn(f"run ledger write failed: {e}", LedgerWriteWarning)
            return None

    def entries(self, limit: int = 1000) -> list[dict]:
        """Oldest-first rows as dictionaries."""
        if not self.enabled:
            return []
        with self._engine.connect() as conn:
            result = conn.execute(
                text("SELECT * FROM run_ledger ORDER BY id LIMIT :limit"), {"limit": limit}
            )
            return [dict(row._mapping) for row in result]

    def verify_chain_integrity(self, limit: int = 1000) -> tuple[bool, Optional[int]]:
        """
        Verify the hash chain.

        Returns:
            Tuple of (is_valid, first_invalid_id)
            If valid, first_invalid_id is None
        """
        if not self.enabled:
            return True, None
        try:
            rows = self.entries(limit)
        except SQLAlchemyError:
            return False, None

        previous_hash = None
        for row in rows:
            entry = {
                key: row[key]
                for key in ("event_timestamp", "action", "stage", "seed", "config_digest", "details")
            }
            if row["previous_hash"] != previous_hash:
                return False, row["id"]
            if self._compute_hash(entry, previous_hash) != row["current_hash"]:
                return False, row["id"]
            previous_hash = row["current_hash"]
        return True, None


# Singleton instance
_run_ledger: Optional[RunLedger] = None


def get_run_ledger() -> RunLedger:
    """Get or create singleton run ledger."""
    global _run_ledger
    if _run_ledger is None:
        _run_ledger = RunLedger()
    return _run_ledger


def log_action(action: str, **kwargs) -> Optional[int]:
    """Convenience function for logging actions."""
    return get_run_ledger().log(action, **kwargs)
