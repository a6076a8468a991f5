"""Tracking Package - Run Ledger and Content Hashes"""

from src.tracking.hashing import canonical_json, config_digest, sha256_content, sha256_file
from src.tracking.run_ledger import LedgerWriteWarning, RunLedger, get_run_ledger, log_action

__all__ = [
    "RunLedger",
    "LedgerWriteWarning",
    "get_run_ledger",
    "log_action",
    "canonical_json",
    "config_digest",
    "sha256_content",
    "sha256_file",
]
