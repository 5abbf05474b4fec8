"""Thin typed client for the proofpipe verification service.

Designed for embedding in external training loops: remote calls go through
ClientSession; ledger analysis (load_ledger, pass_at_k) works offline with
no server at all.  Sessions are not thread-safe; create one per worker.
"""

from .ledger import LedgerAttempt, estimate_pass_at_k, load_ledger, pass_at_k
from .session import (
    ClientError,
    ClientSession,
    Health,
    RetryPolicy,
    SchemaMismatch,
    TransportError,
    VerifyItem,
    VerifyResult,
)

SCHEMA_VERSION = "1.0"

__all__ = [
    "SCHEMA_VERSION",
    "ClientSession",
    "RetryPolicy",
    "VerifyItem",
    "VerifyResult",
    "Health",
    "ClientError",
    "TransportError",
    "SchemaMismatch",
    "LedgerAttempt",
    "load_ledger",
    "pass_at_k",
    "estimate_pass_at_k",
]
