"""Deterministic substream derivation.

All randomness in the pipeline flows from one integer seed.  Substreams are
derived by hashing the seed together with string labels (problem ids,
attempt ids, stage names), so a decision depends only on (seed, labels) and
never on evaluation order or thread interleaving.
"""

from __future__ import annotations

import hashlib
import random


def derive_int(seed: int, *parts: str) -> int:
    payload = f"{seed}|" + "|".join(parts)
    digest = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_u01(seed: int, *parts: str) -> float:
    """Uniform in [0, 1), a pure function of (seed, parts)."""
    return derive_int(seed, *parts) / 2**64


def derive_rng(seed: int, *parts: str) -> random.Random:
    return random.Random(derive_int(seed, *parts))
