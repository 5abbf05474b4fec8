"""Offline ledger analysis: the one piece of math the client computes itself.

The ledger is the evaluation harness's JSONL: one attempt per line with
{name, attempt_index, correct, token_length}.  pass@k mirrors the server's
two definitions; the unbiased estimator uses the numerically stable product
form

    1 - prod_{i=0..k-1} (n - c - i) / (n - i)

which equals 1 - C(n-c, k) / C(n, k).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


class InsufficientAttempts(Exception):
    """Unbiased pass@k needs at least k attempts per statement."""


@dataclass(frozen=True)
class LedgerAttempt:
    name: str
    attempt_index: int
    correct: bool
    token_length: int


def load_ledger(path: str | Path) -> dict[str, list[LedgerAttempt]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            data = json.loads(line)
            rows.append(
                LedgerAttempt(
                    name=data["name"],
                    attempt_index=int(data["attempt_index"]),
                    correct=bool(data["correct"]),
                    token_length=int(data["token_length"]),
                )
            )
    rows.sort(key=lambda a: (a.name, a.attempt_index))
    ledger: dict[str, list[LedgerAttempt]] = {}
    for attempt in rows:
        seq = ledger.setdefault(attempt.name, [])
        if attempt.attempt_index != len(seq) + 1:
            raise ValueError(
                f"{attempt.name}: attempt_index {attempt.attempt_index} breaks dense order"
            )
        seq.append(attempt)
    return ledger


def estimate_pass_at_k(n: int, c: int, k: int) -> float:
    if not 0 <= c <= n:
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    if k < 1:
        raise ValueError(f"need k >= 1, got k={k}")
    if k > n:
        raise InsufficientAttempts(f"pass@{k} needs at least {k} attempts, have {n}")
    if n - c < k:
        return 1.0
    product = 1.0
    for i in range(k):
        product *= (n - c - i) / (n - i)
    return 1.0 - product


def pass_at_k(attempts: dict[str, list[LedgerAttempt]], k: int) -> dict[str, float]:
    """Both estimators over a loaded ledger: cumulative and unbiased."""
    if not attempts:
        raise ValueError("ledger is empty")
    solved_in_first_k = 0
    unbiased_values = []
    for name, seq in attempts.items():
        solved_in_first_k += any(a.correct for a in seq[:k])
        n = len(seq)
        c = sum(1 for a in seq if a.correct)
        unbiased_values.append(estimate_pass_at_k(n, c, k))
    count = len(attempts)
    return {
        "cumulative": solved_in_first_k / count,
        "unbiased": sum(unbiased_values) / count,
    }
