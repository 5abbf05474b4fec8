"""pass@k estimators and the attempt ledger they read from.

Two definitions are computed side by side:

  cumulative  -- fraction of statements with at least one success among the
                 first k attempts; matches the operational reading of
                 "pass@k with a budget of k".
  unbiased    -- mean over statements of 1 - C(n-c, k) / C(n, k), where n is
                 the attempt count and c the success count; the combinatorial
                 estimator of the probability that a random k-subset of the
                 attempts contains a success.

The unbiased estimator is computed in exact rational arithmetic and only
converted to float at the end, so it agrees bit-for-bit with exhaustive
subset enumeration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from pathlib import Path

from ..errors import InsufficientAttempts


def unbiased_pass_at_k(n: int, c: int, k: int) -> float:
    if not 0 <= c <= n:
        raise ValueError(f"need 0 <= c <= n, got c={c}, n={n}")
    if not 1 <= k:
        raise ValueError(f"need k >= 1, got k={k}")
    if k > n:
        raise InsufficientAttempts(f"unbiased pass@{k} needs at least {k} attempts, have {n}")
    return float(1 - Fraction(comb(n - c, k), comb(n, k)))


@dataclass(frozen=True)
class Attempt:
    attempt_index: int
    correct: bool
    token_length: int


@dataclass
class AttemptLedger:
    """Per-statement attempt records; indices are dense from 1."""

    attempts: dict[str, list[Attempt]] = field(default_factory=dict)

    def record(self, name: str, correct: bool, token_length: int) -> Attempt:
        seq = self.attempts.setdefault(name, [])
        attempt = Attempt(attempt_index=len(seq) + 1, correct=correct, token_length=token_length)
        seq.append(attempt)
        return attempt

    def names(self) -> list[str]:
        return list(self.attempts)

    def min_attempts(self) -> int:
        return min((len(v) for v in self.attempts.values()), default=0)

    def mean_token_length(self) -> float:
        lengths = [a.token_length for seq in self.attempts.values() for a in seq]
        return sum(lengths) / len(lengths) if lengths else 0.0

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for name in self.attempts:
                for a in self.attempts[name]:
                    f.write(
                        json.dumps(
                            {
                                "name": name,
                                "attempt_index": a.attempt_index,
                                "correct": a.correct,
                                "token_length": a.token_length,
                            }
                        )
                        + "\n"
                    )

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "AttemptLedger":
        ledger = cls()
        with open(path, encoding="utf-8") as f:
            rows = [json.loads(line) for line in f if line.strip()]
        rows.sort(key=lambda r: (r["name"], r["attempt_index"]))
        for row in rows:
            seq = ledger.attempts.setdefault(row["name"], [])
            expected = len(seq) + 1
            if row["attempt_index"] != expected:
                raise ValueError(
                    f"{row['name']}: attempt_index {row['attempt_index']} breaks dense order (expected {expected})"
                )
            seq.append(
                Attempt(
                    attempt_index=row["attempt_index"],
                    correct=bool(row["correct"]),
                    token_length=int(row["token_length"]),
                )
            )
        return ledger


def cumulative_pass_at_k(ledger: AttemptLedger, k: int, names: list[str] | None = None) -> float:
    pool = names if names is not None else ledger.names()
    if not pool:
        raise ValueError("ledger is empty")
    solved = sum(1 for name in pool if any(a.correct for a in ledger.attempts.get(name, [])[:k]))
    return solved / len(pool)


def unbiased_over_ledger(ledger: AttemptLedger, k: int, names: list[str] | None = None) -> float:
    pool = names if names is not None else ledger.names()
    if not pool:
        raise ValueError("ledger is empty")
    values = []
    for name in pool:
        seq = ledger.attempts.get(name, [])
        n = len(seq)
        c = sum(1 for a in seq if a.correct)
        values.append(unbiased_pass_at_k(n, c, k))
    return sum(values) / len(values)


def pass_at_k(ledger: AttemptLedger, k: int, names: list[str] | None = None) -> dict[str, float]:
    """Both estimators for one k: {"cumulative": ..., "unbiased": ...}."""
    return {
        "cumulative": cumulative_pass_at_k(ledger, k, names),
        "unbiased": unbiased_over_ledger(ledger, k, names),
    }
