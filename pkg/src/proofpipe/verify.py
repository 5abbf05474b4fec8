"""Batch proof verification: pool responses mapped to binary rewards.

A proof is correct exactly when the compiler run produced no error-severity
message, no sorries, and the submitted source carries no `sorry`/`admit`
token outside comments and string literals.  reward is 1 for a correct
proof and 0 otherwise; the three fields (reward, correct, failure_kind)
are always mutually consistent.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

from .errors import PoolShutdown, ServiceUnavailable
from .repl.pool import ReplPool, SubmitResult
from .repl.wire import ReplMessage, ReplSorry

FailureKind = Literal["none", "compile_error", "contains_sorry", "timeout", "crash"]

_PLACEHOLDER_RE = re.compile(r"(?<![A-Za-z0-9_'])(sorry|admit)(?![A-Za-z0-9_'])")


def strip_comments_and_strings(source: str) -> str:
    """Blank out line comments, nested block comments, and string literals.

    Character offsets are preserved so the residue can be scanned in place.
    """
    out = list(source)
    i = 0
    n = len(source)
    depth = 0
    in_string = False
    while i < n:
        ch = source[i]
        nxt = source[i + 1] if i + 1 < n else ""
        if in_string:
            if ch == "\\" and i + 1 < n:
                out[i] = out[i + 1] = " "
                i += 2
                continue
            if ch == '"':
                in_string = False
            out[i] = " "
            i += 1
            continue
        if depth > 0:
            if ch == "/" and nxt == "-":
                depth += 1
                out[i] = out[i + 1] = " "
                i += 2
                continue
            if ch == "-" and nxt == "/":
                depth -= 1
                out[i] = out[i + 1] = " "
                i += 2
                continue
            if ch != "\n":
                out[i] = " "
            i += 1
            continue
        if ch == "-" and nxt == "-":
            while i < n and source[i] != "\n":
                out[i] = " "
                i += 1
            continue
        if ch == "/" and nxt == "-":
            depth = 1
            out[i] = out[i + 1] = " "
            i += 2
            continue
        if ch == '"':
            in_string = True
            out[i] = " "
            i += 1
            continue
        i += 1
    return "".join(out)


def contains_placeholder(source: str) -> bool:
    """True when the source has a `sorry` or `admit` token in live code."""
    return bool(_PLACEHOLDER_RE.search(strip_comments_and_strings(source)))


@dataclass(frozen=True)
class VerificationItem:
    attempt_id: str
    source: str


@dataclass
class VerificationResult:
    attempt_id: str
    correct: bool
    reward: int
    messages: list[ReplMessage] = field(default_factory=list)
    sorries: list[ReplSorry] = field(default_factory=list)
    elapsed_ms: int = 0
    cache_hit: bool = False
    failure_kind: FailureKind = "none"

    def __post_init__(self):
        assert (self.reward == 1) == self.correct == (self.failure_kind == "none")


def result_from_submit(attempt_id: str, source: str, sub: SubmitResult) -> VerificationResult:
    if sub.status == "timeout":
        kind: FailureKind = "timeout"
    elif sub.status == "crash":
        kind = "crash"
    elif sub.response.has_errors():
        kind = "compile_error"
    elif sub.response.sorries or contains_placeholder(source):
        kind = "contains_sorry"
    else:
        kind = "none"
    correct = kind == "none"
    return VerificationResult(
        attempt_id=attempt_id,
        correct=correct,
        reward=1 if correct else 0,
        messages=sub.response.messages,
        sorries=sub.response.sorries,
        elapsed_ms=sub.response.elapsed_ms,
        cache_hit=sub.cache_hit,
        failure_kind=kind,
    )


class BatchVerifier:
    """Fans verification items out across a pool, order preserved.

    mode "final_proof_only" prepends the configured standard header so the
    RL pipeline can submit just the extracted proof block.
    """

    def __init__(self, pool: ReplPool, final_proof_header: str = "", max_parallel: int | None = None):
        self.pool = pool
        self.final_proof_header = final_proof_header
        self.max_parallel = max_parallel

    def verify_batch(
        self,
        items: Sequence[VerificationItem],
        timeout_ms: int | None = None,
        mode: str = "full_source",
    ) -> list[VerificationResult]:
        if not items:
            raise ValueError("items must be non-empty")
        ids = [it.attempt_id for it in items]
        if len(set(ids)) != len(ids):
            raise ValueError("attempt_ids must be unique within a request")
        if not self.pool.alive:
            raise ServiceUnavailable("verification pool is not running")

        def one(item: VerificationItem) -> VerificationResult:
            source = item.source
            if mode == "final_proof_only" and self.final_proof_header:
                source = self.final_proof_header.rstrip("\n") + "\n\n" + source
            try:
                sub = self.pool.submit(source, timeout_ms=timeout_ms)
            except PoolShutdown as exc:
                raise ServiceUnavailable(str(exc)) from exc
            return result_from_submit(item.attempt_id, source, sub)

        workers = self.max_parallel or max(1, len(self.pool.worker_ids()) * 2)
        with ThreadPoolExecutor(max_workers=min(workers, len(items))) as ex:
            return list(ex.map(one, items))
