"""Attempt-sampling evaluation over a benchmark.

For each statement, up to `budget` independent attempts are generated,
parsed, and verified; every attempt lands in the ledger as (index, correct,
token_length).  Early stopping per statement is available but off by
default so the full attempt pool stays usable for unbiased pass@k at every
k <= budget.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from ..errors import PolicyUnavailable
from ..pattern import parse_trace
from ..policy import PolicyClient
from ..rollout import VerifierClient
from ..verify import VerificationItem
from .benchmark import BenchmarkStatement
from .passk import AttemptLedger, pass_at_k, unbiased_over_ledger, cumulative_pass_at_k
from .report import KPoint, PassAtKReport

log = logging.getLogger(__name__)


def evaluate(
    bench: Sequence[BenchmarkStatement],
    policy: PolicyClient,
    verifier: VerifierClient,
    budget: int,
    max_tokens: int = 32768,
    temperature: float = 1.0,
    early_stop: bool = False,
    parallelism: int = 4,
    generation_chunk: int = 16,
) -> AttemptLedger:
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not bench:
        raise ValueError("benchmark is empty")

    ledger = AttemptLedger()

    def run_statement(stmt: BenchmarkStatement) -> list[tuple[bool, int]]:
        attempts: list[tuple[bool, int]] = []
        remaining = budget
        while remaining > 0:
            k = min(generation_chunk, remaining)
            try:
                completions = policy.generate(stmt.statement, k, max_tokens, temperature)
            except Exception as exc:
                raise PolicyUnavailable(f"policy failed for {stmt.name}: {exc}") from exc
            traces = [parse_trace(c.text) for c in completions]
            base = len(attempts)
            items = []
            for i, trace in enumerate(traces):
                if trace.final_proof is not None:
                    items.append(VerificationItem(f"{stmt.name}:{base + i}", trace.final_proof))
            verdicts = {}
            if items:
                for result in verifier.verify_batch(items, mode="final_proof_only"):
                    verdicts[result.attempt_id] = result.correct
            stop = False
            for i, trace in enumerate(traces):
                correct = verdicts.get(f"{stmt.name}:{base + i}", False)
                attempts.append((correct, trace.token_count))
                if early_stop and correct:
                    stop = True
                    break
            remaining -= k
            if stop:
                break
        return attempts

    with ThreadPoolExecutor(max_workers=parallelism) as ex:
        per_statement = list(ex.map(run_statement, bench))

    # Ledger appends happen single-threaded over frozen per-statement results,
    # keeping attempt indices dense regardless of scheduling.
    for stmt, attempts in zip(bench, per_statement):
        for correct, tokens in attempts:
            ledger.record(stmt.name, correct, tokens)
    return ledger


def compute_report(
    ledger: AttemptLedger,
    bench: Sequence[BenchmarkStatement],
    ks: Sequence[int],
    system: str = "proofpipe",
    size: str = "n/a",
) -> PassAtKReport:
    """Assemble per-k estimates with per-subset-tag breakdowns."""
    names = [s.name for s in bench]
    overall = {}
    for k in ks:
        values = pass_at_k(ledger, k, names)
        overall[k] = KPoint(cumulative=values["cumulative"], unbiased=values["unbiased"])
    subsets: dict[str, dict[int, KPoint]] = {}
    tags = sorted({tag for s in bench for tag in s.subset_tags})
    for tag in tags:
        tagged = [s.name for s in bench if tag in s.subset_tags]
        if not tagged:
            continue
        subsets[tag] = {
            k: KPoint(
                cumulative=cumulative_pass_at_k(ledger, k, tagged),
                unbiased=unbiased_over_ledger(ledger, k, tagged),
            )
            for k in ks
        }
    return PassAtKReport(
        system=system,
        size=size,
        statements=len(names),
        mean_token_length=ledger.mean_token_length(),
        ks=sorted(ks),
        overall=overall,
        subsets=subsets,
    )
