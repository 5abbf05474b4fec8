"""The problem store: a single-writer record registry with an audit trail.

Mutations are serialized through one lock and logged append-only as JSONL
events; periodic snapshots capture full state.  Construction balances human
and autoformalized problems 1:1 by resampling the smaller side with
replacement, stratified over difficulty bins.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from pathlib import Path
from typing import Sequence

from ..errors import EmptyProblemSet
from ..rng import derive_rng
from .judge import RaterClient, difficulty_to_bin, rate_difficulty
from .records import ALLOWED_TRANSITIONS, ProblemRecord

log = logging.getLogger(__name__)


class ProblemStore:
    def __init__(self, event_log_path: str | Path | None = None):
        self._records: dict[str, ProblemRecord] = {}
        self._lock = threading.RLock()
        self._seq = 0
        self._event_log_path = Path(event_log_path) if event_log_path else None

    # -- events --------------------------------------------------------------

    def _log_event(self, kind: str, problem_id: str, **payload) -> None:
        self._seq += 1
        if self._event_log_path is None:
            return
        event = {"seq": self._seq, "ts": time.time(), "event": kind, "problem_id": problem_id, **payload}
        with open(self._event_log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(event) + "\n")

    # -- record access ---------------------------------------------------------

    def add(self, record: ProblemRecord) -> None:
        with self._lock:
            if record.problem_id in self._records:
                raise ValueError(f"duplicate problem_id {record.problem_id}")
            self._records[record.problem_id] = record
            self._log_event("added", record.problem_id, state=record.state)

    def get(self, problem_id: str) -> ProblemRecord:
        with self._lock:
            return self._records[problem_id]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def records(self) -> list[ProblemRecord]:
        with self._lock:
            return list(self._records.values())

    def active_records(self) -> list[ProblemRecord]:
        with self._lock:
            return [r for r in self._records.values() if r.state == "active"]

    # Sampling interface used by the rollout pipeline.
    def active_problems(self) -> list[ProblemRecord]:
        return self.active_records()

    # -- transitions -----------------------------------------------------------

    def transition(self, problem_id: str, new_state: str, reason: str = "") -> None:
        with self._lock:
            record = self._records[problem_id]
            if record.state == new_state:
                return
            if (record.state, new_state) not in ALLOWED_TRANSITIONS:
                raise ValueError(f"illegal transition {record.state} -> {new_state} for {problem_id}")
            old = record.state
            record.state = new_state
            record.note = reason
            self._log_event("state_change", problem_id, from_state=old, to_state=new_state, reason=reason)

    def record_solve(self, problem_id: str, iteration: int, successes: int, attempts: int) -> None:
        with self._lock:
            self._records[problem_id].record_solve(iteration, successes, attempts)
            self._log_event(
                "solve_point", problem_id, iteration=iteration, successes=successes, attempts=attempts
            )

    def import_annotation(self, problem_id: str, statement: str, informal_text: str | None = None) -> None:
        """Return an annotated problem to circulation with its fixed statement."""
        with self._lock:
            record = self._records[problem_id]
            record.statement = statement
            if informal_text is not None:
                record.informal_text = informal_text
            self.transition(problem_id, "active", reason="annotated")

    # -- persistence -------------------------------------------------------------

    def save_snapshot(self, path: str | Path) -> None:
        with self._lock:
            rows = [r.to_dict() for r in self._records.values()]
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")

    @classmethod
    def load_snapshot(cls, path: str | Path, event_log_path: str | Path | None = None) -> "ProblemStore":
        store = cls(event_log_path=event_log_path)
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    record = ProblemRecord.from_dict(json.loads(line))
                    store._records[record.problem_id] = record
        return store


def build_store(
    human: Sequence[ProblemRecord],
    auto: Sequence[ProblemRecord],
    rater: RaterClient,
    bins: int = 5,
    seed: int = 0,
    event_log_path: str | Path | None = None,
) -> ProblemStore:
    """Rate, bin, and combine the two provenances at an exact 1:1 ratio.

    The smaller side is resampled with replacement up to the larger side's
    count; every distinct source record appears at least once, and extra
    draws are stratified toward the least-occupied difficulty bins.
    """
    if not human or not auto:
        raise EmptyProblemSet("both human and auto sets must be non-empty")

    def rated(records: Sequence[ProblemRecord], provenance: str) -> list[ProblemRecord]:
        out = []
        for r in records:
            rating = rate_difficulty(r.informal_text, r.statement, rater)
            out.append(
                ProblemRecord(
                    problem_id=r.problem_id,
                    statement=r.statement,
                    informal_text=r.informal_text,
                    provenance=provenance,
                    difficulty_bin=difficulty_to_bin(rating, bins),
                )
            )
        return out

    human_rated = rated(human, "human")
    auto_rated = rated(auto, "auto")

    small, large = (human_rated, auto_rated) if len(human_rated) <= len(auto_rated) else (auto_rated, human_rated)
    resampled = _stratified_resample(small, len(large), bins, seed)

    store = ProblemStore(event_log_path=event_log_path)
    for record in (*large, *resampled):
        store.add(record)
    return store


def _stratified_resample(
    records: Sequence[ProblemRecord], target: int, bins: int, seed: int
) -> list[ProblemRecord]:
    """All originals once, then extra draws from the least-occupied bins."""
    rng = derive_rng(seed, "resample")
    out = list(records)
    by_bin: dict[int, list[ProblemRecord]] = {}
    occupancy: dict[int, int] = {}
    for r in records:
        by_bin.setdefault(r.difficulty_bin, []).append(r)
        occupancy[r.difficulty_bin] = occupancy.get(r.difficulty_bin, 0) + 1
    clone_counter = 0
    while len(out) < target:
        b = min(by_bin, key=lambda x: (occupancy[x], x))
        source = rng.choice(by_bin[b])
        clone_counter += 1
        out.append(
            ProblemRecord(
                problem_id=f"{source.problem_id}~{clone_counter}",
                statement=source.statement,
                informal_text=source.informal_text,
                provenance=source.provenance,
                difficulty_bin=source.difficulty_bin,
            )
        )
        occupancy[b] += 1
    return out


def adaptive_prune(store: ProblemStore, window: int = 2, threshold: float = 7 / 8) -> list[str]:
    """Prune problems solved at or above `threshold` in each of the last
    `window` recorded iterations; short or empty histories never prune."""
    pruned = []
    for record in store.active_records():
        history = record.solve_history[-window:]
        if len(history) < window:
            continue
        if all(p.attempts > 0 and p.successes / p.attempts >= threshold for p in history):
            store.transition(record.problem_id, "pruned", reason=f"proficient over last {window} iterations")
            pruned.append(record.problem_id)
    return pruned


def readmit_pruned(store: ProblemStore) -> list[str]:
    """Config-gated reversal of pruning."""
    readmitted = []
    for record in store.records():
        if record.state == "pruned":
            store.transition(record.problem_id, "active", reason="readmitted")
            readmitted.append(record.problem_id)
    return readmitted


def route_to_annotation(store: ProblemStore, unsolved_span: int = 5) -> list[str]:
    """Queue flagged-error records plus long-unsolved active records."""
    queued = []
    for record in store.records():
        if record.state == "flagged_error":
            store.transition(record.problem_id, "annotation_queue", reason=record.note or "flagged_error")
            queued.append(record.problem_id)
        elif record.state == "active":
            history = record.solve_history[-unsolved_span:]
            if len(history) >= unsolved_span and all(
                p.attempts > 0 and p.successes == 0 for p in history
            ):
                store.transition(
                    record.problem_id, "annotation_queue", reason=f"unsolved over {unsolved_span} iterations"
                )
                queued.append(record.problem_id)
    return queued


def export_annotation_queue(store: ProblemStore, path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in store.records():
            if record.state != "annotation_queue":
                continue
            f.write(
                json.dumps(
                    {
                        "problem_id": record.problem_id,
                        "statement": record.statement,
                        "informal_text": record.informal_text,
                        "reason": record.note,
                    }
                )
                + "\n"
            )
            count += 1
    return count


def import_annotations(store: ProblemStore, path: str | Path) -> int:
    count = 0
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            store.import_annotation(row["problem_id"], row["statement"], row.get("informal_text"))
            count += 1
    return count
