"""Problem records and their lifecycle states."""

from __future__ import annotations

from dataclasses import dataclass, field

STATES = ("active", "pruned", "flagged_error", "annotation_queue")

# Transitions the store will perform; anything else is a bug in the caller.
ALLOWED_TRANSITIONS = {
    ("active", "pruned"),
    ("active", "flagged_error"),
    ("active", "annotation_queue"),
    ("flagged_error", "annotation_queue"),
    ("pruned", "active"),  # config-gated re-admission
    ("annotation_queue", "active"),  # annotated statement re-imported
}

SOLVE_HISTORY_LIMIT = 64


@dataclass(frozen=True)
class SolvePoint:
    iteration: int
    successes: int
    attempts: int


@dataclass
class ProblemRecord:
    problem_id: str
    statement: str
    informal_text: str = ""
    provenance: str = "auto"  # "human" | "auto"
    difficulty_bin: int = 0
    state: str = "active"
    note: str = ""
    solve_history: list[SolvePoint] = field(default_factory=list)

    def __post_init__(self):
        if self.provenance not in ("human", "auto"):
            raise ValueError(f"provenance must be human or auto, got {self.provenance!r}")
        if self.state not in STATES:
            raise ValueError(f"unknown state {self.state!r}")

    def record_solve(self, iteration: int, successes: int, attempts: int) -> None:
        self.solve_history.append(SolvePoint(iteration, successes, attempts))
        if len(self.solve_history) > SOLVE_HISTORY_LIMIT:
            del self.solve_history[: -SOLVE_HISTORY_LIMIT]

    def to_dict(self) -> dict:
        return {
            "problem_id": self.problem_id,
            "statement": self.statement,
            "informal_text": self.informal_text,
            "provenance": self.provenance,
            "difficulty_bin": self.difficulty_bin,
            "state": self.state,
            "note": self.note,
            "solve_history": [
                {"iteration": p.iteration, "successes": p.successes, "attempts": p.attempts}
                for p in self.solve_history
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemRecord":
        return cls(
            problem_id=data["problem_id"],
            statement=data["statement"],
            informal_text=data.get("informal_text", ""),
            provenance=data.get("provenance", "auto"),
            difficulty_bin=data.get("difficulty_bin", 0),
            state=data.get("state", "active"),
            note=data.get("note", ""),
            solve_history=[
                SolvePoint(p["iteration"], p["successes"], p["attempts"])
                for p in data.get("solve_history", [])
            ],
        )
