"""LLM judging and difficulty rating, behind text-in/text-out clients.

Judge verdict parsing is strict: the final non-empty line of the response
must be exactly YES or NO.  Prompt templates are versioned so a run can be
reproduced after a template changes; acceptance requires a unanimous YES
across m independent samples.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from ..errors import JudgeUnavailable, RaterUnavailable

log = logging.getLogger(__name__)


class JudgeClient(Protocol):
    def judge(self, prompt: str) -> str:
        ...


class RaterClient(Protocol):
    def rate(self, prompt: str) -> str:
        ...


JUDGE_TEMPLATES = {
    "formalization-v1": (
        "You are reviewing a formalization of a mathematics problem.\n"
        "Informal statement:\n{informal}\n\n"
        "Lean 4 formalization:\n{formal}\n\n"
        "Does the formalization faithfully capture the informal statement,\n"
        "with no added assumptions, missing constraints, or changed goals?\n"
        "Answer with a single final line containing exactly YES or NO."
    ),
    "proof-audit-v1": (
        "A proof was verified by the compiler; decide whether it proves the\n"
        "intended problem or merely exploits a defect in the statement.\n"
        "Informal statement:\n{informal}\n\n"
        "Formal statement:\n{formal}\n\n"
        "Proof:\n{proof}\n\n"
        "Answer with a single final line containing exactly YES (proof is a\n"
        "genuine solution) or NO (statement defect exploited)."
    ),
}

RATER_TEMPLATE = (
    "Rate the difficulty of this problem on an integer scale from 1 (easy)\n"
    "to 10 (hardest olympiad level). Answer with the integer alone on the\n"
    "final line.\n\nStatement:\n{formal}\n\nInformal:\n{informal}"
)

_RATING_RE = re.compile(r"^\s*(10|[1-9])\s*$")


@dataclass(frozen=True)
class JudgeVerdict:
    votes: tuple[bool, ...]
    accepted: bool
    complete: bool


def parse_vote(text: str) -> bool | None:
    lines = [l.strip() for l in text.splitlines() if l.strip()]
    if not lines:
        return None
    final = lines[-1].upper()
    if final == "YES":
        return True
    if final == "NO":
        return False
    return None


def parse_rating(text: str) -> int | None:
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines:
        return None
    m = _RATING_RE.match(lines[-1])
    return int(m.group(1)) if m else None


def _collect_votes(judge: JudgeClient, prompt: str, m: int) -> tuple[list[bool], int]:
    votes: list[bool] = []
    answered = 0
    for i in range(m):
        try:
            reply = judge.judge(prompt)
        except Exception as exc:
            log.warning("judge call %d/%d failed: %s", i + 1, m, exc)
            continue
        answered += 1
        vote = parse_vote(reply)
        if vote is not None:
            votes.append(vote)
    return votes, answered


def judge_formalization(
    informal_text: str,
    formalization: str,
    judge: JudgeClient,
    m: int = 3,
    template_version: str = "formalization-v1",
) -> JudgeVerdict:
    """m independent votes; accepted only on a unanimous, complete YES."""
    prompt = JUDGE_TEMPLATES[template_version].format(informal=informal_text, formal=formalization)
    votes, answered = _collect_votes(judge, prompt, m)
    if answered == 0:
        raise JudgeUnavailable("judge produced no responses")
    complete = len(votes) == m
    accepted = complete and all(votes)
    return JudgeVerdict(votes=tuple(votes), accepted=accepted, complete=complete)


def postrl_validate(
    informal_text: str,
    statement: str,
    proof: str,
    judge: JudgeClient,
    m: int = 3,
    template_version: str = "proof-audit-v1",
) -> JudgeVerdict:
    """Audit a compiler-accepted proof; any NO vote rejects."""
    prompt = JUDGE_TEMPLATES[template_version].format(
        informal=informal_text, formal=statement, proof=proof
    )
    votes, answered = _collect_votes(judge, prompt, m)
    if answered == 0:
        raise JudgeUnavailable("judge produced no responses")
    complete = len(votes) == m
    accepted = complete and all(votes)
    return JudgeVerdict(votes=tuple(votes), accepted=accepted, complete=complete)


def rate_difficulty(informal_text: str, statement: str, rater: RaterClient) -> int:
    try:
        reply = rater.rate(RATER_TEMPLATE.format(informal=informal_text, formal=statement))
    except Exception as exc:
        raise RaterUnavailable(str(exc)) from exc
    rating = parse_rating(reply)
    if rating is None:
        raise RaterUnavailable(f"unparseable rating reply: {reply!r}")
    return rating


def difficulty_to_bin(rating: int, bins: int) -> int:
    """Map a 1..10 rating onto 0..bins-1 with equal-width bands."""
    rating = min(10, max(1, rating))
    return min(bins - 1, (rating - 1) * bins // 10)


class MockJudge:
    """Scripted judge: a callable decides each vote, or a fixed sequence cycles."""

    def __init__(self, votes: Sequence[bool] | Callable[[str, int], bool]):
        self._votes = votes
        self._calls = 0

    def judge(self, prompt: str) -> str:
        i = self._calls
        self._calls += 1
        if callable(self._votes):
            vote = self._votes(prompt, i)
        else:
            vote = self._votes[i % len(self._votes)]
        return "Considered carefully.\n" + ("YES" if vote else "NO")


class MockRater:
    def __init__(self, rating: int | Callable[[str], int] = 5):
        self._rating = rating

    def rate(self, prompt: str) -> str:
        value = self._rating(prompt) if callable(self._rating) else self._rating
        return f"Difficulty assessment follows.\n{value}"
