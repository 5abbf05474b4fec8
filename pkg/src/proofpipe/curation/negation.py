"""Error filtering by proving the negation of a statement.

Negation construction is textual and deliberately conservative.  Only
statements of the shape

    theorem <name> <binders> : <conclusion> := by sorry

are handled (``:= sorry`` also accepted), where binders are balanced
bracket groups and the conclusion contains no leading universal
quantifier.  The negated statement wraps the conclusion as ``¬ (...)``
under identical binders; proving it within budget flags the original as
erroneous.  Anything outside the shape yields "unknown" rather than a
possibly bogus negation.

Note the asymmetry: for binder-quantified statements, ¬conclusion under the
same binders is stronger than the negation of the theorem, so a proof of it
soundly witnesses that the statement is wrong; failure to prove it says
nothing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from ..pattern import parse_trace
from ..policy import PolicyClient
from ..rollout import VerifierClient
from ..verify import VerificationItem
from .records import ProblemRecord

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_'!?]*")
_OPEN = {"(": ")", "[": "]", "{": "}", "⟨": "⟩", "⦃": "⦄"}
_CLOSE = {v: k for k, v in _OPEN.items()}


@dataclass(frozen=True)
class ParsedStatement:
    name: str
    binders: str
    conclusion: str


def parse_theorem(statement: str) -> ParsedStatement | None:
    text = statement.strip()
    if not text.startswith("theorem"):
        return None
    rest = text[len("theorem") :]
    if not rest[:1].isspace():
        return None
    rest = rest.lstrip()
    m = _NAME_RE.match(rest)
    if not m:
        return None
    name = m.group(0)
    rest = rest[m.end() :]

    # Find the binder/conclusion separator: the first ':' at bracket depth 0
    # that is not part of ':='.
    depth = 0
    sep = -1
    i = 0
    while i < len(rest):
        ch = rest[i]
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
            if depth < 0:
                return None
        elif ch == ":" and depth == 0:
            if i + 1 < len(rest) and rest[i + 1] == "=":
                i += 2
                continue
            sep = i
            break
        i += 1
    if sep < 0 or depth != 0:
        return None
    binders = rest[:sep].strip()
    tail = rest[sep + 1 :]

    # The conclusion runs to the last ':=' at depth 0.
    depth = 0
    assign = -1
    for j, ch in enumerate(tail):
        if ch in _OPEN:
            depth += 1
        elif ch in _CLOSE:
            depth -= 1
        elif ch == ":" and depth == 0 and j + 1 < len(tail) and tail[j + 1] == "=":
            assign = j
    if assign < 0:
        return None
    conclusion = tail[:assign].strip()
    trailer = tail[assign + 2 :].strip()
    if trailer not in ("sorry", "by sorry"):
        return None
    if not conclusion:
        return None
    if conclusion.startswith("∀"):
        return None
    return ParsedStatement(name=name, binders=binders, conclusion=conclusion)


def negate_statement(parsed: ParsedStatement) -> str:
    binders = f" {parsed.binders}" if parsed.binders else ""
    return f"theorem {parsed.name}_neg{binders} : ¬ ({parsed.conclusion}) := by sorry"


def negation_filter(
    record: ProblemRecord,
    verifier: VerifierClient,
    prover: PolicyClient,
    attempt_budget: int = 8,
    max_tokens: int = 32768,
) -> str:
    """Returns "flagged_error", "kept", or "unknown" (grammar did not apply)."""
    parsed = parse_theorem(record.statement)
    if parsed is None:
        return "unknown"
    negated = negate_statement(parsed)
    completions = prover.generate(negated, attempt_budget, max_tokens, 1.0)
    items: list[VerificationItem] = []
    for i, comp in enumerate(completions):
        trace = parse_trace(comp.text)
        if trace.final_proof is not None:
            items.append(VerificationItem(f"{record.problem_id}/neg/{i}", trace.final_proof))
    if items:
        results = verifier.verify_batch(items, mode="final_proof_only")
        if any(r.correct for r in results):
            return "flagged_error"
    return "kept"
