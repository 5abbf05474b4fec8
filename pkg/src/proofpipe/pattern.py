"""Reasoning-trace decomposition and structural format filtering.

Model outputs follow a fixed shape: a thinking block between configurable
delimiters with Lean code snippets interspersed, then a final proof in the
last fenced code block after the close delimiter.  Parsing is total: any
text decomposes, and whatever is missing simply stays None.

Two structural constraints gate a trace for RL training: it must contain at
least one tactic block, and the snippets must collectively cover at least
the threshold fraction (default 60%) of the final proof's code.  Coverage is
measured over normalized lines: trimmed, blank and comment-only lines
dropped, internal whitespace runs collapsed.  The reverse direction (how
much of the snippet code reappears in the proof) is reported alongside but
never gates.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

from .errors import MissingFinalProof

DEFAULT_TACTIC_KEYWORDS = (
    "have",
    "rw",
    "nlinarith",
    "linarith",
    "intro",
    "use",
    "exact",
    "apply",
    "constructor",
    "rcases",
    "omega",
    "norm_num",
    "field_simp",
    "ring_nf",
    "by_contra",
    "simp",
)


def whitespace_token_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class TraceConfig:
    think_open: str = "<think>"
    think_close: str = "</think>"
    fence: str = "```"
    tactic_keywords: tuple[str, ...] = DEFAULT_TACTIC_KEYWORDS
    tokenizer: Callable[[str], int] = whitespace_token_count


DEFAULT_TRACE_CONFIG = TraceConfig()


@dataclass(frozen=True)
class ReasoningTrace:
    raw_text: str
    think_block: str | None
    snippets: tuple[str, ...]
    final_proof: str | None
    token_count: int
    delimiter_state: str  # "absent" | "balanced" | "unbalanced"


@dataclass(frozen=True)
class FormatVerdict:
    well_formed: bool
    has_tactic_block: bool
    coverage_ratio: float
    passes_filter: bool
    reasons: tuple[str, ...]
    snippet_reuse_ratio: float = 0.0


def _fenced_blocks(text: str, fence: str) -> list[str]:
    pattern = re.compile(
        re.escape(fence) + r"[^\n]*\n(.*?)" + re.escape(fence),
        re.DOTALL,
    )
    return [m.group(1) for m in pattern.finditer(text)]


def parse_trace(raw_text: str, config: TraceConfig = DEFAULT_TRACE_CONFIG) -> ReasoningTrace:
    """Best-effort decomposition of a raw model output; never raises."""
    open_idx = raw_text.find(config.think_open)
    close_idx = raw_text.find(config.think_close, open_idx + len(config.think_open)) if open_idx >= 0 else -1

    if open_idx < 0 and config.think_close not in raw_text:
        state = "absent"
    elif open_idx >= 0 and close_idx > open_idx:
        state = "balanced"
    else:
        state = "unbalanced"

    think_block: str | None = None
    snippets: tuple[str, ...] = ()
    final_proof: str | None = None
    if state == "balanced":
        think_block = raw_text[open_idx + len(config.think_open) : close_idx]
        snippets = tuple(_fenced_blocks(think_block, config.fence))
        tail = raw_text[close_idx + len(config.think_close) :]
        tail_blocks = _fenced_blocks(tail, config.fence)
        if tail_blocks:
            final_proof = tail_blocks[-1]

    return ReasoningTrace(
        raw_text=raw_text,
        think_block=think_block,
        snippets=snippets,
        final_proof=final_proof,
        token_count=config.tokenizer(raw_text),
        delimiter_state=state,
    )


def normalize_code_lines(code: str) -> list[str]:
    """Trim, drop blanks and `--` comment-only lines, collapse inner whitespace."""
    out = []
    for raw in code.splitlines():
        line = " ".join(raw.split())
        if not line or line.startswith("--"):
            continue
        out.append(line)
    return out


def coverage_ratio(trace: ReasoningTrace) -> float:
    """Fraction of normalized final-proof lines present in the snippet union."""
    if trace.final_proof is None:
        raise MissingFinalProof("trace has no final proof block")
    proof_lines = normalize_code_lines(trace.final_proof)
    if not proof_lines:
        return 0.0
    snippet_union = set()
    for snippet in trace.snippets:
        snippet_union.update(normalize_code_lines(snippet))
    covered = sum(1 for line in proof_lines if line in snippet_union)
    return covered / len(proof_lines)


def snippet_reuse_ratio(trace: ReasoningTrace) -> float:
    """Reverse direction: fraction of snippet lines that reappear in the proof."""
    if trace.final_proof is None:
        return 0.0
    snippet_lines: list[str] = []
    for snippet in trace.snippets:
        snippet_lines.extend(normalize_code_lines(snippet))
    if not snippet_lines:
        return 0.0
    proof_union = set(normalize_code_lines(trace.final_proof))
    reused = sum(1 for line in snippet_lines if line in proof_union)
    return reused / len(snippet_lines)


def _has_tactic_line(snippet: str, keywords: Sequence[str]) -> bool:
    in_by_block = False
    by_indent = 0
    for raw in snippet.splitlines():
        stripped = raw.strip()
        if not stripped or stripped.startswith("--"):
            continue
        indent = len(raw) - len(raw.lstrip())
        if in_by_block and indent > by_indent:
            return True
        in_by_block = False
        first = stripped.split(None, 1)[0]
        if first in keywords:
            return True
        if re.search(r"(?<![A-Za-z0-9_]):=\s*by\s*$", stripped) or stripped == "by" or stripped.endswith(" by"):
            in_by_block = True
            by_indent = indent
    return False


def has_tactic_block(trace: ReasoningTrace, config: TraceConfig = DEFAULT_TRACE_CONFIG) -> bool:
    return any(_has_tactic_line(s, config.tactic_keywords) for s in trace.snippets)


def check_format(
    trace: ReasoningTrace,
    coverage_threshold: float = 0.6,
    config: TraceConfig = DEFAULT_TRACE_CONFIG,
) -> FormatVerdict:
    """Apply the two structural gates plus well-formedness; threshold uses >=."""
    reasons: list[str] = []
    if trace.delimiter_state == "unbalanced":
        reasons.append("unbalanced_think_delimiters")
    if trace.think_block is None:
        reasons.append("missing_think_block")
    if trace.final_proof is None:
        reasons.append("missing_final_proof")
    well_formed = not reasons

    tactic_ok = has_tactic_block(trace, config)
    if not tactic_ok:
        reasons.append("no_tactic_block")

    if trace.final_proof is not None:
        ratio = coverage_ratio(trace)
    else:
        ratio = 0.0
    if ratio < coverage_threshold:
        reasons.append("coverage_below_threshold")

    passes = well_formed and tactic_ok and ratio >= coverage_threshold
    return FormatVerdict(
        well_formed=well_formed,
        has_tactic_block=tactic_ok,
        coverage_ratio=ratio,
        passes_filter=passes,
        reasons=tuple(reasons),
        snippet_reuse_ratio=snippet_reuse_ratio(trace),
    )


def iter_trace_rows(path: str | Path) -> Iterator[tuple[str, str, str]]:
    """Read the trace JSONL format: one raw model output per line with ids.

    Yields (problem_id, attempt_id, raw_text).
    """
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            yield row["problem_id"], row["attempt_id"], row["raw_text"]
