"""n-gram decontamination of a training corpus against a benchmark.

A training document is removed when it shares at least one n-gram (default
n=13) with any benchmark statement's informal text, or when its source tag
is on the blocklist regardless of overlap.  Tokens are normalized words:
lowercased, punctuation stripped, whitespace split.  Every removal is
reported with the matching n-gram or tag so the filtering is auditable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .benchmark import BenchmarkStatement

_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def normalize_words(text: str) -> list[str]:
    return [w for w in _NON_ALNUM.split(text.lower()) if w]


def ngrams(words: Sequence[str], n: int) -> Iterable[tuple[str, ...]]:
    for i in range(len(words) - n + 1):
        yield tuple(words[i : i + n])


@dataclass(frozen=True)
class CorpusDoc:
    doc_id: str
    text: str
    source_tag: str | None = None


@dataclass(frozen=True)
class Removal:
    doc_id: str
    reason: str  # "ngram" | "blocklist"
    detail: str  # the matching n-gram text, or the tag


@dataclass
class DecontamReport:
    scanned: int = 0
    kept: int = 0
    removals: list[Removal] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "scanned": self.scanned,
            "kept": self.kept,
            "removed": len(self.removals),
            "removals": [
                {"doc_id": r.doc_id, "reason": r.reason, "detail": r.detail} for r in self.removals
            ],
        }


def build_benchmark_index(bench: Sequence[BenchmarkStatement], n: int) -> set[tuple[str, ...]]:
    index: set[tuple[str, ...]] = set()
    for stmt in bench:
        index.update(ngrams(normalize_words(stmt.informal_text), n))
    return index


def decontaminate(
    corpus: Sequence[CorpusDoc],
    bench: Sequence[BenchmarkStatement],
    n: int = 13,
    source_blocklist: Iterable[str] = (),
) -> tuple[list[CorpusDoc], DecontamReport]:
    if n < 1:
        raise ValueError("n must be >= 1")
    blocklist = set(source_blocklist)
    index = build_benchmark_index(bench, n)

    kept: list[CorpusDoc] = []
    report = DecontamReport(scanned=len(corpus))
    for doc in corpus:
        if doc.source_tag is not None and doc.source_tag in blocklist:
            report.removals.append(Removal(doc.doc_id, "blocklist", doc.source_tag))
            continue
        words = normalize_words(doc.text)
        hit = next((g for g in ngrams(words, n) if g in index), None)
        if hit is not None:
            report.removals.append(Removal(doc.doc_id, "ngram", " ".join(hit)))
            continue
        kept.append(doc)
    report.kept = len(kept)
    return kept, report


def shared_ngrams(
    corpus: Sequence[CorpusDoc], bench: Sequence[BenchmarkStatement], n: int = 13
) -> set[tuple[str, ...]]:
    """Rescan helper: n-grams shared between the corpus and the benchmark."""
    index = build_benchmark_index(bench, n)
    shared: set[tuple[str, ...]] = set()
    for doc in corpus:
        for g in ngrams(normalize_words(doc.text), n):
            if g in index:
                shared.add(g)
    return shared
