"""Benchmark statement loading with correction patches.

The benchmark file is JSONL, one statement per line:
    {"name": ..., "statement": ..., "informal_text": ..., "subset_tags": [...]}

A patch file replaces statements known to be wrong as published:
    {"name": ..., "corrected_statement": ...}

Corrected texts are an input artifact sourced from the upstream release;
this module only applies them and marks the records.  The names of the
statements known to need correction ship below so loaders can warn when a
patch file is absent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

from ..errors import DuplicateName, MalformedStatement

# miniF2F statements that are unprovable as published and require patched
# statements before evaluation.
KNOWN_UNSOLVABLE = (
    "mathd_numbertheory_618",
    "aime_1994_p3",
    "amc12a_2021_p9",
    "mathd_algebra_342",
    "mathd_numbertheory_343",
    "mathd_algebra_158",
    "induction_pord1p1on2powklt5on2",
    "induction_prod1p1onk3le3m1onn",
)


@dataclass(frozen=True)
class BenchmarkStatement:
    name: str
    statement: str
    informal_text: str = ""
    subset_tags: frozenset[str] = frozenset()
    corrected: bool = False


def load_patches(path: str | Path) -> dict[str, str]:
    patches: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                patches[row["name"]] = row["corrected_statement"]
            except (json.JSONDecodeError, KeyError) as exc:
                raise MalformedStatement(f"{path}:{lineno}: {exc}") from exc
    return patches


def load_benchmark(
    path: str | Path,
    patches: Mapping[str, str] | str | Path | None = None,
) -> list[BenchmarkStatement]:
    if patches is not None and not isinstance(patches, Mapping):
        patches = load_patches(patches)
    patches = dict(patches or {})

    statements: list[BenchmarkStatement] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedStatement(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                name = row["name"]
                stmt = BenchmarkStatement(
                    name=name,
                    statement=row["statement"],
                    informal_text=row.get("informal_text", ""),
                    subset_tags=frozenset(row.get("subset_tags", [])),
                )
            except KeyError as exc:
                raise MalformedStatement(f"{path}:{lineno}: missing field {exc}") from exc
            if name in seen:
                raise DuplicateName(f"duplicate statement name: {name}")
            seen.add(name)
            if name in patches:
                stmt = replace(stmt, statement=patches[name], corrected=True)
            statements.append(stmt)
    return statements
