"""Canonicalization of Lean source headers into environment cache keys.

A "header" is the leading block of a Lean file: import lines, `set_option`
lines, comments, and blank lines, up to the first line that is none of
those.  Two sources that canonicalize to the same key can share a preloaded
REPL environment; everything after the header (including `open` commands)
is the body and is evaluated against that environment.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ImportHeaderKey:
    """Canonical header: imports sorted and deduplicated, options in source order.

    Lines are stored trimmed.  Comment and blank lines never appear in a key.
    """

    imports: tuple[str, ...] = ()
    options: tuple[str, ...] = ()

    @property
    def is_empty(self) -> bool:
        return not self.imports and not self.options


def _is_block_comment_open(line: str) -> bool:
    return line.startswith("/-")


def canonicalize_header(source: str) -> tuple[ImportHeaderKey, str]:
    """Split Lean source into a canonical header key and the residual body.

    The header block ends at the first line that is not an import,
    `set_option`, comment, or blank line.  Within block comments
    (``/- ... -/``) lines are consumed until the closing marker.  A source
    with no header yields an empty key and the unchanged body.
    """
    lines = source.splitlines(keepends=True)
    imports: list[str] = []
    options: list[str] = []
    idx = 0
    in_block_comment = False
    for idx, raw in enumerate(lines):
        line = raw.strip()
        if in_block_comment:
            if "-/" in line:
                in_block_comment = False
            continue
        if not line or line.startswith("--"):
            continue
        if _is_block_comment_open(line):
            if "-/" not in line[2:]:
                in_block_comment = True
            continue
        if line.startswith("import ") or line == "import":
            imports.append(line)
            continue
        if line.startswith("set_option ") or line == "set_option":
            options.append(line)
            continue
        break
    else:
        idx = len(lines)

    body = "".join(lines[idx:])
    key = ImportHeaderKey(imports=tuple(sorted(set(imports))), options=tuple(options))
    return key, body


def serialize_header(key: ImportHeaderKey) -> str:
    """Render a key back to header text; empty key renders to the empty string."""
    if key.is_empty:
        return ""
    return "\n".join((*key.imports, *key.options)) + "\n"
