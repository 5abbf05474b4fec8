"""JSON-on-stdio frames for REPL workers.

Requests are a single JSON object on one line: ``{"cmd": <string>}`` with an
optional ``"env"`` handle.  Responses are a JSON object terminated by a blank
line: ``{"env": <int>, "messages": [...], "sorries": [...]}``.

Parsing is lenient about field spellings so the pool also understands the
community Lean REPL, which says ``data`` where we say ``text`` and ``goal``
where we say ``goal_text``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any


@dataclass(frozen=True)
class ReplMessage:
    severity: str
    line: int
    column: int
    text: str


@dataclass(frozen=True)
class ReplSorry:
    line: int
    column: int
    goal_text: str


@dataclass
class ReplResponse:
    env: int | None = None
    messages: list[ReplMessage] = field(default_factory=list)
    sorries: list[ReplSorry] = field(default_factory=list)
    elapsed_ms: int = 0

    def has_errors(self) -> bool:
        return any(m.severity == "error" for m in self.messages)


def encode_request(cmd: str, env: int | None = None) -> str:
    req: dict[str, Any] = {"cmd": cmd}
    if env is not None:
        req["env"] = env
    return json.dumps(req, ensure_ascii=False)


def _pos(obj: dict[str, Any]) -> tuple[int, int]:
    pos = obj.get("pos") or {}
    return int(pos.get("line", 0)), int(pos.get("column", 0))


def parse_response(raw: str) -> ReplResponse:
    data = json.loads(raw)
    messages = []
    for m in data.get("messages") or []:
        line, column = _pos(m)
        messages.append(
            ReplMessage(
                severity=str(m.get("severity", "info")),
                line=line,
                column=column,
                text=str(m.get("text", m.get("data", ""))),
            )
        )
    sorries = []
    for s in data.get("sorries") or []:
        line, column = _pos(s)
        sorries.append(
            ReplSorry(line=line, column=column, goal_text=str(s.get("goal_text", s.get("goal", ""))))
        )
    env = data.get("env")
    return ReplResponse(env=int(env) if env is not None else None, messages=messages, sorries=sorries)


def read_frame(stream: IO[str]) -> str | None:
    """Read one blank-line-terminated frame; None on EOF (partial frames are dropped)."""
    parts: list[str] = []
    while True:
        line = stream.readline()
        if line == "":
            return None
        if line.strip() == "":
            if parts:
                return "".join(parts)
            continue
        parts.append(line)
