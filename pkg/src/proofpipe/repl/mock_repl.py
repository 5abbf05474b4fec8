"""Scriptable stand-in for a Lean REPL, speaking the identical wire protocol.

Run as ``python -m proofpipe.repl.mock_repl [--latency-ms N]``.  Commands are
single-line JSON requests; responses are JSON followed by a blank line.

Verdicts are scripted through directive comments embedded in the submitted
source.  Place directives in the proof body (at or after the first
non-header line): leading comments belong to the header block and the pool
strips them during canonicalization.  Recognized directives:

    --! error <text>     respond with an error-severity message
    --! warning <text>   respond with a warning-severity message
    --! sorry            respond with one sorry entry
    --! stall <ms>       sleep before responding (timeout testing)
    --! exit             terminate without responding (crash testing)

A command consisting only of imports/set_option/comment/blank lines is
treated as environment creation and returns a fresh env handle.  Any other
command that names an unknown env gets an error, mirroring the real REPL.
A bare ``sorry`` in non-directive source also produces a sorry entry plus
the usual warning.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time

_SORRY_RE = re.compile(r"(?<![A-Za-z0-9_'])sorry(?![A-Za-z0-9_'])")


def _is_header_only(cmd: str) -> bool:
    for raw in cmd.splitlines():
        line = raw.strip()
        if not line or line.startswith("--") or line.startswith("/-") or line.endswith("-/"):
            continue
        if line.startswith("import ") or line.startswith("set_option "):
            continue
        return False
    return True


def _respond(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n\n")
    sys.stdout.flush()


def serve(latency_ms: int) -> int:
    next_env = 0
    known_envs: set[int] = set()
    for raw_line in sys.stdin:
        line = raw_line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError:
            _respond({"env": None, "messages": [{"severity": "error", "pos": {"line": 0, "column": 0}, "text": "malformed request"}], "sorries": []})
            continue
        cmd = str(req.get("cmd", ""))
        env = req.get("env")

        stall_ms = 0
        crash = False
        messages = []
        sorries = []
        directive_lines = []
        for src_line in cmd.splitlines():
            stripped = src_line.strip()
            if not stripped.startswith("--!"):
                continue
            directive_lines.append(stripped)
            parts = stripped[3:].strip().split(None, 1)
            if not parts:
                continue
            kind = parts[0]
            arg = parts[1] if len(parts) > 1 else ""
            if kind == "error":
                messages.append({"severity": "error", "pos": {"line": 1, "column": 0}, "text": arg or "scripted error"})
            elif kind == "warning":
                messages.append({"severity": "warning", "pos": {"line": 1, "column": 0}, "text": arg or "scripted warning"})
            elif kind == "sorry":
                sorries.append({"pos": {"line": 1, "column": 0}, "goal_text": "⊢ True"})
            elif kind == "stall":
                stall_ms = int(arg) if arg else 3_600_000
            elif kind == "exit":
                crash = True

        if crash:
            return 1

        if latency_ms:
            time.sleep(latency_ms / 1000.0)
        if stall_ms:
            time.sleep(stall_ms / 1000.0)

        if env is not None and env not in known_envs:
            messages.append({"severity": "error", "pos": {"line": 0, "column": 0}, "text": f"unknown environment {env}"})

        plain = "\n".join(l for l in cmd.splitlines() if not l.strip().startswith("--!"))
        if not _is_header_only(cmd) and _SORRY_RE.search(plain):
            messages.append({"severity": "warning", "pos": {"line": 1, "column": 0}, "text": "declaration uses 'sorry'"})
            sorries.append({"pos": {"line": 1, "column": 0}, "goal_text": "⊢ ?goal"})

        next_env += 1
        known_envs.add(next_env)
        _respond({"env": next_env, "messages": messages, "sorries": sorries})
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="mock Lean REPL backend")
    parser.add_argument("--latency-ms", type=int, default=0, help="per-command processing delay")
    args = parser.parse_args(argv)
    return serve(args.latency_ms)


if __name__ == "__main__":
    sys.exit(main())
