import json
import subprocess
import sys

from proofpipe.repl.wire import parse_response


def _talk(lines, timeout=10):
    proc = subprocess.Popen(
        [sys.executable, "-m", "proofpipe.repl.mock_repl"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    out, _ = proc.communicate("".join(json.dumps(l) + "\n" for l in lines), timeout=timeout)
    frames = [f for f in out.split("\n\n") if f.strip()]
    return [parse_response(f) for f in frames], proc.returncode


def test_header_command_allocates_env():
    resps, rc = _talk([{"cmd": "import Mathlib\n"}])
    assert rc == 0
    assert resps[0].env == 1
    assert resps[0].messages == []


def test_clean_proof_succeeds_against_env():
    resps, _ = _talk([
        {"cmd": "import Mathlib\n"},
        {"cmd": "theorem t : True := trivial", "env": 1},
    ])
    assert not resps[1].has_errors()
    assert resps[1].sorries == []


def test_unknown_env_is_an_error():
    resps, _ = _talk([{"cmd": "theorem t : True := trivial", "env": 99}])
    assert resps[0].has_errors()


def test_error_directive():
    resps, _ = _talk([{"cmd": "--! error unknown identifier foo\ntheorem t : True := foo"}])
    assert resps[0].has_errors()
    assert "unknown identifier foo" in resps[0].messages[0].text


def test_sorry_token_reported():
    resps, _ = _talk([{"cmd": "theorem t : True := by sorry"}])
    assert resps[0].sorries
    assert any(m.severity == "warning" for m in resps[0].messages)
    assert not resps[0].has_errors()


def test_sorry_not_matched_inside_identifiers():
    resps, _ = _talk([{"cmd": "theorem sorrytown : True := trivial"}])
    assert resps[0].sorries == []


def test_exit_directive_kills_process():
    proc = subprocess.Popen(
        [sys.executable, "-m", "proofpipe.repl.mock_repl"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    out, _ = proc.communicate(json.dumps({"cmd": "--! exit\nwhatever"}) + "\n", timeout=10)
    assert out == ""
    assert proc.returncode == 1
