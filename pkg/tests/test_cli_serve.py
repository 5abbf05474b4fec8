import json
import signal
import socket
import subprocess
import sys
import time

import httpx


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_serve_starts_and_exits_on_signal(tmp_path):
    port = _free_port()
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"pool_size": 1, "listen_host": "127.0.0.1", "listen_port": port}))
    proc = subprocess.Popen(
        [sys.executable, "-m", "proofpipe.cli", "serve", "--config", str(config)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.monotonic() + 30
        body = None
        while time.monotonic() < deadline:
            try:
                resp = httpx.get(f"http://127.0.0.1:{port}/v1/health", timeout=1.0)
                if resp.status_code == 200:
                    body = resp.json()
                    break
            except httpx.TransportError:
                time.sleep(0.2)
        assert body is not None, "service did not come up"
        assert body["status"] == "ok"
        proc.send_signal(signal.SIGTERM)
        assert proc.wait(timeout=15) is not None
    finally:
        if proc.poll() is None:
            proc.kill()
