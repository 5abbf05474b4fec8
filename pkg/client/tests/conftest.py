import json
import socket
import subprocess
import sys
import time

import pytest
import requests


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="session")
def server_url(tmp_path_factory):
    """A real proofpipe verify service (mock REPL backend) over HTTP."""
    port = _free_port()
    config_path = tmp_path_factory.mktemp("server") / "config.json"
    config_path.write_text(
        json.dumps({"pool_size": 2, "listen_host": "127.0.0.1", "listen_port": port})
    )
    proc = subprocess.Popen(
        [sys.executable, "-m", "proofpipe.cli", "serve", "--config", str(config_path)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    url = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 30
        while True:
            try:
                if requests.get(f"{url}/v1/health", timeout=1).status_code == 200:
                    break
            except requests.ConnectionError:
                pass
            if time.monotonic() > deadline:
                proc.kill()
                raise RuntimeError("verify service did not come up within 30 s")
            time.sleep(0.2)
        yield url
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
