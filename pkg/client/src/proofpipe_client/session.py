"""HTTP session with transport-level retries and a schema version handshake.

Retries apply to connection failures, timeouts, and 5xx responses; they
never apply to domain outcomes (4xx responses or per-item verdicts).  Any
payload whose schema major version differs from ours fails closed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import requests

SCHEMA_VERSION = "1.0"


class ClientError(Exception):
    """The server rejected the request (4xx); retrying will not help."""


class TransportError(Exception):
    """The server could not be reached (or kept failing) within the retry budget."""


class SchemaMismatch(Exception):
    """Payload schema major version is incompatible with this client."""


def _check_schema(payload: dict) -> None:
    version = str(payload.get("schema_version", ""))
    if not version:
        return
    if version.split(".", 1)[0] != SCHEMA_VERSION.split(".", 1)[0]:
        raise SchemaMismatch(f"server speaks schema {version}, client speaks {SCHEMA_VERSION}")


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    backoff_s: float = 0.2

    def delay(self, attempt: int) -> float:
        return self.backoff_s * (2**attempt)


@dataclass(frozen=True)
class VerifyItem:
    attempt_id: str
    source: str


@dataclass(frozen=True)
class VerifyResult:
    attempt_id: str
    correct: bool
    reward: int
    failure_kind: str
    elapsed_ms: int
    cache_hit: bool
    messages: tuple = ()
    sorries: tuple = ()


@dataclass(frozen=True)
class Health:
    status: str
    live_workers: int
    queue_depth: int


class ClientSession:
    """One caller's connection to a verify service; not shared across threads."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 120.0,
        retry: RetryPolicy = RetryPolicy(),
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retry = retry
        self._http = requests.Session()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "ClientSession":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = f"{self.base_url}{path}"
        last_error: Exception | None = None
        for attempt in range(self.retry.max_retries + 1):
            try:
                resp = self._http.request(method, url, json=payload, timeout=self.timeout)
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
                if attempt < self.retry.max_retries:
                    time.sleep(self.retry.delay(attempt))
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"{url} -> {resp.status_code}")
                if attempt < self.retry.max_retries:
                    time.sleep(self.retry.delay(attempt))
                continue
            if resp.status_code >= 400:
                detail = ""
                try:
                    detail = str(resp.json().get("detail", ""))
                except ValueError:
                    detail = resp.text[:500]
                raise ClientError(f"{url} -> {resp.status_code}: {detail}")
            body = resp.json()
            _check_schema(body)
            return body
        raise TransportError(f"{url} unreachable after {self.retry.max_retries + 1} attempts: {last_error}")

    def health(self) -> Health:
        body = self._request("GET", "/v1/health")
        return Health(
            status=body["status"],
            live_workers=int(body["live_workers"]),
            queue_depth=int(body["queue_depth"]),
        )

    def metrics(self) -> dict:
        return self._request("GET", "/v1/metrics")

    def verify(
        self,
        items: Sequence[VerifyItem],
        timeout_ms: int | None = None,
        mode: str = "full_source",
    ) -> list[VerifyResult]:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "items": [{"attempt_id": it.attempt_id, "source": it.source} for it in items],
            "mode": mode,
        }
        if timeout_ms is not None:
            payload["timeout_ms"] = timeout_ms
        body = self._request("POST", "/v1/verify", payload)
        return [
            VerifyResult(
                attempt_id=r["attempt_id"],
                correct=bool(r["correct"]),
                reward=int(r["reward"]),
                failure_kind=r["failure_kind"],
                elapsed_ms=int(r["elapsed_ms"]),
                cache_hit=bool(r["cache_hit"]),
                messages=tuple(r.get("messages", [])),
                sorries=tuple(r.get("sorries", [])),
            )
            for r in body["results"]
        ]
