"""HTTP front end for batch verification.

Endpoints:
  POST /v1/verify   -- batch verification, order-preserving
  GET  /v1/health   -- liveness snapshot
  GET  /v1/metrics  -- pool metrics plus request counters

Every payload carries a schema_version; requests with an incompatible major
version are refused.  Transport-level problems map to 400/503; item-level
failures ride in-band in the results.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import SCHEMA_VERSION
from .errors import ServiceUnavailable
from .repl.pool import ReplPool, mock_launch_spec
from .verify import BatchVerifier, VerificationItem

DEFAULT_FINAL_PROOF_HEADER = (
    "import Mathlib\n"
    "import Aesop\n"
    "set_option maxHeartbeats 400000\n"
    "open BigOperators Real Nat Topology Rat\n"
)


@dataclass
class ServiceConfig:
    pool_size: int = 4
    cache_capacity: int = 8
    default_timeout_ms: int = 60_000
    repl_command: str = ""
    repl_cwd: str | None = None
    repl_env: dict[str, str] = field(default_factory=dict)
    final_proof_header: str = DEFAULT_FINAL_PROOF_HEADER
    listen_host: str = "127.0.0.1"
    listen_port: int = 8731

    def __post_init__(self):
        if not self.repl_command:
            self.repl_command = mock_launch_spec()

    @classmethod
    def from_dict(cls, data: dict) -> "ServiceConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return asdict(self)


class VerifyItemModel(BaseModel):
    attempt_id: str
    source: str


class VerifyRequestModel(BaseModel):
    schema_version: str = SCHEMA_VERSION
    items: list[VerifyItemModel]
    timeout_ms: int | None = None
    mode: Literal["full_source", "final_proof_only"] = "full_source"


def _compatible(version: str) -> bool:
    return version.split(".", 1)[0] == SCHEMA_VERSION.split(".", 1)[0]


def create_app(config: ServiceConfig | None = None, pool: ReplPool | None = None) -> FastAPI:
    """Build the app; pass an existing pool to share it, else one is spawned."""
    config = config or ServiceConfig()
    if pool is None:
        pool = ReplPool(
            config.pool_size,
            config.repl_command,
            cache_capacity=config.cache_capacity,
            default_timeout_ms=config.default_timeout_ms,
            cwd=config.repl_cwd,
            extra_env=config.repl_env or None,
        )
    verifier = BatchVerifier(pool, final_proof_header=config.final_proof_header)

    app = FastAPI(title="proofpipe verify service", version=SCHEMA_VERSION)
    app.state.pool = pool
    app.state.config = config
    counters = {"verify_requests": 0, "items_verified": 0}
    counters_lock = threading.Lock()

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.post("/v1/verify")
    def verify(req: VerifyRequestModel):
        if not _compatible(req.schema_version):
            return JSONResponse(
                status_code=400,
                content={"detail": f"schema_version {req.schema_version} incompatible with {SCHEMA_VERSION}"},
            )
        if not req.items:
            return JSONResponse(status_code=400, content={"detail": "items must be non-empty"})
        ids = [it.attempt_id for it in req.items]
        if len(set(ids)) != len(ids):
            return JSONResponse(status_code=400, content={"detail": "attempt_ids must be unique"})
        items = [VerificationItem(it.attempt_id, it.source) for it in req.items]
        try:
            results = verifier.verify_batch(items, timeout_ms=req.timeout_ms, mode=req.mode)
        except ServiceUnavailable as exc:
            return JSONResponse(status_code=503, content={"detail": str(exc)})
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        with counters_lock:
            counters["verify_requests"] += 1
            counters["items_verified"] += len(results)
        return {
            "schema_version": SCHEMA_VERSION,
            "results": [
                {
                    "attempt_id": r.attempt_id,
                    "correct": r.correct,
                    "reward": r.reward,
                    "messages": [
                        {"severity": m.severity, "pos": {"line": m.line, "column": m.column}, "text": m.text}
                        for m in r.messages
                    ],
                    "sorries": [
                        {"pos": {"line": s.line, "column": s.column}, "goal_text": s.goal_text}
                        for s in r.sorries
                    ],
                    "elapsed_ms": r.elapsed_ms,
                    "cache_hit": r.cache_hit,
                    "failure_kind": r.failure_kind,
                }
                for r in results
            ],
        }

    @app.get("/v1/health")
    def health():
        m = pool.metrics()
        status = "ok" if pool.alive else "degraded"
        return {
            "schema_version": SCHEMA_VERSION,
            "status": status,
            "live_workers": m.live_workers,
            "queue_depth": m.queue_depth,
        }

    @app.get("/v1/metrics")
    def metrics():
        m = pool.metrics()
        with counters_lock:
            snapshot = dict(counters)
        return {
            "schema_version": SCHEMA_VERSION,
            "pool": {
                "throughput_per_s": m.throughput_per_s,
                "cache_hit_rate": m.cache_hit_rate,
                "live_workers": m.live_workers,
                "timeouts": m.timeouts,
                "crashes": m.crashes,
                "completed": m.completed,
                "cache_hits": m.cache_hits,
                "cache_misses": m.cache_misses,
                "queue_depth": m.queue_depth,
            },
            "requests": snapshot,
        }

    return app
