"""Supervised pool of REPL worker subprocesses with per-worker env caching.

Each worker is a subprocess speaking the JSON-on-stdio protocol (real Lean
REPL or the mock backend).  A worker owns a process-local LRU cache mapping
canonical import headers to env handles; the pool routes submissions by key
affinity so repeat headers land on workers that already hold them.

A worker serves exactly one command at a time.  Any failure mid-command
(timeout, EOF, protocol corruption) discards the worker and replaces it with
a fresh one, so response frames can never leak across commands.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import shlex
import subprocess
import sys
import threading
import time
from collections import OrderedDict, deque
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..errors import PoolShutdown, SpawnFailure
from .header import ImportHeaderKey, canonicalize_header, serialize_header
from .wire import ReplResponse, parse_response, read_frame

log = logging.getLogger(__name__)

MIN_TIMEOUT_MS = 1000
DEFAULT_TIMEOUT_MS = 60_000
THROUGHPUT_WINDOW_S = 5.0


def mock_launch_spec(latency_ms: int = 0) -> str:
    """Launch spec for the bundled mock backend."""
    return f"{sys.executable} -m proofpipe.repl.mock_repl --latency-ms {latency_ms}"


class _AttemptTimeout(Exception):
    pass


class _WorkerCrashed(Exception):
    pass


class _Worker:
    def __init__(self, worker_id: int, proc: subprocess.Popen):
        self.worker_id = worker_id
        self.proc = proc
        self.state = "idle"
        self.cache: OrderedDict[ImportHeaderKey, int] = OrderedDict()
        self.commands_served = 0
        self.spawn_time = time.time()
        self.transcript: list[dict] = []
        self.frames: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            while True:
                frame = read_frame(self.proc.stdout)
                if frame is None:
                    break
                self.frames.put(("frame", frame))
        except (ValueError, OSError):
            pass
        self.frames.put(("eof", None))

    def kill(self) -> None:
        self.state = "dead"
        try:
            self.proc.kill()
        except OSError:
            pass
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass


@dataclass(frozen=True)
class PoolMetrics:
    throughput_per_s: float
    cache_hit_rate: float
    live_workers: int
    timeouts: int
    crashes: int
    completed: int
    cache_hits: int
    cache_misses: int
    queue_depth: int


@dataclass(frozen=True)
class SubmitResult:
    """Outcome of one pool submission.

    status is "ok", "timeout" (worker killed and respawned), or "crash"
    (worker died twice on this command; retry budget exhausted).
    """

    response: ReplResponse
    cache_hit: bool
    status: str
    worker_id: int


@dataclass
class _Counters:
    completed: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    timeouts: int = 0
    crashes: int = 0
    completions: deque = field(default_factory=deque)


class ReplPool:
    """Thread-safe pool; submissions may come from any number of threads."""

    def __init__(
        self,
        worker_count: int,
        launch_spec: str | Sequence[str],
        cache_capacity: int = 8,
        default_timeout_ms: int = DEFAULT_TIMEOUT_MS,
        cwd: str | None = None,
        extra_env: Mapping[str, str] | None = None,
    ):
        if worker_count < 1:
            raise ValueError("worker_count must be >= 1")
        if cache_capacity < 1:
            raise ValueError("cache_capacity must be >= 1")
        self._argv = shlex.split(launch_spec) if isinstance(launch_spec, str) else list(launch_spec)
        self._cwd = cwd
        self._env = {**os.environ, **extra_env} if extra_env else None
        self.cache_capacity = cache_capacity
        self.default_timeout_ms = default_timeout_ms

        self._cond = threading.Condition()
        self._workers: list[_Worker] = []
        self._idle: list[_Worker] = []
        self._retired: list[_Worker] = []
        self._next_id = 0
        self._closed = False
        self._waiting = 0
        self._counters = _Counters()
        self._started = time.monotonic()

        try:
            for _ in range(worker_count):
                w = self._spawn_worker()
                self._workers.append(w)
                self._idle.append(w)
        except SpawnFailure:
            for w in self._workers:
                w.kill()
            raise

    # -- lifecycle ---------------------------------------------------------

    def _spawn_worker(self) -> _Worker:
        worker_id = self._next_id
        self._next_id += 1
        try:
            proc = subprocess.Popen(
                self._argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
                cwd=self._cwd,
                env=self._env,
            )
        except OSError as exc:
            raise SpawnFailure(worker_id, str(exc)) from exc
        if proc.poll() is not None:
            raise SpawnFailure(worker_id, f"exited immediately with {proc.returncode}")
        return _Worker(worker_id, proc)

    def shutdown(self) -> None:
        with self._cond:
            if self._closed:
                return
            self._closed = True
            workers = list(self._workers)
            self._idle.clear()
            self._cond.notify_all()
        for w in workers:
            w.kill()

    def __enter__(self) -> "ReplPool":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    # -- dispatch ----------------------------------------------------------

    def _acquire(self, key: ImportHeaderKey) -> _Worker:
        with self._cond:
            self._waiting += 1
            try:
                while not self._idle:
                    if self._closed:
                        raise PoolShutdown("pool is shut down")
                    if not self._workers:
                        raise PoolShutdown("no live workers")
                    self._cond.wait()
                if self._closed:
                    raise PoolShutdown("pool is shut down")
                chosen = None
                if not key.is_empty:
                    for w in self._idle:
                        if key in w.cache:
                            chosen = w
                            break
                if chosen is None:
                    chosen = self._idle[0]
                self._idle.remove(chosen)
                chosen.state = "busy"
                return chosen
            finally:
                self._waiting -= 1

    def _release(self, worker: _Worker, dead: bool) -> None:
        with self._cond:
            if dead:
                if worker in self._workers:
                    self._workers.remove(worker)
                self._retired.append(worker)
                if not self._closed:
                    try:
                        replacement = self._spawn_worker()
                        self._workers.append(replacement)
                        self._idle.append(replacement)
                    except SpawnFailure as exc:
                        log.warning("worker respawn failed: %s", exc)
            elif not self._closed:
                worker.state = "idle"
                self._idle.append(worker)
            self._cond.notify_all()

    # -- command exchange ----------------------------------------------------

    def _exchange(self, worker: _Worker, cmd: str, env: int | None, deadline: float) -> ReplResponse:
        req: dict = {"cmd": cmd}
        if env is not None:
            req["env"] = env
        worker.transcript.append(req)
        try:
            worker.proc.stdin.write(json.dumps(req, ensure_ascii=False) + "\n")
            worker.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise _WorkerCrashed(str(exc)) from exc
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise _AttemptTimeout()
        try:
            kind, payload = worker.frames.get(timeout=remaining)
        except queue.Empty:
            raise _AttemptTimeout() from None
        if kind == "eof":
            raise _WorkerCrashed("worker closed its output")
        try:
            return parse_response(payload)
        except (json.JSONDecodeError, ValueError) as exc:
            raise _WorkerCrashed(f"unparseable frame: {exc}") from exc

    def _attempt(self, source: str, timeout_ms: int) -> SubmitResult:
        key, body = canonicalize_header(source)
        worker = self._acquire(key)
        dead = False
        started = time.monotonic()
        deadline = started + timeout_ms / 1000.0
        cache_hit = False
        try:
            if not key.is_empty:
                with self._cond:
                    env = worker.cache.get(key)
                    if env is not None:
                        cache_hit = True
                        worker.cache.move_to_end(key)
                        self._counters.cache_hits += 1
                    else:
                        self._counters.cache_misses += 1
                if env is None:
                    header_resp = self._exchange(worker, serialize_header(key), None, deadline)
                    if header_resp.env is None or header_resp.has_errors():
                        raise _WorkerCrashed("environment creation failed")
                    env = header_resp.env
                    with self._cond:
                        worker.cache[key] = env
                        while len(worker.cache) > self.cache_capacity:
                            worker.cache.popitem(last=False)
                resp = self._exchange(worker, body, env, deadline)
            else:
                with self._cond:
                    self._counters.cache_misses += 1
                resp = self._exchange(worker, source, None, deadline)
            resp.elapsed_ms = int((time.monotonic() - started) * 1000)
            with self._cond:
                worker.commands_served += 1
                self._counters.completed += 1
                self._counters.completions.append(time.monotonic())
            return SubmitResult(response=resp, cache_hit=cache_hit, status="ok", worker_id=worker.worker_id)
        except _AttemptTimeout:
            dead = True
            worker.kill()
            with self._cond:
                self._counters.timeouts += 1
            resp = ReplResponse(elapsed_ms=int((time.monotonic() - started) * 1000))
            return SubmitResult(response=resp, cache_hit=cache_hit, status="timeout", worker_id=worker.worker_id)
        except _WorkerCrashed as exc:
            dead = True
            worker.kill()
            with self._cond:
                self._counters.crashes += 1
            exc.worker_id = worker.worker_id
            raise
        finally:
            self._release(worker, dead=dead)

    def submit(self, source: str, timeout_ms: int | None = None) -> SubmitResult:
        """Verify one source text; blocks until a worker is free.

        Timeouts kill and replace the worker and come back marked rather than
        raised.  A crashed worker gets the command retried once elsewhere;
        a second crash comes back with status "crash".
        """
        if not source:
            raise ValueError("source must be non-empty")
        effective = self.default_timeout_ms if timeout_ms is None else timeout_ms
        if effective < MIN_TIMEOUT_MS:
            raise ValueError(f"timeout_ms must be >= {MIN_TIMEOUT_MS}")
        for retry in (False, True):
            try:
                return self._attempt(source, effective)
            except _WorkerCrashed as exc:
                if retry:
                    resp = ReplResponse()
                    return SubmitResult(
                        response=resp,
                        cache_hit=False,
                        status="crash",
                        worker_id=getattr(exc, "worker_id", -1),
                    )
                continue
        raise AssertionError("unreachable")

    # -- introspection -------------------------------------------------------

    def metrics(self) -> PoolMetrics:
        with self._cond:
            now = time.monotonic()
            horizon = now - THROUGHPUT_WINDOW_S
            completions = self._counters.completions
            while completions and completions[0] < horizon:
                completions.popleft()
            window = min(THROUGHPUT_WINDOW_S, max(now - self._started, 1e-9))
            throughput = len(completions) / window
            lookups = self._counters.cache_hits + self._counters.cache_misses
            return PoolMetrics(
                throughput_per_s=throughput,
                cache_hit_rate=self._counters.cache_hits / lookups if lookups else 0.0,
                live_workers=len(self._workers),
                timeouts=self._counters.timeouts,
                crashes=self._counters.crashes,
                completed=self._counters.completed,
                cache_hits=self._counters.cache_hits,
                cache_misses=self._counters.cache_misses,
                queue_depth=self._waiting,
            )

    @property
    def alive(self) -> bool:
        with self._cond:
            return not self._closed and bool(self._workers)

    def worker_ids(self) -> list[int]:
        with self._cond:
            return [w.worker_id for w in self._workers]

    def commands_per_worker(self) -> dict[int, int]:
        with self._cond:
            return {w.worker_id: w.commands_served for w in self._workers}

    def transcripts(self) -> dict[int, list[dict]]:
        """Requests sent per worker (live and retired), in send order."""
        with self._cond:
            return {w.worker_id: list(w.transcript) for w in (*self._workers, *self._retired)}

    def cache_keys(self) -> dict[int, list[ImportHeaderKey]]:
        """Cached header keys per live worker, least recently used first."""
        with self._cond:
            return {w.worker_id: list(w.cache.keys()) for w in self._workers}


def spawn_pool(
    worker_count: int,
    launch_spec: str | Sequence[str],
    cache_capacity: int = 8,
    **kwargs,
) -> ReplPool:
    """Start a pool; fails atomically if any worker cannot start."""
    return ReplPool(worker_count, launch_spec, cache_capacity=cache_capacity, **kwargs)
