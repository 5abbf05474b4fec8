"""The `proofpipe` command: one binary, one subcommand per workflow.

Every run loads a JSON config (optional), applies --set key=value overrides,
prints the effective config up front, and ends stdout with a one-line JSON
summary.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

from .bench.benchmark import load_benchmark
from .bench.decontam import CorpusDoc, decontaminate
from .bench.harness import compute_report, evaluate
from .bench.passk import AttemptLedger, pass_at_k
from .bench.report import emit_report
from .curation.judge import MockRater
from .curation.records import ProblemRecord
from .curation.store import (
    ProblemStore,
    adaptive_prune,
    build_store,
    export_annotation_queue,
    route_to_annotation,
)
from .errors import ProofPipeError
from .policy import BernoulliProofPolicy, ScriptedPolicy
from .repl.pool import ReplPool, mock_launch_spec
from .rollout import (
    RolloutConfig,
    append_iteration_stats,
    run_iteration,
    write_samples_jsonl,
)
from .service import ServiceConfig, create_app
from .verify import BatchVerifier, VerificationItem

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


# -- config plumbing -----------------------------------------------------------


def _parse_override(raw: str) -> tuple[str, Any]:
    if "=" not in raw:
        raise UsageError(f"override must be key=value, got {raw!r}")
    key, text = raw.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    return key, value


def _apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    for raw in overrides:
        key, value = _parse_override(raw)
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise UsageError(f"cannot descend into non-object at {part!r} in {key!r}")
        target[parts[-1]] = value
    return data


def _strict_dataclass(cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    return cls(**data)


def _load_config(args: argparse.Namespace) -> dict:
    data: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            data = json.load(f)
    return _apply_overrides(data, getattr(args, "set", []) or [])


def _print_effective(command: str, config: dict) -> None:
    print(f"effective config ({command}): {json.dumps(config, sort_keys=True, default=str)}")


def _summary(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


# -- shared specs -----------------------------------------------------------------


@dataclass
class PoolSpec:
    workers: int = 4
    cache_capacity: int = 8
    timeout_ms: int = 60_000
    latency_ms: int = 0
    repl_command: str = ""
    repl_cwd: str | None = None

    def launch(self) -> ReplPool:
        command = self.repl_command or mock_launch_spec(self.latency_ms)
        return ReplPool(
            self.workers,
            command,
            cache_capacity=self.cache_capacity,
            default_timeout_ms=self.timeout_ms,
            cwd=self.repl_cwd,
        )


@dataclass
class PolicySpec:
    kind: str = "bernoulli"
    p_success: float = 0.5
    seed: int = 0
    script_path: str | None = None

    def build(self):
        if self.kind == "bernoulli":
            return BernoulliProofPolicy(p_success=self.p_success, seed=self.seed)
        if self.kind == "scripted":
            if not self.script_path:
                raise UsageError("scripted policy needs script_path")
            with open(self.script_path, encoding="utf-8") as f:
                data = json.load(f)
            return ScriptedPolicy(outputs=data.get("outputs"), fallback=data.get("fallback"))
        raise UsageError(f"unknown policy kind {self.kind!r}")


# -- subcommands ---------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    config = ServiceConfig.from_dict(config_data)
    _print_effective("serve", config.to_dict())
    app = create_app(config)
    import uvicorn

    _summary({"command": "serve", "status": "ok", "listen": f"{config.listen_host}:{config.listen_port}"})
    uvicorn.run(app, host=config.listen_host, port=config.listen_port, log_level="info")
    return 0


@dataclass
class VerifyCmdConfig:
    input: str = ""
    output: str = ""
    mode: str = "full_source"
    timeout_ms: int | None = None
    final_proof_header: str = ""
    pool: dict = field(default_factory=dict)


def cmd_verify(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    cfg = _strict_dataclass(VerifyCmdConfig, config_data)
    if args.input:
        cfg.input = args.input
    if args.output:
        cfg.output = args.output
    if not cfg.input:
        raise UsageError("verify needs an --input JSONL of {attempt_id, source}")
    _print_effective("verify", asdict(cfg))

    items = []
    with open(cfg.input, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                row = json.loads(line)
                items.append(VerificationItem(row["attempt_id"], row["source"]))
    pool = _strict_dataclass(PoolSpec, cfg.pool).launch()
    try:
        verifier = BatchVerifier(pool, final_proof_header=cfg.final_proof_header)
        results = verifier.verify_batch(items, timeout_ms=cfg.timeout_ms, mode=cfg.mode)
    finally:
        pool.shutdown()

    out_path = cfg.output or (cfg.input + ".results.jsonl")
    with open(out_path, "w", encoding="utf-8") as f:
        for r in results:
            f.write(
                json.dumps(
                    {
                        "attempt_id": r.attempt_id,
                        "correct": r.correct,
                        "reward": r.reward,
                        "failure_kind": r.failure_kind,
                        "elapsed_ms": r.elapsed_ms,
                        "cache_hit": r.cache_hit,
                    }
                )
                + "\n"
            )
    correct = sum(r.reward for r in results)
    _summary({"command": "verify", "status": "ok", "items": len(results), "correct": correct, "output": out_path})
    return 0


@dataclass
class EvalCmdConfig:
    bench: str = ""
    patches: str | None = None
    budget: int = 8
    max_tokens: int = 32768
    early_stop: bool = False
    subset: str | None = None
    ks: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    report_format: str = "markdown_table"
    output: str = "report.out"
    ledger_output: str | None = None
    system: str = "proofpipe-mock"
    size: str = "n/a"
    parallelism: int = 4
    seed: int = 0
    pool: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)


def cmd_eval(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    cfg = _strict_dataclass(EvalCmdConfig, config_data)
    for name in ("budget", "max_tokens", "subset", "report_format", "output"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.early_stop:
        cfg.early_stop = True
    if args.seed is not None:
        cfg.seed = args.seed
    if not cfg.bench:
        raise UsageError("eval needs a bench JSONL path in config (key: bench)")
    _print_effective("eval", asdict(cfg))

    bench = load_benchmark(cfg.bench, cfg.patches)
    if cfg.subset:
        bench = [s for s in bench if cfg.subset in s.subset_tags]
        if not bench:
            raise ProofPipeError(f"no statements carry subset tag {cfg.subset!r}")
    ks = [k for k in cfg.ks if k <= cfg.budget] or [cfg.budget]

    policy = _strict_dataclass(PolicySpec, cfg.policy)
    policy.seed = cfg.seed
    pool = _strict_dataclass(PoolSpec, cfg.pool).launch()
    try:
        verifier = BatchVerifier(pool)
        ledger = evaluate(
            bench,
            policy.build(),
            verifier,
            budget=cfg.budget,
            max_tokens=cfg.max_tokens,
            early_stop=cfg.early_stop,
            parallelism=cfg.parallelism,
        )
    finally:
        pool.shutdown()

    if cfg.ledger_output:
        ledger.to_jsonl(cfg.ledger_output)
    report = compute_report(ledger, bench, ks=ks, system=cfg.system, size=cfg.size)
    emit_report(report, cfg.report_format, cfg.output)
    _summary(
        {
            "command": "eval",
            "status": "ok",
            "statements": report.statements,
            "budget": cfg.budget,
            "pass_at_max_k": report.overall[max(ks)].cumulative,
            "report": cfg.output,
        }
    )
    return 0


@dataclass
class DecontamCmdConfig:
    corpus: str = ""
    bench: str = ""
    ngram_size: int = 13
    blocklist: list[str] = field(default_factory=lambda: ["AMC12", "AIME", "IMO"])
    output: str = "corpus.decontaminated.jsonl"
    report: str = "decontamination.report.json"


def cmd_decontaminate(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    cfg = _strict_dataclass(DecontamCmdConfig, config_data)
    if args.corpus:
        cfg.corpus = args.corpus
    if args.bench:
        cfg.bench = args.bench
    if not cfg.corpus or not cfg.bench:
        raise UsageError("decontaminate needs --corpus and --bench JSONL paths")
    _print_effective("decontaminate", asdict(cfg))

    corpus = []
    with open(cfg.corpus, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                row = json.loads(line)
                corpus.append(CorpusDoc(row["doc_id"], row["text"], row.get("source_tag")))
    bench = load_benchmark(cfg.bench)
    kept, report = decontaminate(corpus, bench, n=cfg.ngram_size, source_blocklist=cfg.blocklist)

    with open(cfg.output, "w", encoding="utf-8") as f:
        for doc in kept:
            f.write(json.dumps({"doc_id": doc.doc_id, "text": doc.text, "source_tag": doc.source_tag}) + "\n")
    with open(cfg.report, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    _summary(
        {
            "command": "decontaminate",
            "status": "ok",
            "scanned": report.scanned,
            "kept": report.kept,
            "removed": len(report.removals),
            "output": cfg.output,
        }
    )
    return 0


@dataclass
class RolloutCmdConfig:
    problems: str = ""
    iterations: int = 1
    batch_problems: int = 8
    rollouts_per_problem: int = 8
    tau: float = 0.4
    drop_prob: float = 0.5
    coverage_threshold: float = 0.6
    max_tokens: int = 32768
    parallelism: int = 8
    seed: int = 0
    output_dir: str = "rollout_out"
    pool: dict = field(default_factory=dict)
    policy: dict = field(default_factory=dict)


def cmd_rollout(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    cfg = _strict_dataclass(RolloutCmdConfig, config_data)
    if args.seed is not None:
        cfg.seed = args.seed
    if not cfg.problems:
        raise UsageError("rollout needs a problems JSONL path in config (key: problems)")
    _print_effective("rollout", asdict(cfg))

    problems = []
    with open(cfg.problems, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                row = json.loads(line)
                problems.append(
                    ProblemRecord(
                        problem_id=row["problem_id"],
                        statement=row["statement"],
                        informal_text=row.get("informal_text", ""),
                    )
                )

    rollout_cfg = RolloutConfig(
        batch_problems=cfg.batch_problems,
        rollouts_per_problem=cfg.rollouts_per_problem,
        tau=cfg.tau,
        drop_prob=cfg.drop_prob,
        coverage_threshold=cfg.coverage_threshold,
        rng_seed=cfg.seed,
        max_tokens=cfg.max_tokens,
        parallelism=cfg.parallelism,
    )
    policy = _strict_dataclass(PolicySpec, cfg.policy)
    policy.seed = cfg.seed
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    pool = _strict_dataclass(PoolSpec, cfg.pool).launch()
    retained_total = 0
    try:
        verifier = BatchVerifier(pool)
        client = policy.build()
        for iteration in range(cfg.iterations):
            groups, stats = run_iteration(rollout_cfg, client, verifier, problems, iteration=iteration)
            retained_total += write_samples_jsonl(groups, out_dir / f"samples_{iteration:04d}.jsonl")
            append_iteration_stats(stats, out_dir / "iterations.jsonl")
    finally:
        pool.shutdown()

    _summary(
        {
            "command": "rollout",
            "status": "ok",
            "iterations": cfg.iterations,
            "retained_samples": retained_total,
            "output_dir": str(out_dir),
        }
    )
    return 0


@dataclass
class CurateCmdConfig:
    action: str = ""
    human: str = ""
    auto: str = ""
    snapshot: str = "store.snapshot.jsonl"
    event_log: str | None = None
    bins: int = 5
    rating: int = 5
    window: int = 2
    threshold: float = 7 / 8
    unsolved_span: int = 5
    queue_output: str = "annotation_queue.jsonl"
    seed: int = 0


def _load_records(path: str) -> list[ProblemRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                row = json.loads(line)
                records.append(
                    ProblemRecord(
                        problem_id=row["problem_id"],
                        statement=row["statement"],
                        informal_text=row.get("informal_text", ""),
                    )
                )
    return records


def cmd_curate(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    cfg = _strict_dataclass(CurateCmdConfig, config_data)
    if args.action:
        cfg.action = args.action
    _print_effective("curate", asdict(cfg))

    if cfg.action == "build":
        if not cfg.human or not cfg.auto:
            raise UsageError("curate build needs human and auto JSONL paths in config")
        store = build_store(
            _load_records(cfg.human),
            _load_records(cfg.auto),
            MockRater(cfg.rating),
            bins=cfg.bins,
            seed=cfg.seed,
            event_log_path=cfg.event_log,
        )
        store.save_snapshot(cfg.snapshot)
        _summary({"command": "curate", "action": "build", "status": "ok", "records": len(store), "snapshot": cfg.snapshot})
        return 0
    if cfg.action == "prune":
        store = ProblemStore.load_snapshot(cfg.snapshot, event_log_path=cfg.event_log)
        pruned = adaptive_prune(store, window=cfg.window, threshold=cfg.threshold)
        store.save_snapshot(cfg.snapshot)
        _summary({"command": "curate", "action": "prune", "status": "ok", "pruned": len(pruned)})
        return 0
    if cfg.action == "route":
        store = ProblemStore.load_snapshot(cfg.snapshot, event_log_path=cfg.event_log)
        queued = route_to_annotation(store, unsolved_span=cfg.unsolved_span)
        export_annotation_queue(store, cfg.queue_output)
        store.save_snapshot(cfg.snapshot)
        _summary({"command": "curate", "action": "route", "status": "ok", "queued": len(queued), "output": cfg.queue_output})
        return 0
    raise UsageError(f"unknown curate action {cfg.action!r} (expected build, prune, or route)")


@dataclass
class ReportCmdConfig:
    ledger: str = ""
    ks: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    report_format: str = "markdown_table"
    output: str = "report.out"
    system: str = "proofpipe"
    size: str = "n/a"


def cmd_report(args: argparse.Namespace) -> int:
    config_data = _load_config(args)
    cfg = _strict_dataclass(ReportCmdConfig, config_data)
    if args.ledger:
        cfg.ledger = args.ledger
    if args.report_format:
        cfg.report_format = args.report_format
    if args.output:
        cfg.output = args.output
    if not cfg.ledger:
        raise UsageError("report needs --ledger JSONL path")
    _print_effective("report", asdict(cfg))

    ledger = AttemptLedger.from_jsonl(cfg.ledger)
    max_n = ledger.min_attempts()
    ks = [k for k in cfg.ks if k <= max_n] or ([max_n] if max_n else [])
    if not ks:
        raise ProofPipeError("ledger has no attempts")
    from .bench.report import KPoint, PassAtKReport

    overall = {}
    for k in ks:
        values = pass_at_k(ledger, k)
        overall[k] = KPoint(cumulative=values["cumulative"], unbiased=values["unbiased"])
    report = PassAtKReport(
        system=cfg.system,
        size=cfg.size,
        statements=len(ledger.names()),
        mean_token_length=ledger.mean_token_length(),
        ks=ks,
        overall=overall,
    )
    emit_report(report, cfg.report_format, cfg.output)
    _summary({"command": "report", "status": "ok", "statements": report.statements, "output": cfg.output})
    return 0


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proofpipe", description="formal proving experiment backend")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override")
        p.add_argument("--seed", type=int, default=None)

    p_serve = sub.add_parser("serve", help="run the verification HTTP service")
    common(p_serve)
    p_serve.set_defaults(handler=cmd_serve)

    p_verify = sub.add_parser("verify", help="verify a JSONL batch of proofs")
    common(p_verify)
    p_verify.add_argument("--input", help="JSONL of {attempt_id, source}")
    p_verify.add_argument("--output", help="results JSONL path")
    p_verify.set_defaults(handler=cmd_verify)

    p_eval = sub.add_parser("eval", help="pass@k benchmark evaluation")
    common(p_eval)
    p_eval.add_argument("--budget", type=int, default=None)
    p_eval.add_argument("--max-tokens", dest="max_tokens", type=int, default=None)
    p_eval.add_argument("--early-stop", dest="early_stop", action="store_true")
    p_eval.add_argument("--subset", default=None, help="restrict to one subset tag")
    p_eval.add_argument("--report-format", dest="report_format", choices=["csv", "json", "markdown_table"], default=None)
    p_eval.add_argument("--output", default=None)
    p_eval.set_defaults(handler=cmd_eval)

    p_dec = sub.add_parser("decontaminate", help="n-gram + blocklist corpus filtering")
    common(p_dec)
    p_dec.add_argument("--corpus", default=None)
    p_dec.add_argument("--bench", default=None)
    p_dec.set_defaults(handler=cmd_decontaminate)

    p_roll = sub.add_parser("rollout", help="run RL iterations against a mock or real policy")
    common(p_roll)
    p_roll.set_defaults(handler=cmd_rollout)

    p_cur = sub.add_parser("curate", help="problem store maintenance")
    common(p_cur)
    p_cur.add_argument("--action", choices=["build", "prune", "route"], default="")
    p_cur.set_defaults(handler=cmd_curate)

    p_rep = sub.add_parser("report", help="pass@k report from a saved ledger")
    common(p_rep)
    p_rep.add_argument("--ledger", default=None)
    p_rep.add_argument("--report-format", dest="report_format", choices=["csv", "json", "markdown_table"], default=None)
    p_rep.add_argument("--output", default=None)
    p_rep.set_defaults(handler=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        _summary({"command": args.command, "status": "usage_error", "error": str(exc)})
        return 2
    except ProofPipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _summary({"command": args.command, "status": "error", "error": str(exc)})
        return 1


if __name__ == "__main__":
    sys.exit(main())
