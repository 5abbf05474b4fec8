"""RL iteration orchestration: sample, roll out, verify, filter, emit.

Each iteration samples a batch of N problems, asks the policy for k
candidate solutions per problem, verifies every final proof for a binary
reward, and applies two filters before emitting training samples:

  * structural format filtering (tactic block present, snippet coverage of
    the final proof at or above the threshold), which excludes a sample
    entirely rather than feeding it back as a negative; and
  * random discarding of negative-gradient samples (reward 0) with
    probability omega.

For every retained sample the per-sample objective term is

    r - tau * log_Z - tau * (logp_new - logp_old)

with log_Z approximated by the empirical mean of the k rewards in the
sample's group.  The optimizer consuming these terms is external; this
module's output is the JSONL of retained samples plus iteration statistics.

Filter decisions derive from (seed, attempt_id) alone, so reruns with the
same seed are bit-identical regardless of thread scheduling.
"""

from __future__ import annotations

import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .errors import EmptyProblemSet, NonFiniteLogProb, PolicyUnavailable
from .pattern import FormatVerdict, ReasoningTrace, check_format, parse_trace
from .policy import PolicyClient
from .rng import derive_rng, derive_u01
from .verify import VerificationItem, VerificationResult

log = logging.getLogger(__name__)


@dataclass
class RolloutConfig:
    batch_problems: int = 1000
    rollouts_per_problem: int = 8
    tau: float = 0.4
    drop_prob: float = 0.5
    coverage_threshold: float = 0.6
    rng_seed: int = 0
    learning_rate: float = 2e-6  # recorded for provenance only; the optimizer is external
    max_tokens: int = 32768
    temperature: float = 1.0
    parallelism: int = 8
    log_z_scope: str = "pre_filter"  # or "post_format": mean over format-passing samples only

    def __post_init__(self):
        if self.batch_problems < 1:
            raise ValueError("batch_problems must be >= 1")
        if self.rollouts_per_problem < 1:
            raise ValueError("rollouts_per_problem must be >= 1")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must be in [0, 1]")
        if self.log_z_scope not in ("pre_filter", "post_format"):
            raise ValueError("log_z_scope must be pre_filter or post_format")


class Problem(Protocol):
    problem_id: str
    statement: str


@dataclass
class RolloutSample:
    problem_id: str
    attempt_id: str
    trace: ReasoningTrace
    format: FormatVerdict
    logp_old: float
    logp_new: float
    reward: int = 0
    verification: VerificationResult | None = None
    retained: bool = False
    objective_term: float | None = None


@dataclass
class RolloutGroup:
    problem_id: str
    samples: list[RolloutSample]
    log_z_hat: float


@dataclass
class IterationStats:
    iteration: int
    problems: int
    samples: int
    pass_rate: float
    mean_token_length: float
    format_pass_rate: float
    retained_fraction: float
    mean_objective: float
    sampled_with_replacement: bool = False

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "problems": self.problems,
            "samples": self.samples,
            "pass_rate": self.pass_rate,
            "mean_token_length": self.mean_token_length,
            "format_pass_rate": self.format_pass_rate,
            "retained_fraction": self.retained_fraction,
            "mean_objective": self.mean_objective,
            "sampled_with_replacement": self.sampled_with_replacement,
        }


class VerifierClient(Protocol):
    def verify_batch(
        self, items: Sequence[VerificationItem], timeout_ms: int | None = None, mode: str = "full_source"
    ) -> list[VerificationResult]:
        ...


def sample_batch(problems: Sequence[Problem], n: int, rng: random.Random) -> list[Problem]:
    """Uniform sample of n problems without replacement; with replacement
    (and a warning) when fewer than n are available."""
    pool = list(problems)
    if not pool:
        raise EmptyProblemSet("no active problems to sample from")
    if len(pool) >= n:
        return rng.sample(pool, n)
    log.warning("problem set has %d active problems < batch size %d; sampling with replacement", len(pool), n)
    return rng.choices(pool, k=n)


def objective_value(reward: float, log_z_hat: float, logp_new: float, logp_old: float, tau: float) -> float:
    """r - tau * log_Z - tau * (logp_new - logp_old)."""
    for name, v in (("logp_new", logp_new), ("logp_old", logp_old)):
        if not math.isfinite(v):
            raise NonFiniteLogProb(f"{name} is not finite: {v}")
    return reward - tau * log_z_hat - tau * (logp_new - logp_old)


def objective_term(sample: RolloutSample, log_z_hat: float, tau: float) -> float:
    return objective_value(sample.reward, log_z_hat, sample.logp_new, sample.logp_old, tau)


def group_log_z(samples: Sequence[RolloutSample], scope: str = "pre_filter") -> float:
    """Empirical mean of the group's binary rewards; equals successes/k exactly."""
    pool = samples if scope == "pre_filter" else [s for s in samples if s.format.passes_filter]
    if not pool:
        return 0.0
    return sum(s.reward for s in pool) / len(pool)


def apply_filters(group: RolloutGroup, cfg: RolloutConfig, seed: int | None = None) -> RolloutGroup:
    """Set retained flags: format failures are out; reward-0 survivors are
    dropped independently with probability drop_prob; reward-1 survivors stay.

    The drop decision for a sample is a pure function of (seed, attempt_id).
    """
    effective_seed = cfg.rng_seed if seed is None else seed
    for sample in group.samples:
        if not sample.format.passes_filter:
            sample.retained = False
        elif sample.reward == 1:
            sample.retained = True
        else:
            u = derive_u01(effective_seed, "drop", sample.attempt_id)
            sample.retained = u >= cfg.drop_prob
    return group


def run_iteration(
    cfg: RolloutConfig,
    policy: PolicyClient,
    verifier: VerifierClient,
    problems: Sequence[Problem],
    iteration: int = 0,
) -> tuple[list[RolloutGroup], IterationStats]:
    """One full iteration over a batch sampled from `problems`.

    Problems run concurrently, so verification of early groups overlaps
    generation of later ones; the verifier never serializes the iteration.
    """
    rng = derive_rng(cfg.rng_seed, "batch", str(iteration))
    pool = list(problems)
    batch = sample_batch(pool, cfg.batch_problems, rng)
    with_replacement = len(pool) < cfg.batch_problems

    def run_problem(problem: Problem) -> RolloutGroup:
        try:
            completions = policy.generate(
                problem.statement, cfg.rollouts_per_problem, cfg.max_tokens, cfg.temperature
            )
            logp_new = policy.score(problem.statement, [c.text for c in completions])
        except Exception as exc:
            raise PolicyUnavailable(f"policy failed for {problem.problem_id}: {exc}") from exc
        if len(completions) != cfg.rollouts_per_problem:
            raise PolicyUnavailable(
                f"policy returned {len(completions)} completions, expected {cfg.rollouts_per_problem}"
            )
        samples = []
        items = []
        for i, comp in enumerate(completions):
            attempt_id = f"{problem.problem_id}/{iteration}/{i}"
            trace = parse_trace(comp.text)
            verdict = check_format(trace, cfg.coverage_threshold)
            sample = RolloutSample(
                problem_id=problem.problem_id,
                attempt_id=attempt_id,
                trace=trace,
                format=verdict,
                logp_old=comp.logp,
                logp_new=logp_new[i],
            )
            samples.append(sample)
            if trace.final_proof is not None:
                items.append(VerificationItem(attempt_id, trace.final_proof))
        if items:
            by_id = {r.attempt_id: r for r in verifier.verify_batch(items, mode="final_proof_only")}
            for sample in samples:
                result = by_id.get(sample.attempt_id)
                if result is not None:
                    sample.verification = result
                    sample.reward = result.reward
        group = RolloutGroup(
            problem_id=problem.problem_id,
            samples=samples,
            log_z_hat=group_log_z(samples, cfg.log_z_scope),
        )
        apply_filters(group, cfg)
        for sample in group.samples:
            if sample.retained:
                sample.objective_term = objective_term(sample, group.log_z_hat, cfg.tau)
        return group

    with ThreadPoolExecutor(max_workers=cfg.parallelism) as ex:
        groups = list(ex.map(run_problem, batch))

    total = sum(len(g.samples) for g in groups)
    expected = cfg.batch_problems * cfg.rollouts_per_problem
    if total != expected:
        raise AssertionError(f"sample conservation violated: {total} != {expected}")

    stats = iteration_stats(groups, iteration=iteration, sampled_with_replacement=with_replacement)
    return groups, stats


def iteration_stats(
    groups: Sequence[RolloutGroup], iteration: int = 0, sampled_with_replacement: bool = False
) -> IterationStats:
    samples = [s for g in groups for s in g.samples]
    if not samples:
        raise ValueError("iteration_stats needs at least one group with samples")
    retained = [s for s in samples if s.retained]
    return IterationStats(
        iteration=iteration,
        problems=len(groups),
        samples=len(samples),
        pass_rate=sum(s.reward for s in samples) / len(samples),
        mean_token_length=sum(s.trace.token_count for s in samples) / len(samples),
        format_pass_rate=sum(1 for s in samples if s.format.passes_filter) / len(samples),
        retained_fraction=len(retained) / len(samples),
        mean_objective=(
            sum(s.objective_term for s in retained if s.objective_term is not None) / len(retained)
            if retained
            else 0.0
        ),
        sampled_with_replacement=sampled_with_replacement,
    )


def write_samples_jsonl(groups: Iterable[RolloutGroup], path: str | Path) -> int:
    """One line per retained sample, for the external training framework."""
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for group in groups:
            for s in group.samples:
                if not s.retained:
                    continue
                f.write(
                    json.dumps(
                        {
                            "problem_id": s.problem_id,
                            "attempt_id": s.attempt_id,
                            "reward": s.reward,
                            "log_Z_hat": group.log_z_hat,
                            "logp_new": s.logp_new,
                            "logp_old": s.logp_old,
                            "objective_term": s.objective_term,
                            "coverage_ratio": s.format.coverage_ratio,
                        }
                    )
                    + "\n"
                )
                count += 1
    return count


def append_iteration_stats(stats: IterationStats, path: str | Path) -> None:
    with open(path, "a", encoding="utf-8") as f:
        f.write(json.dumps(stats.to_dict()) + "\n")
