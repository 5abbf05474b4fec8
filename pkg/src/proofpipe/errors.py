"""Exception types shared across the package."""


class ProofPipeError(Exception):
    """Base class for all domain errors raised by this package."""


class SpawnFailure(ProofPipeError):
    """A REPL worker subprocess could not be started."""

    def __init__(self, worker_id: int, reason: str):
        super().__init__(f"worker {worker_id} failed to spawn: {reason}")
        self.worker_id = worker_id
        self.reason = reason


class PoolShutdown(ProofPipeError):
    """Submission attempted against a pool that has been shut down."""


class ServiceUnavailable(ProofPipeError):
    """The verification backend is dead; the whole batch is refused."""


class MissingFinalProof(ProofPipeError):
    """Coverage was requested for a trace that has no final proof block."""


class NonFiniteLogProb(ProofPipeError):
    """Objective term inputs must be finite."""


class EmptyProblemSet(ProofPipeError):
    """Batch sampling needs at least one active problem."""


class PolicyUnavailable(ProofPipeError):
    """The policy client failed to produce completions."""


class DuplicateName(ProofPipeError):
    """Benchmark statement names must be unique."""


class MalformedStatement(ProofPipeError):
    """A benchmark record is missing required fields or is not valid JSON."""


class InsufficientAttempts(ProofPipeError):
    """The unbiased pass@k estimator needs at least k attempts per statement."""


class RaterUnavailable(ProofPipeError):
    """The difficulty rater client failed."""


class JudgeUnavailable(ProofPipeError):
    """The judge client failed."""


class SchemaMismatch(ProofPipeError):
    """Wire payload carries an incompatible schema major version."""
