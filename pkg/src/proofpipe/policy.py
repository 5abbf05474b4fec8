"""Policy client contract and the scripted mocks that ship with the harness.

A policy answers two calls: `generate` samples k completions for a prompt
(each with its log-probability under the sampling policy), and `score`
re-scores given texts under the current policy.  Real deployments put a
model server behind this interface; tests and desk-scale runs use the mocks.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

from .rng import derive_u01


@dataclass(frozen=True)
class Completion:
    text: str
    logp: float


class PolicyClient(Protocol):
    def generate(self, prompt: str, k: int, max_tokens: int, temperature: float) -> list[Completion]:
        ...

    def score(self, prompt: str, texts: Sequence[str]) -> list[float]:
        ...


def format_trace(
    final_proof: str,
    snippets: Sequence[str] | None = None,
    prose: str = "Working through the statement step by step.",
) -> str:
    """Synthesize an output in the expected reasoning shape.

    By default the single snippet repeats the final proof, so the trace
    passes coverage at any threshold.
    """
    if snippets is None:
        snippets = [final_proof]
    parts = ["<think>", prose, ""]
    for snippet in snippets:
        parts += ["```lean4", snippet.rstrip("\n"), "```", ""]
    parts += ["</think>", "", "```lean4", final_proof.rstrip("\n"), "```", ""]
    return "\n".join(parts)


class ScriptedPolicy:
    """Fixed completions per prompt, cycled out to k; fully deterministic.

    `outputs` maps a prompt to its scripted texts; `fallback` serves prompts
    with no entry.  logp_old is assigned per completion as base - index;
    `score` returns the recorded logp plus `new_delta`, so logp_new equals
    logp_old exactly when new_delta is 0.
    """

    def __init__(
        self,
        outputs: Mapping[str, Sequence[str]] | None = None,
        fallback: Sequence[str] | None = None,
        logp_base: float = -25.0,
        new_delta: float = 0.0,
    ):
        self.outputs = dict(outputs or {})
        self.fallback = list(fallback or [])
        self.logp_base = logp_base
        self.new_delta = new_delta
        self._logp: dict[str, float] = {}
        self._lock = threading.Lock()

    def generate(self, prompt: str, k: int, max_tokens: int = 32768, temperature: float = 1.0) -> list[Completion]:
        scripts = list(self.outputs.get(prompt, self.fallback))
        if not scripts:
            scripts = [format_trace("theorem default : True := by\n  trivial")]
        completions = []
        for i in range(k):
            text = scripts[i % len(scripts)]
            logp = self.logp_base - float(i)
            with self._lock:
                self._logp[text] = logp
            completions.append(Completion(text=text, logp=logp))
        return completions

    def score(self, prompt: str, texts: Sequence[str]) -> list[float]:
        with self._lock:
            return [self._logp.get(t, self.logp_base) + self.new_delta for t in texts]


class BernoulliProofPolicy:
    """Per-attempt success with probability p, decided by (seed, prompt, index).

    A "success" is a clean provable trace; a "failure" carries a scripted
    compile error, so correctness is still decided by the verifier.  Attempt
    indices advance per prompt, making budget-sliced evaluation reproducible.
    """

    def __init__(self, p_success: float, seed: int = 0, logp_base: float = -30.0):
        self.p_success = p_success
        self.seed = seed
        self.logp_base = logp_base
        self._counters: dict[str, int] = {}
        self._lock = threading.Lock()

    def _proof_for(self, prompt: str, index: int) -> str:
        ok = derive_u01(self.seed, "bernoulli", prompt, str(index)) < self.p_success
        if ok:
            return f"theorem attempt_{index} : True := by\n  trivial"
        return f"theorem attempt_{index} : True := by\n  trivial\n--! error scripted failure"

    def generate(self, prompt: str, k: int, max_tokens: int = 32768, temperature: float = 1.0) -> list[Completion]:
        with self._lock:
            start = self._counters.get(prompt, 0)
            self._counters[prompt] = start + k
        return [
            Completion(text=format_trace(self._proof_for(prompt, start + i)), logp=self.logp_base)
            for i in range(k)
        ]

    def score(self, prompt: str, texts: Sequence[str]) -> list[float]:
        return [self.logp_base for _ in texts]
