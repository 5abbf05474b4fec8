import json
import math
import random
from dataclasses import dataclass

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proofpipe.errors import EmptyProblemSet, NonFiniteLogProb
from proofpipe.pattern import check_format, parse_trace
from proofpipe.policy import ScriptedPolicy, format_trace
from proofpipe.repl.pool import mock_launch_spec, spawn_pool
from proofpipe.rollout import (
    RolloutConfig,
    RolloutGroup,
    RolloutSample,
    apply_filters,
    group_log_z,
    iteration_stats,
    objective_term,
    objective_value,
    run_iteration,
    sample_batch,
    write_samples_jsonl,
)
from proofpipe.verify import BatchVerifier


@dataclass
class Prob:
    problem_id: str
    statement: str


def make_sample(attempt_id, reward, passes=True, logp_old=-10.0, logp_new=-10.0, tokens=100):
    text = format_trace("theorem t : True := by\n  trivial")
    trace = parse_trace(text)
    verdict = check_format(trace)
    assert verdict.passes_filter
    if not passes:
        bad = parse_trace("no structure at all")
        verdict = check_format(bad)
        trace = bad
    return RolloutSample(
        problem_id=attempt_id.split("/")[0],
        attempt_id=attempt_id,
        trace=trace,
        format=verdict,
        logp_old=logp_old,
        logp_new=logp_new,
        reward=reward,
    )


class TestSampleBatch:
    def test_exhaustive_when_equal(self):
        problems = [Prob(f"p{i}", "s") for i in range(5)]
        out = sample_batch(problems, 5, random.Random(7))
        assert sorted(p.problem_id for p in out) == sorted(p.problem_id for p in problems)

    def test_seed_determinism(self):
        problems = [Prob(f"p{i}", "s") for i in range(50)]
        a = sample_batch(problems, 10, random.Random(123))
        b = sample_batch(problems, 10, random.Random(123))
        assert [p.problem_id for p in a] == [p.problem_id for p in b]

    def test_empty_store_raises(self):
        with pytest.raises(EmptyProblemSet):
            sample_batch([], 1, random.Random(0))

    def test_with_replacement_when_short(self):
        problems = [Prob("only", "s")]
        out = sample_batch(problems, 4, random.Random(0))
        assert len(out) == 4

    def test_uniform_inclusion_frequency(self):
        # 10_000 problems sampled at N=1000 over 300 trials: per-problem
        # inclusion frequency should sit within 3 sigma of 0.1.
        problems = [Prob(f"p{i}", "s") for i in range(10_000)]
        trials = 300
        counts = {p.problem_id: 0 for p in problems}
        rng = random.Random(42)
        for _ in range(trials):
            for p in sample_batch(problems, 1000, rng):
                counts[p.problem_id] += 1
        p_inc = 0.1
        sigma = math.sqrt(p_inc * (1 - p_inc) / trials)
        freqs = [c / trials for c in counts.values()]
        outliers = sum(1 for f in freqs if abs(f - p_inc) > 3 * sigma)
        # ~0.27% of 10k may exceed 3 sigma by chance; allow a small margin.
        assert outliers < 60
        assert abs(sum(freqs) / len(freqs) - p_inc) < 0.001


class TestObjective:
    def test_matched_policies_simple_value(self):
        s = make_sample("p/0/0", reward=1)
        assert objective_term(s, log_z_hat=0.5, tau=0.4) == pytest.approx(0.8, abs=1e-15)

    def test_tau_zero_gives_reward(self):
        s = make_sample("p/0/0", reward=1, logp_old=-5.0, logp_new=-2.0)
        assert objective_term(s, log_z_hat=0.75, tau=0.0) == 1.0

    def test_negative_sample_with_ratio(self):
        s = make_sample("p/0/0", reward=0, logp_old=-11.0, logp_new=-10.0)
        assert objective_term(s, log_z_hat=0.0, tau=0.4) == pytest.approx(-0.4, abs=1e-15)

    def test_non_finite_rejected(self):
        s = make_sample("p/0/0", reward=1, logp_new=float("nan"))
        with pytest.raises(NonFiniteLogProb):
            objective_term(s, 0.5, 0.4)

    @settings(max_examples=500, deadline=None)
    @given(
        r=st.integers(0, 1),
        lz=st.floats(0, 1),
        lp=st.floats(-1000, 0),
        tau=st.floats(0, 2),
    )
    def test_identity_when_policies_coincide(self, r, lz, lp, tau):
        assert objective_value(r, lz, lp, lp, tau) == pytest.approx(r - tau * lz, abs=1e-12)


class TestLogZ:
    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=64))
    def test_equals_success_fraction_exactly(self, rewards):
        samples = [make_sample(f"p/0/{i}", r) for i, r in enumerate(rewards)]
        assert group_log_z(samples) == sum(rewards) / len(rewards)

    def test_in_unit_interval(self):
        samples = [make_sample(f"p/0/{i}", i % 2) for i in range(8)]
        assert 0.0 <= group_log_z(samples) <= 1.0


class TestFilters:
    def _group(self, rewards, passes=None):
        passes = passes or [True] * len(rewards)
        samples = [make_sample(f"g/0/{i}", r, p) for i, (r, p) in enumerate(zip(rewards, passes))]
        return RolloutGroup("g", samples, log_z_hat=group_log_z(samples))

    def test_all_positive_all_retained(self):
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=4)
        g = apply_filters(self._group([1, 1, 1, 1]), cfg)
        assert all(s.retained for s in g.samples)

    def test_format_failures_excluded(self):
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=2)
        g = apply_filters(self._group([1, 1], passes=[True, False]), cfg)
        assert g.samples[0].retained and not g.samples[1].retained

    def test_omega_one_drops_all_negatives(self):
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=4, drop_prob=1.0)
        g = apply_filters(self._group([0, 0, 0, 1]), cfg)
        assert [s.retained for s in g.samples] == [False, False, False, True]

    def test_omega_zero_keeps_all(self):
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=3, drop_prob=0.0)
        g = apply_filters(self._group([0, 0, 0]), cfg)
        assert all(s.retained for s in g.samples)

    def test_drop_fraction_concentrates(self):
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=1, drop_prob=0.5, rng_seed=11)
        samples = [make_sample(f"m/0/{i}", 0) for i in range(10_000)]
        g = RolloutGroup("m", samples, 0.0)
        apply_filters(g, cfg)
        frac = sum(s.retained for s in samples) / len(samples)
        assert 0.48 <= frac <= 0.52

    def test_decisions_independent_of_order(self):
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=1, drop_prob=0.5, rng_seed=3)
        samples = [make_sample(f"o/0/{i}", 0) for i in range(200)]
        g1 = RolloutGroup("o", list(samples), 0.0)
        apply_filters(g1, cfg)
        decisions = {s.attempt_id: s.retained for s in g1.samples}
        shuffled = list(samples)
        random.Random(1).shuffle(shuffled)
        for s in shuffled:
            s.retained = False
        g2 = RolloutGroup("o", shuffled, 0.0)
        apply_filters(g2, cfg)
        assert {s.attempt_id: s.retained for s in g2.samples} == decisions


class TestStats:
    def test_all_zero_rewards(self):
        samples = [make_sample(f"s/0/{i}", 0) for i in range(4)]
        stats = iteration_stats([RolloutGroup("s", samples, 0.0)])
        assert stats.pass_rate == 0.0

    def test_half_and_half(self):
        samples = [make_sample(f"s/0/{i}", i % 2) for i in range(8)]
        stats = iteration_stats([RolloutGroup("s", samples, 0.5)])
        assert stats.pass_rate == 0.5

    def test_mean_token_length(self):
        a = make_sample("s/0/0", 1)
        b = make_sample("s/0/1", 1)
        object.__setattr__(a.trace, "token_count", 2500)
        object.__setattr__(b.trace, "token_count", 10000)
        stats = iteration_stats([RolloutGroup("s", [a, b], 1.0)])
        assert stats.mean_token_length == 6250.0


class TestEndToEnd:
    def test_small_iteration_against_mock(self):
        proof_ok = "theorem t : True := by\n  trivial"
        proof_bad = "theorem t : True := by\n  trivial\n--! error boom"
        policy = ScriptedPolicy(fallback=[format_trace(proof_ok), format_trace(proof_bad)])
        cfg = RolloutConfig(batch_problems=2, rollouts_per_problem=2, rng_seed=5, parallelism=2, drop_prob=0.0)
        with spawn_pool(2, mock_launch_spec(), cache_capacity=4) as pool:
            verifier = BatchVerifier(pool)
            problems = [Prob("p1", "theorem p1 : True := by sorry"), Prob("p2", "theorem p2 : True := by sorry")]
            groups, stats = run_iteration(cfg, policy, verifier, problems, iteration=0)
        assert len(groups) == 2
        assert stats.samples == 4
        for g in groups:
            rewards = [s.reward for s in g.samples]
            assert g.log_z_hat == sum(rewards) / len(rewards)
        assert stats.pass_rate == 0.5

    def test_format_and_reward_are_independent_axes(self):
        # Prose-only thinking fails format, but its final proof still verifies.
        prose_only = "<think>pure prose, no snippets</think>\n```lean4\ntheorem t : True := by\n  trivial\n```"
        policy = ScriptedPolicy(fallback=[prose_only])
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=2, parallelism=1)
        with spawn_pool(1, mock_launch_spec(), cache_capacity=2) as pool:
            verifier = BatchVerifier(pool)
            groups, stats = run_iteration(cfg, policy, verifier, [Prob("p", "theorem p : True := by sorry")])
        for s in groups[0].samples:
            assert s.reward == 1
            assert not s.format.passes_filter
            assert not s.retained
        assert stats.pass_rate == 1.0
        assert stats.format_pass_rate == 0.0

    def test_jsonl_output_schema(self, tmp_path):
        samples = [make_sample(f"j/0/{i}", 1) for i in range(3)]
        g = RolloutGroup("j", samples, 1.0)
        cfg = RolloutConfig(batch_problems=1, rollouts_per_problem=3)
        apply_filters(g, cfg)
        for s in g.samples:
            s.objective_term = objective_term(s, g.log_z_hat, cfg.tau)
        path = tmp_path / "out.jsonl"
        n = write_samples_jsonl([g], path)
        assert n == 3
        lines = path.read_text().splitlines()
        keys = {
            "problem_id",
            "attempt_id",
            "reward",
            "log_Z_hat",
            "logp_new",
            "logp_old",
            "objective_term",
            "coverage_ratio",
        }
        for line in lines:
            assert set(json.loads(line)) == keys
