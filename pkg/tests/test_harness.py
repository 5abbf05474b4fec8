import math

import pytest

from proofpipe.bench.benchmark import BenchmarkStatement
from proofpipe.bench.harness import compute_report, evaluate
from proofpipe.bench.report import (
    PassAtKReport,
    KPoint,
    emit_report,
    load_report,
    render_csv,
    render_markdown,
)
from proofpipe.policy import BernoulliProofPolicy, ScriptedPolicy, format_trace
from proofpipe.repl.pool import mock_launch_spec, spawn_pool
from proofpipe.verify import BatchVerifier


def _bench(count, tags=None):
    tags = tags or {}
    return [
        BenchmarkStatement(
            name=f"s{i}",
            statement=f"theorem s{i} : True := by sorry",
            informal_text=f"informal {i}",
            subset_tags=frozenset(tags.get(i, [])),
        )
        for i in range(count)
    ]


@pytest.fixture(scope="module")
def verifier():
    with spawn_pool(4, mock_launch_spec(), cache_capacity=4) as pool:
        yield BatchVerifier(pool)


class TestEvaluate:
    def test_always_correct_policy_solves_at_first_attempt(self, verifier):
        policy = ScriptedPolicy(fallback=[format_trace("theorem t : True := by\n  trivial")])
        ledger = evaluate(_bench(3), policy, verifier, budget=2, parallelism=2)
        for name, attempts in ledger.attempts.items():
            assert attempts[0].correct, name
            assert len(attempts) == 2

    def test_budget_zero_rejected(self, verifier):
        with pytest.raises(ValueError):
            evaluate(_bench(1), ScriptedPolicy(), verifier, budget=0)

    def test_early_stop_truncates_attempts(self, verifier):
        policy = ScriptedPolicy(fallback=[format_trace("theorem t : True := by\n  trivial")])
        ledger = evaluate(_bench(2), policy, verifier, budget=8, early_stop=True, parallelism=2)
        for attempts in ledger.attempts.values():
            assert len(attempts) == 1

    def test_bernoulli_rate_concentrates(self, verifier):
        # p=0.5, budget 8: per-statement solve probability is 1 - 0.5^8.
        statements = _bench(400)
        policy = BernoulliProofPolicy(p_success=0.5, seed=9)
        ledger = evaluate(statements, policy, verifier, budget=8, parallelism=8, generation_chunk=8)
        solved = sum(1 for seq in ledger.attempts.values() if any(a.correct for a in seq))
        rate = solved / len(statements)
        expected = 1 - 0.5**8
        sigma = math.sqrt(expected * (1 - expected) / len(statements))
        assert abs(rate - expected) <= 3 * sigma + 1e-9


class TestReport:
    def _report(self):
        return PassAtKReport(
            system="prover-example",
            size="72B",
            statements=244,
            mean_token_length=8123.4,
            ks=[1, 8, 8192],
            overall={
                1: KPoint(0.5294, 0.5294),
                8: KPoint(0.6516, 0.6516),
                8192: KPoint(0.8074, None),
            },
            subsets={
                "IMO": {1: KPoint(0.10, 0.10), 8: KPoint(0.20, 0.20), 8192: KPoint(0.40, None)},
                "AIME": {1: KPoint(0.30, 0.30), 8: KPoint(0.4667, 0.4667), 8192: KPoint(0.8667, None)},
            },
        )

    def test_markdown_row_shape(self):
        text = render_markdown(self._report())
        assert "| System | Size | Budget | Pass rate |" in text
        assert "| prover-example | 72B | 8192 | 80.74% |" in text
        assert "| System | Sample budget | overall | AIME | IMO |" in text

    def test_markdown_byte_stable(self, tmp_path):
        p1 = emit_report(self._report(), "markdown_table", tmp_path / "a.md")
        p2 = emit_report(self._report(), "markdown_table", tmp_path / "b.md")
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_single_row_report(self, tmp_path):
        report = PassAtKReport(
            system="sys", size="7B", statements=10, mean_token_length=100.0,
            ks=[4], overall={4: KPoint(0.25, 0.25)},
        )
        text = render_csv(report)
        lines = text.splitlines()
        assert lines[0] == "system,size,subset,k,cumulative,unbiased"
        assert len(lines) == 2
        assert lines[1].startswith("sys,7B,overall,4,0.250000")

    def test_json_round_trip(self, tmp_path):
        report = self._report()
        path = emit_report(report, "json", tmp_path / "r.json")
        assert load_report(path) == report

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report(self._report(), "xml", tmp_path / "r.xml")

    def test_nondecreasing_enforced(self):
        with pytest.raises(ValueError):
            PassAtKReport(
                system="s", size="x", statements=1, mean_token_length=0.0,
                ks=[1, 2], overall={1: KPoint(0.9), 2: KPoint(0.1)},
            )

    def test_compute_report_with_subsets(self, verifier):
        bench = _bench(4, tags={0: ["IMO"], 1: ["AIME"], 2: ["AIME"]})
        policy = BernoulliProofPolicy(p_success=0.7, seed=4)
        ledger = evaluate(bench, policy, verifier, budget=4, parallelism=2, generation_chunk=4)
        report = compute_report(ledger, bench, ks=[1, 2, 4], system="mock", size="0B")
        assert set(report.subsets) == {"IMO", "AIME"}
        for k in (1, 2, 4):
            assert 0.0 <= report.overall[k].cumulative <= 1.0
            assert report.overall[k].unbiased is not None
