"""Fixture corpus for format filtering, with hand-computed expected verdicts.

Each case is constructed so its expected verdict can be read off the
construction: coverage counts come from exact line counts, tactic presence
from the keywords used.  The corpus backs both the unit tests and the
acceptance gate.
"""

from dataclasses import dataclass
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"


@dataclass(frozen=True)
class FormatCase:
    name: str
    raw_text: str
    threshold: float
    expect_pass: bool
    expect_well_formed: bool
    expect_tactic: bool
    expect_coverage: float | None  # None: not asserted exactly


def _trace(snippets, final_proof=None, prose="reasoning text"):
    parts = ["<think>", prose]
    for s in snippets:
        parts += ["```lean4", s, "```"]
    parts.append("</think>")
    if final_proof is not None:
        parts += ["```lean4", final_proof, "```"]
    return "\n".join(parts)


def _have_lines(indices):
    return [f"have h{i} : (1 : ℕ) ≤ {i} + 1 := by norm_num" for i in indices]


def build_corpus() -> list[FormatCase]:
    cases = []

    # 1. snippets repeat the proof verbatim: full coverage
    proof = "theorem t : 1 + 1 = 2 := by\n  norm_num"
    cases.append(FormatCase("verbatim_full_coverage", _trace([proof], proof), 0.6, True, True, True, 1.0))

    # 2. the long-form worked example (arithmetic sequence); values pinned by
    # an independent reference computation: 4 snippets, 11/11 lines covered.
    arith = (FIXTURES / "traces" / "arith_seq_full.txt").read_text()
    cases.append(FormatCase("arith_seq_worked_example", arith, 0.6, True, True, True, 1.0))

    # 3./4. exact boundary at 100 normalized proof lines: 60 covered passes,
    # 59 covered fails (the threshold comparison is >=).
    cases.append(
        FormatCase(
            "boundary_060",
            _trace(["\n".join(_have_lines(range(60)))], "\n".join(_have_lines(range(100)))),
            0.6,
            True,
            True,
            True,
            0.6,
        )
    )
    cases.append(
        FormatCase(
            "boundary_059",
            _trace(["\n".join(_have_lines(range(59)))], "\n".join(_have_lines(range(100)))),
            0.6,
            False,
            True,
            True,
            0.59,
        )
    )

    # 5./6. small-scale: 6 of 10 passes, 5 of 10 fails
    ten = _have_lines(range(10))
    cases.append(
        FormatCase("six_of_ten", _trace(["\n".join(ten[:6])], "\n".join(ten)), 0.6, True, True, True, 0.6)
    )
    cases.append(
        FormatCase("five_of_ten", _trace(["\n".join(ten[:5])], "\n".join(ten)), 0.6, False, True, True, 0.5)
    )

    # 7. prose-only thinking with a valid proof: no tactic block
    cases.append(
        FormatCase("prose_only_think", _trace([], proof, prose="just prose, no code"), 0.6, False, True, False, 0.0)
    )

    # 8. no delimiters at all
    cases.append(FormatCase("no_delimiters", "a plain answer without structure", 0.6, False, False, False, None))

    # 9./10. unbalanced delimiters
    cases.append(
        FormatCase("open_without_close", "<think>\nstarted thinking```lean4\nrw [h]\n```", 0.6, False, False, False, None)
    )
    cases.append(FormatCase("close_without_open", "no opening</think>\n```lean4\nrw [h]\n```", 0.6, False, False, False, None))

    # 11. balanced thinking but nothing after the close
    cases.append(FormatCase("missing_final_proof", _trace([proof], None), 0.6, False, False, True, 0.0))

    # 12. snippets cover the proof but contain no tactic line
    defs = "def answer : ℕ := 42\ndef twice : ℕ := answer * 2"
    cases.append(FormatCase("no_tactic_despite_coverage", _trace([defs], defs), 0.6, False, True, False, 1.0))

    # 13. tactic recognized through a `by` block even without listed keywords
    by_block = "theorem t : True := by\n  trivial"
    cases.append(FormatCase("tactic_via_by_block", _trace([by_block], by_block), 0.6, True, True, True, 1.0))

    # 14. final proof block holds only blank/comment lines: zero coverage
    cases.append(
        FormatCase("empty_final_proof", _trace([proof], "-- nothing here\n\n-- still nothing"), 0.6, False, True, True, 0.0)
    )

    # 15. comments and blanks in the proof do not count against coverage
    commented_proof = "-- header comment\n\ntheorem t : 1 + 1 = 2 := by\n  norm_num\n-- trailing note"
    clean_snippet = "theorem t : 1 + 1 = 2 := by\n  norm_num"
    cases.append(FormatCase("comments_ignored", _trace([clean_snippet], commented_proof), 0.6, True, True, True, 1.0))

    # 16. whitespace differences are normalized away
    spaced = "theorem  t :  1 + 1 = 2   := by\n      norm_num"
    cases.append(FormatCase("whitespace_normalized", _trace([spaced], proof), 0.6, True, True, True, 1.0))

    # 17. duplicated proof line is covered by a single snippet occurrence
    dup_proof = "have h : True := by\n  trivial\nhave h : True := by\n  trivial"
    dup_snip = "have h : True := by\n  trivial"
    cases.append(FormatCase("duplicate_lines_covered", _trace([dup_snip], dup_proof), 0.6, True, True, True, 1.0))

    # 18. coverage requires the union of two snippets (each alone is 0.5)
    eight = _have_lines(range(8))
    cases.append(
        FormatCase(
            "union_of_snippets",
            _trace(["\n".join(eight[:4]), "\n".join(eight[4:])], "\n".join(eight)),
            0.6,
            True,
            True,
            True,
            1.0,
        )
    )

    # 19. a sorry-carrying proof can still be format-valid (axes independent)
    sorry_proof = "theorem t : True := by\n  sorry"
    cases.append(FormatCase("format_independent_of_reward", _trace([sorry_proof], sorry_proof), 0.6, True, True, True, 1.0))

    # 20. custom threshold: 5 of 10 passes at 0.5
    cases.append(
        FormatCase("custom_threshold_half", _trace(["\n".join(ten[:5])], "\n".join(ten)), 0.5, True, True, True, 0.5)
    )

    return cases
