from .benchmark import BenchmarkStatement, load_benchmark, load_patches
from .decontam import CorpusDoc, DecontamReport, decontaminate
from .harness import evaluate
from .passk import AttemptLedger, cumulative_pass_at_k, pass_at_k, unbiased_pass_at_k
from .report import KPoint, PassAtKReport, emit_report, load_report

__all__ = [
    "BenchmarkStatement",
    "load_benchmark",
    "load_patches",
    "CorpusDoc",
    "DecontamReport",
    "decontaminate",
    "evaluate",
    "AttemptLedger",
    "pass_at_k",
    "cumulative_pass_at_k",
    "unbiased_pass_at_k",
    "KPoint",
    "PassAtKReport",
    "emit_report",
    "load_report",
]
