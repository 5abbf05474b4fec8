from .judge import JudgeVerdict, MockJudge, MockRater, judge_formalization, parse_rating, parse_vote
from .negation import negate_statement, negation_filter, parse_theorem
from .records import ProblemRecord, SolvePoint
from .store import ProblemStore, adaptive_prune, build_store, route_to_annotation

__all__ = [
    "ProblemRecord",
    "SolvePoint",
    "ProblemStore",
    "build_store",
    "adaptive_prune",
    "route_to_annotation",
    "JudgeVerdict",
    "judge_formalization",
    "parse_vote",
    "parse_rating",
    "MockJudge",
    "MockRater",
    "parse_theorem",
    "negate_statement",
    "negation_filter",
]
