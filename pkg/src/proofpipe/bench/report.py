"""Benchmark report assembly and serialization.

The markdown layout mirrors the familiar prover-comparison tables: one table
of (system, size, budget, pass rate) rows, and, when subset breakdowns are
present, a second table with one column per subset.  Serialization is
deterministic: same report, same bytes.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ProofPipeError


class IoFailure(ProofPipeError):
    pass


@dataclass(frozen=True)
class KPoint:
    cumulative: float
    unbiased: float | None = None


@dataclass
class PassAtKReport:
    system: str
    size: str
    statements: int
    mean_token_length: float
    ks: list[int] = field(default_factory=list)
    overall: dict[int, KPoint] = field(default_factory=dict)
    subsets: dict[str, dict[int, KPoint]] = field(default_factory=dict)

    def __post_init__(self):
        for k in self.ks:
            point = self.overall.get(k)
            if point is None:
                raise ValueError(f"missing overall entry for k={k}")
        prev = -1.0
        for k in sorted(self.ks):
            cur = self.overall[k].cumulative
            if cur < prev:
                raise ValueError("cumulative pass rate must be nondecreasing in k")
            prev = cur

    def to_dict(self) -> dict:
        def points(mapping: dict[int, KPoint]) -> dict:
            return {
                str(k): {"cumulative": p.cumulative, "unbiased": p.unbiased}
                for k, p in sorted(mapping.items())
            }

        return {
            "system": self.system,
            "size": self.size,
            "statements": self.statements,
            "mean_token_length": self.mean_token_length,
            "ks": sorted(self.ks),
            "overall": points(self.overall),
            "subsets": {tag: points(m) for tag, m in sorted(self.subsets.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PassAtKReport":
        def points(mapping: dict) -> dict[int, KPoint]:
            return {
                int(k): KPoint(cumulative=v["cumulative"], unbiased=v.get("unbiased"))
                for k, v in mapping.items()
            }

        return cls(
            system=data["system"],
            size=data["size"],
            statements=data["statements"],
            mean_token_length=data["mean_token_length"],
            ks=[int(k) for k in data["ks"]],
            overall=points(data["overall"]),
            subsets={tag: points(m) for tag, m in data.get("subsets", {}).items()},
        )


def _pct(value: float | None) -> str:
    return "-" if value is None else f"{value * 100:.2f}%"


def render_markdown(report: PassAtKReport) -> str:
    lines = [
        "| System | Size | Budget | Pass rate |",
        "| --- | --- | --- | --- |",
    ]
    for k in sorted(report.ks):
        lines.append(f"| {report.system} | {report.size} | {k} | {_pct(report.overall[k].cumulative)} |")
    if report.subsets:
        tags = sorted(report.subsets)
        lines.append("")
        lines.append("| System | Sample budget | overall | " + " | ".join(tags) + " |")
        lines.append("| --- | --- | --- | " + " | ".join("---" for _ in tags) + " |")
        for k in sorted(report.ks):
            row = [report.system, str(k), _pct(report.overall[k].cumulative)]
            for tag in tags:
                point = report.subsets[tag].get(k)
                row.append(_pct(point.cumulative if point else None))
            lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append(f"statements: {report.statements}; mean output tokens: {report.mean_token_length:.1f}")
    return "\n".join(lines) + "\n"


def render_csv(report: PassAtKReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["system", "size", "subset", "k", "cumulative", "unbiased"])
    for k in sorted(report.ks):
        p = report.overall[k]
        writer.writerow([report.system, report.size, "overall", k, f"{p.cumulative:.6f}", "" if p.unbiased is None else f"{p.unbiased:.6f}"])
    for tag in sorted(report.subsets):
        for k in sorted(report.subsets[tag]):
            p = report.subsets[tag][k]
            writer.writerow([report.system, report.size, tag, k, f"{p.cumulative:.6f}", "" if p.unbiased is None else f"{p.unbiased:.6f}"])
    return buf.getvalue()


def render_json(report: PassAtKReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def emit_report(report: PassAtKReport, fmt: str, path: str | Path) -> Path:
    renderers = {"markdown_table": render_markdown, "csv": render_csv, "json": render_json}
    if fmt not in renderers:
        raise ValueError(f"unknown report format: {fmt} (expected one of {sorted(renderers)})")
    path = Path(path)
    try:
        path.write_text(renderers[fmt](report), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write report to {path}: {exc}") from exc
    return path


def load_report(path: str | Path) -> PassAtKReport:
    try:
        with open(path, encoding="utf-8") as f:
            return PassAtKReport.from_dict(json.load(f))
    except OSError as exc:
        raise IoFailure(f"cannot read report from {path}: {exc}") from exc
