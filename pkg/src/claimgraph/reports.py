"""Benchmark report tables and their renderers.

All tables share one shape: metrics down the rows, dataset partitions across
the columns, every cell pre-formatted as a string. The same table renders to
GitHub markdown and to TSV, so the two outputs can never disagree on values.
Formatting is fixed (scores as percent with two decimals, costs with two
decimals) to keep report bytes reproducible across runs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .pipeline import ClaimResult


@dataclass(frozen=True)
class ReportTable:
    title: str
    partitions: tuple[str, ...]
    rows: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        for name, values in self.rows:
            if len(values) != len(self.partitions):
                raise ValueError(
                    f"row {name!r} has {len(values)} cells for "
                    f"{len(self.partitions)} partitions"
                )


def render_markdown(table: ReportTable) -> str:
    header = ["metric", *table.partitions]
    lines = [
        f"## {table.title}",
        "",
        "| " + " | ".join(header) + " |",
        "| " + " | ".join("---" for _ in header) + " |",
    ]
    for name, values in table.rows:
        lines.append("| " + " | ".join([name, *values]) + " |")
    return "\n".join(lines) + "\n"


def render_tsv(table: ReportTable) -> str:
    lines = ["\t".join(["metric", *table.partitions])]
    for name, values in table.rows:
        lines.append("\t".join([name, *values]))
    return "\n".join(lines) + "\n"


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _pct(value: float) -> str:
    return f"{value * 100:.2f}"


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def score_report(
    scores_by_partition: Mapping[str, Mapping[str, float]],
    title: str = "Verification quality",
) -> ReportTable:
    """Rows: claim count, accuracy, macro-F1. Scores arrive as fractions and
    render as percentages."""
    partitions = tuple(scores_by_partition)
    rows = (
        ("n", tuple(str(int(scores_by_partition[p]["n"])) for p in partitions)),
        ("accuracy", tuple(_pct(scores_by_partition[p]["accuracy"]) for p in partitions)),
        ("macro_f1", tuple(_pct(scores_by_partition[p]["macro_f1"]) for p in partitions)),
    )
    return ReportTable(title=title, partitions=partitions, rows=rows)


def cost_report(
    results_by_partition: Mapping[str, Sequence[ClaimResult]],
    title: str = "Interaction cost per claim",
) -> ReportTable:
    """Per-partition averages of the per-claim cost counters."""
    partitions = tuple(results_by_partition)

    def avg(partition: str, key: str) -> str:
        results = results_by_partition[partition]
        if not results:
            return "n/a"
        return _fmt(_mean([r.cost[key] for r in results]))

    rows = (
        ("avg_llm_calls", tuple(avg(p, "llm_calls") for p in partitions)),
        ("avg_kb_interactions", tuple(avg(p, "kb_interactions") for p in partitions)),
        ("avg_inference_seconds", tuple(avg(p, "inference_seconds") for p in partitions)),
    )
    return ReportTable(title=title, partitions=partitions, rows=rows)


def resolution_report(
    results_by_partition: Mapping[str, Sequence[ClaimResult]],
    title: str = "Placeholder resolution",
) -> ReportTable:
    """Iteration cost and success rate of disambiguation, over the claims that
    actually had placeholders to resolve."""
    partitions = tuple(results_by_partition)
    iterations: dict[str, str] = {}
    resolved: dict[str, str] = {}
    counts: dict[str, str] = {}
    for p in partitions:
        ambiguous = [
            r for r in results_by_partition[p]
            if r.disambiguation is not None and r.disambiguation.iterations_used > 0
        ]
        counts[p] = str(len(ambiguous))
        if not ambiguous:
            iterations[p] = "n/a"
            resolved[p] = "n/a"
            continue
        iterations[p] = _fmt(_mean([r.disambiguation.iterations_used for r in ambiguous]))
        rate = _mean([1.0 if r.disambiguation.resolved else 0.0 for r in ambiguous])
        resolved[p] = f"{rate * 100:.0f}%"
    rows = (
        ("claims_with_placeholders", tuple(counts[p] for p in partitions)),
        ("avg_iterations", tuple(iterations[p] for p in partitions)),
        ("resolved_rate", tuple(resolved[p] for p in partitions)),
    )
    return ReportTable(title=title, partitions=partitions, rows=rows)
