"""Report tables: shape validation, renderer output, and the three builders."""
from __future__ import annotations

import pytest

from claimgraph import (
    ClaimResult,
    ReportTable,
    Verdict,
    cost_report,
    render_markdown,
    render_tsv,
    resolution_report,
    score_report,
)
from claimgraph.disambiguation import DisambiguationSummary

TABLE = ReportTable(
    title="Example",
    partitions=("p1", "p2"),
    rows=(("m1", ("1", "2")), ("m2", ("3", "4"))),
)


def test_table_validates_cell_counts():
    with pytest.raises(ValueError, match="m1"):
        ReportTable(title="t", partitions=("a", "b"), rows=(("m1", ("only",)),))


def test_render_markdown_exact():
    assert render_markdown(TABLE) == (
        "## Example\n"
        "\n"
        "| metric | p1 | p2 |\n"
        "| --- | --- | --- |\n"
        "| m1 | 1 | 2 |\n"
        "| m2 | 3 | 4 |\n"
    )


def test_render_tsv_exact():
    assert render_tsv(TABLE) == (
        "metric\tp1\tp2\n"
        "m1\t1\t2\n"
        "m2\t3\t4\n"
    )


def fake_result(llm=0.0, kb=0.0, seconds=0.0, disambiguation=None):
    return ClaimResult(
        claim_id="c",
        claim_text="t",
        verdict=Verdict.SUPPORTED,
        graph=None,
        subclaim_results=(),
        disambiguation=disambiguation,
        error=None,
        cost={"llm_calls": llm, "kb_interactions": kb, "inference_seconds": seconds},
        trace_path=None,
    )


def test_score_report_renders_percentages():
    table = score_report({
        "A": {"n": 4.0, "accuracy": 0.75, "macro_f1": 11 / 15},
        "B": {"n": 2.0, "accuracy": 1.0, "macro_f1": 1.0},
    })
    assert table.partitions == ("A", "B")
    assert table.rows == (
        ("n", ("4", "2")),
        ("accuracy", ("75.00", "100.00")),
        ("macro_f1", ("73.33", "100.00")),
    )


def test_cost_report_averages_to_two_decimals():
    table = cost_report({
        "A": [fake_result(llm=3, kb=1, seconds=0.5), fake_result(llm=4, kb=2, seconds=1.0)],
        "B": [],
    })
    assert table.rows == (
        ("avg_llm_calls", ("3.50", "n/a")),
        ("avg_kb_interactions", ("1.50", "n/a")),
        ("avg_inference_seconds", ("0.75", "n/a")),
    )


def test_resolution_report_counts_only_ambiguous_claims():
    ambiguous_ok = fake_result(disambiguation=DisambiguationSummary(True, 1, ()))
    ambiguous_slow = fake_result(disambiguation=DisambiguationSummary(True, 3, ()))
    ambiguous_fail = fake_result(disambiguation=DisambiguationSummary(False, 2, (0,)))
    no_placeholders = fake_result(disambiguation=DisambiguationSummary(True, 0, ()))
    never_started = fake_result(disambiguation=None)
    table = resolution_report({
        "A": [ambiguous_ok, ambiguous_slow, ambiguous_fail, no_placeholders, never_started],
        "B": [no_placeholders, never_started],
    })
    assert table.rows == (
        ("claims_with_placeholders", ("3", "0")),
        ("avg_iterations", ("2.00", "n/a")),
        ("resolved_rate", ("67%", "n/a")),
    )
