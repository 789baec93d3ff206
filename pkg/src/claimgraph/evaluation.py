"""Benchmark harness: dataset loading, balanced sampling, scoring, reports.

Two dataset formats are supported. HoVer rows carry uid / claim / label
(SUPPORTED or NOT_SUPPORTED) / num_hops, partitioned as "2hop", "3hop",
"4hop". FEVEROUS rows carry id / claim / label (SUPPORTS, REFUTES, or NOT
ENOUGH INFO) / evidence / challenge, partitioned by challenge. FEVEROUS
claims whose label is NOT ENOUGH INFO, or whose gold evidence includes any
non-sentence element (tables, lists, cells), are dropped and counted: the
pipeline verifies against text only, so those labels are not reachable.

Scoring is accuracy plus macro-F1, where each class's F1 is computed in a
single division as 2*tp / (2*tp + fp + fn). A class never seen in gold or
prediction contributes nothing; a class that appears only as a wrong
prediction contributes an F1 of zero.
"""
from __future__ import annotations

import json
import random
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Hashable, Optional, Sequence

from .gateway import Gateway
from .graph import Verdict
from .pipeline import ClaimResult, verify_batch
from .reports import (
    cost_report,
    render_markdown,
    render_tsv,
    resolution_report,
    score_report,
)
from .retrieval import Retriever


class EvalError(ValueError):
    """Unusable dataset input or benchmark configuration."""


@dataclass(frozen=True)
class LabeledClaim:
    claim_id: str
    claim_text: str
    label: Verdict
    partition: str


_FEVEROUS_PARTITIONS = {
    "Multi-hop Reasoning": "MultiHop",
    "Entity Disambiguation": "Disambiguation",
    "Numerical Reasoning": "Numerical",
}


def _read_rows(path: Path) -> list[dict]:
    """Accept either one JSON array or JSON Lines."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if not stripped:
        raise EvalError(f"{path}: empty dataset file")
    if stripped.startswith("["):
        rows = json.loads(text)
        if not isinstance(rows, list):
            raise EvalError(f"{path}: expected a JSON array")
        return rows
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def load_hover(path: Path) -> tuple[list[LabeledClaim], dict[str, int]]:
    claims: list[LabeledClaim] = []
    skipped: Counter = Counter()
    for row in _read_rows(path):
        text = row.get("claim", "")
        if not isinstance(text, str) or not text.strip():
            skipped["no_claim"] += 1
            continue
        label_raw = row.get("label")
        if label_raw == "SUPPORTED":
            label = Verdict.SUPPORTED
        elif label_raw == "NOT_SUPPORTED":
            label = Verdict.REFUTED
        else:
            skipped["other_label"] += 1
            continue
        claims.append(
            LabeledClaim(
                claim_id=str(row["uid"]),
                claim_text=text.strip(),
                label=label,
                partition=f"{int(row['num_hops'])}hop",
            )
        )
    return claims, dict(skipped)


def _all_sentence_evidence(row: dict) -> bool:
    for evidence_set in row.get("evidence", []):
        for element_id in evidence_set.get("content", []):
            if "_sentence_" not in element_id:
                return False
    return True


def load_feverous(path: Path) -> tuple[list[LabeledClaim], dict[str, int]]:
    claims: list[LabeledClaim] = []
    skipped: Counter = Counter()
    for row in _read_rows(path):
        text = row.get("claim", "")
        if not isinstance(text, str) or not text.strip():
            skipped["no_claim"] += 1
            continue
        label_raw = row.get("label")
        if label_raw == "SUPPORTS":
            label = Verdict.SUPPORTED
        elif label_raw == "REFUTES":
            label = Verdict.REFUTED
        elif label_raw == "NOT ENOUGH INFO":
            skipped["nei"] += 1
            continue
        else:
            skipped["other_label"] += 1
            continue
        if not _all_sentence_evidence(row):
            skipped["non_sentence_evidence"] += 1
            continue
        claims.append(
            LabeledClaim(
                claim_id=str(row["id"]),
                claim_text=text.strip(),
                label=label,
                partition=_FEVEROUS_PARTITIONS.get(row.get("challenge", ""), "Other"),
            )
        )
    return claims, dict(skipped)


LOADERS = {"hover": load_hover, "feverous": load_feverous}


def balanced_sample(
    claims: Sequence[LabeledClaim], n: int, seed: int
) -> list[LabeledClaim]:
    """Up to n claims with the two labels as even as the pool allows: the
    label counts differ by at most one whenever both pools are big enough,
    and a short pool is backfilled from the other. Deterministic in seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    pos = [c for c in claims if c.label is Verdict.SUPPORTED]
    neg = [c for c in claims if c.label is Verdict.REFUTED]
    rng.shuffle(pos)
    rng.shuffle(neg)
    if len(pos) + len(neg) <= n:
        out = pos + neg
        rng.shuffle(out)
        return out
    quota_pos = (n + 1) // 2 if len(pos) >= len(neg) else n // 2
    take_pos = min(quota_pos, len(pos))
    take_neg = min(n - quota_pos, len(neg))
    deficit = n - take_pos - take_neg
    if deficit > 0:
        if take_pos == len(pos):
            take_neg = min(len(neg), take_neg + deficit)
        else:
            take_pos = min(len(pos), take_pos + deficit)
    out = pos[:take_pos] + neg[:take_neg]
    rng.shuffle(out)
    return out


def per_class_f1(gold: Sequence[Hashable], predicted: Sequence[Hashable]) -> dict:
    if len(gold) != len(predicted):
        raise ValueError("gold and predicted must have equal length")
    if not gold:
        raise ValueError("cannot score an empty sample")
    out = {}
    for cls in sorted(set(gold) | set(predicted), key=str):
        tp = sum(1 for g, p in zip(gold, predicted) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gold, predicted) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gold, predicted) if g == cls and p != cls)
        out[cls] = 2 * tp / (2 * tp + fp + fn)
    return out


def macro_f1(gold: Sequence[Hashable], predicted: Sequence[Hashable]) -> float:
    scores = per_class_f1(gold, predicted)
    return sum(scores.values()) / len(scores)


def accuracy(gold: Sequence[Hashable], predicted: Sequence[Hashable]) -> float:
    if len(gold) != len(predicted) or not gold:
        raise ValueError("gold and predicted must be equal-length and non-empty")
    return sum(1 for g, p in zip(gold, predicted) if g == p) / len(gold)


def run_benchmark(
    dataset: str,
    data_path: Path,
    gateway: Gateway,
    retriever: Retriever,
    out_dir: Path,
    partitions: Optional[Sequence[str]] = None,
    n: int = 200,
    seed: int = 42,
    max_iterations: int = 5,
    exhaustive: bool = False,
    timeout_s: Optional[float] = 300.0,
    clock: Callable[[], float] = time.monotonic,
    workers: int = 1,
) -> dict[str, Any]:
    """Run the pipeline over a balanced sample of each partition and write
    report.md/.tsv (scores), cost.md/.tsv, resolution.md/.tsv,
    predictions.jsonl, summary.json, and per-claim traces under traces/."""
    if dataset not in LOADERS:
        raise EvalError(f"unknown dataset {dataset!r}; expected one of {sorted(LOADERS)}")
    claims, skipped = LOADERS[dataset](Path(data_path))
    available = sorted({c.partition for c in claims})
    if partitions is None:
        partitions = available
    missing = [p for p in partitions if p not in available]
    if missing:
        raise EvalError(
            f"partitions {missing} not present in {data_path}; available: {available}"
        )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trace_dir = out_dir / "traces"

    results_by_partition: dict[str, list[ClaimResult]] = {}
    scores_by_partition: dict[str, dict[str, float]] = {}
    predictions: list[dict[str, Any]] = []
    for partition in partitions:
        pool = [c for c in claims if c.partition == partition]
        sample = balanced_sample(pool, n, seed)
        results = verify_batch(
            [(c.claim_id, c.claim_text) for c in sample],
            gateway,
            retriever,
            max_iterations=max_iterations,
            exhaustive=exhaustive,
            trace_dir=trace_dir,
            timeout_s=timeout_s,
            clock=clock,
            workers=workers,
        )
        gold = [c.label for c in sample]
        predicted = [r.verdict for r in results]
        results_by_partition[partition] = results
        scores_by_partition[partition] = {
            "n": float(len(sample)),
            "accuracy": accuracy(gold, predicted),
            "macro_f1": macro_f1(gold, predicted),
        }
        for c, r in zip(sample, results):
            predictions.append(
                {
                    "claim_id": c.claim_id,
                    "partition": partition,
                    "gold": c.label.value,
                    "predicted": r.verdict.value,
                    "error": r.error,
                }
            )

    tables = {
        "report": score_report(scores_by_partition, title=f"Verification quality ({dataset})"),
        "cost": cost_report(results_by_partition),
        "resolution": resolution_report(results_by_partition),
    }
    for stem, table in tables.items():
        (out_dir / f"{stem}.md").write_text(render_markdown(table), encoding="utf-8")
        (out_dir / f"{stem}.tsv").write_text(render_tsv(table), encoding="utf-8")
    with open(out_dir / "predictions.jsonl", "w", encoding="utf-8") as fh:
        for row in predictions:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    summary: dict[str, Any] = {
        "dataset": dataset,
        "n_requested": n,
        "seed": seed,
        "max_iterations": max_iterations,
        "partitions": {
            p: {
                "n": int(scores_by_partition[p]["n"]),
                "accuracy": scores_by_partition[p]["accuracy"],
                "macro_f1": scores_by_partition[p]["macro_f1"],
            }
            for p in partitions
        },
        "skipped": skipped,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return summary
