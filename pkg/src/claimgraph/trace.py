"""Reasoning-trace recording and cost accounting.

Every stage decision, backend call, and retrieval round-trip is appended to a
per-claim event stream, ordered by a sequence number. Streams can be mirrored
to disk as JSON Lines (one file per claim, schema-versioned header line), and
a completed stream can be replayed to reconstruct the final graph and verdict
without rerunning the pipeline.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Optional

from .graph import ClaimGraph, Verdict, graph_from_json, mark_verified, resolve_placeholder

TRACE_SCHEMA = "claimgraph-trace/1"


class TraceError(RuntimeError):
    """Trace sink unwritable; the pipeline aborts the claim."""


class Stage(Enum):
    EXTRACT = "Extract"
    GROUP = "Group"
    QUESTION = "Question"
    RETRIEVE = "Retrieve"
    IDENTIFY_ENTITY = "IdentifyEntity"
    GRAPH_UPDATE = "GraphUpdate"
    SUBCLAIM_GEN = "SubclaimGen"
    SUBCLAIM_VERIFY = "SubclaimVerify"
    VERDICT = "Verdict"


@dataclass(frozen=True)
class TraceEvent:
    claim_id: str
    seq: int
    stage: Stage
    elapsed_s: float
    payload: dict[str, Any]

    def to_json(self) -> dict[str, Any]:
        return {
            "claim_id": self.claim_id,
            "seq": self.seq,
            "stage": self.stage.value,
            "elapsed_s": self.elapsed_s,
            "payload": self.payload,
        }


class CostMeter:
    """Per-claim counters: LLM calls (including retries), knowledge-base
    retrieval round-trips, and wall time. Increments are lock-guarded so
    concurrent backend dispatch cannot drop counts."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.llm_calls = 0
        self.kb_interactions = 0
        self.inference_seconds = 0.0

    def add_llm_call(self) -> None:
        with self._lock:
            self.llm_calls += 1

    def add_kb_interaction(self) -> None:
        with self._lock:
            self.kb_interactions += 1

    def snapshot(self) -> dict[str, float]:
        with self._lock:
            return {
                "llm_calls": self.llm_calls,
                "kb_interactions": self.kb_interactions,
                "inference_seconds": self.inference_seconds,
            }


class ClaimTrace:
    """Ordered event stream for one claim, optionally mirrored to
    <trace_dir>/<claim_id>.jsonl. Appends within a claim are serialized."""

    def __init__(
        self,
        claim_id: str,
        claim_text: str,
        trace_dir: Optional[Path] = None,
        clock: Callable[[], float] = time.monotonic,
    ) -> None:
        self.claim_id = claim_id
        self.claim_text = claim_text
        self.events: list[TraceEvent] = []
        self.path: Optional[Path] = None
        self._lock = threading.Lock()
        self._clock = clock
        self._start = clock()
        self._file = None
        if trace_dir is not None:
            try:
                trace_dir.mkdir(parents=True, exist_ok=True)
                self.path = trace_dir / f"{claim_id}.jsonl"
                self._file = open(self.path, "w", encoding="utf-8")
                header = {
                    "schema": TRACE_SCHEMA,
                    "claim_id": claim_id,
                    "claim": claim_text,
                    "started_at": datetime.now(timezone.utc).isoformat(),
                }
                self._file.write(json.dumps(header, ensure_ascii=False) + "\n")
                self._file.flush()
            except OSError as exc:
                raise TraceError(f"cannot open trace sink: {exc}") from exc

    def record(self, stage: Stage, **payload: Any) -> TraceEvent:
        with self._lock:
            event = TraceEvent(
                claim_id=self.claim_id,
                seq=len(self.events),
                stage=stage,
                elapsed_s=self._clock() - self._start,
                payload=payload,
            )
            self.events.append(event)
            if self._file is not None:
                try:
                    self._file.write(json.dumps(event.to_json(), ensure_ascii=False) + "\n")
                    self._file.flush()
                except OSError as exc:
                    raise TraceError(f"cannot append to trace sink: {exc}") from exc
            return event

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def stages(self) -> list[str]:
        return [e.stage.value for e in self.events]


def read_trace_file(path: Path) -> tuple[dict[str, Any], list[TraceEvent]]:
    """Load a trace file back into (header, events)."""
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("schema") != TRACE_SCHEMA:
        raise TraceError(f"{path}: not a {TRACE_SCHEMA} trace file")
    header, rows = lines[0], lines[1:]
    events = [
        TraceEvent(
            claim_id=row["claim_id"],
            seq=row["seq"],
            stage=Stage(row["stage"]),
            elapsed_s=row["elapsed_s"],
            payload=row["payload"],
        )
        for row in rows
    ]
    return header, events


@dataclass
class ReplayResult:
    graph: Optional[ClaimGraph]
    subclaim_results: list[tuple[int, str, bool]]
    verdict: Optional[Verdict]
    error: Optional[str] = None


def replay(events: list[TraceEvent]) -> ReplayResult:
    """Fold a trace back into the final graph, sub-claim results, and verdict.

    Extraction events carry the parsed graph; GraphUpdate events carry each
    placeholder resolution plus the triplet ids it verified; SubclaimVerify
    events carry the per-triplet outcome. The result must equal the pipeline's
    ClaimResult bit-for-bit (excluding wall-time fields).
    """
    graph: Optional[ClaimGraph] = None
    subclaims: list[tuple[int, str, bool]] = []
    verdict: Optional[Verdict] = None
    error: Optional[str] = None
    for event in events:
        if event.stage is Stage.EXTRACT and "graph" in event.payload:
            graph = graph_from_json(event.payload["graph"])
        elif event.stage is Stage.GRAPH_UPDATE:
            assert graph is not None, "GraphUpdate before a successful Extract"
            graph = resolve_placeholder(
                graph, event.payload["placeholder"], event.payload["entity"]
            )
            graph = mark_verified(graph, event.payload["verified_ids"])
        elif event.stage is Stage.SUBCLAIM_VERIFY and "outcome" in event.payload:
            subclaims.append(
                (
                    event.payload["triplet_id"],
                    event.payload["subclaim"],
                    event.payload["outcome"],
                )
            )
            if event.payload["outcome"]:
                assert graph is not None, "SubclaimVerify before a successful Extract"
                graph = mark_verified(graph, [event.payload["triplet_id"]])
        elif event.stage is Stage.VERDICT:
            verdict = Verdict(event.payload["verdict"])
            error = event.payload.get("error")
    return ReplayResult(graph=graph, subclaim_results=subclaims, verdict=verdict, error=error)


def count_backend_calls(events: list[TraceEvent]) -> int:
    """Number of backend-call events; must equal CostMeter.llm_calls."""
    return sum(1 for e in events if e.payload.get("backend_call"))


def count_retrievals(events: list[TraceEvent]) -> int:
    """Number of retrieval round-trips; must equal CostMeter.kb_interactions."""
    return sum(1 for e in events if e.stage is Stage.RETRIEVE)
