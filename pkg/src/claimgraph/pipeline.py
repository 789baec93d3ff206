"""End-to-end claim verification.

A claim runs through three stages: graph extraction, placeholder
disambiguation, and per-triplet verification of whatever the disambiguation
step did not already verify. The verdict is a pure conjunction: Supported only
if every triplet ends Verified; anything else, including unresolved
placeholders, failed extraction, or a timeout, is Refuted. Verification
short-circuits on the first unsupported sub-claim unless asked to be
exhaustive.

Every run appends a Verdict event and leaves a trace from which the result can
be replayed exactly. Failures outside the model's control are classified on
the result: "extraction" (no usable graph), "timeout" (per-claim budget),
"trace" (unwritable trace sink).
"""
from __future__ import annotations

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

from .context import ClaimTimeout, RunContext, traced_retrieve
from .disambiguation import DisambiguationSummary, run_disambiguation
from .gateway import ExtractionFailed, Gateway
from .graph import (
    ClaimGraph,
    TripletStatus,
    Verdict,
    aggregate_verdict,
    mark_verified,
)
from .retrieval import Retriever
from .trace import ClaimTrace, CostMeter, Stage, TraceError


@dataclass(frozen=True)
class SubclaimResult:
    triplet_id: int
    subclaim: str
    supported: bool


@dataclass
class ClaimResult:
    claim_id: str
    claim_text: str
    verdict: Verdict
    graph: Optional[ClaimGraph]
    subclaim_results: tuple[SubclaimResult, ...]
    disambiguation: Optional[DisambiguationSummary]
    error: Optional[str]
    cost: dict[str, float]
    trace_path: Optional[Path]


def claim_id_for(claim_text: str) -> str:
    """Stable id for claims arriving without one."""
    digest = hashlib.sha1(claim_text.encode("utf-8")).hexdigest()
    return f"claim-{digest[:12]}"


def verify_claim(
    claim_text: str,
    gateway: Gateway,
    retriever: Retriever,
    *,
    claim_id: Optional[str] = None,
    max_iterations: int = 5,
    exhaustive: bool = False,
    trace_dir: Optional[Path] = None,
    timeout_s: Optional[float] = 300.0,
    clock: Callable[[], float] = time.monotonic,
) -> ClaimResult:
    cid = claim_id if claim_id is not None else claim_id_for(claim_text)
    meter = CostMeter()
    start = clock()
    try:
        trace = ClaimTrace(cid, claim_text, trace_dir, clock=clock)
    except TraceError:
        meter.inference_seconds = clock() - start
        return ClaimResult(
            claim_id=cid,
            claim_text=claim_text,
            verdict=Verdict.REFUTED,
            graph=None,
            subclaim_results=(),
            disambiguation=None,
            error="trace",
            cost=meter.snapshot(),
            trace_path=None,
        )
    deadline = start + timeout_s if timeout_s is not None else None
    ctx = RunContext(claim_id=cid, trace=trace, meter=meter, clock=clock, deadline=deadline)

    graph: Optional[ClaimGraph] = None
    disambiguation: Optional[DisambiguationSummary] = None
    subclaims: list[SubclaimResult] = []
    verdict = Verdict.REFUTED
    error: Optional[str] = None
    try:
        try:
            graph = gateway.extract_graph(claim_text, ctx)
        except ExtractionFailed:
            error = "extraction"
        else:
            if not graph.triplets:
                # decomposition produced nothing checkable
                error = "extraction"
            else:
                outcome = run_disambiguation(
                    graph, gateway, retriever, ctx, max_iterations
                )
                graph = outcome.graph
                disambiguation = outcome.summary()
                if outcome.resolved:
                    pending = [
                        t.id for t in graph.triplets
                        if t.status is TripletStatus.UNVERIFIED
                    ]
                    for tid in pending:
                        triplet = graph.triplet(tid)
                        subclaim = gateway.triplet_to_subclaim(
                            triplet, ctx, meta={"triplet_id": tid}
                        )
                        retrieved = traced_retrieve(
                            retriever, subclaim, ctx, triplet_id=tid
                        )
                        supported = gateway.verify_subclaim(
                            subclaim, retrieved.documents, ctx,
                            meta={"triplet_id": tid},
                        )
                        subclaims.append(SubclaimResult(tid, subclaim, supported))
                        if supported:
                            graph = mark_verified(graph, [tid])
                        elif not exhaustive:
                            break
                    verdict = aggregate_verdict(
                        t.status is TripletStatus.VERIFIED for t in graph.triplets
                    )
        trace.record(Stage.VERDICT, verdict=verdict.value, error=error)
    except ClaimTimeout:
        verdict, error = Verdict.REFUTED, "timeout"
        try:
            trace.record(Stage.VERDICT, verdict=verdict.value, error=error)
        except TraceError:
            error = "trace"
    except TraceError:
        verdict, error = Verdict.REFUTED, "trace"
    finally:
        meter.inference_seconds = clock() - start
        trace.close()
    return ClaimResult(
        claim_id=cid,
        claim_text=claim_text,
        verdict=verdict,
        graph=graph,
        subclaim_results=tuple(subclaims),
        disambiguation=disambiguation,
        error=error,
        cost=meter.snapshot(),
        trace_path=trace.path,
    )


def verify_batch(
    claims: Sequence[tuple[str, str]],
    gateway: Gateway,
    retriever: Retriever,
    *,
    max_iterations: int = 5,
    exhaustive: bool = False,
    trace_dir: Optional[Path] = None,
    timeout_s: Optional[float] = 300.0,
    clock: Callable[[], float] = time.monotonic,
    workers: int = 1,
) -> list[ClaimResult]:
    """Verify (claim_id, claim_text) pairs, preserving input order. Each claim
    gets its own trace and cost meter, so worker count changes neither."""
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def one(pair: tuple[str, str]) -> ClaimResult:
        cid, text = pair
        return verify_claim(
            text,
            gateway,
            retriever,
            claim_id=cid,
            max_iterations=max_iterations,
            exhaustive=exhaustive,
            trace_dir=trace_dir,
            timeout_s=timeout_s,
            clock=clock,
        )

    if workers == 1:
        return [one(pair) for pair in claims]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, claims))
