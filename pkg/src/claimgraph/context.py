"""Per-claim execution context shared by the gateway and the engines."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .retrieval import RetrievalResult, Retriever
from .trace import ClaimTrace, CostMeter, Stage


class ClaimTimeout(RuntimeError):
    """The per-claim wall-clock budget ran out (checked cooperatively)."""


@dataclass
class RunContext:
    claim_id: str
    trace: ClaimTrace
    meter: CostMeter = field(default_factory=CostMeter)
    clock: Callable[[], float] = time.monotonic
    deadline: Optional[float] = None  # absolute value on `clock`

    def check_deadline(self) -> None:
        if self.deadline is not None and self.clock() > self.deadline:
            raise ClaimTimeout(f"claim {self.claim_id}: per-claim time budget exceeded")


def traced_retrieve(
    retriever: Retriever, query: str, ctx: RunContext, **meta: Any
) -> RetrievalResult:
    """One retrieval round-trip: exactly one kb_interactions increment and
    one Retrieve trace event, so the meter always equals the event count."""
    ctx.check_deadline()
    result = retriever.retrieve(query)
    ctx.meter.add_kb_interaction()
    ctx.trace.record(
        Stage.RETRIEVE,
        query=query,
        doc_ids=[d.doc_id for d in result.documents],
        truncated=result.truncated,
        rerank_degraded=result.rerank_degraded,
        **meta,
    )
    return result
