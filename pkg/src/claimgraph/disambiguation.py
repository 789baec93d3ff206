"""Iterative placeholder resolution over a claim graph.

Each iteration groups triplets by the ambiguous entity they reference and asks
one entity-seeking question per group (ascending placeholder id). A question
that the knowledge base answers resolves the placeholder everywhere at once,
so later groups in the same iteration already see the substituted entity, and
marks the triplets the answer relied on as verified. A question that fails is
logged and drives a refined question for the same placeholder next iteration.
The loop ends as soon as the graph is clarified or after max_iterations; a
graph still holding placeholders then is reported unresolved, which the
pipeline maps to a refuted verdict.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .context import RunContext, traced_retrieve
from .gateway import Gateway, QuestionFailed
from .graph import (
    ClaimGraph,
    ambiguous_entities,
    group_triplets,
    is_clarified,
    mark_verified,
    resolve_placeholder,
)
from .retrieval import Retriever
from .trace import Stage


@dataclass(frozen=True)
class FailedAttempt:
    """A question for a placeholder that the knowledge base did not answer."""
    rationale: str
    question: str


@dataclass(frozen=True)
class DisambiguationSummary:
    """Compact outcome carried on the pipeline's per-claim result."""
    resolved: bool
    iterations_used: int
    unresolved: tuple[int, ...]


@dataclass
class DisambiguationResult:
    graph: ClaimGraph
    resolved: bool
    iterations_used: int
    failed_attempts: dict[int, list[FailedAttempt]] = field(default_factory=dict)

    def summary(self) -> DisambiguationSummary:
        return DisambiguationSummary(
            resolved=self.resolved,
            iterations_used=self.iterations_used,
            unresolved=tuple(sorted(ambiguous_entities(self.graph))),
        )


def run_disambiguation(
    graph: ClaimGraph,
    gateway: Gateway,
    retriever: Retriever,
    ctx: RunContext,
    max_iterations: int = 5,
) -> DisambiguationResult:
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    attempts: dict[int, list[FailedAttempt]] = {}
    iterations_used = 0
    for iteration in range(1, max_iterations + 1):
        if is_clarified(graph):
            break
        iterations_used = iteration
        # memberships are fixed for the whole iteration; triplet content is
        # re-read per group so earlier resolutions are visible immediately
        groups = [(pid, [t.id for t in ts]) for pid, ts in group_triplets(graph)]
        ctx.trace.record(
            Stage.GROUP,
            iteration=iteration,
            groups=[{"placeholder": pid, "triplet_ids": ids} for pid, ids in groups],
        )
        for pid, member_ids in groups:
            ctx.check_deadline()
            group = [graph.triplet(tid) for tid in member_ids]
            failed = [(a.rationale, a.question) for a in attempts.get(pid, [])]
            try:
                proposal = gateway.generate_question(
                    graph.claim_text, pid, group, failed, ctx
                )
            except QuestionFailed:
                # keep the placeholder in play; the slot still counts as a
                # spent attempt so the next iteration refines rather than
                # repeating the opener
                attempts.setdefault(pid, []).append(
                    FailedAttempt("generation error", "")
                )
                continue
            result = traced_retrieve(retriever, proposal.question, ctx, placeholder=pid)
            answer = gateway.identify_entity(
                proposal.question, result.documents, ctx, meta={"placeholder": pid}
            )
            if answer.found:
                graph = resolve_placeholder(graph, pid, answer.entity_text)
                graph = mark_verified(graph, proposal.triplet_ids)
                ctx.trace.record(
                    Stage.GRAPH_UPDATE,
                    placeholder=pid,
                    entity=graph.resolutions[pid],
                    verified_ids=sorted(proposal.triplet_ids),
                )
            else:
                attempts.setdefault(pid, []).append(
                    FailedAttempt(proposal.rationale, proposal.question)
                )
    return DisambiguationResult(
        graph=graph,
        resolved=is_clarified(graph),
        iterations_used=iterations_used,
        failed_attempts=attempts,
    )
