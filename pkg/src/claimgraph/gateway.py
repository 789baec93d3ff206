"""Backend dispatch with strict response parsing, bounded retries, and
trace/cost bookkeeping.

Every backend attempt appends one trace event (payload ``backend_call: true``)
under the stage of the calling operation, so the cost meter's llm_calls always
equals the number of backend-call events. A parse failure retries the request
at most `retries` more times with a format reminder appended; what happens
when retries run out is operation-specific: graph extraction and question
generation raise, entity lookup degrades to not-found, sub-claim verification
degrades to unsupported, and sub-claim generation falls back to a plain
head-relation-tail join. The degraded outcomes are flagged in the trace.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from .backends import Backend, BackendError, BackendRequest, MockScriptError
from .context import RunContext
from .graph import (
    ClaimGraph,
    Entity,
    GraphError,
    Named,
    Placeholder,
    Triplet,
    graph_to_json,
)
from .prompts import (
    FORMAT_REMINDER,
    PromptRole,
    entity_qa_prompt,
    graph_extract_prompt,
    question_prompt,
    render_entity,
    subclaim_gen_prompt,
    subclaim_verify_prompt,
)
from .retrieval import Document
from .trace import Stage
from . import prompts


class ParseError(ValueError):
    """Backend output did not meet the role's response schema."""


class ExtractionFailed(RuntimeError):
    """Graph extraction stayed unparseable through all retries."""


class QuestionFailed(RuntimeError):
    """Question generation stayed unparseable through all retries."""


@dataclass(frozen=True)
class QuestionProposal:
    rationale: str
    triplet_ids: frozenset[int]
    question: str


@dataclass(frozen=True)
class EntityAnswer:
    """Outcome of an entity lookup; entity_text None means not found."""
    entity_text: Optional[str]
    parse_error: bool = False

    @property
    def found(self) -> bool:
        return self.entity_text is not None


_PLACEHOLDER_FORM = re.compile(r"x[_\s]?(\d+)", re.IGNORECASE)


def _parse_entity(raw: Any) -> Entity:
    if not isinstance(raw, str) or not raw.strip():
        raise ParseError(f"entity must be a non-empty string, got {raw!r}")
    text = raw.strip()
    m = _PLACEHOLDER_FORM.fullmatch(text)
    if m:
        return Placeholder(int(m.group(1)))
    return Named(text)


def _load_json_object(text: str) -> dict[str, Any]:
    try:
        obj = json.loads(text.strip())
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"expected a JSON object, got {type(obj).__name__}")
    return obj


def parse_graph_response(claim: str, text: str) -> ClaimGraph:
    """Parse a graph-extraction reply. Placeholder surface forms (X_1, x1,
    "X 1") normalize to integer ids. Reply-supplied triplet ids are kept when
    they are unique integers; otherwise ids are assigned 1..N in order."""
    obj = _load_json_object(text)
    rows = obj.get("triplets")
    if not isinstance(rows, list):
        raise ParseError("missing 'triplets' list")
    supplied = [row.get("id") for row in rows if isinstance(row, dict)]
    use_supplied = (
        len(supplied) == len(rows)
        and all(isinstance(i, int) for i in supplied)
        and len(set(supplied)) == len(supplied)
    )
    triplets = []
    for pos, row in enumerate(rows, start=1):
        if not isinstance(row, dict):
            raise ParseError(f"triplet {pos} is not an object")
        relation = row.get("relation")
        if not isinstance(relation, str) or not relation.strip():
            raise ParseError(f"triplet {pos}: relation must be a non-empty string")
        try:
            triplets.append(
                Triplet(
                    id=row["id"] if use_supplied else pos,
                    head=_parse_entity(row.get("head")),
                    relation=relation.strip(),
                    tail=_parse_entity(row.get("tail")),
                )
            )
        except GraphError as exc:
            raise ParseError(str(exc)) from exc
    try:
        return ClaimGraph(claim_text=claim, triplets=tuple(triplets))
    except GraphError as exc:
        raise ParseError(str(exc)) from exc


def parse_question_response(text: str, group_ids: set[int]) -> QuestionProposal:
    obj = _load_json_object(text)
    question = obj.get("question")
    if not isinstance(question, str) or not question.strip():
        raise ParseError("question must be a non-empty string")
    ids_raw = obj.get("triplet_ids")
    if not isinstance(ids_raw, list) or not ids_raw:
        raise ParseError("triplet_ids must be a non-empty list")
    try:
        ids = frozenset(int(i) for i in ids_raw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"triplet_ids must be integers: {exc}") from exc
    if not ids <= group_ids:
        raise ParseError(f"triplet_ids {sorted(ids - group_ids)} are outside the group")
    rationale = obj.get("rationale")
    if not isinstance(rationale, str):
        raise ParseError("rationale must be a string")
    return QuestionProposal(rationale.strip(), ids, question.strip())


_NOT_FOUND_STRINGS = {"none", "null"}


def parse_entity_response(text: str) -> Optional[str]:
    """Returns the entity text, or None for the not-found sentinel (JSON null,
    with the common "None"/"null" string slips mapped conservatively)."""
    obj = _load_json_object(text)
    if "entity" not in obj:
        raise ParseError("missing 'entity' key")
    value = obj["entity"]
    if value is None:
        return None
    if not isinstance(value, str):
        raise ParseError(f"entity must be a string or null, got {type(value).__name__}")
    value = value.strip()
    if not value:
        raise ParseError("entity string is empty")
    if value.lower() in _NOT_FOUND_STRINGS:
        return None
    return value


def parse_verify_response(text: str) -> bool:
    obj = _load_json_object(text)
    value = obj.get("supported")
    if not isinstance(value, bool):
        raise ParseError("'supported' must be a JSON boolean")
    return value


def parse_subclaim_response(text: str, triplet: Triplet) -> str:
    obj = _load_json_object(text)
    sentence = obj.get("subclaim")
    if not isinstance(sentence, str) or not sentence.strip():
        raise ParseError("subclaim must be a non-empty string")
    sentence = sentence.strip()
    lowered = sentence.lower()
    for entity in (triplet.head, triplet.tail):
        if render_entity(entity).lower() not in lowered:
            raise ParseError(f"subclaim does not mention {render_entity(entity)!r}")
    return sentence


class Gateway:
    """All six prompt roles behind one object. Holds no mutable state;
    per-claim trace and cost meter arrive via the RunContext."""

    def __init__(
        self,
        backend: Backend,
        retries: int = 2,
        max_output_tokens: int = 1024,
        exemplars: Optional[list[dict]] = None,
    ) -> None:
        if retries < 0:
            raise ValueError("retries must be >= 0")
        self.backend = backend
        self.retries = retries
        self.max_output_tokens = max_output_tokens
        self.exemplars = exemplars if exemplars is not None else prompts.load_graph_exemplars()

    # one backend round-trip; transport failures come back as a message
    def _complete(
        self, ctx: RunContext, role: PromptRole, prompt: str
    ) -> tuple[Optional[str], Optional[str]]:
        ctx.check_deadline()
        ctx.meter.add_llm_call()
        request = BackendRequest(role, prompt, self.max_output_tokens)
        try:
            return self.backend.complete(request), None
        except MockScriptError:
            raise  # a broken test script should fail loudly, not degrade
        except BackendError as exc:
            return None, str(exc)

    def _prompt_for_attempt(self, base: str, attempt: int) -> str:
        return base if attempt == 1 else f"{base}\n\n{FORMAT_REMINDER}"

    def extract_graph(self, claim: str, ctx: RunContext) -> ClaimGraph:
        if not claim.strip():
            raise ValueError("claim must be non-empty")
        base = graph_extract_prompt(claim, self.exemplars)
        last_error = "no attempts made"
        for attempt in range(1, self.retries + 2):
            response, transport_error = self._complete(
                ctx, PromptRole.GRAPH_EXTRACT, self._prompt_for_attempt(base, attempt)
            )
            if transport_error is None:
                try:
                    graph = parse_graph_response(claim, response)
                except ParseError as exc:
                    last_error = str(exc)
                else:
                    ctx.trace.record(
                        Stage.EXTRACT,
                        backend_call=True,
                        role=PromptRole.GRAPH_EXTRACT.value,
                        attempt=attempt,
                        ok=True,
                        graph=graph_to_json(graph),
                    )
                    return graph
            else:
                last_error = transport_error
            ctx.trace.record(
                Stage.EXTRACT,
                backend_call=True,
                role=PromptRole.GRAPH_EXTRACT.value,
                attempt=attempt,
                ok=False,
                error=last_error,
            )
        raise ExtractionFailed(last_error)

    def generate_question(
        self,
        claim: str,
        placeholder_id: int,
        group: Sequence[Triplet],
        failed_attempts: Sequence[tuple[str, str]],
        ctx: RunContext,
    ) -> QuestionProposal:
        if not group:
            raise ValueError("group must be non-empty")
        role, base = question_prompt(claim, placeholder_id, group, failed_attempts)
        group_ids = {t.id for t in group}
        last_error = "no attempts made"
        for attempt in range(1, self.retries + 2):
            response, transport_error = self._complete(
                ctx, role, self._prompt_for_attempt(base, attempt)
            )
            if transport_error is None:
                try:
                    proposal = parse_question_response(response, group_ids)
                except ParseError as exc:
                    last_error = str(exc)
                else:
                    ctx.trace.record(
                        Stage.QUESTION,
                        backend_call=True,
                        role=role.value,
                        attempt=attempt,
                        ok=True,
                        placeholder=placeholder_id,
                        proposal={
                            "rationale": proposal.rationale,
                            "triplet_ids": sorted(proposal.triplet_ids),
                            "question": proposal.question,
                        },
                    )
                    return proposal
            else:
                last_error = transport_error
            ctx.trace.record(
                Stage.QUESTION,
                backend_call=True,
                role=role.value,
                attempt=attempt,
                ok=False,
                placeholder=placeholder_id,
                error=last_error,
            )
        raise QuestionFailed(last_error)

    def identify_entity(
        self,
        question: str,
        docs: Sequence[Document],
        ctx: RunContext,
        meta: Optional[dict[str, Any]] = None,
    ) -> EntityAnswer:
        if not question.strip():
            raise ValueError("question must be non-empty")
        base = entity_qa_prompt(question, docs)
        doc_ids = [d.doc_id for d in docs]
        meta = meta or {}
        last_error = "no attempts made"
        for attempt in range(1, self.retries + 2):
            final = attempt == self.retries + 1
            response, transport_error = self._complete(
                ctx, PromptRole.ENTITY_QA, self._prompt_for_attempt(base, attempt)
            )
            if transport_error is None:
                try:
                    entity = parse_entity_response(response)
                except ParseError as exc:
                    last_error = str(exc)
                else:
                    ctx.trace.record(
                        Stage.IDENTIFY_ENTITY,
                        backend_call=True,
                        role=PromptRole.ENTITY_QA.value,
                        attempt=attempt,
                        ok=True,
                        question=question,
                        doc_ids=doc_ids,
                        outcome={"found": entity is not None, "entity": entity},
                        **meta,
                    )
                    return EntityAnswer(entity)
            else:
                last_error = transport_error
            payload: dict[str, Any] = dict(
                backend_call=True,
                role=PromptRole.ENTITY_QA.value,
                attempt=attempt,
                ok=False,
                question=question,
                doc_ids=doc_ids,
                error=last_error,
                **meta,
            )
            if final:  # conservative degradation, flagged
                payload["outcome"] = {"found": False, "entity": None}
                payload["parse_error"] = True
            ctx.trace.record(Stage.IDENTIFY_ENTITY, **payload)
        return EntityAnswer(None, parse_error=True)

    def verify_subclaim(
        self,
        subclaim: str,
        docs: Sequence[Document],
        ctx: RunContext,
        meta: Optional[dict[str, Any]] = None,
    ) -> bool:
        if not subclaim.strip():
            raise ValueError("subclaim must be non-empty")
        base = subclaim_verify_prompt(subclaim, docs)
        doc_ids = [d.doc_id for d in docs]
        meta = meta or {}
        last_error = "no attempts made"
        for attempt in range(1, self.retries + 2):
            final = attempt == self.retries + 1
            response, transport_error = self._complete(
                ctx, PromptRole.SUBCLAIM_VERIFY, self._prompt_for_attempt(base, attempt)
            )
            if transport_error is None:
                try:
                    supported = parse_verify_response(response)
                except ParseError as exc:
                    last_error = str(exc)
                else:
                    ctx.trace.record(
                        Stage.SUBCLAIM_VERIFY,
                        backend_call=True,
                        role=PromptRole.SUBCLAIM_VERIFY.value,
                        attempt=attempt,
                        ok=True,
                        subclaim=subclaim,
                        doc_ids=doc_ids,
                        outcome=supported,
                        **meta,
                    )
                    return supported
            else:
                last_error = transport_error
            payload = dict(
                backend_call=True,
                role=PromptRole.SUBCLAIM_VERIFY.value,
                attempt=attempt,
                ok=False,
                subclaim=subclaim,
                doc_ids=doc_ids,
                error=last_error,
                **meta,
            )
            if final:  # unverifiable counts as unsupported, flagged
                payload["outcome"] = False
                payload["parse_error"] = True
            ctx.trace.record(Stage.SUBCLAIM_VERIFY, **payload)
        return False

    def triplet_to_subclaim(
        self,
        triplet: Triplet,
        ctx: RunContext,
        meta: Optional[dict[str, Any]] = None,
    ) -> str:
        if triplet.placeholder_ids():
            raise ValueError(
                f"triplet {triplet.id} still contains placeholders; engine bug"
            )
        base = subclaim_gen_prompt(triplet)
        meta = meta or {}
        last_error = "no attempts made"
        for attempt in range(1, self.retries + 2):
            final = attempt == self.retries + 1
            response, transport_error = self._complete(
                ctx, PromptRole.SUBCLAIM_GEN, self._prompt_for_attempt(base, attempt)
            )
            if transport_error is None:
                try:
                    sentence = parse_subclaim_response(response, triplet)
                except ParseError as exc:
                    last_error = str(exc)
                else:
                    ctx.trace.record(
                        Stage.SUBCLAIM_GEN,
                        backend_call=True,
                        role=PromptRole.SUBCLAIM_GEN.value,
                        attempt=attempt,
                        ok=True,
                        outcome=sentence,
                        **meta,
                    )
                    return sentence
            else:
                last_error = transport_error
            payload = dict(
                backend_call=True,
                role=PromptRole.SUBCLAIM_GEN.value,
                attempt=attempt,
                ok=False,
                error=last_error,
                **meta,
            )
            if final:
                fallback = (
                    f"{render_entity(triplet.head)} {triplet.relation} "
                    f"{render_entity(triplet.tail)}"
                )
                payload["outcome"] = fallback
                payload["fallback"] = True
                ctx.trace.record(Stage.SUBCLAIM_GEN, **payload)
                return fallback
            ctx.trace.record(Stage.SUBCLAIM_GEN, **payload)
        raise AssertionError("unreachable")
