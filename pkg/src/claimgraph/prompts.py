"""Prompt construction for the six backend roles.

Each role has a fixed instruction block (asserted byte-for-byte by golden
tests) plus a rendered task section. All roles demand a single JSON object
as the reply so responses parse without scraping. Graph extraction is the
only few-shot role; its worked examples ship as a versioned data file rather
than code.
"""
from __future__ import annotations

import json
from enum import Enum
from importlib import resources
from typing import Optional, Sequence

from .graph import ClaimGraph, Entity, Named, Placeholder, Triplet


class PromptRole(Enum):
    GRAPH_EXTRACT = "GraphExtract"
    GEN_QUESTION = "GenQuestion"
    REFINE_QUESTION = "RefineQuestion"
    ENTITY_QA = "EntityQA"
    SUBCLAIM_VERIFY = "SubclaimVerify"
    SUBCLAIM_GEN = "SubclaimGen"


FORMAT_REMINDER = (
    "Reminder: reply with exactly one JSON object matching the requested schema, "
    "with no surrounding prose, markdown, or code fences."
)

GRAPH_EXTRACT_INSTRUCTIONS = """\
Decompose the claim into a set of triplets, each expressing one atomic sub-claim
as (head entity, relation, tail entity). Relations are free natural language
("was born in", "is based on the life of"), not a fixed label set. If the claim
refers to an entity descriptively without naming it (for example "a 1964 Kannada
film"), write that entity as an unknown marker X_0, X_1, ... and put the
describing information into the triplets instead. Use the same marker everywhere
the same unknown entity occurs.

Reply with one JSON object:
{"triplets": [{"id": 1, "head": "...", "relation": "...", "tail": "..."}, ...]}
Ids are positive integers, unique within the reply."""

GEN_QUESTION_INSTRUCTIONS = """\
One entity in the triplets below is unknown, written as an X marker. Using the
claim and the triplets, write a single question whose answer names that entity.
First reason about which triplets pin the entity down most precisely, then build
the question from those. Other X markers that may appear are different unknown
entities; treat them as unknowns, never as answers.

Reply with one JSON object:
{"rationale": "...", "triplet_ids": [...], "question": "..."}
triplet_ids lists the ids of the triplets your question is built from."""

REFINE_QUESTION_INSTRUCTIONS = """\
One entity in the triplets below is unknown, written as an X marker. Earlier
questions, listed with their reasoning, failed to surface the entity in the
knowledge base. Write a new question that approaches the entity through
different triplet information than the failed attempts did. Other X markers
are different unknown entities; treat them as unknowns, never as answers.

Reply with one JSON object:
{"rationale": "...", "triplet_ids": [...], "question": "..."}
triplet_ids lists the ids of the triplets your new question is built from."""

ENTITY_QA_INSTRUCTIONS = """\
Answer the question with the name of the single entity it asks for, using only
the documents below. If the documents do not name the entity, the answer is
null; never guess and never answer from outside the documents.

Reply with one JSON object:
{"entity": "..."}   or   {"entity": null}"""

SUBCLAIM_VERIFY_INSTRUCTIONS = """\
Decide whether the statement is supported by the documents below. The decision
is binary: true only if the documents back every part of the statement; false
if any part is contradicted or cannot be found in them.

Reply with one JSON object:
{"supported": true}   or   {"supported": false}"""

SUBCLAIM_GEN_INSTRUCTIONS = """\
Rewrite the triplet below as one natural, self-contained English sentence that
asserts exactly the triplet's content, naming both entities explicitly.

Reply with one JSON object:
{"subclaim": "..."}"""

INSTRUCTIONS = {
    PromptRole.GRAPH_EXTRACT: GRAPH_EXTRACT_INSTRUCTIONS,
    PromptRole.GEN_QUESTION: GEN_QUESTION_INSTRUCTIONS,
    PromptRole.REFINE_QUESTION: REFINE_QUESTION_INSTRUCTIONS,
    PromptRole.ENTITY_QA: ENTITY_QA_INSTRUCTIONS,
    PromptRole.SUBCLAIM_VERIFY: SUBCLAIM_VERIFY_INSTRUCTIONS,
    PromptRole.SUBCLAIM_GEN: SUBCLAIM_GEN_INSTRUCTIONS,
}


def render_entity(entity: Entity) -> str:
    if isinstance(entity, Placeholder):
        return f"X_{entity.id}"
    return entity.text


def render_triplet(triplet: Triplet) -> str:
    return (
        f"Triplet {triplet.id}: {render_entity(triplet.head)} || "
        f"{triplet.relation} || {render_entity(triplet.tail)}"
    )


def render_documents(docs: Sequence) -> str:
    if not docs:
        return "(no documents retrieved)"
    blocks = []
    for i, doc in enumerate(docs, start=1):
        title = f" {doc.title}" if doc.title else ""
        blocks.append(f"[Document {i}]{title}\n{doc.text}")
    return "\n\n".join(blocks)


def load_graph_exemplars() -> list[dict]:
    raw = resources.files("claimgraph.data").joinpath("graph_exemplars.json").read_text("utf-8")
    payload = json.loads(raw)
    return payload["exemplars"]


def _render_exemplars(exemplars: list[dict]) -> str:
    blocks = []
    for ex in exemplars:
        reply = json.dumps({"triplets": ex["triplets"]}, ensure_ascii=False)
        blocks.append(f"Claim: {ex['claim']}\nReply: {reply}")
    return "\n\n".join(blocks)


def graph_extract_prompt(claim: str, exemplars: Optional[list[dict]] = None) -> str:
    if exemplars is None:
        exemplars = load_graph_exemplars()
    return (
        f"{GRAPH_EXTRACT_INSTRUCTIONS}\n\n"
        f"Examples:\n\n{_render_exemplars(exemplars)}\n\n"
        f"Claim: {claim}\nReply:"
    )


def question_prompt(
    claim: str,
    placeholder_id: int,
    group: Sequence[Triplet],
    failed_attempts: Sequence[tuple[str, str]],
) -> tuple[PromptRole, str]:
    """GenQuestion on the first attempt for a placeholder, RefineQuestion once
    failed (rationale, question) pairs exist for it."""
    triplet_block = "\n".join(render_triplet(t) for t in group)
    if failed_attempts:
        attempts = "\n".join(
            f"Attempt {i}: rationale: {r or '(none)'} / question: {q or '(none)'}"
            for i, (r, q) in enumerate(failed_attempts, start=1)
        )
        prompt = (
            f"{REFINE_QUESTION_INSTRUCTIONS}\n\n"
            f"Claim: {claim}\n"
            f"Unknown entity: X_{placeholder_id}\n"
            f"Triplets:\n{triplet_block}\n"
            f"Failed attempts:\n{attempts}\nReply:"
        )
        return PromptRole.REFINE_QUESTION, prompt
    prompt = (
        f"{GEN_QUESTION_INSTRUCTIONS}\n\n"
        f"Claim: {claim}\n"
        f"Unknown entity: X_{placeholder_id}\n"
        f"Triplets:\n{triplet_block}\nReply:"
    )
    return PromptRole.GEN_QUESTION, prompt


def entity_qa_prompt(question: str, docs: Sequence) -> str:
    return (
        f"{ENTITY_QA_INSTRUCTIONS}\n\n"
        f"Documents:\n{render_documents(docs)}\n\n"
        f"Question: {question}\nReply:"
    )


def subclaim_verify_prompt(subclaim: str, docs: Sequence) -> str:
    return (
        f"{SUBCLAIM_VERIFY_INSTRUCTIONS}\n\n"
        f"Documents:\n{render_documents(docs)}\n\n"
        f"Statement: {subclaim}\nReply:"
    )


def subclaim_gen_prompt(triplet: Triplet) -> str:
    return f"{SUBCLAIM_GEN_INSTRUCTIONS}\n\n{render_triplet(triplet)}\nReply:"
