"""Claim graph data model and the pure state transitions over it.

A claim is decomposed into (head, relation, tail) triplets, each standing for
one sub-claim. Entities referenced descriptively but not named ("a 1964
Kannada film") are placeholders that later resolution replaces with actual
entity names. Graph values are immutable snapshots: every transition returns
a new graph, so they are safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Union


class GraphError(ValueError):
    """Invalid graph construction or an illegal state transition."""


@dataclass(frozen=True)
class Named:
    """An explicitly named entity."""
    text: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise GraphError("named entity text must be non-empty")


@dataclass(frozen=True)
class Placeholder:
    """An ambiguous entity awaiting resolution. Ids are opaque labels,
    unique per distinct ambiguous entity; they need not be contiguous."""
    id: int

    def __post_init__(self) -> None:
        if self.id < 0:
            raise GraphError(f"placeholder id must be non-negative, got {self.id}")


Entity = Union[Named, Placeholder]


class TripletStatus(Enum):
    UNVERIFIED = "Unverified"
    VERIFIED = "Verified"


class Verdict(Enum):
    SUPPORTED = "Supported"
    REFUTED = "Refuted"


@dataclass(frozen=True)
class Triplet:
    """One sub-claim: head --relation--> tail. Relations are open-vocabulary
    natural-language strings. Status only ever moves Unverified -> Verified."""
    id: int
    head: Entity
    relation: str
    tail: Entity
    status: TripletStatus = TripletStatus.UNVERIFIED

    def __post_init__(self) -> None:
        if not self.relation.strip():
            raise GraphError(f"triplet {self.id}: relation must be non-empty")

    def placeholder_ids(self) -> set[int]:
        return {e.id for e in (self.head, self.tail) if isinstance(e, Placeholder)}

    def references(self, placeholder_id: int) -> bool:
        return placeholder_id in self.placeholder_ids()


@dataclass(frozen=True)
class ClaimGraph:
    """Snapshot of a claim and its triplets, plus the placeholder resolutions
    applied so far. Substitution is eager: a resolved placeholder id never
    remains referenced by any triplet."""
    claim_text: str
    triplets: tuple[Triplet, ...] = ()
    resolutions: dict[int, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [t.id for t in self.triplets]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise GraphError(f"duplicate triplet ids: {dupes}")
        referenced = ambiguous_entities(self)
        stale = referenced & set(self.resolutions)
        if stale:
            raise GraphError(
                f"placeholders {sorted(stale)} are resolved but still referenced"
            )

    def triplet(self, triplet_id: int) -> Triplet:
        for t in self.triplets:
            if t.id == triplet_id:
                return t
        raise GraphError(f"unknown triplet id {triplet_id}")

    def triplet_ids(self) -> set[int]:
        return {t.id for t in self.triplets}


def ambiguous_entities(graph: ClaimGraph) -> set[int]:
    """Placeholder ids still referenced by any triplet's head or tail."""
    out: set[int] = set()
    for t in graph.triplets:
        out |= t.placeholder_ids()
    return out


def group_triplets(graph: ClaimGraph) -> list[tuple[int, list[Triplet]]]:
    """One group per ambiguous entity, in ascending placeholder-id order.

    A triplet whose head and tail are two distinct placeholders appears in
    both groups. Triplets with no placeholder belong to no group. Within a
    group, triplets keep graph order.
    """
    return [
        (ae, [t for t in graph.triplets if t.references(ae)])
        for ae in sorted(ambiguous_entities(graph))
    ]


def _substitute(entity: Entity, placeholder_id: int, text: str) -> Entity:
    if isinstance(entity, Placeholder) and entity.id == placeholder_id:
        return Named(text)
    return entity


def resolve_placeholder(graph: ClaimGraph, placeholder_id: int, entity_text: str) -> ClaimGraph:
    """Replace every occurrence of the placeholder with a named entity and
    record the mapping. The placeholder must currently be referenced."""
    entity_text = entity_text.strip()
    if not entity_text:
        raise GraphError("resolved entity text must be non-empty")
    if placeholder_id not in ambiguous_entities(graph):
        raise GraphError(f"placeholder {placeholder_id} is not referenced by any triplet")
    triplets = tuple(
        replace(
            t,
            head=_substitute(t.head, placeholder_id, entity_text),
            tail=_substitute(t.tail, placeholder_id, entity_text),
        )
        for t in graph.triplets
    )
    resolutions = {**graph.resolutions, placeholder_id: entity_text}
    return ClaimGraph(graph.claim_text, triplets, resolutions)


def mark_verified(graph: ClaimGraph, triplet_ids: Iterable[int]) -> ClaimGraph:
    """Mark the listed triplets Verified. Idempotent; unknown ids are errors."""
    wanted = set(triplet_ids)
    unknown = wanted - graph.triplet_ids()
    if unknown:
        raise GraphError(f"unknown triplet ids: {sorted(unknown)}")
    triplets = tuple(
        replace(t, status=TripletStatus.VERIFIED) if t.id in wanted else t
        for t in graph.triplets
    )
    return ClaimGraph(graph.claim_text, triplets, dict(graph.resolutions))


def is_clarified(graph: ClaimGraph) -> bool:
    """True iff no triplet references a placeholder."""
    return not ambiguous_entities(graph)


def aggregate_verdict(results: Iterable[bool]) -> Verdict:
    """Pure conjunction: Supported iff every sub-claim verified true.
    An empty sequence is vacuously Supported (the pipeline treats
    zero-triplet extraction as an error before this ever applies)."""
    return Verdict.SUPPORTED if all(results) else Verdict.REFUTED


# --- JSON serialization (trace format and --dump-graph) ---

def entity_to_json(entity: Entity) -> dict[str, Any]:
    if isinstance(entity, Placeholder):
        return {"placeholder": entity.id}
    return {"named": entity.text}


def entity_from_json(obj: dict[str, Any]) -> Entity:
    if "placeholder" in obj:
        return Placeholder(int(obj["placeholder"]))
    if "named" in obj:
        return Named(obj["named"])
    raise GraphError(f"not an entity object: {obj!r}")


def graph_to_json(graph: ClaimGraph) -> dict[str, Any]:
    return {
        "claim": graph.claim_text,
        "triplets": [
            {
                "id": t.id,
                "head": entity_to_json(t.head),
                "relation": t.relation,
                "tail": entity_to_json(t.tail),
                "status": t.status.value,
            }
            for t in graph.triplets
        ],
        "resolutions": {str(pid): text for pid, text in graph.resolutions.items()},
    }


def graph_from_json(obj: dict[str, Any]) -> ClaimGraph:
    triplets = tuple(
        Triplet(
            id=int(t["id"]),
            head=entity_from_json(t["head"]),
            relation=t["relation"],
            tail=entity_from_json(t["tail"]),
            status=TripletStatus(t["status"]),
        )
        for t in obj["triplets"]
    )
    resolutions = {int(pid): text for pid, text in obj.get("resolutions", {}).items()}
    return ClaimGraph(obj["claim"], triplets, resolutions)
