"""Corpus ingestion, BM25 sparse retrieval, pluggable reranking, and
budget-limited document packing.

Scoring is Okapi BM25 with the always-positive idf variant

    idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
    score(d, q) = sum over tokens t of q of
        idf(t) * tf(t, d) * (k1 + 1) / (tf(t, d) + k1 * (1 - b + b * |d| / avgdl))

where the sum runs over the query token *sequence* (a token repeated in the
query contributes once per occurrence). Only documents matching at least one
query term are returned; ties break by doc_id ascending.

Tokenization is lowercase Unicode-alphanumeric word splitting (underscore
excluded), no stopwords; an optional minimal English suffix stripper can be
enabled via ``stemming=True`` but is off by default so scores stay
oracle-reproducible.
"""
from __future__ import annotations

import gzip
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol

import requests

INDEX_FORMAT = "claimgraph-index/1"

_WORD = re.compile(r"[^\W_]+", re.UNICODE)


class CorpusError(ValueError):
    """Malformed or unusable corpus / index input."""


def _strip_suffix(token: str) -> str:
    # approximate: sses/ies/plural-s, ing, ed
    if token.endswith("sses"):
        return token[:-2]
    if token.endswith("ies") and len(token) > 4:
        return token[:-3] + "y"
    if token.endswith("ss"):
        return token
    if token.endswith("s") and len(token) > 3:
        return token[:-1]
    if token.endswith("ing") and len(token) > 5:
        return token[:-3]
    if token.endswith("ed") and len(token) > 4:
        return token[:-2]
    return token


def tokenize(text: str, stemming: bool = False) -> list[str]:
    tokens = _WORD.findall(text.lower())
    if stemming:
        tokens = [_strip_suffix(t) for t in tokens]
    return tokens


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise CorpusError(f"document {self.doc_id!r}: text must be non-empty")


@dataclass(frozen=True)
class RankedHit:
    document: Document
    score: float


@dataclass(frozen=True)
class RetrievalBudget:
    """Packing limits: at most max_docs documents and max_tokens estimated
    tokens per retrieval. Defaults follow the 15-document / 6000-token
    model-input constraint."""
    max_docs: int = 15
    max_tokens: int = 6000

    def __post_init__(self) -> None:
        if self.max_docs < 1 or self.max_tokens < 1:
            raise ValueError("budget limits must be >= 1")


def estimate_tokens(text: str) -> int:
    """Backbone-tokenizer-free estimate: whitespace tokens x 1.3, rounded up.
    Titles are not counted."""
    return math.ceil(len(text.split()) * 1.3)


def read_corpus(corpus_path: Path) -> list[Document]:
    """Read a JSON Lines corpus ({"doc_id", "title", "text"} per line)."""
    docs: list[Document] = []
    with open(corpus_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                docs.append(Document(str(row["doc_id"]), row.get("title", ""), row["text"]))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise CorpusError(f"{corpus_path}:{lineno}: bad corpus record: {exc}") from exc
    return docs


class RetrievalIndex:
    """In-memory inverted index over an immutable corpus snapshot. Documents
    are indexed over title and body concatenated."""

    def __init__(self, docs: list[Document], stemming: bool = False) -> None:
        if not docs:
            raise CorpusError("corpus is empty")
        ids = [d.doc_id for d in docs]
        dupes = sorted({i for i, n in Counter(ids).items() if n > 1})
        if dupes:
            raise CorpusError(f"duplicate doc_ids: {dupes}")
        self.docs = list(docs)
        self.stemming = stemming
        self.by_id = {d.doc_id: d for d in docs}
        self.doc_lengths: dict[str, int] = {}
        # term -> list of (doc_id, term frequency), in corpus order
        self.postings: dict[str, list[tuple[str, int]]] = {}
        for doc in docs:
            tokens = tokenize(doc.title + " " + doc.text, stemming=stemming)
            self.doc_lengths[doc.doc_id] = len(tokens)
            for term, tf in sorted(Counter(tokens).items()):
                self.postings.setdefault(term, []).append((doc.doc_id, tf))
        self.doc_count = len(docs)
        self.avgdl = sum(self.doc_lengths.values()) / self.doc_count

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    # --- persistence: manifest.json + postings.json.gz + docs.jsonl ---

    def save(self, out_dir: Path) -> None:
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format": INDEX_FORMAT,
            "doc_count": self.doc_count,
            "avgdl": self.avgdl,
            "stemming": self.stemming,
        }
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        with open(out_dir / "docs.jsonl", "w", encoding="utf-8") as fh:
            for doc in self.docs:
                fh.write(
                    json.dumps(
                        {"doc_id": doc.doc_id, "title": doc.title, "text": doc.text},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        payload = json.dumps(
            {"postings": self.postings, "doc_lengths": self.doc_lengths},
            sort_keys=True,
        ).encode("utf-8")
        # mtime=0 + empty name keep rebuilds byte-stable
        with open(out_dir / "postings.json.gz", "wb") as raw:
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
                gz.write(payload)

    @classmethod
    def load(cls, index_dir: Path) -> "RetrievalIndex":
        manifest_path = index_dir / "manifest.json"
        if not manifest_path.exists():
            raise CorpusError(f"{index_dir}: no manifest.json (not an index directory)")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("format") != INDEX_FORMAT:
            raise CorpusError(f"{index_dir}: unsupported index format {manifest.get('format')!r}")
        docs = read_corpus(index_dir / "docs.jsonl")
        index = cls.__new__(cls)
        index.docs = docs
        index.stemming = manifest.get("stemming", False)
        index.by_id = {d.doc_id: d for d in docs}
        with gzip.open(index_dir / "postings.json.gz", "rt", encoding="utf-8") as gz:
            stored = json.load(gz)
        index.postings = {
            term: [(doc_id, tf) for doc_id, tf in rows]
            for term, rows in stored["postings"].items()
        }
        index.doc_lengths = stored["doc_lengths"]
        index.doc_count = manifest["doc_count"]
        index.avgdl = manifest["avgdl"]
        return index


def build_index(corpus_path: Path, stemming: bool = False) -> RetrievalIndex:
    """Build an index from a JSONL corpus. Duplicate doc_ids and empty
    corpora are hard errors; rebuilding from the same inputs is byte-stable."""
    return RetrievalIndex(read_corpus(corpus_path), stemming=stemming)


def bm25_search(
    index: RetrievalIndex,
    query: str,
    top_k: int,
    k1: float = 1.2,
    b: float = 0.75,
) -> list[RankedHit]:
    """Top_k documents matching the query under Okapi BM25. A query that
    tokenizes to nothing (or matches no corpus term) yields []."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    tokens = tokenize(query, stemming=index.stemming)
    scores: dict[str, float] = {}
    for term in tokens:
        postings = index.postings.get(term)
        if not postings:
            continue
        df = len(postings)
        idf = math.log(1 + (index.doc_count - df + 0.5) / (df + 0.5))
        for doc_id, tf in postings:
            dl = index.doc_lengths[doc_id]
            norm = tf + k1 * (1 - b + b * dl / index.avgdl)
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (k1 + 1) / norm
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [RankedHit(index.by_id[doc_id], score) for doc_id, score in ranked[:top_k]]


class Reranker(Protocol):
    def score(self, query: str, passages: list[str]) -> list[float]: ...


class PassthroughReranker:
    """Sentinel: rerank() returns its input untouched, scores included."""

    def score(self, query: str, passages: list[str]) -> list[float]:
        n = len(passages)
        return [float(n - i) for i in range(n)]


class HttpReranker:
    """Client for an external scoring endpoint taking {query, passages[]}
    and returning a parallel score array."""

    def __init__(self, endpoint: str, timeout_s: float = 30.0) -> None:
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def score(self, query: str, passages: list[str]) -> list[float]:
        resp = requests.post(
            self.endpoint,
            json={"query": query, "passages": passages},
            timeout=self.timeout_s,
        )
        resp.raise_for_status()
        scores = resp.json()["scores"]
        if len(scores) != len(passages):
            raise ValueError(
                f"reranker returned {len(scores)} scores for {len(passages)} passages"
            )
        return [float(s) for s in scores]


class RerankUnavailable(RuntimeError):
    """Raised when the reranker fails and fallback is disabled."""


def rerank(
    query: str,
    hits: list[RankedHit],
    reranker: Reranker,
    fallback_to_input: bool = True,
) -> tuple[list[RankedHit], bool]:
    """Reorder hits by reranker relevance. The document multiset is preserved
    exactly; dropping is pack_budget's job. Returns (hits, degraded) where
    degraded signals a reranker failure answered by passthrough."""
    if not hits:
        return [], False
    if reranker is None or isinstance(reranker, PassthroughReranker):
        return list(hits), False
    try:
        scores = reranker.score(query, [h.document.text for h in hits])
    except Exception as exc:
        if not fallback_to_input:
            raise RerankUnavailable(str(exc)) from exc
        return list(hits), True
    rescored = [RankedHit(h.document, float(s)) for h, s in zip(hits, scores)]
    rescored.sort(key=lambda h: (-h.score, h.document.doc_id))
    return rescored, False


def truncate_to_budget(doc: Document, max_tokens: int) -> Document:
    # at least one token survives even for degenerate budgets (max_tokens = 1)
    keep = max(1, int(max_tokens / 1.3))
    return Document(doc.doc_id, doc.title, " ".join(doc.text.split()[:keep]))


def pack_budget(
    hits: list[RankedHit], budget: RetrievalBudget
) -> tuple[list[Document], bool]:
    """Longest prefix of hits within both caps. If the first document alone
    exceeds max_tokens it is truncated to fit rather than dropped; the
    returned flag reports that truncation."""
    packed: list[Document] = []
    used = 0
    truncated = False
    for hit in hits:
        if len(packed) >= budget.max_docs:
            break
        cost = estimate_tokens(hit.document.text)
        if used + cost > budget.max_tokens:
            if not packed:
                packed.append(truncate_to_budget(hit.document, budget.max_tokens))
                truncated = True
            break
        packed.append(hit.document)
        used += cost
    return packed, truncated


@dataclass
class RetrievalResult:
    """One retrieval round-trip: the ranked hits considered and the packed
    documents handed to the model."""
    query: str
    hits: list[RankedHit]
    documents: list[Document]
    truncated: bool
    rerank_degraded: bool = False


@dataclass
class Retriever:
    """Two-layer retrieval: BM25 candidates, optional reranking, optional
    min-score cutoff, then budget packing. Pure: emits no trace events."""
    index: RetrievalIndex
    top_k: int = 50
    budget: RetrievalBudget = field(default_factory=RetrievalBudget)
    k1: float = 1.2
    b: float = 0.75
    reranker: Optional[Reranker] = None
    min_score: Optional[float] = None
    rerank_fallback: bool = True

    def retrieve(self, query: str) -> RetrievalResult:
        hits = bm25_search(self.index, query, self.top_k, k1=self.k1, b=self.b)
        degraded = False
        if self.reranker is not None:
            hits, degraded = rerank(query, hits, self.reranker, self.rerank_fallback)
        if self.min_score is not None:
            hits = [h for h in hits if h.score >= self.min_score]
        documents, truncated = pack_budget(hits, self.budget)
        return RetrievalResult(
            query=query,
            hits=hits,
            documents=documents,
            truncated=truncated,
            rerank_degraded=degraded,
        )
