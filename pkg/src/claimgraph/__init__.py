"""Claim verification over triplet graphs.

A claim is decomposed into a graph of (head, relation, tail) triplets whose
descriptively-referenced entities start as placeholders. Iterative questioning
against a BM25-indexed corpus resolves the placeholders and verifies the
triplets the answers relied on; remaining triplets are verified one sub-claim
at a time. The verdict is Supported only if everything checks out, and every
run leaves a replayable trace plus exact interaction counts.
"""
from .backends import (
    Backend,
    BackendError,
    BackendRequest,
    HttpChatBackend,
    MockBackend,
    MockRule,
    MockScriptError,
)
from .config import (
    Config,
    ConfigError,
    load_config_file,
    make_backend,
    make_gateway,
    make_retriever,
    parse_config,
)
from .context import ClaimTimeout, RunContext, traced_retrieve
from .disambiguation import (
    DisambiguationResult,
    DisambiguationSummary,
    FailedAttempt,
    run_disambiguation,
)
from .evaluation import (
    EvalError,
    LabeledClaim,
    accuracy,
    balanced_sample,
    load_feverous,
    load_hover,
    macro_f1,
    per_class_f1,
    run_benchmark,
)
from .gateway import (
    EntityAnswer,
    ExtractionFailed,
    Gateway,
    ParseError,
    QuestionFailed,
    QuestionProposal,
)
from .graph import (
    ClaimGraph,
    Entity,
    GraphError,
    Named,
    Placeholder,
    Triplet,
    TripletStatus,
    Verdict,
    aggregate_verdict,
    ambiguous_entities,
    graph_from_json,
    graph_to_json,
    group_triplets,
    is_clarified,
    mark_verified,
    resolve_placeholder,
)
from .pipeline import (
    ClaimResult,
    SubclaimResult,
    claim_id_for,
    verify_batch,
    verify_claim,
)
from .prompts import FORMAT_REMINDER, PromptRole
from .reports import (
    ReportTable,
    cost_report,
    render_markdown,
    render_tsv,
    resolution_report,
    score_report,
)
from .retrieval import (
    CorpusError,
    Document,
    HttpReranker,
    PassthroughReranker,
    RankedHit,
    RerankUnavailable,
    RetrievalBudget,
    RetrievalIndex,
    RetrievalResult,
    Retriever,
    bm25_search,
    build_index,
    estimate_tokens,
    pack_budget,
    read_corpus,
    rerank,
    tokenize,
)
from .trace import (
    ClaimTrace,
    CostMeter,
    ReplayResult,
    Stage,
    TraceError,
    TraceEvent,
    count_backend_calls,
    count_retrievals,
    read_trace_file,
    replay,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "BackendError",
    "BackendRequest",
    "ClaimGraph",
    "ClaimResult",
    "ClaimTimeout",
    "ClaimTrace",
    "Config",
    "ConfigError",
    "CorpusError",
    "CostMeter",
    "DisambiguationResult",
    "DisambiguationSummary",
    "Document",
    "Entity",
    "EntityAnswer",
    "EvalError",
    "ExtractionFailed",
    "FORMAT_REMINDER",
    "FailedAttempt",
    "Gateway",
    "GraphError",
    "HttpChatBackend",
    "HttpReranker",
    "LabeledClaim",
    "MockBackend",
    "MockRule",
    "MockScriptError",
    "Named",
    "ParseError",
    "PassthroughReranker",
    "Placeholder",
    "PromptRole",
    "QuestionFailed",
    "QuestionProposal",
    "RankedHit",
    "ReplayResult",
    "ReportTable",
    "RerankUnavailable",
    "RetrievalBudget",
    "RetrievalIndex",
    "RetrievalResult",
    "Retriever",
    "RunContext",
    "Stage",
    "SubclaimResult",
    "TraceError",
    "TraceEvent",
    "Triplet",
    "TripletStatus",
    "Verdict",
    "accuracy",
    "aggregate_verdict",
    "ambiguous_entities",
    "balanced_sample",
    "bm25_search",
    "build_index",
    "claim_id_for",
    "cost_report",
    "count_backend_calls",
    "count_retrievals",
    "estimate_tokens",
    "graph_from_json",
    "graph_to_json",
    "group_triplets",
    "is_clarified",
    "load_config_file",
    "load_feverous",
    "load_hover",
    "macro_f1",
    "make_backend",
    "make_gateway",
    "make_retriever",
    "mark_verified",
    "pack_budget",
    "parse_config",
    "per_class_f1",
    "read_corpus",
    "read_trace_file",
    "render_markdown",
    "render_tsv",
    "replay",
    "rerank",
    "resolution_report",
    "resolve_placeholder",
    "run_benchmark",
    "run_disambiguation",
    "score_report",
    "tokenize",
    "traced_retrieve",
    "verify_batch",
    "verify_claim",
]
