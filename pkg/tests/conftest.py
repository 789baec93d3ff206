"""Shared fixtures: the packaged test corpus, scripted backends, fake clock."""
from __future__ import annotations

from pathlib import Path

import pytest

from claimgraph import (
    Gateway,
    MockBackend,
    RetrievalIndex,
    Retriever,
    read_corpus,
)

DATA_DIR = Path(__file__).parent / "data"
SCRIPT_DIR = DATA_DIR / "scripts"
GOLDEN_DIR = DATA_DIR / "golden"


class FakeClock:
    """Deterministic monotonic clock: each call advances a fixed step."""

    def __init__(self, step: float = 0.001) -> None:
        self.now = 0.0
        self.step = step

    def __call__(self) -> float:
        self.now += self.step
        return self.now


def make_ctx(claim_id="test-claim", claim_text="claim", deadline=None, clock=None):
    """In-memory RunContext (no trace sink) for engine-level tests."""
    from claimgraph import ClaimTrace, RunContext

    kwargs = {"clock": clock} if clock is not None else {}
    trace = ClaimTrace(claim_id, claim_text, **kwargs)
    return RunContext(claim_id=claim_id, trace=trace, **kwargs, deadline=deadline)


def load_script(name: str) -> MockBackend:
    return MockBackend.from_script(SCRIPT_DIR / name)


def gateway_for(script_name: str, retries: int = 2) -> Gateway:
    return Gateway(load_script(script_name), retries=retries)


def run_scenario(scenario, retriever, trace_dir, clock=None, timeout_s=300.0):
    """Run one scripted scenario and hand back (result, trace header, events)."""
    from claimgraph import read_trace_file, verify_claim

    kwargs = {"clock": clock} if clock is not None else {}
    result = verify_claim(
        scenario.claim,
        gateway_for(scenario.script),
        retriever,
        max_iterations=scenario.max_iterations,
        exhaustive=scenario.exhaustive,
        trace_dir=trace_dir,
        timeout_s=timeout_s,
        **kwargs,
    )
    header, events = read_trace_file(result.trace_path)
    return result, header, events


@pytest.fixture(scope="session")
def corpus_docs():
    return read_corpus(DATA_DIR / "corpus.jsonl")


@pytest.fixture(scope="session")
def corpus_index(corpus_docs):
    return RetrievalIndex(corpus_docs)


@pytest.fixture
def retriever(corpus_index):
    return Retriever(index=corpus_index)


@pytest.fixture
def fake_clock():
    return FakeClock()
