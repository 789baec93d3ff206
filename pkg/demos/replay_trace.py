"""Record a verification trace, then reconstruct the run from the file alone.

Every pipeline step lands in an append-only JSONL trace. Replaying the events
rebuilds the final graph, the per-subclaim outcomes, and the verdict without
touching a model or an index, which is what makes recorded runs auditable.
Run from the repository root:

    python3 demos/replay_trace.py
"""
import tempfile
from pathlib import Path

from claimgraph import (
    Gateway,
    MockBackend,
    Retriever,
    build_index,
    read_trace_file,
    replay,
    verify_claim,
)

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

CLAIM = "The director of the 1954 film based on the life of Elena Varga was born in 1920."


def main() -> None:
    gateway = Gateway(MockBackend.from_script(DATA / "scripts" / "s04_cascade.json"))
    retriever = Retriever(index=build_index(DATA / "corpus.jsonl"))

    with tempfile.TemporaryDirectory() as tmp:
        live = verify_claim(CLAIM, gateway, retriever, trace_dir=Path(tmp))
        header, events = read_trace_file(live.trace_path)

        print(f"trace {live.trace_path.name}: schema {header['schema']}, "
              f"{len(events)} events\n")
        for e in events:
            extras = []
            if e.payload.get("backend_call"):
                extras.append(f"model call, attempt {e.payload['attempt']}")
            if "placeholder" in e.payload:
                extras.append(f"placeholder X_{e.payload['placeholder']}")
            if "query" in e.payload:
                extras.append(f"query {e.payload['query']!r}")
            note = f"  ({'; '.join(extras)})" if extras else ""
            print(f"  {e.seq:2d} {e.stage.value:<15}{note}")

        rebuilt = replay(events)
        print("\nreplay vs live run:")
        print(f"  verdict:   {rebuilt.verdict.value} == {live.verdict.value}")
        print(f"  graph:     {'identical' if rebuilt.graph == live.graph else 'DIFFERS'}")
        same_subclaims = rebuilt.subclaim_results == [
            (s.triplet_id, s.subclaim, s.supported) for s in live.subclaim_results
        ]
        print(f"  subclaims: {'identical' if same_subclaims else 'DIFFERS'}")
        assert rebuilt.verdict is live.verdict and rebuilt.graph == live.graph
        assert same_subclaims


if __name__ == "__main__":
    main()
