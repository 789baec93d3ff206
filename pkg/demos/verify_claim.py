"""Verify a claim whose subjects are never named, using scripted model replies.

The claim below describes a film only by what it is based on, and its director
only through that film. The extractor turns both descriptions into
placeholders; two disambiguation iterations resolve them against the corpus
(film first, then director) before the remaining fact is checked. Run from the
repository root:

    python3 demos/verify_claim.py
"""
import tempfile
from pathlib import Path

from claimgraph import Gateway, MockBackend, Retriever, build_index, verify_claim

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

CLAIM = "The director of the 1954 film based on the life of Elena Varga was born in 1920."


def main() -> None:
    gateway = Gateway(MockBackend.from_script(DATA / "scripts" / "s04_cascade.json"))
    retriever = Retriever(index=build_index(DATA / "corpus.jsonl"))

    with tempfile.TemporaryDirectory() as tmp:
        result = verify_claim(CLAIM, gateway, retriever, trace_dir=Path(tmp))

        print(f"claim:   {CLAIM}")
        print(f"verdict: {result.verdict.value}")
        print(f"error:   {result.error}\n")

        d = result.disambiguation
        print(f"placeholders resolved in {d.iterations_used} iteration(s); "
              f"fully resolved: {d.resolved}")
        for pid, entity in sorted(result.graph.resolutions.items()):
            print(f"  X_{pid} -> {entity}")
        print()

        print("final graph:")
        for t in result.graph.triplets:
            print(f"  [{t.id}] {t.head.text} | {t.relation} | {t.tail.text}"
                  f"  ({t.status.value})")
        print()

        for s in result.subclaim_results:
            mark = "supported" if s.supported else "not supported"
            print(f"checked subclaim {s.triplet_id}: {s.subclaim!r} -> {mark}")

        c = result.cost
        print(f"\ncost: {c['llm_calls']:.0f} model calls, "
              f"{c['kb_interactions']:.0f} retrievals")
        print(f"trace written to {result.trace_path.name} (deleted with tempdir)")


if __name__ == "__main__":
    main()
