"""Build an index over the bundled fictional corpus and rank some queries.

Run from the repository root:

    python3 demos/build_and_search.py
"""
from pathlib import Path

from claimgraph import RetrievalBudget, Retriever, bm25_search, build_index

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def main() -> None:
    index = build_index(DATA / "corpus.jsonl")
    print(f"indexed {index.doc_count} documents, {len(index.postings)} terms")
    print(f"average document length: {index.avgdl:.1f} tokens\n")

    for query in [
        "Who directed the film Silent Strings?",
        "mother of modern Hungarian opera",
        "zephyrglass miril lattice",
    ]:
        print(f"query: {query}")
        for rank, hit in enumerate(bm25_search(index, query, top_k=3), start=1):
            print(f"  {rank}. {hit.score:6.3f}  {hit.document.doc_id}  {hit.document.title}")
        print()

    # a Retriever adds the document budget: at most 15 docs / 6000 estimated
    # tokens reach the model, and a single oversized top hit gets truncated
    tight = Retriever(index=index, budget=RetrievalBudget(max_docs=2, max_tokens=60))
    result = tight.retrieve("Elena Varga opera")
    print(f"budgeted retrieval: {len(result.hits)} hits ranked, "
          f"{len(result.documents)} packed, truncated={result.truncated}")
    for doc in result.documents:
        print(f"  kept {doc.doc_id}: {len(doc.text.split())} words")


if __name__ == "__main__":
    main()
