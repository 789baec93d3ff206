"""Command-line interface.

Subcommands: index build / index search, verify, bench, trace show,
config check. Exit codes: 0 for success (a Refuted verdict is a success),
2 for usage errors (argparse), 3 for runtime failures such as missing files,
bad config, or backend trouble.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .backends import BackendError
from .config import ConfigError, make_backend, make_gateway, make_retriever, parse_config
from .evaluation import EvalError, run_benchmark
from .gateway import Gateway
from .graph import GraphError, graph_to_json
from .pipeline import verify_claim
from .retrieval import CorpusError, RetrievalIndex, bm25_search, build_index
from .trace import TraceError, read_trace_file, replay


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="claimgraph",
        description="Graph-based claim verification against a local document index.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="build or query the document index")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)

    p_build = index_sub.add_parser("build", help="build an index from a JSONL corpus")
    p_build.add_argument("--corpus", type=Path, required=True,
                         help="JSONL file with doc_id/title/text records")
    p_build.add_argument("--out", type=Path, required=True, help="index output directory")
    p_build.add_argument("--stemming", action="store_true",
                         help="apply minimal English suffix stripping")
    p_build.set_defaults(func=cmd_index_build)

    p_search = index_sub.add_parser("search", help="rank documents for a query")
    p_search.add_argument("--index", type=Path, required=True, help="index directory")
    p_search.add_argument("--query", required=True)
    p_search.add_argument("--k", type=_positive_int, default=10)
    p_search.set_defaults(func=cmd_index_search)

    p_verify = sub.add_parser("verify", help="verify one claim")
    p_verify.add_argument("--claim", required=True)
    p_verify.add_argument("--index", type=Path, required=True, help="index directory")
    p_verify.add_argument("--config", type=Path, help="TOML/JSON config file")
    p_verify.add_argument("--max-iterations", type=_positive_int, default=None,
                          help="disambiguation iteration cap (default 5)")
    p_verify.add_argument("--mock-script", type=Path, default=None,
                          help="scripted backend responses instead of a remote model")
    p_verify.add_argument("--dump-graph", action="store_true",
                          help="print the final claim graph as JSON")
    p_verify.add_argument("--trace-out", type=Path, default=None,
                          help="directory for the per-claim trace file")
    p_verify.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="run a benchmark dataset")
    p_bench.add_argument("--dataset", choices=["hover", "feverous"], required=True)
    p_bench.add_argument("--data", type=Path, required=True, help="dataset file")
    p_bench.add_argument("--index", type=Path, required=True, help="index directory")
    p_bench.add_argument("--partitions", default=None,
                         help="comma-separated partition names (default: all present)")
    p_bench.add_argument("--n", type=_positive_int, default=200,
                         help="claims sampled per partition")
    p_bench.add_argument("--seed", type=int, default=None,
                         help="sampling seed (default 42)")
    p_bench.add_argument("--out", type=Path, required=True, help="report output directory")
    p_bench.add_argument("--config", type=Path, help="TOML/JSON config file")
    p_bench.add_argument("--max-iterations", type=_positive_int, default=None)
    p_bench.add_argument("--mock-script", type=Path, default=None)
    p_bench.add_argument("--workers", type=_positive_int, default=None)
    p_bench.add_argument("--exhaustive", action="store_true", default=None,
                         help="verify every sub-claim instead of stopping at the first failure")
    p_bench.set_defaults(func=cmd_bench)

    p_trace = sub.add_parser("trace", help="inspect recorded traces")
    trace_sub = p_trace.add_subparsers(dest="trace_command", required=True)
    p_show = trace_sub.add_parser("show", help="print a trace file and its replay")
    p_show.add_argument("path", type=Path, help="trace .jsonl file")
    p_show.set_defaults(func=cmd_trace_show)

    p_config = sub.add_parser("config", help="configuration tools")
    config_sub = p_config.add_subparsers(dest="config_command", required=True)
    p_check = config_sub.add_parser("check", help="validate a config file")
    p_check.add_argument("path", type=Path, help="TOML/JSON config file")
    p_check.set_defaults(func=cmd_config_check)

    return parser


def cmd_index_build(args: argparse.Namespace) -> int:
    index = build_index(args.corpus, stemming=args.stemming)
    index.save(args.out)
    print(f"indexed {index.doc_count} documents into {args.out}")
    return 0


def cmd_index_search(args: argparse.Namespace) -> int:
    index = RetrievalIndex.load(args.index)
    for rank, hit in enumerate(bm25_search(index, args.query, args.k), start=1):
        print(f"{rank}\t{hit.score:.4f}\t{hit.document.doc_id}\t{hit.document.title}")
    return 0


def _assemble(args: argparse.Namespace) -> tuple:
    overrides = {
        "mock_script": args.mock_script,
        "max_iterations": args.max_iterations,
    }
    for key in ("workers", "exhaustive", "seed"):
        if hasattr(args, key):
            overrides[key] = getattr(args, key)
    config = parse_config(getattr(args, "config", None), overrides)
    config.require_backend()
    index = RetrievalIndex.load(args.index)
    backend = make_backend(config)
    gateway: Gateway = make_gateway(config, backend)
    retriever = make_retriever(config, index)
    return config, gateway, retriever


def cmd_verify(args: argparse.Namespace) -> int:
    config, gateway, retriever = _assemble(args)
    result = verify_claim(
        args.claim,
        gateway,
        retriever,
        max_iterations=config.max_iterations,
        exhaustive=config.exhaustive,
        trace_dir=args.trace_out,
        timeout_s=config.timeout_s,
    )
    print(result.verdict.value)
    if result.error is not None:
        print(f"error class: {result.error}", file=sys.stderr)
    if args.dump_graph:
        if result.graph is None:
            print("no graph extracted", file=sys.stderr)
        else:
            print(json.dumps(graph_to_json(result.graph), indent=2, ensure_ascii=False))
    if result.trace_path is not None:
        print(f"trace: {result.trace_path}", file=sys.stderr)
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config, gateway, retriever = _assemble(args)
    partitions = args.partitions.split(",") if args.partitions else None
    summary = run_benchmark(
        dataset=args.dataset,
        data_path=args.data,
        gateway=gateway,
        retriever=retriever,
        out_dir=args.out,
        partitions=partitions,
        n=args.n,
        seed=config.seed,
        max_iterations=config.max_iterations,
        exhaustive=config.exhaustive,
        timeout_s=config.timeout_s,
        workers=config.workers,
    )
    for partition, scores in summary["partitions"].items():
        print(
            f"{partition}\tn={scores['n']}\t"
            f"accuracy={scores['accuracy'] * 100:.2f}\t"
            f"macro_f1={scores['macro_f1'] * 100:.2f}"
        )
    print(f"reports written to {args.out}")
    return 0


def cmd_trace_show(args: argparse.Namespace) -> int:
    header, events = read_trace_file(args.path)
    print(f"claim {header['claim_id']}: {header['claim']}")
    for event in events:
        payload = json.dumps(event.payload, ensure_ascii=False)
        print(f"{event.seq:>4}  {event.stage.value:<14} {payload}")
    outcome = replay(events)
    if outcome.verdict is not None:
        suffix = f" (error class: {outcome.error})" if outcome.error else ""
        print(f"replayed verdict: {outcome.verdict.value}{suffix}")
    else:
        print("replayed verdict: (incomplete trace)")
    return 0


def cmd_config_check(args: argparse.Namespace) -> int:
    config = parse_config(args.path)
    print("config ok")
    for name, value in sorted(vars(config).items()):
        print(f"  {name} = {value!r}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        ConfigError,
        CorpusError,
        EvalError,
        BackendError,
        TraceError,
        GraphError,
        OSError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
