"""Command-line surface over the workspace engine.

Exit codes: 0 success, 1 validation or lookup failure, 2 provider failure,
64 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import FeatreeError
from .workspace import ENV_WORKSPACE, Workspace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROVIDER = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="featree", description=__doc__)
    parser.add_argument(
        "--workspace",
        default=os.environ.get(ENV_WORKSPACE, "./workspace"),
        help="workspace directory (or $FEATREE_WORKSPACE)",
    )
    parser.add_argument(
        "--replay",
        default=None,
        metavar="TRANSCRIPT",
        help="answer all completions from a recorded transcript",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    corpus = groups.add_parser("corpus", help="manage the app-description corpus")
    corpus_cmds = corpus.add_subparsers(dest="cmd", required=True)
    ingest = corpus_cmds.add_parser("ingest", help="filter and store records")
    ingest.add_argument("file", help="line-delimited JSON records")
    crawl = corpus_cmds.add_parser("crawl", help="plan a graph collection run")
    crawl.add_argument("--seeds", required=True, help="word list file, one per line")
    crawl.add_argument("--max", type=int, required=True, dest="max_apps")
    crawl.add_argument("--graph", required=True, help="app-graph fixture JSON")
    corpus_cmds.add_parser("stats", help="corpus size and category counts")

    index = groups.add_parser("index", help="build and query the vector index")
    index_cmds = index.add_subparsers(dest="cmd", required=True)
    index_cmds.add_parser("build", help="embed the corpus into the index")
    query = index_cmds.add_parser("query", help="top-k apps for a text query")
    query.add_argument("text")
    query.add_argument("-k", type=int, default=None)

    tree = groups.add_parser("tree", help="create and refine feature trees")
    tree_cmds = tree.add_subparsers(dest="cmd", required=True)
    new = tree_cmds.add_parser("new", help="create a tree from a root feature")
    new.add_argument("--name", required=True)
    new.add_argument("--desc", default="")
    new.add_argument("--source", default="llm", choices=("llm", "appstore"))
    new.add_argument("--k", type=int, default=None)
    new.add_argument("--n", type=int, default=None)
    generate = tree_cmds.add_parser(
        "generate", help="grow the full two-level tree from the root"
    )
    generate.add_argument("tree")
    generate.add_argument("--source", required=True, choices=("llm", "appstore"))
    refine = tree_cmds.add_parser("refine", help="refine one node in place")
    refine.add_argument("tree")
    refine.add_argument("node")
    refine.add_argument("--source", required=True, choices=("llm", "appstore"))
    refine.add_argument("--feedback", default=None)
    refine.add_argument("--mode", default="replace", choices=("replace", "append"))
    refine.add_argument("--n", type=int, default=None)
    show = tree_cmds.add_parser("show", help="print a tree outline")
    show.add_argument("tree")
    export = tree_cmds.add_parser("export", help="print or save the exact tree JSON")
    export.add_argument("tree")
    export.add_argument("--out", default=None)
    tree_cmds.add_parser("list", help="list trees in the workspace")

    ev = groups.add_parser("eval", help="record rubric scores and build reports")
    ev_cmds = ev.add_subparsers(dest="cmd", required=True)
    record = ev_cmds.add_parser("record", help="store one node assessment")
    record.add_argument("--tree", required=True)
    record.add_argument("--node", required=True)
    record.add_argument("--rater", default=None)
    record.add_argument(
        "--relationship",
        required=True,
        choices=("sub", "sibling", "parent", "identical", "other"),
    )
    record.add_argument("--relationship-note", default="")
    record.add_argument("--relevance", type=int, required=True)
    record.add_argument("--clarity", type=int, required=True)
    record.add_argument("--feasibility", type=int, default=None)
    record.add_argument("--traceability", type=int, default=None)
    record.add_argument(
        "--consensus",
        action="store_true",
        help="store as the agreed final judgment instead of a rater entry",
    )
    report = ev_cmds.add_parser("report", help="quality/relationship/distinct tables")
    report.add_argument("--trees", required=True, help="comma-separated tree ids")
    report.add_argument("--tables", default="3,4,5")
    report.add_argument("--json", action="store_true", dest="as_json")
    venn = ev_cmds.add_parser("venn", help="overlap of two trees' relevant features")
    venn.add_argument("tree_a")
    venn.add_argument("tree_b")

    serve = groups.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8760)

    return parser


def _print_json(doc) -> None:
    print(json.dumps(doc, ensure_ascii=False, indent=2))


def _dispatch(args: argparse.Namespace) -> int:
    workspace = Workspace(args.workspace, replay=args.replay)

    if args.group == "corpus":
        if args.cmd == "ingest":
            report = workspace.ingest_corpus_file(args.file)
            _print_json(report.to_json_dict())
        elif args.cmd == "crawl":
            words = [
                w.strip()
                for w in Path(args.seeds).read_text(encoding="utf-8").splitlines()
                if w.strip()
            ]
            for app_id in workspace.crawl(words, args.max_apps, args.graph):
                print(app_id)
        else:
            _print_json(workspace.corpus_stats())
        return EXIT_OK

    if args.group == "index":
        if args.cmd == "build":
            _print_json(workspace.build_index())
        else:
            hits = workspace.query_index(args.text, args.k)
            for hit in hits:
                print(f"{hit['app_id']}\t{hit['score']:.6f}")
        return EXIT_OK

    if args.group == "tree":
        if args.cmd == "new":
            doc = workspace.create_tree(
                args.name, args.desc, args.source, args.k, args.n
            )
            print(doc["tree_id"])
        elif args.cmd == "generate":
            doc = workspace.generate(args.tree, args.source)
            if doc["root"].get("error"):
                print(
                    f"error: generation failed at the root: "
                    f"{doc['root']['error']}",
                    file=sys.stderr,
                )
                return EXIT_PROVIDER
            failed = [
                n["node_id"] for n in _walk_nodes(doc["root"]) if n.get("error")
            ]
            if failed:
                print(
                    f"warning: {len(failed)} branch(es) failed and were "
                    f"annotated: {', '.join(failed)}",
                    file=sys.stderr,
                )
            print(f"{doc['tree_id']} version {doc['version']}")
        elif args.cmd == "refine":
            doc = workspace.inspire(
                args.tree,
                args.node,
                args.source,
                feedback=args.feedback,
                mode=args.mode,
                n=args.n,
            )
            print(f"{doc['tree_id']} version {doc['version']}")
        elif args.cmd == "show":
            doc = workspace.get_tree_doc(args.tree)
            _print_outline(doc["root"])
        elif args.cmd == "export":
            data = workspace.get_tree_bytes(args.tree)
            if args.out:
                Path(args.out).write_bytes(data)
            else:
                sys.stdout.buffer.write(data)
        else:
            for entry in workspace.list_trees():
                print(
                    f"{entry['tree_id']}\t{entry['approach']}\t"
                    f"v{entry['version']}\t{entry['name']}"
                )
        return EXIT_OK

    if args.group == "eval":
        if args.cmd == "record":
            payload = {
                "node_id": args.node,
                "relationship": args.relationship,
                "relationship_note": args.relationship_note,
                "relevance": args.relevance,
                "clarity": args.clarity,
                "feasibility": args.feasibility,
                "traceability": args.traceability,
            }
            if args.consensus:
                payload["consensus"] = True
            else:
                if not args.rater:
                    raise FeatreeError("--rater is required unless --consensus")
                payload["rater_id"] = args.rater
            _print_json(workspace.record_assessment(args.tree, payload))
        elif args.cmd == "report":
            tree_ids = [t for t in args.trees.split(",") if t]
            tables = [int(t) for t in args.tables.split(",") if t]
            report = workspace.report(tree_ids, tables)
            if args.as_json:
                _print_json(report)
            else:
                print(report["text"])
        else:
            _print_json(workspace.venn(args.tree_a, args.tree_b))
        return EXIT_OK

    if args.group == "serve":
        from .server import serve as run_server

        run_server(workspace, host=args.host, port=args.port)
        return EXIT_OK

    raise FeatreeError(f"unknown command group {args.group!r}")


def _walk_nodes(node: dict):
    yield node
    for child in node.get("children", []):
        yield from _walk_nodes(child)


def _print_outline(node: dict, depth: int = 0) -> None:
    marker = {"root": "*", "llm": "L", "appstore": "A"}.get(node["provenance"], "?")
    source = f" [{node['source-app-id']}]" if node.get("source-app-id") else ""
    print(f"{'  ' * depth}{marker} {node['node_id']} {node['sub-feature']}{source}")
    for child in node.get("children", []):
        _print_outline(child, depth + 1)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except FeatreeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER if exc.code == "provider_failure" else EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
