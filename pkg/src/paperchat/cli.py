"""Operator command line: ingest, distill, index, ask, chat REPL, serve.

Every subcommand is a thin mapping onto engine methods. Usage errors exit 2
(argparse), pipeline errors exit 1 with a single line naming the taxonomy
code and, when present, the failing stage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .chat import ChatTurn, turn_to_dict
from .config import AppConfig
from .engine import Engine
from .errors import BadConfig, NotFound, PaperChatError, StageFailure
from .service import map_error, run_server


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paperchat",
        description="Distill papers, index them, and chat over the result.",
    )
    parser.add_argument("--mock", action="store_true", help="offline backends")
    parser.add_argument("--json", action="store_true", help="emit API JSON payloads")
    parser.add_argument("--data-dir", default=None, help="corpus and index location")
    parser.add_argument("--config", default=None, help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="add a raw document from a text file")
    p.add_argument("file")
    p.add_argument("--key", required=True, help='citation key, e.g. "Doe et al. (2021)"')
    p.add_argument("--title", required=True)

    p = sub.add_parser("distill", help="compress a document, preserving structure")
    p.add_argument("doc_id")
    p.add_argument("--ratio", type=float, default=None)

    p = sub.add_parser("index", help="vector index maintenance")
    index_sub = p.add_subparsers(dest="index_command", required=True)
    index_sub.add_parser("rebuild", help="re-chunk, re-embed, and rebuild")

    p = sub.add_parser("ask", help="one-shot question over the indexed corpus")
    p.add_argument("question")
    p.add_argument("--k", type=int, default=None, help="chunks to retrieve")

    sub.add_parser("chat", help="interactive multi-turn session")

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")

    return parser


def _load_config(args: argparse.Namespace) -> AppConfig:
    config = AppConfig.load(args.config)
    if args.mock:
        config.mock_mode = True
    if args.data_dir is not None:
        config.data_dir = args.data_dir
    return config


def _error_line(exc: PaperChatError) -> str:
    _, code, stage = map_error(exc)
    cause = exc.cause if isinstance(exc, StageFailure) else exc
    where = f"{code} (stage: {stage})" if stage else code
    return f"error: {where}: {cause}"


def _require_backend(config: AppConfig) -> None:
    if not config.mock_mode and not config.api_key:
        raise BadConfig("no API key configured; set PAPERCHAT_API_KEY or pass --mock")


def _citation_footer(turn: ChatTurn) -> list[str]:
    lines = []
    grounded = ", ".join(turn.citation_report.grounded) or "(none)"
    lines.append(f"cited: {grounded}")
    if turn.citation_report.ungrounded:
        lines.append(f"ungrounded: {', '.join(turn.citation_report.ungrounded)}")
    return lines


def _retrieved_keys(turn: ChatTurn, key_by_doc: dict[str, str]) -> list[str]:
    keys = []
    for _, chunk in turn.retrieved.hits:
        key = key_by_doc.get(chunk.doc_id, chunk.doc_id)
        if key not in keys:
            keys.append(key)
    return keys


def _print_turn(turn: ChatTurn, engine: Engine, as_json: bool, verbose: bool) -> None:
    keys = engine.citation_key_by_doc()
    if as_json:
        print(json.dumps(turn_to_dict(turn, keys), separators=(",", ":")))
        return
    if verbose:
        print(f"standalone: {turn.standalone_question}")
        print(f"retrieved: {', '.join(_retrieved_keys(turn, keys)) or '(nothing)'}")
    print(turn.answer)
    for line in _citation_footer(turn):
        print(line)


def _cmd_ingest(engine: Engine, args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise NotFound(f"no such file: {path}")
    doc = engine.ingest(path.read_text(encoding="utf-8"), args.key, args.title)
    if args.json:
        print(json.dumps({"doc_id": doc.doc_id}, separators=(",", ":")))
    else:
        print(doc.doc_id)
    return 0


def _cmd_distill(engine: Engine, args: argparse.Namespace) -> int:
    _require_backend(engine.config)
    distilled, report = engine.distill(args.doc_id, args.ratio)
    if args.json:
        print(json.dumps(report.to_dict(), separators=(",", ":")))
        return 0
    verdict = "accepted" if report.accepted else "rejected"
    print(f"{verdict}: {distilled.doc_id}")
    print(
        f"ratio {report.overall_ratio:.3f}, structure "
        f"{'preserved' if report.structure_preserved else 'broken'}"
    )
    return 0


def _cmd_index(engine: Engine, args: argparse.Namespace) -> int:
    _require_backend(engine.config)
    count = engine.rebuild_index()
    if args.json:
        print(json.dumps({"chunks_indexed": count}, separators=(",", ":")))
    else:
        print(f"indexed {count} chunks")
    return 0


def _cmd_ask(engine: Engine, args: argparse.Namespace) -> int:
    _require_backend(engine.config)
    if args.k is not None:
        engine.config.k_retrieve = args.k
    session = engine.create_session()
    turn = engine.post_message(session.session_id, args.question)
    _print_turn(turn, engine, args.json, verbose=False)
    return 0


def _cmd_chat(engine: Engine, args: argparse.Namespace) -> int:
    _require_backend(engine.config)
    session = engine.create_session()
    if not args.json:
        print("chat session started; blank line or 'exit' ends it")
    while True:
        try:
            query = input("you> ")
        except EOFError:
            print()
            return 0
        query = query.strip()
        if not query or query in ("exit", "quit"):
            return 0
        try:
            turn = engine.post_message(session.session_id, query)
        except PaperChatError as exc:
            # Keep the session alive; one failed turn appends nothing.
            print(_error_line(exc), file=sys.stderr)
            continue
        _print_turn(turn, engine, args.json, verbose=True)
    return 0


def _cmd_serve(engine: Engine, args: argparse.Namespace) -> int:
    _require_backend(engine.config)
    run_server(engine, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "distill": _cmd_distill,
    "index": _cmd_index,
    "ask": _cmd_ask,
    "chat": _cmd_chat,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        engine = Engine(_load_config(args))
        return _COMMANDS[args.command](engine, args)
    except PaperChatError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
