"""Command-line interface: ingest, embed, matrix, search, extract, evaluate,
ask, serve.

Machine output (--format csv) comes from the same renderers the service
uses, so the two surfaces stay byte-identical. Exit codes: 0 success, 1
domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from . import formats
from .config import AppConfig, find_config
from .corpus import Corpus, ingest_corpus, validate_corpus, write_corpus
from .errors import DevinvError
from .evaluation import (
    aggregate_report,
    load_overrides,
    render_report,
    score_field,
)
from .extraction import (
    DEFAULT_BATCH_ID_PATTERN,
    TASK_ORDER,
    ExtractionTask,
    TemplateSet,
    extract,
    run_extraction,
)
from .index import (
    Index,
    RetrievalQuery,
    build_index,
    load_index,
    pairwise_matrix,
    save_index,
    search,
)
from .rag import ContextBudget, answer_with_retrieval, append_audit_entry


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="devinv",
        description="Deviation-investigation toolkit: extraction, similarity "
        "search, and retrieval-augmented answering.",
    )
    parser.add_argument("--config", help="config file (or set DEVINV_CONFIG)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_corpus(p):
        p.add_argument("--corpus", help="line-delimited corpus file")

    def common_embed(p):
        p.add_argument("--embed", help="embedding provider name (e.g. hash64)")
        p.add_argument("--index", help="previously saved index file")

    p = sub.add_parser("ingest", help="load and validate a corpus file")
    common_corpus(p)
    p.add_argument("--write", metavar="PATH", help="re-serialize the corpus to PATH")

    p = sub.add_parser("embed", help="build an index and save it")
    common_corpus(p)
    p.add_argument("--embed", help="embedding provider name")
    p.add_argument("--out", required=True, help="index file to write")

    p = sub.add_parser("matrix", help="pairwise similarity matrix")
    common_corpus(p)
    common_embed(p)
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("search", help="hybrid top-k retrieval")
    common_corpus(p)
    common_embed(p)
    p.add_argument("--query", required=True)
    p.add_argument("--phrase", action="append", default=[],
                   help="phrase that must appear in the record text (repeatable)")
    p.add_argument("--filter", action="append", default=[], metavar="FIELD=VALUE",
                   help="metadata equality filter (repeatable)")
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--min-similarity", type=float)
    p.add_argument("--metric", choices=("cosine", "l2"), default="cosine")
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("extract", help="run extraction tasks via a chat provider")
    common_corpus(p)
    p.add_argument("--provider", help="chat provider name (default from config)")
    p.add_argument("--record", help="single record id (omit with --all)")
    p.add_argument("--task", choices=[t.value for t in TASK_ORDER],
                   help="single task (omit with --all)")
    p.add_argument("--all", action="store_true", help="all records x all tasks")
    p.add_argument("--templates", help="template directory")
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("evaluate", help="extract, grade, and report per-task counts")
    common_corpus(p)
    p.add_argument("--provider", help="chat provider name (default from config)")
    p.add_argument("--templates", help="template directory")
    p.add_argument("--overrides", help="human override table (tsv)")
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("ask", help="answer a question with retrieval-augmented context")
    common_corpus(p)
    common_embed(p)
    p.add_argument("--question", required=True)
    p.add_argument("--chat", help="chat provider name (default from config)")
    p.add_argument("--phrase", action="append", default=[])
    p.add_argument("--filter", action="append", default=[], metavar="FIELD=VALUE")
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--min-similarity", type=float)
    p.add_argument("--budget-chars", type=int, default=8000)
    p.add_argument("--templates", help="template directory")
    p.add_argument("--audit-log", help="append an audit entry to this file")
    p.add_argument("--format", choices=("text", "csv"), default="text")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", help="host:port (default from config)")

    return parser


def _corpus_from(args, config: AppConfig) -> Corpus:
    path = getattr(args, "corpus", None) or config.corpus_path
    if not path:
        raise DevinvError("no corpus file given (use --corpus or config corpus_path)")
    return ingest_corpus(path)


def _embed_provider(args, config: AppConfig):
    name = getattr(args, "embed", None) or config.default_embed
    if not name:
        raise DevinvError("no embed provider (use --embed or config default_embed)")
    try:
        return config.provider(name)
    except KeyError as exc:
        raise DevinvError(str(exc))


def _chat_provider(args, config: AppConfig, flag: str = "provider"):
    name = getattr(args, flag, None) or config.default_chat
    if not name:
        raise DevinvError(f"no chat provider (use --{flag} or config default_chat)")
    try:
        return config.provider(name)
    except KeyError as exc:
        raise DevinvError(str(exc))


def _templates_from(args, config: AppConfig) -> TemplateSet:
    path = getattr(args, "templates", None) or config.template_dir
    if not path:
        raise DevinvError("no template directory (use --templates or config template_dir)")
    return TemplateSet.load(path)


def _index_from(args, config: AppConfig, corpus: Corpus) -> Index:
    explicit = getattr(args, "index", None)
    if explicit:
        return load_index(explicit)
    if getattr(args, "embed", None) is None and config.index_path:
        try:
            return load_index(config.index_path)
        except FileNotFoundError:
            pass
    return build_index(corpus, _embed_provider(args, config))


def _parse_filters(pairs: list[str]) -> tuple[tuple[str, str], ...]:
    filters = []
    for pair in pairs:
        if "=" not in pair:
            raise DevinvError(f"bad --filter {pair!r}, expected FIELD=VALUE")
        fieldname, value = pair.split("=", 1)
        filters.append((fieldname, value))
    return tuple(filters)


def _query_from(args) -> RetrievalQuery:
    try:
        return RetrievalQuery(
            text=getattr(args, "query", None) or args.question,
            top_k=args.top_k,
            phrase_filters=tuple(args.phrase),
            metadata_filters=_parse_filters(args.filter),
            min_similarity=args.min_similarity,
            metric=getattr(args, "metric", "cosine"),
        )
    except ValueError as exc:
        raise DevinvError(str(exc))


def _cmd_ingest(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    problems = validate_corpus(corpus)
    lines = [f"loaded {len(corpus)} records from {corpus.source_path}"]
    for record_id, violations in problems.items():
        for violation in violations:
            lines.append(f"invalid {record_id}: {violation}")
    if args.write:
        write_corpus(corpus, args.write)
        lines.append(f"wrote canonical corpus to {args.write}")
    return "\n".join(lines) + "\n"


def _cmd_embed(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    provider = _embed_provider(args, config)
    index = build_index(corpus, provider)
    save_index(index, args.out)
    return (
        f"indexed {len(index)} records "
        f"(dimension {index.dimension}, provider {index.provider_id}) -> {args.out}\n"
    )


def _cmd_matrix(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    index = _index_from(args, config, corpus)
    matrix = pairwise_matrix(index)
    if args.format == "csv":
        return formats.matrix_to_csv(matrix)
    return formats.matrix_to_text(matrix)


def _cmd_search(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    index = _index_from(args, config, corpus)
    hits = search(index, corpus, _query_from(args), _embed_provider(args, config))
    if args.format == "csv":
        return formats.hits_to_csv(hits)
    return formats.hits_to_text(hits)


def _cmd_extract(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    provider = _chat_provider(args, config)
    templates = _templates_from(args, config)
    pattern = config.batch_id_pattern or DEFAULT_BATCH_ID_PATTERN

    if args.all:
        run = run_extraction(corpus, TASK_ORDER, provider, templates, pattern)
        results = list(run.results)
        trailer = "".join(
            f"failed {f.record_id}/{f.task.value}: {f.error}\n" for f in run.failures
        )
    else:
        if not args.record or not args.task:
            raise DevinvError("need --record and --task, or --all")
        record = corpus.get(args.record)
        if record is None:
            raise DevinvError(f"unknown record id: {args.record}")
        results = [
            extract(record, ExtractionTask(args.task), provider, templates, pattern)
        ]
        trailer = ""
    if args.format == "csv":
        return formats.extraction_to_csv(results)
    return formats.extraction_to_text(results) + trailer


def _cmd_evaluate(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    provider = _chat_provider(args, config)
    templates = _templates_from(args, config)
    pattern = config.batch_id_pattern or DEFAULT_BATCH_ID_PATTERN
    overrides = load_overrides(args.overrides) if args.overrides else None

    run = run_extraction(corpus, TASK_ORDER, provider, templates, pattern)
    truths = {record.id: record.metadata for record in corpus}
    scored = [
        score_field(result.task, result, truths[result.record_id], overrides)
        for result in run.results
    ]
    report = aggregate_report(scored, corpus_size=len(corpus))
    return render_report(report, fmt=args.format)


def _cmd_ask(args, config: AppConfig) -> str:
    corpus = _corpus_from(args, config)
    index = _index_from(args, config, corpus)
    templates = _templates_from(args, config)
    answer = answer_with_retrieval(
        question=args.question,
        index=index,
        corpus=corpus,
        chat_provider=_chat_provider(args, config, flag="chat"),
        embed_provider=_embed_provider(args, config),
        query_opts=_query_from(args),
        budget=ContextBudget(max_chars=args.budget_chars),
        rag_intro=templates.rag_intro or "",
    )
    audit_path = args.audit_log or config.audit_log_path
    if audit_path:
        answer_provider = _chat_provider(args, config, flag="chat").provider_id
        append_audit_entry(audit_path, answer, answer_provider)
    if args.format == "csv":
        return formats.answer_to_csv(answer)
    return formats.answer_to_text(answer)


def _cmd_serve(args, config: AppConfig) -> str:
    import uvicorn

    from .service import create_app

    bind = args.bind or config.service_bind_address
    host, _, port = bind.rpartition(":")
    app = create_app(config)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return ""


_COMMANDS = {
    "ingest": _cmd_ingest,
    "embed": _cmd_embed,
    "matrix": _cmd_matrix,
    "search": _cmd_search,
    "extract": _cmd_extract,
    "evaluate": _cmd_evaluate,
    "ask": _cmd_ask,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = find_config(args.config)
        output = _COMMANDS[args.command](args, config)
    except (DevinvError, OSError, ValueError) as exc:
        print(f"devinv {args.command}: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
