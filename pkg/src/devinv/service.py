"""Read-only HTTP service over the pipeline.

Endpoints mirror the CLI subcommands; with ?format=csv the payload is
byte-identical to the CLI's --format csv output. The corpus and index are
loaded once at startup and never mutated. Errors: 400 bad request, 404
unknown id, 502 upstream provider failure.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel

from . import formats
from .config import AppConfig
from .corpus import ingest_corpus
from .errors import DevinvError, GatewayError, UnknownRecordId
from .evaluation import aggregate_report, render_report, score_field
from .extraction import (
    DEFAULT_BATCH_ID_PATTERN,
    TASK_ORDER,
    ExtractionTask,
    TemplateSet,
    extract,
    run_extraction,
)
from .index import RetrievalQuery, build_index, load_index, search
from .rag import ContextBudget, answer_with_retrieval


class SearchBody(BaseModel):
    text: str
    top_k: int = 3
    phrase_filters: list[str] = []
    metadata_filters: dict[str, str] = {}
    min_similarity: float | None = None
    metric: str = "cosine"


class ExtractBody(BaseModel):
    record_id: str
    task: str


class AskBody(BaseModel):
    question: str
    top_k: int = 3
    phrase_filters: list[str] = []
    metadata_filters: dict[str, str] = {}
    min_similarity: float | None = None
    budget_chars: int = 8000


def create_app(config: AppConfig) -> FastAPI:
    if not config.corpus_path:
        raise DevinvError("service needs corpus_path in config")
    corpus = ingest_corpus(config.corpus_path)

    if config.index_path and Path(config.index_path).exists():
        index = load_index(config.index_path)
    else:
        if not config.default_embed:
            raise DevinvError("service needs index_path or default_embed in config")
        index = build_index(corpus, config.provider(config.default_embed))

    templates = TemplateSet.load(config.template_dir) if config.template_dir else None
    pattern = config.batch_id_pattern or DEFAULT_BATCH_ID_PATTERN
    state = {"report": None}

    app = FastAPI(title="devinv", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(UnknownRecordId)
    async def unknown_id(request: Request, exc: UnknownRecordId):
        return JSONResponse(status_code=404, content={"error": str(exc)})

    @app.exception_handler(GatewayError)
    async def upstream_failure(request: Request, exc: GatewayError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.exception_handler(DevinvError)
    async def domain_error(request: Request, exc: DevinvError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def require_templates() -> TemplateSet:
        if templates is None:
            raise DevinvError("service config has no template_dir")
        return templates

    def chat_provider():
        if not config.default_chat:
            raise DevinvError("service config has no default_chat provider")
        return config.provider(config.default_chat)

    def embed_provider():
        if not config.default_embed:
            raise DevinvError("service config has no default_embed provider")
        return config.provider(config.default_embed)

    @app.get("/records/{record_id}")
    def get_record(record_id: str):
        record = corpus.get(record_id)
        if record is None:
            raise UnknownRecordId(record_id)
        return formats.record_to_dict(record)

    @app.post("/search")
    def post_search(body: SearchBody, format: str = "json"):
        query = RetrievalQuery(
            text=body.text,
            top_k=body.top_k,
            phrase_filters=tuple(body.phrase_filters),
            metadata_filters=tuple(body.metadata_filters.items()),
            min_similarity=body.min_similarity,
            metric=body.metric,
        )
        hits = search(index, corpus, query, embed_provider())
        if format == "csv":
            return PlainTextResponse(formats.hits_to_csv(hits), media_type="text/csv")
        return {"hits": [formats.hit_to_dict(h) for h in hits]}

    @app.post("/extract")
    def post_extract(body: ExtractBody, format: str = "json"):
        record = corpus.get(body.record_id)
        if record is None:
            raise UnknownRecordId(body.record_id)
        try:
            task = ExtractionTask(body.task)
        except ValueError:
            raise DevinvError(f"unknown task {body.task!r}")
        result = extract(record, task, chat_provider(), require_templates(), pattern)
        if format == "csv":
            return PlainTextResponse(
                formats.extraction_to_csv([result]), media_type="text/csv"
            )
        return formats.extraction_to_dict(result)

    @app.post("/ask")
    def post_ask(body: AskBody, format: str = "json"):
        query = RetrievalQuery(
            text=body.question,
            top_k=body.top_k,
            phrase_filters=tuple(body.phrase_filters),
            metadata_filters=tuple(body.metadata_filters.items()),
            min_similarity=body.min_similarity,
        )
        answer = answer_with_retrieval(
            question=body.question,
            index=index,
            corpus=corpus,
            chat_provider=chat_provider(),
            embed_provider=embed_provider(),
            query_opts=query,
            budget=ContextBudget(max_chars=body.budget_chars),
            rag_intro=require_templates().rag_intro or "",
        )
        if format == "csv":
            return PlainTextResponse(formats.answer_to_csv(answer), media_type="text/csv")
        return formats.answer_to_dict(answer)

    @app.get("/report")
    def get_report(format: str = "json"):
        if state["report"] is None:
            run = run_extraction(
                corpus, TASK_ORDER, chat_provider(), require_templates(), pattern
            )
            truths = {record.id: record.metadata for record in corpus}
            scored = [
                score_field(r.task, r, truths[r.record_id]) for r in run.results
            ]
            state["report"] = aggregate_report(scored, corpus_size=len(corpus))
        report = state["report"]
        if format == "csv":
            return PlainTextResponse(
                render_report(report, fmt="csv"), media_type="text/csv"
            )
        return {
            "corpus_size": report.corpus_size,
            "counts": [
                {
                    "provider": provider,
                    "task": task.value,
                    "accurate": tally.accurate,
                    "acceptable": tally.acceptable,
                    "inaccurate": tally.inaccurate,
                }
                for (provider, task), tally in sorted(
                    report.counts.items(),
                    key=lambda item: (item[0][0], TASK_ORDER.index(item[0][1])),
                )
            ],
        }

    return app
