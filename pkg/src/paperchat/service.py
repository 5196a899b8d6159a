"""HTTP facade over the engine.

Handlers parse JSON, delegate to the engine, and serialize results; every
domain error maps to exactly one (status, code) pair via ERROR_TABLE. Error
bodies are flat: {"code", "message", "stage"?}.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .chat import turn_to_dict
from .engine import Engine
from .errors import (
    BackendError,
    BadConfig,
    BudgetExceeded,
    ContextOverflow,
    CorruptIndex,
    DegenerateOriginal,
    DimensionMismatch,
    DuplicateChunkId,
    DuplicateDocument,
    EmptyIndex,
    EmptyInput,
    EmptyReply,
    MalformedCitationKey,
    NotFound,
    PaperChatError,
    StageFailure,
    TurnInProgress,
    ZeroVector,
)

# Closed code set; the contract test walks this table.
ERROR_TABLE: dict[type, tuple[int, str]] = {
    BadConfig: (400, "bad_config"),
    EmptyInput: (400, "empty_input"),
    MalformedCitationKey: (400, "malformed_citation_key"),
    DegenerateOriginal: (400, "empty_input"),
    BudgetExceeded: (400, "budget_exceeded"),
    ContextOverflow: (400, "context_overflow"),
    NotFound: (404, "not_found"),
    DuplicateDocument: (409, "duplicate_document"),
    EmptyIndex: (409, "empty_corpus"),
    TurnInProgress: (409, "turn_in_progress"),
    CorruptIndex: (500, "corrupt_index"),
    DuplicateChunkId: (500, "internal_error"),
    DimensionMismatch: (502, "backend_error"),
    ZeroVector: (502, "backend_error"),
    EmptyReply: (502, "backend_error"),
    BackendError: (502, "backend_error"),
}


class RequestShapeError(Exception):
    """Body is missing, unparseable, or a field has the wrong type."""


def map_error(exc: PaperChatError) -> tuple[int, str, str | None]:
    stage = None
    if isinstance(exc, StageFailure):
        stage = exc.stage
        exc = exc.cause
    for cls, (status, code) in ERROR_TABLE.items():
        if type(exc) is cls:
            return status, code, stage
    for cls, (status, code) in ERROR_TABLE.items():
        if isinstance(exc, cls):
            return status, code, stage
    return 500, "internal_error", stage


def _error_response(status: int, code: str, message: str, stage: str | None = None):
    body: dict = {"code": code, "message": message}
    if stage is not None:
        body["stage"] = stage
    return JSONResponse(body, status_code=status)


async def _read_json(request: Request) -> dict:
    raw = await request.body()
    if not raw:
        return {}
    try:
        payload = json.loads(raw)
    except ValueError:
        raise RequestShapeError("request body is not valid JSON") from None
    if not isinstance(payload, dict):
        raise RequestShapeError("request body must be a JSON object")
    return payload


def _str_field(payload: dict, name: str) -> str:
    value = payload.get(name, "")
    if not isinstance(value, str):
        raise RequestShapeError(f"field {name!r} must be a string")
    return value


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="paperchat", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.engine = engine

    @app.exception_handler(PaperChatError)
    async def _domain_error(request: Request, exc: PaperChatError):
        status, code, stage = map_error(exc)
        cause = exc.cause if isinstance(exc, StageFailure) else exc
        return _error_response(status, code, str(cause), stage)

    @app.exception_handler(RequestShapeError)
    async def _shape_error(request: Request, exc: RequestShapeError):
        return _error_response(400, "bad_request", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "mock_mode": engine.config.mock_mode}

    @app.post("/documents")
    async def add_document(request: Request):
        payload = await _read_json(request)
        doc = await run_in_threadpool(
            engine.ingest,
            _str_field(payload, "text"),
            _str_field(payload, "citation_key"),
            _str_field(payload, "title"),
        )
        return {"doc_id": doc.doc_id}

    @app.get("/documents")
    async def list_documents():
        return [
            {
                "doc_id": doc.doc_id,
                "citation_key": doc.citation_key,
                "title": doc.title,
                "source_kind": doc.source_kind,
            }
            for doc in engine.documents()
        ]

    @app.post("/documents/{doc_id}/distill")
    async def distill_document(doc_id: str, request: Request):
        payload = await _read_json(request)
        ratio = payload.get("target_ratio")
        if ratio is not None and not isinstance(ratio, (int, float)):
            raise RequestShapeError("field 'target_ratio' must be a number")
        try:
            _, report = await run_in_threadpool(engine.distill, doc_id, ratio)
        except ValueError as exc:
            raise RequestShapeError(str(exc)) from None
        return report.to_dict()

    @app.post("/index/rebuild")
    async def rebuild_index():
        return {"chunks_indexed": await run_in_threadpool(engine.rebuild_index)}

    @app.post("/sessions")
    async def create_session(request: Request):
        await _read_json(request)
        session = engine.create_session()
        return {"session_id": session.session_id}

    @app.post("/sessions/{session_id}/messages")
    async def post_message(session_id: str, request: Request):
        payload = await _read_json(request)
        query = _str_field(payload, "query")
        if not query.strip():
            raise EmptyInput("query must not be empty")
        turn = await run_in_threadpool(engine.post_message, session_id, query)
        return turn_to_dict(turn, engine.citation_key_by_doc())

    @app.get("/sessions/{session_id}")
    async def get_transcript(session_id: str):
        session = engine.get_session(session_id)
        keys = engine.citation_key_by_doc()
        return {
            "session_id": session.session_id,
            "turns": [turn_to_dict(turn, keys) for turn in session.turns],
        }

    return app


def run_server(engine: Engine, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(engine), host=host, port=port, log_level="warning")
