"""JSON-over-HTTP service exposing the workspace engine under /v1.

Every non-2xx response body is a structured error with a machine code and
a correlation id; tree documents are returned as their exact persisted
bytes so exports are byte-stable.
"""
from __future__ import annotations

import json
import logging
import os
import uuid
from pathlib import Path
from typing import Any

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from .errors import FeatreeError
from .workspace import Workspace

logger = logging.getLogger(__name__)

API_VERSION = "0.1.0"
ENV_API_TOKEN = "FEATREE_API_TOKEN"
ENV_UI_DIR = "FEATREE_UI_DIR"

_STATUS_BY_CODE = {
    "not_found": 404,
    "validation": 422,
    "conflict": 409,
    "provider_failure": 502,
    "empty_retrieval": 422,
}


def _api_error(code: str, message: str, status: int, correlation_id: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={
            "code": code,
            "message": message,
            "correlation_id": correlation_id,
        },
    )


class TreeCreate(BaseModel):
    name: str
    description: str = ""
    source: str = "llm"
    k: int | None = None
    n: int | None = None


class NodePatch(BaseModel):
    name: str | None = None
    description: str | None = None
    if_version: int | None = None


class InspireBody(BaseModel):
    feedback: str | None = None
    mode: str = "replace"
    n: int | None = None
    if_version: int | None = None


class IngestBody(BaseModel):
    records: list[dict]


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="featree", version=API_VERSION)

    @app.middleware("http")
    async def request_context(request: Request, call_next):
        correlation_id = uuid.uuid4().hex[:12]
        request.state.correlation_id = correlation_id
        token = os.environ.get(ENV_API_TOKEN, "")
        if token and request.url.path.startswith("/v1"):
            supplied = request.headers.get("authorization", "")
            if supplied != f"Bearer {token}":
                return _api_error(
                    "validation", "missing or invalid API token", 401, correlation_id
                )
        response = await call_next(request)
        logger.info(
            json.dumps(
                {
                    "correlation_id": correlation_id,
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                }
            )
        )
        return response

    @app.exception_handler(FeatreeError)
    async def featree_error_handler(request: Request, exc: FeatreeError):
        status = _STATUS_BY_CODE.get(exc.code, 422)
        return _api_error(
            exc.code, str(exc), status, getattr(request.state, "correlation_id", "-")
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _api_error(
            "validation",
            str(exc.errors()),
            422,
            getattr(request.state, "correlation_id", "-"),
        )

    @app.exception_handler(StarletteHTTPException)
    async def http_exception_handler(request: Request, exc: StarletteHTTPException):
        code = "not_found" if exc.status_code == 404 else "validation"
        return _api_error(
            code,
            str(exc.detail),
            exc.status_code,
            getattr(request.state, "correlation_id", "-"),
        )

    @app.exception_handler(Exception)
    async def unexpected_handler(request: Request, exc: Exception):
        logger.exception("unhandled error")
        return _api_error(
            "provider_failure",
            f"internal error: {exc}",
            500,
            getattr(request.state, "correlation_id", "-"),
        )

    @app.get("/health")
    async def health():
        return {"status": "ok", "version": API_VERSION}

    # -- corpus -----------------------------------------------------------

    @app.post("/v1/corpus")
    async def ingest(body: IngestBody):
        lines = (json.dumps(r, ensure_ascii=False) for r in body.records)
        report = workspace.ingest_corpus(lines)
        return report.to_json_dict()

    @app.get("/v1/corpus")
    async def corpus_stats():
        return workspace.corpus_stats()

    # -- index ------------------------------------------------------------

    @app.post("/v1/index")
    async def build_index():
        return workspace.build_index()

    @app.get("/v1/index")
    async def query_index(q: str = Query(...), k: int | None = Query(None)):
        return {"hits": workspace.query_index(q, k)}

    # -- trees --------------------------------------------------------------

    @app.post("/v1/trees", status_code=201)
    async def create_tree(body: TreeCreate):
        doc = workspace.create_tree(
            body.name, body.description, body.source, body.k, body.n
        )
        return doc

    @app.get("/v1/trees")
    async def list_trees():
        return {"trees": workspace.list_trees()}

    @app.get("/v1/trees/{tree_id}")
    async def get_tree(tree_id: str):
        return Response(
            content=workspace.get_tree_bytes(tree_id),
            media_type="application/json",
        )

    @app.post("/v1/trees/{tree_id}/generate")
    async def generate(tree_id: str, source: str = Query(...)):
        return workspace.generate(tree_id, source)

    @app.patch("/v1/trees/{tree_id}/nodes/{node_id}")
    async def edit_node(tree_id: str, node_id: str, body: NodePatch):
        return workspace.edit_node(
            tree_id, node_id, body.name, body.description, body.if_version
        )

    @app.delete("/v1/trees/{tree_id}/nodes/{node_id}")
    async def delete_node(
        tree_id: str, node_id: str, if_version: int | None = Query(None)
    ):
        return workspace.delete_node(tree_id, node_id, if_version)

    @app.post("/v1/trees/{tree_id}/nodes/{node_id}/inspire")
    async def inspire(
        tree_id: str,
        node_id: str,
        source: str = Query(...),
        body: InspireBody | None = None,
    ):
        body = body or InspireBody()
        return workspace.inspire(
            tree_id,
            node_id,
            source,
            feedback=body.feedback,
            mode=body.mode,
            n=body.n,
            expected_version=body.if_version,
        )

    # -- assessments ---------------------------------------------------------

    @app.post("/v1/assessments", status_code=201)
    async def record_assessment(payload: dict[str, Any] = Body(...)):
        tree_id = payload.pop("tree_id", None)
        if not tree_id:
            raise FeatreeError("assessment payload needs a tree_id")
        return workspace.record_assessment(tree_id, payload)

    @app.get("/v1/assessments/report")
    async def report(trees: str = Query(...), tables: str = Query("3,4,5")):
        tree_ids = [t for t in trees.split(",") if t]
        table_ids = [int(t) for t in tables.split(",") if t]
        return workspace.report(tree_ids, table_ids)

    @app.get("/v1/assessments/venn")
    async def venn(tree_a: str = Query(...), tree_b: str = Query(...)):
        return workspace.venn(tree_a, tree_b)

    # -- traceability ---------------------------------------------------------

    @app.get("/v1/apps/{app_id}")
    async def get_app(app_id: str):
        return workspace.get_app(app_id).to_json_dict()

    # optional same-origin hosting of the browser UI (avoids CORS setup)
    ui_dir = os.environ.get(ENV_UI_DIR, "")
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(workspace: Workspace, host: str = "127.0.0.1", port: int = 8760) -> None:
    """Run the service until interrupted; raises if the port is taken."""
    import uvicorn

    uvicorn.run(create_app(workspace), host=host, port=port, log_level="info")
