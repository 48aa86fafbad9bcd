"""HTTP gateway: analysis, scoring, and catalogue endpoints over JSON.

Endpoints:

    POST /v1/analyze     segment + similarity + highlights (+ score with model)
    POST /v1/score       score an essay with a registered model
    GET  /v1/models      manifests of every model in the model directory
    GET  /v1/essay-sets  built-in essay-set metadata
    GET  /healthz        liveness

Every error body is JSON with a machine-readable "error" code and a human
"detail". Models load once at startup and are never mutated; requests over
1 MiB are rejected with 413 before any work happens.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import gateway
from .embeddings import DimensionMismatch, ProviderUnavailable
from .insight import DEFAULT_TAU

MAX_BODY_BYTES = 1 << 20


@dataclass
class ServiceConfig:
    models_dir: str = "./models"
    tau: float = DEFAULT_TAU
    default_provider: str = gateway.DEFAULTS["provider"]
    static_dir: str | None = None


class AnalyzeRequest(BaseModel):
    passage: str
    essay: str
    prompt: str | None = None
    model_id: str | None = None
    provider: str | None = None
    tau: float | None = None


class ScoreRequest(BaseModel):
    model_id: str
    essay: str
    provider: str | None = None


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": code, "detail": detail})


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    registry = gateway.ModelRegistry(config.models_dir)
    app = FastAPI(title="essaylens", docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def cap_body_size(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > MAX_BODY_BYTES:
            return _error(413, "payload_too_large",
                          f"request bodies are capped at {MAX_BODY_BYTES} bytes")
        return await call_next(request)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", str(exc.errors()[:3]))

    @app.exception_handler(gateway.ModelNotFound)
    async def on_model_not_found(request: Request, exc: gateway.ModelNotFound):
        return _error(404, "model_not_found", str(exc))

    @app.exception_handler(DimensionMismatch)
    async def on_dimension_mismatch(request: Request, exc: DimensionMismatch):
        return _error(422, "dimension_mismatch", str(exc))

    @app.exception_handler(ProviderUnavailable)
    async def on_provider_unavailable(request: Request, exc: ProviderUnavailable):
        return _error(422, "provider_unavailable", str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "models": len(registry.ids())}

    @app.get("/v1/models")
    async def list_models():
        return {"models": registry.manifests()}

    @app.get("/v1/essay-sets")
    async def essay_sets():
        return {"essay_sets": gateway.essay_sets_payload()}

    @app.post("/v1/analyze")
    async def analyze(body: AnalyzeRequest):
        if not body.passage.strip() or not body.essay.strip():
            return _error(400, "empty_text",
                          "passage and essay must be non-empty")
        tau = body.tau if body.tau is not None else config.tau
        if not 0.0 <= tau < 1.0:
            return _error(400, "bad_request", "tau must be in [0, 1)")
        model = registry.get(body.model_id) if body.model_id else None
        return gateway.analyze_payload(
            body.passage, body.essay, prompt_text=body.prompt, model=model,
            provider_id=body.provider, tau=tau,
            default_provider_id=config.default_provider)

    @app.post("/v1/score")
    async def score(body: ScoreRequest):
        if not body.essay.strip():
            return _error(400, "empty_text", "essay must be non-empty")
        model = registry.get(body.model_id)
        return gateway.score_payload(model, body.essay,
                                     provider_id=body.provider,
                                     default_provider_id=config.default_provider)

    static_dir = config.static_dir
    if static_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        static_dir = str(bundled) if bundled.is_dir() else None
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="ui")

    return app
