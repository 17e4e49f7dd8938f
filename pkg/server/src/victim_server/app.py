"""FastAPI application implementing the wire protocol.

Request bodies are parsed by hand so malformed input always produces the
protocol's error shape: a 4xx/5xx status with ``{"error": "..."}``. Batches
are split to the configured size internally and responses stay input-order
aligned.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .config import ServerConfig
from .models import (
    ClassifierBackend,
    ModelError,
    TranslatorBackend,
    UnsupportedLanguage,
    build_classifier,
    build_translator,
)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def _parse_texts(body: object) -> list[str] | JSONResponse:
    if not isinstance(body, dict):
        return _error(400, "request body must be a JSON object")
    texts = body.get("texts")
    if not isinstance(texts, list):
        return _error(400, "missing or non-list 'texts'")
    if not texts:
        return _error(400, "'texts' must be a non-empty list")
    if not all(isinstance(t, str) for t in texts):
        return _error(400, "every member of 'texts' must be a string")
    return texts


def create_app(config: ServerConfig) -> FastAPI:
    classifier: ClassifierBackend | None = (
        build_classifier(config.classifier, config.device) if config.classifier else None
    )
    translator: TranslatorBackend | None = (
        build_translator(config.translator, config.device) if config.translator else None
    )

    app = FastAPI(title="victim-server", docs_url=None, redoc_url=None)

    def unauthorized(request: Request) -> JSONResponse | None:
        if config.token is None:
            return None
        if request.headers.get("Authorization") != f"Bearer {config.token}":
            return _error(401, "missing or invalid bearer token")
        return None

    @app.get("/health")
    async def health(request: Request):
        denied = unauthorized(request)
        if denied is not None:
            return denied
        payload = {
            "status": "ok",
            "labels": len(classifier.labels) if classifier else 0,
            "max_batch_size": config.max_batch_size,
            "classifier": classifier.info() if classifier else None,
            "translator": translator.info() if translator else None,
        }
        return JSONResponse(payload)

    @app.post("/predict")
    async def predict(request: Request):
        denied = unauthorized(request)
        if denied is not None:
            return denied
        if classifier is None:
            return _error(400, "no classifier is configured on this server")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        texts = _parse_texts(body)
        if isinstance(texts, JSONResponse):
            return texts
        rows: list[list[float]] = []
        truncated: list[bool] = []
        try:
            for start in range(0, len(texts), config.max_batch_size):
                result = classifier.predict(texts[start : start + config.max_batch_size])
                rows.extend(result.rows)
                truncated.extend(result.truncated)
        except ModelError as exc:
            return _error(500, f"classifier failure: {exc}")
        return JSONResponse({"probs": rows, "truncated": truncated})

    @app.post("/translate")
    async def translate(request: Request):
        denied = unauthorized(request)
        if denied is not None:
            return denied
        if translator is None:
            return _error(400, "no translator is configured on this server")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        texts = _parse_texts(body)
        if isinstance(texts, JSONResponse):
            return texts
        src = body.get("src")
        tgt = body.get("tgt")
        if not isinstance(src, str) or not isinstance(tgt, str):
            return _error(400, "missing or non-string 'src'/'tgt'")
        if src == tgt:
            if not translator.supports(src):
                return _error(400, f"unsupported language code: {src}")
            # Same-language round legs are permitted but flagged.
            return JSONResponse({"texts": list(texts), "passthrough": True})
        out: list[str] = []
        try:
            for start in range(0, len(texts), config.max_batch_size):
                out.extend(translator.translate(texts[start : start + config.max_batch_size], src, tgt))
        except UnsupportedLanguage as exc:
            return _error(400, str(exc))
        except ModelError as exc:
            return _error(500, f"translator failure: {exc}")
        return JSONResponse({"texts": out})

    return app
