"""FastAPI app exposing /score, /fill_mask and /healthz.

Character spans (not token indices) cross the wire, so the server is free to
use any internal tokenization.  Malformed requests are 400; requests made
before a model is loaded are 503.
"""
from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import Backend


class ScoreRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class FillMaskRequest(BaseModel):
    text: str = Field(min_length=1)
    char_start: int = Field(ge=0)
    char_end: int = Field(ge=1)
    k: int = Field(ge=1)
    keep_original: bool = True


def create_app(backend: Optional[Backend]) -> FastAPI:
    app = FastAPI(title="model-server")
    app.state.backend = backend

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:3])})

    def require_backend():
        if app.state.backend is None:
            return JSONResponse(status_code=503, content={"error": "model not loaded"})
        return None

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/score")
    async def score(req: ScoreRequest):
        unavailable = require_backend()
        if unavailable is not None:
            return unavailable
        return {"probabilities": app.state.backend.score_texts(req.texts)}

    @app.post("/fill_mask")
    async def fill_mask(req: FillMaskRequest):
        unavailable = require_backend()
        if unavailable is not None:
            return unavailable
        if not (0 <= req.char_start < req.char_end <= len(req.text)):
            return JSONResponse(
                status_code=400,
                content={"error": "char span out of range"},
            )
        candidates = app.state.backend.fill_mask(
            req.text, req.char_start, req.char_end, req.k, req.keep_original
        )
        return {"candidates": [{"piece": p, "score": s} for p, s in candidates]}

    return app
