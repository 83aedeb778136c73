"""Stateless HTTP facade over the scoring engine.

Exposes exactly what the interactive UI needs: scoring, the critical-value
tables and coefficient fitting. No persistence; configurations live in
client-side JSON files. Responses are byte-identical in value to the CLI on
the same configuration because both call the same engine.
"""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__, scoring
from .errors import ConfigError, ScoringError, UnsupportedCharacteristicError

log = logging.getLogger("amprint.service")


class FitRequest(BaseModel):
    w: float
    direction: str = "decreasing"


def create_app() -> FastAPI:
    app = FastAPI(title="amprint scoring service", version=__version__)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        log.info(json.dumps({
            "method": request.method,
            "path": request.url.path,
            "status": response.status_code,
            "ms": round(1000.0 * (time.perf_counter() - t0), 3),
        }))
        return response

    @app.post("/api/v1/score")
    async def score(request: Request):
        raw = await request.body()
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            return JSONResponse(
                status_code=400,
                content={"code": "malformed_json", "message": str(exc)},
            )
        try:
            config = scoring.config_from_dict(doc)
            report = scoring.overall_printability(config)
        except UnsupportedCharacteristicError as exc:
            return JSONResponse(
                status_code=422,
                content={"code": "unsupported_characteristic",
                         "kind": exc.kind, "technology": exc.technology,
                         "message": str(exc)},
            )
        except (ConfigError, ScoringError) as exc:
            return JSONResponse(
                status_code=422,
                content={"code": "invalid_config", "message": str(exc)},
            )
        return report.to_dict()

    @app.get("/api/v1/critical-values/{technology}")
    async def critical_values(technology: str):
        try:
            table = scoring.critical_value_table(technology)
        except ConfigError:
            return JSONResponse(
                status_code=404,
                content={"code": "unknown_technology",
                         "message": f"no critical-value table for {technology!r}"},
            )
        return {"technology": technology, "characteristics": table}

    @app.post("/api/v1/fit-c")
    async def fit_c(body: FitRequest):
        if body.w <= 0:
            return JSONResponse(
                status_code=422,
                content={"code": "invalid_w",
                         "message": f"w must be positive, got {body.w}"},
            )
        try:
            c = scoring.fit_coefficient(body.w, body.direction)
        except ScoringError as exc:
            return JSONResponse(
                status_code=422, content={"code": "fit_failed", "message": str(exc)}
            )
        return {"w": body.w, "direction": body.direction, "c": c}

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok", "version": __version__}

    ui_dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if ui_dist.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dist), html=True), name="ui")

    return app
