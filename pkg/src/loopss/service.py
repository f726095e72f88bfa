"""FastAPI service exposing the engine over HTTP.

Endpoints mirror the CLI: POST /run computes a report for a scenario
document, POST /audit checks a scenario against its target, POST /render
formats a previously computed report.  Input problems come back as 422
with a ``kind`` of ``scenario`` or ``consistency`` so thin clients can
map them to exit codes.
"""

from __future__ import annotations

import json
from typing import Literal, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from . import __version__
from .errors import ConsistencyError, ScenarioError
from .report import (
    AuditOutcome,
    RunReport,
    audit_outcome,
    build_report,
    render_page,
)
from .scenarios import parse_scenario, run_bundle

app = FastAPI(
    title="loopss",
    description="Exact-arithmetic Serre spectral sequence engine",
    version=__version__,
)


class RunRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: dict
    max_page: Optional[int] = None


class AuditRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: dict


class RenderRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    report: RunReport
    page: Optional[int] = None
    format: Literal["ascii", "latex", "json"] = "ascii"


class RenderResponse(BaseModel):
    text: str


class HealthResponse(BaseModel):
    status: str
    version: str


def _fail(kind: str, exc: Exception):
    raise HTTPException(status_code=422, detail={"kind": kind, "message": str(exc)})


def _parse(document: dict):
    try:
        return parse_scenario(json.dumps(document))
    except ScenarioError as exc:
        _fail("scenario", exc)


@app.post("/run", response_model=RunReport)
def run_endpoint(request: RunRequest) -> RunReport:
    bundle = _parse(request.scenario)
    try:
        result = run_bundle(bundle, max_page=request.max_page)
    except ScenarioError as exc:
        _fail("scenario", exc)
    except ConsistencyError as exc:
        _fail("consistency", exc)
    return build_report(result)


@app.post("/audit", response_model=AuditOutcome)
def audit_endpoint(request: AuditRequest) -> AuditOutcome:
    bundle = _parse(request.scenario)
    try:
        result = run_bundle(bundle)
        return audit_outcome(result)
    except ScenarioError as exc:
        _fail("scenario", exc)
    except ConsistencyError as exc:
        _fail("consistency", exc)


@app.post("/render", response_model=RenderResponse)
def render_endpoint(request: RenderRequest) -> RenderResponse:
    try:
        return RenderResponse(text=render_page(request.report, request.page, request.format))
    except ScenarioError as exc:
        _fail("scenario", exc)


@app.get("/health", response_model=HealthResponse)
def health_endpoint() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)
