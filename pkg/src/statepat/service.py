"""Session-oriented HTTP/JSON facade over the engine, patterns, and verifier.

Sessions are in-memory only; nothing survives a restart.  The snapshot JSON
schema is versioned (`"v": 1`) and shared with the browser UI, which renders
snapshots verbatim.  Requests to the same session are serialized by a
per-session lock; distinct sessions proceed in parallel.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import replace
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import engine, text, verifier
from .model import Model, validate_model
from .patterns import PatternError, apply_pattern
from .text import ParseError

SNAPSHOT_VERSION = 1
HISTORY_BOUND = 500


class SessionRequest(BaseModel):
    model_text: str
    pattern: Optional[str] = None
    order: Optional[list[int]] = None


class EventRequest(BaseModel):
    event: str


class StepRequest(BaseModel):
    count: int = Field(default=1, ge=0, le=10_000)


class VerifyRequest(BaseModel):
    model_text: str
    pattern: Optional[str] = None
    order: Optional[list[int]] = None
    queries: list[str]
    env: str = "one-or-none"
    limit: Optional[int] = None


class SessionRecord:
    def __init__(self, session_id: str, model: Model):
        self.id = session_id
        self.model = model
        self.session = engine.Session(model, history_bound=HISTORY_BOUND)
        self.lock = threading.Lock()


def _prepare(model_text: str, pattern: Optional[str], order: Optional[list[int]]) -> Model:
    try:
        model = text.parse_model(model_text)
    except ParseError as exc:
        raise HTTPException(status_code=400, detail={"error": "parse", "diagnostics": [str(exc)]})
    diags = validate_model(model)
    if diags:
        raise HTTPException(status_code=400, detail={"error": "validate", "diagnostics": [str(d) for d in diags]})
    if order:
        model = replace(model, interface=replace(model.interface, exe_orders=tuple(order)))
    if pattern:
        try:
            model = apply_pattern(model, pattern)
        except PatternError as exc:
            raise HTTPException(status_code=400, detail={"error": "pattern", "diagnostics": [str(exc)]})
    diags = validate_model(model)
    if diags:
        raise HTTPException(status_code=400, detail={"error": "validate", "diagnostics": [str(d) for d in diags]})
    return model


def snapshot_json(cm: engine.CompiledModel, state: engine.RuntimeState, pending: set[str]) -> dict:
    body = cm.describe(state)
    body["v"] = SNAPSHOT_VERSION
    body["pending"] = sorted(pending)
    return body


def cycle_json(rec: engine.CycleRecord) -> dict:
    return {
        "kind": rec.kind,
        "fired": {chart: f"{src}->{dst}" for chart, src, dst in rec.fired},
        "raised": [[event, chart] for event, chart in rec.raised],
        "var_deltas": {name: [old, new] for name, old, new in rec.var_deltas},
    }


def model_json(model: Model, cm: engine.CompiledModel) -> dict:
    return {
        "name": model.name,
        "charts": [
            {"name": c.name, "states": list(c.states), "initial": c.initial, "manager": c.manager}
            for c in model.charts
        ],
        "in_events": list(model.interface.in_events),
        "internal_events": list(model.interface.internal_events),
        "vars": {v.name: {"min": v.lo, "max": v.hi, "initial": v.init} for v in model.interface.variables},
        "patterns": sorted(model.patterns),
        "order": [cm._chart_by_id(i) for i in cm.orders] if cm.orders else None,
    }


def create_app(default_model_text: Optional[str] = None, state_limit: int = verifier.DEFAULT_STATE_LIMIT,
               cors_origins: tuple[str, ...] = ("*",), ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="statepat sim-service", version="1")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    sessions: dict[str, SessionRecord] = {}
    counter = itertools.count(1)
    registry_lock = threading.Lock()

    def get_record(session_id: str) -> SessionRecord:
        record = sessions.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail={"error": "unknown session"})
        return record

    @app.get("/healthz")
    def healthz():
        return JSONResponse("ok")

    @app.get("/examples")
    def examples():
        return {"default": default_model_text}

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionRequest):
        model = _prepare(req.model_text, req.pattern, req.order)
        with registry_lock:
            session_id = f"s{next(counter)}"
            record = SessionRecord(session_id, model)
            sessions[session_id] = record
        cm = record.session.cm
        return {
            "session_id": session_id,
            "model": model_json(model, cm),
            "snapshot": snapshot_json(cm, record.session.state, record.session.pending),
        }

    @app.post("/sessions/{session_id}/events", status_code=202)
    def inject(session_id: str, req: EventRequest):
        record = get_record(session_id)
        with record.lock:
            try:
                record.session.inject(req.event)
            except engine.EngineError as exc:
                raise HTTPException(status_code=400, detail={"error": str(exc)})
            return {"pending": sorted(record.session.pending)}

    @app.post("/sessions/{session_id}/step")
    def step(session_id: str, req: StepRequest):
        record = get_record(session_id)
        with record.lock:
            cm = record.session.cm
            snapshots = []
            cycle_traces = []
            for _ in range(req.count):
                trace = record.session.step(1)[0]
                snapshots.append(snapshot_json(cm, record.session.state, record.session.pending))
                cycle_traces.append([cycle_json(rec) for rec in trace.cycles])
            return {"snapshots": snapshots, "cycle_traces": cycle_traces}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        record = get_record(session_id)
        with record.lock:
            cm = record.session.cm
            return {
                "session_id": session_id,
                "model": model_json(record.model, cm),
                "snapshot": snapshot_json(cm, record.session.state, record.session.pending),
                "history": [
                    {"step": t.step, "env": list(t.env), "cycles": [cycle_json(rec) for rec in t.cycles]}
                    for t in record.session.history[-50:]
                ],
            }

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        get_record(session_id)
        with registry_lock:
            sessions.pop(session_id, None)

    @app.post("/verify")
    def verify(req: VerifyRequest):
        model = _prepare(req.model_text, req.pattern, req.order)
        try:
            queries = [text.parse_query(q) for q in req.queries]
        except ParseError as exc:
            raise HTTPException(status_code=400, detail={"error": "query", "diagnostics": [str(exc)]})
        cm = engine.compile_model(model)
        limit = req.limit or state_limit
        results = []
        for query in queries:
            try:
                result = verifier.check_query(cm, query, policy=req.env, limit=limit)
            except verifier.QueryError as exc:
                raise HTTPException(status_code=400, detail={"error": "query", "diagnostics": [str(exc)]})
            except verifier.ResourceLimitError as exc:
                raise HTTPException(status_code=408, detail={"error": "state limit", "states_explored": exc.states})
            entry = {
                "query": query.text,
                "verdict": result.verdict,
                "states": result.states,
                "trace_len": result.trace_len,
                "trace": None,
            }
            if result.trace is not None:
                steps = verifier.replay_step_traces(cm, result.trace)
                entry["trace"] = engine.format_trace(cm, steps)
            results.append(entry)
        return {"results": results}

    return app
