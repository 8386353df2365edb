"""Local HTTP/JSON service backing the interactive explorer.

Loopback analysis tool, not a deployment target: in-memory sessions, no
authentication. Every response carries a format version; unknown sessions
return a 404 error object. Session mutations are serialized per session.
"""

from __future__ import annotations

import itertools
import threading
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .errors import ChaError, SessionError
from .game import discretize, quotient, translate, untimed_game
from .modelfile import ModelBundle, serialize_model
from .session import Session
from .synth import Strategy
from .untimed import AdversaryPolicy

VERSION = 1


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"version": VERSION,
                                 "error": {"code": code, "message": message}})


def create_app(bundle: ModelBundle, strategy: Optional[Strategy] = None) -> FastAPI:
    app = FastAPI(title="chakit explorer service", docs_url=None, redoc_url=None)
    sessions: dict = {}
    locks: dict = {}
    counter = itertools.count(1)
    store_lock = threading.Lock()

    def get_session(sid: str):
        with store_lock:
            return sessions.get(sid), locks.get(sid)

    @app.get("/model")
    def model():
        return {"version": VERSION, "model": serialize_model(bundle)}

    @app.get("/quotient")
    def quotient_graph():
        if bundle.timed:
            qg = quotient(discretize(translate(bundle.timed_cha, bundle.menu)))
        else:
            qg = untimed_game(bundle.cha, bundle.menu)
        return {"version": VERSION, "quotient": qg.to_json_dict()}

    @app.post("/session")
    async def create_session(request: Request):
        body = await request.json() if await _has_body(request) else {}
        try:
            policy = AdversaryPolicy.parse(body.get("policy", "uniform-random"))
        except ValueError as exc:
            return _error(400, "bad-policy", str(exc))
        seed = int(body.get("seed", 0))
        sid = f"s{next(counter)}"
        session = Session(bundle, policy, seed, strategy, sid)
        with store_lock:
            sessions[sid] = session
            locks[sid] = threading.Lock()
        return {"version": VERSION, "session": session.snapshot()}

    @app.get("/session/{sid}")
    def show(sid: str):
        session, _lock = get_session(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        return {"version": VERSION, "session": session.snapshot()}

    @app.post("/session/{sid}/step")
    async def step(sid: str, request: Request):
        session, lock = get_session(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        body = await request.json() if await _has_body(request) else {}
        cocktail = frozenset(body.get("cocktail", []))
        dry_run = bool(body.get("dry_run", False))
        with lock:
            try:
                result = session.step(cocktail, dry_run=dry_run)
            except SessionError as exc:
                return _error(409, "session-terminated", str(exc))
            except ChaError as exc:
                return _error(400, "bad-step", str(exc))
            return {
                "version": VERSION,
                "dry_run": dry_run,
                "result": result,
                "enabled_edges": session.enabled_edge_info(),
                "session": session.snapshot(),
            }

    @app.get("/session/{sid}/recommend")
    def recommend(sid: str):
        session, lock = get_session(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        with lock:
            if strategy is None:
                return {"version": VERSION, "loaded": False, "cocktail": None,
                        "message": "no strategy loaded"}
            c = session.recommend()
            return {"version": VERSION, "loaded": True,
                    "cocktail": sorted(c) if c is not None else None}

    @app.post("/session/{sid}/reset")
    def reset(sid: str):
        session, lock = get_session(sid)
        if session is None:
            return _error(404, "unknown-session", f"no session {sid!r}")
        with lock:
            session.reset()
            return {"version": VERSION, "session": session.snapshot()}

    return app


async def _has_body(request: Request) -> bool:
    body = await request.body()
    return bool(body)


def serve(bundle: ModelBundle, strategy: Optional[Strategy], host: str, port: int):
    import uvicorn
    app = create_app(bundle, strategy)
    uvicorn.run(app, host=host, port=port, log_level="warning")
