"""HTTP API backing the studio UI.

Sessions are in-memory with LRU eviction; each session serializes its own
drag-reasoning requests while distinct sessions run fully in parallel.
All error responses are ``{"error": {"code": str, "message": str}}``.
"""

from __future__ import annotations

import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse

from .dataset import load_index, stats
from .errors import (
    BackendUnavailable,
    DragchainError,
    FixtureSchemaInvalid,
    InvalidArgument,
    InvalidDrag,
    NotFound,
    ParseError,
    UndefinedMetric,
)
from .model import Scene, canonical_dumps, drag_from_json, scene_from_json, validate_scene
from .perception import ObjectInventory, make_backend
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .cli import config_from_dict

SESSION_CAPACITY = 64

_STATUS_BY_ERROR: tuple[tuple[type[DragchainError], int], ...] = (
    (NotFound, 404),
    (BackendUnavailable, 502),
    (FixtureSchemaInvalid, 502),
    (InvalidDrag, 422),
    (InvalidArgument, 422),
    (UndefinedMetric, 422),
    (ParseError, 400),
)


def _status_of(exc: DragchainError) -> int:
    for klass, status in _STATUS_BY_ERROR:
        if isinstance(exc, klass):
            return status
    return 500


def _error_response(exc: DragchainError) -> JSONResponse:
    return JSONResponse(
        status_code=_status_of(exc),
        content={"error": {"code": exc.code, "message": str(exc)}},
    )


@dataclass
class Session:
    session_id: str
    scene: Scene
    backend_spec: str | None = None
    image_ref: str | None = None
    inventory: ObjectInventory | None = None  # resolved by the first drag
    last_result: PipelineResult | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """Bounded LRU map of live sessions."""

    def __init__(self, capacity: int = SESSION_CAPACITY):
        self.capacity = capacity
        self._sessions: OrderedDict[str, Session] = OrderedDict()
        self._lock = threading.Lock()

    def create(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.session_id] = session
            self._sessions.move_to_end(session.session_id)
            while len(self._sessions) > self.capacity:
                self._sessions.popitem(last=False)

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise NotFound(f"unknown session {session_id!r}")
            self._sessions.move_to_end(session_id)
            return session


def create_app(default_backend: str | None = None) -> FastAPI:
    app = FastAPI(title="dragchain", version="0.1.0")
    store = SessionStore()

    @app.exception_handler(DragchainError)
    async def _handle_domain_error(request: Request, exc: DragchainError) -> JSONResponse:
        return _error_response(exc)

    @app.post("/sessions")
    async def create_session(payload: dict[str, Any]) -> dict[str, Any]:
        if "scene" in payload:
            scene_payload = payload["scene"]
            backend_spec = payload.get("backend", default_backend)
            image_ref = payload.get("image_ref")
        else:
            scene_payload = payload
            backend_spec = default_backend
            image_ref = None
        scene = scene_from_json(scene_payload)
        problems = validate_scene(scene)
        if problems:
            raise InvalidArgument(
                "scene is invalid: " + "; ".join(f"{v.rule}({v.object_id})" for v in problems)
            )
        session = Session(
            session_id=uuid.uuid4().hex,
            scene=scene,
            backend_spec=backend_spec,
            image_ref=image_ref,
        )
        store.create(session)
        return {"session_id": session.session_id}

    @app.post("/sessions/{session_id}/drag")
    def reason_drag(session_id: str, payload: dict[str, Any]) -> Response:
        session = store.get(session_id)
        if "drag" in payload:
            drag_payload = payload["drag"]
            cfg = config_from_dict(payload.get("config", {}))
        else:
            drag_payload = payload
            cfg = PipelineConfig()
        drag = drag_from_json(drag_payload)
        backend = make_backend(session.backend_spec) if session.backend_spec else None
        with session.lock:
            result = run_pipeline(
                session.scene, drag, backend=backend, cfg=cfg, image_ref=session.image_ref
            )
            session.last_result = result
            session.inventory = result.inventory
        return Response(content=canonical_dumps(result.as_dict()), media_type="application/json")

    @app.get("/sessions/{session_id}/trace/{stage}")
    async def stage_trace(session_id: str, stage: str) -> dict[str, Any]:
        session = store.get(session_id)
        if session.last_result is None:
            raise NotFound(f"session {session_id!r} has no reasoning result yet")
        wanted = stage.upper()
        entries = [s for s in session.last_result.trace.stages if s["name"] == wanted]
        if not entries:
            raise NotFound(f"no trace entries for stage {stage!r}")
        return {"stage": wanted, "entries": entries}

    @app.get("/datasets/stats")
    async def dataset_stats(root: str) -> dict[str, Any]:
        return stats(load_index(root))

    return app
