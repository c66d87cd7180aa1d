"""Socket service: sessions over WebSocket for the inspector UI and clients.

One JSON message per frame.  Client messages: create_session,
user_utterance, get_snapshot.  Server messages: session_created,
system_utterance, state_snapshot, engine_event, error; every server message
about a session carries a per-session monotonically increasing `seq`.
GET /health and GET /models serve liveness and model listing.  The wire
schema with one golden example per message type lives in docs/wire_schema.md
and docs/wire_examples/.
"""
from __future__ import annotations

import asyncio
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .compiler import CompiledArtifacts
from .config import RunConfig
from .errors import MironError
from .runtime import InternalActionRegistry, Session, create_session

CLIENT_TYPES = ("create_session", "user_utterance", "get_snapshot")


class BadMessage(Exception):
    pass


def validate_client_message(message) -> dict:
    """Check shape and types of one client message; returns it."""
    if not isinstance(message, dict):
        raise BadMessage("message must be a JSON object")
    mtype = message.get("type")
    if mtype not in CLIENT_TYPES:
        raise BadMessage(f"unknown message type {mtype!r}")
    if mtype == "create_session":
        if "model_id" in message and not isinstance(message["model_id"], str):
            raise BadMessage("model_id must be a string")
        if "seed" in message and not isinstance(message["seed"], int):
            raise BadMessage("seed must be an integer")
    else:
        if not isinstance(message.get("session"), str):
            raise BadMessage("missing session id")
        if mtype == "user_utterance":
            if not isinstance(message.get("text"), str):
                raise BadMessage("missing utterance text")
            if "modality" in message and not isinstance(message["modality"], str):
                raise BadMessage("modality must be a string")
    return message


@dataclass
class SessionBox:
    session: Session
    model_id: str
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    seq: int = 0
    last_active: float = field(default_factory=time.monotonic)
    socket: WebSocket | None = None

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq


class SessionHub:
    """All live sessions; per-session messages are processed serially."""

    def __init__(
        self,
        artifacts_by_id: dict[str, CompiledArtifacts],
        config: RunConfig,
        registry: InternalActionRegistry | None = None,
    ):
        self.artifacts_by_id = artifacts_by_id
        self.config = config
        self.registry = registry
        self.boxes: dict[str, SessionBox] = {}
        self._counter = 0

    def create(self, model_id: str | None, seed: int | None, socket: WebSocket) -> tuple[str, SessionBox]:
        if model_id is None:
            if len(self.artifacts_by_id) != 1:
                raise BadMessage("model_id required when several models are served")
            model_id = next(iter(self.artifacts_by_id))
        artifacts = self.artifacts_by_id.get(model_id)
        if artifacts is None:
            raise BadMessage(f"unknown model {model_id!r}")
        session = create_session(artifacts, registry=self.registry, seed=seed, config=self.config)
        self._counter += 1
        session_id = f"s{self._counter}"
        box = SessionBox(session=session, model_id=model_id, socket=socket)
        self.boxes[session_id] = box
        return session_id, box

    def get(self, session_id: str) -> SessionBox | None:
        return self.boxes.get(session_id)

    async def reap_idle(self) -> list[tuple[str, SessionBox]]:
        now = time.monotonic()
        dead = [
            (sid, box)
            for sid, box in self.boxes.items()
            if now - box.last_active > self.config.idle_timeout_s
        ]
        for sid, _ in dead:
            del self.boxes[sid]
        return dead


def create_app(
    artifacts_by_id: dict[str, CompiledArtifacts],
    config: RunConfig | None = None,
    registry: InternalActionRegistry | None = None,
    reap_interval_s: float | None = None,
) -> FastAPI:
    config = config or RunConfig()
    hub = SessionHub(artifacts_by_id, config, registry)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(reaper())
        yield
        task.cancel()

    app = FastAPI(lifespan=lifespan)
    app.state.hub = hub

    @app.get("/health")
    def health():
        return {"status": "ok", "sessions": len(hub.boxes)}

    @app.get("/models")
    def models():
        return {"models": sorted(hub.artifacts_by_id)}

    async def reaper():
        interval = reap_interval_s or max(1.0, config.idle_timeout_s / 4)
        while True:
            await asyncio.sleep(interval)
            for sid, box in await hub.reap_idle():
                if box.socket is not None:
                    try:
                        await box.socket.send_json(
                            {
                                "type": "engine_event",
                                "session": sid,
                                "seq": box.next_seq(),
                                "kind": "closed",
                                "detail": {"reason": "idle timeout"},
                            }
                        )
                    except Exception:
                        pass

    @app.websocket("/ws")
    async def ws_endpoint(socket: WebSocket):
        await socket.accept()
        try:
            while True:
                raw = await socket.receive_json()
                await _handle(hub, socket, raw)
        except WebSocketDisconnect:
            pass

    return app


async def _handle(hub: SessionHub, socket: WebSocket, raw) -> None:
    try:
        message = validate_client_message(raw)
    except BadMessage as exc:
        await socket.send_json({"type": "error", "code": "bad_message", "message": str(exc)})
        return

    if message["type"] == "create_session":
        try:
            session_id, box = hub.create(message.get("model_id"), message.get("seed"), socket)
        except BadMessage as exc:
            await socket.send_json({"type": "error", "code": "bad_message", "message": str(exc)})
            return
        await socket.send_json(
            {
                "type": "session_created",
                "session": session_id,
                "seq": box.next_seq(),
                "model_id": box.model_id,
            }
        )
        async with box.lock:
            await _run_turn(box, session_id, socket, text=None)
        return

    session_id = message["session"]
    box = hub.get(session_id)
    if box is None:
        await socket.send_json(
            {
                "type": "error",
                "code": "unknown_session",
                "message": f"no session {session_id!r}",
                "session": session_id,
            }
        )
        return
    box.last_active = time.monotonic()
    box.socket = socket

    if message["type"] == "get_snapshot":
        async with box.lock:
            await _send_snapshot(box, session_id, socket)
        return

    async with box.lock:
        await _run_turn(box, session_id, socket, message["text"], message.get("modality", "speech"))


async def _run_turn(
    box: SessionBox, session_id: str, socket: WebSocket, text: str | None, modality: str = "speech"
) -> None:
    """Ingest (unless opening turn), tick, and stream everything that happened."""
    session = box.session
    events: list[dict] = []
    observer = events.append
    session.observers.append(observer)
    try:
        if text is not None:
            session.ingest_utterance(text, modality)
        outputs = session.tick()
    except MironError as exc:
        session.observers.remove(observer)
        await socket.send_json(
            {
                "type": "error",
                "code": "engine_fault",
                "message": str(exc),
                "session": session_id,
                "seq": box.next_seq(),
            }
        )
        return
    session.observers.remove(observer)
    for event in events:
        if event["kind"] in ("rules", "inner_speech", "failure"):
            detail = {k: v for k, v in event.items() if k != "kind"}
            await socket.send_json(
                {
                    "type": "engine_event",
                    "session": session_id,
                    "seq": box.next_seq(),
                    "kind": event["kind"],
                    "detail": detail,
                }
            )
    for output in outputs:
        await socket.send_json(
            {
                "type": "system_utterance",
                "session": session_id,
                "seq": box.next_seq(),
                "text": output.text,
                "intent": output.intent,
                "modality": output.modality,
            }
        )
    await _send_snapshot(box, session_id, socket)


async def _send_snapshot(box: SessionBox, session_id: str, socket: WebSocket) -> None:
    await socket.send_json(
        {
            "type": "state_snapshot",
            "session": session_id,
            "seq": box.next_seq(),
            "snapshot": box.session.snapshot().to_json(),
        }
    )
