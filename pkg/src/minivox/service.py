"""Live diarization service: audio in, predictions out, human feedback in.

Each session owns an engine session plus a sample buffer. Every completed
10 ms hop produces one prediction event. Frames with no human feedback take
the no-feedback branch immediately (so a silent session matches an offline
run with no reveals); corrections arriving later, within the pending window,
apply their update on top.

Endpoints:
    POST   /sessions                   create a session
    DELETE /sessions/{id}              drop a session
    POST   /sessions/{id}/feedback     unary feedback for a recent frame
    GET    /sessions/{id}/snapshot     serialized session state
    WS     /sessions/{id}/stream       binary PCM16 in, JSON events out;
                                       JSON feedback messages also accepted
"""

import threading
import time
import uuid
from collections import OrderedDict

import numpy as np
from fastapi import FastAPI, HTTPException, Response, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .engine import CORRECT, NEW, EngineConfig, Feedback, Session, parse_label, wrong
from .errors import ConfigError, MinivoxError, ProtocolError
from .features import MfccConfig, mel_filterbank, mfcc

PENDING_WINDOW = 500  # frames (5 s); older decisions can no longer be corrected


class StaleFrameError(MinivoxError):
    """The referenced frame left the pending-decision window."""


class SessionWorker:
    """Audio buffering, frame stepping, and feedback application for one session.

    All mutating calls serialize on one lock, so feedback applies in arrival
    order and audio processing never interleaves with it.
    """

    def __init__(self, config: EngineConfig, mfcc_config: MfccConfig | None = None,
                 pending_window: int = PENDING_WINDOW):
        self.mfcc_config = mfcc_config or MfccConfig()
        if self.mfcc_config.add_deltas:
            raise ConfigError("delta stacking needs future frames; not available live")
        if config.dim != self.mfcc_config.dim:
            raise ConfigError(
                f"session dim {config.dim} != frontend dim {self.mfcc_config.dim}"
            )
        self.session = Session(config)
        self.created_at = time.time()
        self.pending_window = pending_window
        self._bank = mel_filterbank(self.mfcc_config)
        self._lock = threading.Lock()
        self._byte_tail = b""
        self._samples = np.empty(0)
        self._next_frame = 0
        self._pending: OrderedDict[int, tuple[np.ndarray, object]] = OrderedDict()

    def arm_labels(self) -> list[str]:
        return [str(label) for label in self.session.arm_labels()]

    def push_audio(self, chunk: bytes) -> list[dict]:
        """Buffer PCM16 bytes and emit one event per completed hop.

        Partial frames (and a trailing odd byte) are retained, so any
        partition of the same byte stream yields the same events.
        """
        with self._lock:
            data = self._byte_tail + chunk
            usable = len(data) - (len(data) % 2)
            self._byte_tail = data[usable:]
            if usable:
                fresh = np.frombuffer(data[:usable], dtype="<i2").astype(np.float64) / 32768.0
                self._samples = np.concatenate([self._samples, fresh])
            cfg = self.mfcc_config
            events = []
            while len(self._samples) >= cfg.frame_len:
                x = mfcc(self._samples[: cfg.frame_len], cfg, _bank=self._bank)
                self._samples = self._samples[cfg.hop:]
                chosen, scores = self.session.step(x)
                # No feedback yet: take the unlabeled branch now; a later
                # correction inside the window adds its update on top.
                self.session.apply_feedback(chosen, x, Feedback("none"))
                frame_index = self._next_frame
                self._next_frame += 1
                self._pending[frame_index] = (x, chosen)
                while len(self._pending) > self.pending_window:
                    self._pending.popitem(last=False)
                events.append({
                    "frame_index": frame_index,
                    "chosen": str(chosen),
                    "scores": [float(s) for s in scores],
                    "arm_labels": self.arm_labels(),
                })
            return events

    def apply_feedback(self, frame_index: int, fb: Feedback) -> dict:
        with self._lock:
            if frame_index >= self._next_frame:
                raise ProtocolError(f"frame {frame_index} has not been decided yet")
            if frame_index not in self._pending:
                raise StaleFrameError(
                    f"frame {frame_index} left the {self.pending_window}-frame feedback window"
                )
            x, chosen = self._pending[frame_index]
            if fb.kind == "correct" and chosen != NEW:
                # Silence semantics: approval of a non-New choice carries no
                # update (the frame already took its no-feedback branch).
                return {"applied": False, "registered": None, "arm_labels": self.arm_labels()}
            registration = self.session.apply_feedback(chosen, x, fb)
            return {
                "applied": True,
                "registered": str(registration.label) if registration else None,
                "arm_labels": self.arm_labels(),
            }

    def snapshot(self) -> bytes:
        with self._lock:
            return self.session.snapshot()


class SessionRequest(BaseModel):
    agent: str = "berlinucb"
    mode: str = "interactive"
    oracle_speakers: int | None = None
    ucb_c: float = 1.0
    dim: int | None = None
    pending_window: int = PENDING_WINDOW


class FeedbackRequest(BaseModel):
    frame_index: int
    kind: str  # "correct" | "wrong"
    correct_label: str | None = None  # for "wrong": "New", "NoSpeaker", "User n"


def _build_feedback(body: FeedbackRequest) -> Feedback:
    if body.kind == "correct":
        return CORRECT
    if body.kind == "wrong":
        if body.correct_label is None:
            raise ProtocolError("wrong-choice feedback needs correct_label")
        try:
            return wrong(parse_label(body.correct_label))
        except ValueError as exc:
            raise ProtocolError(str(exc)) from exc
    raise ProtocolError(f"feedback kind must be 'correct' or 'wrong', got {body.kind!r}")


def create_app() -> FastAPI:
    app = FastAPI(title="minivox live diarization")
    sessions: dict[str, SessionWorker] = {}
    app.state.sessions = sessions

    def get_worker(session_id: str) -> SessionWorker:
        worker = sessions.get(session_id)
        if worker is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return worker

    @app.post("/sessions")
    def create_session(body: SessionRequest):
        frontend = MfccConfig()
        try:
            config = EngineConfig(
                agent=body.agent,
                dim=body.dim if body.dim is not None else frontend.dim,
                mode=body.mode,
                oracle_speakers=body.oracle_speakers,
                ucb_c=body.ucb_c,
            )
            worker = SessionWorker(config, frontend, pending_window=body.pending_window)
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        session_id = uuid.uuid4().hex
        sessions[session_id] = worker
        return {
            "id": session_id,
            "created_at": worker.created_at,
            "config": config.to_dict(),
            "arm_labels": worker.arm_labels(),
        }

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        get_worker(session_id)
        del sessions[session_id]
        return {"deleted": session_id}

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: FeedbackRequest):
        worker = get_worker(session_id)
        try:
            return worker.apply_feedback(body.frame_index, _build_feedback(body))
        except StaleFrameError as exc:
            raise HTTPException(status_code=410, detail=str(exc)) from exc
        except ProtocolError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.get("/sessions/{session_id}/snapshot")
    def get_snapshot(session_id: str):
        worker = get_worker(session_id)
        return Response(content=worker.snapshot(), media_type="application/json")

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str):
        worker = sessions.get(session_id)
        await websocket.accept()
        if worker is None:
            await websocket.close(code=4404, reason=f"unknown session {session_id}")
            return
        try:
            while True:
                message = await websocket.receive()
                if message.get("type") == "websocket.disconnect":
                    return
                if message.get("bytes") is not None:
                    for event in worker.push_audio(message["bytes"]):
                        await websocket.send_json(event)
                elif message.get("text") is not None:
                    body = FeedbackRequest.model_validate_json(message["text"])
                    try:
                        ack = worker.apply_feedback(body.frame_index, _build_feedback(body))
                        await websocket.send_json({"type": "ack", "frame_index": body.frame_index, **ack})
                    except (StaleFrameError, ProtocolError) as exc:
                        await websocket.send_json({
                            "type": "error", "frame_index": body.frame_index, "detail": str(exc),
                        })
        except WebSocketDisconnect:
            return

    return app


app = create_app()
