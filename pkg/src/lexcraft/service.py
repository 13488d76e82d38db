"""HTTP facade over the mood board, lexicon commands, compiler, renderer,
and history, for the studio UI and any other client.

State is session-scoped and in-memory except history and artifacts, which
persist under the data directory (``LEXCRAFT_DATA_DIR`` or a fresh temp dir)
so a restarted service can still serve past results.

Handlers are synchronous and run on the framework's worker pool; a lock per
lexicon serializes mutation, so concurrent command posts with the same
expected_revision resolve to exactly one winner.
"""

from __future__ import annotations

import os
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable

from fastapi import Body, FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from starlette.concurrency import run_in_threadpool

from .colorlab import Rgb
from .compiler import compile_lexicon, validate
from .errors import (
    BadCommand,
    LexcraftError,
    UnknownArtifact,
    UnknownLexicon,
    UnknownSession,
)
from .history import HistoryStore
from .lexicon import VisualLexicon, apply_envelope
from .moodboard import DEFAULT_SEED, MoodBoard, NormRect
from .renderer import DEFAULT_CANVAS, RenderArtifact, render

_ARTIFACT_FILE_OK = ("final.png", "artifact.json")


@dataclass
class Session:
    session_id: str
    board: MoodBoard
    lexicons: dict[str, VisualLexicon] = dc_field(default_factory=dict)
    locks: dict[str, threading.Lock] = dc_field(default_factory=dict)
    board_lock: threading.Lock = dc_field(default_factory=threading.Lock)
    lexicon_seq: int = 0

    def new_lexicon(self) -> VisualLexicon:
        self.lexicon_seq += 1
        lexicon_id = f"lex_{self.lexicon_seq:04d}"
        lex = VisualLexicon(lexicon_id)
        self.adopt(lex)
        return lex

    def adopt(self, lex: VisualLexicon) -> None:
        self.lexicons[lex.lexicon_id] = lex
        self.locks[lex.lexicon_id] = threading.Lock()

    def lexicon(self, lexicon_id: str) -> tuple[VisualLexicon, threading.Lock]:
        lex = self.lexicons.get(lexicon_id)
        if lex is None:
            raise UnknownLexicon(f"no lexicon {lexicon_id!r} in session {self.session_id}")
        return lex, self.locks[lexicon_id]


class Studio:
    """All mutable service state, shared across requests."""

    def __init__(self, data_dir: str | Path | None = None, clock: Callable[[], float] = time.time):
        if data_dir is None:
            data_dir = os.environ.get("LEXCRAFT_DATA_DIR") or tempfile.mkdtemp(prefix="lexcraft_")
        self.data_dir = Path(data_dir)
        self.artifact_dir = self.data_dir / "artifacts"
        self.artifact_dir.mkdir(parents=True, exist_ok=True)
        self.history = HistoryStore(self.data_dir, clock=clock)
        self.clock = clock
        self.sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create_session(self) -> Session:
        session = Session(
            session_id=f"ses_{uuid.uuid4().hex[:12]}",
            board=MoodBoard(clock=self.clock),
        )
        with self._lock:
            self.sessions[session.session_id] = session
        return session

    def session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session

    def store_artifact(self, artifact: RenderArtifact) -> tuple[str, dict]:
        artifact_id = f"art_{uuid.uuid4().hex[:12]}"
        artifact.export(self.artifact_dir / artifact_id)
        stages = [
            {"stage": name, "url": f"/artifacts/{artifact_id}/{file}"}
            for name, file in zip(artifact.stage_names, artifact.stage_filenames())
        ]
        urls = {
            "id": artifact_id,
            "stages": stages,
            "final": f"/artifacts/{artifact_id}/final.png",
            "manifest": f"/artifacts/{artifact_id}/artifact.json",
        }
        return artifact_id, urls

    def artifact_path(self, artifact_id: str, file: str) -> Path:
        safe = file in _ARTIFACT_FILE_OK or (
            file.startswith("stage_") and file.endswith(".png") and "/" not in file and ".." not in file
        )
        path = self.artifact_dir / artifact_id / file
        if not safe or not path.is_file():
            raise UnknownArtifact(f"no artifact file {artifact_id}/{file}")
        return path


def _entry_summary(entry, artifact_id: str) -> dict:
    return {
        "entry_id": entry.entry_id,
        "parent_id": entry.parent_id,
        "created_at": entry.created_at,
        "plan_hash": entry.plan_hash,
        "revision": entry.lexicon_doc["revision"],
        "lexicon_id": entry.lexicon_doc["lexicon_id"],
        "artifact": {
            "id": artifact_id,
            "final": f"/artifacts/{artifact_id}/final.png",
            "manifest": f"/artifacts/{artifact_id}/artifact.json",
        },
    }


def _parse_token_request(session: Session, payload: dict) -> list:
    kind = payload.get("kind")
    args = payload.get("args") or {}
    board = session.board
    if kind == "subject":
        bbox = NormRect.from_doc(args["bbox"])
        return [board.create_subject_token(args["image_id"], bbox)]
    if kind in ("colors:auto", "colors_auto"):
        return board.extract_color_tokens(
            args["image_id"],
            k=int(args.get("k", 5)),
            seed=int(args.get("seed", DEFAULT_SEED)),
        )
    if kind in ("color:manual", "color_manual"):
        return [board.create_color_token(Rgb.from_hex(args["color"]))]
    if kind == "style":
        return [board.create_style_token(args["image_id"])]
    if kind == "concept":
        return [board.create_concept_token(args["image_id"])]
    raise BadCommand(f"unknown token kind {kind!r}")


def create_app(data_dir: str | Path | None = None, clock: Callable[[], float] = time.time) -> FastAPI:
    app = FastAPI(title="lexcraft", docs_url=None, redoc_url=None)
    studio = Studio(data_dir, clock=clock)
    app.state.studio = studio

    @app.exception_handler(LexcraftError)
    def _lexcraft_error(_req: Request, exc: LexcraftError):
        return JSONResponse(status_code=exc.http_status, content=exc.to_doc())

    @app.exception_handler(KeyError)
    def _key_error(_req: Request, exc: KeyError):
        return JSONResponse(
            status_code=400,
            content={"code": "BadCommand", "message": f"missing field {exc}", "details": {}},
        )

    @app.exception_handler(ValueError)
    def _value_error(_req: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"code": "InvalidArgument", "message": str(exc), "details": {}},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions")
    def create_session():
        session = studio.create_session()
        return {"session_id": session.session_id}

    @app.post("/sessions/{session_id}/images")
    async def add_image(session_id: str, request: Request):
        session = studio.session(session_id)
        data = await request.body()

        def work():
            with session.board_lock:
                return session.board.add_image(data)

        ref = await run_in_threadpool(work)
        return ref.to_doc()

    @app.post("/sessions/{session_id}/tokens")
    def create_tokens(session_id: str, payload: dict = Body(...)):
        session = studio.session(session_id)
        with session.board_lock:
            tokens = _parse_token_request(session, payload)
        return {"tokens": [t.to_doc() for t in tokens]}

    @app.get("/sessions/{session_id}/tokens")
    def list_tokens(session_id: str):
        session = studio.session(session_id)
        with session.board_lock:
            return {"tokens": [t.to_doc() for t in session.board.tokens()]}

    @app.post("/sessions/{session_id}/lexicons")
    def create_lexicon(session_id: str):
        session = studio.session(session_id)
        with session.board_lock:
            lex = session.new_lexicon()
        return {"lexicon_id": lex.lexicon_id, "revision": lex.revision}

    @app.get("/sessions/{session_id}/lexicons/{lexicon_id}")
    def get_lexicon(session_id: str, lexicon_id: str):
        session = studio.session(session_id)
        lex, lock = session.lexicon(lexicon_id)
        with lock:
            return lex.to_doc()

    @app.post("/sessions/{session_id}/lexicons/{lexicon_id}/commands")
    def post_command(session_id: str, lexicon_id: str, envelope: dict = Body(...)):
        session = studio.session(session_id)
        lex, lock = session.lexicon(lexicon_id)
        with lock:
            return apply_envelope(lex, session.board, envelope)

    @app.post("/sessions/{session_id}/lexicons/{lexicon_id}/validate")
    def validate_lexicon(session_id: str, lexicon_id: str):
        session = studio.session(session_id)
        lex, lock = session.lexicon(lexicon_id)
        with lock:
            diags = validate(lex, session.board)
        return {"diagnostics": [d.to_doc() for d in diags]}

    @app.post("/sessions/{session_id}/lexicons/{lexicon_id}/generate")
    def generate(session_id: str, lexicon_id: str, payload: dict = Body(default={})):
        session = studio.session(session_id)
        lex, lock = session.lexicon(lexicon_id)
        canvas = tuple(payload.get("canvas") or DEFAULT_CANVAS)
        seed = int(payload.get("seed", DEFAULT_SEED))
        strict = bool(payload.get("strict", False))
        with lock:
            plan = compile_lexicon(lex, session.board, strict=strict)
            revision = lex.revision
            artifact = render(plan, session.board, canvas=canvas, seed=seed)
            artifact_id, urls = studio.store_artifact(artifact)
            entry_id = studio.history.record(
                session_id, lex, session.board, plan, artifact_id
            )
        return {
            "entry_id": entry_id,
            "revision": revision,
            "plan_hash": plan.plan_hash,
            "artifact": urls,
        }

    @app.get("/sessions/{session_id}/history")
    def list_history(session_id: str):
        studio.session(session_id)
        entries = studio.history.list(session_id)
        return {"entries": [_entry_summary(e, e.artifact_ref) for e in entries]}

    @app.post("/sessions/{session_id}/history/{entry_id}/fork")
    def fork_entry(session_id: str, entry_id: str):
        session = studio.session(session_id)
        with session.board_lock:
            session.lexicon_seq += 1
            new_id = f"lex_{session.lexicon_seq:04d}"
            lex = studio.history.fork(entry_id, new_id)
            session.adopt(lex)
        return {"lexicon_id": lex.lexicon_id, "revision": lex.revision}

    @app.get("/artifacts/{artifact_id}/{file}")
    def get_artifact(artifact_id: str, file: str):
        path = studio.artifact_path(artifact_id, file)
        media = "application/json" if file.endswith(".json") else "image/png"
        return FileResponse(path, media_type=media)

    return app


def serve(port: int = 8787, data_dir: str | Path | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(data_dir), host="127.0.0.1", port=port, log_level="warning")
