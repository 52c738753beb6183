"""HTTP service: sessions, audio, reports, and the scheme registry.

A thin adapter over the session/codec/assess modules; no protocol rules live
here. Audio is encoded lazily on first request and cached on disk keyed by
(stimulus id, scheme fingerprint), written atomically (temp file + rename).

Configuration file is plain `key = value` text (same reader as scheme files):
  listen_host   default 127.0.0.1
  listen_port   default 8000
  data_dir      corpora, session logs, audio cache (default ./data)
  static_dir    optional directory of web UI assets served at /
  corpus_size   image size used when the service generates its corpus
  corpus_seed   seed for the generated corpus
  advanced_quota  plays per object class in advanced training

Environment overrides: SOUNDSIGHT_LISTEN (host:port) and SOUNDSIGHT_DATA_DIR.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .dsp import wav_write
from .codec import encode
from .schemes import PRESETS, EncodingScheme, scheme_read, scheme_to_text
from .session import PHASE_COMPLETE, Session, SessionError, list_sessions
from .stimuli import (
    StimulusCorpus,
    corpus_read,
    corpus_write,
    gen_lesson_corpus,
    gen_object_corpus,
)


@dataclass
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8000
    data_dir: Path = Path("data")
    static_dir: Path | None = None
    corpus_size: int = 64
    corpus_seed: int = 0
    advanced_quota: int = 15
    extra_schemes: dict[str, EncodingScheme] = field(default_factory=dict)


def load_config(path=None) -> ServiceConfig:
    """Read the key-value config file (if any) and apply env overrides."""
    config = ServiceConfig()
    if path is not None:
        for raw in Path(path).read_text().splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: bad config line {raw!r}")
            key, value = key.strip(), value.strip()
            if key == "listen_host":
                config.listen_host = value
            elif key == "listen_port":
                config.listen_port = int(value)
            elif key == "data_dir":
                config.data_dir = Path(value)
            elif key == "static_dir":
                config.static_dir = Path(value)
            elif key == "corpus_size":
                config.corpus_size = int(value)
            elif key == "corpus_seed":
                config.corpus_seed = int(value)
            elif key == "advanced_quota":
                config.advanced_quota = int(value)
            else:
                raise ValueError(f"{path}: unknown config key {key!r}")
    listen = os.environ.get("SOUNDSIGHT_LISTEN")
    if listen:
        host, sep, port = listen.rpartition(":")
        if not sep:
            raise ValueError("SOUNDSIGHT_LISTEN must be host:port")
        config.listen_host = host
        config.listen_port = int(port)
    data_dir = os.environ.get("SOUNDSIGHT_DATA_DIR")
    if data_dir:
        config.data_dir = Path(data_dir)
    return config


def _scheme_registry(config: ServiceConfig) -> dict[str, EncodingScheme]:
    registry = dict(PRESETS)
    schemes_dir = config.data_dir / "schemes"
    if schemes_dir.is_dir():
        for path in sorted(schemes_dir.glob("*.scheme")):
            registry[path.stem] = scheme_read(path)
    registry.update(config.extra_schemes)
    return registry


def _ensure_corpus(config: ServiceConfig) -> tuple[StimulusCorpus, Path]:
    corpus_dir = config.data_dir / "corpus"
    manifest = corpus_dir / "manifest.csv"
    if not manifest.exists():
        corpus_write(gen_lesson_corpus(config.corpus_size), corpus_dir)
        corpus_write(
            gen_object_corpus(size=config.corpus_size, seed=config.corpus_seed), corpus_dir
        )
    return corpus_read(manifest), manifest


def _scheme_fingerprint(scheme: EncodingScheme) -> str:
    return hashlib.sha256(scheme_to_text(scheme).encode()).hexdigest()[:12]


class CreateSessionBody(BaseModel):
    scheme: str
    seed: int = 0
    advanced_quota: int | None = None


class AnswerBody(BaseModel):
    stimulus_id: str
    label: str | None = None


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    config.data_dir.mkdir(parents=True, exist_ok=True)
    corpus, manifest = _ensure_corpus(config)
    schemes = _scheme_registry(config)
    sessions_dir = config.data_dir / "sessions"
    cache_dir = config.data_dir / "audio-cache"
    app = FastAPI(title="soundsight")

    sessions: dict[str, Session] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def session_lock(session_id: str) -> threading.Lock:
        with registry_lock:
            return locks.setdefault(session_id, threading.Lock())

    def get_session(session_id: str) -> Session:
        with registry_lock:
            if session_id in sessions:
                return sessions[session_id]
        log_path = sessions_dir / f"{session_id}.events.jsonl"
        if not log_path.exists():
            raise _error(404, "session_not_found", f"no session {session_id!r}")
        session = Session.load(log_path, corpus=corpus)
        with registry_lock:
            return sessions.setdefault(session_id, session)

    def get_scheme(name: str) -> EncodingScheme:
        if name not in schemes:
            raise _error(404, "scheme_not_found", f"no scheme {name!r}")
        return schemes[name]

    @app.exception_handler(HTTPException)
    async def structured_errors(request, exc: HTTPException):
        detail = exc.detail
        if not isinstance(detail, dict) or "code" not in detail:
            detail = {"code": "error", "message": str(detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    def describe_trial(session: Session, trial) -> dict:
        return {
            "stimulus_id": trial.stimulus_id,
            "phase": trial.phase,
            "expects_answer": trial.expects_answer,
            "reveal_after": trial.reveal_after,
            "audio_url": f"/audio/{trial.stimulus_id}?scheme={session.scheme_name}",
            "options": session.labels_for_phase(trial.phase),
            "progress": session.progress(),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        scheme = get_scheme(body.scheme)
        quota = body.advanced_quota or config.advanced_quota
        try:
            session = Session.create(
                sessions_dir,
                scheme,
                body.scheme,
                corpus,
                str(manifest),
                seed=body.seed,
                advanced_quota=quota,
            )
        except SessionError as exc:
            raise _error(409, "session_error", str(exc))
        with registry_lock:
            sessions[session.session_id] = session
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}/next")
    def next_stimulus(session_id: str):
        session = get_session(session_id)
        with session_lock(session_id):
            if session.phase == PHASE_COMPLETE:
                raise _error(409, "session_complete", "session is complete; fetch the report")
            try:
                trial = session.next_stimulus()
            except SessionError as exc:
                raise _error(409, "session_error", str(exc))
            return describe_trial(session, trial)

    @app.post("/sessions/{session_id}/answers")
    def submit_answer(session_id: str, body: AnswerBody):
        session = get_session(session_id)
        with session_lock(session_id):
            try:
                feedback = session.submit_answer(body.stimulus_id, body.label)
            except SessionError as exc:
                raise _error(409, "session_error", str(exc))
            return {**feedback, "progress": session.progress()}

    @app.get("/sessions/{session_id}/report")
    def session_report(session_id: str):
        session = get_session(session_id)
        with session_lock(session_id):
            try:
                report = session.finalize()
            except SessionError as exc:
                raise _error(409, "session_incomplete", str(exc))
        metrics = report.metrics
        return {
            "session_id": report.session_id,
            "scheme": report.scheme_name,
            "n_test_answers": metrics.n_items,
            "macro_precision": metrics.macro_precision,
            "macro_recall": metrics.macro_recall,
            "macro_f1": metrics.macro_f1,
            "per_class": {
                label: {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                for label, m in metrics.per_class.items()
            },
            "confusion": {
                "labels": list(report.confusion.labels),
                "counts": report.confusion.counts.tolist(),
            },
        }

    @app.get("/sessions")
    def all_sessions():
        known = list_sessions(sessions_dir) if sessions_dir.is_dir() else []
        return {"sessions": known}

    @app.get("/audio/{stimulus_id}")
    def audio(stimulus_id: str, scheme: str):
        scheme_obj = get_scheme(scheme)
        try:
            item = corpus.by_id(stimulus_id)
        except KeyError:
            raise _error(404, "stimulus_not_found", f"no stimulus {stimulus_id!r}")
        out = cache_dir / _scheme_fingerprint(scheme_obj) / f"{stimulus_id}.wav"
        if not out.exists():
            out.parent.mkdir(parents=True, exist_ok=True)
            clip = encode(item.image, scheme_obj)
            fd, tmp = tempfile.mkstemp(dir=out.parent, suffix=".tmp")
            os.close(fd)
            try:
                wav_write(clip, tmp)
                os.replace(tmp, out)
            finally:
                if os.path.exists(tmp):
                    os.unlink(tmp)
        return FileResponse(out, media_type="audio/wav")

    @app.get("/schemes")
    def list_schemes():
        entries = []
        for name in sorted(schemes):
            s = schemes[name]
            entries.append(
                {
                    "name": name,
                    "map": type(s.pf).__name__,
                    "duration_s": s.duration_s,
                    "sample_rate_hz": s.sample_rate_hz,
                }
            )
        return {"schemes": entries}

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")
    return app


def run(config: ServiceConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.listen_host, port=config.listen_port)
