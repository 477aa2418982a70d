"""HTTP/WebSocket surface for the experiment console.

The app hosts sessions (create, present, respond, report), serves the
pattern catalog for the UI guides, and streams device telemetry over
/stream. All device I/O is owned by a single playback thread; handlers
hand it work through a queue and never touch the transport themselves.

Mutating endpoints accept an optional "request_id"; retrying with the same
id returns the stored result instead of re-applying the mutation. Sessions
persist to one JSON file each after every mutation, so restarting the
service reproduces the same state and reports.
"""

from contextlib import asynccontextmanager
from dataclasses import asdict
import asyncio
import collections
import json
import math
import os
import queue
import threading
import time
import uuid

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import experiment, patterns
from .config import AppConfig
from .errors import DeltaPadError
from .experiment import SessionSpec, next_stimulus, record_response
from .geometry import forward_kinematics, inverse_kinematics
from .playback import pulses_for_pose
from .protocol import encode_frame, pulse_to_angle
from .simulator import SimTransport, VirtualDevice
from .trajectory import render_contact_trial, render_stretch_trial
from .transport import SerialTransport, send_frame

SNAPSHOT_EVERY = 5  # every 5th 100 Hz tick -> 20 Hz stream

# engine error -> HTTP status; state conflicts 409, bad values 422
_STATUS = {
    "ResponsePending": 409,
    "SessionComplete": 409,
    "AlreadyAnswered": 409,
    "IncompleteSession": 409,
    "MixedModes": 409,
}


def _error_json(exc: DeltaPadError) -> JSONResponse:
    status = _STATUS.get(exc.code, 422)
    return JSONResponse(status_code=status,
                        content={"error": {"code": exc.code, "message": str(exc)}})


def _bad_request(code: str, message: str, status: int = 422) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": {"code": code, "message": message}})


class DeviceLoop:
    """Playback thread: sole owner of the transport.

    Jobs arrive on an ordered queue; telemetry snapshots and trial
    lifecycle events fan out to subscriber queues (drop-oldest on
    overflow so a slow client never stalls playback).
    """

    def __init__(self, config: AppConfig, backend: str = None,
                 realtime: bool = None):
        self.config = config
        self.backend = backend or config.service.backend
        self.realtime = config.service.realtime if realtime is None else realtime
        self.jobs = queue.Queue()
        self._subs = []
        self._subs_lock = threading.Lock()
        self._thread = None
        self.device = None
        if self.backend == "sim":
            hover = (0.0, 0.0,
                     config.layout.contact_plane_z - config.render.hover_height)
            self.device = VirtualDevice.at_pose(config.geometry, hover,
                                                calibration=config.servo)
            self.transport = SimTransport(self.device, dt=config.render.dt)
        elif self.backend.startswith("serial:"):
            self.transport = SerialTransport(self.backend.split(":", 1)[1])
        else:
            raise ValueError(f"unknown device backend {self.backend!r}")

    # -- pub/sub --------------------------------------------------------
    def subscribe(self) -> queue.Queue:
        q = queue.Queue(maxsize=512)
        with self._subs_lock:
            self._subs.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._subs_lock:
            if q in self._subs:
                self._subs.remove(q)

    def publish(self, msg: dict) -> None:
        with self._subs_lock:
            subs = list(self._subs)
        for q in subs:
            try:
                q.put_nowait(msg)
            except queue.Full:
                try:
                    q.get_nowait()
                    q.put_nowait(msg)
                except queue.Empty:
                    pass

    # -- lifecycle ------------------------------------------------------
    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="deltapad-device")
        self._thread.start()

    def stop(self) -> None:
        if self._thread is None:
            return
        self.jobs.put(None)
        self._thread.join(timeout=5.0)
        self._thread = None
        self.transport.close()

    def play(self, session_id: str, trial: int, pattern: str, traj) -> None:
        self.jobs.put((session_id, trial, pattern, traj))

    # -- playback -------------------------------------------------------
    def _snapshot(self, t: float, seq: int, commanded_pulses) -> dict:
        cfg = self.config
        if self.device is not None:
            angles = self.device.current_angles
            pose = self.device.pose
        else:
            angles = [pulse_to_angle(p, cfg.servo, ch)
                      for ch, p in enumerate(commanded_pulses)]
            pose = forward_kinematics(cfg.geometry, angles)
        return {
            "type": "snapshot",
            "t": round(t, 6),
            "angles_deg": [round(math.degrees(a), 4) for a in angles],
            "pose": [round(float(c), 4) for c in pose],
            "in_contact": bool(pose[2] >= cfg.pad.contact_plane_z - 1e-9),
            "seq": seq,
            "backend": self.backend,
        }

    def _run(self) -> None:
        cfg = self.config
        dt = cfg.render.dt
        while True:
            job = self.jobs.get()
            if job is None:
                break
            session_id, trial, pattern, traj = job
            self.publish({"type": "trial_started", "session_id": session_id,
                          "trial": trial, "pattern": pattern,
                          "duration": traj.total_duration})
            try:
                for i, wp in enumerate(traj.waypoints):
                    pulses = pulses_for_pose(cfg.geometry, cfg.servo, wp.pose)
                    frame = encode_frame(pulses, wp.vibration_duty, i % 256)
                    send_frame(self.transport, frame)
                    if i % SNAPSHOT_EVERY == 0:
                        self.publish(self._snapshot(wp.t, i % 256, pulses))
                    if self.realtime:
                        time.sleep(dt)
            except DeltaPadError as exc:
                self.publish({"type": "trial_error", "session_id": session_id,
                              "trial": trial, "code": exc.code,
                              "message": str(exc)})
                continue
            self.publish({"type": "trial_finished", "session_id": session_id,
                          "trial": trial, "pattern": pattern})


class SessionStore:
    """In-memory session map with one JSON file per session on disk."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self.lock = threading.RLock()
        self.sessions = {}
        for name in sorted(os.listdir(data_dir)):
            if not name.endswith(".json"):
                continue
            path = os.path.join(data_dir, name)
            try:
                self.sessions[name[:-5]] = experiment.load_session(path)
            except (ValueError, KeyError, TypeError, json.JSONDecodeError):
                continue  # not a session file; leave it alone

    def add(self, session) -> str:
        sid = uuid.uuid4().hex[:12]
        with self.lock:
            self.sessions[sid] = session
            self.save(sid)
        return sid

    def save(self, sid: str) -> None:
        experiment.save_session(self.sessions[sid],
                                os.path.join(self.data_dir, f"{sid}.json"))


def _session_state(sid: str, session) -> dict:
    return {
        "session_id": sid,
        "spec": asdict(session.spec),
        "sequence": list(session.sequence),
        "trials": [asdict(t) for t in session.trials],
        "presented_index": session.presented_index,
        "answered": sum(1 for t in session.trials if t.answered),
        "total_trials": len(session.sequence),
        "complete": session.complete,
        "created_at": session.created_at,
    }


def _render_for(session, idx: int, config: AppConfig):
    pattern = session.sequence[idx]
    force = 1.0 * session.spec.force_calibration
    if session.spec.mode == "contact":
        return render_contact_trial(pattern, config.render, config.geometry,
                                    config.workspace, config.layout,
                                    force=force)
    return render_stretch_trial(pattern, config.render, config.geometry,
                                config.workspace, config.layout,
                                normal_force=force)


def create_app(config: AppConfig = None, backend: str = None,
               realtime: bool = None) -> FastAPI:
    """Build the service app around one device loop and one session store."""
    config = config or AppConfig()
    device_loop = DeviceLoop(config, backend=backend, realtime=realtime)
    store = SessionStore(config.service.data_dir)
    idempotent = collections.OrderedDict()

    @asynccontextmanager
    async def lifespan(app):
        device_loop.start()
        try:
            yield
        finally:
            device_loop.stop()

    app = FastAPI(title="deltapad", lifespan=lifespan)
    # the console may be served from any static host
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.config = config
    app.state.device_loop = device_loop
    app.state.store = store

    def remembered(key):
        if key[-1] is None:
            return None
        return idempotent.get(key)

    def remember(key, status, body):
        if key[-1] is None:
            return
        idempotent[key] = (status, body)
        while len(idempotent) > 4096:
            idempotent.popitem(last=False)

    def get_session_or_404(sid):
        session = store.sessions.get(sid)
        if session is None:
            return None, _bad_request("UnknownSession",
                                      f"no session {sid!r}", status=404)
        return session, None

    @app.post("/sessions", status_code=201)
    async def create_session_ep(body: dict):
        key = ("create", body.get("request_id"))
        hit = remembered(key)
        if hit:
            return JSONResponse(status_code=hit[0], content=hit[1])
        try:
            spec = SessionSpec(
                mode=body["mode"],
                subject_id=body["subject_id"],
                rng_seed=int(body.get("rng_seed", time.time_ns() % 2 ** 31)),
                repetitions=int(body.get("repetitions",
                                         experiment.DEFAULT_REPETITIONS)),
                training=bool(body.get("training", False)),
                force_calibration=float(body.get("force_calibration", 1.0)),
            )
        except KeyError as exc:
            return _bad_request("MissingField", f"missing field {exc}")
        except (ValueError, TypeError) as exc:
            return _bad_request("InvalidSpec", str(exc))
        session = experiment.create_session(spec)
        sid = store.add(session)
        device_loop.publish({"type": "session_created", "session_id": sid,
                             "mode": spec.mode, "subject_id": spec.subject_id})
        body_out = {"session_id": sid, "total_trials": len(session.sequence)}
        remember(key, 201, body_out)
        return JSONResponse(status_code=201, content=body_out)

    @app.get("/sessions/{sid}")
    async def get_session_ep(sid: str):
        session, err = get_session_or_404(sid)
        if err:
            return err
        with store.lock:
            return _session_state(sid, session)

    @app.post("/sessions/{sid}/present")
    async def present_ep(sid: str, body: dict = None):
        body = body or {}
        session, err = get_session_or_404(sid)
        if err:
            return err
        key = ("present", sid, body.get("request_id"))
        hit = remembered(key)
        if hit:
            return JSONResponse(status_code=hit[0], content=hit[1])
        with store.lock:
            try:
                idx, _stim = next_stimulus(session, layout=config.layout)
                traj = _render_for(session, idx, config)
            except DeltaPadError as exc:
                return _error_json(exc)
            store.save(sid)
        pattern = session.sequence[idx]
        device_loop.play(sid, idx, pattern, traj)
        out = {"trial": idx, "pattern": pattern,
               "total_trials": len(session.sequence),
               "duration": traj.total_duration}
        remember(key, 200, out)
        return out

    @app.post("/sessions/{sid}/response")
    async def response_ep(sid: str, body: dict):
        session, err = get_session_or_404(sid)
        if err:
            return err
        key = ("response", sid, body.get("request_id"))
        hit = remembered(key)
        if hit:
            return JSONResponse(status_code=hit[0], content=hit[1])
        try:
            trial_idx = int(body["trial"])
            answer = body["answer"]
            confidence = body["confidence"]
        except KeyError as exc:
            return _bad_request("MissingField", f"missing field {exc}")
        except (ValueError, TypeError) as exc:
            return _bad_request("InvalidField", str(exc))
        with store.lock:
            try:
                trial = record_response(session, trial_idx, answer, confidence)
            except DeltaPadError as exc:
                return _error_json(exc)
            store.save(sid)
        device_loop.publish({"type": "response_recorded", "session_id": sid,
                             "trial": trial_idx, "correct": trial.correct})
        out = {"trial": trial_idx, "correct": trial.correct,
               "answered": sum(1 for t in session.trials if t.answered),
               "complete": session.complete}
        remember(key, 200, out)
        return out

    @app.get("/sessions/{sid}/report")
    async def report_ep(sid: str):
        session, err = get_session_or_404(sid)
        if err:
            return err
        with store.lock:
            try:
                summary = experiment.summarize([session])
            except DeltaPadError as exc:
                return _error_json(exc)
        summary["session_id"] = sid
        summary["subject_id"] = session.spec.subject_id
        summary["rng_seed"] = session.spec.rng_seed
        return summary

    @app.get("/patterns")
    async def patterns_ep(mode: str = None):
        cat = patterns.catalog(config.layout)
        out = {
            "layout": cat["layout"],
            "workspace": {
                "radius": config.workspace.radius,
                "z_travel": config.workspace.z_travel,
                "contact_plane_z": config.workspace.contact_plane_z,
            },
        }
        if mode is None:
            out["contact"] = cat["contact"]
            out["stretch"] = cat["stretch"]
            return out
        if mode not in cat or mode == "layout":
            return _bad_request("UnknownMode", f"unknown mode {mode!r}")
        out["mode"] = mode
        out["patterns"] = cat[mode]
        return out

    @app.websocket("/stream")
    async def stream_ep(ws: WebSocket):
        # subscribe before the handshake completes so events published
        # right after the client sees "open" cannot be missed
        sub = device_loop.subscribe()
        await ws.accept()
        try:
            while True:
                try:
                    msg = await asyncio.to_thread(sub.get, True, 0.25)
                except queue.Empty:
                    continue
                await ws.send_json(msg)
        except (WebSocketDisconnect, RuntimeError):
            pass  # client went away
        finally:
            device_loop.unsubscribe(sub)

    return app
