"""HTTP session service for the live feedback loop.

One session holds one task, a fixed candidate menu and the current weight
vector. A human (or the web UI) re-ranks candidates or nudges single
waypoints; every accepted correction applies the preference update and is
persisted together with the weights in a single atomic file swap.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import scenarios
from .errors import (
    CoactiveError,
    ContractError,
    DomainError,
    PlannerError,
    SchemaError,
    UnknownIdError,
)
from .eval import scenario_expert
from .features import features
from .feedback import FeedbackEvent, informativeness
from .kinematics import DEFAULT_ARM, Trajectory, arm_points, object_poses
from .learning import Standardizer, WeightState, tpp_update_vector, weights_from_json, weights_to_json
from .planner import CollisionChecker, PlannerConfig, sample_trajectories
from .world import context_to_json

SESSION_SCHEMA_VERSION = "session.v1"
SESSION_PLANNER = PlannerConfig(shortcut_passes=8)


def _now():
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# session state


@dataclass
class Session:
    """Server-side state for one interactive task."""

    id: str
    task_id: str
    seed: int
    weights: WeightState
    standardizer: Standardizer
    candidates: list
    events: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    created: str = field(default_factory=_now)
    updated: str = field(default_factory=_now)
    resamples: int = 0
    extra_counter: int = 0

    def __post_init__(self):
        self._ctx = scenarios.get_task(self.task_id)
        self._phis = {}

    @property
    def context(self):
        return self._ctx

    def phi(self, traj):
        if traj.id not in self._phis:
            self._phis[traj.id] = features(self._ctx, traj, arm=DEFAULT_ARM).concatenated()
        return self._phis[traj.id]

    def z(self, traj):
        return self.standardizer.apply(self.phi(traj))

    def ranking(self):
        """Candidate ids and scores, best first, ties in menu order."""
        scores = np.array([float(self.weights.vector() @ self.z(tr)) for tr in self.candidates])
        order = np.argsort(-scores, kind="stable")
        return [self.candidates[i].id for i in order], scores[order]

    def by_id(self, traj_id):
        for tr in self.candidates:
            if tr.id == traj_id:
                return tr
        raise UnknownIdError(f"session {self.id}: unknown candidate {traj_id!r}")

    def to_json(self):
        return {
            "schema": SESSION_SCHEMA_VERSION,
            "id": self.id,
            "task_id": self.task_id,
            "seed": self.seed,
            "created": self.created,
            "updated": self.updated,
            "resamples": self.resamples,
            "extra_counter": self.extra_counter,
            "weights": weights_to_json(self.weights, self.standardizer),
            "candidates": [
                {"id": tr.id, "waypoints": tr.waypoints.tolist()} for tr in self.candidates
            ],
            "events": [e.to_json() for e in self.events],
            "trace": [float(v) for v in self.trace],
        }

    @classmethod
    def from_json(cls, doc):
        if not isinstance(doc, dict) or doc.get("schema") != SESSION_SCHEMA_VERSION:
            raise SchemaError(f"session: schema: expected {SESSION_SCHEMA_VERSION}")
        weights, standardizer = weights_from_json(doc["weights"])
        session = cls(
            id=doc["id"],
            task_id=doc["task_id"],
            seed=int(doc["seed"]),
            weights=weights,
            standardizer=standardizer,
            candidates=[],
            events=[FeedbackEvent.from_json(e) for e in doc.get("events", [])],
            trace=[float(v) for v in doc.get("trace", [])],
            created=doc.get("created", _now()),
            updated=doc.get("updated", _now()),
            resamples=int(doc.get("resamples", 0)),
            extra_counter=int(doc.get("extra_counter", 0)),
        )
        session.candidates = [
            Trajectory(context_id=session.task_id, waypoints=np.asarray(c["waypoints"], float), id=c["id"])
            for c in doc.get("candidates", [])
        ]
        return session


def replay_weights(doc) -> WeightState:
    """Recompute a session's final weights from its event log alone.

    Every updating event carries the standardized feature rows the update
    consumed; summing their differences from zero weights must land on the
    persisted vector bit for bit.
    """
    if not isinstance(doc, dict) or doc.get("schema") != SESSION_SCHEMA_VERSION:
        raise SchemaError(f"session: schema: expected {SESSION_SCHEMA_VERSION}")
    w = WeightState.zeros(len(scenarios.get_task(doc["task_id"]).properties))
    for raw in doc.get("events", []):
        event = FeedbackEvent.from_json(raw)
        if event.improved == event.presented:
            continue
        z_top = np.asarray(event.extra["phi_presented"], dtype=float)
        z_fb = np.asarray(event.extra["phi_improved"], dtype=float)
        w = tpp_update_vector(w, z_top, z_fb)
    return w


# ---------------------------------------------------------------------------
# request bodies


class CreateSession(BaseModel):
    task_id: str
    seed: int = 0
    n_candidates: int = Field(default=8, ge=1, le=100)


class RerankBody(BaseModel):
    kind: str
    selected: str | None = None
    trajectory: str | None = None
    waypoint: int | None = None
    joints: list[float] | None = None


class ResampleBody(BaseModel):
    seed: int | None = None


# ---------------------------------------------------------------------------
# app factory


def create_app(data_dir=None) -> FastAPI:
    """Build the service; sessions persist as JSON files under ``data_dir``."""
    data_dir = data_dir or tempfile.mkdtemp(prefix="coactive-sessions-")
    os.makedirs(data_dir, exist_ok=True)

    app = FastAPI(title="coactive session service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.data_dir = data_dir

    sessions: dict[str, Session] = {}
    locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()

    def _path(session_id):
        return os.path.join(data_dir, f"session-{session_id}.json")

    def _persist(session: Session):
        session.updated = _now()
        doc = session.to_json()
        fd, tmp = tempfile.mkstemp(dir=data_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh)
            os.replace(tmp, _path(session.id))
        finally:
            if os.path.exists(tmp):
                os.remove(tmp)

    def _lock_for(session_id):
        with registry_lock:
            return locks.setdefault(session_id, threading.Lock())

    def _get(session_id) -> Session:
        with registry_lock:
            if session_id in sessions:
                return sessions[session_id]
        path = _path(session_id)
        if not os.path.exists(path):
            raise UnknownIdError(f"unknown session {session_id!r}")
        with open(path) as fh:
            session = Session.from_json(json.load(fh))
        with registry_lock:
            sessions.setdefault(session_id, session)
            return sessions[session_id]

    def _ranking_payload(session: Session):
        ids, scores = session.ranking()
        return {
            "ranking": ids,
            "scores": [float(s) for s in scores],
            "feedback_count": len(session.events),
        }

    # -- error mapping ------------------------------------------------------

    def _error_response(status, code, message, detail=None):
        return JSONResponse(
            status_code=status,
            content={"code": code, "message": message, "detail": detail},
        )

    @app.exception_handler(CoactiveError)
    async def _coactive_error(request: Request, exc: CoactiveError):
        if isinstance(exc, UnknownIdError):
            return _error_response(404, "unknown_id", str(exc))
        if isinstance(exc, PlannerError):
            return _error_response(500, "planner_failure", "planner failed", str(exc))
        return _error_response(422, type(exc).__name__.replace("Error", "").lower(), str(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error_response(422, "validation", "invalid request body", exc.errors())

    # -- routes --------------------------------------------------------------

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/api/tasks")
    def tasks():
        return {"tasks": scenarios.list_tasks()}

    @app.post("/api/sessions", status_code=201)
    def create_session(body: CreateSession):
        ctx = scenarios.get_task(body.task_id)  # 404 on unknown ids
        cfg = PlannerConfig(
            n_samples=body.n_candidates,
            shortcut_passes=SESSION_PLANNER.shortcut_passes,
        )
        candidates = sample_trajectories(ctx, cfg, seed=body.seed, arm=DEFAULT_ARM)
        phis = {tr.id: features(ctx, tr, arm=DEFAULT_ARM).concatenated() for tr in candidates}
        session = Session(
            id=uuid.uuid4().hex[:12],
            task_id=body.task_id,
            seed=body.seed,
            weights=WeightState.zeros(len(ctx.properties)),
            standardizer=Standardizer.fit(np.array(list(phis.values()))),
            candidates=candidates,
        )
        session._phis.update(phis)
        with _lock_for(session.id):
            _persist(session)
            with registry_lock:
                sessions[session.id] = session
        return {
            "id": session.id,
            "task_id": session.task_id,
            "seed": session.seed,
            "n_candidates": len(candidates),
            "created": session.created,
            **_ranking_payload(session),
        }

    @app.get("/api/sessions/{session_id}/candidates")
    def candidates(session_id: str, k: int | None = None):
        session = _get(session_id)
        with _lock_for(session_id):
            ids, scores = session.ranking()
            if k is not None:
                if k < 1:
                    raise DomainError(f"k must be >= 1, got {k}")
                ids, scores = ids[:k], scores[:k]
            payload = []
            for tid, score in zip(ids, scores):
                tr = session.by_id(tid)
                poses = object_poses(DEFAULT_ARM, tr, session.context)
                payload.append({
                    "id": tid,
                    "score": float(score),
                    "waypoints": tr.waypoints.tolist(),
                    "arm_points": arm_points(DEFAULT_ARM, tr).tolist(),
                    "object_poses": [p.to_json() for p in poses],
                })
            return {
                "session": session_id,
                "task_id": session.task_id,
                "scene": context_to_json(session.context),
                "candidates": payload,
                "feedback_count": len(session.events),
            }

    @app.post("/api/sessions/{session_id}/feedback")
    def feedback(session_id: str, body: RerankBody):
        session = _get(session_id)
        with _lock_for(session_id):
            if body.kind == "rerank":
                if body.selected is None:
                    raise DomainError("rerank feedback needs a selected candidate id")
                improved = session.by_id(body.selected)
            elif body.kind == "zero_g":
                improved = _apply_zero_g(session, body)
            else:
                raise DomainError(f"unknown feedback kind {body.kind!r}")
            event = _apply_update(session, improved, body)
            _persist(session)
            return {
                "event": event.to_json(),
                **_ranking_payload(session),
            }

    @app.post("/api/sessions/{session_id}/resample")
    def resample(session_id: str, body: ResampleBody | None = None):
        session = _get(session_id)
        with _lock_for(session_id):
            seed = body.seed if body is not None else None
            session.resamples += 1
            if seed is None:
                seed = session.seed + 1000 * session.resamples
            cfg = PlannerConfig(
                n_samples=len(session.candidates),
                shortcut_passes=SESSION_PLANNER.shortcut_passes,
            )
            fresh = sample_trajectories(session.context, cfg, seed=seed, arm=DEFAULT_ARM)
            renamed = []
            for tr in fresh:
                session.extra_counter += 1
                renamed.append(Trajectory(
                    context_id=tr.context_id,
                    waypoints=tr.waypoints,
                    id=f"r{session.resamples}-{tr.id}",
                ))
            session.candidates = renamed
            session._phis.clear()
            _persist(session)
            return {"session": session_id, **_ranking_payload(session)}

    @app.get("/api/sessions/{session_id}/metrics")
    def metrics(session_id: str):
        session = _get(session_id)
        with _lock_for(session_id):
            return {
                "session": session_id,
                "feedback_count": len(session.events),
                "top_score_trace": [float(v) for v in session.trace],
                "realized_alpha": [float(e.realized_alpha) for e in session.events],
                "xi": [float(e.xi) for e in session.events],
            }

    # -- helpers bound to the app --------------------------------------------

    def _apply_zero_g(session: Session, body: RerankBody) -> Trajectory:
        if body.trajectory is None or body.waypoint is None or body.joints is None:
            raise DomainError("zero_g feedback needs trajectory, waypoint and joints")
        base = session.by_id(body.trajectory)
        j = int(body.waypoint)
        if not 1 <= j <= len(base) - 2:
            raise DomainError(
                f"waypoint index {j} is not an interior waypoint of a {len(base)}-point trajectory"
            )
        q = np.asarray(body.joints, dtype=float)
        if q.shape != (DEFAULT_ARM.dof,):
            raise DomainError(f"joints must have {DEFAULT_ARM.dof} values")
        lo, hi = DEFAULT_ARM.joint_limits[:, 0], DEFAULT_ARM.joint_limits[:, 1]
        if np.any(q < lo) or np.any(q > hi):
            worst = int(np.argmax(np.maximum(lo - q, q - hi)))
            raise DomainError(f"joint {worst} violates its limit")
        checker = CollisionChecker(session.context, DEFAULT_ARM)
        if not checker.is_free(q):
            raise DomainError(f"waypoint {j} collides with the scene")
        waypoints = base.waypoints.copy()
        waypoints[j] = q
        session.extra_counter += 1
        improved = Trajectory(
            context_id=base.context_id,
            waypoints=waypoints,
            id=f"zg{session.extra_counter}",
        )
        session.candidates.append(improved)
        return improved

    def _apply_update(session: Session, improved: Trajectory, body: RerankBody) -> FeedbackEvent:
        ids, _scores = session.ranking()
        top = session.by_id(ids[0])
        z_top, z_fb = session.z(top), session.z(improved)
        expert = scenario_expert(session.task_id)
        s_top = float(expert.score_candidates(session.context, [top], None, arm=DEFAULT_ARM)[0])
        s_fb = float(expert.score_candidates(session.context, [improved], None, arm=DEFAULT_ARM)[0])
        s_best = max(
            float(s)
            for s in expert.score_candidates(
                session.context, session.candidates, None, arm=DEFAULT_ARM
            )
        )
        realized, xi = informativeness(s_top, s_fb, s_best, alpha=0.5)
        extra = {"kind_requested": body.kind}
        if body.kind == "zero_g":
            extra["waypoint"] = int(body.waypoint)
        if improved.id != top.id:
            session.weights = tpp_update_vector(session.weights, z_top, z_fb)
            extra["phi_presented"] = [float(v) for v in z_top]
            extra["phi_improved"] = [float(v) for v in z_fb]
        event = FeedbackEvent(
            round=len(session.events) + 1,
            context_id=session.task_id,
            presented=top.id,
            improved=improved.id,
            kind="zero_g" if body.kind == "zero_g" else "rerank_top",
            realized_alpha=realized,
            xi=xi,
            extra=extra,
        )
        session.events.append(event)
        new_top_id = session.ranking()[0][0]
        new_top = session.by_id(new_top_id)
        session.trace.append(float(session.weights.vector() @ session.z(new_top)))
        return event

    return app
