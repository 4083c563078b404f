"""HTTP surface over engine state and metric snapshots.

Read endpoints are thin projections of in-process engine/metrics calls —
the service layer adds no logic of its own. The only mutations are quest
create/accept, leaderboard opt-in/out, and nudge acknowledgment; they are
serialized through a single writer lock, appended to the event log, and
persisted when a state path is configured.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .engine import (
    DeadlineInPast,
    EngineState,
    InvalidScope,
    Quest,
    QuestSpec,
    UnknownNudge,
    UnknownQuest,
    UnknownTeam,
)
from .errors import OcgovError
from .metrics import MetricSnapshot
from .persistence import save_state


class PortInUse(OcgovError):
    """The requested listen port is already bound."""


class StateStore:
    """Engine state plus the snapshot series it was built from.

    Reads take no lock (snapshots are immutable and state reads are cheap);
    every mutation holds the single writer lock and persists before
    returning, so concurrent mutations are linearized.
    """

    def __init__(
        self,
        state: EngineState,
        snapshots: Sequence[MetricSnapshot],
        state_path: str | Path | None = None,
    ) -> None:
        self.state = state
        self.snapshots = list(snapshots)
        self.state_path = Path(state_path) if state_path else None
        self._write_lock = threading.Lock()

    @property
    def window(self) -> int:
        if self.state.last_window is not None:
            return self.state.last_window
        if self.snapshots:
            return self.snapshots[-1].window
        return -1

    def snapshot_at(self, window: int) -> MetricSnapshot | None:
        for snap in self.snapshots:
            if snap.window == window:
                return snap
        return None

    @property
    def latest_snapshot(self) -> MetricSnapshot | None:
        return self.snapshots[-1] if self.snapshots else None

    def _persist(self) -> None:
        if self.state_path is not None:
            save_state(self.state, self.state_path)

    def create_quest(self, spec: QuestSpec) -> Quest:
        with self._write_lock:
            quest = self.state.create_quest(spec, self.latest_snapshot)
            self._persist()
            return quest

    def accept_quest(self, quest_id: int, developer: str) -> Quest:
        with self._write_lock:
            quest = self.state.accept_quest(quest_id, developer)
            self._persist()
            return quest

    def set_opt_in(self, developer: str, opted_in: bool) -> None:
        with self._write_lock:
            self.state.set_opt_in(developer, opted_in)
            self._persist()

    def ack_nudge(self, nudge_id: int) -> None:
        with self._write_lock:
            self.state.ack_nudge(nudge_id)
            self._persist()


class QuestBody(BaseModel):
    title: str
    metric: str
    services: list[str] = []
    developers: list[str] = []
    comparator: str = "<="
    target: float = 0.0
    target_kind: str = "absolute"
    deadline: int


class AcceptBody(BaseModel):
    developer: str


class OptInBody(BaseModel):
    developer: str
    opt_in: bool = True


def _quest_doc(quest: Quest) -> dict:
    return quest.to_json_obj()


def create_app(store: StateStore, token: str | None = None) -> FastAPI:
    app = FastAPI(title="ocgov", docs_url=None, redoc_url=None)

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "MalformedRequest", "detail": str(exc)},
        )

    @app.exception_handler(OcgovError)
    async def domain_error(request: Request, exc: OcgovError):
        if isinstance(exc, (InvalidScope, DeadlineInPast)):
            status = 422
        elif isinstance(exc, (UnknownTeam, UnknownQuest, UnknownNudge)):
            status = 404
        else:
            status = 400
        return JSONResponse(
            status_code=status, content={"error": exc.code, "detail": str(exc)}
        )

    def check_token(x_auth_token: str | None) -> None:
        if token is not None and x_auth_token != token:
            raise HTTPException(status_code=401, detail="bad or missing token")

    def base(payload: dict) -> dict:
        return {"window": store.window, **payload}

    @app.get("/api/services")
    def get_services(x_auth_token: str | None = Header(default=None)):
        check_token(x_auth_token)
        snap = store.latest_snapshot
        services = []
        if snap is not None:
            names = sorted(set(snap.cohesion) | set(snap.stability))
            for name in names:
                services.append(
                    {
                        "name": name,
                        "cohesion": snap.cohesion.get(name),
                        "stability": snap.stability.get(name),
                        "oc_service": snap.oc_service.get(name),
                    }
                )
        return base({"services": services})

    @app.get("/api/developers/{developer}")
    def get_developer(
        developer: str, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        state = store.state
        scores = [s for s in state.scores if s.developer == developer]
        snap = store.latest_snapshot
        profile = None
        if snap is not None and developer in snap.profiles:
            profile = snap.profiles[developer].to_doc()
        if not scores and profile is None and developer not in state.first_ts:
            raise HTTPException(status_code=404, detail="unknown developer")
        return base(
            {
                "developer": developer,
                "profile": profile,
                "scores": [
                    {
                        "window": s.window,
                        "points": s.points,
                        "penalty_applied": s.penalty_applied,
                    }
                    for s in scores
                ],
                "badges": [
                    {"kind": b.kind, "awarded_at": b.awarded_at}
                    for b in state.badges_for(developer)
                ],
                "team": state.teams.get(developer),
                "opted_in": developer in state.optin,
                "first_ts": state.first_ts.get(developer),
            }
        )

    @app.get("/api/leaderboard")
    def get_leaderboard(
        scope: str = "global", x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        entries = store.state.build_leaderboard(scope)
        return base(
            {
                "scope": scope,
                "entries": [
                    {"rank": e.rank, "developer": e.developer, "points": e.points}
                    for e in entries
                ],
            }
        )

    @app.get("/api/coupling")
    def get_coupling(
        window: int | None = None, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        snap = (
            store.latest_snapshot if window is None else store.snapshot_at(window)
        )
        if snap is None:
            raise HTTPException(status_code=404, detail="no such window")
        previous = store.snapshot_at(snap.window - 1)
        pairs = []
        for (a, b), value in sorted(snap.oc_pairs.items()):
            prev = previous.oc_pairs.get((a, b)) if previous is not None else None
            pairs.append({"a": a, "b": b, "value": value, "previous": prev})
        services = sorted(set(snap.cohesion) | {s for p in snap.oc_pairs for s in p})
        return {
            "window": snap.window,
            "services": services,
            "pairs": pairs,
            "oc_project": snap.oc_project,
        }

    @app.get("/api/nudges")
    def get_nudges(
        developer: str | None = None,
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        state = store.state
        nudges = state.nudges if developer is None else state.nudges_for(developer)
        return base(
            {
                "nudges": [
                    {
                        "id": n.id,
                        "developer": n.developer,
                        "window": n.window,
                        "trigger": n.trigger,
                        "message": n.message,
                        "acknowledged": n.id in state.acked_nudges,
                    }
                    for n in nudges
                ]
            }
        )

    @app.get("/api/quests")
    def get_quests(x_auth_token: str | None = Header(default=None)):
        check_token(x_auth_token)
        quests = [store.state.quests[i] for i in sorted(store.state.quests)]
        return base({"quests": [_quest_doc(q) for q in quests]})

    @app.get("/api/badges")
    def get_badges(
        developer: str | None = None,
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        badges = store.state.badges
        if developer is not None:
            badges = store.state.badges_for(developer)
        return base(
            {
                "badges": [
                    {
                        "kind": b.kind,
                        "developer": b.developer,
                        "awarded_at": b.awarded_at,
                    }
                    for b in badges
                ]
            }
        )

    @app.post("/api/quests", status_code=201)
    def post_quest(
        body: QuestBody, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        quest = store.create_quest(
            QuestSpec(
                title=body.title,
                metric=body.metric,
                scope_services=frozenset(body.services),
                scope_developers=frozenset(body.developers),
                comparator=body.comparator,
                target=body.target,
                target_kind=body.target_kind,
                deadline=body.deadline,
            )
        )
        return base({"quest": _quest_doc(quest)})

    @app.post("/api/quests/{quest_id}/accept")
    def post_accept(
        quest_id: int,
        body: AcceptBody,
        x_auth_token: str | None = Header(default=None),
    ):
        check_token(x_auth_token)
        quest = store.accept_quest(quest_id, body.developer)
        return base({"quest": _quest_doc(quest)})

    @app.post("/api/optin")
    def post_optin(
        body: OptInBody, x_auth_token: str | None = Header(default=None)
    ):
        check_token(x_auth_token)
        store.set_opt_in(body.developer, body.opt_in)
        return base({"developer": body.developer, "opted_in": body.opt_in})

    @app.post("/api/nudges/{nudge_id}/ack")
    def post_ack(nudge_id: int, x_auth_token: str | None = Header(default=None)):
        check_token(x_auth_token)
        store.ack_nudge(nudge_id)
        return base({"nudge_id": nudge_id, "acknowledged": True})

    return app


def serve(
    store: StateStore,
    port: int = 8000,
    host: str = "127.0.0.1",
    token: str | None = None,
    static_dir: str | Path | None = None,
) -> None:
    """Run the API (and optionally the dashboard's static assets) forever."""
    import socket

    import uvicorn

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise PortInUse(f"cannot listen on {host}:{port}: {exc}") from exc
    finally:
        probe.close()

    app = create_app(store, token=token)
    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True))
    uvicorn.run(app, host=host, port=port, log_level="warning")
