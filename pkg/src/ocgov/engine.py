"""Gamified feedback over metric snapshots: scores, badges, boards, nudges, quests.

The engine is a deterministic, event-sourced state machine. Snapshots are
applied strictly in window order; every state change (score, badge award,
nudge, quest lifecycle step, opt-in, team assignment) is appended to a
monotone event log, and replaying the log reconstructs the state exactly.
Reads (leaderboards, quest status) never mutate anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import OcgovError
from .metrics import ActiveQuest, DeveloperWindowProfile, MetricSnapshot


class BadWeights(OcgovError):
    """Score weights must be non-negative and sum to one."""


class OutOfOrderWindow(OcgovError):
    """Snapshots must be applied with strictly increasing window indices."""


class UnknownTeam(OcgovError):
    """Leaderboard scope names a team nobody belongs to."""


class InvalidScope(OcgovError):
    """Quest metric and scope do not fit together."""


class DeadlineInPast(OcgovError):
    """Quest deadline must lie strictly after its creation window."""


class UnknownQuest(OcgovError):
    pass


class UnknownNudge(OcgovError):
    pass


BADGE_SERVICE_SPECIALIST = "ServiceSpecialist"
BADGE_BOUNDARY_GUARDIAN = "BoundaryGuardian"
BADGE_QUEST_CHAMPION = "QuestChampion"

TRIGGER_REFOCUS = "RefocusSwitching"
TRIGGER_COORDINATE = "CoordinateViolations"

QUEST_METRICS = ("oc_pair", "cohesion", "ownership_stability", "cscr")
COMPARATORS = ("<=", ">=")


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


@dataclass(frozen=True)
class ScoreRecord:
    developer: str
    window: int
    points: int
    components: tuple[float, float, float]  # focus, 1-violation_rate, 1-switching
    penalty_applied: bool


@dataclass(frozen=True)
class Badge:
    kind: str
    developer: str
    awarded_at: int


@dataclass
class Quest:
    id: int
    title: str
    scope_services: frozenset[str]
    scope_developers: frozenset[str]
    metric: str
    comparator: str
    target: float
    target_kind: str  # "absolute" | "delta"
    baseline: float | None
    deadline: int
    created_at: int
    status: str = "active"

    def effective_target(self) -> float:
        if self.target_kind == "delta":
            return (self.baseline or 0.0) + self.target
        return self.target

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "scope_services": sorted(self.scope_services),
            "scope_developers": sorted(self.scope_developers),
            "metric": self.metric,
            "comparator": self.comparator,
            "target": self.target,
            "target_kind": self.target_kind,
            "baseline": self.baseline,
            "deadline": self.deadline,
            "created_at": self.created_at,
            "status": self.status,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Quest":
        return cls(
            id=obj["id"],
            title=obj["title"],
            scope_services=frozenset(obj["scope_services"]),
            scope_developers=frozenset(obj["scope_developers"]),
            metric=obj["metric"],
            comparator=obj["comparator"],
            target=obj["target"],
            target_kind=obj["target_kind"],
            baseline=obj["baseline"],
            deadline=obj["deadline"],
            created_at=obj["created_at"],
            status=obj["status"],
        )


@dataclass(frozen=True)
class QuestSpec:
    """What a caller supplies to create a quest; ids come from the engine."""

    title: str
    metric: str
    scope_services: frozenset[str] = frozenset()
    scope_developers: frozenset[str] = frozenset()
    comparator: str = "<="
    target: float = 0.0
    target_kind: str = "absolute"
    deadline: int = 0


@dataclass(frozen=True)
class NudgeEvent:
    id: int
    developer: str
    window: int
    trigger: str
    message: str


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    developer: str
    points: float


@dataclass(frozen=True)
class EngineConfig:
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    penalty_multiplier: float = 0.8
    badge_streak: int = 4  # N consecutive active windows
    guardian_min_commits: int = 5
    nudge_cooldown: int = 2  # C windows between same-trigger nudges
    violations_nudge_threshold: int = 3
    leaderboard_trailing: int = 4  # R windows averaged per entry

    def to_json_obj(self) -> dict:
        return {
            "weights": list(self.weights),
            "penalty_multiplier": self.penalty_multiplier,
            "badge_streak": self.badge_streak,
            "guardian_min_commits": self.guardian_min_commits,
            "nudge_cooldown": self.nudge_cooldown,
            "violations_nudge_threshold": self.violations_nudge_threshold,
            "leaderboard_trailing": self.leaderboard_trailing,
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "EngineConfig":
        return cls(
            weights=tuple(obj.get("weights", (1 / 3, 1 / 3, 1 / 3))),
            penalty_multiplier=obj.get("penalty_multiplier", 0.8),
            badge_streak=obj.get("badge_streak", 4),
            guardian_min_commits=obj.get("guardian_min_commits", 5),
            nudge_cooldown=obj.get("nudge_cooldown", 2),
            violations_nudge_threshold=obj.get("violations_nudge_threshold", 3),
            leaderboard_trailing=obj.get("leaderboard_trailing", 4),
        )


def score_window(
    snapshot: MetricSnapshot,
    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3),
    penalty_multiplier: float = 0.8,
) -> list[ScoreRecord]:
    """Score every developer active in the window.

    points = round(100 * (w1*focus + w2*(1 - violation_rate)
                          + w3*(1 - switching_rate))), half-up, times the
    penalty multiplier when the developer's switching signal is flagged.
    """
    if len(weights) != 3 or any(w < 0 for w in weights):
        raise BadWeights("three non-negative weights required")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise BadWeights(f"weights must sum to 1, got {sum(weights)}")
    records = []
    for developer in sorted(snapshot.profiles):
        profile = snapshot.profiles[developer]
        violation_rate = profile.violations_unjustified / profile.n_commits
        components = (
            profile.focus,
            1.0 - violation_rate,
            1.0 - profile.switching_rate,
        )
        raw = 100.0 * sum(w * c for w, c in zip(weights, components))
        penalty = (developer, "switching") in snapshot.deviation_flags
        if penalty:
            raw *= penalty_multiplier
        records.append(
            ScoreRecord(
                developer=developer,
                window=snapshot.window,
                points=_round_half_up(raw),
                components=components,
                penalty_applied=penalty,
            )
        )
    return records


@dataclass
class AppliedWindow:
    """Everything one window application produced, for callers that react."""

    window: int
    scores: list[ScoreRecord] = field(default_factory=list)
    badges: list[Badge] = field(default_factory=list)
    nudges: list[NudgeEvent] = field(default_factory=list)
    completed_quests: list[int] = field(default_factory=list)
    failed_quests: list[int] = field(default_factory=list)


class EngineState:
    """Event-sourced gamification ledger.

    All mutation goes through ``_record``, which assigns the next sequence
    number and applies the event via ``_apply_event`` — the same function
    replay uses, so a log replay reconstructs state bit-exactly.
    """

    def __init__(self, config: EngineConfig = EngineConfig()) -> None:
        self.config = config
        self.events: list[dict] = []
        self.last_window: int | None = None
        self.scores: list[ScoreRecord] = []
        self.badges: list[Badge] = []
        self.quests: dict[int, Quest] = {}
        self.nudges: list[NudgeEvent] = []
        self.acked_nudges: set[int] = set()
        self.teams: dict[str, str] = {}
        self.optin: set[str] = set()
        self.first_ts: dict[str, int] = {}
        self._badge_index: set[tuple[str, str]] = set()
        self._last_nudge: dict[tuple[str, str], int] = {}
        self._focus_recent: dict[str, list[float]] = {}
        self._guardian_recent: dict[str, list[tuple[int, int]]] = {}
        self._next_quest_id = 1
        self._next_nudge_id = 1

    # -- event plumbing ----------------------------------------------------

    def _record(self, kind: str, window: int | None, payload: dict) -> dict:
        event = {"seq": len(self.events) + 1, "kind": kind, "window": window}
        event.update(payload)
        self.events.append(event)
        self._apply_event(event)
        return event

    def _apply_event(self, event: dict) -> None:
        kind = event["kind"]
        if kind == "window":
            self.last_window = event["window"]
            n = self.config.badge_streak
            for developer, info in event["devs"].items():
                prev = self.first_ts.get(developer)
                if prev is None or info["first_ts"] < prev:
                    self.first_ts[developer] = info["first_ts"]
                focus_recent = self._focus_recent.setdefault(developer, [])
                focus_recent.append(info["focus"])
                del focus_recent[:-n]
                guardian = self._guardian_recent.setdefault(developer, [])
                guardian.append((info["violations"], info["n_commits"]))
                del guardian[:-n]
        elif kind == "score":
            self.scores.append(
                ScoreRecord(
                    developer=event["developer"],
                    window=event["window"],
                    points=event["points"],
                    components=tuple(event["components"]),
                    penalty_applied=event["penalty"],
                )
            )
        elif kind == "badge":
            badge = Badge(event["badge"], event["developer"], event["window"])
            self.badges.append(badge)
            self._badge_index.add((badge.kind, badge.developer))
        elif kind == "nudge":
            nudge = NudgeEvent(
                id=event["nudge_id"],
                developer=event["developer"],
                window=event["window"],
                trigger=event["trigger"],
                message=event["message"],
            )
            self.nudges.append(nudge)
            self._last_nudge[(nudge.developer, nudge.trigger)] = nudge.window
            self._next_nudge_id = max(self._next_nudge_id, nudge.id + 1)
        elif kind == "quest_created":
            quest = Quest.from_json_obj(event["quest"])
            self.quests[quest.id] = quest
            self._next_quest_id = max(self._next_quest_id, quest.id + 1)
        elif kind == "quest_status":
            self.quests[event["quest_id"]].status = event["status"]
        elif kind == "quest_accepted":
            quest = self.quests[event["quest_id"]]
            quest.scope_developers = quest.scope_developers | {event["developer"]}
        elif kind == "optin":
            self.optin.add(event["developer"])
        elif kind == "optout":
            self.optin.discard(event["developer"])
        elif kind == "team":
            self.teams[event["developer"]] = event["team"]
        elif kind == "nudge_ack":
            self.acked_nudges.add(event["nudge_id"])
        else:
            raise OcgovError(f"unknown event kind {kind!r}")

    # -- window application --------------------------------------------------

    def apply_snapshot(self, snapshot: MetricSnapshot) -> AppliedWindow:
        """Apply one window's snapshot; returns everything it triggered."""
        if self.last_window is not None and snapshot.window <= self.last_window:
            raise OutOfOrderWindow(
                f"window {snapshot.window} after window {self.last_window}"
            )
        result = AppliedWindow(window=snapshot.window)

        self._record(
            "window",
            snapshot.window,
            {
                "devs": {
                    d: {
                        "focus": p.focus,
                        "violations": p.violations_unjustified,
                        "n_commits": p.n_commits,
                        "first_ts": p.first_ts,
                    }
                    for d, p in sorted(snapshot.profiles.items())
                }
            },
        )

        for record in score_window(
            snapshot, self.config.weights, self.config.penalty_multiplier
        ):
            self._record(
                "score",
                snapshot.window,
                {
                    "developer": record.developer,
                    "points": record.points,
                    "components": list(record.components),
                    "penalty": record.penalty_applied,
                },
            )
            result.scores.append(record)

        self._evaluate_quests(snapshot, result)
        self._award_badges(snapshot, result)
        self._emit_nudges(snapshot, result)
        return result

    # -- quests --------------------------------------------------------------

    def create_quest(
        self, spec: QuestSpec, snapshot: MetricSnapshot | None = None
    ) -> Quest:
        """Validate and store a new active quest.

        Delta-form targets capture their baseline from *snapshot* at
        creation; they are rejected when the scoped metric cannot be
        measured there.
        """
        if spec.metric not in QUEST_METRICS:
            raise InvalidScope(f"unknown quest metric {spec.metric!r}")
        if spec.comparator not in COMPARATORS:
            raise InvalidScope(f"comparator must be one of {COMPARATORS}")
        if spec.target_kind not in ("absolute", "delta"):
            raise InvalidScope(f"unknown target kind {spec.target_kind!r}")
        n_services = len(spec.scope_services)
        if spec.metric == "oc_pair" and n_services != 2:
            raise InvalidScope("oc_pair quests need exactly 2 services in scope")
        if spec.metric in ("cohesion", "ownership_stability") and n_services != 1:
            raise InvalidScope(f"{spec.metric} quests need exactly 1 service in scope")
        if spec.metric == "cscr" and not spec.scope_developers:
            raise InvalidScope("cscr quests need at least 1 developer in scope")
        created_at = self.last_window if self.last_window is not None else -1
        if spec.deadline <= created_at:
            raise DeadlineInPast(
                f"deadline {spec.deadline} not after window {created_at}"
            )

        baseline = None
        if spec.target_kind == "delta":
            baseline = self._quest_value_from(spec, snapshot)
            if baseline is None:
                raise InvalidScope("delta target, but metric not measurable now")

        quest = Quest(
            id=self._next_quest_id,
            title=spec.title,
            scope_services=spec.scope_services,
            scope_developers=spec.scope_developers,
            metric=spec.metric,
            comparator=spec.comparator,
            target=spec.target,
            target_kind=spec.target_kind,
            baseline=baseline,
            deadline=spec.deadline,
            created_at=created_at,
        )
        self._record(
            "quest_created", created_at, {"quest": quest.to_json_obj()}
        )
        return self.quests[quest.id]

    def accept_quest(self, quest_id: int, developer: str) -> Quest:
        quest = self.quests.get(quest_id)
        if quest is None:
            raise UnknownQuest(f"no quest {quest_id}")
        self._record(
            "quest_accepted",
            self.last_window,
            {"quest_id": quest_id, "developer": developer},
        )
        return self.quests[quest_id]

    def active_quests(self) -> list[Quest]:
        return [q for q in self._quests_sorted() if q.status == "active"]

    def active_quest_context(self) -> list[ActiveQuest]:
        """Classification context: (id, covered services) of active quests."""
        return [
            ActiveQuest(id=str(q.id), services=q.scope_services)
            for q in self.active_quests()
        ]

    def _quests_sorted(self) -> list[Quest]:
        return [self.quests[i] for i in sorted(self.quests)]

    def _quest_value_from(
        self, quest: Quest | QuestSpec, snapshot: MetricSnapshot | None
    ) -> float | None:
        if snapshot is None:
            return None
        if quest.metric == "oc_pair":
            pair = tuple(sorted(quest.scope_services))
            # An absent pair means an inactive side: zero coupling by definition.
            return snapshot.oc_pairs.get(pair, 0.0)
        if quest.metric == "cohesion":
            (service,) = quest.scope_services
            return snapshot.cohesion.get(service)
        if quest.metric == "ownership_stability":
            (service,) = quest.scope_services
            return snapshot.stability.get(service)
        if quest.metric == "cscr":
            values = [
                snapshot.profiles[d].cscr
                for d in sorted(quest.scope_developers)
                if d in snapshot.profiles
            ]
            if not values:
                return None
            return sum(values) / len(values)
        return None

    def _evaluate_quests(self, snapshot: MetricSnapshot, result: AppliedWindow) -> None:
        for quest in self._quests_sorted():
            if quest.status != "active":
                continue
            window = snapshot.window
            if window <= quest.deadline:
                value = self._quest_value_from(quest, snapshot)
                if value is None:
                    continue
                target = quest.effective_target()
                met = value <= target if quest.comparator == "<=" else value >= target
                if met:
                    self._record(
                        "quest_status",
                        window,
                        {"quest_id": quest.id, "status": "completed"},
                    )
                    result.completed_quests.append(quest.id)
            else:
                self._record(
                    "quest_status",
                    window,
                    {"quest_id": quest.id, "status": "failed"},
                )
                result.failed_quests.append(quest.id)

    # -- badges ----------------------------------------------------------------

    def _award(self, kind: str, developer: str, window: int, result: AppliedWindow) -> None:
        if (kind, developer) in self._badge_index:
            return
        self._record("badge", window, {"developer": developer, "badge": kind})
        result.badges.append(self.badges[-1])

    def _award_badges(self, snapshot: MetricSnapshot, result: AppliedWindow) -> None:
        n = self.config.badge_streak
        for developer in sorted(snapshot.profiles):
            focus_recent = self._focus_recent.get(developer, [])
            if len(focus_recent) >= n and all(f >= 0.8 for f in focus_recent[-n:]):
                self._award(BADGE_SERVICE_SPECIALIST, developer, snapshot.window, result)
            guardian = self._guardian_recent.get(developer, [])
            if len(guardian) >= n:
                tail = guardian[-n:]
                clean = all(v == 0 for v, _ in tail)
                enough = sum(c for _, c in tail) >= self.config.guardian_min_commits
                if clean and enough:
                    self._award(
                        BADGE_BOUNDARY_GUARDIAN, developer, snapshot.window, result
                    )
        for quest_id in result.completed_quests:
            quest = self.quests[quest_id]
            in_scope = set(quest.scope_developers)
            for developer, profile in snapshot.profiles.items():
                if profile.primary in quest.scope_services:
                    in_scope.add(developer)
            for developer in sorted(in_scope):
                self._award(BADGE_QUEST_CHAMPION, developer, snapshot.window, result)

    # -- nudges ------------------------------------------------------------------

    def _try_nudge(
        self,
        developer: str,
        trigger: str,
        message: str,
        window: int,
        result: AppliedWindow,
    ) -> None:
        last = self._last_nudge.get((developer, trigger))
        if last is not None and window - last < self.config.nudge_cooldown:
            return
        self._record(
            "nudge",
            window,
            {
                "nudge_id": self._next_nudge_id,
                "developer": developer,
                "trigger": trigger,
                "message": message,
            },
        )
        result.nudges.append(self.nudges[-1])

    def _emit_nudges(self, snapshot: MetricSnapshot, result: AppliedWindow) -> None:
        for developer in sorted(snapshot.profiles):
            profile = snapshot.profiles[developer]
            if (developer, "switching") in snapshot.deviation_flags:
                self._try_nudge(
                    developer,
                    TRIGGER_REFOCUS,
                    f"Cross-service switching is running above your baseline; "
                    f"consider refocusing on {profile.primary}.",
                    snapshot.window,
                    result,
                )
            if profile.violations_unjustified >= self.config.violations_nudge_threshold:
                self._try_nudge(
                    developer,
                    TRIGGER_COORDINATE,
                    f"{profile.violations_unjustified} unjustified cross-service "
                    f"commits this window; coordinate with the owning teams or "
                    f"tag intentional work.",
                    snapshot.window,
                    result,
                )

    # -- other mutations -----------------------------------------------------------

    def set_team(self, developer: str, team: str) -> None:
        self._record("team", self.last_window, {"developer": developer, "team": team})

    def set_opt_in(self, developer: str, opted_in: bool) -> None:
        kind = "optin" if opted_in else "optout"
        self._record(kind, self.last_window, {"developer": developer})

    def ack_nudge(self, nudge_id: int) -> None:
        if not any(n.id == nudge_id for n in self.nudges):
            raise UnknownNudge(f"no nudge {nudge_id}")
        self._record("nudge_ack", self.last_window, {"nudge_id": nudge_id})

    # -- reads ------------------------------------------------------------------

    def build_leaderboard(
        self, scope: str = "global", trailing: int | None = None
    ) -> list[LeaderboardEntry]:
        """Rank developers by mean points over their last R active windows.

        Global scope lists only opted-in developers. Ties break by earlier
        first contribution, then by id, so the order is always total.
        """
        r = trailing if trailing is not None else self.config.leaderboard_trailing
        if r < 1:
            raise OcgovError("leaderboard needs at least one trailing window")
        if scope == "global":
            eligible = self.optin
        elif scope.startswith("team:"):
            team = scope[len("team:"):]
            if team not in set(self.teams.values()):
                raise UnknownTeam(f"no developers in team {team!r}")
            eligible = {d for d, t in self.teams.items() if t == team}
        else:
            raise UnknownTeam(f"scope must be 'global' or 'team:<id>', got {scope!r}")

        by_dev: dict[str, list[ScoreRecord]] = {}
        for record in self.scores:
            if record.developer in eligible:
                by_dev.setdefault(record.developer, []).append(record)
        keyed = []
        for developer, records in by_dev.items():
            tail = records[-r:]
            mean_points = sum(rec.points for rec in tail) / len(tail)
            keyed.append((developer, mean_points))
        keyed.sort(
            key=lambda e: (-e[1], self.first_ts.get(e[0], math.inf), e[0])
        )
        return [
            LeaderboardEntry(rank=i, developer=d, points=p)
            for i, (d, p) in enumerate(keyed, start=1)
        ]

    def badges_for(self, developer: str) -> list[Badge]:
        return [b for b in self.badges if b.developer == developer]

    def nudges_for(self, developer: str) -> list[NudgeEvent]:
        return [n for n in self.nudges if n.developer == developer]

    # -- persistence hooks -----------------------------------------------------

    def to_dict(self) -> dict:
        return {"config": self.config.to_json_obj(), "events": self.events}

    @classmethod
    def from_dict(cls, data: Mapping) -> "EngineState":
        state = cls(EngineConfig.from_json_obj(data["config"]))
        return replay(state, data["events"])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EngineState):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def replay(state: EngineState, events: Iterable[Mapping]) -> EngineState:
    """Rebuild state by applying a stored event log verbatim."""
    for event in events:
        record = dict(event)
        expected = len(state.events) + 1
        if record.get("seq") != expected:
            raise OcgovError(
                f"event log gap: expected seq {expected}, got {record.get('seq')}"
            )
        state.events.append(record)
        state._apply_event(record)
    return state


def apply_snapshots(
    state: EngineState, snapshots: Sequence[MetricSnapshot]
) -> list[AppliedWindow]:
    """Apply a snapshot series in order; convenience for batch pipelines."""
    return [state.apply_snapshot(s) for s in snapshots]
