"""Agent-based simulation of contribution behavior under governance arms.

Four arms share one seeded commit-stream intent (paired design):

* ``control`` — agents never adapt;
* ``metrics`` — agents that were nudged, penalized, or covered by an
  active quest in the previous window sharpen toward their home service
  with a small responsiveness;
* ``policy`` — a hard ownership rule: after the cap-th multi-service
  commit in a window, an agent's further commits are forced single-service
  on home;
* ``gamified`` — like ``metrics`` but with a larger responsiveness and a
  standing coupling-reduction quest covering all agents.

Synthetic commits flow through the real metrics and engine modules — the
simulation exercises the full closed loop, not a shortcut model.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, TextIO

from .engine import AppliedWindow, EngineConfig, EngineState, QuestSpec
from .errors import OcgovError
from .ingestion import CommitRecord
from .metrics import (
    DAY,
    MetricsConfig,
    MetricSnapshot,
    SnapshotBuilder,
    Window,
    WindowSpec,
)
from .rng import Stream, substream
from .service_map import ServiceMap, compile_rules, map_commits

ARMS = ("control", "metrics", "policy", "gamified")
TRACKED_METRICS = ("switching", "cscr", "oc_project", "stability")

_AGENT_TS_SLOT = 1000  # per-agent timestamp slot inside a window, in seconds


class BadConfig(OcgovError):
    pass


class LengthMismatch(OcgovError):
    pass


@dataclass(frozen=True)
class AgentProfile:
    """Fixed behavioral parameters of one synthetic developer."""

    id: str
    home: str
    base_focus: float  # initial probability mass on the home service
    rate: int  # expected commits per window
    multi_p: float  # initial probability of touching a second service
    responsiveness: float = 0.0  # per-arm sharpening strength


@dataclass
class AgentState:
    """The part of an agent that feedback evolves."""

    p_home: float
    multi_p: float

    def sharpen(self, rho: float) -> None:
        self.p_home = self.p_home + rho * (1.0 - self.p_home)
        self.multi_p = self.multi_p * (1.0 - rho)


@dataclass(frozen=True)
class SimConfig:
    service_count: int = 4
    agent_count: int = 12
    windows: int = 30
    seed: int = 20260809
    rho_control: float = 0.0
    rho_metrics: float = 0.05
    rho_gamified: float = 0.15
    k_cap: int = 1
    replications: int = 20
    window_days: int = 7
    beta_range: tuple[float, float] = (0.6, 0.9)
    lambda_range: tuple[float, float] = (3.0, 10.0)
    m_range: tuple[float, float] = (0.1, 0.4)
    auto_quest: bool = True
    quest_target: float = 0.15
    arms: tuple[str, ...] = ARMS

    def validate(self) -> None:
        if self.service_count < 1:
            raise BadConfig("service_count must be positive")
        if self.agent_count < 1:
            raise BadConfig("agent_count must be positive")
        if self.agent_count > 500:
            raise BadConfig("agent_count above 500 exceeds the timestamp layout")
        if self.windows < 1 or self.replications < 1 or self.window_days < 1:
            raise BadConfig("windows, replications and window_days must be positive")
        if self.k_cap < 0:
            raise BadConfig("k_cap must be non-negative")
        for rho in (self.rho_control, self.rho_metrics, self.rho_gamified):
            if not 0.0 <= rho < 1.0:
                raise BadConfig("responsiveness must lie in [0, 1)")
        lo, hi = self.beta_range
        if not (0.0 < lo <= hi <= 1.0):
            raise BadConfig("beta_range must lie in (0, 1]")
        lo, hi = self.m_range
        if not (0.0 <= lo <= hi < 1.0):
            raise BadConfig("m_range must lie in [0, 1)")
        if not 0.0 < self.lambda_range[0] <= self.lambda_range[1]:
            raise BadConfig("lambda_range must be positive")
        unknown = set(self.arms) - set(ARMS)
        if unknown:
            raise BadConfig(f"unknown arms: {sorted(unknown)}")

    def rho_for(self, arm: str) -> float:
        if arm == "metrics":
            return self.rho_metrics
        if arm == "gamified":
            return self.rho_gamified
        return self.rho_control

    @property
    def window_seconds(self) -> int:
        return self.window_days * DAY

    def service_names(self) -> list[str]:
        return [f"s{i + 1}" for i in range(self.service_count)]

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "SimConfig":
        kwargs = dict(obj)
        for key in ("beta_range", "lambda_range", "m_range", "arms"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@dataclass
class ArmResult:
    """Per-arm outcome trajectories, per replication and averaged."""

    arm: str
    windows: int
    replication_series: dict[str, list[list[float]]] = field(default_factory=dict)
    mean_series: dict[str, list[float]] = field(default_factory=dict)
    final: dict[str, float] = field(default_factory=dict)


def init_population(cfg: SimConfig, replication: int = 0) -> list[AgentProfile]:
    """Seeded agent population; identical across arms for a given seed.

    Homes are assigned round-robin over the services; behavioral parameters
    come from the dedicated population substream.
    """
    cfg.validate()
    services = cfg.service_names()
    stream = substream(cfg.seed, "population", replication)
    agents = []
    for i in range(cfg.agent_count):
        beta = stream.uniform_in(*cfg.beta_range)
        lam = int(math.floor(stream.uniform_in(*cfg.lambda_range) + 0.5))
        multi = stream.uniform_in(*cfg.m_range)
        agents.append(
            AgentProfile(
                id=f"a{i + 1:03d}",
                home=services[i % cfg.service_count],
                base_focus=beta,
                rate=max(1, lam),
                multi_p=multi,
            )
        )
    return agents


def _commit_hash(replication: int, window: int, agent: str, index: int) -> str:
    key = f"{replication}:{window}:{agent}:{index}".encode()
    return hashlib.sha1(key).hexdigest()


def _draw_service(services: Sequence[str], home: str, p_home: float, u: float) -> str:
    if len(services) == 1:
        return home
    if u < p_home:
        return home
    others = [s for s in services if s != home]
    spread = (u - p_home) / (1.0 - p_home) if p_home < 1.0 else 0.0
    return others[min(int(spread * len(others)), len(others) - 1)]


def step(
    population: Sequence[AgentProfile],
    states: Sequence[AgentState],
    arm: str,
    feedback: set[str],
    cfg: SimConfig,
    replication: int,
    window_index: int,
) -> list[CommitRecord]:
    """Emit one window of synthetic commits for every agent.

    Feedback from the previous window is applied first (metrics/gamified
    arms only; the control arm's responsiveness is zero by construction).
    Every commit consumes a fixed number of draws from its agent's
    substream so that arms stay paired regardless of behavior.
    """
    services = cfg.service_names()
    rho = cfg.rho_for(arm)
    window_start = window_index * cfg.window_seconds
    commits: list[CommitRecord] = []
    for a_idx, (agent, state) in enumerate(zip(population, states)):
        if rho > 0.0 and agent.id in feedback:
            state.sharpen(rho)
        stream = substream(cfg.seed, "window", replication, window_index, agent.id)
        n_commits = stream.poisson(agent.rate)
        multi_seen = 0
        for i in range(n_commits):
            u_dominant = stream.uniform()
            u_multi = stream.uniform()
            u_second = stream.uniform()
            dominant = _draw_service(services, agent.home, state.p_home, u_dominant)
            multi = len(services) > 1 and u_multi < state.multi_p
            if arm == "policy" and multi_seen >= cfg.k_cap:
                dominant = agent.home
                multi = False
            paths = [f"{dominant}/core", f"{dominant}/extra"]
            if multi:
                others = [s for s in services if s != dominant]
                second = others[min(int(u_second * len(others)), len(others) - 1)]
                paths.append(f"{second}/core")
                multi_seen += 1
            commits.append(
                CommitRecord(
                    hash=_commit_hash(replication, window_index, agent.id, i),
                    author=agent.id,
                    timestamp=window_start + a_idx * _AGENT_TS_SLOT + i,
                    paths=tuple(paths),
                    message="work",
                )
            )
    return commits


def _service_map_for(cfg: SimConfig) -> ServiceMap:
    return compile_rules([(f"{name}/**", name) for name in cfg.service_names()])


def _standing_quest(cfg: SimConfig, population: Sequence[AgentProfile]) -> QuestSpec:
    services = cfg.service_names()
    return QuestSpec(
        title=f"Reduce coupling between {services[0]} and {services[1]}",
        metric="oc_pair",
        scope_services=frozenset(services[:2]),
        scope_developers=frozenset(a.id for a in population),
        comparator="<=",
        target=cfg.quest_target,
        target_kind="absolute",
        deadline=cfg.windows,
    )


def _feedback_from(applied: AppliedWindow, engine: EngineState) -> set[str]:
    touched = {n.developer for n in applied.nudges}
    touched |= {s.developer for s in applied.scores if s.penalty_applied}
    for quest in engine.active_quests():
        touched |= set(quest.scope_developers)
    return touched


def _window_aggregates(snapshot: MetricSnapshot) -> dict[str, float]:
    profiles = snapshot.profiles.values()
    n = len(snapshot.profiles)
    switching = sum(p.switching_rate for p in profiles) / n if n else 0.0
    cscr = sum(p.cscr for p in profiles) / n if n else 0.0
    stability_values = list(snapshot.stability.values())
    stability = (
        sum(stability_values) / len(stability_values) if stability_values else 1.0
    )
    return {
        "switching": switching,
        "cscr": cscr,
        "oc_project": snapshot.oc_project,
        "stability": stability,
    }


def _enforce_window_cap(
    cfg: SimConfig, commits: Sequence[CommitRecord], window_index: int
) -> None:
    per_agent: dict[str, int] = {}
    for commit in commits:
        services = {p.split("/", 1)[0] for p in commit.paths}
        if len(services) > 1:
            per_agent[commit.author] = per_agent.get(commit.author, 0) + 1
    for agent, count in per_agent.items():
        if count > cfg.k_cap:
            raise OcgovError(
                f"policy cap violated: {agent} emitted {count} multi-service "
                f"commits in window {window_index}"
            )


def run_replication(
    cfg: SimConfig,
    arm: str,
    replication: int,
    commits_sink: list[CommitRecord] | None = None,
) -> dict[str, list[float]]:
    """One arm, one replication: T windows through real metrics and engine."""
    population = init_population(cfg, replication)
    rho = cfg.rho_for(arm)
    population = [replace(a, responsiveness=rho) for a in population]
    states = [AgentState(p_home=a.base_focus, multi_p=a.multi_p) for a in population]
    smap = _service_map_for(cfg)
    metrics_cfg = MetricsConfig(
        window=WindowSpec(length_days=cfg.window_days, stride_days=cfg.window_days)
    )
    builder = SnapshotBuilder(metrics_cfg)
    use_engine = arm in ("metrics", "gamified")
    engine = EngineState(EngineConfig()) if use_engine else None

    feedback: set[str] = set()
    series: dict[str, list[float]] = {m: [] for m in TRACKED_METRICS}
    for w in range(cfg.windows):
        commits = step(population, states, arm, feedback, cfg, replication, w)
        if arm == "policy":
            _enforce_window_cap(cfg, commits, w)
        if commits_sink is not None:
            commits_sink.extend(commits)
        footprints = map_commits(smap, commits)
        quests = engine.active_quest_context() if engine else ()
        window = Window(w, w * cfg.window_seconds, (w + 1) * cfg.window_seconds)
        snapshot = builder.add_window(window, commits, footprints, quests)
        if engine is not None:
            applied = engine.apply_snapshot(snapshot)
            if (
                arm == "gamified"
                and w == 0
                and cfg.auto_quest
                and cfg.service_count >= 2
            ):
                engine.create_quest(_standing_quest(cfg, population), snapshot)
            feedback = _feedback_from(applied, engine)
        for metric, value in _window_aggregates(snapshot).items():
            series[metric].append(value)
    return series


def run_experiment(cfg: SimConfig = SimConfig()) -> dict[str, ArmResult]:
    """Run every configured arm across all replications."""
    cfg.validate()
    results: dict[str, ArmResult] = {}
    for arm in cfg.arms:
        result = ArmResult(arm=arm, windows=cfg.windows)
        per_rep = {m: [] for m in TRACKED_METRICS}
        for rep in range(cfg.replications):
            series = run_replication(cfg, arm, rep)
            for metric in TRACKED_METRICS:
                per_rep[metric].append(series[metric])
        result.replication_series = per_rep
        for metric in TRACKED_METRICS:
            means = [
                sum(rep[w] for rep in per_rep[metric]) / cfg.replications
                for w in range(cfg.windows)
            ]
            result.mean_series[metric] = means
            result.final[metric] = means[-1]
        results[arm] = result
    return results


def compare_arms(results: Mapping[str, ArmResult]) -> dict:
    """Final-window deltas vs control, relative reductions, and orderings."""
    if len(results) < 2:
        raise LengthMismatch("need at least two arms to compare")
    lengths = {r.windows for r in results.values()}
    if len(lengths) != 1:
        raise LengthMismatch(f"arms ran different window counts: {sorted(lengths)}")
    control = results.get("control")
    summary: dict = {"windows": lengths.pop(), "metrics": {}}
    for metric in TRACKED_METRICS:
        finals = {arm: r.final[metric] for arm, r in results.items()}
        entry: dict = {
            "final": finals,
            "ordering": sorted(finals, key=lambda a: (finals[a], a)),
        }
        if control is not None:
            base = control.final[metric]
            entry["delta_vs_control"] = {
                arm: finals[arm] - base for arm in finals
            }
            entry["relative_reduction_pct"] = {
                arm: (100.0 * (base - finals[arm]) / base) if base != 0 else None
                for arm in finals
            }
        summary["metrics"][metric] = entry
    return summary


def write_results_csv(results: Mapping[str, ArmResult], fh: TextIO) -> None:
    """Emit (arm, replication, window, metric, value) rows; bit-stable."""
    fh.write("arm,replication,window,metric,value\n")
    for arm, result in results.items():
        for metric in TRACKED_METRICS:
            for rep, series in enumerate(result.replication_series[metric]):
                for w, value in enumerate(series):
                    fh.write(f"{arm},{rep},{w},{metric},{value!r}\n")


def check_policy_cap(cfg: SimConfig, commits: Iterable[CommitRecord]) -> int:
    """Count cap violations in a policy-arm commit stream (must be zero).

    A violation is an agent emitting more than k_cap multi-service commits
    within one window.
    """
    per_key: dict[tuple[str, int], int] = {}
    for commit in commits:
        window = commit.timestamp // cfg.window_seconds
        services = {p.split("/", 1)[0] for p in commit.paths}
        if len(services) > 1:
            key = (commit.author, window)
            per_key[key] = per_key.get(key, 0) + 1
    return sum(1 for count in per_key.values() if count > cfg.k_cap)
