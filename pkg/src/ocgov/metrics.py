"""Per-window socio-technical signals over a mined commit history.

Everything here is a pure function of (commits, service map, config). The
signals, all computed per rolling window:

* organizational coupling (OC) per service pair: cosine similarity of the
  two services' contributor-count vectors — bounded, symmetric, and
  invariant under uniform scaling of commit counts;
* organizational cohesion per service: how exclusively a service's
  contributors work on it;
* per-developer profiles: primary service, focus, cross-service
  contribution ratio (CSCR), switching rate, unjustified-violation count;
* ownership stability per service across trailing windows;
* z-scores of developer signals against the developer's own trailing
  baseline, and persistence-gated deviation flags.

Cross-service commits are classified contextually (justified vs
unjustified) instead of being penalized uniformly: keyword-tagged work,
broad platform changes, and commits tied to an active quest covering every
touched service all count as justified.
"""

from __future__ import annotations

import math
import re
from bisect import bisect_left
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence

from .errors import OcgovError
from .ingestion import CommitRecord
from .service_map import CommitFootprint, ServiceMap, map_commits

DAY = 86400

#: Developer signals that get a trailing baseline, z-score and deviation flag.
SIGNALS = ("cscr", "switching", "violation_rate")

_QUEST_TAG_RE = re.compile(r"quest:([A-Za-z0-9_-]+)")


class EmptyHistory(OcgovError):
    """No commits (or a zero-length span) — no windows can be built."""


class SameService(OcgovError):
    """OC is defined for a pair of distinct services."""


class InactiveService(OcgovError):
    """The service has no contributions in this window."""


class NoCommits(OcgovError):
    """A developer profile needs at least one mapped commit in the window."""


class InvalidWindowSpec(OcgovError):
    """Window length/stride out of range."""


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowSpec:
    """Rolling-window geometry: half-open spans aligned to history start."""

    length_days: int = 28
    stride_days: int = 7

    def __post_init__(self) -> None:
        if self.length_days <= 0 or self.stride_days <= 0:
            raise InvalidWindowSpec("length and stride must be positive")
        if self.stride_days > self.length_days:
            raise InvalidWindowSpec("stride must not exceed length")

    @property
    def length_s(self) -> int:
        return self.length_days * DAY

    @property
    def stride_s(self) -> int:
        return self.stride_days * DAY


@dataclass(frozen=True)
class Window:
    index: int
    start: int
    end: int  # exclusive

    def contains(self, timestamp: int) -> bool:
        return self.start <= timestamp < self.end


def build_windows(history_start: int, history_end: int, spec: WindowSpec) -> list[Window]:
    """Enumerate windows: window k spans [start + k*stride, ... + length).

    Windows are generated while their start lies before history_end, so a
    positive span always yields at least one window. Raises EmptyHistory
    for a zero-length span.
    """
    if history_start > history_end:
        raise InvalidWindowSpec("history_start must not exceed history_end")
    if history_start == history_end:
        raise EmptyHistory("zero-length history span")
    windows = []
    k = 0
    while history_start + k * spec.stride_s < history_end:
        start = history_start + k * spec.stride_s
        windows.append(Window(k, start, start + spec.length_s))
        k += 1
    return windows


# ---------------------------------------------------------------------------
# Contribution matrix and the signals defined on it
# ---------------------------------------------------------------------------


@dataclass
class ContributionMatrix:
    """Counts c(d, s): commits by developer d in the window touching s.

    A commit touching k services adds 1 to k cells of its author's row.
    """

    window: int
    counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def c(self, developer: str, service: str) -> int:
        return self.counts.get((developer, service), 0)

    def developers(self) -> list[str]:
        return sorted({d for d, _ in self.counts})

    def services(self) -> list[str]:
        """Active services (those with at least one contribution)."""
        return sorted({s for _, s in self.counts})

    def row_total(self, developer: str) -> int:
        return sum(n for (d, _), n in self.counts.items() if d == developer)

    def column_total(self, service: str) -> int:
        return sum(n for (_, s), n in self.counts.items() if s == service)


def contribution_matrix(
    commits: Sequence[CommitRecord],
    footprints: Mapping[str, CommitFootprint],
    window: Window,
) -> ContributionMatrix:
    """Count per-(developer, service) commits for one window.

    Commits whose footprint touches no mapped service are excluded.
    """
    matrix = ContributionMatrix(window=window.index)
    for commit in commits:
        if not window.contains(commit.timestamp):
            continue
        touched = footprints[commit.hash].touched
        for service in touched:
            key = (commit.author, service)
            matrix.counts[key] = matrix.counts.get(key, 0) + 1
    return matrix


def oc_pair(matrix: ContributionMatrix, s1: str, s2: str) -> float:
    """Organizational coupling between two services.

    Cosine similarity of the services' contributor vectors; 0.0 when either
    service has no contributions in the window.
    """
    if s1 == s2:
        raise SameService(f"oc_pair needs two distinct services, got {s1!r} twice")
    dot = 0.0
    norm1 = 0.0
    norm2 = 0.0
    for developer in matrix.developers():
        a = matrix.c(developer, s1)
        b = matrix.c(developer, s2)
        dot += a * b
        norm1 += a * a
        norm2 += b * b
    if norm1 == 0.0 or norm2 == 0.0:
        return 0.0
    return dot / (math.sqrt(norm1) * math.sqrt(norm2))


def oc_aggregate(matrix: ContributionMatrix) -> tuple[dict[str, float], float]:
    """Per-service and project-level OC.

    oc_service(s) is the mean coupling of s against every other active
    service; oc_project is the mean over all active unordered pairs. A
    window with at most one active service has zero coupling everywhere.
    """
    active = matrix.services()
    if len(active) <= 1:
        return ({s: 0.0 for s in active}, 0.0)
    pair_values = {
        (a, b): oc_pair(matrix, a, b) for a, b in combinations(active, 2)
    }
    per_service = {}
    for s in active:
        others = [pair_values[tuple(sorted((s, o)))] for o in active if o != s]
        per_service[s] = sum(others) / len(others)
    project = sum(pair_values.values()) / len(pair_values)
    return per_service, project


def cohesion(matrix: ContributionMatrix, service: str) -> float:
    """Contribution-weighted focus of a service's contributors on it.

    Equals 1 exactly when every contributor to the service contributes
    nowhere else in the window.
    """
    total = matrix.column_total(service)
    if total == 0:
        raise InactiveService(f"service {service!r} has no contributions")
    value = 0.0
    for developer in matrix.developers():
        count = matrix.c(developer, service)
        if count == 0:
            continue
        share = count / total
        focus_on_service = count / matrix.row_total(developer)
        value += share * focus_on_service
    return value


# ---------------------------------------------------------------------------
# Context classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContextConfig:
    """Knobs for telling justified cross-service work from boundary erosion."""

    justified_keywords: tuple[str, ...] = (
        "refactor",
        "upgrade",
        "infra",
        "incident",
        "migration",
    )
    broad_change_threshold: int = 4

    def __post_init__(self) -> None:
        if self.broad_change_threshold < 2:
            raise InvalidWindowSpec("broad_change_threshold must be >= 2")


@dataclass(frozen=True)
class ActiveQuest:
    """The slice of an active quest that classification needs: id and scope."""

    id: str
    services: frozenset[str]


SINGLE_SERVICE = "single_service"
JUSTIFIED = "justified"
UNJUSTIFIED = "unjustified"


def classify_context(
    commit: CommitRecord,
    footprint: CommitFootprint,
    ctx: ContextConfig,
    active_quests: Sequence[ActiveQuest] = (),
) -> str:
    """Classify a commit as single_service, justified, or unjustified.

    A multi-service commit is justified when its message carries a
    justified keyword, when it is broad enough to count as a platform-wide
    change, or when it is tagged ``quest:<id>`` for an active quest whose
    scope covers every touched service.
    """
    touched = footprint.touched
    if len(touched) <= 1:
        return SINGLE_SERVICE
    message = commit.message.lower()
    if any(keyword in message for keyword in ctx.justified_keywords):
        return JUSTIFIED
    if len(touched) >= ctx.broad_change_threshold:
        return JUSTIFIED
    if active_quests:
        by_id = {q.id: q for q in active_quests}
        for tag in _QUEST_TAG_RE.findall(commit.message):
            quest = by_id.get(tag)
            if quest is not None and touched <= quest.services:
                return JUSTIFIED
    return UNJUSTIFIED


# ---------------------------------------------------------------------------
# Developer profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeveloperWindowProfile:
    developer: str
    n_commits: int
    primary: str
    focus: float
    cscr: float
    switching_rate: float
    violations_unjustified: int
    first_ts: int  # developer's earliest commit timestamp seen so far

    def to_doc(self) -> dict:
        return {
            "developer": self.developer,
            "n_commits": self.n_commits,
            "primary": self.primary,
            "focus": self.focus,
            "cscr": self.cscr,
            "switching_rate": self.switching_rate,
            "violations_unjustified": self.violations_unjustified,
            "first_ts": self.first_ts,
        }


def switching_rate(dominant_sequence: Sequence[tuple[int, str]]) -> float:
    """Rate of dominant-service changes between consecutive contributions.

    The input is the developer's (timestamp, dominant) pairs in store
    order. Entries that repeat the previous timestamp AND dominant collapse
    into one contribution event — simultaneous identical work is a single
    observation, which also makes the rate invariant under commit
    duplication. Returns 0.0 for one or zero events.
    """
    collapsed: list[str] = []
    prev: tuple[int, str] | None = None
    for ts, dominant in dominant_sequence:
        if prev is not None and prev == (ts, dominant):
            continue
        collapsed.append(dominant)
        prev = (ts, dominant)
    if len(collapsed) <= 1:
        return 0.0
    switches = sum(1 for a, b in zip(collapsed, collapsed[1:]) if a != b)
    return switches / (len(collapsed) - 1)


def developer_profile(
    matrix: ContributionMatrix,
    commits: Sequence[CommitRecord],
    footprints: Mapping[str, CommitFootprint],
    ctx: ContextConfig,
    active_quests: Sequence[ActiveQuest] = (),
    first_ts: int | None = None,
) -> DeveloperWindowProfile:
    """Profile one developer's window from their mapped commits (in order).

    *commits* must be this developer's commits inside the window whose
    footprints touch at least one service, sorted by (timestamp, hash).
    """
    if not commits:
        raise NoCommits("developer_profile needs at least one mapped commit")
    developer = commits[0].author
    services = [s for (d, s) in matrix.counts if d == developer]
    primary = min(services, key=lambda s: (-matrix.c(developer, s), s))
    row_total = matrix.row_total(developer)
    focus = matrix.c(developer, primary) / row_total

    cross = 0
    violations = 0
    dominants: list[tuple[int, str]] = []
    for commit in commits:
        fp = footprints[commit.hash]
        if any(s != primary for s in fp.touched):
            cross += 1
        if len(fp.touched) >= 2:
            if classify_context(commit, fp, ctx, active_quests) == UNJUSTIFIED:
                violations += 1
        dominants.append((commit.timestamp, fp.dominant))

    return DeveloperWindowProfile(
        developer=developer,
        n_commits=len(commits),
        primary=primary,
        focus=focus,
        cscr=cross / len(commits),
        switching_rate=switching_rate(dominants),
        violations_unjustified=violations,
        first_ts=first_ts if first_ts is not None else commits[0].timestamp,
    )


# ---------------------------------------------------------------------------
# Trailing baselines, stability, deviation flags
# ---------------------------------------------------------------------------


def ownership_stability(
    matrices: Sequence[ContributionMatrix], service: str
) -> float:
    """Persistence of the service's top contributor across trailing windows.

    Only windows in which the service is active participate; the owner is
    the argmax contributor (lexicographic tie-break). With fewer than two
    active windows the signal is vacuously 1.0.
    """
    owners = []
    for matrix in matrices:
        contributors = [d for (d, s) in matrix.counts if s == service]
        if not contributors:
            continue
        owners.append(min(contributors, key=lambda d: (-matrix.c(d, service), d)))
    if len(owners) < 2:
        return 1.0
    same = sum(1 for a, b in zip(owners, owners[1:]) if a == b)
    return same / (len(owners) - 1)


def baseline_z(prior_values: Sequence[float], current: float, trailing: int = 8) -> float:
    """Deviation of *current* from the trailing project-relative baseline.

    Mean and population standard deviation are taken over up to *trailing*
    immediately preceding values. Cold starts (fewer than two priors) and
    constant signals yield 0.0.
    """
    window = list(prior_values[-trailing:])
    if len(window) < 2:
        return 0.0
    mu = sum(window) / len(window)
    variance = sum((v - mu) ** 2 for v in window) / len(window)
    sigma = math.sqrt(variance)
    if sigma < 1e-9:
        return 0.0
    return (current - mu) / sigma


def detect_deviation(
    z_history: Sequence[float], threshold: float = 2.0, consecutive: int = 2
) -> bool:
    """True iff the most recent *consecutive* z-values all reach *threshold*.

    Persistence gating: a single spike never triggers an intervention.
    """
    if threshold <= 0 or consecutive < 1:
        raise InvalidWindowSpec("threshold must be > 0 and consecutive >= 1")
    if len(z_history) < consecutive:
        return False
    return all(z >= threshold for z in z_history[-consecutive:])


# ---------------------------------------------------------------------------
# Snapshot assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsConfig:
    window: WindowSpec = WindowSpec()
    baseline_trailing: int = 8  # B: prior windows feeding each z-score
    deviation_threshold: float = 2.0
    deviation_consecutive: int = 2
    stability_trailing: int = 4  # K: windows feeding ownership stability
    context: ContextConfig = ContextConfig()

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "MetricsConfig":
        window = obj.get("window", {})
        context = obj.get("context", {})
        return cls(
            window=WindowSpec(
                length_days=window.get("length_days", 28),
                stride_days=window.get("stride_days", 7),
            ),
            baseline_trailing=obj.get("baseline_trailing", 8),
            deviation_threshold=obj.get("deviation_threshold", 2.0),
            deviation_consecutive=obj.get("deviation_consecutive", 2),
            stability_trailing=obj.get("stability_trailing", 4),
            context=ContextConfig(
                justified_keywords=tuple(
                    context.get(
                        "justified_keywords",
                        ContextConfig.justified_keywords,
                    )
                ),
                broad_change_threshold=context.get("broad_change_threshold", 4),
            ),
        )


@dataclass(frozen=True)
class MetricSnapshot:
    """Every per-window signal, ready for the engine and for export."""

    window: int
    start: int
    end: int
    oc_pairs: dict[tuple[str, str], float]
    oc_service: dict[str, float]
    oc_project: float
    cohesion: dict[str, float]
    profiles: dict[str, DeveloperWindowProfile]
    stability: dict[str, float]
    z_scores: dict[tuple[str, str], float]
    deviation_flags: frozenset[tuple[str, str]]

    def to_doc(self) -> dict:
        return {
            "window": self.window,
            "start": self.start,
            "end": self.end,
            "oc_pairs": [
                [a, b, v] for (a, b), v in sorted(self.oc_pairs.items())
            ],
            "oc_service": dict(sorted(self.oc_service.items())),
            "oc_project": self.oc_project,
            "cohesion": dict(sorted(self.cohesion.items())),
            "profiles": {
                d: p.to_doc() for d, p in sorted(self.profiles.items())
            },
            "stability": dict(sorted(self.stability.items())),
            "z_scores": [
                [d, sig, z] for (d, sig), z in sorted(self.z_scores.items())
            ],
            "deviation_flags": [list(f) for f in sorted(self.deviation_flags)],
        }

    @classmethod
    def from_doc(cls, doc: Mapping) -> "MetricSnapshot":
        return cls(
            window=doc["window"],
            start=doc["start"],
            end=doc["end"],
            oc_pairs={(a, b): v for a, b, v in doc["oc_pairs"]},
            oc_service=dict(doc["oc_service"]),
            oc_project=doc["oc_project"],
            cohesion=dict(doc["cohesion"]),
            profiles={
                d: DeveloperWindowProfile(
                    developer=p["developer"],
                    n_commits=p["n_commits"],
                    primary=p["primary"],
                    focus=p["focus"],
                    cscr=p["cscr"],
                    switching_rate=p["switching_rate"],
                    violations_unjustified=p["violations_unjustified"],
                    first_ts=p["first_ts"],
                )
                for d, p in doc["profiles"].items()
            },
            stability=dict(doc["stability"]),
            z_scores={(d, sig): z for d, sig, z in doc["z_scores"]},
            deviation_flags=frozenset(
                (d, sig) for d, sig in doc["deviation_flags"]
            ),
        )


def _profile_signal(profile: DeveloperWindowProfile, signal: str) -> float:
    if signal == "cscr":
        return profile.cscr
    if signal == "switching":
        return profile.switching_rate
    if signal == "violation_rate":
        return profile.violations_unjustified / profile.n_commits
    raise KeyError(signal)


class SnapshotBuilder:
    """Incrementally assembles snapshots, window by window.

    Baselines, deviation flags, and ownership stability depend on prior
    windows, so snapshots must be produced in window order. The builder
    carries exactly that trailing state; it is the single code path used by
    both the batch pipeline and the simulator's closed loop.
    """

    def __init__(self, cfg: MetricsConfig) -> None:
        self.cfg = cfg
        self._matrices: list[ContributionMatrix] = []
        self._values: dict[tuple[str, str], list[float]] = {}
        self._zs: dict[tuple[str, str], list[float]] = {}
        self._first_ts: dict[str, int] = {}
        self._next_index = 0

    def add_window(
        self,
        window: Window,
        commits: Sequence[CommitRecord],
        footprints: Mapping[str, CommitFootprint],
        active_quests: Sequence[ActiveQuest] = (),
    ) -> MetricSnapshot:
        if window.index != self._next_index:
            raise InvalidWindowSpec(
                f"windows must be added in order; expected {self._next_index}, "
                f"got {window.index}"
            )
        self._next_index += 1

        mapped = [
            c
            for c in commits
            if window.contains(c.timestamp) and footprints[c.hash].touched
        ]
        for commit in mapped:
            prev = self._first_ts.get(commit.author)
            if prev is None or commit.timestamp < prev:
                self._first_ts[commit.author] = commit.timestamp

        matrix = contribution_matrix(mapped, footprints, window)
        self._matrices.append(matrix)

        oc_service, oc_project = oc_aggregate(matrix)
        active = matrix.services()
        pairs = {
            (a, b): oc_pair(matrix, a, b) for a, b in combinations(active, 2)
        }
        cohesion_by_service = {s: cohesion(matrix, s) for s in active}

        by_dev: dict[str, list[CommitRecord]] = {}
        for commit in mapped:
            by_dev.setdefault(commit.author, []).append(commit)
        profiles = {
            d: developer_profile(
                matrix,
                dev_commits,
                footprints,
                self.cfg.context,
                active_quests,
                first_ts=self._first_ts[d],
            )
            for d, dev_commits in by_dev.items()
        }

        trailing = self._matrices[-self.cfg.stability_trailing :]
        stability_services = sorted({s for m in trailing for _, s in m.counts})
        stability = {
            s: ownership_stability(trailing, s) for s in stability_services
        }

        z_scores: dict[tuple[str, str], float] = {}
        flags: set[tuple[str, str]] = set()
        for d in sorted(profiles):
            for signal in SIGNALS:
                value = _profile_signal(profiles[d], signal)
                key = (d, signal)
                prior = self._values.setdefault(key, [])
                z = baseline_z(prior, value, self.cfg.baseline_trailing)
                prior.append(value)
                z_history = self._zs.setdefault(key, [])
                z_history.append(z)
                z_scores[key] = z
                if detect_deviation(
                    z_history,
                    self.cfg.deviation_threshold,
                    self.cfg.deviation_consecutive,
                ):
                    flags.add(key)

        return MetricSnapshot(
            window=window.index,
            start=window.start,
            end=window.end,
            oc_pairs=pairs,
            oc_service=oc_service,
            oc_project=oc_project,
            cohesion=cohesion_by_service,
            profiles=profiles,
            stability=stability,
            z_scores=z_scores,
            deviation_flags=frozenset(flags),
        )


def compute_snapshots(
    commits: Sequence[CommitRecord],
    smap: ServiceMap,
    cfg: MetricsConfig = MetricsConfig(),
    *,
    history_start: int | None = None,
    history_end: int | None = None,
    active_quests_for: Callable[[int], Sequence[ActiveQuest]] | None = None,
) -> list[MetricSnapshot]:
    """Run the whole signal pipeline over a commit store.

    The history span defaults to [min ts, max ts + 1) so the last commit
    always lands inside a window. *active_quests_for* lets a closed-loop
    caller supply the quests active at the start of each window; the batch
    pipeline classifies without quest context.
    """
    if not commits:
        raise EmptyHistory("no commits in store")
    ordered = sorted(commits, key=lambda c: (c.timestamp, c.hash))
    footprints = map_commits(smap, ordered)
    start = history_start if history_start is not None else ordered[0].timestamp
    end = history_end if history_end is not None else ordered[-1].timestamp + 1
    windows = build_windows(start, end, cfg.window)

    timestamps = [c.timestamp for c in ordered]
    builder = SnapshotBuilder(cfg)
    snapshots = []
    for window in windows:
        lo = bisect_left(timestamps, window.start)
        hi = bisect_left(timestamps, window.end)
        quests = active_quests_for(window.index) if active_quests_for else ()
        snapshots.append(
            builder.add_window(window, ordered[lo:hi], footprints, quests)
        )
    return snapshots


def iter_csv_rows(snapshots: Iterable[MetricSnapshot]):
    """Flatten snapshots into (window, entity_kind, entity, signal, value) rows."""
    for snap in snapshots:
        yield (snap.window, "project", "", "oc_project", snap.oc_project)
        for (a, b), v in sorted(snap.oc_pairs.items()):
            yield (snap.window, "pair", f"{a}|{b}", "oc", v)
        for s, v in sorted(snap.oc_service.items()):
            yield (snap.window, "service", s, "oc_service", v)
        for s, v in sorted(snap.cohesion.items()):
            yield (snap.window, "service", s, "cohesion", v)
        for s, v in sorted(snap.stability.items()):
            yield (snap.window, "service", s, "stability", v)
        for d, p in sorted(snap.profiles.items()):
            yield (snap.window, "developer", d, "focus", p.focus)
            yield (snap.window, "developer", d, "cscr", p.cscr)
            yield (snap.window, "developer", d, "switching", p.switching_rate)
            yield (
                snap.window,
                "developer",
                d,
                "violation_rate",
                p.violations_unjustified / p.n_commits,
            )
        for (d, sig), z in sorted(snap.z_scores.items()):
            yield (snap.window, "developer", d, f"z_{sig}", z)
            flagged = (d, sig) in snap.deviation_flags
            yield (snap.window, "developer", d, f"flag_{sig}", 1.0 if flagged else 0.0)
