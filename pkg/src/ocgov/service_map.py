"""Path-to-service mapping and per-commit service footprints.

A service map is an ordered list of (glob pattern, service name) rules;
the first matching rule wins. Globs follow the usual path semantics:
``*`` and ``?`` never cross ``/``, ``**`` does. Paths matching no rule
fall to the optional default service, or count as unmapped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import OcgovError
from .ingestion import CommitRecord


class InvalidPattern(OcgovError):
    def __init__(self, index: int, pattern: str, detail: str) -> None:
        super().__init__(f"rule {index}: invalid pattern {pattern!r}: {detail}")
        self.index = index


class DuplicateRule(OcgovError):
    def __init__(self, index: int, pattern: str, service: str) -> None:
        super().__init__(f"rule {index}: duplicate ({pattern!r}, {service!r})")
        self.index = index


def _translate_glob(pattern: str) -> re.Pattern:
    """Compile a path glob into a regex.

    ``**/`` matches zero or more whole segments, a bare ``**`` matches any
    remainder, ``*`` and ``?`` stay within one segment.
    """
    out = []
    i = 0
    n = len(pattern)
    while i < n:
        ch = pattern[i]
        if ch == "*":
            if pattern[i : i + 2] == "**":
                if pattern[i : i + 3] == "**/":
                    out.append("(?:[^/]*/)*")
                    i += 3
                else:
                    out.append(".*")
                    i += 2
                continue
            out.append("[^/]*")
        elif ch == "?":
            out.append("[^/]")
        else:
            out.append(re.escape(ch))
        i += 1
    return re.compile("".join(out) + r"\Z")


@dataclass(frozen=True)
class ServiceMap:
    """Ordered first-match-wins mapping from repository paths to services."""

    rules: tuple[tuple[str, str], ...]
    default: str | None = None

    def __post_init__(self) -> None:
        compiled = tuple(_translate_glob(p) for p, _ in self.rules)
        object.__setattr__(self, "_compiled", compiled)

    def service_for(self, path: str) -> str | None:
        """Service owning *path*, the default if no rule matches, else None."""
        for regex, (_, name) in zip(self._compiled, self.rules):
            if regex.match(path):
                return name
        return self.default

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ServiceMap":
        raw = [(rule["pattern"], rule["service"]) for rule in obj["rules"]]
        return compile_rules(raw, default=obj.get("default"))


@dataclass(frozen=True)
class CommitFootprint:
    """Which services one commit touches, and which of them dominates."""

    hash: str
    touched: frozenset[str]
    dominant: str | None
    unmapped_count: int


def compile_rules(
    raw: Sequence[tuple[str, str]], default: str | None = None
) -> ServiceMap:
    """Validate and compile rules, keeping their order.

    Raises InvalidPattern / DuplicateRule with the 1-based rule index.
    """
    if not raw:
        raise InvalidPattern(0, "", "at least one rule is required")
    seen: set[tuple[str, str]] = set()
    for i, (pattern, service) in enumerate(raw, start=1):
        if pattern == "":
            raise InvalidPattern(i, pattern, "empty pattern")
        if "***" in pattern:
            raise InvalidPattern(i, pattern, "more than two consecutive stars")
        if not service:
            raise InvalidPattern(i, pattern, "empty service name")
        key = (pattern, service)
        if key in seen:
            raise DuplicateRule(i, pattern, service)
        seen.add(key)
    return ServiceMap(rules=tuple(raw), default=default)


def map_commit(smap: ServiceMap, commit: CommitRecord) -> CommitFootprint:
    """Compute the commit's footprint: touched services and the dominant one.

    Dominant is the service with the most changed files in this commit,
    ties broken by lexicographically smallest name.
    """
    counts: dict[str, int] = {}
    unmapped = 0
    for path in commit.paths:
        service = smap.service_for(path)
        if service is None:
            unmapped += 1
        else:
            counts[service] = counts.get(service, 0) + 1
    if not counts:
        return CommitFootprint(commit.hash, frozenset(), None, unmapped)
    dominant = min(counts, key=lambda s: (-counts[s], s))
    return CommitFootprint(commit.hash, frozenset(counts), dominant, unmapped)


def map_commits(
    smap: ServiceMap, commits: Iterable[CommitRecord]
) -> dict[str, CommitFootprint]:
    """Footprint every commit, keyed by hash."""
    return {c.hash: map_commit(smap, c) for c in commits}


def coverage_ratio(
    commits: Iterable[CommitRecord], footprints: Mapping[str, CommitFootprint]
) -> float:
    """Fraction of changed paths that mapped to some service.

    Guards metric validity: runs below 0.8 should be treated as suspect
    (the CLI warns). Returns 1.0 for an empty history.
    """
    total = 0
    unmapped = 0
    for c in commits:
        total += len(c.paths)
        unmapped += footprints[c.hash].unmapped_count
    if total == 0:
        return 1.0
    return (total - unmapped) / total


LOW_COVERAGE_THRESHOLD = 0.8
