from __future__ import annotations

import pytest

from ocgov.ingestion import CommitRecord
from ocgov.metrics import MetricsConfig, compute_snapshots
from ocgov.service_map import ServiceMap, compile_rules


def fixture_hash(seed: str) -> str:
    """A syntactically valid 40-hex hash built from a short hex seed."""
    return (seed * 40)[:40]


def s0_commits() -> list[CommitRecord]:
    """The canonical two-developer desk fixture used across modules.

    Services A and B; six commits in order (d1,A),(d1,A),(d1,B),(d2,B),
    (d2,B),(d1,A), all inside one window.
    """
    rows = [
        ("a", "d1", 1000, "svc-a/f"),
        ("b", "d1", 2000, "svc-a/f"),
        ("c", "d1", 3000, "svc-b/f"),
        ("d", "d2", 4000, "svc-b/f"),
        ("e", "d2", 5000, "svc-b/f"),
        ("f", "d1", 6000, "svc-a/f"),
    ]
    return [
        CommitRecord(fixture_hash(h), dev, ts, (path,), f"change {h}")
        for h, dev, ts, path in rows
    ]


def s0_service_map() -> ServiceMap:
    return compile_rules([("svc-a/**", "A"), ("svc-b/**", "B")])


def s0_log_text() -> str:
    """The S0 fixture in the ingestion log format."""
    blocks = []
    for c in s0_commits():
        blocks.append(
            f"COMMIT\t{c.hash}\t{c.author}\t{c.timestamp}\n"
            f"MSG\t{c.message}\n" + "\n".join(c.paths)
        )
    return "\n\n".join(blocks) + "\n"


@pytest.fixture
def s0():
    return s0_commits()


@pytest.fixture
def s0_map():
    return s0_service_map()


@pytest.fixture
def s0_snapshots(s0, s0_map):
    return compute_snapshots(s0, s0_map, MetricsConfig())
