from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from ocgov.ingestion import CommitRecord
from ocgov.metrics import (
    DAY,
    ActiveQuest,
    ContextConfig,
    ContributionMatrix,
    EmptyHistory,
    InactiveService,
    MetricSnapshot,
    MetricsConfig,
    NoCommits,
    SameService,
    Window,
    WindowSpec,
    baseline_z,
    build_windows,
    classify_context,
    cohesion,
    compute_snapshots,
    contribution_matrix,
    detect_deviation,
    developer_profile,
    oc_aggregate,
    oc_pair,
    ownership_stability,
    switching_rate,
)
from ocgov.service_map import compile_rules, map_commits

from conftest import fixture_hash, s0_commits, s0_service_map
from instances import assert_matches_oracle, make_instance, run_pipeline

OC_S0 = 0.4472135954999579  # 3 / (3 * sqrt(5))


# -- windows ------------------------------------------------------------------


def test_windows_non_overlapping_when_stride_equals_length():
    windows = build_windows(0, 56 * DAY, WindowSpec(28, 28))
    assert len(windows) == 2
    assert windows[0].end == windows[1].start


def test_windows_overlapping_weekly_stride():
    windows = build_windows(0, 28 * DAY, WindowSpec(28, 7))
    assert [w.start for w in windows] == [0, 7 * DAY, 14 * DAY, 21 * DAY]


def test_short_history_gets_one_window():
    windows = build_windows(0, DAY, WindowSpec(28, 7))
    assert len(windows) == 1
    assert windows[0].contains(0)


def test_zero_span_is_empty_history():
    with pytest.raises(EmptyHistory):
        build_windows(100, 100, WindowSpec())


def test_invalid_window_spec():
    with pytest.raises(Exception):
        WindowSpec(length_days=7, stride_days=14)


@given(
    span_days=st.integers(min_value=1, max_value=90),
    length=st.integers(min_value=1, max_value=30),
    stride_frac=st.integers(min_value=1, max_value=30),
    ts_offset=st.integers(min_value=0, max_value=90 * DAY),
)
def test_commit_belongs_to_boundedly_many_windows(
    span_days, length, stride_frac, ts_offset
):
    stride = min(stride_frac, length)
    spec = WindowSpec(length, stride)
    end = span_days * DAY
    windows = build_windows(0, end, spec)
    ts = ts_offset % end
    containing = [w for w in windows if w.contains(ts)]
    assert len(containing) <= -(-length // stride)  # ceil


# -- contribution matrix ---------------------------------------------------------


def make_matrix(entries: dict) -> ContributionMatrix:
    return ContributionMatrix(window=0, counts=dict(entries))


def test_s0_matrix_counts(s0, s0_map):
    footprints = map_commits(s0_map, s0)
    window = Window(0, 0, 10_000)
    matrix = contribution_matrix(s0, footprints, window)
    assert matrix.c("d1", "A") == 3
    assert matrix.c("d1", "B") == 1
    assert matrix.c("d2", "B") == 2


def test_empty_window_gives_zero_matrix(s0, s0_map):
    footprints = map_commits(s0_map, s0)
    matrix = contribution_matrix(s0, footprints, Window(0, 50_000, 60_000))
    assert matrix.counts == {}


def test_multi_touch_commit_counts_once_per_service():
    commit = CommitRecord(fixture_hash("a"), "d", 5, ("svc-a/f", "svc-b/f"))
    smap = compile_rules([("svc-a/**", "A"), ("svc-b/**", "B")])
    matrix = contribution_matrix(
        [commit], map_commits(smap, [commit]), Window(0, 0, 10)
    )
    assert matrix.c("d", "A") == 1
    assert matrix.c("d", "B") == 1


# -- OC -----------------------------------------------------------------------


def test_oc_disjoint_contributors_is_zero():
    matrix = make_matrix({("d1", "A"): 3, ("d2", "B"): 5})
    assert oc_pair(matrix, "A", "B") == 0.0


def test_oc_identical_vectors_is_one():
    matrix = make_matrix({("d1", "A"): 2, ("d1", "B"): 2, ("d2", "A"): 3, ("d2", "B"): 3})
    assert oc_pair(matrix, "A", "B") == pytest.approx(1.0, abs=1e-12)


def test_oc_s0_value():
    matrix = make_matrix({("d1", "A"): 3, ("d1", "B"): 1, ("d2", "B"): 2})
    assert oc_pair(matrix, "A", "B") == pytest.approx(OC_S0, abs=1e-9)


def test_oc_same_service_rejected():
    with pytest.raises(SameService):
        oc_pair(make_matrix({("d", "A"): 1}), "A", "A")


@given(
    counts=st.dictionaries(
        st.tuples(st.sampled_from("de"), st.sampled_from("ABC")),
        st.integers(min_value=1, max_value=9),
        max_size=6,
    ),
    k=st.integers(min_value=2, max_value=5),
)
def test_oc_symmetric_bounded_scale_invariant(counts, k):
    matrix = make_matrix(counts)
    scaled = make_matrix({key: n * k for key, n in counts.items()})
    services = matrix.services()
    for i in range(len(services)):
        for j in range(i + 1, len(services)):
            a, b = services[i], services[j]
            value = oc_pair(matrix, a, b)
            assert 0.0 <= value <= 1.0 + 1e-12
            assert value == pytest.approx(oc_pair(matrix, b, a), abs=1e-12)
            assert value == pytest.approx(oc_pair(scaled, a, b), abs=1e-12)


def test_oc_aggregate_single_service_is_zero():
    per_service, project = oc_aggregate(make_matrix({("d", "A"): 4}))
    assert per_service == {"A": 0.0}
    assert project == 0.0


def test_oc_aggregate_s0():
    matrix = make_matrix({("d1", "A"): 3, ("d1", "B"): 1, ("d2", "B"): 2})
    per_service, project = oc_aggregate(matrix)
    assert per_service["A"] == pytest.approx(OC_S0, abs=1e-9)
    assert per_service["B"] == pytest.approx(OC_S0, abs=1e-9)
    assert project == pytest.approx(OC_S0, abs=1e-9)


def test_oc_aggregate_three_services_mean_third():
    # A and B share their only contributor, C is disjoint: pair OCs {1, 0, 0}.
    matrix = make_matrix({("d1", "A"): 1, ("d1", "B"): 1, ("d2", "C"): 1})
    _, project = oc_aggregate(matrix)
    assert project == pytest.approx(1 / 3, abs=1e-9)


# -- cohesion ---------------------------------------------------------------------


def test_cohesion_exclusive_contributor_is_one():
    assert cohesion(make_matrix({("d", "s"): 7}), "s") == pytest.approx(1.0)


def test_cohesion_s0_values():
    matrix = make_matrix({("d1", "A"): 3, ("d1", "B"): 1, ("d2", "B"): 2})
    assert cohesion(matrix, "A") == pytest.approx(0.75, abs=1e-9)
    assert cohesion(matrix, "B") == pytest.approx(0.75, abs=1e-9)


def test_cohesion_inactive_service_rejected():
    with pytest.raises(InactiveService):
        cohesion(make_matrix({("d", "A"): 1}), "B")


@given(
    counts=st.dictionaries(
        st.tuples(st.sampled_from("def"), st.sampled_from("AB")),
        st.integers(min_value=1, max_value=9),
        min_size=1,
        max_size=6,
    ),
    extra=st.integers(min_value=1, max_value=9),
)
def test_adding_exclusive_contributor_never_decreases_cohesion(counts, extra):
    if ("x", "A") in counts:
        return
    matrix = make_matrix(counts)
    if matrix.column_total("A") == 0:
        return
    before = cohesion(matrix, "A")
    grown = make_matrix({**counts, ("x", "A"): extra})
    assert cohesion(grown, "A") >= before - 1e-12


# -- profiles ---------------------------------------------------------------------


def profile_for(commits, services):
    smap = compile_rules([(f"svc-{s.lower()}/**", s) for s in services])
    footprints = map_commits(smap, commits)
    window = Window(0, 0, 100_000)
    matrix = contribution_matrix(commits, footprints, window)
    return developer_profile(matrix, commits, footprints, ContextConfig())


def test_s0_profiles(s0, s0_map):
    footprints = map_commits(s0_map, s0)
    window = Window(0, 0, 10_000)
    matrix = contribution_matrix(s0, footprints, window)
    d1_commits = [c for c in s0 if c.author == "d1"]
    p1 = developer_profile(matrix, d1_commits, footprints, ContextConfig())
    assert p1.primary == "A"
    assert p1.focus == pytest.approx(0.75)
    assert p1.cscr == pytest.approx(0.25)
    assert p1.switching_rate == pytest.approx(2 / 3)
    d2_commits = [c for c in s0 if c.author == "d2"]
    p2 = developer_profile(matrix, d2_commits, footprints, ContextConfig())
    assert p2.primary == "B"
    assert p2.focus == 1.0
    assert p2.cscr == 0.0
    assert p2.switching_rate == 0.0


def test_single_commit_developer_has_zero_switching():
    commits = [CommitRecord(fixture_hash("9"), "solo", 10, ("svc-a/f",))]
    assert profile_for(commits, ["A"]).switching_rate == 0.0


def test_profile_requires_commits():
    with pytest.raises(NoCommits):
        developer_profile(make_matrix({}), [], {}, ContextConfig())


def test_switching_collapses_simultaneous_duplicates():
    seq = [(1, "A"), (1, "A"), (2, "A"), (3, "B"), (3, "B"), (4, "A")]
    assert switching_rate(seq) == pytest.approx(2 / 3)


# -- context classification ----------------------------------------------------------


def fp(*services, dominant=None):
    from ocgov.service_map import CommitFootprint

    return CommitFootprint(
        "h" * 40, frozenset(services), dominant or (min(services) if services else None), 0
    )


def classify(message, *services, quests=(), q=4):
    commit = CommitRecord("h" * 40, "d", 1, ("x",), message)
    ctx = ContextConfig(broad_change_threshold=q)
    return classify_context(commit, fp(*services), ctx, quests)


def test_single_service_commit():
    assert classify("anything", "A") == "single_service"


def test_keyword_justifies():
    assert classify("Refactor shared client", "A", "B") == "justified"


def test_plain_cross_service_commit_unjustified():
    assert classify("fix", "A", "B") == "unjustified"


def test_broad_change_justified():
    assert classify("fix", "A", "B", "C", "D") == "justified"


def test_quest_tag_justifies_when_scope_covers():
    quests = (ActiveQuest("7", frozenset({"A", "B"})),)
    assert classify("quest:7 work", "A", "B", quests=quests) == "justified"


def test_quest_tag_insufficient_scope():
    quests = (ActiveQuest("7", frozenset({"A"})),)
    assert classify("quest:7 work", "A", "B", quests=quests) == "unjustified"


def test_inactive_quest_tag_ignored():
    assert classify("quest:9 work", "A", "B", quests=()) == "unjustified"


# -- stability -------------------------------------------------------------------


def owners_to_matrices(owners):
    return [make_matrix({(owner, "s"): 2}) for owner in owners]


def test_stability_constant_owner():
    assert ownership_stability(owners_to_matrices(["d1"] * 4), "s") == 1.0


def test_stability_alternating_owner():
    matrices = owners_to_matrices(["d1", "d2", "d1", "d2"])
    assert ownership_stability(matrices, "s") == 0.0


def test_stability_two_of_three_pairs():
    matrices = owners_to_matrices(["d1", "d1", "d2", "d2"])
    assert ownership_stability(matrices, "s") == pytest.approx(2 / 3)


def test_stability_short_history_is_vacuous():
    assert ownership_stability(owners_to_matrices(["d1"]), "s") == 1.0


def test_stability_skips_inactive_windows():
    matrices = owners_to_matrices(["d1", "d1"])
    matrices.insert(1, make_matrix({}))  # gap window
    assert ownership_stability(matrices, "s") == 1.0


# -- baselines and flags -----------------------------------------------------------


def test_z_cold_start():
    assert baseline_z([], 0.9) == 0.0


def test_z_constant_history():
    assert baseline_z([0.2, 0.2, 0.2], 0.2) == 0.0


def test_z_hand_computed():
    z = baseline_z([0.0, 0.0, 0.0, 0.4], 0.4)
    assert z == pytest.approx(1.7320, abs=1e-4)


def test_z_uses_only_trailing_b_values():
    history = [100.0] * 5 + [0.0, 0.0, 0.4, 0.4]
    assert baseline_z(history, 0.2, trailing=4) == pytest.approx(0.0, abs=1e-9)


def test_deviation_needs_persistence():
    assert detect_deviation([2.5], 2.0, 2) is False
    assert detect_deviation([2.1, 2.4], 2.0, 2) is True
    assert detect_deviation([3.0, 1.0], 2.0, 2) is False


# -- snapshots ---------------------------------------------------------------------


def test_compute_snapshots_empty_store_rejected(s0_map):
    with pytest.raises(EmptyHistory):
        compute_snapshots([], s0_map, MetricsConfig())


def test_s0_snapshot_is_single_window(s0_snapshots):
    assert len(s0_snapshots) == 1
    snap = s0_snapshots[0]
    assert snap.oc_pairs[("A", "B")] == pytest.approx(OC_S0, abs=1e-9)
    assert snap.deviation_flags == frozenset()


def test_snapshot_doc_round_trip(s0_snapshots):
    for snap in s0_snapshots:
        assert MetricSnapshot.from_doc(snap.to_doc()) == snap


def test_snapshot_computation_is_deterministic(s0, s0_map):
    a = [s.to_doc() for s in compute_snapshots(s0, s0_map, MetricsConfig())]
    b = [s.to_doc() for s in compute_snapshots(s0, s0_map, MetricsConfig())]
    assert a == b


@settings(deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_random_instances_match_oracle(seed):
    assert_matches_oracle(make_instance(seed))


@settings(deadline=None)
@given(seed=st.integers(min_value=20_000, max_value=20_500))
def test_zero_cscr_with_single_service_footprints_means_zero_switching(seed):
    # A developer whose every commit touches only their primary service
    # cannot switch dominants.
    for snap in run_pipeline(make_instance(seed)):
        for dev, p in snap.profiles.items():
            if p.cscr == 0.0:
                assert p.switching_rate == 0.0, (snap.window, dev)


def test_unmapped_only_history_yields_empty_snapshots():
    smap = compile_rules([("svc-a/**", "A")])
    commits = [CommitRecord(fixture_hash("1"), "d", 100, ("docs/x",))]
    snaps = compute_snapshots(commits, smap, MetricsConfig())
    assert len(snaps) == 1
    assert snaps[0].profiles == {}
    assert snaps[0].oc_project == 0.0
