"""Single command-line entry point: ``ocgov <subcommand>``.

Subcommands compose into the full pipeline::

    ocgov ingest    log dump            -> commit store (JSONL)
    ocgov metrics   store + service map -> snapshot series (JSONL) [+ CSV]
    ocgov engine    snapshots           -> engine state + event log
    ocgov simulate  sim config          -> per-arm CSV + JSON summary
    ocgov serve     state + snapshots   -> HTTP API (+ static dashboard)
    ocgov report    state               -> CSV / JSON

Every stage writes canonical, byte-stable output, so file-mediated runs
match a single-process run exactly. Exit codes: 0 success, 1 usage error,
2 data error. ``-`` as an output path means stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

from . import api, engine, ingestion, metrics, persistence, service_map, simulator
from .errors import OcgovError

STATE_ENV_VAR = "OCGOV_STATE"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        raise UsageError(message)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as fh:
            yield fh


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ocgov", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a log dump into a commit store")
    p.add_argument("--log", required=True, help="history dump file ('-' for stdin)")
    p.add_argument("--aliases", help="JSON file mapping raw authors to canonical ids")
    p.add_argument("--out", required=True, help="commit store path ('-' for stdout)")

    p = sub.add_parser("metrics", help="compute per-window snapshots")
    p.add_argument("--store", required=True, help="commit store (JSONL)")
    p.add_argument("--map", required=True, dest="map_path", help="service map JSON")
    p.add_argument("--config", help="metrics config JSON")
    p.add_argument("--window-length", type=int, help="window length in days")
    p.add_argument("--window-stride", type=int, help="window stride in days")
    p.add_argument("--out", required=True, help="snapshot series path (JSONL)")
    p.add_argument("--csv", help="also write a tabular export here")

    p = sub.add_parser("engine", help="apply snapshots to the gamification engine")
    p.add_argument("--snapshots", required=True, help="snapshot series (JSONL)")
    p.add_argument("--config", help="engine config JSON (weights, teams, optin)")
    p.add_argument("--state-out", required=True, help="engine state file")
    p.add_argument("--events-out", required=True, help="event log (JSONL)")

    p = sub.add_parser("simulate", help="run the governance-arm simulation")
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--windows", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--agents", type=int)
    p.add_argument("--services", type=int)
    p.add_argument("--out-csv", required=True, help="per-window results CSV")
    p.add_argument("--out-summary", required=True, help="arm comparison JSON")

    p = sub.add_parser("serve", help="serve the HTTP API over saved state")
    p.add_argument("--state", help=f"state file (default: ${STATE_ENV_VAR})")
    p.add_argument("--snapshots", required=True, help="snapshot series (JSONL)")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--token", help="require this value in X-Auth-Token")
    p.add_argument("--static", help="serve a dashboard build from this directory")

    p = sub.add_parser("report", help="export engine state as CSV or JSON")
    p.add_argument("--state", help=f"state file (default: ${STATE_ENV_VAR})")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)
    return parser


def _state_path(args: argparse.Namespace) -> str:
    import os

    path = args.state or os.environ.get(STATE_ENV_VAR)
    if not path:
        raise UsageError(f"--state or ${STATE_ENV_VAR} is required")
    return path


def _cmd_ingest(args: argparse.Namespace) -> int:
    if args.log == "-":
        text = sys.stdin.read()
    else:
        text = Path(args.log).read_text(encoding="utf-8")
    commits = ingestion.parse_git_log(text)
    if args.aliases:
        aliases = ingestion.AliasMap.from_json_obj(_load_json(args.aliases))
        commits = ingestion.resolve_identities(commits, aliases)
    with _open_out(args.out) as fh:
        count = ingestion.write_store(commits, fh)
    print(f"ingested {count} commits", file=sys.stderr)
    return 0


def _metrics_config(args: argparse.Namespace) -> metrics.MetricsConfig:
    cfg = (
        metrics.MetricsConfig.from_json_obj(_load_json(args.config))
        if args.config
        else metrics.MetricsConfig()
    )
    if args.window_length or args.window_stride:
        spec = metrics.WindowSpec(
            length_days=args.window_length or cfg.window.length_days,
            stride_days=args.window_stride or cfg.window.stride_days,
        )
        cfg = metrics.MetricsConfig(
            window=spec,
            baseline_trailing=cfg.baseline_trailing,
            deviation_threshold=cfg.deviation_threshold,
            deviation_consecutive=cfg.deviation_consecutive,
            stability_trailing=cfg.stability_trailing,
            context=cfg.context,
        )
    return cfg


def _cmd_metrics(args: argparse.Namespace) -> int:
    with open(args.store, encoding="utf-8") as fh:
        commits = ingestion.read_store(fh)
    smap = service_map.ServiceMap.from_json_obj(_load_json(args.map_path))
    cfg = _metrics_config(args)

    footprints = service_map.map_commits(smap, commits)
    coverage = service_map.coverage_ratio(commits, footprints)
    if coverage < service_map.LOW_COVERAGE_THRESHOLD:
        print(
            f"warning: service-map coverage {coverage:.3f} below "
            f"{service_map.LOW_COVERAGE_THRESHOLD}; signals may be unreliable",
            file=sys.stderr,
        )

    snapshots = metrics.compute_snapshots(commits, smap, cfg)
    with _open_out(args.out) as fh:
        for snap in snapshots:
            fh.write(persistence.canonical_json(snap.to_doc()))
            fh.write("\n")
    if args.csv:
        with _open_out(args.csv) as fh:
            fh.write("window,entity_kind,entity,signal,value\n")
            for row in metrics.iter_csv_rows(snapshots):
                window, kind, entity, signal, value = row
                fh.write(f"{window},{kind},{entity},{signal},{value!r}\n")
    print(
        f"computed {len(snapshots)} windows (coverage {coverage:.3f})",
        file=sys.stderr,
    )
    return 0


def _read_snapshots(path: str) -> list[metrics.MetricSnapshot]:
    snapshots = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                snapshots.append(metrics.MetricSnapshot.from_doc(json.loads(line)))
    return snapshots


def _cmd_engine(args: argparse.Namespace) -> int:
    snapshots = _read_snapshots(args.snapshots)
    config = _load_json(args.config) if args.config else {}
    state = engine.EngineState(engine.EngineConfig.from_json_obj(config.get("engine", {})))
    for developer, team in sorted(config.get("teams", {}).items()):
        state.set_team(developer, team)
    for developer in sorted(config.get("optin", [])):
        state.set_opt_in(developer, True)
    engine.apply_snapshots(state, snapshots)
    persistence.save_state(state, args.state_out)
    with _open_out(args.events_out) as fh:
        for event in state.events:
            fh.write(persistence.canonical_json(event))
            fh.write("\n")
    print(
        f"applied {len(snapshots)} windows, {len(state.events)} events",
        file=sys.stderr,
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    raw = _load_json(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "windows": args.windows,
        "replications": args.replications,
        "agent_count": args.agents,
        "service_count": args.services,
    }
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    cfg = simulator.SimConfig.from_json_obj(raw)
    results = simulator.run_experiment(cfg)
    with _open_out(args.out_csv) as fh:
        simulator.write_results_csv(results, fh)
    summary = simulator.compare_arms(results)
    summary["seed"] = cfg.seed
    summary["replications"] = cfg.replications
    with _open_out(args.out_summary) as fh:
        fh.write(json.dumps(summary, indent=2, sort_keys=True))
        fh.write("\n")
    print(
        f"simulated {len(results)} arms x {cfg.replications} replications "
        f"x {cfg.windows} windows",
        file=sys.stderr,
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    state = persistence.load_state(_state_path(args))
    snapshots = _read_snapshots(args.snapshots)
    store = api.StateStore(state, snapshots, state_path=_state_path(args))
    api.serve(
        store,
        port=args.port,
        host=args.host,
        token=args.token,
        static_dir=args.static,
    )
    return 0


def state_view(state: engine.EngineState) -> dict:
    """JSON-ready projection of an engine state for reports."""
    return {
        "window": state.last_window,
        "scores": [
            {
                "developer": s.developer,
                "window": s.window,
                "points": s.points,
                "penalty_applied": s.penalty_applied,
            }
            for s in state.scores
        ],
        "badges": [
            {"kind": b.kind, "developer": b.developer, "awarded_at": b.awarded_at}
            for b in state.badges
        ],
        "quests": [state.quests[i].to_json_obj() for i in sorted(state.quests)],
        "nudges": [
            {
                "id": n.id,
                "developer": n.developer,
                "window": n.window,
                "trigger": n.trigger,
                "acknowledged": n.id in state.acked_nudges,
            }
            for n in state.nudges
        ],
        "teams": dict(sorted(state.teams.items())),
        "optin": sorted(state.optin),
    }


def _cmd_report(args: argparse.Namespace) -> int:
    state = persistence.load_state(_state_path(args))
    if args.format == "json":
        with _open_out(args.out) as fh:
            fh.write(json.dumps(state_view(state), indent=2, sort_keys=True))
            fh.write("\n")
        return 0
    with _open_out(args.out) as fh:
        fh.write("window,entity_kind,entity,signal,value\n")
        for s in state.scores:
            fh.write(f"{s.window},developer,{s.developer},points,{s.points}\n")
            fh.write(
                f"{s.window},developer,{s.developer},penalty,"
                f"{1 if s.penalty_applied else 0}\n"
            )
        for b in state.badges:
            fh.write(f"{b.awarded_at},developer,{b.developer},badge_{b.kind},1\n")
        for n in state.nudges:
            fh.write(f"{n.window},developer,{n.developer},nudge_{n.trigger},1\n")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "metrics": _cmd_metrics,
    "engine": _cmd_engine,
    "simulate": _cmd_simulate,
    "serve": _cmd_serve,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except OcgovError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"IoFailure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
