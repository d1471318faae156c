"""The `vibeguard` command-line interface."""

from __future__ import annotations

import argparse
import json
import sys
import threading

from vibeguard.errors import (
    StoreCorrupt, VibeguardError, WorkspaceUnreadable,
)
from vibeguard.detectors import detect_all
from vibeguard.fixgen import apply_fix
from vibeguard.sidecar import watch as watch_mod
from vibeguard.sidecar.config import load_config
from vibeguard.sidecar.pipeline import (
    EXIT_HARD_FAILURES, EXIT_INTERNAL_ERROR, EXIT_OK, Engine, HookEvent,
)
from vibeguard.sidecar.server import DEFAULT_ADDR, serve
from vibeguard.specstore import STATUS_PROPOSED, detect_conflicts


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vibeguard",
        description="Side-car analyzer for agent-written TypeScript: "
                    "detects latent union-handling bugs, manages reviewed "
                    "specifications, verifies them, and plans fixes.")
    parser.add_argument("--workspace", default=".",
                        help="workspace root (default: current directory)")
    parser.add_argument("--config", default=None,
                        help="path to a config JSON overriding "
                             ".vibeguard/config.json")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="detect scopes without persisting")
    scan.add_argument("--json", action="store_true", dest="as_json")

    sub.add_parser("propose", help="detect and persist proposed specs")

    verify = sub.add_parser("verify", help="check accepted/soft specs")
    verify.add_argument("--budget-ms", type=float, default=None)

    fix = sub.add_parser("fix", help="plan (and optionally apply) a fix")
    fix.add_argument("record_id")
    fix.add_argument("--apply", action="store_true")

    sub.add_parser("hook", help="read a HookEvent JSON on stdin, emit a "
                                "FeedbackReport on stdout")

    watchp = sub.add_parser("watch", help="poll for changes and analyze")
    watchp.add_argument("--poll-interval-s", type=float, default=None)

    servep = sub.add_parser("serve", help="run the review-panel HTTP API")
    servep.add_argument("--addr", default=DEFAULT_ADDR)

    sub.add_parser("status", help="summarize the spec store")
    return parser


def _engine(args) -> Engine:
    config = load_config(args.workspace, args.config)
    return Engine(args.workspace, config)


def _cmd_scan(args) -> int:
    engine = _engine(args)
    outcome = engine.analyze(HookEvent("manual"))
    index = engine.index
    scopes = detect_all(index)
    if args.as_json:
        payload = {
            "scopes": [{
                "kind": s.kind,
                "file": s.file,
                "decl": s.enclosing_decl,
                "start": s.anchor.start,
                "end": s.anchor.end,
            } for s in scopes],
            "proposed": outcome.report["proposed"],
            "snapshot": outcome.report["snapshot"],
        }
        print(json.dumps(payload, indent=2))
    else:
        if not scopes:
            print("no scopes detected")
        for s in scopes:
            print(f"{s.kind}  {s.file}:{s.anchor.start}  "
                  f"in {s.enclosing_decl or 'module scope'}")
        print(f"{len(scopes)} scope(s), "
              f"{len(outcome.report['proposed'])} proposal(s) pending "
              f"decision")
    return EXIT_OK


def _cmd_propose(args) -> int:
    engine = _engine(args)
    engine.analyze(HookEvent("manual"))
    proposed = engine.store.by_status(STATUS_PROPOSED)
    for rec in proposed:
        print(f"{rec.id}  {rec.kind}  {rec.anchor.path}")
        print(f"  {rec.explanation}")
    print(f"{len(proposed)} proposal(s) in the store")
    return EXIT_OK


def _cmd_verify(args) -> int:
    engine = _engine(args)
    if args.budget_ms is not None:
        from dataclasses import replace
        engine.config = replace(engine.config, verify_budget_ms=args.budget_ms)
    outcome = engine.analyze(HookEvent("manual"))
    verification = outcome.verification
    if verification is None or not verification.verdicts:
        print("no accepted or soft specs to verify")
        return EXIT_OK
    for v in verification.verdicts:
        rec = engine.store.records[v.record_id]
        print(f"{v.record_id}  {rec.kind:20s} {rec.status:8s} "
              f"{v.tier:9s} {v.outcome}")
        for d in v.diagnostics:
            print(f"    [{d.severity}] {d.message}")
    print(f"oracle: {verification.oracle_status}")
    return outcome.exit_code


def _cmd_fix(args) -> int:
    engine = _engine(args)
    engine.analyze(HookEvent("manual"))
    plan, diff = engine.plan_for(args.record_id)
    print(f"# {plan.summary}")
    for note in plan.notes:
        print(f"# note: {note}")
    print(diff, end="")
    if args.apply:
        result = apply_fix(engine.workspace, plan, engine.index,
                           engine.store)
        engine.index = result.new_index
        engine.analyze(HookEvent("manual"))
        print(f"applied; record now: {result.verdict.outcome}")
    return EXIT_OK


def _cmd_hook(args) -> int:
    try:
        data = json.load(sys.stdin)
    except json.JSONDecodeError as exc:
        print(json.dumps({"error": f"invalid hook JSON: {exc}"}))
        return EXIT_INTERNAL_ERROR
    event = HookEvent.from_json(data)
    engine = _engine(args)
    outcome = engine.analyze(event)
    print(json.dumps(outcome.report, indent=2))
    return outcome.exit_code


def _cmd_watch(args) -> int:
    engine = _engine(args)
    stop = threading.Event()

    def report(outcome) -> None:
        print(json.dumps(outcome.report))
        sys.stdout.flush()

    try:
        watch_mod.watch(engine, stop, on_report=report,
                        poll_interval_s=args.poll_interval_s)
    except KeyboardInterrupt:
        stop.set()
    return EXIT_OK


def _cmd_serve(args) -> int:
    engine = _engine(args)
    server, thread = serve(engine, args.addr)
    host, port = server.server_address[:2]
    print(f"vibeguard serving on http://{host}:{port}", flush=True)
    try:
        thread.join()
    except KeyboardInterrupt:
        server.shutdown()
    return EXIT_OK


def _cmd_status(args) -> int:
    engine = _engine(args)
    engine.store = engine._load_store()
    counts: dict[str, int] = {}
    for rec in engine.store.records.values():
        counts[rec.status] = counts.get(rec.status, 0) + 1
    if not counts:
        print("spec store is empty")
        return EXIT_OK
    for status in ("proposed", "accepted", "soft", "rejected", "retired"):
        if status in counts:
            print(f"{status:9s} {counts[status]}")
    conflicts = detect_conflicts(engine.store)
    for c in conflicts:
        print(f"conflict  {c.nature}: {c.record_ids[0]} / "
              f"{c.record_ids[1]} ({c.overlap})")
    if conflicts:
        print(f"{len(conflicts)} conflict(s) need attention")
    return EXIT_OK


_COMMANDS = {
    "scan": _cmd_scan,
    "propose": _cmd_propose,
    "verify": _cmd_verify,
    "fix": _cmd_fix,
    "hook": _cmd_hook,
    "watch": _cmd_watch,
    "serve": _cmd_serve,
    "status": _cmd_status,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (WorkspaceUnreadable, StoreCorrupt) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR
    except VibeguardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
