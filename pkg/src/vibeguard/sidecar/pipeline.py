"""The side-car event loop: incremental analysis, proposal, verification
and fix planning behind a single-mutator lock."""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from vibeguard.errors import (
    AmbiguousFix, IllegalTransition, StaleSnapshot, StoreCorrupt,
    UnfixableScope, UnknownId, VibeguardError, WorkspaceUnreadable,
)
from vibeguard.detectors import detect_all, propose_specs
from vibeguard.fixgen import ApplyResult, FixPlan, apply_fix, plan_diff, plan_fix
from vibeguard.index.build import build_index, update_index
from vibeguard.index.model import CodebaseIndex
from vibeguard.oracle import discover_sources
from vibeguard.sidecar.config import (
    SidecarConfig, load_config, state_path, store_path,
)
from vibeguard.sidecar.report import build_report
from vibeguard.specstore import (
    SpecStore, STATUS_ACCEPTED, STATUS_REJECTED, STATUS_SOFT, load,
    note_anchor_resolution, persist, set_status, upsert,
)
from vibeguard.syntax.parser import source_of
from vibeguard.verify import (
    FAIL, VerificationReport, resolve_anchor, verify_all,
)

HOOK_EVENT_KINDS = ("post-edit", "pre-commit", "manual")

EXIT_OK = 0
EXIT_INTERNAL_ERROR = 1
EXIT_HARD_FAILURES = 2


@dataclass(frozen=True)
class HookEvent:
    kind: str
    changed: tuple[str, ...] = ()
    session: str = ""

    @staticmethod
    def from_json(data: dict) -> "HookEvent":
        kind = data.get("event", "")
        if kind not in HOOK_EVENT_KINDS:
            raise WorkspaceUnreadable(f"unknown hook event kind {kind!r}")
        changed = tuple(str(p) for p in data.get("changed", []))
        return HookEvent(kind, changed, str(data.get("session", "")))


@dataclass
class AnalysisOutcome:
    report: dict
    exit_code: int
    verification: Optional[VerificationReport]
    plans: dict[str, FixPlan]
    diffs: dict[str, str]


class Engine:
    """Owns the index/store snapshots; all mutation is serialized."""

    def __init__(self, workspace: str,
                 config: Optional[SidecarConfig] = None,
                 config_path_override: Optional[str] = None) -> None:
        self.workspace = str(Path(workspace).resolve())
        self.config = config or load_config(self.workspace,
                                            config_path_override)
        self._lock = threading.RLock()
        self._event = threading.Condition(self._lock)
        self.index: Optional[CodebaseIndex] = None
        self.store: SpecStore = SpecStore()
        self.counter: int = self._load_counter()
        self.last_outcome: Optional[AnalysisOutcome] = None
        self._listeners: list[Callable[[int], None]] = []

    # -- persistence helpers ------------------------------------------------

    def _load_counter(self) -> int:
        path = state_path(self.workspace)
        try:
            return int(json.loads(path.read_text())["snapshot_counter"])
        except (OSError, ValueError, KeyError, json.JSONDecodeError):
            return 0

    def _save_counter(self) -> None:
        path = state_path(self.workspace)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps({"snapshot_counter": self.counter}))

    def _load_store(self) -> SpecStore:
        try:
            return load(str(store_path(self.workspace)))
        except VibeguardError as exc:
            raise StoreCorrupt(str(exc)) from exc

    def _persist_store(self) -> None:
        persist(self.store, str(store_path(self.workspace)))

    # -- workspace scanning ---------------------------------------------------

    def _validate_event(self, event: HookEvent) -> None:
        root = Path(self.workspace)
        if not root.is_dir():
            raise WorkspaceUnreadable(f"{self.workspace} is not a directory")
        for rel in event.changed:
            p = Path(rel)
            if p.is_absolute() or ".." in p.parts:
                raise WorkspaceUnreadable(
                    f"path {rel!r} escapes the workspace")

    def _refresh_index(self) -> None:
        sources = discover_sources(self.workspace)
        if self.index is None or \
                self.index.config != self.config.index_config():
            self.index = build_index(sources, self.config.index_config())
            return
        changed: dict[str, Optional[bytes]] = {}
        old_files = self.index.file_facts
        for path, data in sources.items():
            facts = old_files.get(path)
            if facts is None or facts.ast.source_hash != _sha(data):
                changed[path] = data
        for path in list(old_files) + list(self.index.failed_files):
            if path not in sources:
                changed[path] = None
        for path in self.index.failed_files:
            if path in sources and path not in changed:
                changed[path] = sources[path]
        if changed:
            self.index = update_index(self.index, changed)

    # -- the pipeline ---------------------------------------------------------

    def analyze(self, event: HookEvent) -> AnalysisOutcome:
        """update index -> detect -> propose -> verify -> plan fixes ->
        report. Raises WorkspaceUnreadable/StoreCorrupt for exit code 1."""
        with self._lock:
            self._validate_event(event)
            self.store = self._load_store()
            self._refresh_index()
            index = self.index
            assert index is not None

            scopes = detect_all(index)
            proposals = propose_specs(index, scopes)
            self.store = upsert(self.store, proposals)
            resolution = {rid: resolve_anchor(index, rec)
                          for rid, rec in self.store.records.items()}
            self.store = note_anchor_resolution(self.store, resolution)

            verification = verify_all(
                index, self.store, self.config.verify_budget_ms,
                self.config.make_oracle(),
                workspace_dir=self.workspace if self.config.oracle_cmd
                else None)

            plans: dict[str, FixPlan] = {}
            diffs: dict[str, str] = {}
            for verdict in verification.verdicts:
                if verdict.outcome != FAIL:
                    continue
                record = self.store.records[verdict.record_id]
                try:
                    plan = plan_fix(index, record, verdict)
                except (AmbiguousFix, UnfixableScope):
                    continue
                plans[record.id] = plan
                diffs[record.id] = plan_diff(index, plan)

            regressions: list[dict] = []
            if self.config.auto_apply and plans:
                verification, regressions = self._auto_apply(
                    plans, diffs, verification)

            self._persist_store()
            self.counter += 1
            self._save_counter()

            report = build_report(event.kind, self.counter, self.index,
                                  self.store, verification, plans,
                                  regressions)
            outcome = AnalysisOutcome(report, report["exit_code"],
                                      verification, plans, diffs)
            self.last_outcome = outcome
            self._event.notify_all()
            for listener in self._listeners:
                listener(self.counter)
            return outcome

    def _auto_apply(self, plans: dict[str, FixPlan], diffs: dict[str, str],
                    verification: VerificationReport):
        regressions: list[dict] = []
        for rid in sorted(plans):
            record = self.store.records[rid]
            if record.status != STATUS_ACCEPTED:
                continue
            try:
                result = apply_fix(self.workspace, plans[rid], self.index,
                                   self.store)
            except VibeguardError as exc:
                regressions.append({"record_id": rid, "message": str(exc)})
                continue
            self.index = result.new_index
        verification = verify_all(
            self.index, self.store, self.config.verify_budget_ms,
            self.config.make_oracle(),
            workspace_dir=self.workspace if self.config.oracle_cmd
            else None)
        for rid in list(plans):
            verdict = verification.verdict_for(rid)
            if verdict is not None and verdict.outcome != FAIL:
                plans.pop(rid)
                diffs.pop(rid, None)
        return verification, regressions

    # -- decision / apply entry points (server + CLI) -------------------------

    def decide(self, record_id: str, decision: str, actor: str) -> dict:
        status_map = {"accepted": STATUS_ACCEPTED,
                      "rejected": STATUS_REJECTED,
                      "soft": STATUS_SOFT}
        if decision not in status_map:
            raise IllegalTransition(f"unknown decision {decision!r}")
        with self._lock:
            self.store = self._load_store()
            if record_id not in self.store.records:
                raise UnknownId(record_id)
            self.store = set_status(self.store, record_id,
                                    status_map[decision], actor)
            self._persist_store()
            self.analyze(HookEvent("manual"))
            return self.store.get(record_id).to_json()

    def plan_for(self, record_id: str) -> tuple[FixPlan, str]:
        with self._lock:
            if self.last_outcome is None:
                self.analyze(HookEvent("manual"))
            assert self.last_outcome is not None
            plan = self.last_outcome.plans.get(record_id)
            if plan is None:
                raise UnfixableScope(
                    f"no fix plan available for {record_id}")
            return plan, self.last_outcome.diffs.get(record_id, "")

    def apply_plan(self, record_id: str) -> ApplyResult:
        with self._lock:
            plan, _ = self.plan_for(record_id)
            if self.index is None or plan.snapshot_id != self.index.snapshot_id:
                raise StaleSnapshot(
                    f"plan for {record_id} predates the current snapshot")
            result = apply_fix(self.workspace, plan, self.index, self.store)
            self.index = result.new_index
            self.analyze(HookEvent("manual"))
            return result

    # -- read side -------------------------------------------------------------

    def spec_cards(self) -> list[dict]:
        with self._lock:
            if self.last_outcome is None:
                self.analyze(HookEvent("manual"))
            index = self.index
            cards = []
            verification = self.last_outcome.verification \
                if self.last_outcome else None
            for rec in sorted(self.store.records.values(),
                              key=lambda r: (r.anchor.path, r.anchor.start,
                                             r.id)):
                verdict = verification.verdict_for(rec.id) \
                    if verification else None
                plan = self.last_outcome.plans.get(rec.id) \
                    if self.last_outcome else None
                cards.append({
                    "id": rec.id,
                    "kind": rec.kind,
                    "status": rec.status,
                    "explanation": rec.explanation,
                    "anchor": {
                        "path": rec.anchor.path,
                        "decl": rec.anchor.decl,
                        "line": _line_for(index, rec),
                    },
                    "missing_members": list(verdict.missing_members)
                    if verdict else [],
                    "verdict": ({"tier": verdict.tier,
                                 "outcome": verdict.outcome}
                                if verdict else None),
                    "fix_available": plan is not None,
                    "fix_summary": plan.summary if plan else None,
                })
            return cards

    def wait_for_counter(self, since: int, timeout_s: float) -> int:
        with self._event:
            self._event.wait_for(lambda: self.counter > since,
                                 timeout=timeout_s)
            return self.counter


def _line_for(index: Optional[CodebaseIndex], rec) -> int:
    if index is None:
        return 1
    ast = index.files.get(rec.anchor.path)
    if ast is None:
        return 1
    src = source_of(ast)
    return src.line_col(min(rec.anchor.start, src.byte_len()))[0]


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def handle_hook_event(workspace: str, event: HookEvent,
                      config: Optional[SidecarConfig] = None
                      ) -> tuple[dict, int]:
    """One-shot pipeline run for an agent hook; returns (report, exit code)."""
    engine = Engine(workspace, config)
    outcome = engine.analyze(event)
    return outcome.report, outcome.exit_code
