"""Fix generation tests: the paper's red lines, rewrite/annotation plans,
staleness, rollback exactness and the regression gate."""

import shutil

import pytest

from vibeguard.detectors import detect_all, propose_specs
from vibeguard.errors import (
    AmbiguousFix, RegressionDetected, StaleSnapshot,
)
from vibeguard.fixgen import (
    FixPlan, TextEdit, apply_edits_to_bytes, apply_fix, plan_diff, plan_fix,
)
from vibeguard.index import build_index
from vibeguard.oracle import MiniCompilerOracle
from vibeguard.specstore import SpecStore, set_status, upsert
from vibeguard.verify import FAIL, PASS, check_spec, verify_all


def verified_store(idx, oracle=None):
    records = propose_specs(idx, detect_all(idx))
    store = upsert(SpecStore(), records)
    for r in records:
        store = set_status(store, r.id, "accepted", "t")
    report = verify_all(idx, store, 30000, oracle or MiniCompilerOracle())
    return store, report


def files_of(workspace) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(workspace.glob("*.ts*"))}


def write_files(workspace, files: dict[str, str]):
    for name, text in files.items():
        (workspace / name).write_text(text)


# -- the paper's red lines ---------------------------------------------------


def test_processor_plan_is_guard_only(listing1_workspace):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    processor = next(r for r in store.records.values()
                     if r.anchor.path == "orderProcessor.ts")
    plan = plan_fix(idx, processor, report.verdict_for(processor.id))
    diff = plan_diff(idx, plan)
    assert "+    // side-car: exhaustive guard" in diff
    assert "+    default: return assertNever(order.status);" in diff
    assert "case 'cancelled'" not in diff  # no handler to synthesize
    assert "assertNever.ts" in plan.creates_files
    assert plan.creates_files["assertNever.ts"] == (
        "export function assertNever(x: never): never {\n"
        "  throw new Error(`Unexpected case: ${JSON.stringify(x)}`);\n"
        "}\n")


def test_badge_plan_synthesizes_shipped_case(listing1_workspace):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    badge = next(r for r in store.records.values()
                 if r.anchor.path == "orderUI.tsx")
    plan = plan_fix(idx, badge, report.verdict_for(badge.id))
    diff = plan_diff(idx, plan)
    assert "+    case 'shipped': return <Badge" in diff
    assert ">Shipped</Badge>;" in diff
    assert "placeholders" in " ".join(plan.notes)


def test_apply_both_listing1_plans_no_regressions(listing1_workspace):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    for record in store.active():
        plan = plan_fix(idx, record, report.verdict_for(record.id))
        result = apply_fix(str(listing1_workspace), plan, idx, store)
        idx = result.new_index
        assert result.verdict.outcome == PASS
    assert detect_all(idx) == []
    processor_text = (listing1_workspace / "orderProcessor.ts").read_text()
    assert "default: return assertNever(order.status);" in processor_text
    badge_text = (listing1_workspace / "orderUI.tsx").read_text()
    assert "case 'shipped'" in badge_text


def test_applying_a_plan_twice_is_stale(listing1_workspace):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    result = apply_fix(str(listing1_workspace), plan, idx, store)
    with pytest.raises(StaleSnapshot):
        apply_fix(str(listing1_workspace), plan, result.new_index, store)


# -- listing 2: rewrite to a discriminated switch ------------------------------


def test_listing2_rewrite_plan(listing2_workspace):
    idx = build_index(files_of(listing2_workspace))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    result = apply_fix(str(listing2_workspace), plan, idx, store)
    text = (listing2_workspace / "todoReducer.ts").read_text()
    assert ("export type ActionType = 'ADD_TODO' | 'REMOVE_TODO' | "
            "'TOGGLE_TODO'") in text
    assert "type: ActionType;" in text
    assert "switch (action.type) {" in text
    assert text.count("case '") == 3
    assert "default: return assertNever(action.type);" in text
    # both the stringly and exhaustive-switch detectors are silent now
    assert detect_all(result.new_index) == []
    assert check_spec(result.new_index, record).outcome == PASS
    # the rewritten switch compiles: all observed values are covered
    assert MiniCompilerOracle().check_index(result.new_index) == []


def test_chain_with_negated_arm_is_ambiguous():
    files = {"m.ts": (
        "interface E { tag: string; }\n"
        "function f(e: E) {\n"
        "  if (e.tag !== 'a') { return 1; }\n"
        "  else if (e.tag === 'b') { return 2; }\n"
        "  return 0;\n}\n")}
    idx = build_index(files)
    store, report = verified_store(idx)
    record = store.active()[0]
    with pytest.raises(AmbiguousFix):
        plan_fix(idx, record, report.verdict_for(record.id))


# -- union alias fix -------------------------------------------------------------


def test_alias_fix_declares_union_and_annotates(tmp_path):
    write_files(tmp_path, {"api.ts": (
        "export function processMessage(type: string, data: any) "
        "{ return data; }\n"
        "export function go() {\n"
        "  processMessage('info', 1);\n"
        "  processMessage('warning', 2);\n"
        "  processMessage('error', 3);\n}\n")})
    idx = build_index(files_of(tmp_path))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    result = apply_fix(str(tmp_path), plan, idx, store)
    text = (tmp_path / "api.ts").read_text()
    assert "export type MessageType = 'info' | 'warning' | 'error'" in text
    assert "processMessage(type: MessageType, data: any)" in text
    assert detect_all(result.new_index) == []


def test_alias_fix_annotates_unannotated_param(tmp_path):
    write_files(tmp_path, {"api.ts": (
        "export function tag(kind) { return kind; }\n"
        "export function go() {\n"
        "  tag('x1');\n  tag('x2');\n  tag('x3');\n}\n")})
    idx = build_index(files_of(tmp_path))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    apply_fix(str(tmp_path), plan, idx, store)
    assert "tag(kind: TagKind)" in (tmp_path / "api.ts").read_text()


# -- satisfies guard fix -----------------------------------------------------------


def test_mapping_fix_appends_guard(tmp_path):
    write_files(tmp_path, {"m.ts": (
        "type Method = 'get' | 'post';\n"
        "const handlers = { get: 1, post: 2 };\n")})
    idx = build_index(files_of(tmp_path))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    result = apply_fix(str(tmp_path), plan, idx, store)
    text = (tmp_path / "m.ts").read_text()
    assert "} satisfies Record<Method, unknown>;" in text
    assert detect_all(result.new_index) == []


def test_mapping_fix_imports_foreign_union(tmp_path):
    write_files(tmp_path, {
        "types.ts": "export type Method = 'get' | 'post';\n",
        "m.ts": ("const handlers = { get: 1, post: 2 };\n"),
    })
    idx = build_index(files_of(tmp_path))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    apply_fix(str(tmp_path), plan, idx, store)
    text = (tmp_path / "m.ts").read_text()
    assert "import { Method } from './types';" in text
    assert "satisfies Record<Method, unknown>" in text


# -- apply mechanics -------------------------------------------------------------


def test_apply_edits_rejects_overlaps():
    with pytest.raises(ValueError):
        apply_edits_to_bytes(b"hello world", [
            TextEdit("f", 0, 6, "a"), TextEdit("f", 4, 8, "b")])


def test_rollback_on_parse_breaking_plan(listing1_workspace):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    sabotaged = FixPlan(
        record_id=plan.record_id,
        edits=tuple(TextEdit(e.path, e.start, e.end, "class {{{ 'oops")
                    for e in plan.edits[:1]),
        summary=plan.summary,
        creates_files=plan.creates_files,
        base_hashes=plan.base_hashes,
        snapshot_id=plan.snapshot_id,
    )
    before = files_of(listing1_workspace)
    with pytest.raises(Exception):
        apply_fix(str(listing1_workspace), sabotaged, idx, store)
    assert files_of(listing1_workspace) == before


def test_regression_gate_rolls_back_member_deletion(listing1_workspace):
    """An adversarial plan that fixes the processor record by deleting the
    union member the badge record requires is rejected and rolled back."""
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    # make the badge record pass first so it can regress
    badge = next(r for r in store.records.values()
                 if r.anchor.path == "orderUI.tsx")
    plan = plan_fix(idx, badge, report.verdict_for(badge.id))
    idx = apply_fix(str(listing1_workspace), plan, idx, store).new_index

    processor = next(r for r in store.records.values()
                     if r.anchor.path == "orderProcessor.ts")
    types = (listing1_workspace / "types.ts").read_bytes()
    start = types.index(b" | 'cancelled'")
    adversarial = FixPlan(
        record_id=processor.id,
        edits=(
            TextEdit("types.ts", start, start + len(b" | 'cancelled'"), ""),
        ),
        summary="delete the member instead of handling it",
        base_hashes={"types.ts": __import__("hashlib").sha256(
            types).hexdigest()},
        snapshot_id=idx.snapshot_id,
    )
    before = files_of(listing1_workspace)
    with pytest.raises(RegressionDetected) as info:
        apply_fix(str(listing1_workspace), adversarial, idx, store)
    assert badge.id in info.value.regressed_ids
    assert files_of(listing1_workspace) == before


def test_rollback_restores_bytes_on_write_failure(listing1_workspace,
                                                  monkeypatch):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    record = next(r for r in store.records.values()
                  if r.anchor.path == "orderProcessor.ts")
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    assert len(plan.touched_files()) + len(plan.creates_files) >= 2

    import os as os_mod
    real_replace = os_mod.replace
    calls = {"n": 0}

    def flaky_replace(src, dst):
        calls["n"] += 1
        if calls["n"] >= 2:
            raise OSError("disk full")
        return real_replace(src, dst)

    before = files_of(listing1_workspace)
    monkeypatch.setattr("vibeguard.fixgen.os.replace", flaky_replace)
    with pytest.raises(OSError):
        apply_fix(str(listing1_workspace), plan, idx, store)
    monkeypatch.undo()
    assert files_of(listing1_workspace) == before


def test_plan_serializes_to_documented_shape(listing1_workspace):
    idx = build_index(files_of(listing1_workspace))
    store, report = verified_store(idx)
    record = store.active()[0]
    plan = plan_fix(idx, record, report.verdict_for(record.id))
    payload = plan.to_ui_json()
    assert set(payload) == {"record_id", "summary", "edits",
                            "creates_files"}
    for e in payload["edits"]:
        assert set(e) == {"path", "start", "end", "replacement"}
