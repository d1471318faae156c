"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line. Randomized suites run >= 500 seeded cases each.

The compiler-oracle-clean clause of the golden-corpus criterion is
asserted literally and expected to fail: after the planned fixes the
processor switch intentionally routes the still-unhandled 'cancelled'
member into assertNever, which a faithful exhaustiveness checker must
report. See /root/notes/decisions.md for the full analysis.
"""

import hashlib
import json
import os
import random
import shutil
import time
from itertools import combinations
from pathlib import Path

import jsonschema
import pytest

from vibeguard.detectors import (
    detect_all, detect_discriminated_union, detect_exhaustive_switch,
    propose_specs,
)
from vibeguard.errors import VibeguardError
from vibeguard.fixgen import FixPlan, TextEdit, apply_fix, plan_fix
from vibeguard.index import build_index, update_index
from vibeguard.oracle import MiniCompilerOracle, discover_sources
from vibeguard.sidecar.pipeline import Engine, HookEvent, handle_hook_event
from vibeguard.sidecar.report import REPORT_SCHEMA
from vibeguard.specstore import (
    IllegalTransition, SpecStore, load, persist, set_status, upsert,
)
from vibeguard.verify import (
    BUDGET_EXCEEDED, FAIL, PASS, check_spec, verify_all,
)

from conftest import CORPUS
from genutil import random_defect, random_edit, random_workspace
from test_specstore import ALLOWED, STATUSES, make_record

CASES = 500  # per randomized suite


def announce(criterion: str, ok: bool, detail: str = "") -> None:
    verdict = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {criterion}: {verdict}{suffix}")


def fresh_workspace(tmp_path, corpus: str) -> Path:
    for p in (CORPUS / corpus).glob("*.ts*"):
        shutil.copy(p, tmp_path)
    return tmp_path


def accepted_engine(workspace: Path) -> Engine:
    engine = Engine(str(workspace))
    engine.analyze(HookEvent("manual"))
    for rid in sorted(engine.store.records):
        engine.decide(rid, "accepted", "acceptance")
    return engine


# -- criterion 1: paper golden corpus (Listing 1) ------------------------------


def test_c1_listing1_scan_fix_rescan(tmp_path, capsys):
    from vibeguard.sidecar.cli import main as cli_main

    workspace = fresh_workspace(tmp_path, "listing1")
    assert cli_main(["--workspace", str(workspace), "scan", "--json"]) == 0
    scan = json.loads(capsys.readouterr().out)
    assert [s["kind"] for s in scan["scopes"]] == ["exhaustive_switch"] * 2
    assert {s["decl"] for s in scan["scopes"]} == {"processOrder",
                                                   "OrderBadge"}

    started = time.monotonic()
    index = build_index(discover_sources(str(workspace)))
    scopes = detect_exhaustive_switch(index)
    assert len(scopes) == 2
    assert len(detect_all(index)) == 2, "no scopes of other kinds"
    records = propose_specs(index, scopes)
    missing = {r.anchor.decl: tuple(r.predicate["missing"]) for r in records}
    assert missing == {"processOrder": ("cancelled",),
                       "OrderBadge": ("shipped",)}

    store = upsert(SpecStore(), records)
    for r in records:
        store = set_status(store, r.id, "accepted", "acceptance")
    report = verify_all(index, store, 30000)
    for record in store.active():
        plan = plan_fix(index, record, report.verdict_for(record.id))
        index = apply_fix(str(workspace), plan, index, store).new_index

    processor = (workspace / "orderProcessor.ts").read_text()
    assert "// side-car: exhaustive guard" in processor
    assert "default: return assertNever(order.status);" in processor
    badge = (workspace / "orderUI.tsx").read_text()
    assert "case 'shipped': return <Badge" in badge
    assert ">Shipped</Badge>;" in badge

    rescan = detect_all(build_index(discover_sources(str(workspace))))
    assert rescan == []

    elapsed = time.monotonic() - started
    assert elapsed < 1.0, f"end-to-end took {elapsed:.3f}s"
    announce("C1 golden corpus scan/fix/rescan", True,
             f"{elapsed * 1000:.0f} ms")


@pytest.mark.xfail(
    strict=True,
    reason="spec contradiction: the planned processOrder fix is the paper's "
           "guard line, which makes the still-missing 'cancelled' member a "
           "compile-time error by design; a faithful exhaustiveness oracle "
           "cannot exit clean (see decisions ledger)")
def test_c1_compiler_oracle_exits_clean_after_fixes(tmp_path):
    workspace = fresh_workspace(tmp_path, "listing1")
    engine = accepted_engine(workspace)
    outcome = engine.analyze(HookEvent("manual"))
    for rid in sorted(outcome.plans):
        engine.apply_plan(rid)
    result = MiniCompilerOracle().run(str(workspace))
    announce("C1 compiler oracle exits clean post-fix",
             result.exit_code == 0,
             "; ".join(d.render() for d in result.diagnostics)
             or "clean")
    assert result.exit_code == 0, [d.render() for d in result.diagnostics]


# -- criterion 2: Listing 2 ------------------------------------------------------


def test_c2_listing2_discriminated_union(tmp_path):
    workspace = fresh_workspace(tmp_path, "listing2")
    index = build_index(discover_sources(str(workspace)))
    scopes = detect_discriminated_union(index)
    assert len(scopes) == 1
    records = propose_specs(index, scopes)
    assert records[0].predicate["members"] == [
        "ADD_TODO", "REMOVE_TODO", "TOGGLE_TODO"]

    store = upsert(SpecStore(), records)
    store = set_status(store, records[0].id, "accepted", "acceptance")
    report = verify_all(index, store, 30000)
    plan = plan_fix(index, records[0], report.verdict_for(records[0].id))
    new_index = apply_fix(str(workspace), plan, index, store).new_index

    text = (workspace / "todoReducer.ts").read_text()
    assert ("export type ActionType = 'ADD_TODO' | 'REMOVE_TODO' | "
            "'TOGGLE_TODO'") in text
    assert "type: ActionType;" in text
    assert text.count("case '") == 3
    assert "default: return assertNever(action.type);" in text

    assert detect_discriminated_union(new_index) == []
    assert detect_exhaustive_switch(new_index) == []
    announce("C2 listing-2 stringly rewrite", True)


# -- criterion 3: template-1 oracle equivalence ----------------------------------


def test_c3_template1_oracle_equivalence():
    member_pool = ["alpha", "beta", "gamma", "delta", "epsilon"]
    checked = 0
    for n in range(1, 6):
        members = member_pool[:n]
        for k in range(0, n + 1):
            for subset in combinations(members, k):
                for default_kind in ("none", "plain", "assert_never"):
                    files = _switch_corpus(members, list(subset),
                                           default_kind)
                    scopes = detect_exhaustive_switch(build_index(files))
                    expected = not (set(subset) == set(members)
                                    or default_kind == "assert_never")
                    assert bool(scopes) == expected, (
                        members, subset, default_kind)
                    checked += 1
    assert checked == sum(2 ** n for n in range(1, 6)) * 3
    announce("C3 template-1 oracle equivalence", True,
             f"{checked} configurations")


def _switch_corpus(members, cases, default_kind):
    lines = ["import { assertNever } from './assertNever';",
             "type Status = " + " | ".join(f"'{m}'" for m in members) + ";",
             "function handle(s: Status) {", "  switch (s) {"]
    for c in cases:
        lines.append(f"    case '{c}': return use(s);")
    if default_kind == "plain":
        lines.append("    default: return null;")
    elif default_kind == "assert_never":
        lines.append("    default: return assertNever(s);")
    lines.extend(["  }", "}"])
    return {"main.ts": "\n".join(lines) + "\n",
            "assertNever.ts": "export function assertNever(x: never): never"
                              " { throw new Error('x'); }\n"}


# -- criterion 4: randomized property suites (>= 500 cases each) -------------------


def test_c4a_incremental_index_equivalence():
    failures = 0
    for seed in range(CASES):
        rng = random.Random(seed)
        files = random_workspace(rng, max_files=4)
        idx = build_index(dict(files))
        for _ in range(rng.randint(1, 6)):
            path, text = random_edit(rng, files)
            if text is None:
                files.pop(path, None)
            else:
                files[path] = text
            idx = update_index(idx, {path: text})
        if idx != build_index(dict(files)):
            failures += 1
    announce("C4a incremental-vs-full index equality", failures == 0,
             f"{CASES} cases")
    assert failures == 0


def test_c4b_fix_fixpoint_and_parse_preservation(tmp_path):
    failures = []
    for seed in range(CASES):
        rng = random.Random(10_000 + seed)
        defect = random_defect(rng)
        case_dir = tmp_path / f"case{seed}"
        case_dir.mkdir()
        for name, text in defect.files.items():
            (case_dir / name).write_text(text)
        index = build_index(discover_sources(str(case_dir)))
        scopes = [s for s in detect_all(index) if s.kind == defect.kind]
        if not scopes:
            failures.append((seed, "defect not detected"))
            continue
        records = propose_specs(index, scopes)
        store = upsert(SpecStore(), records)
        for r in records:
            store = set_status(store, r.id, "accepted", "t")
        report = verify_all(index, store, 30000)
        try:
            for record in store.active():
                verdict = report.verdict_for(record.id)
                if verdict.outcome != FAIL:
                    continue
                plan = plan_fix(index, record, verdict)
                index = apply_fix(str(case_dir), plan, index,
                                  store).new_index
        except VibeguardError as exc:
            failures.append((seed, f"{type(exc).__name__}: {exc}"))
            continue
        # fixpoint: the fixed kind is silent at the fixed anchors
        rebuilt = build_index(discover_sources(str(case_dir)))
        if [s for s in detect_all(rebuilt) if s.kind == defect.kind]:
            failures.append((seed, "scope survived the fix"))
        if rebuilt.failed_files or any(rebuilt.warnings.values()):
            failures.append((seed, "parse degraded after the fix"))
        shutil.rmtree(case_dir)
    announce("C4b fix fixpoint + parse preservation", not failures,
             f"{CASES} cases" + (f"; first: {failures[0]}" if failures
                                 else ""))
    assert not failures, failures[:5]


def test_c4c_store_lifecycle_and_round_trip(tmp_path):
    failures = 0
    path = tmp_path / "specs.json"
    for seed in range(CASES):
        rng = random.Random(20_000 + seed)
        pool = [make_record(discriminant=f"s{i}.f", path=f"f{i}.ts",
                            decl=f"d{i}")
                for i in range(rng.randint(1, 6))]
        store = SpecStore()
        for _ in range(rng.randint(1, 20)):
            if rng.random() < 0.5:
                store = upsert(store, rng.sample(
                    pool, rng.randint(1, len(pool))))
            elif store.records:
                rid = rng.choice(sorted(store.records))
                before = store.get(rid).status
                target = rng.choice(STATUSES)
                try:
                    store = set_status(store, rid, target, "t")
                    legal = (before, target) in ALLOWED
                except IllegalTransition:
                    legal = (before, target) not in ALLOWED
                if not legal:
                    failures += 1
        persist(store, str(path))
        if load(str(path)) != store:
            failures += 1
    announce("C4c lifecycle state machine + round trip", failures == 0,
             f"{CASES} cases")
    assert failures == 0


def test_c4d_rollback_byte_exactness(tmp_path):
    failures = 0
    real_replace = os.replace
    for seed in range(CASES):
        rng = random.Random(30_000 + seed)
        defect = random_defect(rng)
        case_dir = tmp_path / f"case{seed}"
        case_dir.mkdir()
        for name, text in defect.files.items():
            (case_dir / name).write_text(text)
        index = build_index(discover_sources(str(case_dir)))
        scopes = [s for s in detect_all(index) if s.kind == defect.kind]
        if not scopes:
            shutil.rmtree(case_dir)
            continue
        records = propose_specs(index, scopes)
        store = upsert(SpecStore(), records)
        for r in records:
            store = set_status(store, r.id, "accepted", "t")
        report = verify_all(index, store, 30000)
        record = store.active()[0]
        verdict = report.verdict_for(record.id)
        if verdict.outcome != FAIL:
            shutil.rmtree(case_dir)
            continue
        try:
            plan = plan_fix(index, record, verdict)
        except VibeguardError:
            shutil.rmtree(case_dir)
            continue
        before = {p.name: p.read_bytes()
                  for p in sorted(case_dir.glob("*.ts*"))}
        inject_write_failure = seed % 10 == 0
        if inject_write_failure and (len(plan.touched_files())
                                     + len(plan.creates_files)) >= 2:
            calls = {"n": 0}

            def flaky(src, dst):
                calls["n"] += 1
                if calls["n"] >= 2:
                    raise OSError("injected write failure")
                return real_replace(src, dst)

            os.replace = flaky
            try:
                apply_fix(str(case_dir), plan, index, store)
                failures += 1  # must have raised
            except OSError:
                pass
            finally:
                os.replace = real_replace
        else:
            sabotaged = FixPlan(
                record_id=plan.record_id,
                edits=tuple(TextEdit(e.path, e.start, e.end,
                                     "] class ( 'unterminated\n")
                            for e in plan.edits[:1]) or plan.edits,
                summary=plan.summary,
                creates_files=plan.creates_files,
                base_hashes=plan.base_hashes,
                snapshot_id=plan.snapshot_id,
            )
            try:
                apply_fix(str(case_dir), sabotaged, index, store)
                failures += 1  # post-edit validation must reject it
            except VibeguardError:
                pass
        after = {p.name: p.read_bytes()
                 for p in sorted(case_dir.glob("*.ts*"))}
        if after != before:
            failures += 1
        shutil.rmtree(case_dir)
    announce("C4d rollback byte-exactness", failures == 0, f"{CASES} cases")
    assert failures == 0


def test_c4e_budget_monotonicity():
    failures = 0
    for seed in range(CASES):
        rng = random.Random(40_000 + seed)
        files = random_workspace(rng, max_files=2)
        idx = build_index(files)
        records = propose_specs(idx, detect_all(idx))
        store = upsert(SpecStore(), records)
        for r in records:
            store = set_status(
                store, r.id,
                "accepted" if rng.random() < 0.7 else "soft", "t")
        small = verify_all(idx, store, 1e-9, MiniCompilerOracle())
        large = verify_all(idx, store, 60000, MiniCompilerOracle())
        small_by = {v.record_id: v for v in small.verdicts}
        for v in large.verdicts:
            sv = small_by[v.record_id]
            if sv.tier == "syntactic" and v.tier == "syntactic":
                if sv.outcome != v.outcome:
                    failures += 1
            elif sv.outcome == BUDGET_EXCEEDED:
                if v.outcome not in (PASS, FAIL):
                    failures += 1
            elif sv.outcome == PASS and v.outcome == FAIL and \
                    v.tier == "syntactic":
                failures += 1
    announce("C4e budget monotonicity", failures == 0, f"{CASES} cases")
    assert failures == 0


# -- criterion 5: hook contract ----------------------------------------------------


def test_c5_hook_contract_reproducible(tmp_path):
    workspace = fresh_workspace(tmp_path, "listing1")
    event = HookEvent.from_json({
        "event": "post-edit",
        "changed": ["orderUI.tsx", "orderProcessor.ts"],
        "session": "acceptance",
    })
    pre_codes = []
    for _ in range(10):
        report, code = handle_hook_event(str(workspace), event)
        jsonschema.validate(report, REPORT_SCHEMA)
        pre_codes.append(code)
        assert len(report["proposed"]) == 2
    assert pre_codes == [0] * 10

    store = load(str(workspace / ".vibeguard/specs.json"))
    for rid in sorted(store.records):
        store = set_status(store, rid, "accepted", "acceptance")
    persist(store, str(workspace / ".vibeguard/specs.json"))

    post_codes = []
    for _ in range(10):
        report, code = handle_hook_event(str(workspace), event)
        jsonschema.validate(report, REPORT_SCHEMA)
        post_codes.append(code)
        assert len(report["failures"]) == 2
    assert post_codes == [2] * 10
    announce("C5 hook contract 10x reproducible", True)
