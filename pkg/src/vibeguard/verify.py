"""Tiered verification of accepted/soft records against an index snapshot.

Tier 1 is pure index lookups and always runs to completion; tier 2 is a
single compiler-oracle invocation per report, run only when some record
passed tier 1 through its assertNever/satisfies disjunct and budget
remains. Soft records only ever produce warnings.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Optional

from vibeguard.errors import OracleTimeout, OracleUnavailable
from vibeguard.index.build import Resolver
from vibeguard.index.model import (
    CodebaseIndex, ComparisonChain, DEFAULT_ASSERT_NEVER, MappingLiteral,
    SwitchSite, UnionType,
)
from vibeguard.oracle import CompilerOracle, OracleDiagnostic
from vibeguard.specstore import (
    Anchor, KIND_DISCRIMINATED_UNION, KIND_EXHAUSTIVE_SWITCH,
    KIND_SATISFIES_GUARD, KIND_UNION_ALIAS, SpecRecord, SpecStore,
    STATUS_ACCEPTED, STATUS_SOFT,
)
from vibeguard.syntax.parser import source_of
from vibeguard.syntax.spans import Span

TIER_SYNTACTIC = "syntactic"
TIER_COMPILE = "compile"

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"
BUDGET_EXCEEDED = "budget-exceeded"

SEV_ERROR = "error"
SEV_WARNING = "warning"

ORACLE_RAN = "ran"
ORACLE_SKIPPED = "skipped"
ORACLE_UNAVAILABLE = "unavailable"
ORACLE_NOT_NEEDED = "not-needed"
ORACLE_BUDGET_EXCEEDED = "budget-exceeded"


@dataclass(frozen=True)
class VerdictDiagnostic:
    span: Optional[Span]
    message: str
    severity: str


@dataclass(frozen=True)
class Verdict:
    record_id: str
    tier: str
    outcome: str
    diagnostics: tuple[VerdictDiagnostic, ...] = ()
    missing_members: tuple[str, ...] = ()


@dataclass(frozen=True)
class VerificationReport:
    snapshot_id: str
    verdicts: tuple[Verdict, ...]
    oracle_status: str
    unmapped_diagnostics: tuple[OracleDiagnostic, ...] = ()
    duration_ms: float = 0.0

    def verdict_for(self, record_id: str) -> Optional[Verdict]:
        for v in self.verdicts:
            if v.record_id == record_id:
                return v
        return None

    def hard_failures(self, store: SpecStore) -> list[Verdict]:
        out = []
        for v in self.verdicts:
            rec = store.records.get(v.record_id)
            if rec is not None and rec.status == STATUS_ACCEPTED and \
                    v.outcome == FAIL:
                out.append(v)
        return out


def _severity(record: SpecRecord) -> str:
    return SEV_WARNING if record.status == STATUS_SOFT else SEV_ERROR


# -- anchor re-resolution -----------------------------------------------


def resolve_switch_site(index: CodebaseIndex,
                        record: SpecRecord) -> Optional[SwitchSite]:
    """Name-first, span-second re-resolution of a switch anchor."""
    sites = index.switch_sites.get(record.anchor.path, ())
    discriminant = record.predicate.get("discriminant")
    matches = [s for s in sites
               if s.enclosing_decl == record.anchor.decl
               and s.discriminant == discriminant]
    ordinal = record.predicate.get("ordinal", 0)
    if len(matches) > ordinal:
        return matches[ordinal]
    for s in sites:
        if s.span.start == record.anchor.start:
            return s
    return None


def resolve_chain_container(index: CodebaseIndex, record: SpecRecord
                            ) -> Optional[str]:
    """A chain anchor resolves while its enclosing declaration (or, for
    module-level chains, the file) still exists; the chain itself is
    expected to disappear once rewritten."""
    facts = index.file_facts.get(record.anchor.path)
    if facts is None:
        return None
    decl = record.anchor.decl
    if decl and facts.function_named(decl) is None:
        return None
    return record.anchor.path


def resolve_mapping(index: CodebaseIndex,
                    record: SpecRecord) -> Optional[MappingLiteral]:
    mappings = index.mapping_literals.get(record.anchor.path, ())
    const_name = record.predicate.get("const_name")
    for m in mappings:
        if m.const_name == const_name:
            return m
    for m in mappings:
        if m.span.start == record.anchor.start:
            return m
    return None


def resolve_anchor(index: CodebaseIndex, record: SpecRecord) -> bool:
    """Does the record's scope anchor still resolve in this snapshot?"""
    if record.kind == KIND_EXHAUSTIVE_SWITCH:
        return resolve_switch_site(index, record) is not None
    if record.kind == KIND_DISCRIMINATED_UNION:
        return resolve_chain_container(index, record) is not None
    if record.kind == KIND_UNION_ALIAS:
        return record.predicate.get("target_file") in index.file_facts
    if record.kind == KIND_SATISFIES_GUARD:
        return resolve_mapping(index, record) is not None
    return False


def _current_anchor_span(index: CodebaseIndex,
                         record: SpecRecord) -> Optional[Span]:
    """Where the record's scope lives in this snapshot (for diagnostic
    mapping); None when unresolved."""
    if record.kind == KIND_EXHAUSTIVE_SWITCH:
        site = resolve_switch_site(index, record)
        return site.span if site is not None else None
    if record.kind == KIND_SATISFIES_GUARD:
        m = resolve_mapping(index, record)
        return m.span if m is not None else None
    if record.kind == KIND_DISCRIMINATED_UNION:
        file = resolve_chain_container(index, record)
        if file is None:
            return None
        facts = index.file_facts[file]
        if record.anchor.decl:
            fn = facts.function_named(record.anchor.decl)
            if fn is not None:
                return fn.span
        return index.files[file].root_span
    if record.kind == KIND_UNION_ALIAS:
        target = record.predicate.get("target_file")
        if target in index.files:
            return index.files[target].root_span
        return None
    return None


# -- tier-1 checks -------------------------------------------------------


def check_spec(index: CodebaseIndex, record: SpecRecord) -> Verdict:
    """Tier-1 (syntactic) evaluation of one accepted/soft record."""
    if record.kind == KIND_EXHAUSTIVE_SWITCH:
        return _check_switch(index, record)
    if record.kind == KIND_DISCRIMINATED_UNION:
        return _check_chain(index, record)
    if record.kind == KIND_UNION_ALIAS:
        return _check_alias(index, record)
    if record.kind == KIND_SATISFIES_GUARD:
        return _check_mapping(index, record)
    return Verdict(record.id, TIER_SYNTACTIC, NOT_APPLICABLE)


def _lookup_union(index: CodebaseIndex, name: str, file: str,
                  anchor_file: str) -> Optional[UnionType]:
    u = index.unions.get((file, name))
    if u is not None:
        return u
    return Resolver(index.file_facts).union(name, anchor_file)


def _check_switch(index: CodebaseIndex, record: SpecRecord) -> Verdict:
    site = resolve_switch_site(index, record)
    if site is None:
        return Verdict(record.id, TIER_SYNTACTIC, NOT_APPLICABLE)
    union = _lookup_union(index, record.predicate["union_name"],
                          record.predicate.get("union_file", ""),
                          record.anchor.path)
    sev = _severity(record)
    if union is None:
        return Verdict(record.id, TIER_SYNTACTIC, FAIL, (
            VerdictDiagnostic(
                site.span,
                f"union {record.predicate['union_name']} is no longer "
                f"declared", sev),))
    cases = set(site.cases)
    members = set(union.members)
    # a case label outside the union fails compilation no matter what, so
    # the guard disjunct only counts when every label is a member
    if cases == members or (site.default_kind == DEFAULT_ASSERT_NEVER
                            and cases <= members):
        return Verdict(record.id, TIER_SYNTACTIC, PASS)
    missing = tuple(m for m in union.members if m not in cases)
    extraneous = tuple(c for c in site.cases if c not in members)
    msgs = []
    if missing:
        msgs.append("unhandled members: " + ", ".join(
            f"'{m}'" for m in missing))
    if extraneous:
        msgs.append("labels outside the union: " + ", ".join(
            f"'{c}'" for c in extraneous))
    guard_note = "" if site.default_kind == DEFAULT_ASSERT_NEVER \
        else " and has no assertNever default"
    message = (f"switch on `{site.discriminant}` is not exhaustive over "
               f"{union.name} ({'; '.join(msgs)}){guard_note}")
    return Verdict(record.id, TIER_SYNTACTIC, FAIL,
                   (VerdictDiagnostic(site.span, message, sev),),
                   missing_members=missing)


def _check_chain(index: CodebaseIndex, record: SpecRecord) -> Verdict:
    file = resolve_chain_container(index, record)
    if file is None:
        return Verdict(record.id, TIER_SYNTACTIC, NOT_APPLICABLE)
    predicate = record.predicate
    subject = predicate["subject"]
    decl = record.anchor.decl
    sev = _severity(record)
    diags: list[VerdictDiagnostic] = []

    remaining = [c for c in index.comparison_chains.get(file, ())
                 if c.subject == subject and c.enclosing_decl == decl]
    if remaining:
        diags.append(VerdictDiagnostic(
            remaining[0].root_span,
            f"string comparisons on `{subject}` have not been rewritten "
            f"to a switch", sev))
    switches = [s for s in index.switch_sites.get(file, ())
                if s.discriminant == subject and s.enclosing_decl == decl]
    if not switches:
        diags.append(VerdictDiagnostic(
            _current_anchor_span(index, record),
            f"no switch over `{subject}` found in "
            f"{decl or 'module scope'}", sev))
    union_name = predicate["union_name"]
    target_file = predicate.get("target_file", file)
    union = _lookup_union(index, union_name, target_file, file)
    if union is None:
        diags.append(VerdictDiagnostic(
            _current_anchor_span(index, record),
            f"union {union_name} is not declared in {target_file}", sev))
    elif set(union.members) < set(predicate.get("members", ())):
        diags.append(VerdictDiagnostic(
            union.decl_span,
            f"union {union_name} lacks some observed values", sev))
    if predicate.get("subject_decl"):
        kind, resolved = Resolver(index.file_facts).path_type(
            subject, file, decl)
        if kind != "union" or resolved is None or \
                resolved.name != union_name:
            diags.append(VerdictDiagnostic(
                _current_anchor_span(index, record),
                f"`{subject}` is not declared as {union_name}", sev))
    if diags:
        return Verdict(record.id, TIER_SYNTACTIC, FAIL, tuple(diags))
    return Verdict(record.id, TIER_SYNTACTIC, PASS)


def _check_alias(index: CodebaseIndex, record: SpecRecord) -> Verdict:
    predicate = record.predicate
    target_file = predicate.get("target_file")
    if target_file not in index.file_facts:
        return Verdict(record.id, TIER_SYNTACTIC, NOT_APPLICABLE)
    sev = _severity(record)
    diags: list[VerdictDiagnostic] = []
    union_name = predicate["union_name"]
    members = tuple(predicate.get("members", ()))
    union = index.unions.get((target_file, union_name))
    if union is None:
        diags.append(VerdictDiagnostic(
            index.files[target_file].root_span,
            f"union {union_name} is not declared in {target_file}", sev))
    elif set(union.members) != set(members):
        diags.append(VerdictDiagnostic(
            union.decl_span,
            f"union {union_name} does not have the exact member set "
            + ", ".join(f"'{m}'" for m in members), sev))
    resolver = Resolver(index.file_facts)
    for site in predicate.get("annotation_sites", ()):
        found = resolver.function(site["function"], site["file"])
        annotated = False
        if found is not None and site["arg_index"] < len(found[1].params):
            ptext = found[1].params[site["arg_index"]].type_text
            annotated = ptext is not None and ptext.strip() == union_name
        if not annotated:
            diags.append(VerdictDiagnostic(
                found[1].span if found is not None else None,
                f"parameter {site['arg_index'] + 1} of "
                f"{site['function']}() is not annotated with {union_name}",
                sev))
    if diags:
        return Verdict(record.id, TIER_SYNTACTIC, FAIL, tuple(diags))
    return Verdict(record.id, TIER_SYNTACTIC, PASS)


def _check_mapping(index: CodebaseIndex, record: SpecRecord) -> Verdict:
    mapping = resolve_mapping(index, record)
    if mapping is None:
        return Verdict(record.id, TIER_SYNTACTIC, NOT_APPLICABLE)
    predicate = record.predicate
    key_union_name = predicate["key_union_name"]
    sev = _severity(record)
    guard_ok = (mapping.has_satisfies_guard
                and mapping.intended_key_union is not None
                and mapping.intended_key_union.name == key_union_name)
    if guard_ok:
        return Verdict(record.id, TIER_SYNTACTIC, PASS)
    union = _lookup_union(index, key_union_name,
                          predicate.get("key_union_file", ""),
                          record.anchor.path)
    missing = ()
    if union is not None:
        missing = tuple(m for m in union.members if m not in mapping.keys)
    return Verdict(record.id, TIER_SYNTACTIC, FAIL, (
        VerdictDiagnostic(
            mapping.span,
            f"`{mapping.const_name}` lacks a `satisfies "
            f"Record<{key_union_name}, ...>` guard", sev),),
        missing_members=missing)


def _needs_compile(index: CodebaseIndex, record: SpecRecord,
                   verdict: Verdict) -> bool:
    """Tier-2 applies when a pass leans on the compile conjunct: an
    assertNever default standing in for uncovered cases, or a satisfies
    guard whose key totality only the compiler certifies."""
    if verdict.outcome != PASS:
        return False
    if record.kind == KIND_EXHAUSTIVE_SWITCH:
        site = resolve_switch_site(index, record)
        if site is None or site.resolved_union is None:
            return False
        return site.default_kind == DEFAULT_ASSERT_NEVER and \
            set(site.cases) != set(site.resolved_union.members)
    if record.kind == KIND_SATISFIES_GUARD:
        return True
    return False


# -- report assembly ------------------------------------------------------


def verify_all(
    index: CodebaseIndex,
    store: SpecStore,
    budget_ms: float = 30000.0,
    oracle: Optional[CompilerOracle] = None,
    workspace_dir: Optional[str] = None,
) -> VerificationReport:
    """Check every accepted/soft record: hard before soft, then by anchor.

    All tier-1 checks always run. The compile oracle runs at most once,
    only if some record passed via its compile-backed disjunct and budget
    remains; running out of budget marks pending tier-2 work
    budget-exceeded without touching tier-1 results."""
    if budget_ms <= 0:
        raise ValueError("budget must be positive")
    started = time.monotonic()
    records = sorted(
        store.active(),
        key=lambda r: (0 if r.status == STATUS_ACCEPTED else 1,
                       r.anchor.path, r.anchor.start, r.id))
    verdicts: dict[str, Verdict] = {}
    pending_compile: list[SpecRecord] = []
    for rec in records:
        v = check_spec(index, rec)
        verdicts[rec.id] = v
        if _needs_compile(index, rec, v):
            pending_compile.append(rec)

    oracle_status = ORACLE_NOT_NEEDED
    unmapped: tuple[OracleDiagnostic, ...] = ()
    if pending_compile and oracle is not None:
        elapsed_ms = (time.monotonic() - started) * 1000.0
        if elapsed_ms >= budget_ms:
            oracle_status = ORACLE_BUDGET_EXCEEDED
            for rec in pending_compile:
                verdicts[rec.id] = Verdict(
                    rec.id, TIER_COMPILE, BUDGET_EXCEEDED, (
                        VerdictDiagnostic(
                            None, "tier-1 passed; compile check skipped: "
                                  "budget exhausted", SEV_WARNING),))
        else:
            try:
                diags = _run_oracle(index, oracle, workspace_dir)
            except OracleUnavailable as exc:
                oracle_status = ORACLE_UNAVAILABLE
                for rec in pending_compile:
                    v = verdicts[rec.id]
                    verdicts[rec.id] = replace(v, diagnostics=v.diagnostics + (
                        VerdictDiagnostic(
                            None, f"compile check skipped: {exc}",
                            SEV_WARNING),))
            except OracleTimeout as exc:
                oracle_status = ORACLE_BUDGET_EXCEEDED
                for rec in pending_compile:
                    verdicts[rec.id] = Verdict(
                        rec.id, TIER_COMPILE, BUDGET_EXCEEDED, (
                            VerdictDiagnostic(
                                None, f"compile check timed out: {exc}",
                                SEV_WARNING),))
            else:
                oracle_status = ORACLE_RAN
                unmapped = _apply_compile_results(
                    index, store, records, verdicts, pending_compile, diags)
    elif pending_compile:
        oracle_status = ORACLE_SKIPPED

    ordered = tuple(verdicts[r.id] for r in records)
    return VerificationReport(
        snapshot_id=index.snapshot_id,
        verdicts=ordered,
        oracle_status=oracle_status,
        unmapped_diagnostics=unmapped,
        duration_ms=(time.monotonic() - started) * 1000.0,
    )


def _run_oracle(index: CodebaseIndex, oracle: CompilerOracle,
                workspace_dir: Optional[str]) -> list[OracleDiagnostic]:
    check_index = getattr(oracle, "check_index", None)
    if workspace_dir is None and callable(check_index):
        return check_index(index)
    if workspace_dir is None:
        raise OracleUnavailable(
            "oracle requires a workspace directory but none was given")
    return list(oracle.run(workspace_dir).diagnostics)


def _uncovered_members(index: CodebaseIndex,
                       record: SpecRecord) -> tuple[str, ...]:
    """Members a compile-tier failure leaves unhandled (templates 1/4)."""
    if record.kind == KIND_EXHAUSTIVE_SWITCH:
        site = resolve_switch_site(index, record)
        if site is not None and site.resolved_union is not None:
            return tuple(m for m in site.resolved_union.members
                         if m not in site.cases)
    if record.kind == KIND_SATISFIES_GUARD:
        mapping = resolve_mapping(index, record)
        if mapping is not None and mapping.intended_key_union is not None:
            return tuple(m for m in mapping.intended_key_union.members
                         if m not in mapping.keys)
    return ()


def _offset_of(index: CodebaseIndex, diag: OracleDiagnostic) -> Optional[int]:
    ast = index.files.get(diag.path)
    if ast is None:
        return None
    try:
        return source_of(ast).offset_of(diag.line, diag.col)
    except Exception:
        return None


def _apply_compile_results(index, store, records, verdicts, pending_compile,
                           diags) -> tuple[OracleDiagnostic, ...]:
    spans: dict[str, Optional[Span]] = {
        r.id: _current_anchor_span(index, r) for r in records}
    pending_ids = {r.id for r in pending_compile}
    mapped_ids: dict[str, list[OracleDiagnostic]] = {}
    unmapped: list[OracleDiagnostic] = []
    for diag in diags:
        offset = _offset_of(index, diag)
        best: Optional[tuple[int, str]] = None
        if offset is not None:
            for rec in records:
                span = spans.get(rec.id)
                if span is None or span.file_id != diag.path:
                    continue
                if span.start <= offset < max(span.end, span.start + 1):
                    size = span.end - span.start
                    if best is None or size < best[0]:
                        best = (size, rec.id)
        if best is None:
            unmapped.append(diag)
        else:
            mapped_ids.setdefault(best[1], []).append(diag)

    for rec in pending_compile:
        hits = mapped_ids.get(rec.id, [])
        sev = _severity(store.records[rec.id])
        if hits:
            extra = tuple(
                VerdictDiagnostic(spans.get(rec.id), d.message, sev)
                for d in hits)
            old = verdicts[rec.id]
            missing = old.missing_members or _uncovered_members(index, rec)
            verdicts[rec.id] = Verdict(rec.id, TIER_COMPILE, FAIL,
                                       old.diagnostics + extra, missing)
        else:
            verdicts[rec.id] = Verdict(rec.id, TIER_COMPILE, PASS)

    # diagnostics inside anchors of records that did not need the oracle
    # are surfaced without changing their tier-1 outcome
    for rid, hits in mapped_ids.items():
        if rid in pending_ids:
            continue
        old = verdicts.get(rid)
        if old is None:
            unmapped.extend(hits)
            continue
        sev = _severity(store.records[rid])
        extra = tuple(VerdictDiagnostic(spans.get(rid), d.message, sev)
                      for d in hits)
        verdicts[rid] = replace(old, diagnostics=old.diagnostics + extra)
    return tuple(unmapped)


@dataclass(frozen=True)
class CompileResult:
    exit_code: int
    diagnostics: tuple[OracleDiagnostic, ...]
    by_record: dict[str, tuple[OracleDiagnostic, ...]]
    unmapped: tuple[OracleDiagnostic, ...]


def compile_check(workspace_dir: str, oracle: CompilerOracle,
                  index: Optional[CodebaseIndex] = None,
                  store: Optional[SpecStore] = None) -> CompileResult:
    """One oracle invocation over the workspace, with each diagnostic
    mapped to the record whose anchor contains it."""
    result = oracle.run(workspace_dir)
    if index is None or store is None:
        return CompileResult(result.exit_code, result.diagnostics, {},
                             result.diagnostics)
    records = store.active()
    spans = {r.id: _current_anchor_span(index, r) for r in records}
    by_record: dict[str, list[OracleDiagnostic]] = {}
    unmapped: list[OracleDiagnostic] = []
    for diag in result.diagnostics:
        offset = _offset_of(index, diag)
        best = None
        if offset is not None:
            for rec in records:
                span = spans.get(rec.id)
                if span is None or span.file_id != diag.path:
                    continue
                if span.start <= offset < max(span.end, span.start + 1):
                    size = span.end - span.start
                    if best is None or size < best[0]:
                        best = (size, rec.id)
        if best is None:
            unmapped.append(diag)
        else:
            by_record.setdefault(best[1], []).append(diag)
    return CompileResult(
        result.exit_code, result.diagnostics,
        {k: tuple(v) for k, v in by_record.items()}, tuple(unmapped))
