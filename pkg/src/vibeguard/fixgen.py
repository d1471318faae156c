"""Turn failing verdicts into concrete byte-span edit plans and apply
them with re-parse validation, a regression gate, and exact rollback.

Edits are string surgery on byte spans, never AST pretty-printing, so
untouched formatting survives. Case-stub bodies are synthesized only
from a pattern every sibling case shares; when siblings disagree the
plan falls back to the assertNever guard alone and says so.
"""

from __future__ import annotations

import difflib
import hashlib
import os
import posixpath
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from vibeguard.errors import (
    AmbiguousFix, PostEditParseFailure, RegressionDetected, StaleSnapshot,
    UnfixableScope,
)
from vibeguard.index.build import Resolver
from vibeguard.index.model import (
    CodebaseIndex, ComparisonChain, DEFAULT_NONE, DEFAULT_PLAIN,
    MappingLiteral, SwitchSite, UnionType,
)
from vibeguard.index.build import update_index
from vibeguard.specstore import (
    KIND_DISCRIMINATED_UNION, KIND_EXHAUSTIVE_SWITCH, KIND_SATISFIES_GUARD,
    KIND_UNION_ALIAS, SpecRecord, SpecStore, STATUS_ACCEPTED,
)
from vibeguard.syntax.nodes import (
    CallExpr, FunctionDecl, ImportDecl, InterfaceDecl, JsxExpr, ReturnStmt,
    TypeAliasDecl,
)
from vibeguard.syntax.parser import canonical_path, node_text, source_of
from vibeguard.verify import (
    FAIL, NOT_APPLICABLE, PASS, Verdict, check_spec, resolve_mapping,
    resolve_switch_site,
)

ASSERT_NEVER_FILE = "assertNever.ts"

ASSERT_NEVER_SOURCE = """\
export function assertNever(x: never): never {
  throw new Error(`Unexpected case: ${JSON.stringify(x)}`);
}
"""

_JSX_TAG_RE = re.compile(r"^<\s*([A-Za-z_$][\w.$]*)")
_ATTR_RE = re.compile(r'([A-Za-z_][\w-]*)=("[^"]*"|\'[^\']*\')')


@dataclass(frozen=True)
class TextEdit:
    path: str
    start: int  # byte offset in the pre-edit file
    end: int
    replacement: str


@dataclass(frozen=True)
class FixPlan:
    record_id: str
    edits: tuple[TextEdit, ...]  # descending start offsets per file
    summary: str
    creates_files: dict[str, str] = field(default_factory=dict)
    base_hashes: dict[str, str] = field(default_factory=dict)
    snapshot_id: str = ""
    notes: tuple[str, ...] = ()

    def touched_files(self) -> list[str]:
        return sorted({e.path for e in self.edits})

    def to_ui_json(self) -> dict:
        return {
            "record_id": self.record_id,
            "summary": self.summary,
            "edits": [{"path": e.path, "start": e.start, "end": e.end,
                       "replacement": e.replacement} for e in self.edits],
            "creates_files": dict(self.creates_files),
        }


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _first_upper(value: str) -> str:
    return value[:1].upper() + value[1:] if value else value


def _indent_at(text: str, offset_char: int) -> str:
    line_start = text.rfind("\n", 0, offset_char) + 1
    indent = []
    for ch in text[line_start:offset_char]:
        if ch in " \t":
            indent.append(ch)
        else:
            break
    return "".join(indent)


def apply_edits_to_bytes(data: bytes, edits: list[TextEdit]) -> bytes:
    """Apply non-overlapping byte-span edits, highest offset first."""
    ordered = sorted(edits, key=lambda e: e.start, reverse=True)
    for i in range(len(ordered) - 1):
        if ordered[i + 1].end > ordered[i].start:
            raise ValueError("overlapping edits in one plan")
    out = data
    for e in ordered:
        if e.start < 0 or e.end > len(data):
            raise ValueError(f"edit outside file bounds: {e}")
        out = out[:e.start] + e.replacement.encode("utf-8") + out[e.end:]
    return out


def _relative_import(from_file: str, to_file: str) -> str:
    target = posixpath.splitext(to_file)[0]
    rel = posixpath.relpath(target, posixpath.dirname(from_file) or ".")
    if not rel.startswith("."):
        rel = "./" + rel
    return rel


def _ensure_assert_never(index: CodebaseIndex, file: str,
                         edits: list[TextEdit],
                         creates: dict[str, str]) -> None:
    """Make `assertNever` callable from `file`: create the helper module
    if the workspace lacks one and add a named import if needed."""
    resolver = Resolver(index.file_facts)
    if resolver.function("assertNever", file) is not None:
        return
    helper = None
    for f in sorted(index.file_facts):
        if index.file_facts[f].function_named("assertNever") is not None:
            helper = f
            break
    if helper is None:
        helper = ASSERT_NEVER_FILE
        if helper not in index.files:
            creates[helper] = ASSERT_NEVER_SOURCE
    facts = index.file_facts[file]
    for imp in facts.imports:
        if imp.local == "assertNever":
            return  # imported already (module may be the one being created)
    spec = _relative_import(file, helper)
    ast = index.files[file]
    import_items = [i for i in ast.items if isinstance(i, ImportDecl)]
    if import_items:
        at = import_items[-1].span.end
        text = f"\nimport {{ assertNever }} from '{spec}';"
    else:
        at = 0
        text = f"import {{ assertNever }} from '{spec}';\n"
    edits.append(TextEdit(file, at, at, text))


def _union_decl_edit(index: CodebaseIndex, target_file: str, name: str,
                     members: list[str]) -> Optional[TextEdit]:
    """Insert `export type Name = 'a' | 'b'` after existing type
    declarations; None when an equal union already exists."""
    facts = index.file_facts.get(target_file)
    if facts is None:
        return None
    existing = facts.union_named(name)
    if existing is not None and set(existing.members) == set(members):
        return None
    ast = index.files[target_file]
    decl = f"export type {name} = " + " | ".join(f"'{m}'" for m in members)
    anchor = None
    for item in ast.items:
        if isinstance(item, (TypeAliasDecl, InterfaceDecl)):
            anchor = item
    if anchor is not None:
        return TextEdit(target_file, anchor.span.end, anchor.span.end,
                        f"\n\n{decl}")
    imports = [i for i in ast.items if isinstance(i, ImportDecl)]
    if imports:
        at = imports[-1].span.end
        return TextEdit(target_file, at, at, f"\n\n{decl}")
    return TextEdit(target_file, 0, 0, f"{decl}\n\n")


# -- exhaustive switch ----------------------------------------------------


def _sibling_pattern(index: CodebaseIndex, site: SwitchSite
                     ) -> Optional[tuple[str, str, bool]]:
    """(template clause text, template member value, is_jsx) when every
    case is a single return sharing a JSX element or callee; else None."""
    clauses = site.node.cases
    if not clauses:
        return None
    shapes = []
    for clause in clauses:
        if len(clause.body) != 1 or not isinstance(clause.body[0],
                                                   ReturnStmt):
            return None
        value = clause.body[0].value
        if isinstance(value, JsxExpr):
            ast = index.files[site.file]
            m = _JSX_TAG_RE.match(node_text(ast, value.span))
            shapes.append(("jsx", m.group(1) if m else ""))
        elif isinstance(value, CallExpr):
            shapes.append(("call", canonical_path(value.callee) or ""))
        else:
            return None
    if len({s for s in shapes}) != 1 or not shapes[0][1]:
        return None
    ast = index.files[site.file]
    last = clauses[-1]
    last_value = site.case_infos[-1].value if site.case_infos else None
    if last_value is None:
        return None
    return (node_text(ast, last.span), last_value, shapes[0][0] == "jsx")


def _synthesize_stub(template: str, old_value: str, new_value: str,
                     is_jsx: bool) -> str:
    out = template.replace(f"'{old_value}'", f"'{new_value}'")
    out = out.replace(f'"{old_value}"', f'"{new_value}"')
    old_cap, new_cap = _first_upper(old_value), _first_upper(new_value)
    out = out.replace(old_cap, new_cap)
    if is_jsx:
        placeholder = f'"{new_cap[:1]}"'

        def _swap(m: re.Match) -> str:
            attr, val = m.group(1), m.group(2)
            if val[1:-1] in (new_value, new_cap):
                return m.group(0)
            return f"{attr}={placeholder}"

        out = _ATTR_RE.sub(_swap, out)
    return out


def _plan_switch_fix(index: CodebaseIndex, record: SpecRecord
                     ) -> tuple[list[TextEdit], dict[str, str], str, list[str]]:
    site = resolve_switch_site(index, record)
    if site is None:
        raise UnfixableScope(f"switch anchor of {record.id} not found")
    union = site.resolved_union
    if union is None:
        raise UnfixableScope(
            f"switch of {record.id} no longer resolves a union")
    missing = [m for m in union.members if m not in site.cases]
    edits: list[TextEdit] = []
    creates: dict[str, str] = {}
    notes: list[str] = []
    ast = index.files[site.file]
    src = source_of(ast)

    pattern = _sibling_pattern(index, site)
    last_clause = site.node.cases[-1] if site.node.cases else None
    if last_clause is not None:
        insert_at = last_clause.span.end
        indent = _indent_at(src.text, src.b2c(last_clause.span.start))
    else:
        insert_at = max(site.node.span.end - 1, site.node.span.start)
        indent = _indent_at(src.text, src.b2c(site.node.span.start)) + "  "

    stubbed: list[str] = []
    insertion = []
    if pattern is not None and missing:
        template, template_value, is_jsx = pattern
        for m in missing:
            insertion.append(
                "\n" + indent + _synthesize_stub(template, template_value,
                                                 m, is_jsx))
            stubbed.append(m)
        if is_jsx:
            notes.append(
                "stub attribute values are placeholders; review before "
                "shipping")
    elif missing:
        notes.append(
            f"no shared case pattern to stub {', '.join(missing)}; "
            f"relying on the exhaustiveness guard")

    if site.default_kind == DEFAULT_NONE:
        insertion.append(
            f"\n{indent}// side-car: exhaustive guard"
            f"\n{indent}default: return assertNever({site.discriminant});")
        _ensure_assert_never(index, site.file, edits, creates)
    elif site.default_kind == DEFAULT_PLAIN and not stubbed and missing:
        raise AmbiguousFix(
            f"switch of {record.id} has a plain default; cannot add an "
            f"assertNever guard without changing behavior, and sibling "
            f"cases share no pattern to stub {', '.join(missing)}")

    if insertion:
        edits.append(TextEdit(site.file, insert_at, insert_at,
                              "".join(insertion)))
    if not edits and not creates:
        raise AmbiguousFix(
            f"switch of {record.id} already carries the exhaustiveness "
            f"guard; the remaining members ({', '.join(missing)}) need "
            f"handler bodies no sibling pattern can supply")

    parts = []
    if stubbed:
        parts.append("insert case stubs for " + ", ".join(
            f"'{m}'" for m in stubbed))
    if site.default_kind == DEFAULT_NONE:
        parts.append(
            f"add `default: return assertNever({site.discriminant});` so "
            f"unhandled {union.name} members fail to compile")
    summary = (f"{' and '.join(parts)} in "
               f"{site.enclosing_decl or site.file}")
    return edits, creates, summary, notes


# -- discriminated union --------------------------------------------------


def _find_chain(index: CodebaseIndex, record: SpecRecord
                ) -> Optional[ComparisonChain]:
    for c in index.comparison_chains.get(record.anchor.path, ()):
        if c.subject == record.predicate.get("subject") and \
                c.enclosing_decl == record.anchor.decl:
            return c
    return None


def _plan_chain_fix(index: CodebaseIndex, record: SpecRecord
                    ) -> tuple[list[TextEdit], dict[str, str], str, list[str]]:
    chain = _find_chain(index, record)
    if chain is None:
        raise UnfixableScope(
            f"comparison chain of {record.id} not found; nothing to rewrite")
    if any(arm.op != "===" for arm in chain.arms):
        raise AmbiguousFix(
            f"chain of {record.id} mixes `!==` comparisons; a switch "
            f"rewrite would change behavior")
    predicate = record.predicate
    name = predicate["union_name"]
    members = list(predicate["members"])
    target_file = predicate.get("target_file", chain.file)
    edits: list[TextEdit] = []
    creates: dict[str, str] = {}
    notes: list[str] = []

    decl_edit = _union_decl_edit(index, target_file, name, members)
    if decl_edit is not None:
        edits.append(decl_edit)

    subject_decl = predicate.get("subject_decl")
    if subject_decl:
        facts = index.file_facts.get(subject_decl["file"])
        iface = facts.interface_named(subject_decl["interface"]) \
            if facts is not None else None
        sig = iface.prop_sig(subject_decl["property"]) \
            if iface is not None else None
        if sig is not None and sig.type_text != name:
            edits.append(TextEdit(subject_decl["file"], sig.type_span.start,
                                  sig.type_span.end, name))
    ast = index.files[chain.file]
    src = source_of(ast)
    indent = _indent_at(src.text, src.b2c(chain.root_span.start))
    body_indent = indent + "  "
    lines = [f"switch ({chain.subject}) {{"]
    seen: set[str] = set()
    for arm in chain.arms:
        if arm.value in seen:
            raise AmbiguousFix(
                f"chain of {record.id} compares '{arm.value}' twice")
        seen.add(arm.value)
        body = node_text(ast, arm.body.span)
        lines.append(f"{body_indent}case '{arm.value}': {body}")
    if chain.terminal_else is not None:
        else_text = node_text(ast, chain.terminal_else.span)
        lines.append(f"{body_indent}default: {else_text}")
    else:
        lines.append(f"{body_indent}default: return assertNever("
                     f"{chain.subject});")
        _ensure_assert_never(index, chain.file, edits, creates)
    lines.append(f"{indent}}}")
    switch_text = "\n".join(lines)
    edits.append(TextEdit(chain.file, chain.root_span.start,
                          chain.root_span.end, switch_text))

    summary = (f"declare `type {name}`, annotate `{chain.subject}`, and "
               f"rewrite the comparison chain in "
               f"{chain.enclosing_decl or chain.file} as an exhaustive "
               f"switch")
    if not subject_decl:
        notes.append(f"declaration site of `{chain.subject}` not found; "
                     f"annotate it manually")
    return edits, creates, summary, notes


# -- union alias ----------------------------------------------------------


def _plan_alias_fix(index: CodebaseIndex, record: SpecRecord
                    ) -> tuple[list[TextEdit], dict[str, str], str, list[str]]:
    predicate = record.predicate
    name = predicate["union_name"]
    members = list(predicate["members"])
    target_file = predicate.get("target_file")
    if target_file not in index.file_facts:
        raise UnfixableScope(
            f"target file {target_file} of {record.id} is gone")
    edits: list[TextEdit] = []
    notes: list[str] = []
    decl_edit = _union_decl_edit(index, target_file, name, members)
    if decl_edit is not None:
        edits.append(decl_edit)
    resolver = Resolver(index.file_facts)
    annotated = []
    for site in predicate.get("annotation_sites", ()):
        found = resolver.function(site["function"], site["file"])
        if found is None or site["arg_index"] >= len(found[1].params):
            notes.append(f"cannot annotate {site['function']}(): "
                         f"declaration not found")
            continue
        decl_file, fn = found
        param = fn.params[site["arg_index"]]
        if param.type_text is not None and param.type_text.strip() == name:
            continue
        if param.type_span is not None:
            edits.append(TextEdit(decl_file, param.type_span.start,
                                  param.type_span.end, name))
        elif param.name is not None:
            ast = index.files[decl_file]
            ptext = node_text(ast, param.span)
            rel = ptext.find(param.name)
            if rel < 0:
                notes.append(f"cannot annotate parameter "
                             f"{param.name} of {site['function']}()")
                continue
            at = param.span.start + len(
                ptext[:rel + len(param.name)].encode("utf-8"))
            edits.append(TextEdit(decl_file, at, at, f": {name}"))
        else:
            notes.append(f"parameter {site['arg_index'] + 1} of "
                         f"{site['function']}() is a pattern; annotate "
                         f"manually")
            continue
        annotated.append(site["function"])
    if not edits:
        raise UnfixableScope(
            f"nothing to change for {record.id}: union and annotations "
            f"already in place")
    summary = f"declare `type {name}` in {target_file}"
    if annotated:
        summary += " and annotate " + ", ".join(
            f"{fn}()" for fn in sorted(set(annotated)))
    return edits, {}, summary, notes


# -- satisfies guard ------------------------------------------------------


def _plan_mapping_fix(index: CodebaseIndex, record: SpecRecord
                      ) -> tuple[list[TextEdit], dict[str, str], str, list[str]]:
    mapping = resolve_mapping(index, record)
    if mapping is None:
        raise UnfixableScope(f"mapping of {record.id} not found")
    predicate = record.predicate
    key_union = predicate["key_union_name"]
    value_type = predicate.get("value_type_text") or "unknown"
    edits: list[TextEdit] = []
    at = mapping.node.span.end
    edits.append(TextEdit(mapping.file, at, at,
                          f" satisfies Record<{key_union}, {value_type}>"))
    resolver = Resolver(index.file_facts)
    notes: list[str] = []
    if resolver.union(key_union, mapping.file) is None:
        union_file = predicate.get("key_union_file")
        if union_file in index.files:
            spec = _relative_import(mapping.file, union_file)
            ast = index.files[mapping.file]
            imports = [i for i in ast.items if isinstance(i, ImportDecl)]
            if imports:
                pos = imports[-1].span.end
                text = f"\nimport {{ {key_union} }} from '{spec}';"
            else:
                pos = 0
                text = f"import {{ {key_union} }} from '{spec}';\n"
            edits.append(TextEdit(mapping.file, pos, pos, text))
        else:
            notes.append(f"key union {key_union} is not importable")
    summary = (f"append `satisfies Record<{key_union}, {value_type}>` to "
               f"`{mapping.const_name}`")
    return edits, {}, summary, notes


# -- public API -----------------------------------------------------------


def plan_fix(index: CodebaseIndex, record: SpecRecord,
             verdict: Verdict) -> FixPlan:
    """Produce the deterministic edit plan for one failing record."""
    if verdict.outcome != FAIL:
        raise ValueError("plan_fix requires a failing verdict")
    if record.kind == KIND_EXHAUSTIVE_SWITCH:
        edits, creates, summary, notes = _plan_switch_fix(index, record)
    elif record.kind == KIND_DISCRIMINATED_UNION:
        edits, creates, summary, notes = _plan_chain_fix(index, record)
    elif record.kind == KIND_UNION_ALIAS:
        edits, creates, summary, notes = _plan_alias_fix(index, record)
    elif record.kind == KIND_SATISFIES_GUARD:
        edits, creates, summary, notes = _plan_mapping_fix(index, record)
    else:
        raise UnfixableScope(f"unknown record kind {record.kind}")
    ordered = tuple(sorted(edits, key=lambda e: (e.path, -e.start)))
    hashes = {}
    for path in sorted({e.path for e in ordered}):
        ast = index.files.get(path)
        if ast is None:
            raise UnfixableScope(f"{path} is not part of the snapshot")
        hashes[path] = _sha(source_of(ast).data)
    return FixPlan(
        record_id=record.id,
        edits=ordered,
        summary=summary,
        creates_files=creates,
        base_hashes=hashes,
        snapshot_id=index.snapshot_id,
        notes=tuple(notes),
    )


def plan_diff(index: CodebaseIndex, plan: FixPlan) -> str:
    """Unified diff of the plan against the snapshot it was made from."""
    chunks = []
    by_file: dict[str, list[TextEdit]] = {}
    for e in plan.edits:
        by_file.setdefault(e.path, []).append(e)
    for path in sorted(by_file):
        old = source_of(index.files[path]).data
        new = apply_edits_to_bytes(old, by_file[path])
        chunks.extend(difflib.unified_diff(
            old.decode("utf-8").splitlines(keepends=True),
            new.decode("utf-8").splitlines(keepends=True),
            fromfile=f"a/{path}", tofile=f"b/{path}"))
    for path in sorted(plan.creates_files):
        chunks.extend(difflib.unified_diff(
            [], plan.creates_files[path].splitlines(keepends=True),
            fromfile="/dev/null", tofile=f"b/{path}"))
    return "".join(chunks)


@dataclass(frozen=True)
class ApplyResult:
    new_index: CodebaseIndex
    verdict: Verdict
    changed_files: dict[str, bytes]


def apply_fix(workspace_dir: str, plan: FixPlan, index: CodebaseIndex,
              store: SpecStore) -> ApplyResult:
    """Apply a plan atomically with validation.

    Validation happens on the in-memory result first: touched files must
    re-parse with no new warnings, the originating record must now pass
    tier 1, and no accepted record may regress. Only then are files
    written (temp + rename); any mid-write failure restores the original
    bytes exactly."""
    root = Path(workspace_dir)
    pre_images: dict[str, Optional[bytes]] = {}
    new_contents: dict[str, bytes] = {}

    by_file: dict[str, list[TextEdit]] = {}
    for e in plan.edits:
        by_file.setdefault(e.path, []).append(e)

    for path, edits in by_file.items():
        fs_path = root / path
        try:
            current = fs_path.read_bytes()
        except FileNotFoundError as exc:
            raise StaleSnapshot(f"{path} vanished since planning") from exc
        if _sha(current) != plan.base_hashes.get(path):
            raise StaleSnapshot(f"{path} changed since planning")
        pre_images[path] = current
        new_contents[path] = apply_edits_to_bytes(current, edits)

    for path, text in plan.creates_files.items():
        fs_path = root / path
        if fs_path.exists():
            existing = fs_path.read_bytes()
            if existing != text.encode("utf-8"):
                raise StaleSnapshot(
                    f"{path} already exists with different content")
            continue
        pre_images[path] = None
        new_contents[path] = text.encode("utf-8")

    record = store.get(plan.record_id)
    old_warning_counts = {
        path: len(index.warnings.get(path, ())) for path in new_contents}
    new_index = update_index(index, dict(new_contents))

    for path in new_contents:
        if path in new_index.failed_files:
            raise PostEditParseFailure(
                f"{path} no longer parses: {new_index.failed_files[path]}")
        new_count = len(new_index.warnings.get(path, ()))
        if new_count > old_warning_counts.get(path, 0):
            raise PostEditParseFailure(
                f"{path} gained {new_count - old_warning_counts[path]} "
                f"parse warnings")

    verdict = check_spec(new_index, record)
    if verdict.outcome != PASS:
        raise RegressionDetected([record.id])

    regressed = []
    for other in store.by_status(STATUS_ACCEPTED):
        if other.id == record.id:
            continue
        before = check_spec(index, other)
        if before.outcome != PASS:
            continue
        after = check_spec(new_index, other)
        if after.outcome in (FAIL, NOT_APPLICABLE):
            regressed.append(other.id)
    if regressed:
        raise RegressionDetected(regressed)

    written: list[tuple[Path, Optional[bytes]]] = []
    try:
        for path in sorted(new_contents):
            fs_path = root / path
            fs_path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=str(fs_path.parent),
                                       prefix=".vibeguard-")
            with os.fdopen(fd, "wb") as fh:
                fh.write(new_contents[path])
            os.replace(tmp, fs_path)
            written.append((fs_path, pre_images.get(path)))
    except BaseException:
        for fs_path, original in written:
            if original is None:
                fs_path.unlink(missing_ok=True)
            else:
                fs_path.write_bytes(original)
        raise

    return ApplyResult(new_index, verdict, new_contents)
