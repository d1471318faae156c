"""Deterministic detectors for the four latent-bug patterns, plus the
conversion of detected scopes into proposed specification records.

Detection is a pure function of an index snapshot: output order is fixed
(file path, then span start) and independent of enumeration order. An
optional suggestion provider may rename proposed unions or reword
explanations but can never change what is being constrained.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Callable, Optional, Protocol, Union

from vibeguard import DETECTOR_VERSION
from vibeguard.index.build import Resolver
from vibeguard.index.model import (
    CodebaseIndex, ComparisonChain, DEFAULT_ASSERT_NEVER, LiteralFamily,
    MappingLiteral, SwitchSite,
)
from vibeguard.specstore import (
    Anchor, KIND_DISCRIMINATED_UNION, KIND_EXHAUSTIVE_SWITCH,
    KIND_SATISFIES_GUARD, KIND_UNION_ALIAS, SpecRecord, STATUS_PROPOSED,
    now_rfc3339, record_id,
)
from vibeguard.syntax.spans import Span

ScopePayload = Union[SwitchSite, ComparisonChain, LiteralFamily,
                     MappingLiteral]

_IDENT_RE = re.compile(r"^[A-Za-z_$][A-Za-z0-9_$]*$")

_VERB_PREFIXES = (
    "process", "handle", "dispatch", "create", "update", "render", "emit",
    "make", "send", "show", "get", "set", "log", "do",
)


@dataclass(frozen=True)
class Scope:
    """Which code a template instance constrains."""
    kind: str
    anchor: Span
    payload: ScopePayload
    file: str
    enclosing_decl: str


class SuggestionProvider(Protocol):
    """Seam for an external (e.g. LLM-backed) naming/wording pass."""

    def suggest(self, record: SpecRecord) -> Optional[dict]:
        """May return {"union_name": ..., "explanation": ...} overrides."""


def switch_is_exhaustive(cases: set[str], members: set[str],
                         default_kind: str) -> bool:
    """The template predicate: cases equal members, or an assertNever
    default makes exhaustiveness a compile-time property."""
    return cases == members or default_kind == DEFAULT_ASSERT_NEVER


def detect_exhaustive_switch(index: CodebaseIndex) -> list[Scope]:
    scopes = []
    for site in index.all_switch_sites():
        if site.resolved_union is None:
            continue
        if switch_is_exhaustive(set(site.cases),
                                set(site.resolved_union.members),
                                site.default_kind):
            continue
        scopes.append(Scope(KIND_EXHAUSTIVE_SWITCH, site.span, site,
                            site.file, site.enclosing_decl))
    scopes.sort(key=lambda s: (s.file, s.anchor.start))
    return scopes


def detect_discriminated_union(index: CodebaseIndex) -> list[Scope]:
    scopes = []
    for chain in index.all_chains():
        if chain.subject_type_kind not in ("string", "unknown"):
            continue  # already union-typed, declared any, or opaque
        scopes.append(Scope(KIND_DISCRIMINATED_UNION, chain.root_span, chain,
                            chain.file, chain.enclosing_decl))
    scopes.sort(key=lambda s: (s.file, s.anchor.start))
    return scopes


def detect_union_alias(index: CodebaseIndex) -> list[Scope]:
    scopes = []
    for family in index.literal_families:
        first = family.occurrence_sites[0]
        scopes.append(Scope(KIND_UNION_ALIAS, first.span, family,
                            first.file, family.anchor.name))
    scopes.sort(key=lambda s: (s.file, s.anchor.start))
    return scopes


def detect_satisfies_guard(index: CodebaseIndex) -> list[Scope]:
    scopes = []
    for mapping in index.all_mappings():
        if mapping.has_satisfies_guard:
            continue
        scopes.append(Scope(KIND_SATISFIES_GUARD, mapping.span, mapping,
                            mapping.file, mapping.enclosing_decl))
    scopes.sort(key=lambda s: (s.file, s.anchor.start))
    return scopes


def detect_all(index: CodebaseIndex) -> list[Scope]:
    return (detect_exhaustive_switch(index)
            + detect_discriminated_union(index)
            + detect_union_alias(index)
            + detect_satisfies_guard(index))


# -- proposal -----------------------------------------------------------


def _pascal(name: str) -> str:
    if not name:
        return name
    return name[0].upper() + name[1:]


def _strip_verb(callee: str) -> str:
    for verb in _VERB_PREFIXES:
        if callee.startswith(verb) and len(callee) > len(verb) and \
                callee[len(verb)].isupper():
            return callee[len(verb):]
    return callee


def derive_call_union_name(callee: str, param_name: str) -> str:
    """processMessage + type -> MessageType."""
    base = _pascal(_strip_verb(callee))
    suffix = _pascal(param_name) if param_name else "Value"
    if base.lower().endswith(suffix.lower()):
        return base
    return base + suffix


def derive_subject_union_name(subject: str, iface_name: str = "") -> str:
    segs = subject.split(".")
    if iface_name:
        return _pascal(iface_name) + _pascal(segs[-1])
    if len(segs) >= 2:
        return _pascal(segs[-2]) + _pascal(segs[-1])
    return _pascal(segs[-1]) + "Type"


def _quote_each(values) -> str:
    return ", ".join(f"'{v}'" for v in values)


def _ordinal_of_switch(index: CodebaseIndex, site: SwitchSite) -> int:
    """Position among switches with the same (decl, discriminant) in the
    file, so two sibling switches get distinct identities."""
    n = 0
    for other in index.switch_sites.get(site.file, ()):
        if other is site:
            return n
        if other.enclosing_decl == site.enclosing_decl and \
                other.discriminant == site.discriminant:
            n += 1
    return n


def _taken_names(index: CodebaseIndex, file: str) -> set[str]:
    facts = index.file_facts.get(file)
    return set(facts.top_level_names) if facts is not None else set()


def _fresh_name(base: str, taken: set[str]) -> str:
    if base not in taken:
        return base
    n = 2
    while f"{base}{n}" in taken:
        n += 1
    return f"{base}{n}"


def propose_specs(
    index: CodebaseIndex,
    scopes: list[Scope],
    provider: Optional[SuggestionProvider] = None,
    now: Optional[Callable[[], str]] = None,
) -> list[SpecRecord]:
    """Instantiate one proposed record per scope, with deterministic
    content-hash ids and explanations naming every affected member."""
    now_fn = now or now_rfc3339
    ordered = sorted(scopes, key=lambda s: (s.file, s.anchor.start, s.kind))
    taken_by_file: dict[str, set[str]] = {}
    group_names: dict[tuple, str] = {}
    records: list[SpecRecord] = []

    def claim_name(file: str, base: str, group_key: Optional[tuple]) -> str:
        if group_key is not None and group_key in group_names:
            return group_names[group_key]
        taken = taken_by_file.setdefault(file, set(_taken_names(index, file)))
        name = _fresh_name(base, taken)
        taken.add(name)
        if group_key is not None:
            group_names[group_key] = name
        return name

    for scope in ordered:
        if scope.kind == KIND_EXHAUSTIVE_SWITCH:
            rec = _propose_switch(index, scope, now_fn)
        elif scope.kind == KIND_DISCRIMINATED_UNION:
            rec = _propose_chain(index, scope, claim_name, now_fn)
        elif scope.kind == KIND_UNION_ALIAS:
            rec = _propose_alias(index, scope, claim_name, now_fn)
        else:
            rec = _propose_mapping(index, scope, now_fn)
        records.append(rec)

    if provider is not None:
        records = [_apply_suggestion(r, provider) for r in records]
    return records


def _provenance(index: CodebaseIndex) -> dict:
    return {"snapshot": index.snapshot_id,
            "detector_version": DETECTOR_VERSION}


def _propose_switch(index: CodebaseIndex, scope: Scope,
                    now_fn) -> SpecRecord:
    site: SwitchSite = scope.payload
    union = site.resolved_union
    assert union is not None
    missing = [m for m in union.members if m not in site.cases]
    extraneous = [c for c in site.cases if c not in union.members]
    predicate = {
        "union_name": union.name,
        "union_file": union.defining_file,
        "required": "assert-never-default",
        "discriminant": site.discriminant,
        "ordinal": _ordinal_of_switch(index, site),
        "members": list(union.members),
        "missing": missing,
    }
    anchor = Anchor(scope.file, scope.enclosing_decl, scope.anchor.start,
                    scope.anchor.end)
    where = scope.enclosing_decl or "module scope"
    parts = [
        f"The switch on `{site.discriminant}` in {where} ({scope.file}) is "
        f"not exhaustive over union {union.name}."
    ]
    if missing:
        parts.append(f"Unhandled members: {_quote_each(missing)}.")
    if extraneous:
        parts.append(f"Labels outside the union: {_quote_each(extraneous)}.")
    parts.append(
        "Cover every member or add a `default: return assertNever(...)` "
        "guard so the compiler rejects unhandled variants.")
    explanation = " ".join(parts)
    rid = record_id(KIND_EXHAUSTIVE_SWITCH, anchor, predicate)
    return SpecRecord(rid, KIND_EXHAUSTIVE_SWITCH, STATUS_PROPOSED, anchor,
                      predicate, explanation, now_fn(), None,
                      _provenance(index))


def _propose_chain(index: CodebaseIndex, scope: Scope, claim_name,
                   now_fn) -> SpecRecord:
    chain: ComparisonChain = scope.payload
    resolver = Resolver(index.file_facts)
    decl = resolver.declaring_property(chain.subject, chain.file,
                                       chain.enclosing_decl)
    target_file = decl["file"] if decl is not None else chain.file
    iface = decl["interface"] if decl is not None else ""
    existing = resolver.union_with_members(chain.observed_values, target_file)
    if existing is not None:
        name = existing.name
    else:
        base = derive_subject_union_name(chain.subject, iface)
        group_key = (KIND_DISCRIMINATED_UNION, target_file, chain.subject,
                     tuple(sorted(chain.observed_values)))
        name = claim_name(target_file, base, group_key)
    predicate = {
        "union_name": name,
        "members": list(chain.observed_values),
        "subject": chain.subject,
        "target_file": target_file,
        "rewrite_to_switch": True,
        "subject_decl": decl,
    }
    anchor = Anchor(scope.file, scope.enclosing_decl, scope.anchor.start,
                    scope.anchor.end)
    where = scope.enclosing_decl or "module scope"
    explanation = (
        f"`{chain.subject}` in {where} ({scope.file}) is compared against "
        f"the string literals {_quote_each(chain.observed_values)} but is "
        f"typed as a plain string. Declare union {name} with those members, "
        f"annotate the declaration of `{chain.subject}`, and rewrite the "
        f"chain as a switch with an assertNever default."
    )
    rid = record_id(KIND_DISCRIMINATED_UNION, anchor, predicate)
    return SpecRecord(rid, KIND_DISCRIMINATED_UNION, STATUS_PROPOSED, anchor,
                      predicate, explanation, now_fn(), None,
                      _provenance(index))


def _propose_alias(index: CodebaseIndex, scope: Scope, claim_name,
                   now_fn) -> SpecRecord:
    family: LiteralFamily = scope.payload
    anchor_info = family.anchor
    if anchor_info.kind == "call":
        base = derive_call_union_name(anchor_info.name,
                                      anchor_info.param_name)
        described = f"calls to {anchor_info.name}() at argument " \
                    f"{anchor_info.arg_index + 1}"
    else:
        base = _pascal(anchor_info.name)
        described = f"object properties named '{anchor_info.name}'"
    target_file = anchor_info.target_file
    existing = Resolver(index.file_facts).union_with_members(
        family.literals, target_file)
    if existing is not None:
        name = existing.name
    else:
        group_key = (KIND_UNION_ALIAS, target_file, anchor_info.kind,
                     anchor_info.name, anchor_info.arg_index)
        name = claim_name(target_file, base, group_key)
    annotation_sites = []
    if anchor_info.kind == "call":
        resolver = Resolver(index.file_facts)
        found = resolver.function(anchor_info.name,
                                  family.occurrence_sites[0].file)
        if found is not None and anchor_info.arg_index < len(found[1].params):
            annotation_sites.append({
                "file": found[0],
                "function": anchor_info.name,
                "arg_index": anchor_info.arg_index,
            })
    predicate = {
        "union_name": name,
        "members": list(family.literals),
        "target_file": target_file,
        "anchor_kind": anchor_info.kind,
        "anchor_name": anchor_info.name,
        "arg_index": anchor_info.arg_index,
        "annotation_sites": annotation_sites,
    }
    anchor = Anchor(scope.file, scope.enclosing_decl, scope.anchor.start,
                    scope.anchor.end)
    explanation = (
        f"The string literals {_quote_each(family.literals)} form a "
        f"recurring family across {described}. Declare union {name} in "
        f"{target_file} and annotate the sites that produce or consume "
        f"these strings instead of relying on hard-coded literals."
    )
    rid = record_id(KIND_UNION_ALIAS, anchor, predicate)
    return SpecRecord(rid, KIND_UNION_ALIAS, STATUS_PROPOSED, anchor,
                      predicate, explanation, now_fn(), None,
                      _provenance(index))


def _propose_mapping(index: CodebaseIndex, scope: Scope,
                     now_fn) -> SpecRecord:
    mapping: MappingLiteral = scope.payload
    union = mapping.intended_key_union
    assert union is not None
    value_type = mapping.value_type_text or "unknown"
    missing = [m for m in union.members if m not in mapping.keys]
    predicate = {
        "key_union_name": union.name,
        "key_union_file": union.defining_file,
        "value_type_text": value_type,
        "const_name": mapping.const_name,
        "members": list(union.members),
    }
    anchor = Anchor(scope.file, scope.enclosing_decl, scope.anchor.start,
                    scope.anchor.end)
    parts = [
        f"`{mapping.const_name}` ({scope.file}) maps keys "
        f"{_quote_each(mapping.keys)} drawn from union {union.name} but "
        f"carries no totality guard."
    ]
    if missing:
        parts.append(f"Keys not yet covered: {_quote_each(missing)}.")
    parts.append(
        f"Append `satisfies Record<{union.name}, {value_type}>` so key "
        f"coverage and value shapes are compiler-checked.")
    explanation = " ".join(parts)
    rid = record_id(KIND_SATISFIES_GUARD, anchor, predicate)
    return SpecRecord(rid, KIND_SATISFIES_GUARD, STATUS_PROPOSED, anchor,
                      predicate, explanation, now_fn(), None,
                      _provenance(index))


def _apply_suggestion(record: SpecRecord,
                      provider: SuggestionProvider) -> SpecRecord:
    """Apply name/wording overrides; scope and member sets are untouchable
    and invalid suggestions are ignored. Only kinds that propose a new
    union may be renamed."""
    suggestion = provider.suggest(record)
    if not suggestion:
        return record
    predicate = dict(record.predicate)
    explanation = record.explanation
    new_name = suggestion.get("union_name")
    renamable = record.kind in (KIND_DISCRIMINATED_UNION, KIND_UNION_ALIAS)
    if new_name and renamable and _IDENT_RE.match(new_name):
        old = predicate["union_name"]
        predicate["union_name"] = new_name
        explanation = explanation.replace(old, new_name)
    new_explanation = suggestion.get("explanation")
    if new_explanation:
        explanation = new_explanation
    return replace(record, predicate=predicate, explanation=explanation)
