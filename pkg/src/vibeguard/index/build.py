"""Build and incrementally maintain the cross-file codebase index.

The index is a pure function of (file set, config): update_index reuses
per-file facts for unchanged files and recomputes the cheap cross-file
resolution layer, so folding updates is structurally identical to a
full rebuild of the final state.
"""

from __future__ import annotations

import hashlib
import posixpath
import re
from dataclasses import dataclass
from typing import Mapping, Optional

from vibeguard.errors import VibeguardError
from vibeguard.syntax import lexer
from vibeguard.syntax.parser import parse_file
from vibeguard.index.extract import (
    FileFacts, FunctionInfo, InterfaceInfo, extract_facts,
)
from vibeguard.index.model import (
    CTX_CALL_ARGUMENT, CTX_PROPERTY_VALUE, CodebaseIndex, ComparisonChain,
    FamilyAnchor, ImportEdge, IndexConfig, LiteralFamily, MappingLiteral,
    OccurrenceSite, SwitchSite, UnionType,
)

_RECORD_RE = re.compile(
    r"^Record\s*<\s*([A-Za-z_$][A-Za-z0-9_$]*)\s*,\s*(.+?)\s*>$", re.S)

_RESOLVE_SUFFIXES = ("", ".ts", ".tsx", "/index.ts", "/index.tsx")


def parse_record_type(text: Optional[str]) -> Optional[tuple[str, str]]:
    """Split `Record<K, V>` into (K, V); None for anything else."""
    if not text:
        return None
    m = _RECORD_RE.match(text.strip())
    if m is None:
        return None
    return m.group(1), m.group(2).strip()


def parse_inline_object_type(text: str) -> Optional[dict[str, str]]:
    """Parse `{ a: T; b?: U }` into {prop: type text}; None if not that shape."""
    text = text.strip()
    if not (text.startswith("{") and text.endswith("}")):
        return None
    toks = lexer.tokenize(text).tokens
    if not toks or toks[0].text != "{":
        return None
    props: dict[str, str] = {}
    i = 1
    n = len(toks)
    while i < n and toks[i].text != "}":
        t = toks[i]
        if t.text in (";", ","):
            i += 1
            continue
        if t.kind not in (lexer.NAME, lexer.STRING):
            return None
        key = t.value if t.kind == lexer.STRING else t.text
        i += 1
        if i < n and toks[i].text == "?":
            i += 1
        if i >= n or toks[i].text != ":":
            return None
        i += 1
        depth = 0
        parts_start = None
        parts_end = None
        while i < n:
            tt = toks[i]
            if depth == 0 and tt.text in (";", ","):
                break
            if depth == 0 and tt.text == "}" :
                break
            if tt.text in ("(", "[", "{", "<"):
                depth += 1
            elif tt.text in (")", "]", "}", ">"):
                depth -= 1
            if parts_start is None:
                parts_start = tt.start
            parts_end = tt.end
            i += 1
        if parts_start is None:
            return None
        props[key] = text[parts_start:parts_end].strip()
    return props


class Resolver:
    """Name resolution over a set of per-file facts. Local declarations
    shadow imports; only named relative imports are followed."""

    def __init__(self, facts: Mapping[str, FileFacts]) -> None:
        self.facts = facts
        self._module_cache: dict[tuple[str, str], Optional[str]] = {}

    def resolve_module(self, specifier: str, from_file: str) -> Optional[str]:
        if not specifier.startswith("."):
            return None
        key = (specifier, from_file)
        if key in self._module_cache:
            return self._module_cache[key]
        base = posixpath.normpath(
            posixpath.join(posixpath.dirname(from_file), specifier))
        found = None
        for suffix in _RESOLVE_SUFFIXES:
            cand = base + suffix
            if cand in self.facts:
                found = cand
                break
        self._module_cache[key] = found
        return found

    def _imported(self, name: str, from_file: str) -> Optional[tuple[str, str]]:
        """(defining file, original name) for an imported local name."""
        facts = self.facts.get(from_file)
        if facts is None:
            return None
        for imp in facts.imports:
            if imp.local == name:
                target = self.resolve_module(imp.specifier, from_file)
                if target is not None:
                    return target, imp.original
        return None

    def union(self, name: str, from_file: str) -> Optional[UnionType]:
        facts = self.facts.get(from_file)
        if facts is None:
            return None
        local = facts.union_named(name)
        if local is not None:
            return local
        imported = self._imported(name, from_file)
        if imported is not None:
            target, orig = imported
            u = self.facts[target].union_named(orig)
            if u is not None and u.exported:
                return u
        return None

    def interface(self, name: str, from_file: str) -> Optional[InterfaceInfo]:
        facts = self.facts.get(from_file)
        if facts is None:
            return None
        local = facts.interface_named(name)
        if local is not None:
            return local
        imported = self._imported(name, from_file)
        if imported is not None:
            target, orig = imported
            i = self.facts[target].interface_named(orig)
            if i is not None and i.exported:
                return i
        return None

    def function(self, name: str, from_file: str
                 ) -> Optional[tuple[str, FunctionInfo]]:
        facts = self.facts.get(from_file)
        if facts is None:
            return None
        local = facts.function_named(name)
        if local is not None:
            return from_file, local
        imported = self._imported(name, from_file)
        if imported is not None:
            target, orig = imported
            f = self.facts[target].function_named(orig)
            if f is not None and f.exported:
                return target, f
        return None

    # -- declared-type classification ---------------------------------------

    def classify_type_text(self, text: Optional[str], file: str
                           ) -> tuple[str, object]:
        """Classify a type annotation: string | any | union | interface |
        object | other | unknown."""
        if text is None:
            return "unknown", None
        t = text.strip()
        if t == "string":
            return "string", None
        if t in ("any", "unknown"):
            return "any", None
        if re.fullmatch(r"[A-Za-z_$][A-Za-z0-9_$]*", t):
            u = self.union(t, file)
            if u is not None:
                return "union", u
            i = self.interface(t, file)
            if i is not None:
                return "interface", i
            return "unknown", None
        props = parse_inline_object_type(t)
        if props is not None:
            return "object", props
        return "other", None

    def _base_annotation(self, file: str, enclosing: str, base: str
                         ) -> Optional[tuple[str, str]]:
        """(type text, file the text resolves in) for a bound name."""
        facts = self.facts.get(file)
        if facts is None:
            return None
        fn = facts.function_named(enclosing) if enclosing else None
        if fn is not None:
            for p in fn.params:
                if p.name == base and p.type_text:
                    return p.type_text, file
                for prop, binding in p.pattern_props:
                    if binding == base and p.type_text:
                        kind, payload = self.classify_type_text(
                            p.type_text, file)
                        if kind == "object":
                            text = payload.get(prop)  # type: ignore[union-attr]
                            return (text, file) if text else None
                        if kind == "interface":
                            text = payload.prop_type(prop)  # type: ignore[union-attr]
                            return (text, payload.file) if text else None  # type: ignore[union-attr]
                        return None
            for name, ttext in fn.local_var_types:
                if name == base:
                    return ttext, file
        for name, ttext in facts.module_var_types:
            if name == base:
                return ttext, file
        return None

    def path_type(self, path: str, file: str, enclosing: str
                  ) -> tuple[str, Optional[UnionType]]:
        """Declared type of a dotted path, walked through parameter and
        interface property annotations. Returns (kind, union)."""
        segs = path.split(".")
        base = self._base_annotation(file, enclosing, segs[0])
        if base is None:
            return "unknown", None
        cur, cur_file = base  # type text resolves in its declaring file
        for seg in segs[1:]:
            kind, payload = self.classify_type_text(cur, cur_file)
            if kind == "interface":
                cur = payload.prop_type(seg)  # type: ignore[union-attr]
                cur_file = payload.file  # type: ignore[union-attr]
            elif kind == "object":
                cur = payload.get(seg)  # type: ignore[union-attr]
            else:
                return "unknown" if kind == "unknown" else "other", None
            if cur is None:
                return "unknown", None
        kind, payload = self.classify_type_text(cur, cur_file)
        if kind == "union":
            return "union", payload  # type: ignore[return-value]
        if kind in ("string", "any", "unknown"):
            return kind, None
        return "other", None

    def declaring_property(self, path: str, file: str, enclosing: str
                           ) -> Optional[dict]:
        """The interface property that declares a dotted path's final
        segment, as {"interface", "property", "file"}; None when the path
        does not end on a visible interface property."""
        segs = path.split(".")
        if len(segs) < 2:
            return None
        base = self._base_annotation(file, enclosing, segs[0])
        if base is None:
            return None
        cur, cur_file = base
        for seg in segs[1:-1]:
            kind, payload = self.classify_type_text(cur, cur_file)
            if kind != "interface":
                return None
            cur = payload.prop_type(seg)  # type: ignore[union-attr]
            cur_file = payload.file  # type: ignore[union-attr]
            if cur is None:
                return None
        kind, payload = self.classify_type_text(cur, cur_file)
        if kind != "interface":
            return None
        sig = payload.prop_sig(segs[-1])  # type: ignore[union-attr]
        if sig is None:
            return None
        return {
            "interface": payload.name,  # type: ignore[union-attr]
            "property": segs[-1],
            "file": payload.file,  # type: ignore[union-attr]
        }

    def union_with_members(self, members: tuple[str, ...], file: str
                           ) -> Optional[UnionType]:
        """A union declared in `file` whose member set equals `members`."""
        facts = self.facts.get(file)
        if facts is None:
            return None
        for u in facts.unions:
            if set(u.members) == set(members):
                return u
        return None


def _build_cross_layer(
    facts_by_file: dict[str, FileFacts],
    warnings: dict,
    failed: dict[str, str],
    config: IndexConfig,
) -> CodebaseIndex:
    resolver = Resolver(facts_by_file)
    unions: dict[tuple[str, str], UnionType] = {}
    for file in sorted(facts_by_file):
        for u in facts_by_file[file].unions:
            unions[(file, u.name)] = u

    import_graph: dict[str, tuple[ImportEdge, ...]] = {}
    for file in sorted(facts_by_file):
        edges = tuple(
            ImportEdge(i.local, i.original, i.specifier,
                       resolver.resolve_module(i.specifier, file))
            for i in facts_by_file[file].imports
        )
        import_graph[file] = edges

    switch_sites: dict[str, tuple[SwitchSite, ...]] = {}
    chains: dict[str, tuple[ComparisonChain, ...]] = {}
    mappings: dict[str, tuple[MappingLiteral, ...]] = {}
    for file in sorted(facts_by_file):
        facts = facts_by_file[file]
        sites = []
        for raw in facts.switches:
            kind, u = resolver.path_type(raw.discriminant, file,
                                         raw.enclosing_decl)
            sites.append(SwitchSite(
                file=file, span=raw.span, discriminant=raw.discriminant,
                discriminant_span=raw.discriminant_span,
                resolved_union=u if kind == "union" else None,
                cases=raw.cases, case_infos=raw.case_infos,
                default_kind=raw.default_kind,
                enclosing_decl=raw.enclosing_decl, node=raw.node,
            ))
        switch_sites[file] = tuple(sites)

        file_chains = []
        for raw in facts.chains:
            kind, u = resolver.path_type(raw.subject, file,
                                         raw.enclosing_decl)
            file_chains.append(ComparisonChain(
                file=file, root_span=raw.root_span, subject=raw.subject,
                observed_values=raw.observed_values, arms=raw.arms,
                has_terminal_else_or_fallthrough=(
                    raw.has_terminal_else_or_fallthrough),
                terminal_else=raw.terminal_else,
                subject_type_kind=kind, subject_union=u,
                enclosing_decl=raw.enclosing_decl, node=raw.node,
            ))
        chains[file] = tuple(file_chains)

        file_mappings = []
        for raw in facts.mappings:
            m = _finalize_mapping(raw, file, resolver, facts_by_file)
            if m is not None:
                file_mappings.append(m)
        mappings[file] = tuple(file_mappings)

    families = _build_families(facts_by_file, resolver, config)

    digest = hashlib.sha256()
    for file in sorted(facts_by_file):
        digest.update(f"{file}:{facts_by_file[file].ast.source_hash}\n"
                      .encode())
    for file in sorted(failed):
        digest.update(f"{file}:failed:{failed[file]}\n".encode())

    return CodebaseIndex(
        files={f: facts_by_file[f].ast for f in facts_by_file},
        warnings=warnings,
        failed_files=failed,
        unions=unions,
        switch_sites=switch_sites,
        comparison_chains=chains,
        mapping_literals=mappings,
        literal_families=families,
        import_graph=import_graph,
        snapshot_id=digest.hexdigest(),
        config=config,
        file_facts=facts_by_file,
    )


def _finalize_mapping(raw, file: str, resolver: Resolver,
                      facts_by_file: dict[str, FileFacts]
                      ) -> Optional[MappingLiteral]:
    key_union: Optional[UnionType] = None
    value_text: Optional[str] = None
    guard = False
    annotated = False
    ann = parse_record_type(raw.annotation_text)
    if ann is not None:
        u = resolver.union(ann[0], file)
        if u is not None:
            key_union = u
            value_text = ann[1]
            annotated = True
    sat = parse_record_type(raw.satisfies_text)
    sat_union = resolver.union(sat[0], file) if sat is not None else None
    if key_union is None and sat_union is not None:
        key_union = sat_union
        value_text = sat[1]
        guard = True
    elif key_union is not None and sat_union is not None:
        if sat_union == key_union:
            guard = True
            value_text = sat[1]
    if key_union is None:
        # intent route: every key a member of exactly one known union
        if len(raw.keys) < 2:
            return None
        key_set = set(raw.keys)
        all_unions = _all_unions(facts_by_file)
        candidates = []
        for key in sorted(all_unions):
            u = all_unions[key]
            if key_set <= set(u.members) and u not in candidates:
                candidates.append(u)
        if len(candidates) != 1:
            return None
        key_union = candidates[0]
    return MappingLiteral(
        file=file, span=raw.span, keys=raw.keys, key_spans=raw.key_spans,
        intended_key_union=key_union, has_satisfies_guard=guard,
        has_record_annotation=annotated, value_type_text=value_text,
        enclosing_decl=raw.enclosing_decl, const_name=raw.const_name,
        node=raw.node,
    )


def _all_unions(facts_by_file: dict[str, FileFacts]
                ) -> dict[tuple[str, str], UnionType]:
    out = {}
    for file in sorted(facts_by_file):
        for u in facts_by_file[file].unions:
            out[(file, u.name)] = u
    return out


def _build_families(facts_by_file: dict[str, FileFacts], resolver: Resolver,
                    config: IndexConfig) -> tuple[LiteralFamily, ...]:
    call_groups: dict[tuple[str, int], list[tuple[str, object]]] = {}
    prop_groups: dict[str, list[tuple[str, object]]] = {}
    for file in sorted(facts_by_file):
        facts = facts_by_file[file]
        for occ in facts.call_literals:
            call_groups.setdefault((occ.callee, occ.arg_index), []) \
                .append((file, occ))
        for occ in facts.prop_literals:
            if not occ.annotated:
                prop_groups.setdefault(occ.prop, []).append((file, occ))

    families: list[LiteralFamily] = []

    for (callee, idx) in sorted(call_groups):
        occs = sorted(call_groups[(callee, idx)],
                      key=lambda fo: (fo[0], fo[1].span.start))
        decl = None
        param_name = ""
        annotated_union: Optional[UnionType] = None
        if re.fullmatch(r"[A-Za-z_$][A-Za-z0-9_$]*", callee):
            decls = {resolver.function(callee, f) for f, _ in occs}
            decls.discard(None)
            if len(decls) == 1:
                decl = next(iter(decls))
                if idx < len(decl[1].params):
                    p = decl[1].params[idx]
                    param_name = p.name or ""
                    kind, u = resolver.classify_type_text(
                        p.type_text, decl[0])
                    if kind == "union":
                        annotated_union = u  # type: ignore[assignment]
        literals: list[str] = []
        sites: list[OccurrenceSite] = []
        for f, occ in occs:
            if annotated_union is not None and \
                    occ.literal in annotated_union.members:
                continue  # already governed by a union in this context
            if occ.literal not in literals:
                literals.append(occ.literal)
            sites.append(OccurrenceSite(occ.span, CTX_CALL_ARGUMENT, f,
                                        occ.literal))
        if len(literals) < config.family_min_size or \
                len(sites) < config.family_min_sites:
            continue
        target = decl[0] if decl is not None else \
            _dominant_file([s.file for s in sites])
        families.append(LiteralFamily(
            literals=tuple(literals),
            occurrence_sites=tuple(sites),
            anchor=FamilyAnchor("call", callee, idx, param_name, target),
        ))

    for prop in sorted(prop_groups):
        occs = sorted(prop_groups[prop],
                      key=lambda fo: (fo[0], fo[1].span.start))
        occ_files = sorted({f for f, _ in occs})
        visible_members: set[str] = set()
        for f in occ_files:
            for u in facts_by_file[f].unions:
                visible_members.update(u.members)
        literals = []
        sites = []
        for f, occ in occs:
            if occ.literal in visible_members:
                continue  # a union in this context already covers it
            if occ.literal not in literals:
                literals.append(occ.literal)
            sites.append(OccurrenceSite(occ.span, CTX_PROPERTY_VALUE, f,
                                        occ.literal))
        if len(literals) < config.family_min_size or \
                len(sites) < config.family_min_sites:
            continue
        families.append(LiteralFamily(
            literals=tuple(literals),
            occurrence_sites=tuple(sites),
            anchor=FamilyAnchor("prop", prop, -1, prop,
                                _dominant_file([s.file for s in sites])),
        ))

    return tuple(families)


def _dominant_file(files: list[str]) -> str:
    counts: dict[str, int] = {}
    for f in files:
        counts[f] = counts.get(f, 0) + 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]


def build_index(files: Mapping[str, bytes | str],
                config: IndexConfig | None = None) -> CodebaseIndex:
    """Parse every file and assemble the cross-file index.

    Files that fail to parse (encoding/size) are recorded in
    failed_files; the partial index is still returned."""
    config = config or IndexConfig()
    facts_by_file: dict[str, FileFacts] = {}
    warnings: dict = {}
    failed: dict[str, str] = {}
    for file in sorted(files):
        try:
            ast, warns = parse_file(file, files[file],
                                    max_bytes=config.max_file_bytes)
        except VibeguardError as exc:
            failed[file] = str(exc)
            continue
        facts_by_file[file] = extract_facts(file, ast, tuple(warns))
        warnings[file] = tuple(warns)
    return _build_cross_layer(facts_by_file, warnings, failed, config)


def update_index(index: CodebaseIndex,
                 changed: Mapping[str, bytes | str | None]) -> CodebaseIndex:
    """Apply edits/deletions; result equals build_index of the new state.

    Unchanged files keep their per-file facts; the cross-file layer is
    recomputed so importers of changed files re-resolve."""
    config = index.config
    facts_by_file = dict(index.file_facts)
    warnings = dict(index.warnings)
    failed = dict(index.failed_files)
    for file, content in changed.items():
        facts_by_file.pop(file, None)
        warnings.pop(file, None)
        failed.pop(file, None)
        if content is None:
            continue
        try:
            ast, warns = parse_file(file, content,
                                    max_bytes=config.max_file_bytes)
        except VibeguardError as exc:
            failed[file] = str(exc)
            continue
        facts_by_file[file] = extract_facts(file, ast, tuple(warns))
        warnings[file] = tuple(warns)
    return _build_cross_layer(facts_by_file, warnings, failed, config)


def resolve_union(index: CodebaseIndex, name: str,
                  from_file: str) -> Optional[UnionType]:
    """Resolve a union name as seen from a file; local declarations shadow
    imports, absence is a value."""
    return Resolver(index.file_facts).union(name, from_file)
