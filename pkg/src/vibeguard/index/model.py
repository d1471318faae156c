"""Cross-file model of the analyzed codebase.

All values are immutable snapshots; rebuilding from the same file set
always produces structurally equal values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from vibeguard.syntax.nodes import (
    IfStmt, ObjectLit, ParseWarning, SourceAst, Stmt, SwitchStmt,
)
from vibeguard.syntax.spans import Span

DEFAULT_NONE = "none"
DEFAULT_PLAIN = "plain"
DEFAULT_ASSERT_NEVER = "assert_never"

CTX_CALL_ARGUMENT = "call-argument"
CTX_PROPERTY_VALUE = "property-value"
CTX_COMPARISON = "comparison"


@dataclass(frozen=True)
class UnionType:
    """A named string-literal union type."""
    name: str
    members: tuple[str, ...]  # declaration order, pairwise distinct
    decl_span: Span
    exported: bool
    defining_file: str
    member_spans: tuple[Span, ...] = ()


@dataclass(frozen=True)
class CaseInfo:
    value: str
    test_span: Span
    clause_span: Span


@dataclass(frozen=True)
class SwitchSite:
    """One switch statement over a string-discriminated value."""
    file: str
    span: Span
    discriminant: str  # canonical member-access path
    discriminant_span: Span
    resolved_union: Optional[UnionType]
    cases: tuple[str, ...]  # distinct, source order
    case_infos: tuple[CaseInfo, ...]
    default_kind: str  # none | plain | assert_never
    enclosing_decl: str
    node: SwitchStmt


@dataclass(frozen=True)
class ChainArm:
    value: str
    op: str  # === | !==
    test_span: Span
    body: Stmt


@dataclass(frozen=True)
class ComparisonChain:
    """An if/else-if chain of string comparisons against one subject."""
    file: str
    root_span: Span
    subject: str
    observed_values: tuple[str, ...]  # distinct, source order
    arms: tuple[ChainArm, ...]
    has_terminal_else_or_fallthrough: bool
    terminal_else: Optional[Stmt]
    subject_type_kind: str  # union | string | any | other | unknown
    subject_union: Optional[UnionType]
    enclosing_decl: str
    node: IfStmt


@dataclass(frozen=True)
class OccurrenceSite:
    span: Span
    context_kind: str  # call-argument | property-value | comparison
    file: str
    literal: str


@dataclass(frozen=True)
class FamilyAnchor:
    kind: str  # call | prop
    name: str  # callee path or property name
    arg_index: int = -1
    param_name: str = ""
    target_file: str = ""  # where the union declaration belongs


@dataclass(frozen=True)
class LiteralFamily:
    """Semantically related string literals sharing a usage context."""
    literals: tuple[str, ...]  # distinct, first-occurrence order
    occurrence_sites: tuple[OccurrenceSite, ...]
    anchor: FamilyAnchor


@dataclass(frozen=True)
class MappingLiteral:
    """An object literal keyed (or intended to be keyed) by a union."""
    file: str
    span: Span
    keys: tuple[str, ...]
    key_spans: tuple[Span, ...]
    intended_key_union: Optional[UnionType]
    has_satisfies_guard: bool
    has_record_annotation: bool  # declared `: Record<K, V>` on the const
    value_type_text: Optional[str]
    enclosing_decl: str
    const_name: str
    node: ObjectLit


@dataclass(frozen=True)
class ImportEdge:
    local: str
    original: str
    specifier: str
    resolved_file: Optional[str]


@dataclass(frozen=True)
class IndexConfig:
    family_min_size: int = 3
    family_min_sites: int = 2
    max_file_bytes: int = 8 * 1024 * 1024


@dataclass(frozen=True)
class CodebaseIndex:
    files: dict[str, SourceAst]
    warnings: dict[str, tuple[ParseWarning, ...]]
    failed_files: dict[str, str]
    unions: dict[tuple[str, str], UnionType]
    switch_sites: dict[str, tuple[SwitchSite, ...]]
    comparison_chains: dict[str, tuple[ComparisonChain, ...]]
    mapping_literals: dict[str, tuple[MappingLiteral, ...]]
    literal_families: tuple[LiteralFamily, ...]
    import_graph: dict[str, tuple[ImportEdge, ...]]
    snapshot_id: str
    config: IndexConfig = field(default_factory=IndexConfig)
    file_facts: dict = field(default_factory=dict, compare=False, repr=False)

    def all_switch_sites(self) -> list[SwitchSite]:
        return [s for f in sorted(self.switch_sites) for s in self.switch_sites[f]]

    def all_chains(self) -> list[ComparisonChain]:
        return [c for f in sorted(self.comparison_chains)
                for c in self.comparison_chains[f]]

    def all_mappings(self) -> list[MappingLiteral]:
        return [m for f in sorted(self.mapping_literals)
                for m in self.mapping_literals[f]]
