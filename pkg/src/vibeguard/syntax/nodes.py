"""AST node types for the analyzed TypeScript subset.

Every node carries a byte-offset Span nested inside its parent's span.
Constructs outside the subset become Unknown* nodes; no input aborts
the parse.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from vibeguard.syntax.spans import Span

# -- expressions -------------------------------------------------------------


@dataclass(frozen=True)
class Ident:
    span: Span
    name: str


@dataclass(frozen=True)
class StringLit:
    span: Span
    value: str
    raw: str


@dataclass(frozen=True)
class TemplateLit:
    span: Span
    raw: str


@dataclass(frozen=True)
class NumberLit:
    span: Span
    raw: str


@dataclass(frozen=True)
class MemberExpr:
    span: Span
    obj: "Expr"
    prop: Optional[str]  # None for computed access
    computed: bool


@dataclass(frozen=True)
class CallExpr:
    span: Span
    callee: "Expr"
    args: tuple["Expr", ...]
    is_new: bool = False


@dataclass(frozen=True)
class ObjectEntry:
    span: Span
    kind: str  # pair | shorthand | spread | unknown
    key: Optional[str] = None
    key_span: Optional[Span] = None
    value: Optional["Expr"] = None


@dataclass(frozen=True)
class ObjectLit:
    span: Span
    entries: tuple[ObjectEntry, ...]


@dataclass(frozen=True)
class ArrayLit:
    span: Span


@dataclass(frozen=True)
class BinaryExpr:
    span: Span
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryExpr:
    span: Span
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class SatisfiesExpr:
    span: Span
    expr: "Expr"
    type_text: str
    type_span: Span


@dataclass(frozen=True)
class ArrowFn:
    span: Span
    params: tuple["Param", ...]
    body: Union["Block", "Expr", None]


@dataclass(frozen=True)
class JsxExpr:
    """A JSX element, treated as an opaque expression leaf."""
    span: Span


@dataclass(frozen=True)
class ParenExpr:
    span: Span
    inner: "Expr"


@dataclass(frozen=True)
class UnknownExpr:
    span: Span


Expr = Union[
    Ident, StringLit, TemplateLit, NumberLit, MemberExpr, CallExpr,
    ObjectLit, ArrayLit, BinaryExpr, UnaryExpr, SatisfiesExpr, ArrowFn,
    JsxExpr, ParenExpr, UnknownExpr,
]

# -- statements --------------------------------------------------------------


@dataclass(frozen=True)
class Block:
    span: Span
    stmts: tuple["Stmt", ...]


@dataclass(frozen=True)
class CaseClause:
    span: Span
    test: Expr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class DefaultClause:
    span: Span
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class SwitchStmt:
    span: Span
    discriminant: Expr
    cases: tuple[CaseClause, ...]
    default: Optional[DefaultClause]


@dataclass(frozen=True)
class IfStmt:
    span: Span
    test: Expr
    then: "Stmt"
    orelse: Optional["Stmt"]  # Block, IfStmt (else-if) or other statement


@dataclass(frozen=True)
class ReturnStmt:
    span: Span
    value: Optional[Expr]


@dataclass(frozen=True)
class ThrowStmt:
    span: Span
    value: Expr


@dataclass(frozen=True)
class ExprStmt:
    span: Span
    expr: Expr


@dataclass(frozen=True)
class VarStmt:
    """const/let/var declaration, as a statement or top-level item."""
    span: Span
    decl_kind: str  # const | let | var
    name: Optional[str]  # None for destructuring patterns
    pattern_props: tuple[tuple[str, str], ...]  # (property, binding) pairs
    type_text: Optional[str]
    type_span: Optional[Span]
    init: Optional[Expr]
    exported: bool = False


@dataclass(frozen=True)
class BreakStmt:
    span: Span


@dataclass(frozen=True)
class ContinueStmt:
    span: Span


@dataclass(frozen=True)
class EmptyStmt:
    span: Span


@dataclass(frozen=True)
class UnknownStmt:
    span: Span


Stmt = Union[
    Block, SwitchStmt, IfStmt, ReturnStmt, ThrowStmt, ExprStmt, VarStmt,
    BreakStmt, ContinueStmt, EmptyStmt, UnknownStmt,
]

# -- top-level items ---------------------------------------------------------


@dataclass(frozen=True)
class Param:
    span: Span
    name: Optional[str]  # None when the parameter is a destructuring pattern
    pattern_props: tuple[tuple[str, str], ...]  # (property, binding) pairs
    type_text: Optional[str]
    type_span: Optional[Span]
    optional: bool = False


@dataclass(frozen=True)
class ImportedName:
    name: str
    alias: Optional[str] = None

    @property
    def local(self) -> str:
        return self.alias or self.name


@dataclass(frozen=True)
class ImportDecl:
    span: Span
    names: tuple[ImportedName, ...]
    source: Optional[str]  # module specifier text, e.g. './types'
    type_only: bool = False


@dataclass(frozen=True)
class ExportNames:
    span: Span
    names: tuple[ImportedName, ...]
    source: Optional[str]  # set for re-exports


@dataclass(frozen=True)
class TypeAliasDecl:
    span: Span
    name: str
    name_span: Span
    exported: bool
    rhs_text: str
    rhs_span: Span
    members: Optional[tuple[StringLit, ...]]  # set iff RHS is a string-literal union


@dataclass(frozen=True)
class PropertySig:
    span: Span
    name: str
    optional: bool
    type_text: str
    type_span: Span


@dataclass(frozen=True)
class InterfaceDecl:
    span: Span
    name: str
    exported: bool
    props: tuple[PropertySig, ...]


@dataclass(frozen=True)
class FunctionDecl:
    span: Span
    name: str
    exported: bool
    params: tuple[Param, ...]
    body: Optional[Block]
    return_type_text: Optional[str] = None


@dataclass(frozen=True)
class UnknownItem:
    span: Span
    reason: str = ""


Item = Union[
    ImportDecl, ExportNames, TypeAliasDecl, InterfaceDecl, FunctionDecl,
    VarStmt, UnknownItem,
]


@dataclass(frozen=True)
class CommentTrivia:
    span: Span
    kind: str  # line_comment | block_comment


@dataclass(frozen=True)
class SourceAst:
    file_id: str
    items: tuple[Item, ...]
    comments: tuple[CommentTrivia, ...]
    root_span: Span
    source_hash: str = ""


@dataclass(frozen=True)
class ParseWarning:
    span: Span
    message: str


def walk_statements(node) -> list:
    """All statements reachable from a statement/block, including itself."""
    out = []
    stack = [node]
    while stack:
        cur = stack.pop()
        out.append(cur)
        if isinstance(cur, Block):
            stack.extend(cur.stmts)
        elif isinstance(cur, IfStmt):
            stack.append(cur.then)
            if cur.orelse is not None:
                stack.append(cur.orelse)
        elif isinstance(cur, SwitchStmt):
            for c in cur.cases:
                stack.extend(c.body)
            if cur.default is not None:
                stack.extend(cur.default.body)
    return out
