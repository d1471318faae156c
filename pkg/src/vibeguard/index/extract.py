"""Per-file fact extraction: everything the cross-file index layer needs,
derived from a single AST so unchanged files never need re-analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from vibeguard.syntax.nodes import (
    ArrowFn, BinaryExpr, Block, CallExpr, EmptyStmt, Expr, ExprStmt,
    FunctionDecl, Ident, IfStmt, ImportDecl, InterfaceDecl, MemberExpr,
    ObjectLit, ParenExpr, ParseWarning, PropertySig, ReturnStmt,
    SatisfiesExpr, SourceAst, Stmt, StringLit, SwitchStmt, ThrowStmt,
    TypeAliasDecl, UnaryExpr, VarStmt,
)
from vibeguard.syntax.parser import canonical_path
from vibeguard.syntax.spans import Span
from vibeguard.index.model import (
    CaseInfo, ChainArm, DEFAULT_ASSERT_NEVER, DEFAULT_NONE, DEFAULT_PLAIN,
    UnionType,
)

ASSERT_NEVER = "assertNever"


@dataclass(frozen=True)
class ParamInfo:
    name: Optional[str]
    pattern_props: tuple[tuple[str, str], ...]
    type_text: Optional[str]
    type_span: Optional[Span]
    span: Span


@dataclass(frozen=True)
class FunctionInfo:
    name: str
    params: tuple[ParamInfo, ...]
    span: Span
    exported: bool
    local_var_types: tuple[tuple[str, str], ...]  # (name, type_text)
    node_body: Optional[Block]


@dataclass(frozen=True)
class InterfaceInfo:
    name: str
    props: tuple[PropertySig, ...]
    span: Span
    exported: bool
    file: str

    def prop_type(self, name: str) -> Optional[str]:
        for p in self.props:
            if p.name == name:
                return p.type_text
        return None

    def prop_sig(self, name: str) -> Optional[PropertySig]:
        for p in self.props:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class RawSwitch:
    span: Span
    discriminant: str
    discriminant_span: Span
    cases: tuple[str, ...]
    case_infos: tuple[CaseInfo, ...]
    default_kind: str
    enclosing_decl: str
    node: SwitchStmt


@dataclass(frozen=True)
class RawChain:
    root_span: Span
    subject: str
    observed_values: tuple[str, ...]
    arms: tuple[ChainArm, ...]
    has_terminal_else_or_fallthrough: bool
    terminal_else: Optional[Stmt]
    enclosing_decl: str
    node: IfStmt


@dataclass(frozen=True)
class CallLiteralOcc:
    callee: str
    arg_index: int
    literal: str
    span: Span
    enclosing_decl: str


@dataclass(frozen=True)
class PropLiteralOcc:
    prop: str
    literal: str
    span: Span
    annotated: bool  # containing object sits under a type annotation/guard
    enclosing_decl: str


@dataclass(frozen=True)
class RawImport:
    local: str
    original: str
    specifier: str


@dataclass(frozen=True)
class RawMapping:
    span: Span
    keys: tuple[str, ...]
    key_spans: tuple[Span, ...]
    annotation_text: Optional[str]
    satisfies_text: Optional[str]
    enclosing_decl: str
    const_name: str
    node: ObjectLit


@dataclass(frozen=True)
class FileFacts:
    file: str
    ast: SourceAst
    warnings: tuple[ParseWarning, ...]
    unions: tuple[UnionType, ...]
    interfaces: tuple[InterfaceInfo, ...]
    functions: tuple[FunctionInfo, ...]
    switches: tuple[RawSwitch, ...]
    chains: tuple[RawChain, ...]
    call_literals: tuple[CallLiteralOcc, ...]
    prop_literals: tuple[PropLiteralOcc, ...]
    mappings: tuple[RawMapping, ...]
    imports: tuple[RawImport, ...]
    exported_names: tuple[str, ...]
    top_level_names: tuple[str, ...]
    module_var_types: tuple[tuple[str, str], ...]

    def union_named(self, name: str) -> Optional[UnionType]:
        for u in self.unions:
            if u.name == name:
                return u
        return None

    def interface_named(self, name: str) -> Optional[InterfaceInfo]:
        for i in self.interfaces:
            if i.name == name:
                return i
        return None

    def function_named(self, name: str) -> Optional[FunctionInfo]:
        for f in self.functions:
            if f.name == name:
                return f
        return None


def _child_exprs(expr: Expr) -> list[Expr]:
    if isinstance(expr, MemberExpr):
        return [expr.obj]
    if isinstance(expr, CallExpr):
        return [expr.callee, *expr.args]
    if isinstance(expr, ObjectLit):
        return [e.value for e in expr.entries if e.value is not None]
    if isinstance(expr, BinaryExpr):
        return [expr.left, expr.right]
    if isinstance(expr, UnaryExpr):
        return [expr.operand]
    if isinstance(expr, SatisfiesExpr):
        return [expr.expr]
    if isinstance(expr, ParenExpr):
        return [expr.inner]
    if isinstance(expr, ArrowFn):
        if expr.body is not None and not isinstance(expr.body, Block):
            return [expr.body]
    return []


def _stmt_exprs(stmt: Stmt) -> list[Expr]:
    if isinstance(stmt, ExprStmt):
        return [stmt.expr]
    if isinstance(stmt, ReturnStmt):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, ThrowStmt):
        return [stmt.value]
    if isinstance(stmt, VarStmt):
        return [stmt.init] if stmt.init is not None else []
    if isinstance(stmt, IfStmt):
        return [stmt.test]
    if isinstance(stmt, SwitchStmt):
        return [stmt.discriminant] + [c.test for c in stmt.cases]
    return []


def _stmt_children(stmt: Stmt) -> list[Stmt]:
    if isinstance(stmt, Block):
        return list(stmt.stmts)
    if isinstance(stmt, IfStmt):
        out = [stmt.then]
        if stmt.orelse is not None:
            out.append(stmt.orelse)
        return out
    if isinstance(stmt, SwitchStmt):
        out: list[Stmt] = []
        for c in stmt.cases:
            out.extend(c.body)
        if stmt.default is not None:
            out.extend(stmt.default.body)
        return out
    return []


def _match_string_comparison(
    test: Expr,
) -> Optional[tuple[str, str, str, Span]]:
    """Match `path === 'lit'` (either order); returns (subject, op, value,
    test span)."""
    t = test
    while isinstance(t, ParenExpr):
        t = t.inner
    if not isinstance(t, BinaryExpr) or t.op not in ("===", "!=="):
        return None
    left, right = t.left, t.right
    if isinstance(right, StringLit):
        subject = canonical_path(left)
        if subject is not None:
            return subject, t.op, right.value, t.span
    if isinstance(left, StringLit):
        subject = canonical_path(right)
        if subject is not None:
            return subject, t.op, left.value, t.span
    return None


def _default_kind(sw: SwitchStmt, discriminant: str) -> str:
    if sw.default is None:
        return DEFAULT_NONE
    body = [s for s in sw.default.body]
    if len(body) != 1:
        return DEFAULT_PLAIN
    stmt = body[0]
    call: Optional[Expr] = None
    if isinstance(stmt, ReturnStmt):
        call = stmt.value
    elif isinstance(stmt, ThrowStmt):
        call = stmt.value
    elif isinstance(stmt, ExprStmt):
        call = stmt.expr
    if not isinstance(call, CallExpr) or call.is_new:
        return DEFAULT_PLAIN
    callee = call.callee
    if not (isinstance(callee, Ident) and callee.name == ASSERT_NEVER):
        return DEFAULT_PLAIN
    if len(call.args) != 1 or canonical_path(call.args[0]) != discriminant:
        return DEFAULT_PLAIN
    return DEFAULT_ASSERT_NEVER


class _Extractor:
    def __init__(self, file: str, ast: SourceAst,
                 warnings: tuple[ParseWarning, ...]) -> None:
        self.file = file
        self.ast = ast
        self.warnings = warnings
        self.unions: list[UnionType] = []
        self.interfaces: list[InterfaceInfo] = []
        self.functions: list[FunctionInfo] = []
        self.switches: list[RawSwitch] = []
        self.chains: list[RawChain] = []
        self.call_literals: list[CallLiteralOcc] = []
        self.prop_literals: list[PropLiteralOcc] = []
        self.mappings: list[RawMapping] = []
        self.imports: list[RawImport] = []
        self.exported: list[str] = []
        self.top_names: list[str] = []
        self.module_vars: list[tuple[str, str]] = []

    def run(self) -> FileFacts:
        for item in self.ast.items:
            self._item(item)
        return FileFacts(
            file=self.file,
            ast=self.ast,
            warnings=self.warnings,
            unions=tuple(self.unions),
            interfaces=tuple(self.interfaces),
            functions=tuple(self.functions),
            switches=tuple(self.switches),
            chains=tuple(self.chains),
            call_literals=tuple(self.call_literals),
            prop_literals=tuple(self.prop_literals),
            mappings=tuple(self.mappings),
            imports=tuple(self.imports),
            exported_names=tuple(self.exported),
            top_level_names=tuple(self.top_names),
            module_var_types=tuple(self.module_vars),
        )

    def _item(self, item) -> None:
        if isinstance(item, TypeAliasDecl):
            self.top_names.append(item.name)
            if item.exported:
                self.exported.append(item.name)
            if item.members:
                seen: dict[str, Span] = {}
                for m in item.members:
                    if m.value not in seen:
                        seen[m.value] = m.span
                self.unions.append(UnionType(
                    name=item.name,
                    members=tuple(seen.keys()),
                    decl_span=item.span,
                    exported=item.exported,
                    defining_file=self.file,
                    member_spans=tuple(seen.values()),
                ))
        elif isinstance(item, InterfaceDecl):
            self.top_names.append(item.name)
            if item.exported:
                self.exported.append(item.name)
            self.interfaces.append(InterfaceInfo(
                item.name, item.props, item.span, item.exported, self.file))
        elif isinstance(item, FunctionDecl):
            self.top_names.append(item.name)
            if item.exported:
                self.exported.append(item.name)
            self._function(item.name, item.params, item.body, item.span,
                           item.exported)
        elif isinstance(item, VarStmt):
            if item.name:
                self.top_names.append(item.name)
                if item.exported:
                    self.exported.append(item.name)
                if item.type_text:
                    self.module_vars.append((item.name, item.type_text))
            self._var(item, enclosing="")
        elif isinstance(item, ImportDecl):
            if item.source:
                for n in item.names:
                    self.top_names.append(n.local)
                    self.imports.append(
                        RawImport(n.local, n.name, item.source))

    def _function(self, name: str, params, body: Optional[Block],
                  span: Span, exported: bool) -> None:
        local_types: list[tuple[str, str]] = []
        if body is not None:
            for stmt in _walk(body):
                if isinstance(stmt, VarStmt) and stmt.name and stmt.type_text:
                    local_types.append((stmt.name, stmt.type_text))
        infos = tuple(
            ParamInfo(p.name, p.pattern_props, p.type_text, p.type_span,
                      p.span)
            for p in params
        )
        self.functions.append(FunctionInfo(
            name, infos, span, exported, tuple(local_types), body))
        if body is not None:
            self._walk_body(body, enclosing=name)

    def _var(self, stmt: VarStmt, enclosing: str) -> None:
        init = stmt.init
        name = stmt.name or ""
        satisfies_text: Optional[str] = None
        obj: Optional[ObjectLit] = None
        if isinstance(init, SatisfiesExpr):
            satisfies_text = init.type_text
            if isinstance(init.expr, ObjectLit):
                obj = init.expr
        elif isinstance(init, ObjectLit):
            obj = init
        if isinstance(init, ArrowFn) and name:
            body = init.body if isinstance(init.body, Block) else None
            self._function(name, init.params, body, stmt.span, stmt.exported)
            return
        if obj is not None and name:
            keys: list[str] = []
            key_spans: list[Span] = []
            clean = True
            for e in obj.entries:
                if e.kind in ("pair", "shorthand") and e.key is not None:
                    if e.key in keys:
                        continue
                    keys.append(e.key)
                    key_spans.append(e.key_span or e.span)
                else:
                    clean = False
            if clean and keys:
                self.mappings.append(RawMapping(
                    span=stmt.span,
                    keys=tuple(keys),
                    key_spans=tuple(key_spans),
                    annotation_text=stmt.type_text,
                    satisfies_text=satisfies_text,
                    enclosing_decl=enclosing,
                    const_name=name,
                    node=obj,
                ))
        if init is not None:
            annotated = stmt.type_text is not None or satisfies_text is not None
            self._walk_expr(init, enclosing, annotated_obj=annotated)

    def _walk_body(self, block: Block, enclosing: str) -> None:
        self._scan_chains(block, enclosing)
        for stmt in _walk(block):
            if isinstance(stmt, SwitchStmt):
                self._switch(stmt, enclosing)
            if isinstance(stmt, VarStmt):
                self._var(stmt, enclosing)
            else:
                for expr in _stmt_exprs(stmt):
                    self._walk_expr(expr, enclosing)

    def _scan_chains(self, root: Block, enclosing: str) -> None:
        # chain heads are if-statements in statement lists; an `else if`
        # hangs off another if's orelse and is part of that chain's spine
        for stmt in _walk(root):
            if isinstance(stmt, Block):
                self._scan_stmt_list(stmt.stmts, enclosing)
            elif isinstance(stmt, SwitchStmt):
                for c in stmt.cases:
                    self._scan_stmt_list(c.body, enclosing)
                if stmt.default is not None:
                    self._scan_stmt_list(stmt.default.body, enclosing)

    def _scan_stmt_list(self, stmts: tuple[Stmt, ...],
                        enclosing: str) -> None:
        for i, stmt in enumerate(stmts):
            if isinstance(stmt, IfStmt):
                following = any(not isinstance(s, EmptyStmt)
                                for s in stmts[i + 1:])
                self._chain(stmt, following, enclosing)

    def _chain(self, head: IfStmt, has_following: bool,
               enclosing: str) -> None:
        arms: list[ChainArm] = []
        subject: Optional[str] = None
        cur: Optional[Stmt] = head
        terminal_else: Optional[Stmt] = None
        while isinstance(cur, IfStmt):
            matched = _match_string_comparison(cur.test)
            if matched is not None:
                subj, op, value, tspan = matched
                if subject is None:
                    subject = subj
                if subj == subject:
                    arms.append(ChainArm(value, op, tspan, cur.then))
            cur = cur.orelse
        if cur is not None:
            terminal_else = cur
        eq_arms = [a for a in arms if a.op in ("===", "!==")]
        if subject is None or len(eq_arms) < 2:
            return
        values: list[str] = []
        for a in eq_arms:
            if a.value not in values:
                values.append(a.value)
        if len(values) < 2:
            return
        self.chains.append(RawChain(
            root_span=head.span,
            subject=subject,
            observed_values=tuple(values),
            arms=tuple(eq_arms),
            has_terminal_else_or_fallthrough=(
                terminal_else is not None or has_following),
            terminal_else=terminal_else,
            enclosing_decl=enclosing,
            node=head,
        ))

    def _switch(self, sw: SwitchStmt, enclosing: str) -> None:
        discriminant = canonical_path(sw.discriminant)
        if discriminant is None:
            return
        values: list[str] = []
        infos: list[CaseInfo] = []
        for c in sw.cases:
            test = c.test
            while isinstance(test, ParenExpr):
                test = test.inner
            if not isinstance(test, StringLit):
                return  # non-literal labels: outside the analyzed shape
            if test.value not in values:
                values.append(test.value)
                infos.append(CaseInfo(test.value, test.span, c.span))
        self.switches.append(RawSwitch(
            span=sw.span,
            discriminant=discriminant,
            discriminant_span=sw.discriminant.span,
            cases=tuple(values),
            case_infos=tuple(infos),
            default_kind=_default_kind(sw, discriminant),
            enclosing_decl=enclosing,
            node=sw,
        ))

    def _walk_expr(self, expr: Expr, enclosing: str,
                   annotated_obj: bool = False) -> None:
        stack: list[tuple[Expr, bool]] = [(expr, annotated_obj)]
        while stack:
            cur, annotated = stack.pop()
            if isinstance(cur, CallExpr) and not cur.is_new:
                callee = canonical_path(cur.callee)
                if callee is not None and callee != ASSERT_NEVER:
                    for i, arg in enumerate(cur.args):
                        if isinstance(arg, StringLit):
                            self.call_literals.append(CallLiteralOcc(
                                callee, i, arg.value, arg.span, enclosing))
            if isinstance(cur, ObjectLit):
                for e in cur.entries:
                    if e.kind == "pair" and e.key is not None and \
                            isinstance(e.value, StringLit):
                        self.prop_literals.append(PropLiteralOcc(
                            e.key, e.value.value, e.value.span, annotated,
                            enclosing))
            if isinstance(cur, SatisfiesExpr):
                stack.append((cur.expr, True))
                continue
            if isinstance(cur, ArrowFn) and isinstance(cur.body, Block):
                self._walk_body(cur.body, enclosing)
                continue
            for child in _child_exprs(cur):
                stack.append((child, annotated))


def _walk(root: Stmt) -> list[Stmt]:
    out: list[Stmt] = []
    stack: list[Stmt] = [root]
    while stack:
        cur = stack.pop()
        out.append(cur)
        stack.extend(reversed(_stmt_children(cur)))
    return out


def extract_facts(file: str, ast: SourceAst,
                  warnings: tuple[ParseWarning, ...]) -> FileFacts:
    """Derive all per-file facts used by the cross-file index layer."""
    return _Extractor(file, ast, warnings).run()
