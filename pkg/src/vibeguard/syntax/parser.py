"""Recursive-descent parser for the analyzed TypeScript subset.

Design rules:
- never abort: constructs outside the subset degrade to Unknown* nodes
  with correct spans and a warning;
- byte spans are authoritative and nest within their parents;
- JSX elements are consumed as opaque expression leaves by a character
  level scanner, so case bodies with markup never derail the parse.
"""

from __future__ import annotations

import hashlib

from vibeguard.errors import InputTooLarge, InvalidEncoding, SpanOutOfBounds
from vibeguard.syntax import lexer
from vibeguard.syntax.lexer import Token, tokenize
from vibeguard.syntax.nodes import (
    ArrayLit, BinaryExpr, Block, BreakStmt, CallExpr, CaseClause,
    CommentTrivia, ContinueStmt, DefaultClause, EmptyStmt, Expr, ExprStmt,
    ExportNames, FunctionDecl, Ident, IfStmt, ImportDecl, ImportedName,
    InterfaceDecl, Item, JsxExpr, MemberExpr, NumberLit, ObjectEntry,
    ObjectLit, ParenExpr, Param, ParseWarning, PropertySig, ReturnStmt,
    SatisfiesExpr, SourceAst, Stmt, StringLit, SwitchStmt, TemplateLit,
    ThrowStmt, TypeAliasDecl, UnaryExpr, UnknownExpr, UnknownItem,
    UnknownStmt, VarStmt, ArrowFn,
)
from vibeguard.syntax.spans import SourceText, Span

MAX_FILE_BYTES = 8 * 1024 * 1024

_ITEM_KEYWORDS = {
    "import", "export", "type", "interface", "function", "const", "let",
    "var", "class", "enum", "namespace", "declare", "abstract", "async",
}
_STMT_KEYWORDS = _ITEM_KEYWORDS | {"switch", "if", "return", "throw", "for",
                                   "while", "do", "try", "break", "continue"}

_UNARY_OPS = {"!", "-", "+", "~", "typeof", "void", "await", "delete"}

# binary operators by precedence, low to high
_BINARY_LEVELS = [
    {"??"},
    {"||"},
    {"&&"},
    {"|"},
    {"^"},
    {"&"},
    {"===", "!==", "==", "!="},
    {"<", ">", "<=", ">=", "instanceof", "in"},
    {"<<", ">>"},
    {"+", "-"},
    {"*", "/", "%"},
]


class _Parser:
    def __init__(self, src: SourceText, tokens: list[Token]) -> None:
        self.src = src
        self.toks = tokens
        self.pos = 0
        self.warnings: list[ParseWarning] = []

    # -- token helpers -------------------------------------------------------

    def cur(self) -> Token | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def peek(self, k: int = 1) -> Token | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str) -> bool:
        t = self.cur()
        return t is not None and t.text == text

    def at_kind(self, kind: str) -> bool:
        t = self.cur()
        return t is not None and t.kind == kind

    def eat(self) -> Token:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def eat_if(self, text: str) -> Token | None:
        if self.at(text):
            return self.eat()
        return None

    def eof(self) -> bool:
        return self.pos >= len(self.toks)

    def span(self, cstart: int, cend: int) -> Span:
        return self.src.span(cstart, cend)

    def span_from(self, start_tok: Token) -> Span:
        end = self.toks[self.pos - 1].end if self.pos > 0 else start_tok.end
        return self.span(start_tok.start, max(end, start_tok.end))

    def warn(self, span: Span, message: str) -> None:
        self.warnings.append(ParseWarning(span, message))

    def same_line(self, a: Token, b: Token) -> bool:
        return "\n" not in self.src.text[a.end:b.start]

    # -- items ---------------------------------------------------------------

    def parse_items(self) -> tuple[Item, ...]:
        items: list[Item] = []
        while not self.eof():
            items.append(self.parse_item())
        return tuple(items)

    def parse_item(self) -> Item:
        start = self.cur()
        assert start is not None
        exported = False
        if self.at("export") and self.peek() is not None:
            nxt = self.peek()
            if nxt.text == "{" or (nxt.text == "type"
                                   and self.peek(2) is not None
                                   and self.peek(2).text == "{"):
                return self.parse_export_names()
            if nxt.text in ("type", "interface", "function", "const", "let",
                           "var", "async"):
                self.eat()
                exported = True
        t = self.cur()
        if t is None:
            return UnknownItem(self.span_from(start), "truncated input")
        if t.text == "import":
            return self.parse_import(start)
        if t.text == "type" and self._looks_like_type_alias():
            return self.parse_type_alias(start, exported)
        if t.text == "interface":
            return self.parse_interface(start, exported)
        if t.text == "function" or (
            t.text == "async" and self.peek() is not None
            and self.peek().text == "function"
        ):
            return self.parse_function(start, exported)
        if t.text in ("const", "let", "var"):
            return self.parse_var(start, exported)
        return self.recover_unknown_item(start)

    def _looks_like_type_alias(self) -> bool:
        name = self.peek(1)
        eq = self.peek(2)
        return (name is not None and name.kind == lexer.NAME
                and eq is not None and eq.text == "=")

    def parse_import(self, start: Token) -> Item:
        self.eat()  # import
        type_only = bool(self.at("type") and self.peek() is not None
                         and self.peek().text == "{")
        if type_only:
            self.eat()
        if not self.at("{"):
            # default / namespace / side-effect imports are outside the subset
            item = self.recover_unknown_item(start)
            return item
        names = self._parse_name_list()
        source: str | None = None
        if self.at("from"):
            self.eat()
            if self.at_kind(lexer.STRING):
                source = self.eat().value
        self.eat_if(";")
        span = self.span_from(start)
        if source is None:
            self.warn(span, "import without a module specifier")
        return ImportDecl(span, names, source, type_only)

    def parse_export_names(self) -> Item:
        start = self.eat()  # export
        self.eat_if("type")
        names = self._parse_name_list()
        source: str | None = None
        if self.at("from"):
            self.eat()
            if self.at_kind(lexer.STRING):
                source = self.eat().value
        self.eat_if(";")
        return ExportNames(self.span_from(start), names, source)

    def _parse_name_list(self) -> tuple[ImportedName, ...]:
        names: list[ImportedName] = []
        if not self.eat_if("{"):
            return tuple(names)
        while not self.eof() and not self.at("}"):
            if self.at_kind(lexer.NAME):
                base = self.eat().text
                alias = None
                if base == "type" and self.at_kind(lexer.NAME):
                    base = self.eat().text
                if self.at("as") and self.peek() is not None:
                    self.eat()
                    if self.at_kind(lexer.NAME):
                        alias = self.eat().text
                names.append(ImportedName(base, alias))
            elif not self.eat_if(","):
                self.eat()  # tolerate stray tokens
        self.eat_if("}")
        return tuple(names)

    def parse_type_alias(self, start: Token, exported: bool) -> Item:
        self.eat()  # type
        name_tok = self.eat()
        self.eat()  # =
        rhs_start = self.cur()
        rhs_toks, rhs_ctext = self._scan_type_tokens(stops={";"}, asi=True)
        self.eat_if(";")
        span = self.span_from(start)
        if rhs_start is None or not rhs_toks:
            self.warn(span, "type alias with empty right-hand side")
            rhs_span = self.span(name_tok.end, name_tok.end)
            return TypeAliasDecl(span, name_tok.text,
                                 self.span(name_tok.start, name_tok.end),
                                 exported, "", rhs_span, None)
        rhs_span = self.span(rhs_toks[0].start, rhs_toks[-1].end)
        members = self._string_union_members(rhs_toks)
        return TypeAliasDecl(span, name_tok.text,
                             self.span(name_tok.start, name_tok.end),
                             exported, rhs_ctext.strip(), rhs_span, members)

    def _string_union_members(
        self, toks: list[Token]
    ) -> tuple[StringLit, ...] | None:
        """Match `['|'] STRING ('|' STRING)*`; None when RHS is anything else."""
        i = 0
        if i < len(toks) and toks[i].text == "|":
            i += 1
        members: list[StringLit] = []
        expect_string = True
        while i < len(toks):
            t = toks[i]
            if expect_string:
                if t.kind != lexer.STRING:
                    return None
                members.append(
                    StringLit(self.span(t.start, t.end), t.value, t.text))
            else:
                if t.text != "|":
                    return None
            expect_string = not expect_string
            i += 1
        if expect_string or not members:
            return None
        return tuple(members)

    def _scan_type_tokens(
        self, stops: set[str], asi: bool = False,
        newline_prop_stop: bool = False,
    ) -> tuple[list[Token], str]:
        """Consume tokens forming a type expression.

        Stops at any of `stops` at bracket depth 0 (the stop token is not
        consumed), at a depth-0 `}` closing an enclosing block, and -- when
        `asi` is set -- before a new top-level item on a fresh line."""
        collected: list[Token] = []
        depth = 0
        angle = 0
        while not self.eof():
            t = self.cur()
            if depth == 0 and angle <= 0:
                if t.text in stops or t.text == "}":
                    break
                if collected:
                    prev = collected[-1]
                    if asi and not self.same_line(prev, t) and \
                            t.text in _ITEM_KEYWORDS:
                        break
                    if newline_prop_stop and not self.same_line(prev, t):
                        nxt = self.peek()
                        if t.kind == lexer.NAME and nxt is not None and \
                                nxt.text in (":", "?"):
                            break
            if t.text in ("(", "[", "{"):
                depth += 1
            elif t.text in (")", "]", "}"):
                if depth == 0:
                    break
                depth -= 1
            elif t.text == "<":
                angle += 1
            elif t.text == ">":
                angle -= 1
            elif t.text == ">>":
                angle -= 2
            collected.append(self.eat())
        if not collected:
            return [], ""
        text = self.src.text[collected[0].start:collected[-1].end]
        return collected, text

    def parse_interface(self, start: Token, exported: bool) -> Item:
        self.eat()  # interface
        if not self.at_kind(lexer.NAME):
            return self.recover_unknown_item(start)
        name = self.eat().text
        while not self.eof() and not self.at("{"):
            self.eat()  # extends clause etc.
        props: list[PropertySig] = []
        if self.eat_if("{"):
            while not self.eof() and not self.at("}"):
                prop = self._parse_property_sig()
                if prop is not None:
                    props.append(prop)
            self.eat_if("}")
        return InterfaceDecl(self.span_from(start), name, exported,
                             tuple(props))

    def _parse_property_sig(self) -> PropertySig | None:
        t = self.cur()
        if t is None:
            return None
        if t.text in (";", ","):
            self.eat()
            return None
        key: str | None = None
        if t.kind == lexer.NAME and t.text == "readonly" and \
                self.peek() is not None and self.peek().kind == lexer.NAME:
            self.eat()
            t = self.cur()
        if t.kind == lexer.NAME or t.kind == lexer.STRING:
            key = t.value if t.kind == lexer.STRING else t.text
            nxt = self.peek()
            if nxt is not None and nxt.text in (":", "?"):
                start = self.eat()
                optional = bool(self.eat_if("?"))
                if self.eat_if(":"):
                    toks, ctext = self._scan_type_tokens(
                        stops={";", ","}, newline_prop_stop=True)
                    self.eat_if(";") or self.eat_if(",")
                    if toks:
                        tspan = self.span(toks[0].start, toks[-1].end)
                        return PropertySig(self.span_from(start), key,
                                           optional, ctext.strip(), tspan)
                span = self.span_from(start)
                self.warn(span, f"property '{key}' without a type")
                return PropertySig(span, key, optional, "", span)
        # method signatures, index signatures, call signatures: skip to the
        # next separator at depth 0; outside the property-signature subset
        start = self.cur()
        depth = 0
        while not self.eof():
            tok = self.cur()
            if depth == 0 and tok.text in (";", ","):
                self.eat()
                break
            if depth == 0 and tok.text == "}":
                break
            if tok.text in ("(", "[", "{", "<"):
                depth += 1
            elif tok.text in (")", "]", "}", ">"):
                depth -= 1
            self.eat()
        self.warn(self.span_from(start), "unsupported interface member")
        return None

    def parse_function(self, start: Token, exported: bool) -> Item:
        if self.at("async"):
            self.eat()
        self.eat()  # function
        if not self.at_kind(lexer.NAME):
            return self.recover_unknown_item(start)
        name = self.eat().text
        if not self.at("("):
            return self.recover_unknown_item(start)
        params = self.parse_params()
        ret_text = self._parse_return_type()
        body: Block | None = None
        if self.at("{"):
            body = self.parse_block()
        else:
            self.warn(self.span_from(start), f"function '{name}' without body")
        return FunctionDecl(self.span_from(start), name, exported, params,
                            body, ret_text)

    def _parse_return_type(self) -> str | None:
        if not self.eat_if(":"):
            return None
        if self.at("{"):
            # `: { ... } {` means the first group is the return type;
            # `: { ... }` followed by anything else means it was the body
            save = self.pos
            toks, text = self._scan_braced_group()
            if self.at("{"):
                return text
            self.pos = save
            return None
        toks, text = self._scan_type_tokens(stops={"{", ";"})
        return text.strip() or None

    def _scan_braced_group(self) -> tuple[list[Token], str]:
        collected = []
        depth = 0
        while not self.eof():
            t = self.eat()
            collected.append(t)
            if t.text == "{":
                depth += 1
            elif t.text == "}":
                depth -= 1
                if depth == 0:
                    break
        text = self.src.text[collected[0].start:collected[-1].end] \
            if collected else ""
        return collected, text

    def parse_params(self) -> tuple[Param, ...]:
        params: list[Param] = []
        if not self.eat_if("("):
            return tuple(params)
        while not self.eof() and not self.at(")"):
            p = self._parse_param()
            if p is not None:
                params.append(p)
            if not self.eat_if(","):
                if not self.at(")"):
                    self.eat()  # tolerate junk
        self.eat_if(")")
        return tuple(params)

    def _parse_param(self) -> Param | None:
        start = self.cur()
        if start is None:
            return None
        self.eat_if("...")
        name: str | None = None
        pattern: list[tuple[str, str]] = []
        t = self.cur()
        if t is None:
            return None
        if t.kind == lexer.NAME:
            name = self.eat().text
        elif t.text == "{":
            pattern = self._parse_object_pattern()
        elif t.text == "[":
            self._skip_balanced("[", "]")
        else:
            return None
        optional = bool(self.eat_if("?"))
        type_text: str | None = None
        type_span: Span | None = None
        if self.eat_if(":"):
            toks, ctext = self._scan_type_tokens(stops={",", ")", "="})
            if toks:
                type_text = ctext.strip()
                type_span = self.span(toks[0].start, toks[-1].end)
        if self.eat_if("="):
            self.parse_expr()
        return Param(self.span_from(start), name, tuple(pattern), type_text,
                     type_span, optional)

    def _parse_object_pattern(self) -> list[tuple[str, str]]:
        """`{ a, b: c, ...rest }` -> [(prop, binding), ...]."""
        pairs: list[tuple[str, str]] = []
        self.eat_if("{")
        while not self.eof() and not self.at("}"):
            if self.eat_if("..."):
                if self.at_kind(lexer.NAME):
                    self.eat()
            elif self.at_kind(lexer.NAME):
                prop = self.eat().text
                binding = prop
                if self.eat_if(":"):
                    if self.at_kind(lexer.NAME):
                        binding = self.eat().text
                    elif self.at("{"):
                        self._skip_balanced("{", "}")
                        binding = ""
                if self.eat_if("="):
                    self.parse_expr()
                if binding:
                    pairs.append((prop, binding))
            else:
                self.eat()
            self.eat_if(",")
        self.eat_if("}")
        return pairs

    def _skip_balanced(self, open_: str, close: str) -> None:
        depth = 0
        while not self.eof():
            t = self.eat()
            if t.text == open_:
                depth += 1
            elif t.text == close:
                depth -= 1
                if depth == 0:
                    return

    def parse_var(self, start: Token, exported: bool) -> VarStmt | UnknownItem:
        decl_kind = self.eat().text  # const | let | var
        name: str | None = None
        pattern: list[tuple[str, str]] = []
        if self.at_kind(lexer.NAME):
            name = self.eat().text
        elif self.at("{"):
            pattern = self._parse_object_pattern()
        elif self.at("["):
            self._skip_balanced("[", "]")
        else:
            return self.recover_unknown_item(start)
        self.eat_if("!")
        type_text: str | None = None
        type_span: Span | None = None
        if self.eat_if(":"):
            toks, ctext = self._scan_type_tokens(stops={"=", ";", ","})
            if toks:
                type_text = ctext.strip()
                type_span = self.span(toks[0].start, toks[-1].end)
        init: Expr | None = None
        if self.eat_if("="):
            init = self.parse_expr()
        # further declarators share the statement; their names are not tracked
        while self.eat_if(","):
            if self.at_kind(lexer.NAME):
                self.eat()
                if self.eat_if(":"):
                    self._scan_type_tokens(stops={"=", ";", ","})
                if self.eat_if("="):
                    self.parse_expr()
            else:
                break
        self.eat_if(";")
        return VarStmt(self.span_from(start), decl_kind, name, tuple(pattern),
                       type_text, type_span, init, exported)

    def recover_unknown_item(self, start: Token) -> UnknownItem:
        span = self._recover_span(start)
        self.warn(span, "unsupported construct")
        return UnknownItem(span, "unsupported construct")

    def _recover_span(self, start: Token) -> Span:
        if self.pos < len(self.toks) and self.toks[self.pos] is start:
            self.eat()
        depth = 0
        if start.text in ("(", "[", "{"):
            depth = 1
        elif start.text in (")", "]", "}"):
            return self.span(start.start, start.end)
        while not self.eof():
            t = self.cur()
            if t.text in ("(", "[", "{"):
                depth += 1
                self.eat()
                continue
            if t.text in (")", "]", "}"):
                if depth == 0:
                    break  # enclosing close; leave it
                depth -= 1
                self.eat()
                if depth == 0 and t.text == "}":
                    break  # completed a braced group, e.g. a class body
                continue
            if depth == 0 and t.text == ";":
                self.eat()
                break
            prev = self.toks[self.pos - 1]
            if depth == 0 and t.text in _STMT_KEYWORDS and \
                    not self.same_line(prev, t):
                break
            self.eat()
        return self.span_from(start)

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> Block:
        start = self.cur()
        assert start is not None and start.text == "{"
        self.eat()
        stmts: list[Stmt] = []
        while not self.eof() and not self.at("}"):
            stmts.append(self.parse_statement())
        self.eat_if("}")
        return Block(self.span_from(start), tuple(stmts))

    def parse_statement(self) -> Stmt:
        t = self.cur()
        assert t is not None
        if t.text == "{":
            return self.parse_block()
        if t.text == ";":
            self.eat()
            return EmptyStmt(self.span(t.start, t.end))
        if t.text == "switch":
            return self.parse_switch()
        if t.text == "if":
            return self.parse_if()
        if t.text == "return":
            return self.parse_return()
        if t.text == "throw":
            self.eat()
            value = self.parse_expr()
            self.eat_if(";")
            return ThrowStmt(self.span_from(t), value)
        if t.text == "break":
            self.eat()
            self.eat_if(";")
            return BreakStmt(self.span_from(t))
        if t.text == "continue":
            self.eat()
            self.eat_if(";")
            return ContinueStmt(self.span_from(t))
        if t.text in ("const", "let", "var"):
            decl = self.parse_var(t, exported=False)
            if isinstance(decl, UnknownItem):
                return UnknownStmt(decl.span)
            return decl
        if t.text in ("for", "while", "do", "try", "class", "function",
                      "enum", "namespace", "declare", "interface"):
            span = self._recover_span(t)
            self.warn(span, "unsupported construct")
            return UnknownStmt(span)
        # expression statement
        before = self.pos
        expr = self.parse_expr()
        if self.pos == before:
            self.eat()  # guarantee progress
        self.eat_if(";")
        return ExprStmt(self.span_from(t), expr)

    def parse_switch(self) -> Stmt:
        start = self.eat()  # switch
        if not self.eat_if("("):
            span = self._recover_span(start)
            self.warn(span, "malformed switch")
            return UnknownStmt(span)
        discriminant = self.parse_expr()
        self.eat_if(")")
        if not self.at("{"):
            span = self._recover_span(start)
            self.warn(span, "switch without a body")
            return UnknownStmt(span)
        self.eat()
        cases: list[CaseClause] = []
        default: DefaultClause | None = None
        while not self.eof() and not self.at("}"):
            ct = self.cur()
            if ct.text == "case":
                self.eat()
                test = self.parse_expr()
                self.eat_if(":")
                body = self._parse_clause_body()
                cases.append(CaseClause(self.span_from(ct), test, body))
            elif ct.text == "default":
                self.eat()
                self.eat_if(":")
                body = self._parse_clause_body()
                clause = DefaultClause(self.span_from(ct), body)
                if default is None:
                    default = clause
                else:
                    self.warn(clause.span, "duplicate default clause")
            else:
                span = self._recover_span(ct)
                self.warn(span, "unexpected token in switch body")
        self.eat_if("}")
        return SwitchStmt(self.span_from(start), discriminant, tuple(cases),
                          default)

    def _parse_clause_body(self) -> tuple[Stmt, ...]:
        stmts: list[Stmt] = []
        while not self.eof():
            t = self.cur()
            if t.text in ("case", "default", "}"):
                break
            stmts.append(self.parse_statement())
        return tuple(stmts)

    def parse_if(self) -> Stmt:
        start = self.eat()  # if
        if not self.eat_if("("):
            span = self._recover_span(start)
            self.warn(span, "malformed if")
            return UnknownStmt(span)
        test = self.parse_expr()
        self.eat_if(")")
        then = self.parse_statement()
        # tolerate stray semicolons between the then-branch and `else`
        while self.at(";") and self.peek() is not None and \
                self.peek().text == "else":
            self.eat()
        orelse: Stmt | None = None
        if self.at("else"):
            self.eat()
            orelse = self.parse_statement()
        return IfStmt(self.span_from(start), test, then, orelse)

    def parse_return(self) -> Stmt:
        start = self.eat()  # return
        value: Expr | None = None
        t = self.cur()
        if t is not None and t.text not in (";", "}", "case", "default") and \
                self.same_line(start, t):
            value = self.parse_expr()
        self.eat_if(";")
        return ReturnStmt(self.span_from(start), value)

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        expr = self._parse_binary(0)
        # `satisfies T` / `as T` postfix type operators
        while True:
            t = self.cur()
            if t is not None and t.kind == lexer.NAME and \
                    t.text == "satisfies":
                self.eat()
                toks, ctext = self._scan_type_tokens(
                    stops={";", ",", ")", "]"})
                if toks:
                    tspan = self.span(toks[0].start, toks[-1].end)
                    total = Span(expr.span.file_id, expr.span.start, tspan.end)
                    expr = SatisfiesExpr(total, expr, ctext.strip(), tspan)
                continue
            if t is not None and t.kind == lexer.NAME and t.text == "as":
                self.eat()
                self._scan_type_tokens(stops={";", ",", ")", "]"})
                continue
            break
        # conditional expression: treat as opaque-but-structured binary pair
        if self.at("?") and not self.at("?."):
            self.eat()
            self.parse_expr()
            self.eat_if(":")
            alternate = self.parse_expr()
            expr = BinaryExpr(
                Span(expr.span.file_id, expr.span.start, alternate.span.end),
                "?:", expr, alternate)
        if self.cur() is not None and self.cur().text in (
                "=", "+=", "-=", "*=", "/=", "%=", "&&=", "||=", "??=",
                "|=", "&=", "^="):
            op = self.eat().text
            rhs = self.parse_expr()
            expr = BinaryExpr(
                Span(expr.span.file_id, expr.span.start, rhs.span.end),
                op, expr, rhs)
        return expr

    def _parse_binary(self, level: int) -> Expr:
        if level >= len(_BINARY_LEVELS):
            return self._parse_unary()
        left = self._parse_binary(level + 1)
        while True:
            t = self.cur()
            if t is None or t.text not in _BINARY_LEVELS[level]:
                break
            self.eat()
            right = self._parse_binary(level + 1)
            left = BinaryExpr(
                Span(left.span.file_id, left.span.start, right.span.end),
                t.text, left, right)
        return left

    def _parse_unary(self) -> Expr:
        t = self.cur()
        if t is not None and (t.text in _UNARY_OPS):
            self.eat()
            operand = self._parse_unary()
            span = Span(self.src.file_id, self.src.c2b(t.start),
                        max(operand.span.end, self.src.c2b(t.end)))
            return UnaryExpr(span, t.text, operand)
        return self._parse_postfix()

    def _parse_postfix(self) -> Expr:
        expr = self._parse_primary()
        while True:
            t = self.cur()
            if t is None:
                break
            if t.text in (".", "?."):
                self.eat()
                if self.at_kind(lexer.NAME):
                    prop = self.eat()
                    expr = MemberExpr(
                        Span(expr.span.file_id, expr.span.start,
                             self.src.c2b(prop.end)),
                        expr, prop.text, False)
                else:
                    expr = UnknownExpr(
                        Span(expr.span.file_id, expr.span.start,
                             self.src.c2b(t.end)))
                continue
            if t.text == "[":
                self.eat()
                self.parse_expr()
                self.eat_if("]")
                end = self.toks[self.pos - 1].end
                expr = MemberExpr(
                    Span(expr.span.file_id, expr.span.start,
                         self.src.c2b(end)), expr, None, True)
                continue
            if t.text == "(":
                args = self._parse_args()
                end = self.toks[self.pos - 1].end
                expr = CallExpr(
                    Span(expr.span.file_id, expr.span.start,
                         self.src.c2b(end)), expr, args)
                continue
            if t.text in ("++", "--"):
                self.eat()
                expr = UnaryExpr(
                    Span(expr.span.file_id, expr.span.start,
                         self.src.c2b(t.end)), t.text, expr)
                continue
            break
        return expr

    def _parse_args(self) -> tuple[Expr, ...]:
        self.eat()  # (
        args: list[Expr] = []
        while not self.eof() and not self.at(")"):
            self.eat_if("...")
            args.append(self.parse_expr())
            if not self.eat_if(","):
                if not self.at(")"):
                    if self.cur() is not None:
                        self.eat()
        self.eat_if(")")
        return tuple(args)

    def _parse_primary(self) -> Expr:
        t = self.cur()
        if t is None:
            # synthesize an empty unknown at EOF
            end = len(self.src.text)
            return UnknownExpr(self.span(end, end))
        if t.kind == lexer.STRING:
            self.eat()
            return StringLit(self.span(t.start, t.end), t.value, t.text)
        if t.kind == lexer.TEMPLATE:
            self.eat()
            return TemplateLit(self.span(t.start, t.end), t.text)
        if t.kind == lexer.NUMBER:
            self.eat()
            return NumberLit(self.span(t.start, t.end), t.text)
        if t.text == "(":
            return self._parse_paren_or_arrow()
        if t.text == "{":
            return self._parse_object_literal()
        if t.text == "[":
            start = t
            self._skip_balanced("[", "]")
            return ArrayLit(self.span_from(start))
        if t.text == "<":
            return self._parse_jsx(t)
        if t.kind == lexer.NAME:
            if t.text == "new":
                self.eat()
                callee = self._parse_postfix()
                if isinstance(callee, CallExpr):
                    return CallExpr(
                        Span(callee.span.file_id, self.src.c2b(t.start),
                             callee.span.end),
                        callee.callee, callee.args, is_new=True)
                return CallExpr(
                    Span(callee.span.file_id, self.src.c2b(t.start),
                         callee.span.end), callee, (), is_new=True)
            nxt = self.peek()
            if nxt is not None and nxt.text == "=>":
                # single-parameter arrow function
                self.eat()
                self.eat()
                param = Param(self.span(t.start, t.end), t.text, (), None,
                              None)
                body = self._parse_arrow_body()
                end = body.span.end if body is not None else \
                    self.src.c2b(t.end)
                return ArrowFn(Span(self.src.file_id, self.src.c2b(t.start),
                                    end), (param,), body)
            self.eat()
            return Ident(self.span(t.start, t.end), t.text)
        # unrecognized token in expression position
        self.eat()
        return UnknownExpr(self.span(t.start, t.end))

    def _parse_paren_or_arrow(self) -> Expr:
        start = self.cur()
        save = self.pos
        save_warn = len(self.warnings)
        params = self.parse_params()
        if self.at(":"):
            # arrow return type annotation
            self.eat()
            self._scan_type_tokens(stops={"=>", ";", ")", ","})
        if self.at("=>"):
            self.eat()
            body = self._parse_arrow_body()
            end = body.span.end if body is not None else \
                self.src.c2b(self.toks[self.pos - 1].end)
            return ArrowFn(Span(self.src.file_id, self.src.c2b(start.start),
                                end), params, body)
        # not an arrow: rewind and parse a parenthesized expression
        self.pos = save
        del self.warnings[save_warn:]
        self.eat()  # (
        inner = self.parse_expr()
        while not self.eof() and not self.at(")"):
            t = self.cur()
            if t.text in ("(", "[", "{"):
                self._skip_balanced(t.text, {"(": ")", "[": "]", "{": "}"}[t.text])
            else:
                self.eat()
        self.eat_if(")")
        return ParenExpr(self.span_from(start), inner)

    def _parse_arrow_body(self) -> Block | Expr | None:
        if self.at("{"):
            return self.parse_block()
        if self.eof():
            return None
        return self.parse_expr()

    def _parse_object_literal(self) -> Expr:
        start = self.cur()
        self.eat()  # {
        entries: list[ObjectEntry] = []
        while not self.eof() and not self.at("}"):
            entry = self._parse_object_entry()
            if entry is not None:
                entries.append(entry)
            self.eat_if(",")
        self.eat_if("}")
        return ObjectLit(self.span_from(start), tuple(entries))

    def _parse_object_entry(self) -> ObjectEntry | None:
        t = self.cur()
        if t is None:
            return None
        if t.text == "...":
            self.eat()
            value = self.parse_expr()
            return ObjectEntry(self.span_from(t), "spread", value=value)
        key: str | None = None
        if t.kind in (lexer.NAME, lexer.STRING, lexer.NUMBER):
            key = t.value if t.kind == lexer.STRING else t.text
            nxt = self.peek()
            if nxt is not None and nxt.text == ":":
                self.eat()
                self.eat()
                value = self.parse_expr()
                return ObjectEntry(
                    self.span_from(t), "pair", key,
                    self.span(t.start, t.end), value)
            if nxt is None or nxt.text in (",", "}"):
                self.eat()
                return ObjectEntry(self.span_from(t), "shorthand", key,
                                   self.span(t.start, t.end))
        # computed keys, methods, getters: consume to the next separator
        depth = 0
        first = self.cur()
        while not self.eof():
            tok = self.cur()
            if depth == 0 and tok.text in (",", "}"):
                break
            if tok.text in ("(", "[", "{"):
                depth += 1
            elif tok.text in (")", "]", "}"):
                depth -= 1
            self.eat()
        return ObjectEntry(self.span_from(first), "unknown")

    def _parse_jsx(self, start: Token) -> Expr:
        end_char, ok = scan_jsx(self.src.text, start.start)
        if not ok:
            self.warn(self.span(start.start, end_char),
                      "unterminated JSX element")
        # resynchronize the token stream past the scanned region
        while not self.eof() and self.toks[self.pos].start < end_char:
            self.eat()
        span = self.span(start.start, end_char)
        if not ok:
            return UnknownExpr(span)
        return JsxExpr(span)


def scan_jsx(text: str, i: int) -> tuple[int, bool]:
    """Scan a JSX element starting at text[i] == '<'.

    Returns (end index, ok). Content is opaque: embedded `{...}` regions
    are skipped with string/template awareness, nested tags are balanced
    by counting rather than by name matching."""
    n = len(text)

    def read_tag(j: int) -> tuple[str, int]:
        # returns (kind in {open, close, selfclose, bad}, end index)
        assert text[j] == "<"
        j += 1
        closing = False
        if j < n and text[j] == "/":
            closing = True
            j += 1
        while j < n:
            ch = text[j]
            if ch in "'\"":
                j = lexer.skip_string(text, j)
                continue
            if ch == "{":
                j = lexer.skip_balanced_braces(text, j)
                continue
            if ch == "/" and j + 1 < n and text[j + 1] == ">":
                return ("close" if closing else "selfclose", j + 2)
            if ch == ">":
                return ("close" if closing else "open", j + 1)
            if ch == "<":
                return ("bad", j)
            j += 1
        return ("bad", n)

    kind, i2 = read_tag(i)
    if kind == "bad":
        return i2, False
    if kind in ("selfclose", "close"):
        return i2, kind == "selfclose"
    depth = 1
    i = i2
    while i < n and depth > 0:
        ch = text[i]
        if ch == "<":
            kind, i2 = read_tag(i)
            if kind == "bad":
                return i2, False
            if kind == "open":
                depth += 1
            elif kind == "close":
                depth -= 1
            i = i2
            continue
        if ch == "{":
            i = lexer.skip_balanced_braces(text, i)
            continue
        i += 1
    return i, depth == 0


def parse_file(
    file_id: str, source: bytes | str, max_bytes: int = MAX_FILE_BYTES
) -> tuple[SourceAst, list[ParseWarning]]:
    """Parse one file into a lossless AST plus parse warnings.

    Identical input always yields a structurally identical AST. Raises
    InvalidEncoding for non-UTF-8 bytes and InputTooLarge past the size
    limit; everything else degrades to opaque nodes with warnings."""
    if isinstance(source, str):
        data = source.encode("utf-8")
    else:
        data = source
    if len(data) > max_bytes:
        raise InputTooLarge(
            f"{file_id}: {len(data)} bytes exceeds limit of {max_bytes}")
    try:
        src = SourceText(file_id, data)
    except UnicodeDecodeError as exc:
        raise InvalidEncoding(f"{file_id}: {exc}") from exc
    lexed = tokenize(src.text)
    parser = _Parser(src, lexed.tokens)
    for off, msg in lexed.warnings:
        parser.warn(src.span(off, off + 1), msg)
    items = parser.parse_items()
    comments = tuple(
        CommentTrivia(src.span(tr.start, tr.end), tr.kind)
        for tr in lexed.trivia if tr.kind != lexer.WS
    )
    ast = SourceAst(
        file_id=file_id,
        items=items,
        comments=comments,
        root_span=Span(file_id, 0, len(data)),
        source_hash=hashlib.sha256(data).hexdigest(),
    )
    # keep the source reachable for node_text without widening the dataclass API
    object.__setattr__(ast, "_src", src)
    return ast, parser.warnings


def source_of(ast: SourceAst) -> SourceText:
    src = getattr(ast, "_src", None)
    if src is None:
        raise ValueError(f"AST for {ast.file_id} lost its source text")
    return src


def node_text(ast: SourceAst, span: Span) -> str:
    """Exact source slice for a span within this file."""
    if span.file_id != ast.file_id:
        raise SpanOutOfBounds(
            f"span belongs to {span.file_id}, not {ast.file_id}")
    return source_of(ast).slice(span)


def canonical_path(expr) -> str | None:
    """Dotted member-access path like `order.status`; None when the
    expression is not a plain non-computed chain of identifiers."""
    parts: list[str] = []
    cur = expr
    while True:
        if isinstance(cur, ParenExpr):
            cur = cur.inner
            continue
        if isinstance(cur, Ident):
            parts.append(cur.name)
            break
        if isinstance(cur, MemberExpr):
            if cur.computed or cur.prop is None:
                return None
            parts.append(cur.prop)
            cur = cur.obj
            continue
        return None
    return ".".join(reversed(parts))
