"""Parser tests: losslessness, span nesting, determinism, robustness,
and the construct-coverage contract of the analyzed subset."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibeguard.errors import InputTooLarge, InvalidEncoding, SpanOutOfBounds
from vibeguard.syntax import lexer
from vibeguard.syntax.nodes import (
    FunctionDecl, ImportDecl, InterfaceDecl, SwitchStmt, TypeAliasDecl,
    UnknownItem, VarStmt,
)
from vibeguard.syntax.parser import node_text, parse_file, source_of
from vibeguard.syntax.spans import Span

from conftest import read_corpus


def parse_one(text: str, file_id: str = "t.ts"):
    return parse_file(file_id, text.encode("utf-8"))


# -- parse_file basics -------------------------------------------------------


def test_listing1_processor_shape(listing1):
    ast, warnings = parse_file("orderProcessor.ts",
                               listing1["orderProcessor.ts"])
    assert warnings == []
    kinds = [type(i).__name__ for i in ast.items]
    assert kinds == ["ImportDecl", "ImportDecl", "FunctionDecl"]
    fn = ast.items[2]
    switch = fn.body.stmts[1]
    assert isinstance(switch, SwitchStmt)
    assert len(switch.cases) == 3
    assert switch.default is None


def test_listing1_types_union(listing1):
    ast, _ = parse_file("types.ts", listing1["types.ts"])
    alias = ast.items[0]
    assert isinstance(alias, TypeAliasDecl)
    assert alias.name == "OrderStatus"
    assert [m.value for m in alias.members] == [
        "pending", "paid", "shipped", "cancelled"]
    assert node_text(ast, alias.span) == (
        "export type OrderStatus = 'pending' | 'paid' | 'shipped' | "
        "'cancelled'")


def test_empty_input():
    ast, warnings = parse_one("")
    assert ast.items == ()
    assert warnings == []


def test_class_becomes_opaque_item_with_warning():
    src = "class Widget {\n  render() { return 1; }\n}\n"
    ast, warnings = parse_one(src)
    assert len(ast.items) == 1
    item = ast.items[0]
    assert isinstance(item, UnknownItem)
    assert node_text(ast, item.span).startswith("class Widget")
    assert any("unsupported construct" in w.message for w in warnings)


# construct-coverage oracle: a hand-listed table of the subset, one
# construct per entry, diffed against what the parser reports
SUBSET_TABLE = [
    ("import { A } from './x';", ImportDecl),
    ("type T = 'a' | 'b';", TypeAliasDecl),
    ("interface P { a: string; b?: number; }", InterfaceDecl),
    ("function f(x: T) { return x; }", FunctionDecl),
    ("const g = (x: string) => { return x; };", VarStmt),  # arrow const
    ("export const n = 1;", VarStmt),
]

OUTSIDE_SUBSET = [
    "class C { }",
    "enum E { A, B }",
    "namespace N { }",
    "declare module 'x' { }",
]


@pytest.mark.parametrize("src", OUTSIDE_SUBSET)
def test_constructs_outside_subset_degrade(src):
    ast, warnings = parse_one(src)
    assert all(isinstance(i, UnknownItem) for i in ast.items)
    assert warnings, f"expected a warning for {src!r}"
    covered = sorted((i.span.start, i.span.end) for i in ast.items)
    assert covered[0][0] == 0
    assert covered[-1][1] <= len(src.encode())


def test_subset_constructs_parse_structurally():
    src = "\n".join(s for s, _ in SUBSET_TABLE)
    ast, warnings = parse_one(src)
    assert warnings == []
    assert [type(i) for i in ast.items] == [cls for _, cls in SUBSET_TABLE]


def test_invalid_encoding_raises():
    with pytest.raises(InvalidEncoding):
        parse_file("bad.ts", b"\xff\xfeinvalid")


def test_input_too_large_raises():
    with pytest.raises(InputTooLarge):
        parse_file("big.ts", b"x" * 32, max_bytes=16)


# -- node_text ---------------------------------------------------------------


def test_node_text_identity_full_file(listing2):
    data = listing2["todoReducer.ts"]
    ast, _ = parse_file("todoReducer.ts", data)
    assert node_text(ast, ast.root_span).encode() == data


def test_node_text_out_of_bounds(listing2):
    ast, _ = parse_file("todoReducer.ts", listing2["todoReducer.ts"])
    with pytest.raises(SpanOutOfBounds):
        node_text(ast, Span("todoReducer.ts", 0,
                            len(listing2["todoReducer.ts"]) + 7))


# -- invariants ---------------------------------------------------------------


def _token_tiling_ok(text: str) -> bool:
    lexed = lexer.tokenize(text)
    pieces = sorted(
        [(t.start, t.end) for t in lexed.tokens]
        + [(t.start, t.end) for t in lexed.trivia])
    pos = 0
    for start, end in pieces:
        if start != pos or end < start:
            return False
        pos = end
    return pos == len(text)


def _iter_spans(node, out):
    if dataclasses.is_dataclass(node) and not isinstance(node, type):
        span = getattr(node, "span", None)
        children = []
        for f in dataclasses.fields(node):
            children.append(getattr(node, f.name))
        for child in children:
            if isinstance(child, (list, tuple)):
                for c in child:
                    _iter_spans(c, out)
            else:
                _iter_spans(child, out)
        if span is not None and isinstance(span, Span):
            for f in dataclasses.fields(node):
                val = getattr(node, f.name)
                vals = val if isinstance(val, (list, tuple)) else [val]
                for v in vals:
                    child_span = getattr(v, "span", None)
                    if isinstance(child_span, Span):
                        out.append((span, child_span))


@pytest.mark.parametrize("corpus", ["listing1", "listing2"])
def test_losslessness_and_span_nesting(corpus):
    for name, data in read_corpus(corpus).items():
        text = data.decode("utf-8")
        assert _token_tiling_ok(text), f"lex tiling broken for {name}"
        ast, _ = parse_file(name, data)
        pairs: list[tuple[Span, Span]] = []
        for item in ast.items:
            _iter_spans(item, pairs)
        for parent, child in pairs:
            assert parent.start <= child.start <= child.end <= parent.end, \
                f"{name}: child {child} escapes parent {parent}"


def test_determinism(listing1):
    for name, data in listing1.items():
        a1, w1 = parse_file(name, data)
        a2, w2 = parse_file(name, data)
        assert a1 == a2
        assert w1 == w2


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200))
def test_parser_never_aborts_on_utf8(text):
    ast, _ = parse_file("fuzz.ts", text.encode("utf-8"))
    assert node_text(ast, ast.root_span) == text
    assert _token_tiling_ok(text)


@settings(max_examples=150, deadline=None)
@given(st.text(
    alphabet=st.sampled_from(list("{}()<>'\"`;|=.& \nabctype")),
    max_size=120))
def test_parser_never_aborts_on_syntaxish_soup(text):
    parse_file("soup.ts", text.encode("utf-8"))


def test_stray_semicolon_before_else_is_tolerated():
    src = ("function f(t: string) {\n"
           "  if (t === 'a') { return 1; };\n"
           "  else if (t === 'b') { return 2; }\n"
           "  return 0;\n"
           "}\n")
    ast, warnings = parse_one(src)
    assert warnings == []
    fn = ast.items[0]
    assert isinstance(fn, FunctionDecl)


def test_jsx_is_an_opaque_leaf(listing1):
    ast, warnings = parse_file("orderUI.tsx", listing1["orderUI.tsx"])
    assert warnings == []
    badge = ast.items[1]
    switch = badge.body.stmts[0]
    first_case_return = switch.cases[0].body[0]
    text = node_text(ast, first_case_return.value.span)
    assert text == '<Badge color="Y">Pending</Badge>'


def test_source_hash_tracks_content(listing1):
    ast, _ = parse_file("types.ts", listing1["types.ts"])
    ast2, _ = parse_file("types.ts", listing1["types.ts"] + b"\n")
    assert ast.source_hash != ast2.source_hash
    assert source_of(ast).data == listing1["types.ts"]


def test_line_col_tabs_count_one_column():
    ast, _ = parse_one("\tconst x = 1;\n\t\tconst y = 2;\n")
    src = source_of(ast)
    x_off = src.text.index("const x")
    y_off = src.text.index("const y")
    assert src.line_col(src.c2b(x_off)) == (1, 2)
    assert src.line_col(src.c2b(y_off)) == (2, 3)


def test_line_col_multibyte_columns_count_characters():
    text = "// héllo\nconst x = 1;\n"
    ast, _ = parse_one(text)
    src = source_of(ast)
    off = src.c2b(text.index("x"))
    assert src.line_col(off) == (2, 7)
    assert src.offset_of(2, 7) == off
