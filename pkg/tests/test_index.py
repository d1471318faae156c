"""Index tests: extraction on the paper corpora, resolution semantics,
and incremental-vs-full-rebuild equivalence."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vibeguard.index import (
    IndexConfig, build_index, resolve_union, update_index,
)
from vibeguard.index.model import (
    DEFAULT_ASSERT_NEVER, DEFAULT_NONE, DEFAULT_PLAIN,
)

from genutil import random_edit, random_workspace


def test_listing1_index(listing1):
    idx = build_index(listing1)
    assert set(idx.unions) == {("types.ts", "OrderStatus")}
    union = idx.unions[("types.ts", "OrderStatus")]
    assert union.members == ("pending", "paid", "shipped", "cancelled")

    processor = idx.switch_sites["orderProcessor.ts"]
    assert len(processor) == 1
    assert processor[0].discriminant == "order.status"
    assert processor[0].cases == ("pending", "paid", "shipped")
    assert processor[0].default_kind == DEFAULT_NONE
    assert processor[0].resolved_union == union

    badge = idx.switch_sites["orderUI.tsx"]
    assert len(badge) == 1
    assert badge[0].cases == ("pending", "paid", "cancelled")
    assert badge[0].default_kind == DEFAULT_NONE
    assert badge[0].resolved_union == union


def test_listing2_chain(listing2):
    idx = build_index(listing2)
    chains = idx.comparison_chains["todoReducer.ts"]
    assert len(chains) == 1
    chain = chains[0]
    assert chain.subject == "action.type"
    assert chain.observed_values == ("ADD_TODO", "REMOVE_TODO",
                                     "TOGGLE_TODO")
    assert chain.has_terminal_else_or_fallthrough
    assert chain.subject_type_kind == "string"


def test_empty_file_set():
    idx = build_index({})
    assert idx.files == {}
    assert idx.unions == {}
    assert idx.literal_families == ()


def test_resolution_follows_relative_imports(listing1):
    idx = build_index(listing1)
    u = resolve_union(idx, "OrderStatus", "orderUI.tsx")
    assert u is not None and u.defining_file == "types.ts"
    assert resolve_union(idx, "NoSuchUnion", "orderUI.tsx") is None


def test_local_declaration_shadows_import():
    files = {
        "shared.ts": "export type Status = 'a' | 'b';\n",
        "one.ts": ("import { Status } from './shared';\n"
                   "type Status = 'x' | 'y';\n"
                   "export function f(s: Status) { switch (s) { "
                   "case 'x': return 1; } }\n"),
        "two.ts": ("import { Status } from './shared';\n"
                   "export function g(s: Status) { switch (s) { "
                   "case 'a': return 1; } }\n"),
    }
    idx = build_index(files)
    assert resolve_union(idx, "Status", "one.ts").members == ("x", "y")
    assert resolve_union(idx, "Status", "two.ts").members == ("a", "b")
    assert idx.switch_sites["one.ts"][0].resolved_union.members == ("x", "y")
    assert idx.switch_sites["two.ts"][0].resolved_union.members == ("a", "b")


def test_unexported_union_does_not_resolve_across_files():
    files = {
        "a.ts": "type Hidden = 'x' | 'y';\n",
        "b.ts": ("import { Hidden } from './a';\n"
                 "export function f(h: Hidden) { return h; }\n"),
    }
    idx = build_index(files)
    assert resolve_union(idx, "Hidden", "b.ts") is None
    assert resolve_union(idx, "Hidden", "a.ts") is not None


def test_default_kind_classification():
    template = ("type S = 'a' | 'b';\n"
                "import {{ assertNever }} from './assertNever';\n"
                "function f(s: S) {{\n"
                "  switch (s) {{\n"
                "    case 'a': return 1;\n"
                "    {default_clause}\n"
                "  }}\n"
                "}}\n")
    cases = {
        "": DEFAULT_NONE,
        "default: return 0;": DEFAULT_PLAIN,
        "default: return assertNever(s);": DEFAULT_ASSERT_NEVER,
        "default: assertNever(s);": DEFAULT_ASSERT_NEVER,
        "default: throw assertNever(s);": DEFAULT_ASSERT_NEVER,
        # applied to something other than the discriminant: not a guard
        "default: return assertNever(other);": DEFAULT_PLAIN,
        # more than one statement: not the guard idiom
        "default: log(s); return assertNever(s);": DEFAULT_PLAIN,
    }
    for clause, expected in cases.items():
        files = {"m.ts": template.format(default_clause=clause),
                 "assertNever.ts": "export function assertNever(x: never):"
                                   " never { throw new Error('x'); }\n"}
        idx = build_index(files)
        site = idx.switch_sites["m.ts"][0]
        assert site.default_kind == expected, clause


def test_switch_with_non_literal_labels_is_not_indexed():
    files = {"m.ts": ("type S = 'a' | 'b';\n"
                      "function f(s: S, k: string) {\n"
                      "  switch (s) { case k: return 1; case 'a': return 2; }"
                      "\n}\n")}
    idx = build_index(files)
    assert idx.switch_sites["m.ts"] == ()


def test_literal_family_thresholds():
    base = ("export function send(level: string) { return level; }\n"
            "export function go() {\n"
            "  send('info');\n  send('warning');\n  send('error');\n}\n")
    idx = build_index({"m.ts": base})
    assert len(idx.literal_families) == 1
    family = idx.literal_families[0]
    assert family.literals == ("info", "warning", "error")
    assert family.anchor.kind == "call"
    assert family.anchor.param_name == "level"

    # below family_min_size: no family
    idx2 = build_index({"m.ts": base},
                       IndexConfig(family_min_size=4))
    assert idx2.literal_families == ()


def test_annotated_call_sites_form_no_family():
    files = {"m.ts": (
        "export type Level = 'info' | 'warning' | 'error';\n"
        "export function send(level: Level) { return level; }\n"
        "export function go() {\n"
        "  send('info');\n  send('warning');\n  send('error');\n}\n")}
    idx = build_index(files)
    assert idx.literal_families == ()


def test_mapping_literal_routes():
    annotated = ("type Method = 'get' | 'post';\n"
                 "const handlers: Record<Method, number> = "
                 "{ get: 1, post: 2 };\n")
    idx = build_index({"m.ts": annotated})
    m = idx.mapping_literals["m.ts"][0]
    assert m.intended_key_union.name == "Method"
    assert not m.has_satisfies_guard
    assert m.value_type_text == "number"

    guarded = ("type Method = 'get' | 'post';\n"
               "const handlers = { get: 1, post: 2 } "
               "satisfies Record<Method, number>;\n")
    idx = build_index({"m.ts": guarded})
    m = idx.mapping_literals["m.ts"][0]
    assert m.has_satisfies_guard

    # keys spanning two unions: ambiguous intent, not indexed
    ambiguous = ("type A = 'x' | 'y';\ntype B = 'x' | 'y' | 'z';\n"
                 "const m = { x: 1, y: 2 };\n")
    idx = build_index({"m.ts": ambiguous})
    assert idx.mapping_literals["m.ts"] == ()


def test_failed_file_is_marked_and_index_partial(listing1):
    files = dict(listing1)
    files["broken.ts"] = b"\xff\xfe"
    idx = build_index(files)
    assert "broken.ts" in idx.failed_files
    assert ("types.ts", "OrderStatus") in idx.unions


# -- incremental maintenance -------------------------------------------------


def test_update_delete_file(listing1):
    idx = build_index(listing1)
    after = update_index(idx, {"orderUI.tsx": None})
    rebuilt = build_index(
        {k: v for k, v in listing1.items() if k != "orderUI.tsx"})
    assert after == rebuilt
    assert "orderUI.tsx" not in after.switch_sites
    assert ("types.ts", "OrderStatus") in after.unions


def test_update_noop_is_identity(listing1):
    idx = build_index(listing1)
    assert update_index(idx, {"types.ts": listing1["types.ts"]}) == idx


def test_update_member_added_affects_both_switches(listing1):
    idx = build_index(listing1)
    new_types = listing1["types.ts"].replace(
        b"| 'cancelled'", b"| 'cancelled' | 'refunded'")
    after = update_index(idx, {"types.ts": new_types})
    assert after == build_index({**listing1, "types.ts": new_types})
    for file in ("orderProcessor.ts", "orderUI.tsx"):
        site = after.switch_sites[file][0]
        missing = set(site.resolved_union.members) - set(site.cases)
        assert "refunded" in missing


def test_purity_independent_of_file_ordering(listing1):
    reordered = dict(reversed(list(listing1.items())))
    assert build_index(listing1) == build_index(reordered)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_incremental_equals_rebuild_property(seed):
    rng = random.Random(seed)
    files = random_workspace(rng)
    idx = build_index(dict(files))
    for _ in range(rng.randint(1, 8)):
        path, text = random_edit(rng, files)
        if text is None:
            files.pop(path, None)
        else:
            files[path] = text
        idx = update_index(idx, {path: text})
    assert idx == build_index(dict(files))
