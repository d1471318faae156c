"""Random-but-seeded corpus generators backing the property suites.

Workspaces are small TypeScript file sets in the analyzed subset; defect
generators plant exactly one known bug family so fix/verify behavior can
be asserted end to end.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

WORDS = [
    "pending", "paid", "shipped", "cancelled", "refunded", "queued",
    "active", "idle", "error", "warning", "info", "debug", "open",
    "closed", "draft", "final", "locked", "archived",
]


def ident(rng: random.Random, prefix: str = "") -> str:
    body = "".join(rng.choice(string.ascii_lowercase) for _ in range(5))
    return f"{prefix}{body}"


def members(rng: random.Random, n: int) -> list[str]:
    return rng.sample(WORDS, n)


def union_decl(name: str, values: list[str], exported: bool = True) -> str:
    head = "export type" if exported else "type"
    return f"{head} {name} = " + " | ".join(f"'{v}'" for v in values) + ";"


def switch_fn(fn: str, union: str, discriminant_param: str,
              cases: list[str], default: str, body_calls: list[str]) -> str:
    lines = [f"export function {fn}(value: {union}) {{",
             "  switch (value) {"]
    for value, callee in zip(cases, body_calls):
        lines.append(f"    case '{value}': return {callee}(value);")
    if default == "plain":
        lines.append("    default: return null;")
    elif default == "assert_never":
        lines.append("    default: return assertNever(value);")
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines)


ASSERT_NEVER_TS = (
    "export function assertNever(x: never): never {\n"
    "  throw new Error(`Unexpected case: ${JSON.stringify(x)}`);\n"
    "}\n"
)


def random_workspace(rng: random.Random,
                     max_files: int = 6) -> dict[str, str]:
    """A small multi-file workspace exercising unions, imports, switches,
    chains, call families and mappings."""
    files: dict[str, str] = {"assertNever.ts": ASSERT_NEVER_TS}
    n_unions = rng.randint(1, 3)
    unions = []
    type_lines = []
    for i in range(n_unions):
        name = f"Kind{i}{ident(rng).capitalize()}"
        vals = members(rng, rng.randint(2, 5))
        unions.append((name, vals))
        type_lines.append(union_decl(name, vals))
    files["types.ts"] = "\n\n".join(type_lines) + "\n"

    n_files = rng.randint(1, max_files)
    for i in range(n_files):
        uname, uvals = rng.choice(unions)
        parts = [f"import {{ {uname} }} from './types';",
                 "import { assertNever } from './assertNever';"]
        n_items = rng.randint(1, 3)
        for j in range(n_items):
            flavor = rng.choice(["switch", "chain", "calls", "mapping"])
            fn = f"fn{i}_{j}"
            if flavor == "switch":
                covered = [v for v in uvals if rng.random() < 0.7]
                default = rng.choice(["none", "plain", "assert_never"])
                callee = ident(rng, "do_")
                parts.append(switch_fn(fn, uname, "value", covered,
                                       default, [callee] * len(covered)))
            elif flavor == "chain":
                vals = members(rng, rng.randint(2, 4))
                lines = [f"export function {fn}(tag: string) {{"]
                for k, v in enumerate(vals):
                    kw = "if" if k == 0 else "else if"
                    lines.append(f"  {kw} (tag === '{v}') {{ return {k}; }}")
                lines.append("  return -1;")
                lines.append("}")
                parts.append("\n".join(lines))
            elif flavor == "calls":
                callee = f"emit{i}_{j}"
                parts.append(f"export function {callee}(level: string, "
                             f"n: number) {{ return n; }}")
                vals = members(rng, rng.randint(3, 5))
                calls = [f"{callee}('{v}', {k});"
                         for k, v in enumerate(vals)]
                parts.append(f"export function {fn}_driver() {{\n  "
                             + "\n  ".join(calls) + "\n}")
            else:
                keys = uvals[:rng.randint(2, len(uvals))]
                entries = ", ".join(f"{k}: {n}"
                                    for n, k in enumerate(keys))
                guard = rng.random() < 0.5
                suffix = f" satisfies Record<{uname}, number>" if guard \
                    else ""
                parts.append(f"export const map{i}_{j} = "
                             f"{{ {entries} }}{suffix};")
        files[f"mod{i}.ts"] = "\n\n".join(parts) + "\n"
    return files


def random_edit(rng: random.Random, files: dict[str, str]
                ) -> tuple[str, str | None]:
    """(path, new text or None for deletion); may also add a new file."""
    choice = rng.random()
    paths = sorted(p for p in files if p != "assertNever.ts")
    if choice < 0.15 and len(paths) > 1:
        return rng.choice(paths), None
    if choice < 0.3:
        fresh = random_workspace(rng, max_files=1)
        path = f"extra_{ident(rng)}.ts"
        return path, fresh[sorted(fresh)[-1]]
    path = rng.choice(paths)
    replacement = random_workspace(rng, max_files=1)
    key = rng.choice(sorted(replacement))
    return path, replacement[key]


# -- defect generators -----------------------------------------------------


@dataclass
class Defect:
    kind: str
    files: dict[str, str]


def defective_switch(rng: random.Random) -> Defect:
    union = "Status"
    vals = members(rng, rng.randint(2, 5))
    covered = vals[:rng.randint(1, len(vals) - 1)] if len(vals) > 1 else []
    shared_pattern = rng.random() < 0.5
    callees = ["render"] * len(covered) if shared_pattern else \
        [f"act{i}" for i in range(len(covered))]
    decls = [f"function {c}(v: string) {{ return v; }}"
             for c in sorted(set(callees))]
    body = switch_fn("handle", union, "value", covered, "none", callees)
    text = "\n\n".join([union_decl(union, vals, exported=False),
                        *decls, body]) + "\n"
    return Defect("exhaustive_switch", {"main.ts": text})


def defective_chain(rng: random.Random) -> Defect:
    vals = members(rng, rng.randint(2, 4))
    iface = "Payload"
    lines = [
        f"interface {iface} {{ tag: string; data?: any; }}",
        "",
        f"function route(input: {iface}) {{",
    ]
    for k, v in enumerate(vals):
        kw = "if" if k == 0 else "else if"
        lines.append(f"  {kw} (input.tag === '{v}') {{ return {k}; }}")
    lines.append("  return -1;")
    lines.append("}")
    return Defect("discriminated_union",
                  {"router.ts": "\n".join(lines) + "\n"})


def defective_family(rng: random.Random) -> Defect:
    vals = members(rng, rng.randint(3, 5))
    callee = "notify"
    lines = [f"export function {callee}(level: string, msg: string) "
             f"{{ return msg; }}", "", "export function run() {"]
    for k, v in enumerate(vals):
        lines.append(f"  {callee}('{v}', 'm{k}');")
    lines.append("}")
    return Defect("union_alias", {"notify.ts": "\n".join(lines) + "\n"})


def defective_mapping(rng: random.Random) -> Defect:
    union = "Method"
    vals = members(rng, rng.randint(2, 4))
    entries = ", ".join(f"{v}: {k}" for k, v in enumerate(vals))
    annotated = rng.random() < 0.5
    ann = f": Record<{union}, number>" if annotated else ""
    text = "\n\n".join([
        union_decl(union, vals, exported=False),
        f"const handlers{ann} = {{ {entries} }};",
    ]) + "\n"
    return Defect("satisfies_guard", {"handlers.ts": text})


DEFECT_GENERATORS = [defective_switch, defective_chain, defective_family,
                     defective_mapping]


def random_defect(rng: random.Random) -> Defect:
    return rng.choice(DEFECT_GENERATORS)(rng)
