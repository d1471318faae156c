"""Compiler oracles: the external command contract plus a hermetic
in-process checker implementing exhaustiveness narrowing for the
analyzed subset.

Command contract: the oracle is invoked with the workspace directory as
working directory and must print one diagnostic per line in the form
`path(line,col): message`, exiting 0 when clean. Invocation must be
side-effect-free on the workspace.
"""

from __future__ import annotations

import re
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol

from vibeguard.errors import OracleTimeout, OracleUnavailable
from vibeguard.index.model import CodebaseIndex, DEFAULT_ASSERT_NEVER
from vibeguard.index.build import Resolver, build_index
from vibeguard.syntax.nodes import (
    CallExpr, ExprStmt, Ident, ReturnStmt, ThrowStmt,
)
from vibeguard.syntax.parser import source_of

DEFAULT_TIMEOUT_S = 60.0

_DIAG_RE = re.compile(r"^(.+?)\((\d+),(\d+)\):\s*(.*)$")

SOURCE_EXTENSIONS = (".ts", ".tsx")
_SKIP_DIRS = {".vibeguard", "node_modules", ".git", "dist", "build"}


@dataclass(frozen=True)
class OracleDiagnostic:
    path: str
    line: int
    col: int
    message: str

    def render(self) -> str:
        return f"{self.path}({self.line},{self.col}): {self.message}"


@dataclass(frozen=True)
class OracleResult:
    exit_code: int
    diagnostics: tuple[OracleDiagnostic, ...]
    raw_output: str = ""


class CompilerOracle(Protocol):
    def run(self, workspace_dir: str) -> OracleResult: ...


def discover_sources(workspace_dir: str) -> dict[str, bytes]:
    """Workspace-relative map of analyzable sources, skipping tool dirs."""
    root = Path(workspace_dir)
    out: dict[str, bytes] = {}
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix not in SOURCE_EXTENSIONS:
            continue
        rel = path.relative_to(root)
        if any(part in _SKIP_DIRS for part in rel.parts):
            continue
        out[rel.as_posix()] = path.read_bytes()
    return out


class MiniCompilerOracle:
    """Hermetic stand-in for `tsc --noEmit` on the analyzed subset.

    Checks the narrowing-sensitive properties the templates rely on:
    values reaching assertNever, case labels outside the switched union,
    key totality of Record-guarded object literals, and assertNever
    being in scope where it is called."""

    def run(self, workspace_dir: str) -> OracleResult:
        index = build_index(discover_sources(workspace_dir))
        diags = self.check_index(index)
        return OracleResult(1 if diags else 0, tuple(diags),
                            "\n".join(d.render() for d in diags))

    def check_index(self, index: CodebaseIndex
                    ) -> list[OracleDiagnostic]:
        resolver = Resolver(index.file_facts)
        diags: list[OracleDiagnostic] = []
        for site in index.all_switch_sites():
            diags.extend(self._check_switch(index, resolver, site))
        for mapping in index.all_mappings():
            diags.extend(self._check_mapping(index, mapping))
        diags.extend(self._check_assert_never_bindings(index, resolver))
        diags.sort(key=lambda d: (d.path, d.line, d.col, d.message))
        return diags

    def _pos(self, index: CodebaseIndex, file: str, offset: int
             ) -> tuple[int, int]:
        src = source_of(index.files[file])
        return src.line_col(offset)

    def _check_switch(self, index, resolver, site) -> list[OracleDiagnostic]:
        out: list[OracleDiagnostic] = []
        union = site.resolved_union
        if union is None:
            return out
        members = set(union.members)
        union_text = " | ".join(f"'{m}'" for m in union.members)
        for info in site.case_infos:
            if info.value not in members:
                line, col = self._pos(index, site.file, info.test_span.start)
                out.append(OracleDiagnostic(
                    site.file, line, col,
                    f"Type '\"{info.value}\"' is not comparable to type "
                    f"'{union_text}'."))
        if site.default_kind == DEFAULT_ASSERT_NEVER:
            uncovered = [m for m in union.members if m not in site.cases]
            if uncovered:
                span = self._assert_never_arg_span(site) or site.span
                line, col = self._pos(index, site.file, span.start)
                narrowed = " | ".join(f'"{m}"' for m in uncovered)
                out.append(OracleDiagnostic(
                    site.file, line, col,
                    f"Argument of type '{narrowed}' is not assignable to "
                    f"parameter of type 'never'."))
        return out

    def _assert_never_arg_span(self, site):
        default = site.node.default
        if default is None or len(default.body) != 1:
            return None
        stmt = default.body[0]
        call = None
        if isinstance(stmt, (ReturnStmt, ThrowStmt)):
            call = stmt.value
        elif isinstance(stmt, ExprStmt):
            call = stmt.expr
        if isinstance(call, CallExpr) and call.args:
            return call.args[0].span
        return None

    def _check_mapping(self, index, mapping) -> list[OracleDiagnostic]:
        out: list[OracleDiagnostic] = []
        union = mapping.intended_key_union
        if union is None:
            return out
        if not (mapping.has_satisfies_guard or mapping.has_record_annotation):
            return out  # no declared key relation: nothing to check
        record_text = f"Record<{union.name}, " \
                      f"{mapping.value_type_text or 'unknown'}>"
        missing = [m for m in union.members if m not in mapping.keys]
        if missing:
            line, col = self._pos(index, mapping.file, mapping.span.start)
            listed = ", ".join(f"'{m}'" for m in missing)
            plural = "Properties" if len(missing) > 1 else "Property"
            out.append(OracleDiagnostic(
                mapping.file, line, col,
                f"{plural} {listed} missing in object literal but required "
                f"in type '{record_text}'."))
        members = set(union.members)
        for key, span in zip(mapping.keys, mapping.key_spans):
            if key not in members:
                line, col = self._pos(index, mapping.file, span.start)
                out.append(OracleDiagnostic(
                    mapping.file, line, col,
                    f"Object literal may only specify known properties, and "
                    f"'{key}' does not exist in type '{record_text}'."))
        return out

    def _check_assert_never_bindings(self, index, resolver
                                     ) -> list[OracleDiagnostic]:
        out: list[OracleDiagnostic] = []
        for site in index.all_switch_sites():
            if site.default_kind != DEFAULT_ASSERT_NEVER:
                continue
            if resolver.function("assertNever", site.file) is not None:
                continue
            span = self._assert_never_arg_span(site) or site.span
            line, col = self._pos(index, site.file, span.start)
            out.append(OracleDiagnostic(
                site.file, line, col, "Cannot find name 'assertNever'."))
        return out


class CommandOracle:
    """Runs a configured compiler command and parses its diagnostics."""

    def __init__(self, cmd: list[str],
                 timeout_s: float = DEFAULT_TIMEOUT_S) -> None:
        self.cmd = cmd
        self.timeout_s = timeout_s

    def run(self, workspace_dir: str) -> OracleResult:
        try:
            proc = subprocess.run(
                self.cmd, cwd=workspace_dir, capture_output=True, text=True,
                timeout=self.timeout_s)
        except FileNotFoundError as exc:
            raise OracleUnavailable(
                f"oracle command not found: {self.cmd[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise OracleTimeout(
                f"oracle exceeded {self.timeout_s}s") from exc
        output = (proc.stdout or "") + (proc.stderr or "")
        diags = tuple(parse_diagnostics(output))
        return OracleResult(proc.returncode, diags, output)


def parse_diagnostics(output: str) -> list[OracleDiagnostic]:
    out = []
    for raw_line in output.splitlines():
        m = _DIAG_RE.match(raw_line.strip())
        if m is not None:
            out.append(OracleDiagnostic(
                m.group(1), int(m.group(2)), int(m.group(3)), m.group(4)))
    return out


def main(argv: Optional[list[str]] = None) -> int:
    args = argv if argv is not None else sys.argv[1:]
    workspace = args[0] if args else "."
    result = MiniCompilerOracle().run(workspace)
    for diag in result.diagnostics:
        print(diag.render())
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
