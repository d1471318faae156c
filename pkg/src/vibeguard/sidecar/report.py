"""FeedbackReport: the machine-actionable JSON a coding agent consumes.

Every failure names at least one concrete code location; proposals carry
the human-readable explanation awaiting a decision.
"""

from __future__ import annotations

from typing import Optional

from vibeguard.index.model import CodebaseIndex
from vibeguard.specstore import SpecRecord, SpecStore, STATUS_SOFT
from vibeguard.syntax.parser import source_of
from vibeguard.verify import FAIL, VerificationReport

REPORT_SCHEMA_VERSION = 1

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["schema_version", "snapshot", "event", "exit_code",
                 "proposed", "failures", "regressions", "soft_warnings"],
    "properties": {
        "schema_version": {"const": REPORT_SCHEMA_VERSION},
        "snapshot": {
            "type": "object",
            "required": ["counter", "id"],
            "properties": {
                "counter": {"type": "integer", "minimum": 0},
                "id": {"type": "string"},
            },
        },
        "event": {"type": "string"},
        "exit_code": {"enum": [0, 1, 2]},
        "proposed": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "kind", "explanation", "anchor",
                         "machine_actionable"],
            "properties": {
                "id": {"type": "string"},
                "kind": {"type": "string"},
                "explanation": {"type": "string"},
                "anchor": {"$ref": "#/definitions/anchor"},
                "machine_actionable": {"type": "boolean"},
            },
        }},
        "failures": {"type": "array", "items": {
            "$ref": "#/definitions/failure"}},
        "soft_warnings": {"type": "array", "items": {
            "$ref": "#/definitions/failure"}},
        "regressions": {"type": "array", "items": {
            "type": "object",
            "required": ["record_id", "message"],
        }},
        "oracle": {"type": "string"},
    },
    "definitions": {
        "anchor": {
            "type": "object",
            "required": ["path", "decl", "line"],
            "properties": {
                "path": {"type": "string"},
                "decl": {"type": "string"},
                "line": {"type": "integer", "minimum": 1},
            },
        },
        "failure": {
            "type": "object",
            "required": ["id", "kind", "explanation", "missing_members",
                         "locations", "fix_available", "machine_actionable"],
            "properties": {
                "id": {"type": "string"},
                "kind": {"type": "string"},
                "explanation": {"type": "string"},
                "missing_members": {"type": "array",
                                    "items": {"type": "string"}},
                "locations": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "required": ["path", "line", "col", "message",
                                     "severity"],
                        "properties": {
                            "path": {"type": "string"},
                            "line": {"type": "integer", "minimum": 1},
                            "col": {"type": "integer", "minimum": 1},
                            "message": {"type": "string"},
                            "severity": {"enum": ["error", "warning"]},
                        },
                    },
                },
                "fix_available": {"type": "boolean"},
                "fix_summary": {"type": ["string", "null"]},
                "machine_actionable": {"type": "boolean"},
            },
        },
    },
}


def _line_of(index: CodebaseIndex, path: str, offset: int) -> int:
    ast = index.files.get(path)
    if ast is None:
        return 1
    src = source_of(ast)
    clamped = min(max(offset, 0), src.byte_len())
    return src.line_col(clamped)[0]


def _anchor_json(index: CodebaseIndex, record: SpecRecord) -> dict:
    return {
        "path": record.anchor.path,
        "decl": record.anchor.decl,
        "line": _line_of(index, record.anchor.path, record.anchor.start),
    }


def _locations(index: CodebaseIndex, record: SpecRecord,
               verdict) -> list[dict]:
    out = []
    for diag in verdict.diagnostics:
        if diag.span is not None:
            ast = index.files.get(diag.span.file_id)
            if ast is not None:
                line, col = source_of(ast).line_col(diag.span.start)
                out.append({"path": diag.span.file_id, "line": line,
                            "col": col, "message": diag.message,
                            "severity": diag.severity})
                continue
        out.append({"path": record.anchor.path,
                    "line": _line_of(index, record.anchor.path,
                                     record.anchor.start),
                    "col": 1, "message": diag.message,
                    "severity": diag.severity})
    if not out:
        out.append({"path": record.anchor.path,
                    "line": _line_of(index, record.anchor.path,
                                     record.anchor.start),
                    "col": 1,
                    "message": "specification not satisfied here",
                    "severity": "error"})
    return out


def build_report(
    event: str,
    counter: int,
    index: CodebaseIndex,
    store: SpecStore,
    verification: Optional[VerificationReport],
    plans: dict[str, object],
    regressions: Optional[list[dict]] = None,
) -> dict:
    """Assemble the FeedbackReport dict; exit_code 2 iff a hard (accepted)
    record fails, soft-only failures stay at 0."""
    proposed = [{
        "id": r.id,
        "kind": r.kind,
        "explanation": r.explanation,
        "anchor": _anchor_json(index, r),
        "machine_actionable": False,
    } for r in store.by_status("proposed")]

    failures: list[dict] = []
    soft_warnings: list[dict] = []
    if verification is not None:
        for verdict in verification.verdicts:
            if verdict.outcome != FAIL:
                continue
            record = store.records[verdict.record_id]
            plan = plans.get(record.id)
            item = {
                "id": record.id,
                "kind": record.kind,
                "explanation": record.explanation,
                "missing_members": list(verdict.missing_members),
                "locations": _locations(index, record, verdict),
                "fix_available": plan is not None,
                "fix_summary": getattr(plan, "summary", None),
                "machine_actionable": plan is not None,
            }
            if record.status == STATUS_SOFT:
                soft_warnings.append(item)
            else:
                failures.append(item)

    exit_code = 2 if failures else 0
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "snapshot": {"counter": counter, "id": index.snapshot_id},
        "event": event,
        "exit_code": exit_code,
        "proposed": proposed,
        "failures": failures,
        "soft_warnings": soft_warnings,
        "regressions": regressions or [],
        "oracle": verification.oracle_status if verification else "not-run",
    }
