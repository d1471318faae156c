"""Persistent store for specification records.

Records carry a content-hash identity (kind + anchor + semantic payload,
explanations excluded), a human approval lifecycle, and durable anchors
that re-resolve by declaration name first, span second. The store file
is `.vibeguard/specs.json`, written atomically.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Optional

from vibeguard.errors import (
    IllegalTransition, SchemaVersionMismatch, StorageFailure,
    StoreIntegrityError, UnknownId,
)

SCHEMA_VERSION = 1

KIND_EXHAUSTIVE_SWITCH = "exhaustive_switch"
KIND_DISCRIMINATED_UNION = "discriminated_union"
KIND_UNION_ALIAS = "union_alias"
KIND_SATISFIES_GUARD = "satisfies_guard"

STATUS_PROPOSED = "proposed"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"
STATUS_SOFT = "soft"
STATUS_RETIRED = "retired"

_ALLOWED_TRANSITIONS = {
    (STATUS_PROPOSED, STATUS_ACCEPTED),
    (STATUS_PROPOSED, STATUS_REJECTED),
    (STATUS_PROPOSED, STATUS_SOFT),
    (STATUS_ACCEPTED, STATUS_SOFT),
    (STATUS_SOFT, STATUS_ACCEPTED),
}

CONFLICT_DUPLICATE = "duplicate"
CONFLICT_CONTRADICTORY = "contradictory-members"
CONFLICT_NAME_COLLISION = "name-collision"

# anchors unresolved for this many consecutive snapshots are retired
DEFAULT_RETIRE_AFTER_MISSES = 5


@dataclass(frozen=True)
class Anchor:
    """Durable location: file path + enclosing declaration name + span."""
    path: str
    decl: str
    start: int
    end: int

    def to_json(self) -> dict:
        return {"path": self.path, "decl": self.decl,
                "start": self.start, "end": self.end}

    @staticmethod
    def from_json(data: dict) -> "Anchor":
        return Anchor(data["path"], data["decl"], data["start"], data["end"])


@dataclass(frozen=True)
class SpecRecord:
    id: str
    kind: str
    status: str
    anchor: Anchor
    predicate: dict
    explanation: str
    created_at: str
    decided_at: Optional[str]
    provenance: dict
    actor: str = ""

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "status": self.status,
            "anchor": self.anchor.to_json(),
            "predicate": self.predicate,
            "explanation": self.explanation,
            "created_at": self.created_at,
            "decided_at": self.decided_at,
            "provenance": self.provenance,
            "actor": self.actor,
        }

    @staticmethod
    def from_json(data: dict) -> "SpecRecord":
        return SpecRecord(
            id=data["id"],
            kind=data["kind"],
            status=data["status"],
            anchor=Anchor.from_json(data["anchor"]),
            predicate=data["predicate"],
            explanation=data["explanation"],
            created_at=data["created_at"],
            decided_at=data.get("decided_at"),
            provenance=data.get("provenance", {}),
            actor=data.get("actor", ""),
        )


def _canonical(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"))


# predicate keys that identify a record; names and explanations are
# excluded so rewording or renaming never duplicates a record
_IDENTITY_KEYS = {
    KIND_EXHAUSTIVE_SWITCH: ("union_name", "union_file", "required",
                             "discriminant", "ordinal"),
    KIND_DISCRIMINATED_UNION: ("subject", "members", "target_file"),
    KIND_UNION_ALIAS: ("anchor_kind", "anchor_name", "arg_index", "members",
                       "target_file"),
    KIND_SATISFIES_GUARD: ("key_union_name", "key_union_file", "const_name"),
}


def record_id(kind: str, anchor: Anchor, predicate: dict) -> str:
    keys = _IDENTITY_KEYS[kind]
    essence = {k: predicate.get(k) for k in keys}
    payload = _canonical({
        "kind": kind,
        "path": anchor.path,
        "decl": anchor.decl,
        "predicate": essence,
    })
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds") \
        .replace("+00:00", "Z")


@dataclass(frozen=True)
class ConflictReport:
    record_ids: tuple[str, str]
    overlap: str  # shared anchor or shared proposed name
    nature: str   # duplicate | contradictory-members | name-collision


@dataclass(frozen=True)
class SpecStore:
    records: dict[str, SpecRecord] = field(default_factory=dict)
    # consecutive snapshots each record's anchor failed to resolve
    anchor_misses: dict[str, int] = field(default_factory=dict)
    retire_after_misses: int = DEFAULT_RETIRE_AFTER_MISSES

    def get(self, record_id_: str) -> SpecRecord:
        rec = self.records.get(record_id_)
        if rec is None:
            raise UnknownId(record_id_)
        return rec

    def by_status(self, *statuses: str) -> list[SpecRecord]:
        out = [r for r in self.records.values() if r.status in statuses]
        out.sort(key=lambda r: (r.anchor.path, r.anchor.start, r.id))
        return out

    def active(self) -> list[SpecRecord]:
        """Records enforced by verification: accepted or soft."""
        return self.by_status(STATUS_ACCEPTED, STATUS_SOFT)


def upsert(store: SpecStore, records: Iterable[SpecRecord]) -> SpecStore:
    """Insert unknown ids as proposed; existing ids are left untouched,
    which also keeps rejected records suppressed."""
    new = dict(store.records)
    for rec in records:
        if rec.id in new:
            continue
        new[rec.id] = replace(rec, status=STATUS_PROPOSED)
    return replace(store, records=new)


def set_status(store: SpecStore, record_id_: str, new_status: str,
               actor: str) -> SpecStore:
    rec = store.get(record_id_)
    if new_status != STATUS_RETIRED and \
            (rec.status, new_status) not in _ALLOWED_TRANSITIONS:
        raise IllegalTransition(
            f"{rec.status} -> {new_status} is not allowed for {record_id_}")
    updated = replace(rec, status=new_status, decided_at=now_rfc3339(),
                      actor=actor)
    new = dict(store.records)
    new[record_id_] = updated
    return replace(store, records=new)


def note_anchor_resolution(store: SpecStore,
                           resolved: dict[str, bool]) -> SpecStore:
    """Track anchors that stopped resolving; records whose anchor has been
    missing for `retire_after_misses` consecutive snapshots are retired."""
    misses = dict(store.anchor_misses)
    records = dict(store.records)
    for rid, ok in resolved.items():
        if rid not in records:
            continue
        if ok:
            misses.pop(rid, None)
            continue
        misses[rid] = misses.get(rid, 0) + 1
        rec = records[rid]
        if misses[rid] >= store.retire_after_misses and \
                rec.status != STATUS_RETIRED:
            records[rid] = replace(rec, status=STATUS_RETIRED,
                                   decided_at=now_rfc3339(), actor="auto")
    return replace(store, records=records, anchor_misses=misses)


def _identity_essence(rec: SpecRecord) -> str:
    keys = _IDENTITY_KEYS[rec.kind]
    return _canonical({k: rec.predicate.get(k) for k in keys})


def detect_conflicts(store: SpecStore) -> list[ConflictReport]:
    """Pairwise conflicts among non-rejected records: duplicates, member-set
    contradictions over one target, and colliding proposed union names."""
    recs = [r for r in store.records.values()
            if r.status != STATUS_REJECTED]
    recs.sort(key=lambda r: (r.anchor.path, r.anchor.start, r.id))
    reports: list[ConflictReport] = []
    for i in range(len(recs)):
        for j in range(i + 1, len(recs)):
            a, b = recs[i], recs[j]
            report = _classify_pair(a, b)
            if report is not None:
                reports.append(report)
    return reports


def _members_of(rec: SpecRecord) -> Optional[tuple]:
    m = rec.predicate.get("members")
    return tuple(m) if m is not None else None


def _target_key(rec: SpecRecord) -> Optional[str]:
    """What the record constrains, beyond its own anchor."""
    if rec.kind == KIND_DISCRIMINATED_UNION:
        return f"subject:{rec.predicate.get('target_file')}:" \
               f"{rec.predicate.get('subject')}"
    if rec.kind == KIND_UNION_ALIAS:
        return f"alias:{rec.predicate.get('target_file')}:" \
               f"{rec.predicate.get('anchor_kind')}:" \
               f"{rec.predicate.get('anchor_name')}:" \
               f"{rec.predicate.get('arg_index')}"
    return None


def _classify_pair(a: SpecRecord, b: SpecRecord) -> Optional[ConflictReport]:
    anchor_a = (a.anchor.path, a.anchor.decl, a.anchor.start, a.anchor.end)
    anchor_b = (b.anchor.path, b.anchor.decl, b.anchor.start, b.anchor.end)
    same_anchor = anchor_a == anchor_b
    if same_anchor and a.kind == b.kind:
        if _identity_essence(a) != _identity_essence(b):
            return ConflictReport((a.id, b.id),
                                  f"anchor {a.anchor.path}:{a.anchor.start}",
                                  CONFLICT_CONTRADICTORY)
    if a.kind == b.kind and _target_key(a) is not None and \
            _target_key(a) == _target_key(b):
        ma, mb = _members_of(a), _members_of(b)
        if ma is not None and mb is not None:
            if set(ma) == set(mb):
                return ConflictReport((a.id, b.id), _target_key(a),
                                      CONFLICT_DUPLICATE)
            return ConflictReport((a.id, b.id), _target_key(a),
                                  CONFLICT_CONTRADICTORY)
    name_a = a.predicate.get("union_name")
    name_b = b.predicate.get("union_name")
    file_a = a.predicate.get("target_file")
    file_b = b.predicate.get("target_file")
    if name_a and name_a == name_b and file_a == file_b and a.id != b.id:
        ma, mb = _members_of(a), _members_of(b)
        if ma is not None and mb is not None and set(ma) != set(mb):
            return ConflictReport((a.id, b.id),
                                  f"name:{file_a}:{name_a}",
                                  CONFLICT_NAME_COLLISION)
    return None


# -- persistence ---------------------------------------------------------


def persist(store: SpecStore, path: str) -> None:
    """Write the store as documented JSON, atomically (temp + rename)."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "records": [store.records[rid].to_json()
                    for rid in sorted(store.records)],
        "anchor_misses": {k: store.anchor_misses[k]
                          for k in sorted(store.anchor_misses)},
    }
    directory = os.path.dirname(path) or "."
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=".specs-", suffix=".json",
                                   dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=False)
                fh.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise StorageFailure(f"cannot write {path}: {exc}") from exc


def load(path: str) -> SpecStore:
    """Load a persisted store; verifies schema version and per-record
    content-hash integrity."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        return SpecStore()
    except (OSError, json.JSONDecodeError) as exc:
        raise StorageFailure(f"cannot read {path}: {exc}") from exc
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: schema_version {version!r}, expected {SCHEMA_VERSION}")
    records: dict[str, SpecRecord] = {}
    for raw in payload.get("records", []):
        rec = SpecRecord.from_json(raw)
        expected = record_id(rec.kind, rec.anchor, rec.predicate)
        if expected != rec.id:
            raise StoreIntegrityError(
                rec.id, f"record {rec.id}: content hash mismatch "
                        f"(expected {expected})")
        records[rec.id] = rec
    misses = {str(k): int(v)
              for k, v in payload.get("anchor_misses", {}).items()}
    return SpecStore(records=records, anchor_misses=misses)
