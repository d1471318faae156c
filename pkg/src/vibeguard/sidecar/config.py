"""Workspace configuration, read from `.vibeguard/config.json`."""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from vibeguard.errors import StoreCorrupt
from vibeguard.index.model import IndexConfig
from vibeguard.oracle import CommandOracle, MiniCompilerOracle

CONFIG_DIR = ".vibeguard"
CONFIG_FILE = "config.json"
STORE_FILE = "specs.json"
STATE_FILE = "state.json"


@dataclass(frozen=True)
class SidecarConfig:
    oracle_cmd: Optional[list[str]] = None  # None: internal mini checker
    oracle_timeout_s: float = 60.0
    family_min_size: int = 3
    family_min_sites: int = 2
    debounce_ms: int = 300
    auto_apply: bool = False
    verify_budget_ms: float = 30000.0
    poll_interval_s: float = 2.0
    ui_dir: Optional[str] = None

    def index_config(self) -> IndexConfig:
        return IndexConfig(family_min_size=self.family_min_size,
                           family_min_sites=self.family_min_sites)

    def make_oracle(self):
        if self.oracle_cmd:
            return CommandOracle(self.oracle_cmd, self.oracle_timeout_s)
        return MiniCompilerOracle()


def config_path(workspace: str) -> Path:
    return Path(workspace) / CONFIG_DIR / CONFIG_FILE


def store_path(workspace: str) -> Path:
    return Path(workspace) / CONFIG_DIR / STORE_FILE


def state_path(workspace: str) -> Path:
    return Path(workspace) / CONFIG_DIR / STATE_FILE


def load_config(workspace: str,
                override_path: Optional[str] = None) -> SidecarConfig:
    path = Path(override_path) if override_path else config_path(workspace)
    cfg = SidecarConfig()
    if not path.exists():
        return cfg
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise StoreCorrupt(f"unreadable config {path}: {exc}") from exc
    cmd = raw.get("oracle_cmd")
    if isinstance(cmd, str):
        cmd = shlex.split(cmd)
    updates = {}
    if cmd:
        updates["oracle_cmd"] = [str(c) for c in cmd]
    for key, conv in (("oracle_timeout_s", float),
                      ("family_min_size", int),
                      ("family_min_sites", int),
                      ("debounce_ms", int),
                      ("auto_apply", bool),
                      ("verify_budget_ms", float),
                      ("poll_interval_s", float)):
        if key in raw:
            updates[key] = conv(raw[key])
    if raw.get("ui_dir"):
        updates["ui_dir"] = str(raw["ui_dir"])
    return replace(cfg, **updates)
