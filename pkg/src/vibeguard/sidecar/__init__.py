"""Event loop, CLI, watcher and HTTP API of the side-car."""

from vibeguard.sidecar.config import SidecarConfig, load_config
from vibeguard.sidecar.pipeline import Engine, HookEvent, handle_hook_event

__all__ = ["Engine", "HookEvent", "SidecarConfig", "handle_hook_event",
           "load_config"]
