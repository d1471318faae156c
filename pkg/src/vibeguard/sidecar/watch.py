"""Polling file watcher driving the analysis loop.

Change bursts are debounced (default 300 ms) into a single pass; event
handling is serialized through the engine lock. Native filesystem
watching is unavailable in this build's dependency set, so the
documented polling fallback (2 s interval) is the implementation.
"""

from __future__ import annotations

import threading
import time
from typing import Callable, Optional

from vibeguard.oracle import discover_sources
from vibeguard.sidecar.pipeline import AnalysisOutcome, Engine, HookEvent


def _signatures(workspace: str) -> dict[str, int]:
    import zlib
    return {path: zlib.crc32(data)
            for path, data in discover_sources(workspace).items()}


def watch(
    engine: Engine,
    stop: threading.Event,
    on_report: Optional[Callable[[AnalysisOutcome], None]] = None,
    poll_interval_s: Optional[float] = None,
    debounce_ms: Optional[float] = None,
    max_passes: Optional[int] = None,
) -> int:
    """Run until `stop` is set; returns the number of analysis passes."""
    interval = poll_interval_s if poll_interval_s is not None \
        else engine.config.poll_interval_s
    debounce_s = (debounce_ms if debounce_ms is not None
                  else engine.config.debounce_ms) / 1000.0
    known = _signatures(engine.workspace)
    pending: set[str] = set()
    last_change = 0.0
    passes = 0
    tick = min(interval, max(debounce_s / 2, 0.01))
    while not stop.is_set():
        now = time.monotonic()
        current = _signatures(engine.workspace)
        if current != known:
            for path in set(current) | set(known):
                if current.get(path) != known.get(path):
                    pending.add(path)
            known = current
            last_change = now
        if pending and (now - last_change) >= debounce_s:
            changed = tuple(sorted(pending))
            pending.clear()
            outcome = engine.analyze(HookEvent("post-edit", changed))
            passes += 1
            if on_report is not None:
                on_report(outcome)
            if max_passes is not None and passes >= max_passes:
                break
        stop.wait(tick)
    return passes
