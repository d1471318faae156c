"""Localhost HTTP API consumed by the review panel.

All analysis state lives in the engine; handlers read immutable
snapshots, and decision/apply endpoints funnel through the engine's
single-mutator lock. GET /events long-polls the snapshot counter.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from vibeguard.errors import (
    IllegalTransition, StaleSnapshot, UnfixableScope, UnknownId,
    VibeguardError,
)
from vibeguard.sidecar.pipeline import Engine, HookEvent

DEFAULT_ADDR = "127.0.0.1:7173"
LONG_POLL_TIMEOUT_S = 25.0

_FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>vibeguard</title></head>
<body><h1>vibeguard</h1>
<p>The review panel assets are not built. The JSON API is live:
<a href="/specs">/specs</a>, <a href="/verdicts">/verdicts</a>.</p>
</body></html>
"""


def _ui_dir(engine: Engine) -> Optional[Path]:
    if engine.config.ui_dir:
        p = Path(engine.config.ui_dir)
        if p.is_dir():
            return p
    here = Path(__file__).resolve()
    for base in (Path(engine.workspace), *here.parents):
        cand = base / "frontend" / "dist"
        if (cand / "index.html").is_file():
            return cand
    return None


class _Handler(BaseHTTPRequestHandler):
    engine: Engine  # set by serve()

    def log_message(self, fmt: str, *args) -> None:
        pass  # quiet by default; the CLI reports the bind address

    # -- helpers -------------------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", "0") or 0)
        if length <= 0:
            return {}
        try:
            return json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            return {}

    def _send_file(self, path: Path) -> None:
        data = path.read_bytes()
        ctype = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    # -- routing ---------------------------------------------------------------

    def do_GET(self) -> None:
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        try:
            if not parts:
                return self._serve_static("index.html")
            if parts[0] == "specs" and len(parts) == 1:
                return self._send_json(200,
                                       {"records": self.engine.spec_cards()})
            if parts[0] == "specs" and len(parts) == 2:
                for card in self.engine.spec_cards():
                    if card["id"] == parts[1]:
                        return self._send_json(200, card)
                return self._send_json(404, {"error": "unknown record"})
            if parts[0] == "verdicts":
                outcome = self.engine.last_outcome
                if outcome is None:
                    self.engine.analyze(HookEvent("manual"))
                    outcome = self.engine.last_outcome
                return self._send_json(200, outcome.report)
            if parts[0] == "fixes" and len(parts) == 2:
                try:
                    plan, diff = self.engine.plan_for(parts[1])
                except (UnfixableScope, UnknownId) as exc:
                    return self._send_json(404, {"error": "no-plan",
                                                 "reason": str(exc)})
                payload = plan.to_ui_json()
                payload["diff"] = diff
                return self._send_json(200, payload)
            if parts[0] == "events":
                since = int(parse_qs(url.query).get("since", ["0"])[0])
                counter = self.engine.wait_for_counter(
                    since, LONG_POLL_TIMEOUT_S)
                return self._send_json(200, {"counter": counter})
            return self._serve_static("/".join(parts))
        except VibeguardError as exc:
            return self._send_json(500, {"error": str(exc)})

    def do_POST(self) -> None:
        parts = [p for p in urlparse(self.path).path.split("/") if p]
        try:
            if len(parts) == 3 and parts[0] == "specs" and \
                    parts[2] == "decision":
                body = self._read_json()
                status = str(body.get("status", ""))
                try:
                    record = self.engine.decide(parts[1], status, "reviewer")
                except UnknownId:
                    return self._send_json(404, {"error": "unknown record"})
                except IllegalTransition as exc:
                    return self._send_json(409, {"error": "illegal-transition",
                                                 "reason": str(exc)})
                return self._send_json(200, record)
            if len(parts) == 3 and parts[0] == "fixes" and \
                    parts[2] == "apply":
                try:
                    result = self.engine.apply_plan(parts[1])
                except StaleSnapshot as exc:
                    return self._send_json(409, {"error": "stale-snapshot",
                                                 "reason": str(exc)})
                except (UnfixableScope, UnknownId) as exc:
                    return self._send_json(404, {"error": "no-plan",
                                                 "reason": str(exc)})
                except VibeguardError as exc:
                    return self._send_json(422, {"error": "apply-failed",
                                                 "reason": str(exc)})
                return self._send_json(200, {
                    "applied": True,
                    "record_id": parts[1],
                    "verdict": {"tier": result.verdict.tier,
                                "outcome": result.verdict.outcome},
                    "changed_files": sorted(result.changed_files),
                })
            return self._send_json(404, {"error": "unknown endpoint"})
        except VibeguardError as exc:
            return self._send_json(500, {"error": str(exc)})

    def _serve_static(self, rel: str) -> None:
        ui = _ui_dir(self.engine)
        if ui is not None:
            target = (ui / rel).resolve()
            if target.is_file() and ui.resolve() in target.parents:
                return self._send_file(target)
            if rel == "index.html":
                index = ui / "index.html"
                if index.is_file():
                    return self._send_file(index)
        if rel == "index.html":
            body = _FALLBACK_PAGE.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "text/html")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
            return
        self._send_json(404, {"error": "not found"})


def serve(engine: Engine, addr: str = DEFAULT_ADDR
          ) -> tuple[ThreadingHTTPServer, threading.Thread]:
    """Start the API server on a background thread; returns (server,
    thread) so callers control shutdown."""
    host, _, port_text = addr.partition(":")
    port = int(port_text or "7173")
    handler = type("BoundHandler", (_Handler,), {"engine": engine})
    server = ThreadingHTTPServer((host or "127.0.0.1", port), handler)
    engine.analyze(HookEvent("manual"))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread
