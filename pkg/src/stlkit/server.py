"""HTTP API backing the annotation UI, on the stdlib HTTP server.

Reads are served concurrently; mutations are serialized through the
dataset store's writer lock and optimistic versioning.  Version conflicts
map to HTTP 409, domain rule violations (wrong status, self review) to
400, unknown records to 404.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .evaluate import EmptyInput, corpus_stats
from .pipeline import (
    DatasetStore,
    PipelineError,
    SelfReview,
    UnknownRecord,
    VersionConflict,
    WrongStatus,
)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".map": "application/json",
}


def _record_json(record) -> dict:
    return record.to_json()


class _Handler(BaseHTTPRequestHandler):
    server_version = "stlkit-annotate/0.1"
    store: DatasetStore
    ui_dir: Path | None

    def log_message(self, fmt, *args):  # quiet by default
        if getattr(self.server, "verbose", False):
            super().log_message(fmt, *args)

    # -- plumbing ---------------------------------------------------------

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": code, "message": message})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b"{}"
        try:
            data = json.loads(raw.decode("utf-8"))
        except ValueError:
            raise ValueError("request body is not valid JSON")
        if not isinstance(data, dict):
            raise ValueError("request body must be a JSON object")
        return data

    # -- routes -----------------------------------------------------------

    def do_GET(self):
        url = urlparse(self.path)
        parts = [p for p in url.path.split("/") if p]
        if parts[:2] == ["api", "records"]:
            if len(parts) == 2:
                status = parse_qs(url.query).get("status", [None])[0]
                records = self.store.records(status=status)
                return self._send_json(200, [_record_json(r) for r in records])
            if len(parts) == 3:
                try:
                    return self._send_json(200, _record_json(self.store.get(parts[2])))
                except UnknownRecord:
                    return self._error(404, "unknown_record", f"no record {parts[2]}")
        if parts[:2] == ["api", "stats"]:
            return self._send_json(200, self._stats())
        if self.ui_dir is not None:
            return self._static(url.path)
        return self._error(404, "not_found", self.path)

    def do_POST(self):
        parts = [p for p in urlparse(self.path).path.split("/") if p]
        if len(parts) != 4 or parts[:2] != ["api", "records"]:
            return self._error(404, "not_found", self.path)
        record_id, action = parts[2], parts[3]
        try:
            body = self._body()
            if action == "annotation":
                record = self.store.submit_annotation(
                    record_id,
                    corrected_nl=str(body["nl"]),
                    annotator=str(body["annotator"]),
                    version=int(body["version"]),
                )
            elif action == "crosscheck":
                record = self.store.crosscheck(
                    record_id,
                    reviewer=str(body["reviewer"]),
                    verdict=str(body["verdict"]),
                    version=int(body["version"]),
                )
            else:
                return self._error(404, "not_found", self.path)
        except (KeyError, ValueError, TypeError) as exc:
            return self._error(400, "bad_request", str(exc))
        except UnknownRecord as exc:
            return self._error(404, "unknown_record", str(exc))
        except VersionConflict as exc:
            return self._error(409, "version_conflict", str(exc))
        except (WrongStatus, SelfReview) as exc:
            code = "wrong_status" if isinstance(exc, WrongStatus) else "self_review"
            return self._error(400, code, str(exc))
        except PipelineError as exc:
            return self._error(400, "pipeline_error", str(exc))
        return self._send_json(200, _record_json(record))

    def _stats(self) -> dict:
        records = self.store.records()
        by_status: dict[str, int] = {}
        for r in records:
            by_status[r.status] = by_status.get(r.status, 0) + 1
        out: dict = {"records": len(records), "by_status": by_status}
        try:
            out["corpus"] = corpus_stats(records).to_json()
        except EmptyInput:
            out["corpus"] = None
        return out

    def _static(self, path: str) -> None:
        assert self.ui_dir is not None
        rel = path.lstrip("/") or "index.html"
        target = (self.ui_dir / rel).resolve()
        root = self.ui_dir.resolve()
        if root not in target.parents and target != root:
            return self._error(404, "not_found", path)
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._error(404, "not_found", path)
        body = target.read_bytes()
        self.send_response(200)
        ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def make_server(
    store: DatasetStore,
    port: int = 0,
    host: str = "127.0.0.1",
    ui_dir: str | Path | None = None,
    verbose: bool = False,
) -> ThreadingHTTPServer:
    handler = type(
        "BoundHandler",
        (_Handler,),
        {"store": store, "ui_dir": Path(ui_dir) if ui_dir else None},
    )
    server = ThreadingHTTPServer((host, port), handler)
    server.verbose = verbose  # type: ignore[attr-defined]
    return server


def serve_forever_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
