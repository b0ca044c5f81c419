"""Minimal JSON-over-HTTP plumbing shared by the door and node APIs.

Built on the stdlib threading HTTP server: tiny dependency surface and
fast process startup, which matters because tests launch many server
processes. Responses are canonical-style JSON; permissive CORS headers
are emitted so the browser UI can talk to both APIs from a dev origin.
"""

from __future__ import annotations

import json
import logging
import re
import socket
import ssl
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable

logger = logging.getLogger(__name__)

MAX_BODY_BYTES = 8 * 1024 * 1024

Route = tuple[str, re.Pattern, Callable]


class ApiError(Exception):
    """An error with a designated HTTP status code."""

    def __init__(self, status: int, error: str, detail: str = ""):
        super().__init__(detail or error)
        self.status = status
        self.error = error
        self.detail = detail


def route(method: str, pattern: str, fn: Callable) -> Route:
    return (method, re.compile(f"^{pattern}$"), fn)


class JsonApiServer:
    """Threaded HTTP server dispatching to (method, path-regex) routes.

    Route functions receive (match, body) where body is the parsed JSON
    object (or None) and return (status, payload) or just a payload for
    a 200. Raise ApiError for structured failures.
    """

    def __init__(
        self,
        host: str,
        port: int,
        routes: list[Route],
        tls_context: ssl.SSLContext | None = None,
    ):
        self._routes = routes
        outer = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):  # quiet by default
                logger.debug("%s %s", self.address_string(), fmt % args)

            def _reply(self, status: int, payload: dict) -> None:
                data = json.dumps(payload, sort_keys=True).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                self.wfile.write(data)

            def _handle(self, method: str) -> None:
                try:
                    body = None
                    length = int(self.headers.get("Content-Length") or 0)
                    if length > MAX_BODY_BYTES:
                        raise ApiError(400, "body-too-large")
                    if length:
                        raw = self.rfile.read(length)
                        try:
                            body = json.loads(raw.decode("utf-8"))
                        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                            raise ApiError(400, "malformed-json", str(exc)) from None
                    for verb, pattern, fn in outer._routes:
                        if verb != method:
                            continue
                        match = pattern.match(self.path)
                        if match is None:
                            continue
                        result = fn(match, body)
                        if isinstance(result, tuple):
                            status, payload = result
                        else:
                            status, payload = 200, result
                        self._reply(status, payload)
                        return
                    raise ApiError(404, "no-such-endpoint", self.path)
                except ApiError as exc:
                    self._reply(
                        exc.status, {"error": exc.error, "detail": exc.detail}
                    )
                except Exception:
                    logger.exception("unhandled API error on %s %s", method, self.path)
                    try:
                        self._reply(500, {"error": "internal", "detail": ""})
                    except OSError:
                        pass

            def do_GET(self):
                self._handle("GET")

            def do_POST(self):
                self._handle("POST")

            def do_DELETE(self):
                self._handle("DELETE")

            def do_OPTIONS(self):
                self.send_response(204)
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header(
                    "Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"
                )
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Content-Length", "0")
                self.end_headers()

        self._httpd = ThreadingHTTPServer((host, port), Handler)
        self._httpd.daemon_threads = True
        if tls_context is not None:
            self._httpd.socket = tls_context.wrap_socket(
                self._httpd.socket, server_side=True
            )
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.25},
            daemon=True,
        )
        self._thread.start()

    def serve_forever(self) -> None:
        self._httpd.serve_forever(poll_interval=0.25)

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5.0)


def parse_hostport(addr: str) -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    if not host or not port:
        raise ValueError(f"expected host:port, got {addr!r}")
    return host, int(port)


def is_loopback(host: str) -> bool:
    if host in ("localhost", "127.0.0.1", "::1"):
        return True
    try:
        return socket.inet_aton(host)[0] == 127
    except OSError:
        return False
