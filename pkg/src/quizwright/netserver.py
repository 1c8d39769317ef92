"""Network front ends for the exam engine.

Two listeners share one :class:`~quizwright.engine.ExamEngine`:

* a TCP listener speaking the newline-framed JSON protocol (students,
  admins and monitors), and
* an HTTP gateway mapping the same messages 1:1 onto ``POST /api/*``
  endpoints plus a WebSocket push channel for monitors, also serving the
  built web UI as static files.

Monitors receive supervision events over their connection as they
happen; a per-connection lock keeps pushed events and request replies
from interleaving mid-line.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import mimetypes
import socketserver
import struct
import threading
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from . import wire
from .engine import ExamEngine, question_wire_form
from .wire import (Ack, Answer, Auth, ErrorReply, Finish, Hello,
                   ListSessions, ProtocolError, Register, Result,
                   SessionGrant, Sessions, Start, TestContent, WireMessage)

log = logging.getLogger(__name__)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

_STATUS_BY_CODE = {
    wire.E_MALFORMED: 400,
    wire.E_VERSION: 400,
    wire.E_AUTH: 401,
    wire.E_UNKNOWN_SESSION: 404,
    wire.E_UNKNOWN_QUESTION: 404,
    wire.E_STATE: 409,
}

_FALLBACK_INDEX = b"""<!DOCTYPE html>
<html><head><title>quizwright</title></head>
<body><h1>quizwright server</h1>
<p>No web UI build found. The JSON API is live under <code>/api/</code>.</p>
</body></html>
"""


def perform_student_op(engine: ExamEngine, msg: WireMessage) -> WireMessage:
    """Run one student-side message against the engine, returning the
    reply message.  Raises ProtocolError for every rejection."""
    if isinstance(msg, Register):
        session = engine.register(msg.name, msg.year_of_study, msg.subject)
        return SessionGrant(session.session_id, engine.config.id)
    if isinstance(msg, Start):
        questions = engine.start(msg.session_id)
        return TestContent(
            engine.config.id,
            tuple(question_wire_form(q) for q in questions))
    if isinstance(msg, Answer):
        engine.answer(msg.session_id, msg.question_id, msg.selected)
        return Ack()
    if isinstance(msg, Finish):
        report = engine.finish(msg.session_id)
        return Result(report.points, report.max_points, report.percent_text())
    raise ProtocolError(wire.E_MALFORMED,
                        f"unexpected message type {msg.TYPE}")


_STUDENT_TYPES = (Register, Start, Answer, Finish)


class TcpProtocolServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, engine: ExamEngine):
        super().__init__(address, ProtocolHandler)
        self.engine = engine


class ProtocolHandler(socketserver.StreamRequestHandler):
    """One connected peer: student, admin or monitor."""

    server: TcpProtocolServer

    def setup(self) -> None:
        super().setup()
        self.engine = self.server.engine
        self.role: Optional[str] = None
        self.authed = False
        self.events = None
        self._pump: Optional[threading.Thread] = None
        self._send_lock = threading.Lock()

    def send(self, msg: WireMessage) -> None:
        data = wire.encode(msg)
        with self._send_lock:
            self.wfile.write(data)
            self.wfile.flush()

    def handle(self) -> None:
        try:
            while True:
                line = self.rfile.readline(wire.MAX_FRAME_BYTES + 1)
                if not line:
                    break
                if len(line) > wire.MAX_FRAME_BYTES:
                    self.send(ErrorReply(wire.E_MALFORMED,
                                         "frame exceeds size cap"))
                    break
                try:
                    msg = wire.decode(line.rstrip(b"\r\n"))
                except ProtocolError as exc:
                    self.send(ErrorReply(exc.code, exc.message))
                    if exc.code == wire.E_VERSION:
                        break
                    continue
                if not self.dispatch(msg):
                    break
        except (ConnectionError, BrokenPipeError, OSError):
            pass
        finally:
            self._stop_pump()

    def dispatch(self, msg: WireMessage) -> bool:
        try:
            self._dispatch(msg)
        except ProtocolError as exc:
            self.send(ErrorReply(exc.code, exc.message))
        return True

    def _dispatch(self, msg: WireMessage) -> None:
        if self.role is None:
            if not isinstance(msg, Hello):
                raise ProtocolError(wire.E_STATE, "HELLO must come first")
            self.role = msg.role
            self.send(wire.Welcome(self.engine.server_version))
            return
        if isinstance(msg, Hello):
            raise ProtocolError(wire.E_STATE, "already greeted")

        if isinstance(msg, _STUDENT_TYPES):
            if self.role != "student":
                raise ProtocolError(wire.E_AUTH,
                                    f"role '{self.role}' cannot take tests")
            self.send(perform_student_op(self.engine, msg))
            return

        if isinstance(msg, Auth):
            if self.role == "student":
                raise ProtocolError(wire.E_AUTH,
                                    "students do not authenticate")
            if not self.engine.authenticate(msg.user_id, msg.password):
                raise ProtocolError(wire.E_AUTH, "bad credentials")
            self.authed = True
            self.send(Ack())
            if self.role == "monitor" and self.events is None:
                self.events = self.engine.subscribe()
                self._pump = threading.Thread(target=self._pump_events,
                                              daemon=True)
                self._pump.start()
            return

        if isinstance(msg, ListSessions):
            if self.role == "student" or not self.authed:
                raise ProtocolError(wire.E_AUTH, "authenticate first")
            self.send(Sessions(tuple(self.engine.snapshot_sessions())))
            return

        raise ProtocolError(wire.E_MALFORMED,
                            f"client may not send {msg.TYPE}")

    def _pump_events(self) -> None:
        assert self.events is not None
        while True:
            event = self.events.get()
            if event is None:  # shutdown sentinel
                return
            try:
                self.send(event)
            except (ConnectionError, BrokenPipeError, OSError):
                return

    def _stop_pump(self) -> None:
        if self.events is not None:
            self.engine.unsubscribe(self.events)
            self.events.put(None)


# --- HTTP / WebSocket gateway -----------------------------------------------

class GatewayServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, engine: ExamEngine,
                 web_root: Path | str | None = None):
        super().__init__(address, GatewayHandler)
        self.engine = engine
        self.web_root = Path(web_root).resolve() if web_root else None


class GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: GatewayServer

    _POST_TYPES = {
        "/api/register": "REGISTER",
        "/api/start": "START",
        "/api/answer": "ANSWER",
        "/api/finish": "FINISH",
    }

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        log.debug("%s %s", self.address_string(), format % args)

    # --- helpers -----------------------------------------------------

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_message(self, msg: WireMessage, status: int = 200) -> None:
        body = wire.encode(msg)[:-1]
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self) -> None:  # noqa: N802
        # lets a separately served UI build (dev server) call the API
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers",
                         "Authorization, Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def _send_error_reply(self, exc: ProtocolError) -> None:
        self._send_message(ErrorReply(exc.code, exc.message),
                           _STATUS_BY_CODE.get(exc.code, 400))

    def _read_body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > wire.MAX_FRAME_BYTES:
            raise ProtocolError(wire.E_MALFORMED, "request body too large")
        raw = self.rfile.read(length) if length else b"{}"
        try:
            obj = json.loads(raw)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ProtocolError(wire.E_MALFORMED,
                                f"bad JSON body: {exc}") from None
        if not isinstance(obj, dict):
            raise ProtocolError(wire.E_MALFORMED, "body must be a JSON object")
        return obj

    def _check_auth(self, query_fallback: bool = False) -> None:
        header = self.headers.get("Authorization") or ""
        if not header and query_fallback:
            # browser WebSocket clients cannot set request headers
            query = urllib.parse.parse_qs(
                urllib.parse.urlsplit(self.path).query)
            header = (query.get("auth") or [""])[0]
        if header.startswith("Basic "):
            try:
                header = base64.b64decode(header[6:]).decode("utf-8")
            except Exception:
                raise ProtocolError(wire.E_AUTH,
                                    "undecodable Authorization header") from None
        user_id, sep, password = header.partition(":")
        if not sep or not self.server.engine.authenticate(user_id, password):
            raise ProtocolError(wire.E_AUTH, "bad credentials")

    # --- routes ------------------------------------------------------

    def do_POST(self) -> None:  # noqa: N802
        message_type = self._POST_TYPES.get(self.path)
        if message_type is None:
            self._send_json(404, {"type": "ERROR", "code": wire.E_MALFORMED,
                                  "message": f"no such endpoint {self.path}"})
            return
        try:
            body = self._read_body()
            body["type"] = message_type
            msg = wire.decode(json.dumps(body).encode("utf-8"))
            reply = perform_student_op(self.server.engine, msg)
        except ProtocolError as exc:
            self._send_error_reply(exc)
            return
        self._send_message(reply)

    def do_GET(self) -> None:  # noqa: N802
        path = self.path.split("?", 1)[0]
        if path == "/api/sessions":
            try:
                self._check_auth()
            except ProtocolError as exc:
                self._send_error_reply(exc)
                return
            self._send_message(
                Sessions(tuple(self.server.engine.snapshot_sessions())))
            return
        if path == "/api/monitor":
            self._serve_monitor_socket()
            return
        self._serve_static(path)

    # --- WebSocket push channel -----------------------------------------

    def _serve_monitor_socket(self) -> None:
        try:
            self._check_auth(query_fallback=True)
        except ProtocolError as exc:
            self._send_error_reply(exc)
            return
        key = self.headers.get("Sec-WebSocket-Key")
        upgrade = (self.headers.get("Upgrade") or "").lower()
        if upgrade != "websocket" or not key:
            self._send_json(400, {"type": "ERROR", "code": wire.E_MALFORMED,
                                  "message": "WebSocket upgrade required"})
            return
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
        ).decode("ascii")
        self.send_response(101, "Switching Protocols")
        self.send_header("Upgrade", "websocket")
        self.send_header("Connection", "Upgrade")
        self.send_header("Sec-WebSocket-Accept", accept)
        self.end_headers()
        self.wfile.flush()

        engine = self.server.engine
        events = engine.subscribe()
        closed = threading.Event()
        send_lock = threading.Lock()

        def reader() -> None:
            try:
                while not closed.is_set():
                    frame = _read_ws_frame(self.rfile)
                    if frame is None or frame[0] == 0x8:
                        break
                    if frame[0] == 0x9:  # ping
                        with send_lock:
                            self.wfile.write(_ws_frame(0xA, frame[1]))
                            self.wfile.flush()
            except (ConnectionError, OSError, ValueError):
                pass
            finally:
                closed.set()
                events.put(None)

        threading.Thread(target=reader, daemon=True).start()
        try:
            # snapshot first so a fresh dashboard has every session even if
            # it connected after events fired
            snapshot = Sessions(tuple(engine.snapshot_sessions()))
            with send_lock:
                self.wfile.write(_ws_frame(0x1, wire.encode(snapshot)[:-1]))
                self.wfile.flush()
            while not closed.is_set():
                event = events.get()
                if event is None:
                    break
                with send_lock:
                    self.wfile.write(_ws_frame(0x1, wire.encode(event)[:-1]))
                    self.wfile.flush()
        except (ConnectionError, BrokenPipeError, OSError):
            pass
        finally:
            closed.set()
            engine.unsubscribe(events)
            self.close_connection = True

    # --- static files ----------------------------------------------------

    def _serve_static(self, path: str) -> None:
        root = self.server.web_root
        if path == "/":
            path = "/index.html"
        if root is None:
            if path == "/index.html":
                self._send_bytes(200, "text/html; charset=utf-8",
                                 _FALLBACK_INDEX)
            else:
                self._send_json(404, {"type": "ERROR",
                                      "code": wire.E_MALFORMED,
                                      "message": "not found"})
            return
        candidate = (root / path.lstrip("/")).resolve()
        if not candidate.is_relative_to(root) or not candidate.is_file():
            self._send_json(404, {"type": "ERROR", "code": wire.E_MALFORMED,
                                  "message": "not found"})
            return
        content_type = (mimetypes.guess_type(str(candidate))[0]
                        or "application/octet-stream")
        self._send_bytes(200, content_type, candidate.read_bytes())

    def _send_bytes(self, status: int, content_type: str, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def _ws_frame(opcode: int, payload: bytes) -> bytes:
    """One unmasked server-to-client frame."""
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 65536:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


def _read_ws_frame(rfile) -> tuple[int, bytes] | None:
    """(opcode, payload) of one client frame, or None at EOF."""
    head = rfile.read(2)
    if len(head) < 2:
        return None
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack(">H", rfile.read(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", rfile.read(8))[0]
    if length > wire.MAX_FRAME_BYTES:
        raise ValueError("frame too large")
    mask = rfile.read(4) if masked else b""
    payload = rfile.read(length) if length else b""
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload


# --- orchestration ------------------------------------------------------------

class ServerHandles:
    """Both listeners plus their serve threads; ``close()`` tears down."""

    def __init__(self, engine: ExamEngine, tcp: TcpProtocolServer,
                 http: GatewayServer):
        self.engine = engine
        self.tcp = tcp
        self.http = http
        self.tcp_port = tcp.server_address[1]
        self.http_port = http.server_address[1]
        self._threads = [
            threading.Thread(target=tcp.serve_forever,
                             kwargs={"poll_interval": 0.05}, daemon=True),
            threading.Thread(target=http.serve_forever,
                             kwargs={"poll_interval": 0.05}, daemon=True),
        ]

    def start(self) -> None:
        for t in self._threads:
            t.start()

    def close(self) -> None:
        self.tcp.shutdown()
        self.http.shutdown()
        self.tcp.server_close()
        self.http.server_close()


def bind_servers(engine: ExamEngine, port: int, http_port: int,
                 web_root: Path | str | None = None,
                 host: str = "0.0.0.0") -> ServerHandles:
    """Bind both listeners (raises OSError on occupied ports)."""
    tcp = TcpProtocolServer((host, port), engine)
    try:
        http = GatewayServer((host, http_port), engine, web_root)
    except OSError:
        tcp.server_close()
        raise
    return ServerHandles(engine, tcp, http)
