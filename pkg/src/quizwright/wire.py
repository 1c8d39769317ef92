"""Message vocabulary and framing shared by the server, the admin tool,
the monitor and the browser gateway.

Framing is one JSON object per line: every encoded message is a single
UTF-8 line with a ``type`` field, terminated by exactly one newline and
capped at 64 KiB.  Decoding tolerates unknown payload fields so newer
peers can add data without breaking older ones; unknown message types
and missing required fields are rejected as ``E_MALFORMED``.

Questions travelling to students never carry key digests; stripping
happens in the server, this module only defines the shapes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Any, Callable, ClassVar

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 65536  # encoded line including the terminator

E_AUTH = "E_AUTH"
E_STATE = "E_STATE"
E_UNKNOWN_SESSION = "E_UNKNOWN_SESSION"
E_UNKNOWN_QUESTION = "E_UNKNOWN_QUESTION"
E_MALFORMED = "E_MALFORMED"
E_VERSION = "E_VERSION"

ERROR_CODES = frozenset({
    E_AUTH, E_STATE, E_UNKNOWN_SESSION, E_UNKNOWN_QUESTION,
    E_MALFORMED, E_VERSION,
})

ROLES = ("student", "admin", "monitor")
EVENT_KINDS = ("registered", "started", "answered", "finished")


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        assert code in ERROR_CODES
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


def _malformed(message: str) -> ProtocolError:
    return ProtocolError(E_MALFORMED, message)


# --- field validators ---------------------------------------------------------

def _is_str(v: Any) -> bool:
    return isinstance(v, str)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_str_list(v: Any) -> bool:
    return isinstance(v, list) and all(isinstance(x, str) for x in v)


def _is_dict_list(v: Any) -> bool:
    return isinstance(v, list) and all(isinstance(x, dict) for x in v)


def _is_optional_str(v: Any) -> bool:
    return v is None or isinstance(v, str)


# --- message types --------------------------------------------------------------

@dataclass(frozen=True)
class Hello:
    role: str
    protocol_version: int
    TYPE: ClassVar[str] = "HELLO"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "role": _is_str, "protocol_version": _is_int}


@dataclass(frozen=True)
class Welcome:
    server_version: str
    TYPE: ClassVar[str] = "WELCOME"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {"server_version": _is_str}


@dataclass(frozen=True)
class Auth:
    user_id: str
    password: str
    TYPE: ClassVar[str] = "AUTH"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "user_id": _is_str, "password": _is_str}


@dataclass(frozen=True)
class Ack:
    TYPE: ClassVar[str] = "ACK"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {}


@dataclass(frozen=True)
class Register:
    name: str
    year_of_study: int
    subject: str
    TYPE: ClassVar[str] = "REGISTER"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "name": _is_str, "year_of_study": _is_int, "subject": _is_str}


@dataclass(frozen=True)
class SessionGrant:
    session_id: str
    test_id: str
    TYPE: ClassVar[str] = "SESSION"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "session_id": _is_str, "test_id": _is_str}


@dataclass(frozen=True)
class Start:
    session_id: str
    TYPE: ClassVar[str] = "START"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {"session_id": _is_str}


@dataclass(frozen=True)
class TestContent:
    """The selected questions for one sitting, digest-free."""

    test_id: str
    questions: tuple[dict, ...]
    TYPE: ClassVar[str] = "TEST"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "test_id": _is_str, "questions": _is_dict_list}


@dataclass(frozen=True)
class Answer:
    session_id: str
    question_id: str
    selected: tuple[str, ...]
    TYPE: ClassVar[str] = "ANSWER"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "session_id": _is_str, "question_id": _is_str, "selected": _is_str_list}


@dataclass(frozen=True)
class Finish:
    session_id: str
    TYPE: ClassVar[str] = "FINISH"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {"session_id": _is_str}


@dataclass(frozen=True)
class Result:
    points: int
    max_points: int
    percent: str  # exactly two fraction digits, e.g. "83.33"
    TYPE: ClassVar[str] = "RESULT"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "points": _is_int, "max_points": _is_int, "percent": _is_str}


@dataclass(frozen=True)
class ListSessions:
    TYPE: ClassVar[str] = "LIST_SESSIONS"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {}


@dataclass(frozen=True)
class Sessions:
    sessions: tuple[dict, ...]
    TYPE: ClassVar[str] = "SESSIONS"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {"sessions": _is_dict_list}


@dataclass(frozen=True)
class Event:
    kind: str
    session_id: str
    name: str
    subject: str
    answered_count: int
    percent: str | None = None
    TYPE: ClassVar[str] = "EVENT"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "kind": _is_str, "session_id": _is_str, "name": _is_str,
        "subject": _is_str, "answered_count": _is_int}
    OPTIONAL: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "percent": _is_optional_str}


@dataclass(frozen=True)
class ErrorReply:
    code: str
    message: str
    TYPE: ClassVar[str] = "ERROR"
    FIELDS: ClassVar[dict[str, Callable[[Any], bool]]] = {
        "code": _is_str, "message": _is_str}


WireMessage = (Hello | Welcome | Auth | Ack | Register | SessionGrant | Start
               | TestContent | Answer | Finish | Result | ListSessions
               | Sessions | Event | ErrorReply)

MESSAGE_TYPES: dict[str, type] = {
    cls.TYPE: cls
    for cls in (Hello, Welcome, Auth, Ack, Register, SessionGrant, Start,
                TestContent, Answer, Finish, Result, ListSessions, Sessions,
                Event, ErrorReply)
}

_TUPLE_FIELDS = {"questions", "selected", "sessions"}


def encode(msg: WireMessage) -> bytes:
    """One newline-terminated UTF-8 JSON line for ``msg``."""
    payload: dict[str, Any] = {"type": msg.TYPE}
    for f in fields(msg):
        value = getattr(msg, f.name)
        if value is None:
            continue
        if isinstance(value, tuple):
            value = list(value)
        payload[f.name] = value
    line = json.dumps(payload, ensure_ascii=False, separators=(",", ":")) + "\n"
    data = line.encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise _malformed(f"encoded frame is {len(data)} bytes, cap is "
                         f"{MAX_FRAME_BYTES}")
    return data


def decode(line: bytes | str) -> WireMessage:
    """Parse one frame (without its terminator) back into a message.

    Raises :class:`ProtocolError`: ``E_MALFORMED`` for bad syntax, an
    unknown type, a missing or mistyped required field, or an oversized
    frame; ``E_VERSION`` for a HELLO with an unsupported version.
    """
    if isinstance(line, str):
        line = line.encode("utf-8")
    if len(line) >= MAX_FRAME_BYTES:
        raise _malformed(f"frame exceeds {MAX_FRAME_BYTES} byte cap")
    try:
        obj = json.loads(line)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise _malformed(f"bad JSON frame: {exc}") from None
    if not isinstance(obj, dict):
        raise _malformed("frame is not a JSON object")
    tag = obj.get("type")
    cls = MESSAGE_TYPES.get(tag)
    if cls is None:
        raise _malformed(f"unknown message type {tag!r}")

    kwargs: dict[str, Any] = {}
    for name, check in cls.FIELDS.items():
        if name not in obj:
            raise _malformed(f"{tag}: missing field '{name}'")
        value = obj[name]
        if not check(value):
            raise _malformed(f"{tag}: bad value for field '{name}'")
        kwargs[name] = tuple(value) if name in _TUPLE_FIELDS else value
    for name, check in getattr(cls, "OPTIONAL", {}).items():
        if name in obj:
            value = obj[name]
            if not check(value):
                raise _malformed(f"{tag}: bad value for field '{name}'")
            kwargs[name] = value

    msg = cls(**kwargs)
    if isinstance(msg, Hello):
        if msg.role not in ROLES:
            raise _malformed(f"unknown role {msg.role!r}")
        if msg.protocol_version != PROTOCOL_VERSION:
            raise ProtocolError(
                E_VERSION,
                f"protocol version {msg.protocol_version} unsupported, "
                f"server speaks {PROTOCOL_VERSION}")
    if isinstance(msg, ErrorReply) and msg.code not in ERROR_CODES:
        raise _malformed(f"unknown error code {msg.code!r}")
    if isinstance(msg, Event) and msg.kind not in EVENT_KINDS:
        raise _malformed(f"unknown event kind {msg.kind!r}")
    return msg


def split_frames(data: bytes) -> list[bytes]:
    """Split a byte stream on newlines into decodable frames (the final
    partial line, if any, is not returned)."""
    frames = data.split(b"\n")
    return frames[:-1]
