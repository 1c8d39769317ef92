"""Examination server core: session lifecycle, supervision events and
result persistence.  Transport-agnostic; the TCP listener and the HTTP
gateway both drive this one object.

Concurrency contract: one lock serializes every session mutation and
every snapshot, so a monitor never observes a half-applied transition
and interleaved sittings grade exactly as they would alone.  The bank,
config and user store are immutable after startup.
"""

from __future__ import annotations

import os
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import schemas
from .digest import md5, to_hex
from .quizbank import (SINGLE, Question, QuizBank, ScoreReport, TestConfig,
                       grade, load_bank, load_config, select_questions)
from .wire import (E_MALFORMED, E_STATE, E_UNKNOWN_QUESTION,
                   E_UNKNOWN_SESSION, Event, ProtocolError)
from .xmlcore import Element, XmlDocument, parse_tree, serialize
from .xmlschema import Violation, validate

REGISTERED = "registered"
IN_PROGRESS = "in_progress"
COMPLETED = "completed"


@dataclass
class Session:
    """One student's sitting, from registration to the final score."""

    session_id: str
    name: str
    year_of_study: int
    subject: str
    seed: int
    state: str = REGISTERED
    presented: list[str] = field(default_factory=list)
    answers: dict[str, frozenset[str]] = field(default_factory=dict)
    report: ScoreReport | None = None
    registered_at: int = 0
    started_at: int = 0
    finished_at: int = 0

    def summary(self) -> dict:
        out = {
            "session_id": self.session_id,
            "name": self.name,
            "subject": self.subject,
            "state": self.state,
            "answered_count": len(self.answers),
        }
        if self.report is not None:
            out["percent"] = self.report.percent_text()
        return out


def derive_seed(session_id: str, nonce: int) -> int:
    """Per-session selection seed: first 8 digest bytes, little-endian."""
    d = md5(f"{session_id}:{nonce}")
    return int.from_bytes(d.value[:8], "little")


def question_wire_form(q: Question) -> dict:
    """What a student is allowed to see: never the key digest."""
    return {
        "id": q.id,
        "type": q.kind,
        "points": q.points,
        "text": q.text,
        "choices": [{"id": c.id, "text": c.text} for c in q.choices],
    }


class ExamEngine:
    def __init__(self, bank: QuizBank, config: TestConfig,
                 users: dict[str, str], results_dir: Path | str,
                 nonce: int, server_version: str = "quizwright/0.1.0"):
        self.bank = bank
        self.config = config
        self.users = users
        self.results_dir = Path(results_dir)
        self.nonce = nonce
        self.server_version = server_version
        self._questions = bank.by_id()
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._counter = 0
        self._monitors: list[queue.SimpleQueue] = []
        self.results_dir.mkdir(parents=True, exist_ok=True)

    # --- supervision ---------------------------------------------------

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._lock:
            self._monitors.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self._lock:
            try:
                self._monitors.remove(q)
            except ValueError:
                pass

    def _emit(self, kind: str, session: Session, percent: str | None = None) -> None:
        # called with the lock held so every monitor sees events in order
        event = Event(kind=kind, session_id=session.session_id,
                      name=session.name, subject=session.subject,
                      answered_count=len(session.answers), percent=percent)
        for q in self._monitors:
            q.put(event)

    def snapshot_sessions(self) -> list[dict]:
        """Point-in-time summaries ordered by session id; no answer
        contents, no digests."""
        with self._lock:
            return [self._sessions[sid].summary()
                    for sid in sorted(self._sessions)]

    # --- session state machine -------------------------------------------

    def _get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise ProtocolError(E_UNKNOWN_SESSION,
                                f"no session '{session_id}'")
        return session

    def register(self, name: str, year_of_study: int, subject: str) -> Session:
        if not name.strip():
            raise ProtocolError(E_MALFORMED, "student name must not be empty")
        with self._lock:
            self._counter += 1
            session_id = f"S-{self._counter:06d}"
            session = Session(
                session_id=session_id,
                name=name,
                year_of_study=year_of_study,
                subject=subject,
                seed=derive_seed(session_id, self.nonce),
                registered_at=int(time.time()),
            )
            self._sessions[session_id] = session
            self._emit("registered", session)
            return session

    def start(self, session_id: str) -> list[Question]:
        with self._lock:
            session = self._get(session_id)
            if session.state != REGISTERED:
                raise ProtocolError(E_STATE,
                                    f"cannot start a {session.state} session")
            questions = select_questions(self.bank, self.config, session.seed)
            session.presented = [q.id for q in questions]
            session.state = IN_PROGRESS
            session.started_at = int(time.time())
            self._emit("started", session)
            return questions

    def answer(self, session_id: str, question_id: str,
               selected: list[str] | tuple[str, ...]) -> int:
        with self._lock:
            session = self._get(session_id)
            if session.state != IN_PROGRESS:
                raise ProtocolError(E_STATE,
                                    f"cannot answer in a {session.state} session")
            if question_id not in session.presented:
                raise ProtocolError(E_UNKNOWN_QUESTION,
                                    f"question '{question_id}' was not presented")
            question = self._questions[question_id]
            chosen = frozenset(selected)
            if not chosen:
                raise ProtocolError(E_MALFORMED, "empty selection")
            unknown = chosen - question.choice_ids()
            if unknown:
                raise ProtocolError(
                    E_MALFORMED,
                    f"unknown choice id(s) {sorted(unknown)} for "
                    f"question '{question_id}'")
            if question.kind == SINGLE and len(chosen) != 1:
                raise ProtocolError(
                    E_MALFORMED,
                    f"question '{question_id}' takes exactly one choice")
            session.answers[question_id] = chosen  # last write wins
            self._emit("answered", session)
            return len(session.answers)

    def finish(self, session_id: str) -> ScoreReport:
        with self._lock:
            session = self._get(session_id)
            if session.state != IN_PROGRESS:
                raise ProtocolError(E_STATE,
                                    f"cannot finish a {session.state} session")
            questions = [self._questions[qid] for qid in session.presented]
            report = grade(questions, session.answers)
            session.report = report
            session.state = COMPLETED
            session.finished_at = int(time.time())
            self._write_result(session, report)
            self._emit("finished", session, percent=report.percent_text())
            return report

    # --- authentication ---------------------------------------------------

    def authenticate(self, user_id: str, password: str) -> bool:
        expected = self.users.get(user_id)
        return expected is not None and to_hex(md5(password)) == expected

    # --- persistence ----------------------------------------------------

    def _result_document(self, session: Session, report: ScoreReport) -> XmlDocument:
        answers = Element("answers")
        for qr in report.per_question:
            answers.children.append(Element("answer", [
                ("question", qr.question_id),
                ("selected", ",".join(qr.selected)),
            ]))
        root = Element("result", [
            ("session", session.session_id),
            ("test", self.config.id),
        ], [
            Element("student", [
                ("name", session.name),
                ("year", str(session.year_of_study)),
                ("subject", session.subject),
            ]),
            answers,
            Element("score", [
                ("points", str(report.points)),
                ("max", str(report.max_points)),
                ("percent", report.percent_text()),
            ]),
        ])
        return XmlDocument(root)

    def _write_result(self, session: Session, report: ScoreReport) -> None:
        data = serialize(self._result_document(session, report))
        final = self.results_dir / f"{session.session_id}.xml"
        tmp = self.results_dir / f".{session.session_id}.xml.tmp"
        tmp.write_bytes(data)
        os.replace(tmp, final)


# --- startup loading ----------------------------------------------------

class StartupError(Exception):
    """Bad data directory; ``violations`` lists schema findings."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        super().__init__(message)
        self.violations = violations or []


def load_users_file(data: bytes | str) -> dict[str, str]:
    doc = parse_tree(data)
    violations = validate(doc, schemas.shipped("users"))
    if violations:
        raise StartupError("users.xml is invalid", violations)
    users: dict[str, str] = {}
    for user in doc.root.elements("user"):
        uid = user.get("id") or ""
        if uid in users:
            raise StartupError(f"users.xml: duplicate user id '{uid}'")
        users[uid] = user.get("digest") or ""
    return users


def load_data_dir(data_dir: Path | str) -> tuple[QuizBank, TestConfig, dict[str, str]]:
    """Read and validate bank, test config and user store; raises
    :class:`StartupError` with the findings on any problem."""
    base = Path(data_dir)
    config_path = base / "testconfig.xml"
    users_path = base / "users.xml"
    for path in (config_path, users_path):
        if not path.is_file():
            raise StartupError(f"missing {path}")
    try:
        config = load_config(config_path.read_bytes())
    except Exception as exc:
        raise _wrap_load_error("testconfig.xml", exc) from None
    bank_path = base / config.bank_path
    if not bank_path.is_file():
        raise StartupError(f"missing bank file {bank_path}")
    try:
        bank = load_bank(bank_path.read_bytes())
    except Exception as exc:
        raise _wrap_load_error(str(config.bank_path), exc) from None
    if config.question_count > len(bank.questions):
        raise StartupError(
            f"testconfig.xml asks for {config.question_count} questions, "
            f"bank '{config.bank_path}' holds {len(bank.questions)}")
    users = load_users_file(users_path.read_bytes())
    return bank, config, users


def _wrap_load_error(name: str, exc: Exception) -> StartupError:
    violations = getattr(exc, "violations", None) or []
    return StartupError(f"{name}: {exc}", list(violations))
