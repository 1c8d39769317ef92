"""Question banks, answer-key hashing, seeded selection and grading.

A bank file never stores which choices are correct; each question holds
one digest of its canonical key selection (see
:func:`quizwright.digest.answer_digest`).  Grading recomputes the digest
of the submitted selection and compares: an exact match earns the full
point value, everything else earns zero.  Multi questions are therefore
scored all-or-nothing; partial credit is impossible with a single key
digest per question.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from . import schemas
from .digest import answer_digest
from .rng import SplitMix64, shuffled
from .xmlcore import Element, Text, XmlDocument, parse_tree
from .xmlschema import Violation, validate

SINGLE = "single"
MULTI = "multi"


class BankError(Exception):
    """Bank, config or authoring file rejected; ``violations`` carries
    schema findings when validation failed."""

    def __init__(self, message: str, violations: Sequence[Violation] = ()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class Choice:
    id: str
    text: str


@dataclass(frozen=True)
class Question:
    id: str
    kind: str  # SINGLE or MULTI
    points: int
    text: str
    choices: tuple[Choice, ...]
    key_digest: str

    def choice_ids(self) -> frozenset[str]:
        return frozenset(c.id for c in self.choices)


@dataclass(frozen=True)
class QuizBank:
    subject: str
    version: int
    questions: tuple[Question, ...]

    def by_id(self) -> dict[str, Question]:
        return {q.id: q for q in self.questions}


@dataclass(frozen=True)
class TestConfig:
    id: str
    bank_path: str
    question_count: int
    shuffle: bool


@dataclass(frozen=True)
class QuestionResult:
    question_id: str
    selected: tuple[str, ...]  # bytewise-sorted
    correct: bool
    points_earned: int


@dataclass(frozen=True)
class ScoreReport:
    per_question: tuple[QuestionResult, ...]
    points: int
    max_points: int
    percent: Decimal  # two fraction digits, round-half-up

    def percent_text(self) -> str:
        return str(self.percent)


def _sorted_ids(selected: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(set(selected), key=lambda s: s.encode("utf-8")))


# --- loading ----------------------------------------------------------------

def _validated(data: bytes | str, schema_name: str) -> XmlDocument:
    doc = parse_tree(data)
    violations = validate(doc, schemas.shipped(schema_name))
    if violations:
        lines = "; ".join(f"{v.path}: {v.rule}: {v.message}" for v in violations)
        raise BankError(f"invalid {schema_name} document: {lines}", violations)
    return doc


def load_bank(data: bytes | str) -> QuizBank:
    """Parse and validate a bank file, mapping it onto domain types."""
    doc = _validated(data, "quizbank")
    root = doc.root
    questions: list[Question] = []
    seen_ids: set[str] = set()
    for q_elem in root.elements("question"):
        qid = q_elem.get("id") or ""
        if qid in seen_ids:
            raise BankError(f"duplicate question id '{qid}'")
        seen_ids.add(qid)
        points = int(q_elem.get("points") or "0")
        if points < 1:
            raise BankError(f"question '{qid}': points must be >= 1")
        choices: list[Choice] = []
        choice_ids: set[str] = set()
        for c_elem in q_elem.elements("choice"):
            cid = c_elem.get("id") or ""
            if cid in choice_ids:
                raise BankError(f"question '{qid}': duplicate choice id '{cid}'")
            choice_ids.add(cid)
            choices.append(Choice(cid, c_elem.text_content()))
        answer = next(q_elem.elements("answer"))
        text = next(q_elem.elements("text"))
        questions.append(Question(
            id=qid,
            kind=q_elem.get("type") or SINGLE,
            points=points,
            text=text.text_content(),
            choices=tuple(choices),
            key_digest=answer.get("digest") or "",
        ))
    return QuizBank(
        subject=root.get("subject") or "",
        version=int(root.get("version") or "0"),
        questions=tuple(questions),
    )


def load_config(data: bytes | str) -> TestConfig:
    doc = _validated(data, "testconfig")
    root = doc.root
    count = int(root.get("questions") or "0")
    if count < 1:
        raise BankError("testconfig: questions must be >= 1")
    return TestConfig(
        id=root.get("id") or "",
        bank_path=root.get("bank") or "",
        question_count=count,
        shuffle=(root.get("shuffle") == "true"),
    )


# --- authoring --------------------------------------------------------------

class AuthoringError(Exception):
    """Problem in an authoring-format bank (plaintext ``key`` attributes)."""


def _copy_element(node: Element) -> Element:
    children: list[Element | Text] = [
        _copy_element(c) if isinstance(c, Element) else Text(c.content)
        for c in node.children
    ]
    return Element(node.name, list(node.attributes), children)


def hash_answers(plaintext_bank: XmlDocument) -> XmlDocument:
    """Turn an authoring bank (``<answer key="b,d"/>``) into the
    publishable form (``<answer digest="..."/>``).  Every key id must
    name a declared choice of its question; single-choice questions take
    exactly one key id."""
    root = _copy_element(plaintext_bank.root)
    for q_elem in root.elements("question"):
        qid = q_elem.get("id") or "?"
        choice_ids = {c.get("id") for c in q_elem.elements("choice")}
        answers = list(q_elem.elements("answer"))
        if len(answers) != 1:
            raise AuthoringError(f"question '{qid}': expected one <answer>")
        answer = answers[0]
        key = answer.get("key")
        if key is None:
            raise AuthoringError(f"question '{qid}': <answer> has no key attribute")
        key_ids = key.split(",")
        for kid in key_ids:
            if kid not in choice_ids:
                raise AuthoringError(
                    f"question '{qid}': key names unknown choice '{kid}'")
        if q_elem.get("type") == SINGLE and len(set(key_ids)) != 1:
            raise AuthoringError(
                f"question '{qid}': single-choice question needs exactly "
                f"one key id, got {sorted(set(key_ids))}")
        answer.attributes = [
            (("digest", answer_digest(qid, key_ids)) if name == "key" else (name, value))
            for name, value in answer.attributes
        ]
    return XmlDocument(root)


# --- selection and grading ----------------------------------------------------

def select_questions(bank: QuizBank, config: TestConfig, seed: int) -> list[Question]:
    """The questions one sitting presents, in presentation order.
    Deterministic for a fixed (bank, config, seed)."""
    if config.question_count > len(bank.questions):
        raise ValueError(
            f"config asks for {config.question_count} questions, bank has "
            f"{len(bank.questions)}")
    if not config.shuffle:
        return list(bank.questions[:config.question_count])
    order = shuffled(bank.questions, SplitMix64(seed))
    return order[:config.question_count]


class GradingError(Exception):
    pass


def grade(questions: Sequence[Question],
          answers: Mapping[str, Iterable[str]]) -> ScoreReport:
    """Score one sitting.  A question is correct iff the digest of the
    submitted selection equals its key digest; unanswered counts as
    incorrect; points are all-or-nothing."""
    presented = {q.id for q in questions}
    for answered_id in answers:
        if answered_id not in presented:
            raise GradingError(f"answer for unpresented question '{answered_id}'")

    per_question: list[QuestionResult] = []
    points = 0
    max_points = 0
    for q in questions:
        max_points += q.points
        selected = _sorted_ids(answers.get(q.id, ()))
        correct = bool(selected) and answer_digest(q.id, selected) == q.key_digest
        earned = q.points if correct else 0
        points += earned
        per_question.append(QuestionResult(q.id, selected, correct, earned))

    if max_points:
        percent = (Decimal(points) * 100 / Decimal(max_points)).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_UP)
    else:
        percent = Decimal("0.00")
    return ScoreReport(tuple(per_question), points, max_points, percent)


__all__ = [
    "SINGLE", "MULTI", "BankError", "Choice", "Question", "QuizBank",
    "TestConfig", "QuestionResult", "ScoreReport", "AuthoringError",
    "load_bank", "load_config", "hash_answers", "select_questions",
    "GradingError", "grade",
]
