from __future__ import annotations

import random
import string
from pathlib import Path

import pytest

from quizwright import xmlcore

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixture_bank_bytes() -> bytes:
    return (DATA_DIR / "banks" / "db.xml").read_bytes()


@pytest.fixture
def fixture_authoring_bytes() -> bytes:
    return (DATA_DIR / "banks" / "db.authoring.xml").read_bytes()


# --- random well-formed document corpus --------------------------------------

_NAME_ALPHABET = string.ascii_lowercase + "_"
_TEXT_POOL = "abc xyz 0189 <>&\"' \t\néă✓"


def _rand_name(rnd: random.Random) -> str:
    first = rnd.choice(_NAME_ALPHABET)
    rest = "".join(rnd.choice(_NAME_ALPHABET + "0123456789.-")
                   for _ in range(rnd.randrange(0, 6)))
    return first + rest


def _rand_text(rnd: random.Random) -> str:
    return "".join(rnd.choice(_TEXT_POOL) for _ in range(rnd.randrange(1, 12)))


def _write_text(out: list[str], value: str) -> None:
    out.append(value.replace("&", "&amp;").replace("<", "&lt;")
               .replace(">", "&gt;"))


def _write_element(out: list[str], rnd: random.Random, depth: int) -> None:
    name = _rand_name(rnd)
    out.append(f"<{name}")
    used: set[str] = set()
    for _ in range(rnd.randrange(0, 3)):
        attr = _rand_name(rnd)
        if attr in used:
            continue
        used.add(attr)
        value = (_rand_text(rnd).replace("&", "&amp;").replace("<", "&lt;")
                 .replace('"', "&quot;"))
        out.append(f' {attr}="{value}"')
    n_children = 0 if depth >= 4 else rnd.randrange(0, 4)
    if n_children == 0 and rnd.random() < 0.5:
        out.append("/>")
        return
    out.append(">")
    for _ in range(n_children):
        kind = rnd.random()
        if kind < 0.45:
            _write_element(out, rnd, depth + 1)
        elif kind < 0.8:
            _write_text(out, _rand_text(rnd))
        else:
            out.append(f"<!-- {_rand_text(rnd).replace('-', '_')} -->")
    if rnd.random() < 0.4:
        _write_text(out, _rand_text(rnd))
    out.append(f"</{name}>")


def random_document(rnd: random.Random) -> bytes:
    """One random well-formed document in the supported dialect."""
    out: list[str] = []
    if rnd.random() < 0.5:
        out.append('<?xml version="1.0" encoding="UTF-8"?>\n')
    if rnd.random() < 0.2:
        out.append("<!-- prolog -->\n")
    _write_element(out, rnd, 0)
    if rnd.random() < 0.2:
        out.append("\n<!-- epilog -->")
    return "".join(out).encode("utf-8")


def corpus(count: int, seed: int = 20260809) -> list[bytes]:
    rnd = random.Random(seed)
    return [random_document(rnd) for _ in range(count)]


# --- independent tree builder (oracle for event/tree equivalence) ----------

def build_tree_from_events(events: list[xmlcore.XmlEvent]) -> xmlcore.XmlDocument:
    """Oracle: a second, deliberately simple stack machine that applies
    the documented tree rules (drop comments, merge adjacent text)."""
    stack: list[xmlcore.Element] = []
    root: xmlcore.Element | None = None
    for event in events:
        if isinstance(event, xmlcore.StartElement):
            element = xmlcore.Element(event.name, list(event.attributes), [])
            if stack:
                stack[-1].children.append(element)
            else:
                root = element
            stack.append(element)
        elif isinstance(event, xmlcore.EndElement):
            stack.pop()
        elif isinstance(event, xmlcore.Characters):
            if not stack or not event.text:
                continue
            children = stack[-1].children
            if children and isinstance(children[-1], xmlcore.Text):
                children[-1] = xmlcore.Text(children[-1].content + event.text)
            else:
                children.append(xmlcore.Text(event.text))
    assert root is not None
    return xmlcore.XmlDocument(root)
