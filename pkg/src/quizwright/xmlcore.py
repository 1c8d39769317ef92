"""Event-based and tree-based XML processing for the quiz data files.

Two parsing interfaces share one scanner: ``parse_events`` streams
start/end/text events to a consumer without materializing the document,
and ``parse_tree`` loads the whole document into navigable nodes.
``serialize`` writes a tree back out in a fixed canonical form.

The dialect is a deliberate subset: elements, attributes, character
data, comments, an XML declaration, the five predefined entities and
decimal/hex character references.  UTF-8 only (a BOM is accepted and
skipped).  No DTD, no processing instructions, no CDATA, no namespaces.
Whitespace in character data is preserved verbatim, never normalized.

Trees produced by ``parse_tree`` are canonical: comments are dropped,
adjacent character runs are merged into one ``Text`` node and empty text
never appears.  Round-trip identity (``parse_tree(serialize(d)) == d``)
holds for canonical trees.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Union

MAX_DEPTH = 256

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")
_PATH_STEP_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_.\-]*)(?:\[([0-9]+)\])?\Z")
_DECL_RE = re.compile(r"<\?xml\s[^?]*\?>")
_DECL_ATTR_RE = re.compile(r"([A-Za-z]+)\s*=\s*(?:\"([^\"]*)\"|'([^']*)')")

_PREDEFINED_ENTITIES = {
    "amp": "&",
    "lt": "<",
    "gt": ">",
    "quot": '"',
    "apos": "'",
}

_TEXT_ESCAPES = {ord("&"): "&amp;", ord("<"): "&lt;", ord(">"): "&gt;"}
_ATTR_ESCAPES = {**_TEXT_ESCAPES, ord('"'): "&quot;"}


class ErrorKind(enum.Enum):
    SYNTAX = "Syntax"
    NESTING = "Nesting"
    DUPLICATE_ATTRIBUTE = "DuplicateAttribute"
    BAD_ENTITY = "BadEntity"
    ENCODING = "Encoding"
    DEPTH_LIMIT = "DepthLimit"


class ParseError(Exception):
    """Raised at the first ill-formed construct; no events follow it."""

    def __init__(self, kind: ErrorKind, line: int, column: int, message: str):
        super().__init__(f"{kind.value} at {line}:{column}: {message}")
        self.kind = kind
        self.line = line
        self.column = column
        self.message = message


# --- event stream types ---------------------------------------------------

@dataclass(frozen=True)
class StartDocument:
    pass


@dataclass(frozen=True)
class EndDocument:
    pass


@dataclass(frozen=True)
class StartElement:
    name: str
    attributes: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class EndElement:
    name: str


@dataclass(frozen=True)
class Characters:
    text: str


@dataclass(frozen=True)
class Comment:
    text: str


XmlEvent = Union[StartDocument, EndDocument, StartElement, EndElement,
                 Characters, Comment]


# --- tree types -------------------------------------------------------------

@dataclass
class Text:
    content: str


@dataclass
class Element:
    name: str
    attributes: list[tuple[str, str]] = field(default_factory=list)
    children: list["XmlNode"] = field(default_factory=list)

    def get(self, attr_name: str, default: str | None = None) -> str | None:
        for name, value in self.attributes:
            if name == attr_name:
                return value
        return default

    def set(self, attr_name: str, value: str) -> None:
        """Set an attribute, replacing in place to keep its position."""
        for i, (name, _) in enumerate(self.attributes):
            if name == attr_name:
                self.attributes[i] = (attr_name, value)
                return
        self.attributes.append((attr_name, value))

    def elements(self, name: str | None = None) -> Iterator["Element"]:
        for child in self.children:
            if isinstance(child, Element) and (name is None or child.name == name):
                yield child

    def text_content(self) -> str:
        return "".join(c.content for c in self.children if isinstance(c, Text))


XmlNode = Union[Element, Text]


@dataclass
class XmlDocument:
    root: Element


class PathSyntaxError(ValueError):
    """Malformed ``select_path`` expression."""


# --- scanner ----------------------------------------------------------------

def _location(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    last_nl = text.rfind("\n", 0, pos)
    return line, pos - last_nl


def _byte_location(data: bytes, offset: int) -> tuple[int, int]:
    # '\n' bytes never occur inside multi-byte UTF-8 sequences
    line = data.count(b"\n", 0, offset) + 1
    last_nl = data.rfind(b"\n", 0, offset)
    column = len(data[last_nl + 1:offset].decode("utf-8", "replace")) + 1
    return line, column


class _Scanner:
    """Single-pass scanner over the decoded document text."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.n = len(text)

    def error(self, kind: ErrorKind, message: str, pos: int | None = None) -> ParseError:
        line, column = _location(self.text, self.pos if pos is None else pos)
        return ParseError(kind, line, column, message)

    def skip_whitespace(self) -> int:
        start = self.pos
        while self.pos < self.n and self.text[self.pos] in " \t\r\n":
            self.pos += 1
        return self.pos - start

    def read_name(self, what: str) -> str:
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise self.error(ErrorKind.SYNTAX, f"expected {what}")
        self.pos = m.end()
        return m.group()

    def expect(self, ch: str, message: str) -> None:
        if self.pos >= self.n or self.text[self.pos] != ch:
            raise self.error(ErrorKind.SYNTAX, message)
        self.pos += 1

    def read_entity(self) -> str:
        """Consume one reference starting at '&' and return its expansion."""
        start = self.pos
        end = self.text.find(";", start + 1, start + 32)
        if end < 0:
            raise self.error(ErrorKind.BAD_ENTITY, "unterminated entity reference", start)
        body = self.text[start + 1:end]
        self.pos = end + 1
        if body.startswith("#"):
            digits = body[1:]
            try:
                if digits[:1] in ("x", "X"):
                    code = int(digits[1:], 16)
                else:
                    code = int(digits, 10)
            except ValueError:
                code = -1
            if code < 1 or code > 0x10FFFF or 0xD800 <= code <= 0xDFFF:
                raise self.error(
                    ErrorKind.BAD_ENTITY, f"invalid character reference '&{body};'", start)
            return chr(code)
        expansion = _PREDEFINED_ENTITIES.get(body)
        if expansion is None:
            raise self.error(
                ErrorKind.BAD_ENTITY, f"unknown entity '&{body};'", start)
        return expansion

    def read_text_run(self) -> str:
        """Character data up to the next '<'; entities expanded in place."""
        parts: list[str] = []
        while self.pos < self.n:
            ch = self.text[self.pos]
            if ch == "<":
                break
            if ch == "&":
                parts.append(self.read_entity())
            else:
                nxt_lt = self.text.find("<", self.pos)
                nxt_amp = self.text.find("&", self.pos)
                stop = self.n
                if nxt_lt >= 0:
                    stop = nxt_lt
                if 0 <= nxt_amp < stop:
                    stop = nxt_amp
                parts.append(self.text[self.pos:stop])
                self.pos = stop
        return "".join(parts)

    def read_attribute_value(self) -> str:
        quote = self.text[self.pos:self.pos + 1]
        if quote not in ('"', "'"):
            raise self.error(ErrorKind.SYNTAX, "expected quoted attribute value")
        self.pos += 1
        parts: list[str] = []
        while True:
            if self.pos >= self.n:
                raise self.error(ErrorKind.SYNTAX, "unterminated attribute value")
            ch = self.text[self.pos]
            if ch == quote:
                self.pos += 1
                return "".join(parts)
            if ch == "<":
                raise self.error(ErrorKind.SYNTAX, "'<' not allowed in attribute value")
            if ch == "&":
                parts.append(self.read_entity())
            else:
                parts.append(ch)
                self.pos += 1

    def read_comment(self) -> str:
        # positioned on '<!--'
        start = self.pos
        self.pos += 4
        end = self.text.find("-->", self.pos)
        if end < 0:
            raise self.error(ErrorKind.SYNTAX, "unterminated comment", start)
        body = self.text[self.pos:end]
        self.pos = end + 3
        return body


def _scan(data: bytes | str) -> Iterator[XmlEvent]:
    if isinstance(data, str):
        raw = data.encode("utf-8")
    else:
        raw = bytes(data)
    if raw.startswith(b"\xef\xbb\xbf"):
        raw = raw[3:]
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        line, column = _byte_location(raw, exc.start)
        raise ParseError(ErrorKind.ENCODING, line, column,
                         "input is not valid UTF-8") from None

    sc = _Scanner(text)
    yield StartDocument()

    # XML declaration is only recognized at the very start
    if text.startswith("<?xml"):
        m = _DECL_RE.match(text)
        if not m:
            raise sc.error(ErrorKind.SYNTAX, "malformed XML declaration")
        for key, dq, sq in _DECL_ATTR_RE.findall(m.group()):
            if key == "encoding" and (dq or sq).lower() != "utf-8":
                raise sc.error(ErrorKind.ENCODING,
                               f"unsupported encoding '{dq or sq}'")
        sc.pos = m.end()

    stack: list[str] = []
    seen_root = False

    while True:
        if not stack:
            sc.skip_whitespace()
        if sc.pos >= sc.n:
            break
        ch = sc.text[sc.pos]
        if ch != "<":
            if stack:
                run = sc.read_text_run()
                if run:
                    yield Characters(run)
                continue
            raise sc.error(ErrorKind.SYNTAX, "character data outside root element")

        tag_pos = sc.pos
        nxt = sc.text[sc.pos + 1:sc.pos + 2]
        if nxt == "!":
            if sc.text.startswith("<!--", sc.pos):
                yield Comment(sc.read_comment())
                continue
            raise sc.error(ErrorKind.SYNTAX,
                           "unsupported markup (no DTD or CDATA)", tag_pos)
        if nxt == "?":
            raise sc.error(ErrorKind.SYNTAX,
                           "processing instructions are not supported", tag_pos)
        if nxt == "/":
            sc.pos += 2
            name = sc.read_name("element name in close tag")
            sc.skip_whitespace()
            sc.expect(">", "expected '>' after close tag name")
            if not stack:
                raise ParseError(ErrorKind.NESTING, *_location(text, tag_pos),
                                 f"close tag '</{name}>' with no open element")
            if stack[-1] != name:
                raise ParseError(ErrorKind.NESTING, *_location(text, tag_pos),
                                 f"close tag '</{name}>' does not match open "
                                 f"element '{stack[-1]}'")
            stack.pop()
            yield EndElement(name)
            continue

        # start tag
        if not stack and seen_root:
            raise sc.error(ErrorKind.SYNTAX, "multiple root elements", tag_pos)
        sc.pos += 1
        name = sc.read_name("element name")
        attrs: list[tuple[str, str]] = []
        seen_names: set[str] = set()
        while True:
            skipped = sc.skip_whitespace()
            if sc.pos >= sc.n:
                raise sc.error(ErrorKind.SYNTAX, f"unterminated tag '<{name}'")
            ch = sc.text[sc.pos]
            if ch == ">":
                sc.pos += 1
                self_closing = False
                break
            if ch == "/":
                sc.pos += 1
                sc.expect(">", "expected '>' after '/'")
                self_closing = True
                break
            if not skipped:
                raise sc.error(ErrorKind.SYNTAX, "whitespace required before attribute")
            attr_pos = sc.pos
            attr_name = sc.read_name("attribute name")
            if attr_name in seen_names:
                raise ParseError(ErrorKind.DUPLICATE_ATTRIBUTE,
                                 *_location(text, attr_pos),
                                 f"duplicate attribute '{attr_name}'")
            seen_names.add(attr_name)
            sc.skip_whitespace()
            sc.expect("=", f"expected '=' after attribute '{attr_name}'")
            sc.skip_whitespace()
            attrs.append((attr_name, sc.read_attribute_value()))

        if len(stack) >= MAX_DEPTH:
            raise ParseError(ErrorKind.DEPTH_LIMIT, *_location(text, tag_pos),
                             f"element nesting exceeds {MAX_DEPTH}")
        seen_root = True
        yield StartElement(name, tuple(attrs))
        if self_closing:
            yield EndElement(name)
        else:
            stack.append(name)

    if stack:
        raise sc.error(ErrorKind.NESTING,
                       f"unexpected end of input: unclosed element '{stack[-1]}'")
    if not seen_root:
        raise sc.error(ErrorKind.SYNTAX, "no root element")
    yield EndDocument()


def parse_events(data: bytes | str, sink: Callable[[XmlEvent], object]) -> None:
    """Feed the event stream for ``data`` to ``sink``, one event at a time.

    Raises :class:`ParseError` at the first ill-formed construct; events
    already delivered are not retracted, none follow the error.
    """
    for event in _scan(data):
        sink(event)


# --- tree building ----------------------------------------------------------

class _TreeBuilder:
    """Builds the canonical tree: comments dropped, text runs merged."""

    def __init__(self) -> None:
        self.document: XmlDocument | None = None
        self._root: Element | None = None
        self._stack: list[Element] = []

    def __call__(self, event: XmlEvent) -> None:
        if isinstance(event, StartElement):
            node = Element(event.name, list(event.attributes))
            if self._stack:
                self._stack[-1].children.append(node)
            else:
                self._root = node
            self._stack.append(node)
        elif isinstance(event, EndElement):
            self._stack.pop()
        elif isinstance(event, Characters):
            if not self._stack:
                return
            siblings = self._stack[-1].children
            if siblings and isinstance(siblings[-1], Text):
                siblings[-1].content += event.text
            elif event.text:
                siblings.append(Text(event.text))
        elif isinstance(event, EndDocument):
            assert self._root is not None
            self.document = XmlDocument(self._root)


def parse_tree(data: bytes | str) -> XmlDocument:
    """Load the whole document as a tree of :class:`Element`/:class:`Text`."""
    builder = _TreeBuilder()
    parse_events(data, builder)
    assert builder.document is not None
    return builder.document


# --- serialization ----------------------------------------------------------

def escape_text(value: str) -> str:
    return value.translate(_TEXT_ESCAPES)


def escape_attribute(value: str) -> str:
    return value.translate(_ATTR_ESCAPES)


def serialize(doc: XmlDocument) -> bytes:
    """Write ``doc`` as UTF-8 with the fixed declaration line, escaping
    ``& < >`` in text (plus ``\"`` in attribute values), preserving
    attribute order, emitting empty elements as ``<name/>``, no indentation."""
    out: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>\n']
    work: list[XmlNode | str] = [doc.root]
    while work:
        item = work.pop()
        if isinstance(item, str):
            out.append(item)
        elif isinstance(item, Text):
            out.append(escape_text(item.content))
        else:
            attrs = "".join(
                f' {name}="{escape_attribute(value)}"'
                for name, value in item.attributes)
            if item.children:
                out.append(f"<{item.name}{attrs}>")
                work.append(f"</{item.name}>")
                work.extend(reversed(item.children))
            else:
                out.append(f"<{item.name}{attrs}/>")
    return "".join(out).encode("utf-8")


# --- path selection ---------------------------------------------------------

def select_path(doc: XmlDocument, path: str) -> list[Element]:
    """Select elements by a slash path of names, each optionally ``[i]``
    (1-based, positional among same-named siblings), e.g.
    ``quizbank/question[2]/text``.  Returns matches in document order;
    an empty list when nothing matches."""
    if not path or path.startswith("/") or path.endswith("/"):
        raise PathSyntaxError(f"malformed path: {path!r}")
    steps: list[tuple[str, int | None]] = []
    for raw_step in path.split("/"):
        m = _PATH_STEP_RE.match(raw_step)
        if not m:
            raise PathSyntaxError(f"malformed path step: {raw_step!r}")
        index = int(m.group(2)) if m.group(2) else None
        if index == 0:
            raise PathSyntaxError("path indexes are 1-based")
        steps.append((m.group(1), index))

    name, index = steps[0]
    current: list[Element] = [doc.root] if doc.root.name == name else []
    if index is not None and index != 1:
        current = []
    for name, index in steps[1:]:
        matched: list[Element] = []
        for node in current:
            found = list(node.elements(name))
            if index is None:
                matched.extend(found)
            elif index <= len(found):
                matched.append(found[index - 1])
        current = matched
    return current
