"""Declarative schema language and validator for the suite's XML files.

A schema declares, per element, its attributes (name, type, required)
and one content model: empty, typed text, or a flat ordered sequence of
child references with min/max occurrence.  Validation walks the document
once in document order and collects every violation; it never stops at
the first finding.  Schema files are themselves XML, parsed by
:mod:`quizwright.xmlcore`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .xmlcore import Element, Text, XmlDocument

VALUE_TYPES = ("string", "integer", "hex32", "id-token", "enum")
TEXT_TYPES = ("string", "integer", "hex32", "id-token")

# violation rule codes
MISSING_ATTR = "MissingAttr"
BAD_ATTR_TYPE = "BadAttrType"
UNKNOWN_ATTR = "UnknownAttr"
UNKNOWN_ELEMENT = "UnknownElement"
CARDINALITY = "Cardinality"
BAD_CONTENT = "BadContent"
BAD_ROOT = "BadRoot"

_INTEGER_RE = re.compile(r"-?[0-9]+\Z")
_HEX32_RE = re.compile(r"[0-9a-f]{32}\Z")
_ID_TOKEN_RE = re.compile(r"[A-Za-z0-9_-]+\Z")


class SchemaError(Exception):
    """Structural problem in a schema file itself."""


@dataclass(frozen=True)
class AttrDecl:
    name: str
    value_type: str
    required: bool
    enum_values: tuple[str, ...] = ()


@dataclass(frozen=True)
class EmptyContent:
    pass


@dataclass(frozen=True)
class TextContent:
    value_type: str


@dataclass(frozen=True)
class ChildRef:
    name: str
    min: int
    max: int | None  # None = unbounded


@dataclass(frozen=True)
class ChildSequence:
    refs: tuple[ChildRef, ...]


Content = Union[EmptyContent, TextContent, ChildSequence]


@dataclass(frozen=True)
class ElementDecl:
    name: str
    attributes: tuple[AttrDecl, ...]
    content: Content


@dataclass
class Schema:
    root: str
    declarations: dict[str, ElementDecl]


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str


def check_value(value: str, value_type: str, enum_values: tuple[str, ...] = ()) -> bool:
    if value_type == "string":
        return True
    if value_type == "integer":
        return bool(_INTEGER_RE.match(value))
    if value_type == "hex32":
        return bool(_HEX32_RE.match(value))
    if value_type == "id-token":
        return bool(_ID_TOKEN_RE.match(value))
    if value_type == "enum":
        return value in enum_values
    raise ValueError(f"unknown value type {value_type!r}")


# --- schema loading ---------------------------------------------------------

def _child_elements(node: Element, context: str) -> list[Element]:
    out = []
    for child in node.children:
        if isinstance(child, Text):
            if child.content.strip():
                raise SchemaError(f"unexpected text inside {context}")
            continue
        out.append(child)
    return out


def _require(node: Element, attr: str, context: str) -> str:
    value = node.get(attr)
    if value is None:
        raise SchemaError(f"{context}: missing '{attr}' attribute")
    return value


def _load_attribute(node: Element, owner: str) -> AttrDecl:
    name = _require(node, "name", f"attribute in element '{owner}'")
    value_type = _require(node, "type", f"attribute '{name}' of '{owner}'")
    if value_type not in VALUE_TYPES:
        raise SchemaError(f"attribute '{name}' of '{owner}': "
                          f"unknown type '{value_type}'")
    required = _require(node, "required", f"attribute '{name}' of '{owner}'")
    if required not in ("true", "false"):
        raise SchemaError(f"attribute '{name}' of '{owner}': "
                          f"required must be 'true' or 'false'")
    values: list[str] = []
    for child in _child_elements(node, f"attribute '{name}' of '{owner}'"):
        if child.name != "enumeration":
            raise SchemaError(f"attribute '{name}' of '{owner}': "
                              f"unexpected '{child.name}'")
        values.append(_require(child, "value", f"enumeration under '{name}'"))
    if value_type == "enum":
        if not values:
            raise SchemaError(f"attribute '{name}' of '{owner}': "
                              f"enum type needs enumeration values")
        if len(set(values)) != len(values):
            raise SchemaError(f"attribute '{name}' of '{owner}': "
                              f"duplicate enumeration values")
    elif values:
        raise SchemaError(f"attribute '{name}' of '{owner}': "
                          f"enumeration values only allowed for enum type")
    return AttrDecl(name, value_type, required == "true", tuple(values))


def _load_child_ref(node: Element, owner: str) -> ChildRef:
    ref = _require(node, "ref", f"child reference in '{owner}'")
    raw_min = _require(node, "min", f"child '{ref}' of '{owner}'")
    raw_max = _require(node, "max", f"child '{ref}' of '{owner}'")
    try:
        lo = int(raw_min)
    except ValueError:
        raise SchemaError(f"child '{ref}' of '{owner}': bad min '{raw_min}'") from None
    if raw_max == "unbounded":
        hi: int | None = None
    else:
        try:
            hi = int(raw_max)
        except ValueError:
            raise SchemaError(f"child '{ref}' of '{owner}': bad max '{raw_max}'") from None
        if hi < 1:
            raise SchemaError(f"child '{ref}' of '{owner}': max must be positive")
        if lo > hi:
            raise SchemaError(f"child '{ref}' of '{owner}': min {lo} > max {hi}")
    if lo < 0:
        raise SchemaError(f"child '{ref}' of '{owner}': min must be >= 0")
    return ChildRef(ref, lo, hi)


def _load_element(node: Element) -> ElementDecl:
    name = _require(node, "name", "element declaration")
    attrs: list[AttrDecl] = []
    content: Content | None = None

    def set_content(c: Content) -> None:
        nonlocal content
        if content is not None:
            raise SchemaError(f"element '{name}': multiple content models")
        content = c

    for child in _child_elements(node, f"element '{name}'"):
        if child.name == "attribute":
            attrs.append(_load_attribute(child, name))
        elif child.name == "empty":
            set_content(EmptyContent())
        elif child.name == "text":
            text_type = _require(child, "type", f"text content of '{name}'")
            if text_type not in TEXT_TYPES:
                raise SchemaError(f"element '{name}': bad text type '{text_type}'")
            set_content(TextContent(text_type))
        elif child.name == "children":
            refs = tuple(
                _load_child_ref(ref_node, name)
                for ref_node in _child_elements(child, f"children of '{name}'"))
            set_content(ChildSequence(refs))
        else:
            raise SchemaError(f"element '{name}': unexpected '{child.name}'")
    if content is None:
        raise SchemaError(f"element '{name}': missing content model")
    if len({a.name for a in attrs}) != len(attrs):
        raise SchemaError(f"element '{name}': duplicate attribute declaration")
    return ElementDecl(name, tuple(attrs), content)


def load_schema(doc: XmlDocument) -> Schema:
    """Build a :class:`Schema` from a parsed schema document; raises
    :class:`SchemaError` naming the offending declaration."""
    root = doc.root
    if root.name != "schema":
        raise SchemaError(f"expected <schema> root, got <{root.name}>")
    schema_root = _require(root, "root", "<schema>")
    declarations: dict[str, ElementDecl] = {}
    for node in _child_elements(root, "<schema>"):
        if node.name != "element":
            raise SchemaError(f"unexpected '{node.name}' under <schema>")
        decl = _load_element(node)
        if decl.name in declarations:
            raise SchemaError(f"element '{decl.name}' declared twice")
        declarations[decl.name] = decl
    if schema_root not in declarations:
        raise SchemaError(f"root element '{schema_root}' is not declared")
    for decl in declarations.values():
        if isinstance(decl.content, ChildSequence):
            for ref in decl.content.refs:
                if ref.name not in declarations:
                    raise SchemaError(
                        f"element '{decl.name}' references undeclared "
                        f"element '{ref.name}'")
    return Schema(schema_root, declarations)


# --- validation -------------------------------------------------------------

def _step(parent: Element, child: Element) -> str:
    same = [c for c in parent.elements(child.name)]
    if len(same) == 1:
        return child.name
    return f"{child.name}[{same.index(child) + 1}]"


class _Validator:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.violations: list[Violation] = []

    def add(self, path: str, rule: str, message: str) -> None:
        self.violations.append(Violation(path, rule, message))

    def check_attributes(self, node: Element, decl: ElementDecl, path: str) -> None:
        declared = {a.name: a for a in decl.attributes}
        present = {name for name, _ in node.attributes}
        for attr in decl.attributes:
            if attr.name not in present:
                if attr.required:
                    self.add(path, MISSING_ATTR,
                             f"missing required attribute '{attr.name}'")
                continue
            value = node.get(attr.name) or ""
            if not check_value(value, attr.value_type, attr.enum_values):
                self.add(path, BAD_ATTR_TYPE,
                         f"attribute '{attr.name}' value {value!r} is not a "
                         f"valid {attr.value_type}")
        for name, _ in node.attributes:
            if name not in declared:
                self.add(path, UNKNOWN_ATTR, f"unknown attribute '{name}'")

    def check_content(self, node: Element, decl: ElementDecl, path: str) -> None:
        content = decl.content
        child_elems = list(node.elements())
        non_ws_text = any(
            isinstance(c, Text) and c.content.strip() for c in node.children)

        if isinstance(content, EmptyContent):
            if child_elems or non_ws_text:
                self.add(path, BAD_CONTENT,
                         f"element '{node.name}' must be empty")
            return

        if isinstance(content, TextContent):
            if child_elems:
                self.add(path, BAD_CONTENT,
                         f"element '{node.name}' allows only text content")
                return
            value = node.text_content()
            if content.value_type != "string" and not check_value(
                    value, content.value_type):
                self.add(path, BAD_CONTENT,
                         f"text of '{node.name}' is not a valid "
                         f"{content.value_type}")
            return

        # ordered child sequence; whitespace-only text is tolerated
        if non_ws_text:
            self.add(path, BAD_CONTENT,
                     f"element '{node.name}' does not allow character data")
        allowed = {ref.name for ref in content.refs}
        idx = 0
        for ref in content.refs:
            count = 0
            while (idx < len(child_elems)
                   and child_elems[idx].name == ref.name
                   and (ref.max is None or count < ref.max)):
                count += 1
                idx += 1
            if (ref.max is not None and idx < len(child_elems)
                    and child_elems[idx].name == ref.name):
                surplus = 0
                while idx < len(child_elems) and child_elems[idx].name == ref.name:
                    surplus += 1
                    idx += 1
                self.add(path, CARDINALITY,
                         f"element '{ref.name}' occurs {count + surplus} "
                         f"times, at most {ref.max} allowed")
            if count < ref.min:
                self.add(path, CARDINALITY,
                         f"element '{ref.name}' occurs {count} times, at "
                         f"least {ref.min} required")
        for child in child_elems[idx:]:
            if child.name in allowed:
                self.add(path, CARDINALITY,
                         f"element '{child.name}' not allowed at this position")
            elif child.name in self.schema.declarations:
                self.add(path, UNKNOWN_ELEMENT,
                         f"element '{child.name}' not allowed inside "
                         f"'{node.name}'")
            else:
                self.add(path, UNKNOWN_ELEMENT,
                         f"undeclared element '{child.name}'")

    def visit(self, node: Element, path: str) -> None:
        decl = self.schema.declarations.get(node.name)
        if decl is None:
            return
        self.check_attributes(node, decl, path)
        self.check_content(node, decl, path)
        for child in node.elements():
            if child.name in self.schema.declarations:
                self.visit(child, f"{path}/{_step(node, child)}")

    def run(self, doc: XmlDocument) -> list[Violation]:
        root = doc.root
        if root.name != self.schema.root:
            self.add(root.name, BAD_ROOT,
                     f"expected root '{self.schema.root}', got '{root.name}'")
            if root.name not in self.schema.declarations:
                return self.violations
        self.visit(root, root.name)
        return self.violations


def validate(doc: XmlDocument, schema: Schema) -> list[Violation]:
    """Return every violation found in one document-order walk; an empty
    list means the document is valid."""
    return _Validator(schema).run(doc)
