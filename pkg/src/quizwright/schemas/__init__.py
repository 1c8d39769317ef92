"""The four schema files shipped with the suite, preloaded on demand."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..xmlcore import parse_tree
from ..xmlschema import Schema, load_schema

NAMES = ("quizbank", "testconfig", "users", "result")


def schema_bytes(name: str) -> bytes:
    if name not in NAMES:
        raise KeyError(f"no shipped schema named {name!r}")
    return (resources.files(__package__) / f"{name}.schema.xml").read_bytes()


@lru_cache(maxsize=None)
def shipped(name: str) -> Schema:
    """Load one of the shipped schemas by short name."""
    return load_schema(parse_tree(schema_bytes(name)))
