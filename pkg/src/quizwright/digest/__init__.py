"""128-bit message digests and answer-key derivation.

The MD5 kernel exists twice: a compiled extension for speed and a pure
Python fallback.  The compiled one is picked at import when available;
set ``QUIZWRIGHT_MD5=pure`` to force the fallback (the benchmark and the
test suite exercise both).

Answer keys are digests of the canonical string
``"<question_id>:<sorted,choice,ids>"`` in lowercase hex, so a submitted
selection can be checked without storing the plaintext key.  MD5 is kept
for fidelity with the stored file format; it is not collision resistant
and tiny choice sets are brute-forceable, so treat the digests as an
obfuscation layer, not as cryptographic protection.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterable

from . import _md5py

if os.environ.get("QUIZWRIGHT_MD5", "").lower() == "pure":
    _impl = _md5py
    BACKEND = "pure"
else:
    try:
        from . import _md5core as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _md5py
        BACKEND = "pure"

_HEX32_RE = re.compile(r"[0-9a-f]{32}\Z")


@dataclass(frozen=True)
class Digest128:
    """A 128-bit digest; ``value`` is exactly 16 bytes."""

    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != 16:
            raise ValueError(f"digest must be 16 bytes, got {len(self.value)}")


def md5(message: bytes | str) -> Digest128:
    """MD5 of ``message`` (text is digested as its UTF-8 bytes)."""
    if isinstance(message, str):
        message = message.encode("utf-8")
    return Digest128(_impl.md5_bytes(message))


def to_hex(digest: Digest128) -> str:
    """32 lowercase hex characters, byte 0 first."""
    return digest.value.hex()


def from_hex(text: str) -> Digest128:
    if not _HEX32_RE.match(text):
        raise ValueError(f"not a 32-char lowercase hex digest: {text!r}")
    return Digest128(bytes.fromhex(text))


def answer_digest(question_id: str, selected: Iterable[str]) -> str:
    """Hex digest of a selection, canonicalized so that the order the
    choices were picked in never matters: ids are deduplicated, sorted
    bytewise ascending and joined with single commas, prefixed with the
    question id and ':'."""
    ids = sorted(set(selected), key=lambda s: s.encode("utf-8"))
    if not ids:
        raise ValueError("empty selection")
    return to_hex(md5(f"{question_id}:{','.join(ids)}"))
