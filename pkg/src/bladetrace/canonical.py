"""Canonical serialization and digests shared by every ledger component.

All cross-peer comparisons (read-write-set digests, block hashes, record
digests in audit proofs) are SHA-256 over one byte-exact canonical form:
JSON with lexicographically sorted keys, UTF-8, no insignificant whitespace.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

ZERO_HASH = "0" * 64


def canonical_bytes(value: Any) -> bytes:
    """Serialize a JSON-compatible value to its canonical byte form."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest(value: Any) -> str:
    """SHA-256 hex digest of the canonical serialization of ``value``."""
    return sha256_hex(canonical_bytes(value))


def is_sha256_hex(text: str) -> bool:
    if len(text) != 64:
        return False
    return all(c in "0123456789abcdef" for c in text)
