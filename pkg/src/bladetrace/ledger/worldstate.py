"""Queryable world state: the fold of all valid transactions over genesis."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .types import Version


class SelectorError(Exception):
    """Raised for a malformed query selector."""


@dataclass
class HistoryEntry:
    version: Version
    value: str
    tx_id: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "version": list(self.version),
            "value": self.value,
            "tx_id": self.tx_id,
            "timestamp": self.timestamp,
        }


def matches_selector(value: str, selector: Dict[str, object]) -> bool:
    """Equality match of every selector field against a JSON-valued entry."""
    try:
        doc = json.loads(value)
    except (ValueError, TypeError):
        return False
    if not isinstance(doc, dict):
        return False
    return all(doc.get(field_name) == expected for field_name, expected in selector.items())


class WorldState:
    """Current key -> (value, version) view with per-key history."""

    def __init__(self) -> None:
        self._entries: Dict[str, Tuple[str, Version]] = {}
        self._history: Dict[str, List[HistoryEntry]] = {}

    def get(self, key: str) -> Optional[str]:
        entry = self._entries.get(key)
        return entry[0] if entry else None

    def version(self, key: str) -> Optional[Version]:
        entry = self._entries.get(key)
        return entry[1] if entry else None

    def apply_write(
        self,
        key: str,
        value: Optional[str],
        version: Version,
        tx_id: str,
        timestamp: str,
    ) -> None:
        if value is None:
            self._entries.pop(key, None)
        else:
            self._entries[key] = (value, version)
            self._history.setdefault(key, []).append(
                HistoryEntry(version, value, tx_id, timestamp)
            )

    def query(self, selector: Dict[str, object]) -> List[Tuple[str, str]]:
        """All entries whose JSON value matches the selector, ordered by key."""
        if not isinstance(selector, dict) or not all(
            isinstance(k, str) for k in selector
        ):
            raise SelectorError("selector must be a mapping of field names")
        out = [
            (key, value)
            for key, (value, _version) in self._entries.items()
            if matches_selector(value, selector)
        ]
        out.sort(key=lambda kv: kv[0])
        return out

    def history(self, key: str) -> List[HistoryEntry]:
        return list(self._history.get(key, []))

    def keys(self) -> List[str]:
        return sorted(self._entries)

    def state_digest(self) -> str:
        """Digest of the full state; equal across peers iff states are identical."""
        from ..canonical import digest

        return digest(
            {k: [v, list(ver)] for k, (v, ver) in sorted(self._entries.items())}
        )
