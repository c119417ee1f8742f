"""Centralized baseline: one durable SQLite store running the same contract.

Quantifies the consensus overhead: the identical operation sequence and state
machine, minus endorsement, ordering, and per-peer validation. Every write
commits synchronously (fsync) to mirror a durability-equivalent RDBMS setup.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from typing import Dict, List, Optional, Tuple

from ..contract import BladeLifecycleContract
from ..ledger.peer import ChaincodeError
from ..ledger.worldstate import matches_selector


class BaselineStub:
    """Contract execution environment over the SQLite key-value table."""

    def __init__(self, conn: sqlite3.Connection, identity: Tuple[str, str], timestamp: str, config: dict):
        self._conn = conn
        self._identity = identity
        self._timestamp = timestamp
        self._config = config
        self.events: List[Tuple[str, dict]] = []

    def get_state(self, key: str) -> Optional[str]:
        row = self._conn.execute("SELECT value FROM kv WHERE key = ?", (key,)).fetchone()
        return row[0] if row else None

    def put_state(self, key: str, value: str) -> None:
        self._conn.execute("INSERT OR REPLACE INTO kv(key, value) VALUES(?, ?)", (key, value))

    def delete_state(self, key: str) -> None:
        self._conn.execute("DELETE FROM kv WHERE key = ?", (key,))

    def query_json(self, selector: Dict[str, object]) -> List[Tuple[str, dict]]:
        out = []
        for key, value in self._conn.execute("SELECT key, value FROM kv ORDER BY key"):
            if matches_selector(value, selector):
                out.append((key, json.loads(value)))
        return out

    def emit_event(self, name: str, payload: dict) -> None:
        self.events.append((name, payload))

    def config_value(self, key: str, default=None):
        return self._config.get(key, default)

    @property
    def client_msp_id(self) -> str:
        return self._identity[0]

    @property
    def client_id(self) -> str:
        return self._identity[1]

    @property
    def timestamp(self) -> str:
        return self._timestamp


class BaselineStore:
    """Single-node store enforcing the same lifecycle rules as the chaincode."""

    def __init__(self, path: str, thresholds: Optional[dict] = None, org_ids=None):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute("PRAGMA synchronous=FULL")
        self._conn.execute("CREATE TABLE IF NOT EXISTS kv(key TEXT PRIMARY KEY, value TEXT)")
        self._conn.commit()
        self._lock = threading.Lock()
        self._contract = BladeLifecycleContract(error_cls=ChaincodeError)
        self._functions = self._contract.functions()
        self._config = {
            "thresholds": thresholds or {"hours": "500", "cycles": 500, "days": 180},
            "role_gates_enabled": True,
            "org_ids": list(org_ids or ("OEM", "AIRLINE", "MRO", "REGULATOR")),
        }

    def invoke(self, org: str, user: str, fn: str, args: List[str], timestamp: str) -> object:
        """Run one contract function inside a synchronously committed transaction."""
        if fn not in self._functions:
            raise ChaincodeError(f"unknown function: {fn}")
        with self._lock:
            stub = BaselineStub(self._conn, (org, user), timestamp, self._config)
            try:
                result = self._functions[fn](stub, args)
            except ChaincodeError:
                self._conn.rollback()
                raise
            self._conn.commit()  # flush-per-write durability
            return result

    def query(self, org: str, user: str, fn: str, args: List[str], timestamp: str) -> object:
        with self._lock:
            stub = BaselineStub(self._conn, (org, user), timestamp, self._config)
            result = self._functions[fn](stub, args)
            self._conn.rollback()  # reads leave no transaction open
            return result

    def close(self) -> None:
        self._conn.close()
