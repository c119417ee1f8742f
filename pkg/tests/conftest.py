"""Shared fixtures: a contract harness, channel networks, and gateway clients."""

from __future__ import annotations

import json
from typing import Dict, List, Optional, Tuple

import pytest

from bladetrace.contract import BladeLifecycleContract
from bladetrace.ledger.peer import ChaincodeError
from bladetrace.ledger.worldstate import matches_selector


class DictStub:
    """Minimal contract execution environment over a plain dict."""

    def __init__(self, state: Dict[str, str], identity: Tuple[str, str], timestamp: str, config: dict):
        self._state = state
        self._identity = identity
        self._timestamp = timestamp
        self._config = config
        self.events: List[Tuple[str, dict]] = []
        self.writes: Dict[str, Optional[str]] = {}

    def get_state(self, key):
        if key in self.writes:
            return self.writes[key]
        return self._state.get(key)

    def put_state(self, key, value):
        self.writes[key] = value

    def delete_state(self, key):
        self.writes[key] = None

    def query_json(self, selector):
        merged = dict(self._state)
        for key, value in self.writes.items():
            if value is None:
                merged.pop(key, None)
            else:
                merged[key] = value
        return [
            (key, json.loads(value))
            for key, value in sorted(merged.items())
            if matches_selector(value, selector)
        ]

    def emit_event(self, name, payload):
        self.events.append((name, payload))

    def config_value(self, key, default=None):
        return self._config.get(key, default)

    @property
    def client_msp_id(self):
        return self._identity[0]

    @property
    def client_id(self):
        return self._identity[1]

    @property
    def timestamp(self):
        return self._timestamp


class ContractHarness:
    """Applies contract functions sequentially to an in-memory world state."""

    DEFAULT_CONFIG = {
        "thresholds": {"hours": "500", "cycles": 500, "days": 180},
        "role_gates_enabled": True,
        "org_ids": ["OEM", "AIRLINE", "MRO", "REGULATOR"],
    }

    def __init__(self, config: Optional[dict] = None):
        self.state: Dict[str, str] = {}
        self.contract = BladeLifecycleContract(error_cls=ChaincodeError)
        self.functions = self.contract.functions()
        self.config = config or dict(self.DEFAULT_CONFIG)
        self.events: List[Tuple[str, dict]] = []

    def invoke(self, org: str, user: str, fn: str, args: List[str], ts: str):
        stub = DictStub(self.state, (org, user), ts, self.config)
        result = self.functions[fn](stub, args)
        for key, value in stub.writes.items():
            if value is None:
                self.state.pop(key, None)
            else:
                self.state[key] = value
        self.events.extend(stub.events)
        return result

    def query(self, org: str, user: str, fn: str, args: List[str], ts: str = "2025-01-01T00:00:00Z"):
        stub = DictStub(self.state, (org, user), ts, self.config)
        return self.functions[fn](stub, args)

    def blade(self, serial: str) -> dict:
        return json.loads(self.state[f"BLADE:{serial}"])

    def event(self, event_id: str) -> dict:
        return json.loads(self.state[f"EVT:{event_id}"])


@pytest.fixture
def harness() -> ContractHarness:
    return ContractHarness()


def make_network(tmp_path, live: bool = True, **config_kwargs):
    from bladetrace.gateway.network import Network, NetworkConfig

    defaults = dict(time_scale=50.0, seed=7)
    defaults.update(config_kwargs)
    network = Network(workdir=str(tmp_path / "network"), config=NetworkConfig(**defaults))
    if live:
        network.start()
    return network


@pytest.fixture
def network(tmp_path):
    net = make_network(tmp_path)
    yield net
    net.stop()


@pytest.fixture
def gateway(tmp_path, network):
    """(client, network, store, detector) against a live in-process channel."""
    from fastapi.testclient import TestClient

    from bladetrace.cas import ContentStore
    from bladetrace.detection import StubDetector
    from bladetrace.gateway.app import create_app

    store = ContentStore(str(tmp_path / "cas"))
    detector = StubDetector()
    app = create_app(network, store, detector)
    client = TestClient(app)
    return client, network, store, detector


OEM = {"X-Org": "OEM"}
AIRLINE = {"X-Org": "AIRLINE"}
MRO = {"X-Org": "MRO"}
REGULATOR = {"X-Org": "REGULATOR"}


def lifecycle_to_due(client, serial: str, start="2025-01-01T00:00:00Z"):
    """Drive a fresh blade to INSPECTION_DUE via the REST surface."""
    from datetime import datetime, timedelta, timezone

    r = client.post(
        "/api/blades",
        json={"serialNumber": serial, "manufactureDate": start, "timestamp": start},
        headers=OEM,
    )
    assert r.status_code == 200, r.text
    t = datetime.fromisoformat(start.replace("Z", "+00:00")) + timedelta(days=1)
    iso = t.isoformat().replace("+00:00", "Z")
    r = client.post(
        f"/api/blades/{serial}/release",
        json={"airline": "AIRLINE", "timestamp": iso},
        headers=OEM,
    )
    assert r.status_code == 200, r.text
    state = "IN_SERVICE"
    while state == "IN_SERVICE":
        t += timedelta(days=30)
        iso = t.isoformat().replace("+00:00", "Z")
        r = client.post(
            f"/api/blades/{serial}/flights",
            json={"flightHours": "8.0", "flightCycles": 1, "flightDate": iso, "timestamp": iso},
            headers=AIRLINE,
        )
        assert r.status_code == 200, r.text
        state = r.json()["blade"]["currentState"]
    return r.json()["blade"], t
