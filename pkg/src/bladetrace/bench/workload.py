"""Lifecycle workload generator and run reports.

Drives each blade through full inspection cycles — manufacture, release,
flights until a threshold trips, inspection with the pluggable detector,
approval or repair — against either the ledger gateway or the centralized
baseline. A virtual calendar supplies all operation timestamps so the
calendar threshold is exercised without real waiting, and a fixed seed makes
the whole operation sequence bit-reproducible.
"""

from __future__ import annotations

import json
import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Callable, Dict, List, Optional, Tuple

from ..cas import ContentStore
from ..detection import StubDetector
from ..ledger.peer import ChaincodeError
from .baseline import BaselineStore
from .images import image_for

WRITE_OPS = (
    "manufacture",
    "release",
    "flight",
    "inspection",
    "approve",
    "repair",
    "complete_repair",
)


@dataclass
class WorkloadConfig:
    blades: int = 10
    cycles_per_blade: int = 2
    hours_per_flight: Tuple[float, float] = (2.0, 8.0)
    interval_days: Tuple[int, int] = (5, 15)
    cycles_per_flight: int = 1
    seed: int = 1
    mode: str = "ledger"  # ledger | baseline
    image_size: int = 2 * 1024 * 1024
    parallelism: int = 4
    start_date: str = "2025-01-01T00:00:00Z"
    time_scale: float = 25.0  # simulated-network pacing for ledger mode

    def to_dict(self) -> dict:
        return {
            "blades": self.blades,
            "cycles_per_blade": self.cycles_per_blade,
            "hours_per_flight": list(self.hours_per_flight),
            "interval_days": list(self.interval_days),
            "cycles_per_flight": self.cycles_per_flight,
            "seed": self.seed,
            "mode": self.mode,
            "image_size": self.image_size,
            "parallelism": self.parallelism,
            "start_date": self.start_date,
        }


class OpError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class TimingLog:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.samples: List[Tuple[str, str, float]] = []  # (op, kind, ms)

    def add(self, op: str, kind: str, ms: float) -> None:
        with self._lock:
            self.samples.append((op, kind, ms))

    def count(self, kind: Optional[str] = None) -> int:
        with self._lock:
            return sum(1 for _o, k, _m in self.samples if kind is None or k == kind)


def percentile(sorted_values: List[float], q: float) -> float:
    """Nearest-rank percentile over an ascending list."""
    if not sorted_values:
        return 0.0
    import math

    rank = max(1, math.ceil(q / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


def latency_table(log: TimingLog) -> dict:
    by_op: Dict[str, List[float]] = {}
    by_kind: Dict[str, List[float]] = {"read": [], "write": []}
    for op, kind, ms in log.samples:
        by_op.setdefault(op, []).append(ms)
        by_kind[kind].append(ms)
    table = {}
    for op, values in sorted(by_op.items()):
        values.sort()
        table[op] = {
            "count": len(values),
            "p50_ms": round(percentile(values, 50), 3),
            "p95_ms": round(percentile(values, 95), 3),
            "max_ms": round(values[-1], 3),
        }
    rollup = {}
    for kind, values in by_kind.items():
        values.sort()
        rollup[kind] = {
            "count": len(values),
            "p50_ms": round(percentile(values, 50), 3) if values else 0.0,
            "p95_ms": round(percentile(values, 95), 3) if values else 0.0,
            "max_ms": round(values[-1], 3) if values else 0.0,
            "avg_ms": round(sum(values) / len(values), 3) if values else 0.0,
        }
    return {"by_operation": table, "by_kind": rollup}


# -- operation clients ---------------------------------------------------------


class LedgerOps:
    """Drives the gateway over HTTP (in-process ASGI or a live base URL)."""

    def __init__(self, client):
        self._client = client

    def _check(self, response) -> dict:
        if response.status_code != 200:
            try:
                message = response.json().get("error", response.text)
            except ValueError:
                message = response.text
            raise OpError(message)
        return response.json()

    def manufacture(self, serial: str, date: str, ts: str) -> dict:
        r = self._client.post(
            "/api/blades",
            json={"serialNumber": serial, "manufactureDate": date, "timestamp": ts},
            headers={"X-Org": "OEM"},
        )
        return self._check(r)["blade"]

    def release(self, serial: str, airline: str, ts: str) -> dict:
        r = self._client.post(
            f"/api/blades/{serial}/release",
            json={"airline": airline, "timestamp": ts},
            headers={"X-Org": "OEM"},
        )
        return self._check(r)["blade"]

    def flight(self, serial: str, owner: str, hours: str, cycles: int, date: str) -> dict:
        r = self._client.post(
            f"/api/blades/{serial}/flights",
            json={
                "flightHours": hours,
                "flightCycles": cycles,
                "flightDate": date,
                "timestamp": date,
            },
            headers={"X-Org": owner},
        )
        return self._check(r)["blade"]

    def inspect(self, serial: str, image: bytes, ts: str) -> dict:
        r = self._client.post(
            f"/api/blades/{serial}/inspections",
            files={"image": ("inspection.bin", image)},
            data={"notes": "", "timestamp": ts},
            headers={"X-Org": "MRO"},
        )
        return self._check(r)["event"]

    def approve(self, serial: str, ts: str) -> dict:
        r = self._client.post(
            f"/api/blades/{serial}/approve",
            json={"timestamp": ts},
            headers={"X-Org": "MRO"},
        )
        return self._check(r)["blade"]

    def repair(self, serial: str, ts: str) -> dict:
        r = self._client.post(
            f"/api/blades/{serial}/repair",
            json={"timestamp": ts},
            headers={"X-Org": "MRO"},
        )
        return self._check(r)["blade"]

    def complete_repair(self, serial: str, ts: str) -> dict:
        r = self._client.post(
            f"/api/blades/{serial}/repair/complete",
            json={"notes": "repair completed", "timestamp": ts},
            headers={"X-Org": "MRO"},
        )
        return self._check(r)["blade"]

    def get_blade(self, serial: str) -> dict:
        r = self._client.get(f"/api/blades/{serial}", headers={"X-Org": "REGULATOR"})
        return self._check(r)

    def census(self) -> Dict[str, int]:
        r = self._client.get("/api/stats", headers={"X-Org": "REGULATOR"})
        return self._check(r)["census"]


class BaselineOps:
    """Drives the centralized store with the identical operation sequence."""

    def __init__(self, store: BaselineStore, cas: ContentStore, detector: StubDetector):
        self._store = store
        self._cas = cas
        self._detector = detector

    def _invoke(self, org: str, user: str, fn: str, args: List[str], ts: str) -> dict:
        try:
            return self._store.invoke(org, user, fn, args, ts)
        except ChaincodeError as exc:
            raise OpError(str(exc))

    def manufacture(self, serial: str, date: str, ts: str) -> dict:
        return self._invoke("OEM", "qa", "ManufactureBlade", [serial, date], ts)

    def release(self, serial: str, airline: str, ts: str) -> dict:
        return self._invoke("OEM", "qa", "ReleaseToService", [serial, airline], ts)

    def flight(self, serial: str, owner: str, hours: str, cycles: int, date: str) -> dict:
        return self._invoke(
            owner, "ops1", "LogFlightOperation", [serial, hours, str(cycles), date], date
        )

    def inspect(self, serial: str, image: bytes, ts: str) -> dict:
        report = self._detector.detect(image, 1024, 1024)
        ref = self._cas.put(image)
        payload = {
            "modelName": report.modelName,
            "modelVersion": report.modelVersion,
            "defects": [d.to_dict() for d in report.defects],
            "result": report.overallResult,
            "notes": "",
        }
        return self._invoke(
            "MRO",
            "inspector1",
            "SubmitInspectionResult",
            [serial, json.dumps(payload), ref.cid, ref.sha256],
            ts,
        )

    def approve(self, serial: str, ts: str) -> dict:
        return self._invoke("MRO", "inspector1", "ApproveReturnToService", [serial], ts)

    def repair(self, serial: str, ts: str) -> dict:
        return self._invoke("MRO", "inspector1", "SendToRepair", [serial], ts)

    def complete_repair(self, serial: str, ts: str) -> dict:
        return self._invoke(
            "MRO", "inspector1", "CompleteRepair", [serial, "repair completed"], ts
        )

    def get_blade(self, serial: str) -> dict:
        return self._store.query("REGULATOR", "auditor1", "GetBlade", [serial], _wall_iso())

    def census(self) -> Dict[str, int]:
        from ..contract.types import STATES

        out = {}
        for state in STATES:
            rows = self._store.query(
                "REGULATOR", "auditor1", "QueryBladesByState", [state], _wall_iso()
            )
            out[state] = len(rows)
        return out


def _wall_iso() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


# -- per-blade pipeline -----------------------------------------------------------


class VirtualClock:
    def __init__(self, start: str):
        self._now = datetime.fromisoformat(start.replace("Z", "+00:00"))

    def advance_days(self, days: int) -> None:
        self._now += timedelta(days=days)

    def advance_hours(self, hours: int) -> None:
        self._now += timedelta(hours=hours)

    @property
    def iso(self) -> str:
        return self._now.isoformat().replace("+00:00", "Z")


@dataclass
class BladeOutcome:
    serial: str
    completed: bool
    cycles_done: int = 0
    flights: int = 0
    error: str = ""


def drive_blade(
    ops,
    config: WorkloadConfig,
    blade_index: int,
    log: TimingLog,
    on_op: Optional[Callable[[], None]] = None,
    max_flights_per_cycle: int = 60,
) -> BladeOutcome:
    rng = random.Random(f"{config.seed}:{blade_index}")
    serial = f"BLD-{config.seed:03d}-{blade_index:04d}"
    clock = VirtualClock(config.start_date)
    outcome = BladeOutcome(serial=serial, completed=False)

    def timed(op: str, kind: str, fn, *args):
        start = time.perf_counter()
        result = fn(*args)
        log.add(op, kind, (time.perf_counter() - start) * 1000.0)
        if on_op is not None:
            on_op()
        return result

    try:
        timed("manufacture", "write", ops.manufacture, serial, clock.iso, clock.iso)
        clock.advance_days(1)
        blade = timed("release", "write", ops.release, serial, "AIRLINE", clock.iso)
        for cycle in range(config.cycles_per_blade):
            flights = 0
            while blade["currentState"] == "IN_SERVICE":
                if flights >= max_flights_per_cycle:
                    raise OpError("threshold never tripped (runaway cycle)")
                clock.advance_days(rng.randint(*config.interval_days))
                hours = f"{rng.uniform(*config.hours_per_flight):.1f}"
                blade = timed(
                    "flight",
                    "write",
                    ops.flight,
                    serial,
                    "AIRLINE",
                    hours,
                    config.cycles_per_flight,
                    clock.iso,
                )
                flights += 1
            outcome.flights += flights
            clock.advance_hours(4)
            image = image_for(config.seed, blade_index, cycle, config.image_size)
            event = timed("inspection", "write", ops.inspect, serial, image, clock.iso)
            clock.advance_hours(4)
            if event["overallResult"] == "PASS":
                blade = timed("approve", "write", ops.approve, serial, clock.iso)
            else:
                blade = timed("repair", "write", ops.repair, serial, clock.iso)
                clock.advance_hours(4)
                blade = timed(
                    "complete_repair", "write", ops.complete_repair, serial, clock.iso
                )
            outcome.cycles_done += 1
        final = timed("get_blade", "read", ops.get_blade, serial)
        outcome.completed = (
            outcome.cycles_done == config.cycles_per_blade
            and final["currentState"] == "IN_SERVICE"
        )
    except OpError as exc:
        outcome.error = exc.message
    return outcome


# -- run orchestration ------------------------------------------------------------


def run_workload(
    config: WorkloadConfig,
    workdir: str,
    crash_plan: Optional[List[Tuple[int, str, int]]] = None,
    network_factory: Optional[Callable] = None,
) -> dict:
    """Execute a full workload; returns the run report (canonical-JSON-ready).

    ``crash_plan`` entries (after_n_ops, "crash"|"recover", orderer_id) inject
    ordering faults mid-run in ledger mode.
    """
    os.makedirs(workdir, exist_ok=True)
    log = TimingLog()
    op_counter = {"n": 0}
    counter_lock = threading.Lock()
    network = None
    baseline = None
    plan = sorted(crash_plan or [], key=lambda item: item[0])
    plan_pos = {"i": 0}

    if config.mode == "ledger":
        from fastapi.testclient import TestClient

        from ..gateway.app import create_app
        from ..gateway.network import Network, NetworkConfig

        factory = network_factory or (
            lambda: Network(
                workdir=os.path.join(workdir, "network"),
                config=NetworkConfig(seed=config.seed, time_scale=config.time_scale),
            )
        )
        network = factory()
        network.start()
        store = ContentStore(os.path.join(workdir, "cas"))
        app = create_app(network, store, StubDetector())

        def make_ops():
            return LedgerOps(TestClient(app))

    elif config.mode == "baseline":
        baseline = BaselineStore(os.path.join(workdir, "baseline.db"))
        cas = ContentStore(os.path.join(workdir, "baseline-cas"))
        shared = BaselineOps(baseline, cas, StubDetector())

        def make_ops():
            return shared

    else:
        raise ValueError(f"unknown mode: {config.mode}")

    def on_op() -> None:
        with counter_lock:
            op_counter["n"] += 1
            n = op_counter["n"]
        while plan_pos["i"] < len(plan) and plan[plan_pos["i"]][0] <= n:
            _at, action, node_id = plan[plan_pos["i"]]
            plan_pos["i"] += 1
            if network is not None:
                if node_id == 0:  # 0 targets whoever currently leads
                    leader = network.ordering.current_leader()
                    node_id = leader.node_id if leader else 1
                if action == "crash":
                    network.crash_orderer(node_id)
                else:
                    network.recover_orderer(node_id)

    started = time.perf_counter()
    outcomes: List[BladeOutcome] = []
    with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
        futures = [
            pool.submit(drive_blade, make_ops(), config, i, log, on_op)
            for i in range(config.blades)
        ]
        for future in futures:
            outcomes.append(future.result())
    duration = time.perf_counter() - started

    final_ops = make_ops()
    census = final_ops.census()
    chain_height = network.anchor_peer.height if network is not None else None
    if network is not None:
        network.stop()
    if baseline is not None:
        baseline.close()

    write_count = log.count("write")
    report = {
        "config": config.to_dict(),
        "completed_blades": sum(1 for o in outcomes if o.completed),
        "total_blades": config.blades,
        "operation_count": write_count,
        "read_count": log.count("read"),
        "duration_s": round(duration, 3),
        "throughput_ops_per_min": round(write_count / duration * 60.0, 2) if duration else 0.0,
        "latency": latency_table(log),
        "final_state_census": census,
        "chain_height": chain_height,
        "total_flights": sum(o.flights for o in outcomes),
        "tamper_checks": [],  # populated by the tamper suite over a finished run
        "errors": [
            {"serial": o.serial, "error": o.error} for o in outcomes if o.error
        ],
        "paths": {
            "workdir": workdir,
            "block_dir": (
                os.path.join(workdir, "network", "peers", "OEM", "blocks")
                if config.mode == "ledger"
                else None
            ),
            "cas_dir": os.path.join(workdir, "cas") if config.mode == "ledger" else None,
        },
    }
    return report


def write_report(report: dict, path: str) -> None:
    from ..canonical import canonical_bytes

    with open(path, "wb") as fh:
        fh.write(canonical_bytes(report))
