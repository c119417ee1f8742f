"""Blade lifecycle contract: state machine, inspection triggering, evidence binding.

Pure deterministic functions over a transaction stub: no wall clock, no RNG.
All times come from transaction arguments or the endorsed proposal timestamp,
so peer simulations agree byte for byte. Caller identity always comes from
the transaction context, never from arguments.
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from typing import Dict, List, Optional, Protocol, Tuple

from ..canonical import is_sha256_hex
from .types import (
    BLADE_KEY_PREFIX,
    DEFECT_TYPES,
    EVENT_KEY_PREFIX,
    INSPECTION_RESULTS,
    STATES,
    BladeRecord,
    Defect,
    InspectionEvent,
    Thresholds,
    hours_str,
    parse_hours,
)

# Error strings are part of the contract; the first two are bit-exact
# requirements of the lifecycle algorithms.
ERR_FLIGHT_STATE = "invalid state for flight logging"
ERR_INSPECT_STATE = "blade not due for inspection"
ERR_EXISTS = "blade already exists"
ERR_NOT_FOUND = "blade not found"
ERR_RELEASE_STATE = "invalid state for release"
ERR_APPROVE_STATE = "invalid state for approval"
ERR_REPAIR_STATE = "invalid state for repair"
ERR_REPAIR_DONE_STATE = "invalid state for repair completion"
ERR_SCRAP_STATE = "invalid state for scrap"
ERR_NOT_PASS = "latest inspection result is not PASS"
ERR_NOT_FAIL = "latest inspection result is not FAIL or CRITICAL"
ERR_NOT_AUTHORIZED = "caller organization not authorized"
ERR_NOT_OWNER = "caller is not the current owner"
ERR_ORG_UNKNOWN = "organization not registered"

QA_INSPECTOR = "OEM_QA"
QA_ORGANIZATION = "OEM"
NO_MODEL = "N/A"

SECONDS_PER_DAY = 86400


class TxStub(Protocol):
    """What the contract needs from its execution environment."""

    def get_state(self, key: str) -> Optional[str]: ...
    def put_state(self, key: str, value: str) -> None: ...
    def query_json(self, selector: Dict[str, object]) -> List[Tuple[str, dict]]: ...
    def emit_event(self, name: str, payload: dict) -> None: ...
    def config_value(self, key: str, default=None): ...
    @property
    def client_msp_id(self) -> str: ...
    @property
    def client_id(self) -> str: ...
    @property
    def timestamp(self) -> str: ...


class ContractError(Exception):
    pass


def _parse_iso(text: str) -> datetime:
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except (ValueError, TypeError):
        raise ContractError(f"invalid ISO 8601 timestamp: {text!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def days_between(earlier: str, later: str) -> int:
    """Whole UTC days elapsed, floored; never negative."""
    delta = _parse_iso(later) - _parse_iso(earlier)
    return max(0, int(delta.total_seconds()) // SECONDS_PER_DAY)


def add_days(start: str, days: int) -> str:
    return (_parse_iso(start) + timedelta(days=days)).isoformat().replace("+00:00", "Z")


class BladeLifecycleContract:
    """Chaincode functions keyed by name; raises via the injected error type.

    ``error_cls`` lets the peer map contract rejections onto its own
    rejection-endorsement path while the baseline store raises them directly.
    """

    def __init__(self, error_cls=ContractError):
        self._err = error_cls

    def functions(self) -> Dict[str, object]:
        return {
            "ManufactureBlade": self.manufacture_blade,
            "ReleaseToService": self.release_to_service,
            "LogFlightOperation": self.log_flight_operation,
            "SubmitInspectionResult": self.submit_inspection_result,
            "ApproveReturnToService": self.approve_return_to_service,
            "SendToRepair": self.send_to_repair,
            "CompleteRepair": self.complete_repair,
            "ScrapBlade": self.scrap_blade,
            "GetBlade": self.get_blade,
            "GetBladeCompleteHistory": self.get_blade_complete_history,
            "QueryBladesByState": self.query_blades_by_state,
        }

    # -- helpers ---------------------------------------------------------

    def _fail(self, message: str):
        raise self._err(message)

    def _need_args(self, args: List[str], count: int):
        if len(args) != count:
            self._fail(f"expected {count} argument(s), got {len(args)}")

    def _thresholds(self, stub: TxStub) -> Thresholds:
        return Thresholds.from_config(stub.config_value("thresholds"))

    def _gate_enabled(self, stub: TxStub, op_name: str) -> bool:
        if not stub.config_value("role_gates_enabled", True):
            return False
        overrides = stub.config_value("role_gate_overrides", {}) or {}
        return bool(overrides.get(op_name, True))

    def _require_org(self, stub: TxStub, allowed: Tuple[str, ...], op_name: str):
        if self._gate_enabled(stub, op_name) and stub.client_msp_id not in allowed:
            self._fail(ERR_NOT_AUTHORIZED)

    def _load_blade(self, stub: TxStub, serial: str) -> BladeRecord:
        raw = stub.get_state(BLADE_KEY_PREFIX + serial)
        if raw is None:
            self._fail(ERR_NOT_FOUND)
        return BladeRecord.from_dict(json.loads(raw))

    def _save_blade(self, stub: TxStub, blade: BladeRecord) -> dict:
        blade.updatedAt = stub.timestamp
        doc = blade.to_dict()
        stub.put_state(BLADE_KEY_PREFIX + blade.serialNumber, _dumps(doc))
        return doc

    def _save_event(self, stub: TxStub, event: InspectionEvent) -> dict:
        doc = event.to_dict()
        stub.put_state(EVENT_KEY_PREFIX + event.eventID, _dumps(doc))
        return doc

    def _load_event(self, stub: TxStub, event_id: str) -> InspectionEvent:
        raw = stub.get_state(EVENT_KEY_PREFIX + event_id)
        if raw is None:
            self._fail(f"inspection event not found: {event_id}")
        return InspectionEvent.from_dict(json.loads(raw))

    def _latest_inspection(self, stub: TxStub, blade: BladeRecord) -> InspectionEvent:
        return self._load_event(stub, blade.inspectionHistory[-1])

    def _reset_since_counters(self, stub: TxStub, blade: BladeRecord):
        thresholds = self._thresholds(stub)
        now = stub.timestamp
        blade.hoursSinceInspection = Decimal("0.0")
        blade.cyclesSinceInspection = 0
        blade.daysSinceInspection = 0
        blade.inspectionDueReason = ""
        blade.lastInspectionDate = now
        blade.nextInspectionDue = add_days(now, thresholds.days)

    # -- lifecycle operations ---------------------------------------------

    def manufacture_blade(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 2)
        serial, manufacture_date = args
        if not serial:
            self._fail("serial number must be non-empty")
        _parse_iso(manufacture_date)
        self._require_org(stub, ("OEM",), "ManufactureBlade")
        if stub.get_state(BLADE_KEY_PREFIX + serial) is not None:
            self._fail(ERR_EXISTS)
        now = stub.timestamp
        event = InspectionEvent(
            eventID=f"{serial}_{now}",
            serialNumber=serial,
            inspectionDate=manufacture_date,
            inspectionType="MANUFACTURING_QA",
            aiModelName=NO_MODEL,
            aiModelVersion=NO_MODEL,
            detectedDefects=[],
            defectCount=0,
            overallResult="PASS",
            inspector=QA_INSPECTOR,
            organization=QA_ORGANIZATION,
            imageIPFS="",
            imageHash="",
            flightHoursAtInspection=Decimal("0.0"),
            flightCyclesAtInspection=0,
            notes="",
            timestamp=now,
        )
        blade = BladeRecord(
            serialNumber=serial,
            currentState="MANUFACTURED",
            currentOwner="OEM",
            manufactureDate=manufacture_date,
            lastInspectionDate=manufacture_date,
            totalInspections=1,
            inspectionHistory=[event.eventID],
            createdAt=now,
        )
        self._save_event(stub, event)
        return self._save_blade(stub, blade)

    def release_to_service(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 2)
        serial, airline = args
        self._require_org(stub, ("OEM",), "ReleaseToService")
        blade = self._load_blade(stub, serial)
        if blade.currentState != "MANUFACTURED":
            self._fail(ERR_RELEASE_STATE)
        orgs = stub.config_value("org_ids", [])
        if airline not in orgs:
            self._fail(ERR_ORG_UNKNOWN)
        thresholds = self._thresholds(stub)
        now = stub.timestamp
        blade.currentState = "IN_SERVICE"
        blade.currentOwner = airline
        blade.lastInspectionDate = now
        blade.nextInspectionDue = add_days(now, thresholds.days)
        return self._save_blade(stub, blade)

    def log_flight_operation(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 4)
        serial, hours_text, cycles_text, flight_date = args
        blade = self._load_blade(stub, serial)
        if blade.currentState != "IN_SERVICE":
            self._fail(ERR_FLIGHT_STATE)
        if stub.client_msp_id != blade.currentOwner:
            self._fail(ERR_NOT_OWNER)
        try:
            hours = parse_hours(hours_text)
        except ValueError:
            self._fail("invalid flight hours")
        if hours <= 0:
            self._fail("invalid flight hours")
        try:
            cycles = int(cycles_text)
        except ValueError:
            self._fail("invalid flight cycles")
        if cycles < 1:
            self._fail("invalid flight cycles")
        _parse_iso(flight_date)

        blade.totalFlightHours += hours
        blade.totalFlightCycles += cycles
        blade.hoursSinceInspection += hours
        blade.cyclesSinceInspection += cycles
        blade.daysSinceInspection = days_between(blade.lastInspectionDate, flight_date)
        blade.lastFlightDate = flight_date

        thresholds = self._thresholds(stub)
        if blade.hoursSinceInspection >= thresholds.hours:
            blade.inspectionDueReason = "HOURS_EXCEEDED"
        elif blade.cyclesSinceInspection >= thresholds.cycles:
            blade.inspectionDueReason = "CYCLES_EXCEEDED"
        elif blade.daysSinceInspection >= thresholds.days:
            blade.inspectionDueReason = "DAYS_EXCEEDED"

        if blade.inspectionDueReason != "":
            blade.currentState = "INSPECTION_DUE"
            doc = self._save_blade(stub, blade)
            stub.emit_event("InspectionDueEvent", doc)
            return doc
        return self._save_blade(stub, blade)

    def submit_inspection_result(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 4)
        serial, inspection_json, image_cid, image_hash = args
        blade = self._load_blade(stub, serial)
        if blade.currentState != "INSPECTION_DUE":
            self._fail(ERR_INSPECT_STATE)
        self._require_org(stub, ("MRO",), "SubmitInspectionResult")
        data = self._parse_inspection_payload(inspection_json)
        if not is_sha256_hex(image_hash):
            self._fail("malformed image hash")
        if not _cid_well_formed(image_cid):
            self._fail("malformed artifact CID")

        now = stub.timestamp
        event = InspectionEvent(
            eventID=f"{serial}_{now}",
            serialNumber=serial,
            inspectionDate=now,
            inspectionType="SCHEDULED",
            aiModelName=data["modelName"],
            aiModelVersion=data["modelVersion"],
            detectedDefects=data["defects"],
            defectCount=len(data["defects"]),
            overallResult=data["result"],
            inspector=stub.client_id,
            organization=stub.client_msp_id,
            imageIPFS=image_cid,
            imageHash=image_hash,
            flightHoursAtInspection=blade.totalFlightHours,
            flightCyclesAtInspection=blade.totalFlightCycles,
            notes=data["notes"],
            timestamp=now,
        )
        blade.currentState = "UNDER_INSPECTION"
        blade.inspectionHistory.append(event.eventID)
        blade.totalInspections += 1
        event_doc = self._save_event(stub, event)
        self._save_blade(stub, blade)
        if event.defectCount > 0:
            stub.emit_event("DefectDetectedEvent", event_doc)
            stub.emit_event("OEMDefectAlert", event_doc)
        return event_doc

    def _parse_inspection_payload(self, text: str) -> dict:
        try:
            data = json.loads(text)
        except ValueError:
            self._fail("inspection payload is not valid JSON")
        if not isinstance(data, dict):
            self._fail("inspection payload must be an object")
        model_name = data.get("modelName")
        model_version = data.get("modelVersion")
        if not isinstance(model_name, str) or not model_name:
            self._fail("invalid model metadata")
        if not isinstance(model_version, str) or not model_version:
            self._fail("invalid model metadata")
        result = data.get("result")
        if result not in INSPECTION_RESULTS:
            self._fail("invalid inspection result")
        raw_defects = data.get("defects", [])
        if not isinstance(raw_defects, list):
            self._fail("invalid defect payload")
        defects: List[Defect] = []
        for raw in raw_defects:
            if not isinstance(raw, dict):
                self._fail("invalid defect payload")
            try:
                defect = Defect.from_dict(raw)
            except (KeyError, TypeError):
                self._fail("invalid defect payload")
            problem = defect.validate()
            if problem:
                self._fail(f"invalid defect payload: {problem}")
            defects.append(defect)
        notes = data.get("notes", "")
        if not isinstance(notes, str):
            self._fail("notes must be a string")
        # Inspector/organization fields in the payload are ignored by design:
        # attribution comes from the transaction context only.
        return {
            "modelName": model_name,
            "modelVersion": model_version,
            "result": result,
            "defects": defects,
            "notes": notes,
        }

    def approve_return_to_service(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 1)
        blade = self._load_blade(stub, args[0])
        if blade.currentState != "UNDER_INSPECTION":
            self._fail(ERR_APPROVE_STATE)
        self._require_org(stub, ("MRO", "OEM"), "ApproveReturnToService")
        latest = self._latest_inspection(stub, blade)
        if latest.overallResult != "PASS":
            self._fail(ERR_NOT_PASS)
        blade.currentState = "IN_SERVICE"
        self._reset_since_counters(stub, blade)
        return self._save_blade(stub, blade)

    def send_to_repair(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 1)
        blade = self._load_blade(stub, args[0])
        if blade.currentState != "UNDER_INSPECTION":
            self._fail(ERR_REPAIR_STATE)
        self._require_org(stub, ("MRO",), "SendToRepair")
        latest = self._latest_inspection(stub, blade)
        if latest.overallResult not in ("FAIL", "CRITICAL"):
            self._fail(ERR_NOT_FAIL)
        blade.currentState = "UNDER_REPAIR"
        return self._save_blade(stub, blade)

    def complete_repair(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 2)
        serial, notes = args
        blade = self._load_blade(stub, serial)
        if blade.currentState != "UNDER_REPAIR":
            self._fail(ERR_REPAIR_DONE_STATE)
        self._require_org(stub, ("MRO",), "CompleteRepair")
        now = stub.timestamp
        repair_event = InspectionEvent(
            eventID=f"{serial}_{now}",
            serialNumber=serial,
            inspectionDate=now,
            inspectionType="REPAIR",
            aiModelName=NO_MODEL,
            aiModelVersion=NO_MODEL,
            detectedDefects=[],
            defectCount=0,
            overallResult="PASS",
            inspector=stub.client_id,
            organization=stub.client_msp_id,
            imageIPFS="",
            imageHash="",
            flightHoursAtInspection=blade.totalFlightHours,
            flightCyclesAtInspection=blade.totalFlightCycles,
            notes=notes,
            timestamp=now,
        )
        self._save_event(stub, repair_event)
        blade.currentState = "IN_SERVICE"
        self._reset_since_counters(stub, blade)
        return self._save_blade(stub, blade)

    def scrap_blade(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 2)
        serial, reason = args
        blade = self._load_blade(stub, serial)
        if blade.currentState not in ("UNDER_INSPECTION", "UNDER_REPAIR"):
            self._fail(ERR_SCRAP_STATE)
        self._require_org(stub, ("MRO", "OEM"), "ScrapBlade")
        now = stub.timestamp
        scrap_event = InspectionEvent(
            eventID=f"{serial}_{now}",
            serialNumber=serial,
            inspectionDate=now,
            inspectionType="SCRAP",
            aiModelName=NO_MODEL,
            aiModelVersion=NO_MODEL,
            detectedDefects=[],
            defectCount=0,
            overallResult="FAIL",
            inspector=stub.client_id,
            organization=stub.client_msp_id,
            imageIPFS="",
            imageHash="",
            flightHoursAtInspection=blade.totalFlightHours,
            flightCyclesAtInspection=blade.totalFlightCycles,
            notes=reason,
            timestamp=now,
        )
        self._save_event(stub, scrap_event)
        blade.currentState = "FAILED_SCRAPPED"
        doc = self._save_blade(stub, blade)
        stub.emit_event("BladeScrapedEvent", {"serialNumber": serial, "reason": reason, "blade": doc})
        return doc

    # -- queries -----------------------------------------------------------

    def get_blade(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 1)
        return self._load_blade(stub, args[0]).to_dict()

    def get_blade_complete_history(self, stub: TxStub, args: List[str]) -> dict:
        self._need_args(args, 1)
        blade = self._load_blade(stub, args[0])
        inspections = [
            self._load_event(stub, event_id).to_dict()
            for event_id in blade.inspectionHistory
        ]
        repairs = [
            doc
            for _key, doc in stub.query_json({"serialNumber": blade.serialNumber})
            if doc.get("inspectionType") in ("REPAIR", "SCRAP")
        ]
        repairs.sort(key=lambda d: (d["timestamp"], d["eventID"]))
        return {"blade": blade.to_dict(), "inspections": inspections, "repairs": repairs}

    def query_blades_by_state(self, stub: TxStub, args: List[str]) -> List[dict]:
        self._need_args(args, 1)
        state = args[0]
        if state not in STATES:
            self._fail(f"invalid state name: {state}")
        return [
            doc
            for key, doc in stub.query_json({"currentState": state})
            if key.startswith(BLADE_KEY_PREFIX)
        ]


def _cid_well_formed(cid: str) -> bool:
    if not cid or len(cid) > 128:
        return False
    return all(33 <= ord(c) <= 126 for c in cid)


def _dumps(doc: dict) -> str:
    from ..canonical import canonical_bytes

    return canonical_bytes(doc).decode("utf-8")
