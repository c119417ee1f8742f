"""On-chain record shapes for blades, inspections, and defects.

Field names mirror the on-chain schema exactly (camelCase), so dict forms
are the canonical world-state values. Flight hours are fixed-point decimals
at 0.1 h resolution, serialized as strings to keep cross-peer bytes exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import List, Optional

STATES = (
    "MANUFACTURED",
    "IN_SERVICE",
    "INSPECTION_DUE",
    "UNDER_INSPECTION",
    "UNDER_REPAIR",
    "FAILED_SCRAPPED",
)

DUE_REASONS = ("", "HOURS_EXCEEDED", "CYCLES_EXCEEDED", "DAYS_EXCEEDED")
DEFECT_TYPES = ("corrosion", "nick", "dent", "scratch")
INSPECTION_RESULTS = ("PASS", "FAIL", "CRITICAL")
INSPECTION_TYPES = ("MANUFACTURING_QA", "SCHEDULED", "UNSCHEDULED", "REPAIR", "SCRAP")

BLADE_KEY_PREFIX = "BLADE:"
EVENT_KEY_PREFIX = "EVT:"

TENTH = Decimal("0.1")


def parse_hours(text: str) -> Decimal:
    """Parse decimal flight hours at 0.1 h resolution."""
    try:
        value = Decimal(text)
    except (InvalidOperation, ValueError):
        raise ValueError(f"not a decimal hours value: {text!r}")
    return value.quantize(TENTH)


def hours_str(value: Decimal) -> str:
    return str(value.quantize(TENTH))


@dataclass
class Thresholds:
    hours: Decimal = Decimal("500")
    cycles: int = 500
    days: int = 180

    @classmethod
    def from_config(cls, raw: Optional[dict]) -> "Thresholds":
        if not raw:
            return cls()
        return cls(
            hours=Decimal(str(raw.get("hours", "500"))),
            cycles=int(raw.get("cycles", 500)),
            days=int(raw.get("days", 180)),
        )

    def to_config(self) -> dict:
        return {"hours": str(self.hours), "cycles": self.cycles, "days": self.days}


@dataclass
class Defect:
    defectType: str
    confidence: float
    x1: int
    y1: int
    x2: int
    y2: int

    def to_dict(self) -> dict:
        return {
            "defectType": self.defectType,
            "confidence": self.confidence,
            "x1": self.x1,
            "y1": self.y1,
            "x2": self.x2,
            "y2": self.y2,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Defect":
        return cls(
            defectType=d["defectType"],
            confidence=d["confidence"],
            x1=d["x1"],
            y1=d["y1"],
            x2=d["x2"],
            y2=d["y2"],
        )

    def validate(self) -> Optional[str]:
        if self.defectType not in DEFECT_TYPES:
            return f"unknown defect type: {self.defectType}"
        if not isinstance(self.confidence, (int, float)) or not 0.0 <= float(self.confidence) <= 1.0:
            return "confidence outside [0, 1]"
        for coord in (self.x1, self.y1, self.x2, self.y2):
            if not isinstance(coord, int) or coord < 0:
                return "bounding box coordinates must be non-negative integers"
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            return "bounding box must satisfy x1<x2 and y1<y2"
        return None


@dataclass
class InspectionEvent:
    eventID: str
    serialNumber: str
    inspectionDate: str
    inspectionType: str
    aiModelName: str
    aiModelVersion: str
    detectedDefects: List[Defect]
    defectCount: int
    overallResult: str
    inspector: str
    organization: str
    imageIPFS: str
    imageHash: str
    flightHoursAtInspection: Decimal
    flightCyclesAtInspection: int
    notes: str
    timestamp: str

    def to_dict(self) -> dict:
        return {
            "eventID": self.eventID,
            "serialNumber": self.serialNumber,
            "inspectionDate": self.inspectionDate,
            "inspectionType": self.inspectionType,
            "aiModelName": self.aiModelName,
            "aiModelVersion": self.aiModelVersion,
            "detectedDefects": [d.to_dict() for d in self.detectedDefects],
            "defectCount": self.defectCount,
            "overallResult": self.overallResult,
            "inspector": self.inspector,
            "organization": self.organization,
            "imageIPFS": self.imageIPFS,
            "imageHash": self.imageHash,
            "flightHoursAtInspection": hours_str(self.flightHoursAtInspection),
            "flightCyclesAtInspection": self.flightCyclesAtInspection,
            "notes": self.notes,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InspectionEvent":
        return cls(
            eventID=d["eventID"],
            serialNumber=d["serialNumber"],
            inspectionDate=d["inspectionDate"],
            inspectionType=d["inspectionType"],
            aiModelName=d["aiModelName"],
            aiModelVersion=d["aiModelVersion"],
            detectedDefects=[Defect.from_dict(x) for x in d["detectedDefects"]],
            defectCount=d["defectCount"],
            overallResult=d["overallResult"],
            inspector=d["inspector"],
            organization=d["organization"],
            imageIPFS=d["imageIPFS"],
            imageHash=d["imageHash"],
            flightHoursAtInspection=Decimal(d["flightHoursAtInspection"]),
            flightCyclesAtInspection=d["flightCyclesAtInspection"],
            notes=d["notes"],
            timestamp=d["timestamp"],
        )


@dataclass
class BladeRecord:
    serialNumber: str
    currentState: str
    currentOwner: str
    manufactureDate: str
    totalFlightHours: Decimal = Decimal("0.0")
    totalFlightCycles: int = 0
    lastFlightDate: str = ""
    hoursSinceInspection: Decimal = Decimal("0.0")
    cyclesSinceInspection: int = 0
    daysSinceInspection: int = 0
    inspectionDueReason: str = ""
    nextInspectionDue: str = ""
    lastInspectionDate: str = ""
    totalInspections: int = 0
    inspectionHistory: List[str] = field(default_factory=list)
    createdAt: str = ""
    updatedAt: str = ""

    def to_dict(self) -> dict:
        return {
            "serialNumber": self.serialNumber,
            "currentState": self.currentState,
            "currentOwner": self.currentOwner,
            "manufactureDate": self.manufactureDate,
            "totalFlightHours": hours_str(self.totalFlightHours),
            "totalFlightCycles": self.totalFlightCycles,
            "lastFlightDate": self.lastFlightDate,
            "hoursSinceInspection": hours_str(self.hoursSinceInspection),
            "cyclesSinceInspection": self.cyclesSinceInspection,
            "daysSinceInspection": self.daysSinceInspection,
            "inspectionDueReason": self.inspectionDueReason,
            "nextInspectionDue": self.nextInspectionDue,
            "lastInspectionDate": self.lastInspectionDate,
            "totalInspections": self.totalInspections,
            "inspectionHistory": list(self.inspectionHistory),
            "createdAt": self.createdAt,
            "updatedAt": self.updatedAt,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BladeRecord":
        return cls(
            serialNumber=d["serialNumber"],
            currentState=d["currentState"],
            currentOwner=d["currentOwner"],
            manufactureDate=d["manufactureDate"],
            totalFlightHours=Decimal(d["totalFlightHours"]),
            totalFlightCycles=d["totalFlightCycles"],
            lastFlightDate=d["lastFlightDate"],
            hoursSinceInspection=Decimal(d["hoursSinceInspection"]),
            cyclesSinceInspection=d["cyclesSinceInspection"],
            daysSinceInspection=d["daysSinceInspection"],
            inspectionDueReason=d["inspectionDueReason"],
            nextInspectionDue=d["nextInspectionDue"],
            lastInspectionDate=d["lastInspectionDate"],
            totalInspections=d["totalInspections"],
            inspectionHistory=list(d["inspectionHistory"]),
            createdAt=d["createdAt"],
            updatedAt=d["updatedAt"],
        )
