"""Contract walkthrough: the six-state lifecycle with automatic inspection triggering.

Runs the chaincode directly against an in-memory state (no consensus), showing
counter accumulation, the threshold trip, inspection recording with bound
evidence hashes, and the repair path.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))
from conftest import ContractHarness  # the same harness the test suite uses

h = ContractHarness()

blade = h.invoke("OEM", "qa", "ManufactureBlade", ["BLD-42", "2025-01-01T00:00:00Z"], "2025-01-01T00:00:00Z")
qa_event = h.event(blade["inspectionHistory"][0])
print(f"manufactured: state={blade['currentState']}, QA inspector={qa_event['inspector']}, "
      f"model={qa_event['aiModelName']}")

blade = h.invoke("OEM", "qa", "ReleaseToService", ["BLD-42", "AIRLINE"], "2025-01-02T00:00:00Z")
print(f"released: owner={blade['currentOwner']}, next inspection due {blade['nextInspectionDue']}")

day = 2
while blade["currentState"] == "IN_SERVICE":
    day += 12
    date = f"2025-{(day // 30) + 1:02d}-{(day % 28) + 1:02d}T00:00:00Z"
    blade = h.invoke("AIRLINE", "ops1", "LogFlightOperation", ["BLD-42", "6.5", "1", date], date)
print(f"after {blade['totalFlightCycles']} flights: state={blade['currentState']}, "
      f"reason={blade['inspectionDueReason']}, days since inspection={blade['daysSinceInspection']}")

# Flight logging is now rejected until the inspection happens.
try:
    h.invoke("AIRLINE", "ops1", "LogFlightOperation", ["BLD-42", "1.0", "1", "2025-08-01T00:00:00Z"], "2025-08-01T00:00:00Z")
except Exception as exc:
    print("further flight rejected:", exc)

inspection = {
    "modelName": "StubDetector",
    "modelVersion": "1.0.0",
    "defects": [{"defectType": "corrosion", "confidence": 0.81, "x1": 120, "y1": 80, "x2": 220, "y2": 160}],
    "result": "FAIL",
    "notes": "leading edge corrosion",
}
event = h.invoke(
    "MRO", "inspector1", "SubmitInspectionResult",
    ["BLD-42", json.dumps(inspection), "cas1-" + "ab" * 32, "ab" * 32],
    "2025-08-02T00:00:00Z",
)
print(f"inspection recorded: result={event['overallResult']}, defects={event['defectCount']}, "
      f"inspector={event['inspector']}@{event['organization']}, hash={event['imageHash'][:12]}...")
print("chain events emitted:", [name for name, _ in h.events if name != "InspectionDueEvent"])

blade = h.invoke("MRO", "inspector1", "SendToRepair", ["BLD-42"], "2025-08-03T00:00:00Z")
blade = h.invoke("MRO", "inspector1", "CompleteRepair", ["BLD-42", "blended and re-coated"], "2025-08-10T00:00:00Z")
print(f"repaired: state={blade['currentState']}, hoursSince={blade['hoursSinceInspection']}, "
      f"total hours preserved={blade['totalFlightHours']}")

history = h.query("REGULATOR", "auditor1", "GetBladeCompleteHistory", ["BLD-42"])
print(f"complete history: {len(history['inspections'])} inspections, "
      f"{len(history['repairs'])} repair records")
