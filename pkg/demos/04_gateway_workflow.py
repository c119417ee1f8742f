"""End-to-end walkthrough: the full inspection data flow through the gateway.

Boots the whole stack in-process (4 peers, 3 orderers, artifact store, stub
detector), drives a blade to inspection-due over REST, submits an inspection
image, and shows the committed evidence binding plus the audit proof.
"""

import json
import tempfile

from fastapi.testclient import TestClient

from bladetrace.cas import ContentStore
from bladetrace.detection import StubDetector
from bladetrace.gateway.app import create_app
from bladetrace.gateway.network import Network, NetworkConfig
from bladetrace.gateway.proofs import verify_proof

workdir = tempfile.mkdtemp(prefix="bladetrace-demo-")
network = Network(workdir=f"{workdir}/network", config=NetworkConfig(time_scale=50.0))
network.start()
store = ContentStore(f"{workdir}/cas")
client = TestClient(create_app(network, store, StubDetector()))
OEM, AIRLINE, MRO, REG = ({"X-Org": o} for o in ("OEM", "AIRLINE", "MRO", "REGULATOR"))

client.post("/api/blades", json={"serialNumber": "BLD-007",
            "manufactureDate": "2025-01-01T00:00:00Z", "timestamp": "2025-01-01T00:00:00Z"}, headers=OEM)
client.post("/api/blades/BLD-007/release",
            json={"airline": "AIRLINE", "timestamp": "2025-01-02T00:00:00Z"}, headers=OEM)

state, day = "IN_SERVICE", 2
while state == "IN_SERVICE":
    day += 20
    date = f"2025-{day // 28 + 1:02d}-{day % 28 + 1:02d}T00:00:00Z"
    r = client.post("/api/blades/BLD-007/flights",
                    json={"flightHours": "7.5", "flightCycles": 1, "flightDate": date,
                          "timestamp": date}, headers=AIRLINE)
    state = r.json()["blade"]["currentState"]
print(f"blade is {state} after {r.json()['blade']['totalFlightCycles']} flights "
      f"({r.json()['blade']['inspectionDueReason']})")

image = b"\x89borescope-frame" * 120_000  # ~2 MB pseudo-image
r = client.post("/api/blades/BLD-007/inspections",
                files={"image": ("frame.bin", image)},
                data={"notes": "scheduled borescope", "timestamp": "2025-08-01T00:00:00Z"},
                headers=MRO)
body = r.json()
print(f"inspection committed in block {json.dumps(body['tx_id'])[:10]}...: "
      f"result={body['event']['overallResult']}, defects={body['event']['defectCount']}")
print(f"  artifact cid={body['artifact']['cid'][:24]}... sha256={body['artifact']['sha256'][:16]}...")
print(f"  model: {body['event']['aiModelName']} {body['event']['aiModelVersion']}, "
      f"inspector: {body['event']['inspector']}@{body['event']['organization']}")

if body["event"]["overallResult"] == "PASS":
    r = client.post("/api/blades/BLD-007/approve", json={"timestamp": "2025-08-02T00:00:00Z"}, headers=MRO)
else:
    client.post("/api/blades/BLD-007/repair", json={"timestamp": "2025-08-02T00:00:00Z"}, headers=MRO)
    r = client.post("/api/blades/BLD-007/repair/complete",
                    json={"notes": "dressed", "timestamp": "2025-08-03T00:00:00Z"}, headers=MRO)
print("back in service:", r.json()["blade"]["currentState"])

proof = client.get("/api/blades/BLD-007/proof", headers=REG).json()
print(f"\nproof: {len(proof['inspections'])} inspections at height {proof['block_height']}, "
      f"digest {proof['record_digest'][:16]}..., artifact matches: "
      f"{[e['matches'] for e in proof['recomputed']]}")

stats = client.get("/api/stats", headers=REG).json()
print("fleet census:", {k: v for k, v in stats["census"].items() if v})

network.stop()
result = verify_proof(proof, f"{workdir}/network/peers/OEM/blocks", f"{workdir}/cas")
print("proof verified offline with the gateway stopped:", result["ok"])
