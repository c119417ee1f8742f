"""Traceability proofs: generation honesty and gateway-independent verification."""

import copy
import json
import os

from conftest import MRO, OEM, REGULATOR, lifecycle_to_due

from bladetrace.gateway.proofs import verify_proof


def build_proof(gateway, tmp_path, serial="PR1", image=b"proof artifact bytes"):
    client, network, store, _ = gateway
    lifecycle_to_due(client, serial)
    client.post(
        f"/api/blades/{serial}/inspections", files={"image": ("i", image)}, headers=MRO
    )
    proof = client.get(f"/api/blades/{serial}/proof", headers=REGULATOR).json()
    block_dir = str(tmp_path / "network" / "peers" / "OEM" / "blocks")
    cas_dir = str(tmp_path / "cas")
    return proof, block_dir, cas_dir, network, store


def test_fresh_proof_verifies_standalone(gateway, tmp_path):
    proof, block_dir, cas_dir, network, _store = build_proof(gateway, tmp_path)
    network.stop()  # the verifier must not need a running gateway
    result = verify_proof(proof, block_dir, cas_dir)
    assert result["ok"], result["discrepancies"]
    assert result["discrepancies"] == []


def test_proof_with_edited_field_rejected(gateway, tmp_path):
    proof, block_dir, cas_dir, *_ = build_proof(gateway, tmp_path, "PR2")
    tampered = copy.deepcopy(proof)
    tampered["inspections"][-1]["defectCount"] += 1
    result = verify_proof(tampered, block_dir, cas_dir)
    assert not result["ok"]
    text = " ".join(result["discrepancies"])
    assert "inspection event mismatch" in text
    assert "record digest mismatch" in text


def test_proof_with_edited_blade_record_rejected(gateway, tmp_path):
    proof, block_dir, cas_dir, *_ = build_proof(gateway, tmp_path, "PR3")
    tampered = copy.deepcopy(proof)
    tampered["blade"]["totalFlightHours"] = "1.0"
    result = verify_proof(tampered, block_dir, cas_dir)
    assert not result["ok"]
    assert any("blade record mismatch" in d for d in result["discrepancies"])


def test_proof_detects_tampered_artifact(gateway, tmp_path):
    proof, block_dir, cas_dir, _network, store = build_proof(gateway, tmp_path, "PR4")
    event = proof["inspections"][-1]
    path = store._path(event["imageIPFS"])
    raw = open(path, "rb").read()
    with open(path, "wb") as fh:
        fh.write(raw[:10] + bytes([raw[10] ^ 0xFF]) + raw[11:])
    result = verify_proof(proof, block_dir, cas_dir)
    assert not result["ok"]
    assert any(
        d.startswith(f"artifact hash mismatch for {event['eventID']}")
        for d in result["discrepancies"]
    )
    # Regenerating a proof over the tampered store is honest: matches=false.
    client, *_ = gateway
    fresh = client.get("/api/blades/PR4/proof", headers=REGULATOR).json()
    entry = [r for r in fresh["recomputed"] if r["eventID"] == event["eventID"]][0]
    assert entry["matches"] is False


def test_fresh_blade_proof_has_no_artifact_entries(gateway, tmp_path):
    client, network, store, _ = gateway
    client.post("/api/blades", json={"serialNumber": "PR5"}, headers=OEM)
    proof = client.get("/api/blades/PR5/proof", headers=REGULATOR).json()
    assert len(proof["inspections"]) == 1  # the normalized QA event only
    assert proof["recomputed"] == []
    assert proof["artifact_urls"] == []
    block_dir = str(tmp_path / "network" / "peers" / "OEM" / "blocks")
    result = verify_proof(proof, block_dir, str(tmp_path / "cas"))
    assert result["ok"]


def test_proof_pinned_height_ignores_later_activity(gateway, tmp_path):
    proof, block_dir, cas_dir, *_ = build_proof(gateway, tmp_path, "PR6")
    client, *_ = gateway
    # More activity after proof generation must not invalidate it.
    client.post("/api/blades", json={"serialNumber": "PR7"}, headers=OEM)
    result = verify_proof(proof, block_dir, cas_dir)
    assert result["ok"], result["discrepancies"]


def test_proof_beyond_chain_height_rejected(gateway, tmp_path):
    proof, block_dir, cas_dir, *_ = build_proof(gateway, tmp_path, "PR8")
    proof["block_height"] = 10_000
    result = verify_proof(proof, block_dir, cas_dir)
    assert not result["ok"]
    assert any("blocks exist" in d for d in result["discrepancies"])


def test_proof_against_tampered_chain_names_bad_block(gateway, tmp_path):
    proof, block_dir, cas_dir, network, _ = build_proof(gateway, tmp_path, "PR9")
    network.stop()
    target = sorted(os.listdir(block_dir))[2]
    path = os.path.join(block_dir, target)
    raw = open(path, "rb").read()
    idx = raw.find(b'"timestamp"')
    with open(path, "wb") as fh:
        fh.write(raw[:idx] + b'"timestamqX"' + raw[idx + 11 :])
    result = verify_proof(proof, block_dir, cas_dir)
    assert not result["ok"]
    assert any("chain invalid at block 2" in d for d in result["discrepancies"])
