"""Traceability proofs: auditor bundles verifiable without trusting the gateway.

A proof pins the chain height at generation time, embeds the blade record and
all its inspection events, recomputes every artifact hash live, and carries a
digest over the bundled records. Verification replays the block files to the
pinned height and re-checks everything from disk.
"""

from __future__ import annotations

import json
from typing import List, Optional

from ..canonical import canonical_bytes, digest
from ..cas import ContentStore
from ..contract.types import BLADE_KEY_PREFIX, EVENT_KEY_PREFIX
from ..ledger.replay import load_block_dicts, replay_blocks


def record_digest(blade: dict, inspections: List[dict]) -> str:
    return digest({"blade": blade, "inspections": inspections})


def generate_proof(network, store: ContentStore, serial: str) -> dict:
    """Aggregate the blade record and inspection events with live hash recomputation."""
    from .network import ChaincodeRejection

    history = network.evaluate("REGULATOR", "GetBladeCompleteHistory", [serial])
    blade = history["blade"]
    inspections = history["inspections"]
    recomputed = []
    artifact_urls = []
    for event in inspections:
        if not event["imageIPFS"]:
            continue  # normalized QA events carry no artifact
        result = store.verify(event["imageIPFS"], event["imageHash"])
        recomputed.append(
            {
                "eventID": event["eventID"],
                "artifact_hash_recomputed": result.actual_hash,
                "matches": result.verified,
                "reason": result.reason,
            }
        )
        artifact_urls.append(
            {"eventID": event["eventID"], "url": f"/api/artifacts/{event['imageIPFS']}"}
        )
    return {
        "serialNumber": serial,
        "blade": blade,
        "inspections": inspections,
        "recomputed": recomputed,
        "record_digest": record_digest(blade, inspections),
        "artifact_urls": artifact_urls,
        "generated_at": network.now_iso(),
        "block_height": network.anchor_peer.height,
    }


def verify_proof(proof: dict, block_dir: str, cas_root: str) -> dict:
    """Standalone verification against block files and the artifact store.

    ok iff (a) the embedded records match on-chain state at the pinned
    height, (b) the record digest recomputes, and (c) every referenced
    artifact re-hashes to its on-chain commitment. Discrepancies are
    enumerated, never raised.
    """
    discrepancies: List[str] = []
    height = int(proof.get("block_height", 0))
    block_dicts = load_block_dicts(block_dir)
    if height > len(block_dicts):
        discrepancies.append(
            f"proof pins height {height} but only {len(block_dicts)} blocks exist"
        )
        return {"ok": False, "discrepancies": discrepancies}
    replay = replay_blocks(block_dicts[:height])
    if not replay.ok:
        discrepancies.append(
            f"chain invalid at block {replay.first_bad_block}: {replay.error}"
        )
        return {"ok": False, "discrepancies": discrepancies}

    serial = proof.get("serialNumber", "")
    onchain_blade_raw = replay.world.get(BLADE_KEY_PREFIX + serial)
    if onchain_blade_raw is None:
        discrepancies.append(f"blade {serial} not on chain at height {height}")
        return {"ok": False, "discrepancies": discrepancies}
    onchain_blade = json.loads(onchain_blade_raw)
    if canonical_bytes(onchain_blade) != canonical_bytes(proof.get("blade")):
        discrepancies.append("blade record mismatch against on-chain state")

    onchain_events = []
    for event_id in onchain_blade["inspectionHistory"]:
        raw = replay.world.get(EVENT_KEY_PREFIX + event_id)
        if raw is None:
            discrepancies.append(f"inspection event missing on chain: {event_id}")
        else:
            onchain_events.append(json.loads(raw))
    proof_events = proof.get("inspections", [])
    if len(proof_events) != len(onchain_events):
        discrepancies.append(
            f"inspection count mismatch: proof has {len(proof_events)}, "
            f"chain has {len(onchain_events)}"
        )
    else:
        for onchain, bundled in zip(onchain_events, proof_events):
            if canonical_bytes(onchain) != canonical_bytes(bundled):
                discrepancies.append(
                    f"inspection event mismatch: {onchain['eventID']}"
                )

    expected_digest = record_digest(proof.get("blade"), proof_events)
    if proof.get("record_digest") != expected_digest:
        discrepancies.append("record digest mismatch")

    store = ContentStore(cas_root)
    for event in onchain_events:
        if not event.get("imageIPFS"):
            continue
        result = store.verify(event["imageIPFS"], event["imageHash"])
        if not result.verified:
            discrepancies.append(
                f"artifact hash mismatch for {event['eventID']}: "
                f"expected {event['imageHash'][:12]}..., got "
                f"{(result.actual_hash or 'missing')[:12]}..."
            )
    return {"ok": not discrepancies, "discrepancies": discrepancies}


def verify_event_artifact(network, store: ContentStore, event_id: str) -> Optional[dict]:
    """Verify one inspection event's artifact; None when the event is unknown."""
    raw = network.anchor_peer.get_state(EVENT_KEY_PREFIX + event_id)
    if raw is None:
        return None
    event = json.loads(raw)
    if not event.get("imageIPFS"):
        return {
            "eventID": event_id,
            "verified": True,
            "expected_hash": "",
            "actual_hash": "",
            "reason": "no artifact bound to this event",
        }
    result = store.verify(event["imageIPFS"], event["imageHash"])
    out = result.to_dict()
    out["eventID"] = event_id
    return out
