"""Tamper experiments: artifact mutation and block-file mutation detection.

Each artifact trial mutates a random byte of a stored inspection image,
verifies against the on-chain hash (a mismatch is the expected outcome), and
restores the original bytes. Control trials verify untouched artifacts. The
chain trial mutates one committed block file and expects chain verification
to name a first bad block.
"""

from __future__ import annotations

import json
import os
import random
from typing import List, Optional

from ..cas import ContentStore
from ..contract.types import EVENT_KEY_PREFIX
from ..ledger.replay import replay_chain_dir, verify_chain_files


def committed_artifact_events(block_dir: str) -> List[dict]:
    """All committed inspection events that bind an artifact, from block files."""
    replay = replay_chain_dir(block_dir)
    if not replay.ok:
        raise RuntimeError(f"chain invalid at block {replay.first_bad_block}")
    events = []
    for key in replay.world.keys():
        if key.startswith(EVENT_KEY_PREFIX):
            doc = json.loads(replay.world.get(key))
            if doc.get("imageIPFS"):
                events.append(doc)
    events.sort(key=lambda d: d["eventID"])
    return events


def _flip_byte(path: str, offset: int) -> bytes:
    with open(path, "rb") as fh:
        original = fh.read()
    mutated = bytearray(original)
    mutated[offset] ^= 0xFF
    with open(path, "wb") as fh:
        fh.write(bytes(mutated))
    return original


def _restore(path: str, original: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(original)


def run_tamper_suite(
    block_dir: str,
    cas_root: str,
    trials: int = 100,
    controls: int = 100,
    seed: int = 0,
    block_trials: int = 1,
) -> dict:
    rng = random.Random(seed)
    store = ContentStore(cas_root)
    events = committed_artifact_events(block_dir)
    if not events:
        raise RuntimeError("no committed inspection artifacts to tamper with")

    tamper_results = []
    tamper_checks = []
    for _ in range(trials):
        event = rng.choice(events)
        path = store._path(event["imageIPFS"])
        size = os.path.getsize(path)
        offset = rng.randrange(size)
        original = _flip_byte(path, offset)
        try:
            result = store.verify(event["imageIPFS"], event["imageHash"])
        finally:
            _restore(path, original)
        tamper_checks.append(result.to_dict())
        tamper_results.append(
            {
                "eventID": event["eventID"],
                "offset": offset,
                "detected": not result.verified,
                "elapsed_ms": result.elapsed_ms,
            }
        )

    control_results = []
    for _ in range(controls):
        event = rng.choice(events)
        result = store.verify(event["imageIPFS"], event["imageHash"])
        control_results.append(
            {
                "eventID": event["eventID"],
                "verified": result.verified,
                "elapsed_ms": result.elapsed_ms,
            }
        )

    chain_results = []
    block_files = sorted(
        f for f in os.listdir(block_dir) if f.endswith(".json") and f != "0000000000.json"
    )
    for _ in range(block_trials):
        name = rng.choice(block_files)
        number = int(name.split(".")[0])
        path = os.path.join(block_dir, name)
        offset = rng.randrange(os.path.getsize(path))
        original = _flip_byte(path, offset)
        try:
            report = verify_chain_files(block_dir)
        finally:
            _restore(path, original)
        chain_results.append(
            {
                "block": number,
                "offset": offset,
                "detected": not report["ok"],
                "first_bad_block": report["first_bad_block"],
                "within_bound": (
                    report["first_bad_block"] is not None
                    and report["first_bad_block"] <= number + 1
                ),
            }
        )

    clean = verify_chain_files(block_dir)
    detected = sum(1 for r in tamper_results if r["detected"])
    false_pos = sum(1 for r in control_results if not r["verified"])
    return {
        "trials": trials,
        "detected": detected,
        "controls": controls,
        "false_positives": false_pos,
        "tamper_checks": tamper_checks,
        "artifact_trials": tamper_results,
        "control_trials": control_results,
        "chain_trials": chain_results,
        "chain_clean_after_restore": clean,
        "avg_verify_ms": round(
            sum(r["elapsed_ms"] for r in tamper_results + control_results)
            / max(1, trials + controls),
            3,
        ),
        "max_verify_ms": round(
            max(r["elapsed_ms"] for r in tamper_results + control_results), 3
        ),
    }
