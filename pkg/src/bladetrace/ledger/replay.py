"""Standalone chain replay: rebuild state and re-check every hash and flag.

Works from block files alone (the genesis config carries the org roots and
peer identities), so auditors can verify a chain with the rest of the system
stopped.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..canonical import ZERO_HASH, canonical_bytes, sha256_hex
from ..identity import Identity, MembershipService
from .types import Block, ChainEvent, GENESIS_FN, Transaction, TxValidity
from .peer import validate_transactions
from .worldstate import WorldState


@dataclass
class ReplayResult:
    ok: bool
    first_bad_block: Optional[int] = None
    error: str = ""
    height: int = 0
    world: WorldState = field(default_factory=WorldState)
    config: dict = field(default_factory=dict)
    membership: Optional[MembershipService] = None
    events: List[ChainEvent] = field(default_factory=list)


def membership_from_config(config: dict) -> MembershipService:
    """Rebuild the trust set from the genesis channel config."""
    membership = MembershipService()
    for org in config.get("orgs", []):
        membership.register_root(org["msp_id"], bytes.fromhex(org["root_public_key"]))
    for org in config.get("orgs", []):
        for ident_dict in org.get("identities", []):
            membership.register_identity(Identity.from_dict(ident_dict))
    return membership


def genesis_config(block: Block) -> dict:
    tx = block.transactions[0]
    if tx.proposal.chaincode_fn != GENESIS_FN:
        raise ValueError("block 0 does not carry a config transaction")
    return json.loads(tx.proposal.args[0])


def _bad(result: ReplayResult, number: int, reason: str) -> ReplayResult:
    result.ok = False
    result.first_bad_block = number
    result.error = reason
    return result


def replay_blocks(block_dicts: List[Optional[dict]]) -> ReplayResult:
    """Re-validate a chain given raw block dicts (None marks an unparseable file)."""
    result = ReplayResult(ok=True)
    membership: Optional[MembershipService] = None
    min_orgs = 3
    prev_hash = ZERO_HASH
    for number, raw in enumerate(block_dicts):
        if raw is None:
            return _bad(result, number, "unparseable block file")
        try:
            block = Block.from_dict(raw)
        except (KeyError, TypeError, ValueError):
            return _bad(result, number, "malformed block structure")
        if block.number != number:
            return _bad(result, number, f"block number {block.number} at position {number}")
        if block.prev_hash != prev_hash:
            return _bad(result, number, "previous-hash link mismatch")
        expected_data = Block.compute_data_hash(block.commit_time, block.transactions)
        if block.data_hash != expected_data:
            return _bad(result, number, "data hash mismatch")
        if len(block.validity_flags) != len(block.transactions):
            return _bad(result, number, "validity flags do not cover transactions")
        if number == 0:
            try:
                result.config = genesis_config(block)
            except (ValueError, IndexError, json.JSONDecodeError):
                return _bad(result, number, "invalid genesis config")
            membership = membership_from_config(result.config)
            min_orgs = int(result.config.get("endorsement_min_orgs", 3))
            if block.validity_flags != [TxValidity.VALID.value]:
                return _bad(result, number, "genesis flags must be [valid]")
            flags = block.validity_flags
        else:
            assert membership is not None
            flags = validate_transactions(
                block.transactions, result.world.version, membership, min_orgs
            )
            if flags != block.validity_flags:
                return _bad(result, number, "validity flags do not recompute")
        for tx_index, (tx, flag) in enumerate(zip(block.transactions, flags)):
            if flag != TxValidity.VALID.value:
                continue
            for key, value in tx.rwset.writes:
                result.world.apply_write(
                    key, value, (number, tx_index), tx.proposal.tx_id, tx.proposal.timestamp
                )
            for event in tx.events:
                result.events.append(
                    ChainEvent(event.name, event.payload, tx.proposal.tx_id, number)
                )
        prev_hash = block.header_hash()
        result.height = number + 1
    result.membership = membership
    return result


def load_block_dicts(directory: str) -> List[Optional[dict]]:
    """Read block files in number order; None for files that fail to parse."""
    names = sorted(n for n in os.listdir(directory) if n.endswith(".json"))
    out: List[Optional[dict]] = []
    for name in names:
        try:
            with open(os.path.join(directory, name), "rb") as fh:
                out.append(json.loads(fh.read().decode("utf-8")))
        except (ValueError, OSError):
            out.append(None)
    return out


def replay_chain_dir(directory: str) -> ReplayResult:
    return replay_blocks(load_block_dicts(directory))


def verify_chain_files(directory: str) -> dict:
    result = replay_chain_dir(directory)
    report: Dict[str, object] = {"ok": result.ok, "first_bad_block": result.first_bad_block}
    if not result.ok:
        report["error"] = result.error
    return report


def replay_world_at_height(block_dicts: List[Optional[dict]], height: int) -> ReplayResult:
    """Replay only the first ``height`` blocks (e.g., to a proof's pinned height)."""
    return replay_blocks(block_dicts[:height])


def chain_digest(blocks: List[Block]) -> str:
    """Digest of all header hashes; equal iff two chains are identical."""
    return sha256_hex(canonical_bytes([b.header_hash() for b in blocks]))
