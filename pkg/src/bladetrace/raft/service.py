"""Ordering service: opaque envelope replication and deterministic block cutting.

Orderers never execute chaincode. The leader appends envelope entries to the
replicated log and interleaves cut markers — one whenever the unmarked
envelope count reaches the batch cap, or the batch timeout elapses since the
first unmarked envelope. Every node derives the identical block stream by
folding its committed log: envelopes accumulate, a marker emits a block.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Callable, Dict, List, Optional

from ..canonical import canonical_bytes, digest
from ..identity import MembershipService, Signature
from ..ledger.types import Transaction
from .node import FileStableStore, LEADER, RaftNode, StableStore
from .simnet import SimNet

ACCEPTED = "accepted"
UNAVAILABLE = "unavailable"
REDIRECT = "redirect-to-leader"


@dataclass
class Envelope:
    transaction: Transaction
    submitter_signature: Signature

    def signing_payload(self) -> bytes:
        return canonical_bytes(self.transaction.to_dict())

    def to_dict(self) -> dict:
        return {
            "transaction": self.transaction.to_dict(),
            "submitter_signature": self.submitter_signature.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Envelope":
        return cls(
            transaction=Transaction.from_dict(d["transaction"]),
            submitter_signature=Signature.from_dict(d["submitter_signature"]),
        )


@dataclass
class BlockSkeleton:
    number: int
    commit_time: str
    envelopes: List[dict]  # envelope dicts, opaque to the orderers


@dataclass
class _FoldState:
    applied: int = 0
    pending: List[dict] = field(default_factory=list)
    blocks_emitted: int = 0


class OrderingService:
    """Three-node Raft cluster cutting an identical block stream for all peers."""

    def __init__(
        self,
        net: SimNet,
        node_ids: List[int] = (1, 2, 3),
        max_txs_per_block: int = 10,
        batch_timeout: float = 0.250,
        membership: Optional[MembershipService] = None,
        data_dir: Optional[str] = None,
        time_anchor: Optional[datetime] = None,
    ):
        self.net = net
        self.max_txs_per_block = max_txs_per_block
        self.batch_timeout = batch_timeout
        self._membership = membership
        self._anchor = time_anchor or datetime(2025, 1, 1, tzinfo=timezone.utc)
        self._deliver: List[Callable[[BlockSkeleton], None]] = []
        self._delivered_count = 0
        self._delivered_digests: Dict[int, str] = {}
        self._folds: Dict[int, _FoldState] = {}
        self._batch_deadline: Optional[float] = None
        self._batch_term: int = -1

        self.nodes: Dict[int, RaftNode] = {}
        ids = list(node_ids)
        for node_id in ids:
            if data_dir:
                store: StableStore = FileStableStore(
                    os.path.join(data_dir, f"orderer{node_id}.log")
                )
            else:
                store = StableStore()
            node = RaftNode(node_id, ids, store, net.timeout_rng)
            self.nodes[node_id] = node
            self._folds[node_id] = _FoldState()
            net.add_node(node)
        net.on_step(self._poll)

    # -- client surface ----------------------------------------------------------

    def on_deliver(self, callback: Callable[[BlockSkeleton], None]) -> None:
        self._deliver.append(callback)

    def current_leader(self) -> Optional[RaftNode]:
        leaders = [n for n in self.nodes.values() if n.alive and n.role == LEADER]
        if not leaders:
            return None
        return max(leaders, key=lambda n: n.current_term)

    def submit(self, envelope: Envelope) -> str:
        """Route an envelope to the current leader; verifies the submitter signature."""
        if self._membership is not None:
            if not self._membership.verify(
                envelope.submitter_signature, envelope.signing_payload()
            ):
                return "rejected: bad envelope signature"
        return self.submit_raw(
            envelope.transaction.proposal.tx_id, envelope.to_dict()
        )

    def submit_raw(self, tx_id: str, envelope_dict: dict) -> str:
        leader = self.current_leader()
        if leader is None:
            return UNAVAILABLE
        return self.submit_to(leader.node_id, tx_id, envelope_dict)

    def submit_to(self, node_id: int, tx_id: str, envelope_dict: dict) -> str:
        node = self.nodes[node_id]
        if not node.alive:
            return UNAVAILABLE
        if node.role != LEADER:
            return REDIRECT
        if node.has_tx(tx_id):
            return ACCEPTED  # duplicate submission; already in the log
        payload = {"kind": "tx", "tx_id": tx_id, "envelope": envelope_dict}
        for dst, msg in node.client_append(payload, self.net.now):
            self.net.send(node.node_id, dst, msg)
        self._after_leader_append(node)
        return ACCEPTED

    def crash(self, node_id: int) -> None:
        self.net.crash(node_id)

    def recover(self, node_id: int) -> None:
        self._folds[node_id] = _FoldState()
        self.net.recover(node_id)

    # -- block cutting ---------------------------------------------------------------

    def _unmarked_count(self, node: RaftNode) -> int:
        count = 0
        for term, payload in reversed(node.log):
            kind = payload.get("kind")
            if kind == "cut":
                break
            if kind == "tx":
                count += 1
        return count

    def _after_leader_append(self, leader: RaftNode) -> None:
        count = self._unmarked_count(leader)
        if count >= self.max_txs_per_block:
            self._append_marker(leader)
        elif count > 0 and self._batch_deadline is None:
            self._batch_deadline = self.net.now + self.batch_timeout
            self._batch_term = leader.current_term

    def _append_marker(self, leader: RaftNode) -> None:
        commit_time = self.iso_at(self.net.now)
        for dst, msg in leader.client_append(
            {"kind": "cut", "commit_time": commit_time}, self.net.now
        ):
            self.net.send(leader.node_id, dst, msg)
        self._batch_deadline = None

    def _poll(self) -> None:
        """Per-event hook: leader batching deadlines plus committed-log folding."""
        leader = self.current_leader()
        if leader is not None:
            count = self._unmarked_count(leader)
            if count == 0:
                self._batch_deadline = None
            elif self._batch_deadline is None or self._batch_term != leader.current_term:
                # Fresh leadership (or an inherited batch): restart the window.
                self._batch_deadline = self.net.now + self.batch_timeout
                self._batch_term = leader.current_term
            elif self.net.now >= self._batch_deadline:
                self._append_marker(leader)
        for node in self.nodes.values():
            if node.alive:
                self._fold(node)

    def _fold(self, node: RaftNode) -> None:
        fold = self._folds[node.node_id]
        while fold.applied < node.commit_index:
            fold.applied += 1
            term, payload = node.entry(fold.applied)
            kind = payload.get("kind")
            if kind == "tx":
                fold.pending.append(payload["envelope"])
            elif kind == "cut" and fold.pending:
                fold.blocks_emitted += 1
                skeleton = BlockSkeleton(
                    number=fold.blocks_emitted,
                    commit_time=payload["commit_time"],
                    envelopes=fold.pending,
                )
                fold.pending = []
                self._emit(skeleton)

    def _emit(self, skeleton: BlockSkeleton) -> None:
        """Deliver each block number exactly once; cross-check replica agreement."""
        block_digest = digest(
            {"number": skeleton.number, "commit_time": skeleton.commit_time,
             "envelopes": skeleton.envelopes}
        )
        seen = self._delivered_digests.get(skeleton.number)
        if seen is not None:
            assert seen == block_digest, f"orderers diverged at block {skeleton.number}"
            return
        self._delivered_digests[skeleton.number] = block_digest
        assert skeleton.number == self._delivered_count + 1, "block numbering gap"
        self._delivered_count += 1
        for callback in self._deliver:
            callback(skeleton)

    # -- reporting ----------------------------------------------------------------

    def iso_at(self, sim_time: float) -> str:
        at = self._anchor + timedelta(seconds=sim_time)
        return at.isoformat().replace("+00:00", "Z")

    def committed_tx_ids(self, node_id: int) -> List[str]:
        node = self.nodes[node_id]
        out = []
        for i in range(1, node.commit_index + 1):
            _term, payload = node.entry(i)
            if payload.get("kind") == "tx":
                out.append(payload["tx_id"])
        return out

    def committed_prefix_digest(self, node_id: int, upto: int) -> str:
        node = self.nodes[node_id]
        return digest([[term, payload] for term, payload in node.log[:upto]])

    def log_digest(self, node_id: int) -> str:
        node = self.nodes[node_id]
        return digest([[term, payload] for term, payload in node.log])

    def committed_log_digest(self, node_id: int) -> str:
        node = self.nodes[node_id]
        return digest(
            [[term, payload] for term, payload in node.log[: node.commit_index]]
        )

    def report(self) -> dict:
        return {
            "nodes": {
                str(nid): {
                    "alive": n.alive,
                    "role": n.role,
                    "term": n.current_term,
                    "commit_index": n.commit_index,
                    "log_length": n.last_log_index(),
                    "log_digest": self.log_digest(nid),
                    "committed_log_digest": self.committed_log_digest(nid),
                    "elections_won": n.elections_won,
                }
                for nid, n in self.nodes.items()
            },
            "blocks_delivered": self._delivered_count,
            "messages_sent": self.net.messages_sent,
            "messages_dropped": self.net.messages_dropped,
        }

    def log_matching_ok(self) -> bool:
        """Raft log matching: same (index, term) implies identical prefixes."""
        nodes = list(self.nodes.values())
        for i, a in enumerate(nodes):
            for b in nodes[i + 1 :]:
                upto = min(a.last_log_index(), b.last_log_index())
                for index in range(upto, 0, -1):
                    if a.entry(index)[0] == b.entry(index)[0]:
                        if a.log[:index] != b.log[:index]:
                            return False
                        break
        return True


def run_scenario(scenario: dict) -> dict:
    """Run a JSON fault scenario against a fresh cluster; returns a run report.

    Scenario keys: seed, duration_s, submissions [[time, tx_id], ...],
    crash_schedule [[time, node, "crash"|"recover"], ...], drop_prob,
    min_delay, max_delay, max_txs_per_block, batch_timeout, retry_interval.

    Submissions are retried (same tx_id) until they appear in a delivered
    block, mirroring the gateway's retry contract; the replicated-log dedup
    keeps each envelope at most once.
    """
    net = SimNet(
        seed=scenario.get("seed", 0),
        min_delay=scenario.get("min_delay", 0.001),
        max_delay=scenario.get("max_delay", 0.005),
        drop_prob=scenario.get("drop_prob", 0.0),
    )
    service = OrderingService(
        net,
        max_txs_per_block=scenario.get("max_txs_per_block", 10),
        batch_timeout=scenario.get("batch_timeout", 0.250),
    )
    delivered: List[BlockSkeleton] = []
    delivered_tx_ids: set = set()

    def _on_block(b: BlockSkeleton) -> None:
        delivered.append(b)
        for env in b.envelopes:
            delivered_tx_ids.add(env["transaction"]["proposal"]["tx_id"])

    service.on_deliver(_on_block)

    submitted: List[str] = []
    retry_interval = scenario.get("retry_interval", 0.200)
    duration = scenario.get("duration_s", 10.0)

    def _submit(tx_id: str) -> None:
        submitted.append(tx_id)
        service.submit_raw(tx_id, {"transaction": {"proposal": {"tx_id": tx_id}}})

    def _retry() -> None:
        for tx_id in submitted:
            if tx_id not in delivered_tx_ids:
                service.submit_raw(
                    tx_id, {"transaction": {"proposal": {"tx_id": tx_id}}}
                )
        if net.now + retry_interval < duration:
            net.call_at(net.now + retry_interval, _retry)

    for at, tx_id in scenario.get("submissions", []):
        net.call_at(at, lambda t=tx_id: _submit(t))
    for at, node_id, action in scenario.get("crash_schedule", []):
        if action == "crash":
            net.schedule_crash(at, node_id)
        else:
            net.schedule_recover(at, node_id)
    net.call_at(retry_interval, _retry)

    net.run_until(predicate=None, max_time=duration)

    # Log matching over the common committed prefix of alive nodes.
    alive = [n for n in service.nodes.values() if n.alive]
    prefix_consistent = True
    if len(alive) >= 2:
        upto = min(n.commit_index for n in alive)
        digests = {service.committed_prefix_digest(n.node_id, upto) for n in alive}
        prefix_consistent = len(digests) == 1

    report = service.report()
    report["submitted"] = submitted
    report["delivered_blocks"] = [
        {"number": b.number, "commit_time": b.commit_time,
         "tx_ids": [e["transaction"]["proposal"]["tx_id"] for e in b.envelopes]}
        for b in delivered
    ]
    report["delivered_tx_ids"] = sorted(delivered_tx_ids)
    report["prefix_consistent"] = prefix_consistent
    report["log_matching_ok"] = service.log_matching_ok()
    return report


def load_scenario(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
