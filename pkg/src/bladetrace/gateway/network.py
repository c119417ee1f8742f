"""In-process channel: four peers, a three-node ordering cluster, one chaincode.

The gateway holds no writable blade state; every mutation runs the full
endorse -> order -> validate -> commit path and blocks until commit. Reads
evaluate the chaincode against one peer without ordering.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Tuple

from ..canonical import canonical_bytes
from ..contract import BladeLifecycleContract
from ..identity import MembershipService, SigningIdentity, save_wallet
from ..ledger.peer import ChaincodeError, Peer
from ..ledger.types import (
    ChainEvent,
    Endorsement,
    GENESIS_FN,
    ReadWriteSet,
    Transaction,
    TxProposal,
    TxValidity,
)
from ..raft.service import ACCEPTED, Envelope, OrderingService, UNAVAILABLE
from ..raft.simnet import SimNet

logger = logging.getLogger(__name__)

DEFAULT_ORGS = ("OEM", "AIRLINE", "MRO", "REGULATOR")
CLIENT_USERS = {
    "OEM": "qa",
    "AIRLINE": "ops1",
    "MRO": "inspector1",
    "REGULATOR": "auditor1",
}
CHANNEL_NAME = "blade-lifecycle-channel"


class GatewayError(Exception):
    pass


class ChaincodeRejection(GatewayError):
    """A deterministic contract rejection surfaced through the gateway."""


class EndorsementMismatch(GatewayError):
    """Peers returned fewer than the quorum of matching endorsements."""


class OrderingTimeout(GatewayError):
    """The ordering service stayed unavailable or the commit never arrived."""


class MvccConflict(GatewayError):
    """The transaction was invalidated at commit by a stale read."""


@dataclass
class NetworkConfig:
    orgs: Tuple[str, ...] = DEFAULT_ORGS
    thresholds: dict = field(
        default_factory=lambda: {"hours": "500", "cycles": 500, "days": 180}
    )
    endorsement_min_orgs: int = 3
    role_gates_enabled: bool = True
    max_txs_per_block: int = 10
    batch_timeout: float = 0.250
    seed: int = 0
    time_scale: float = 10.0
    commit_timeout_s: float = 30.0
    submit_backoff_base: float = 0.1
    submit_backoff_cap: float = 5.0
    min_delay: float = 0.001
    max_delay: float = 0.005


@dataclass
class CommitResult:
    block_number: int
    tx_index: int
    flag: str


class _PendingTx:
    def __init__(self, response: dict):
        self.event = threading.Event()
        self.response = response
        self.result: Optional[CommitResult] = None


class Network:
    def __init__(self, workdir: Optional[str] = None, config: Optional[NetworkConfig] = None):
        self.config = config or NetworkConfig()
        self.workdir = workdir
        self.membership = MembershipService()
        self._clients: Dict[str, SigningIdentity] = {}
        self._contract = BladeLifecycleContract(error_cls=ChaincodeError)
        self._pending: Dict[str, _PendingTx] = {}
        self._pending_lock = threading.Lock()
        self._per_serial_locks: Dict[str, threading.Lock] = {}
        self._serial_lock_guard = threading.Lock()
        self._event_log: List[ChainEvent] = []
        self._event_subscribers: List[Callable[[int, ChainEvent], None]] = []
        self._event_lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()

        peer_signers: Dict[str, SigningIdentity] = {}
        if workdir and self._has_persisted_channel(workdir):
            self._restore_channel(workdir, peer_signers)
        else:
            self._bootstrap_channel(workdir, peer_signers)

        contracts = dict(self._contract.functions())
        self.peers: Dict[str, Peer] = {}
        for org in self.config.orgs:
            block_dir = os.path.join(workdir, "peers", org, "blocks") if workdir else None
            self.peers[org] = Peer(
                msp_id=org,
                endorser=peer_signers[org],
                membership=self.membership,
                contracts=contracts,
                channel_config=self.channel_config,
                block_dir=block_dir,
            )
        self._commit_genesis()

        self.net = SimNet(
            seed=self.config.seed,
            min_delay=self.config.min_delay,
            max_delay=self.config.max_delay,
        )
        self.ordering = OrderingService(
            self.net,
            max_txs_per_block=self.config.max_txs_per_block,
            batch_timeout=self.config.batch_timeout,
            membership=self.membership,
            data_dir=os.path.join(workdir, "orderers") if workdir else None,
            time_anchor=datetime.now(timezone.utc),
        )
        self.ordering.on_deliver(self._on_block_skeleton)
        self.anchor_peer.subscribe_events(self._on_chain_event)

    # -- genesis -------------------------------------------------------------

    def _genesis_path(self, workdir: str) -> str:
        return os.path.join(workdir, "peers", self.config.orgs[0], "blocks", "0000000000.json")

    def _has_persisted_channel(self, workdir: str) -> bool:
        return os.path.exists(self._genesis_path(workdir))

    def _bootstrap_channel(
        self, workdir: Optional[str], peer_signers: Dict[str, SigningIdentity]
    ) -> None:
        org_entries = []
        for org in self.config.orgs:
            root = self.membership.create_org(org)
            admin = self.membership.issue_identity(root, "admin", "admin")
            peer_signer = self.membership.issue_identity(root, "peer0", "peer")
            client = self.membership.issue_identity(
                root, CLIENT_USERS.get(org, "user1"), "client"
            )
            peer_signers[org] = peer_signer
            self._clients[org] = client
            if workdir:
                wallet_dir = os.path.join(workdir, "wallets")
                for signer in (admin, peer_signer, client):
                    save_wallet(wallet_dir, signer)
            org_entries.append(
                {
                    "msp_id": org,
                    "root_public_key": root.root_public_key.hex(),
                    "identities": [
                        admin.identity.to_dict(),
                        peer_signer.identity.to_dict(),
                        client.identity.to_dict(),
                    ],
                }
            )
        self.channel_config = {
            "channel": CHANNEL_NAME,
            "org_ids": list(self.config.orgs),
            "orgs": org_entries,
            "thresholds": self.config.thresholds,
            "endorsement_min_orgs": self.config.endorsement_min_orgs,
            "role_gates_enabled": self.config.role_gates_enabled,
            "max_txs_per_block": self.config.max_txs_per_block,
            "batch_timeout_ms": int(self.config.batch_timeout * 1000),
        }

    def _restore_channel(self, workdir: str, peer_signers: Dict[str, SigningIdentity]) -> None:
        """Rebuild trust set and wallets from the persisted genesis block."""
        from ..identity import load_org_wallets
        from ..ledger.replay import membership_from_config

        with open(self._genesis_path(workdir), "rb") as fh:
            genesis = json.loads(fh.read().decode("utf-8"))
        config_json = genesis["data"]["transactions"][0]["proposal"]["args"][0]
        self.channel_config = json.loads(config_json)
        self.config.orgs = tuple(self.channel_config["org_ids"])
        self.config.endorsement_min_orgs = int(self.channel_config["endorsement_min_orgs"])
        self.membership = membership_from_config(self.channel_config)
        wallet_dir = os.path.join(workdir, "wallets")
        for org in self.config.orgs:
            wallets = load_org_wallets(wallet_dir, org)
            peer_signers[org] = wallets["peer0"]
            self._clients[org] = wallets[CLIENT_USERS.get(org, "user1")]
        logger.info("restored channel %s from %s", self.channel_config["channel"], workdir)

    def _commit_genesis(self) -> None:
        proposal = TxProposal(
            tx_id="genesis",
            chaincode_fn=GENESIS_FN,
            args=[canonical_bytes(self.channel_config).decode("utf-8")],
            submitter=("", ""),
            timestamp="1970-01-01T00:00:00Z",
        )
        genesis_tx = Transaction(proposal=proposal, rwset=ReadWriteSet(), endorsements=[])
        for peer in self.peers.values():
            if peer.height == 0:
                peer.receive_block(0, "1970-01-01T00:00:00Z", [genesis_tx])

    # -- lifecycle -------------------------------------------------------------

    @property
    def anchor_peer(self) -> Peer:
        return self.peers[self.config.orgs[0]]

    def start(self) -> None:
        """Start the live pump and wait for a leader."""
        if self._thread is not None:
            return
        self._stop.clear()
        self._thread = threading.Thread(
            target=self.net.pump,
            kwargs={"stop": self._stop, "time_scale": self.config.time_scale},
            daemon=True,
            name="ordering-pump",
        )
        self._thread.start()
        deadline = time.monotonic() + 10.0
        while time.monotonic() < deadline:
            if self.ordering.current_leader() is not None:
                return
            time.sleep(0.005)
        raise OrderingTimeout("no ordering leader elected at startup")

    def stop(self) -> None:
        if self._thread is None:
            return
        self._stop.set()
        self._thread.join(timeout=5.0)
        self._thread = None

    @property
    def live(self) -> bool:
        return self._thread is not None

    def crash_orderer(self, node_id: int) -> None:
        self._call_in_pump(lambda: self.ordering.crash(node_id))

    def recover_orderer(self, node_id: int) -> None:
        self._call_in_pump(lambda: self.ordering.recover(node_id))

    def _call_in_pump(self, fn: Callable[[], None]) -> None:
        if self.live:
            done = threading.Event()

            def wrapped() -> None:
                fn()
                done.set()

            self.net.post(wrapped)
            done.wait(timeout=5.0)
        else:
            fn()

    # -- client identities ----------------------------------------------------

    def client_identity(self, org: str) -> SigningIdentity:
        if org not in self._clients:
            raise GatewayError(f"unknown organization: {org}")
        return self._clients[org]

    def now_iso(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="microseconds").replace(
            "+00:00", "Z"
        )

    # -- read path ------------------------------------------------------------

    def evaluate(self, org: str, fn: str, args: List[str], peer: Optional[Peer] = None) -> object:
        """Run a read-only chaincode function against one peer's committed state."""
        signer = self.client_identity(org)
        proposal = self._make_proposal(signer, fn, args, self.now_iso())
        target = peer or self.peers.get(org, self.anchor_peer)
        _rwset, endorsement, _events = target.simulate_and_endorse(proposal)
        response = json.loads(endorsement.response_payload.decode("utf-8"))
        if response["status"] != 200:
            raise ChaincodeRejection(response["message"])
        return response["payload"]

    # -- write path -------------------------------------------------------------

    def submit(
        self,
        org: str,
        fn: str,
        args: List[str],
        timestamp: Optional[str] = None,
        tx_id: Optional[str] = None,
    ) -> dict:
        """Full transaction path; blocks until commit and returns the response.

        Raises ChaincodeRejection before ordering when simulation fails, and
        MvccConflict when validation invalidates the transaction at commit.
        """
        serial = args[0] if args else ""
        lock = self._serial_lock(serial)
        with lock:
            return self._submit_locked(org, fn, args, timestamp, tx_id)

    def _serial_lock(self, serial: str) -> threading.Lock:
        with self._serial_lock_guard:
            if serial not in self._per_serial_locks:
                self._per_serial_locks[serial] = threading.Lock()
            return self._per_serial_locks[serial]

    def _make_proposal(
        self, signer: SigningIdentity, fn: str, args: List[str], timestamp: str, tx_id=None
    ) -> TxProposal:
        proposal = TxProposal(
            tx_id=tx_id or uuid.uuid4().hex,
            chaincode_fn=fn,
            args=args,
            submitter=(signer.identity.msp_id, signer.identity.common_name),
            timestamp=timestamp,
        )
        proposal.client_signature = signer.sign(proposal.signing_payload())
        return proposal

    def endorse(
        self, org: str, fn: str, args: List[str], timestamp: Optional[str] = None, tx_id=None
    ) -> Tuple[Transaction, dict]:
        """Collect endorsements from all peers; requires a matching quorum."""
        signer = self.client_identity(org)
        proposal = self._make_proposal(signer, fn, args, timestamp or self.now_iso(), tx_id)
        groups: Dict[Tuple[str, bytes], dict] = {}
        for peer in self.peers.values():
            rwset, endorsement, events = peer.simulate_and_endorse(proposal)
            key = (endorsement.rwset_digest, endorsement.response_payload)
            group = groups.setdefault(
                key, {"rwset": rwset, "endorsements": [], "events": events}
            )
            group["endorsements"].append(endorsement)
        best_key = max(groups, key=lambda k: len(groups[k]["endorsements"]))
        best = groups[best_key]
        response = json.loads(best_key[1].decode("utf-8"))
        if response["status"] != 200:
            raise ChaincodeRejection(response["message"])
        if len(best["endorsements"]) < self.config.endorsement_min_orgs:
            raise EndorsementMismatch(
                f"only {len(best['endorsements'])} matching endorsements "
                f"(need {self.config.endorsement_min_orgs}); rwset digests diverged"
            )
        transaction = Transaction(
            proposal=proposal,
            rwset=best["rwset"],
            endorsements=best["endorsements"],
            events=best["events"],
        )
        return transaction, response

    def _submit_locked(
        self,
        org: str,
        fn: str,
        args: List[str],
        timestamp: Optional[str],
        tx_id: Optional[str],
    ) -> dict:
        transaction, response = self.endorse(org, fn, args, timestamp, tx_id)
        signer = self.client_identity(org)
        envelope = Envelope(
            transaction=transaction,
            submitter_signature=signer.sign(canonical_bytes(transaction.to_dict())),
        )
        pending = _PendingTx(response)
        with self._pending_lock:
            self._pending[transaction.proposal.tx_id] = pending
        try:
            result = self._order_and_await(envelope, pending)
        finally:
            with self._pending_lock:
                self._pending.pop(transaction.proposal.tx_id, None)
        if result.flag == TxValidity.MVCC_CONFLICT.value:
            raise MvccConflict(f"transaction {transaction.proposal.tx_id} hit a stale read")
        if result.flag != TxValidity.VALID.value:
            raise GatewayError(f"transaction flagged {result.flag}")
        payload = dict(response["payload"]) if isinstance(response["payload"], dict) else response["payload"]
        return {
            "tx_id": transaction.proposal.tx_id,
            "block_number": result.block_number,
            "payload": payload,
        }

    def _order_and_await(self, envelope: Envelope, pending: _PendingTx) -> CommitResult:
        """Submit to ordering with retry/backoff (same tx_id), then await commit."""
        deadline = time.monotonic() + self.config.commit_timeout_s
        backoff = self.config.submit_backoff_base
        while True:
            ack = self._submit_once(envelope)
            if ack == ACCEPTED:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    raise OrderingTimeout("commit wait exhausted")
                if self.live:
                    if pending.event.wait(timeout=min(remaining, backoff * 4)):
                        assert pending.result is not None
                        return pending.result
                    # Not committed yet: the leader may have crashed after
                    # accepting; resubmit (deduplicated by tx_id).
                else:
                    self.net.run_until(pending.event.is_set, max_time=self.net.now + 30.0)
                    if pending.result is not None:
                        return pending.result
                    raise OrderingTimeout("commit not reached in deterministic run")
            else:
                if time.monotonic() >= deadline:
                    raise OrderingTimeout(f"ordering unavailable: {ack}")
                if self.live:
                    time.sleep(backoff)
                else:
                    self.net.run_for(backoff)
            backoff = min(backoff * 2, self.config.submit_backoff_cap)
            if time.monotonic() >= deadline:
                raise OrderingTimeout("ordering submission timed out")

    def _submit_once(self, envelope: Envelope) -> str:
        if not self.live:
            return self.ordering.submit(envelope)
        box: Dict[str, str] = {}
        done = threading.Event()

        def do_submit() -> None:
            box["ack"] = self.ordering.submit(envelope)
            done.set()

        self.net.post(do_submit)
        if not done.wait(timeout=5.0):
            return UNAVAILABLE
        return box["ack"]

    # -- block delivery ----------------------------------------------------------

    def _on_block_skeleton(self, skeleton) -> None:
        if skeleton.number <= self.anchor_peer.height - 1:
            return  # replayed delivery after an orderer (or process) restart
        transactions = [Transaction.from_dict(e["transaction"]) for e in skeleton.envelopes]
        flags_by_peer = []
        for peer in self.peers.values():
            peer.receive_block(skeleton.number, skeleton.commit_time, transactions)
            flags_by_peer.append(peer.get_block(skeleton.number).validity_flags)
        assert all(f == flags_by_peer[0] for f in flags_by_peer), "peers diverged on flags"
        flags = flags_by_peer[0]
        for tx_index, tx in enumerate(transactions):
            with self._pending_lock:
                pending = self._pending.get(tx.proposal.tx_id)
            if pending is not None:
                pending.result = CommitResult(skeleton.number, tx_index, flags[tx_index])
                pending.event.set()

    # -- events ---------------------------------------------------------------------

    def _on_chain_event(self, event: ChainEvent) -> None:
        with self._event_lock:
            seq = len(self._event_log)
            self._event_log.append(event)
            subscribers = list(self._event_subscribers)
        for callback in subscribers:
            callback(seq, event)

    def subscribe_events(self, callback: Callable[[int, ChainEvent], None]) -> Callable[[], None]:
        with self._event_lock:
            self._event_subscribers.append(callback)

        def unsubscribe() -> None:
            with self._event_lock:
                if callback in self._event_subscribers:
                    self._event_subscribers.remove(callback)

        return unsubscribe

    def events_since(self, cursor: int) -> List[Tuple[int, ChainEvent]]:
        with self._event_lock:
            return list(enumerate(self._event_log))[cursor:]

    def event_count(self) -> int:
        with self._event_lock:
            return len(self._event_log)
