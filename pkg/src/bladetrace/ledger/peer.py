"""Peer logic: chaincode simulation, endorsement, block validation, commit.

Simulation runs against an immutable snapshot of committed state and never
mutates it; commit is strictly serialized per peer. Validation is a pure
function of (block, prior state, membership), so every peer derives
bit-identical validity flags and world states for the same block stream.
"""

from __future__ import annotations

import json
import threading
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..canonical import canonical_bytes, digest
from ..identity import MembershipService, SigningIdentity
from .blockstore import BlockStore
from .types import (
    Block,
    ChainEvent,
    Endorsement,
    GENESIS_FN,
    ReadWriteSet,
    Transaction,
    TxProposal,
    TxValidity,
    Version,
)
from .worldstate import SelectorError, WorldState


class ChaincodeError(Exception):
    """Deterministic contract rejection; the message is part of the contract."""


class BlockValidationError(Exception):
    """The block as a whole is unacceptable (broken chain, wrong height)."""


ChaincodeFn = Callable[["SimulationStub", List[str]], object]


class SimulationStub:
    """Chaincode view of the ledger during simulation.

    Records reads with their observed versions and buffers writes; reads of a
    key this transaction already wrote return the pending value without
    adding a read record.
    """

    def __init__(
        self,
        world: WorldState,
        proposal: TxProposal,
        channel_config: dict,
    ):
        self._world = world
        self._proposal = proposal
        self._config = channel_config
        self._reads: Dict[str, Optional[Version]] = {}
        self._writes: Dict[str, Optional[str]] = {}
        self.events: List[ChainEvent] = []

    # -- state access ---------------------------------------------------

    def get_state(self, key: str) -> Optional[str]:
        if key in self._writes:
            return self._writes[key]
        value = self._world.get(key)
        if key not in self._reads:
            self._reads[key] = self._world.version(key)
        return value

    def put_state(self, key: str, value: str) -> None:
        self._writes[key] = value

    def delete_state(self, key: str) -> None:
        self._writes[key] = None

    def query_json(self, selector: Dict[str, object]) -> List[Tuple[str, dict]]:
        """Rich query over the committed snapshot; results carry no read versions."""
        out: List[Tuple[str, dict]] = []
        for key, value in self._world.query(selector):
            if key in self._writes:
                continue  # pending writes shadow the snapshot
            out.append((key, json.loads(value)))
        for key in sorted(self._writes):
            value = self._writes[key]
            if value is None:
                continue
            from .worldstate import matches_selector

            if matches_selector(value, selector):
                out.append((key, json.loads(value)))
        out.sort(key=lambda kv: kv[0])
        return out

    # -- transaction context ---------------------------------------------

    @property
    def client_msp_id(self) -> str:
        return self._proposal.submitter[0]

    @property
    def client_id(self) -> str:
        return self._proposal.submitter[1]

    @property
    def timestamp(self) -> str:
        return self._proposal.timestamp

    def config_value(self, key: str, default=None):
        return self._config.get(key, default)

    def emit_event(self, name: str, payload: dict) -> None:
        self.events.append(ChainEvent(name=name, payload=canonical_bytes(payload)))

    # -- result extraction ------------------------------------------------

    def collect_rwset(self) -> ReadWriteSet:
        return ReadWriteSet(
            reads=sorted(self._reads.items()),
            writes=sorted(self._writes.items()),
        )


def make_response_payload(status: int, message: str, payload: object) -> bytes:
    return canonical_bytes({"status": status, "message": message, "payload": payload})


def parse_response_payload(raw: bytes) -> dict:
    return json.loads(raw.decode("utf-8"))


def endorsement_policy_met(
    tx: Transaction, membership: MembershipService, min_orgs: int
) -> bool:
    """True iff >= min_orgs distinct orgs validly endorsed this exact rwset."""
    actual_digest = tx.rwset.digest()
    endorsing_orgs = set()
    for end in tx.endorsements:
        if end.rwset_digest != actual_digest:
            continue
        identity = membership.get_identity(*end.endorser)
        if identity is None or identity.role != "peer":
            continue
        payload = Endorsement.signing_payload(
            tx.proposal.tx_id, end.rwset_digest, end.response_payload
        )
        if not membership.verify_with_identity(end.signature, payload, identity):
            continue
        endorsing_orgs.add(end.endorser[0])
    return len(endorsing_orgs) >= min_orgs


def validate_transactions(
    transactions: Sequence[Transaction],
    get_version: Callable[[str], Optional[Version]],
    membership: MembershipService,
    min_orgs: int,
) -> List[str]:
    """Deterministic per-transaction flags: endorsement policy then MVCC."""
    flags: List[str] = []
    written_this_block: set = set()
    for tx in transactions:
        if not endorsement_policy_met(tx, membership, min_orgs):
            flags.append(TxValidity.ENDORSEMENT_POLICY_FAILURE.value)
            continue
        conflict = False
        for key, observed in tx.rwset.reads:
            if key in written_this_block or get_version(key) != observed:
                conflict = True
                break
        if conflict:
            flags.append(TxValidity.MVCC_CONFLICT.value)
            continue
        for key, _value in tx.rwset.writes:
            written_this_block.add(key)
        flags.append(TxValidity.VALID.value)
    return flags


class Peer:
    """One organization's peer: endorser, validator, and committer."""

    def __init__(
        self,
        msp_id: str,
        endorser: SigningIdentity,
        membership: MembershipService,
        contracts: Dict[str, ChaincodeFn],
        channel_config: dict,
        block_dir: Optional[str] = None,
    ):
        self.msp_id = msp_id
        self._endorser = endorser
        self._membership = membership
        self._contracts = contracts
        self._config = channel_config
        self._store = BlockStore(block_dir)
        self._world = WorldState()
        self._lock = threading.RLock()
        self._event_subscribers: List[Callable[[ChainEvent], None]] = []
        # Rebuild world state if a persisted chain already exists.
        for block in self._store:
            self._apply_block(block)

    # -- public read surface ----------------------------------------------

    @property
    def height(self) -> int:
        with self._lock:
            return self._store.height

    @property
    def membership(self) -> MembershipService:
        return self._membership

    @property
    def channel_config(self) -> dict:
        return self._config

    def get_state(self, key: str) -> Optional[str]:
        with self._lock:
            return self._world.get(key)

    def query_state(self, selector: Dict[str, object]) -> List[Tuple[str, str]]:
        with self._lock:
            return self._world.query(selector)

    def get_history(self, key: str) -> List[dict]:
        with self._lock:
            return [h.to_dict() for h in self._world.history(key)]

    def get_block(self, number: int) -> Block:
        with self._lock:
            return self._store.get(number)

    def blocks(self) -> List[Block]:
        with self._lock:
            return list(self._store)

    def last_header_hash(self) -> str:
        with self._lock:
            last = self._store.last_block()
            from ..canonical import ZERO_HASH

            return last.header_hash() if last else ZERO_HASH

    def world_state_digest(self) -> str:
        with self._lock:
            return self._world.state_digest()

    def subscribe_events(self, callback: Callable[[ChainEvent], None]) -> None:
        self._event_subscribers.append(callback)

    # -- endorsement --------------------------------------------------------

    def simulate_and_endorse(
        self, proposal: TxProposal
    ) -> Tuple[ReadWriteSet, Endorsement, List[ChainEvent]]:
        """Execute the chaincode against a committed snapshot; no state mutation.

        Errors (unknown function, bad proposal signature, chaincode
        rejections) yield a signed rejection endorsement carrying the error.
        """
        with self._lock:
            world = self._world
            # Snapshot semantics: commit is serialized with this lock, so the
            # simulation sees one committed height throughout.
            stub = SimulationStub(world, proposal, self._config)
            error: Optional[str] = None
            result: object = None
            if proposal.chaincode_fn not in self._contracts:
                error = f"unknown function: {proposal.chaincode_fn}"
            elif not self._verify_proposal_signature(proposal):
                error = "proposal signature invalid"
            else:
                try:
                    result = self._contracts[proposal.chaincode_fn](stub, proposal.args)
                except ChaincodeError as exc:
                    error = str(exc)
            if error is not None:
                rwset = ReadWriteSet()
                response = make_response_payload(500, error, None)
                events: List[ChainEvent] = []
            else:
                rwset = stub.collect_rwset()
                response = make_response_payload(200, "", result)
                events = stub.events
            endorsement = Endorsement(
                endorser=(self._endorser.identity.msp_id, self._endorser.identity.common_name),
                rwset_digest=rwset.digest(),
                response_payload=response,
                signature=self._endorser.sign(
                    Endorsement.signing_payload(proposal.tx_id, rwset.digest(), response)
                ),
            )
            return rwset, endorsement, events

    def _verify_proposal_signature(self, proposal: TxProposal) -> bool:
        if proposal.client_signature is None:
            return False
        identity = self._membership.get_identity(*proposal.submitter)
        if identity is None:
            return False
        return self._membership.verify_with_identity(
            proposal.client_signature, proposal.signing_payload(), identity
        )

    # -- validation & commit --------------------------------------------------

    def validate_block(self, block: Block) -> List[str]:
        with self._lock:
            if block.number != self._store.height:
                raise BlockValidationError(
                    f"out-of-order block {block.number}, height {self._store.height}"
                )
            if block.prev_hash != self.last_header_hash():
                raise BlockValidationError(f"broken hash chain at block {block.number}")
            expected = Block.compute_data_hash(block.commit_time, block.transactions)
            if block.data_hash != expected:
                raise BlockValidationError(f"data hash mismatch at block {block.number}")
            if block.number == 0:
                return self._validate_genesis(block)
            min_orgs = int(self._config.get("endorsement_min_orgs", 3))
            return validate_transactions(
                block.transactions, self._world.version, self._membership, min_orgs
            )

    def _validate_genesis(self, block: Block) -> List[str]:
        if len(block.transactions) != 1 or block.transactions[0].proposal.chaincode_fn != GENESIS_FN:
            raise BlockValidationError("genesis block must carry exactly the config transaction")
        return [TxValidity.VALID.value]

    def commit_block(self, block: Block, flags: List[str]) -> int:
        """Append the block with its flags and apply valid writes; returns height."""
        with self._lock:
            committed = Block(
                number=block.number,
                prev_hash=block.prev_hash,
                data_hash=block.data_hash,
                commit_time=block.commit_time,
                transactions=block.transactions,
                validity_flags=flags,
            )
            self._store.append(committed)
            published = self._apply_block(committed)
        for event in published:
            for callback in self._event_subscribers:
                callback(event)
        return self._store.height

    def _apply_block(self, block: Block) -> List[ChainEvent]:
        published: List[ChainEvent] = []
        for tx_index, (tx, flag) in enumerate(zip(block.transactions, block.validity_flags)):
            if flag != TxValidity.VALID.value:
                continue
            for key, value in tx.rwset.writes:
                self._world.apply_write(
                    key, value, (block.number, tx_index), tx.proposal.tx_id, tx.proposal.timestamp
                )
            for event_index, event in enumerate(tx.events):
                published.append(
                    ChainEvent(
                        name=event.name,
                        payload=event.payload,
                        tx_id=tx.proposal.tx_id,
                        block_number=block.number,
                        tx_index=tx_index,
                        event_index=event_index,
                    )
                )
        return published

    def receive_block(self, number: int, commit_time: str, transactions: List[Transaction]) -> int:
        """Assemble, validate, and commit a block skeleton delivered by ordering."""
        with self._lock:
            block = Block(
                number=number,
                prev_hash=self.last_header_hash(),
                data_hash=Block.compute_data_hash(commit_time, transactions),
                commit_time=commit_time,
                transactions=transactions,
            )
            flags = self.validate_block(block)
            return self.commit_block(block, flags)

    # -- audit ------------------------------------------------------------------

    def verify_chain(self) -> dict:
        """Recompute all hash links and flags; corruption is a result, not an error."""
        from .replay import replay_blocks, verify_chain_files

        with self._lock:
            if self._store._dir:
                return verify_chain_files(self._store._dir)
            result = replay_blocks([b.to_dict() for b in self._store])
            return {"ok": result.ok, "first_bad_block": result.first_bad_block}
