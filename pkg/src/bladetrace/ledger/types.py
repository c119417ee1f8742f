"""Wire types for the endorse-order-validate transaction flow.

Everything here has a deterministic dict form so digests and block files are
byte-identical across peers. Write values travel as UTF-8 JSON text (hex for
arbitrary bytes would also work; all contract values are JSON).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from ..canonical import canonical_bytes, digest, sha256_hex
from ..identity import Signature

# A state version is the (block_number, tx_index) that last wrote the key.
Version = Tuple[int, int]

GENESIS_FN = "_config"


class TxValidity(str, Enum):
    VALID = "valid"
    ENDORSEMENT_POLICY_FAILURE = "endorsement_policy_failure"
    MVCC_CONFLICT = "mvcc_conflict"


@dataclass
class TxProposal:
    tx_id: str
    chaincode_fn: str
    args: List[str]
    submitter: Tuple[str, str]  # (msp_id, common_name)
    timestamp: str  # ISO 8601; the only clock the chaincode ever sees
    client_signature: Optional[Signature] = None

    def signing_payload(self) -> bytes:
        return canonical_bytes(
            {
                "tx_id": self.tx_id,
                "chaincode_fn": self.chaincode_fn,
                "args": self.args,
                "submitter": list(self.submitter),
                "timestamp": self.timestamp,
            }
        )

    def to_dict(self) -> dict:
        d = {
            "tx_id": self.tx_id,
            "chaincode_fn": self.chaincode_fn,
            "args": self.args,
            "submitter": list(self.submitter),
            "timestamp": self.timestamp,
        }
        if self.client_signature is not None:
            d["client_signature"] = self.client_signature.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TxProposal":
        sig = d.get("client_signature")
        return cls(
            tx_id=d["tx_id"],
            chaincode_fn=d["chaincode_fn"],
            args=list(d["args"]),
            submitter=(d["submitter"][0], d["submitter"][1]),
            timestamp=d["timestamp"],
            client_signature=Signature.from_dict(sig) if sig else None,
        )


@dataclass
class ReadWriteSet:
    reads: List[Tuple[str, Optional[Version]]] = field(default_factory=list)
    writes: List[Tuple[str, Optional[str]]] = field(default_factory=list)  # None = delete

    def to_dict(self) -> dict:
        return {
            "reads": [[k, list(v) if v is not None else None] for k, v in self.reads],
            "writes": [[k, v] for k, v in self.writes],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReadWriteSet":
        return cls(
            reads=[(k, (v[0], v[1]) if v is not None else None) for k, v in d["reads"]],
            writes=[(k, v) for k, v in d["writes"]],
        )

    def digest(self) -> str:
        return digest(self.to_dict())


@dataclass
class Endorsement:
    endorser: Tuple[str, str]
    rwset_digest: str
    response_payload: bytes  # canonical JSON of {"status","message","payload"}
    signature: Signature

    @staticmethod
    def signing_payload(tx_id: str, rwset_digest: str, response_payload: bytes) -> bytes:
        return canonical_bytes(
            {
                "tx_id": tx_id,
                "rwset_digest": rwset_digest,
                "response_payload": response_payload.decode("utf-8"),
            }
        )

    def to_dict(self) -> dict:
        return {
            "endorser": list(self.endorser),
            "rwset_digest": self.rwset_digest,
            "response_payload": self.response_payload.decode("utf-8"),
            "signature": self.signature.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Endorsement":
        return cls(
            endorser=(d["endorser"][0], d["endorser"][1]),
            rwset_digest=d["rwset_digest"],
            response_payload=d["response_payload"].encode("utf-8"),
            signature=Signature.from_dict(d["signature"]),
        )


@dataclass
class ChainEvent:
    name: str
    payload: bytes  # JSON bytes
    tx_id: str = ""
    block_number: int = -1
    tx_index: int = -1
    event_index: int = -1

    def to_dict(self) -> dict:
        return {"name": self.name, "payload": self.payload.decode("utf-8")}

    @classmethod
    def from_dict(cls, d: dict) -> "ChainEvent":
        return cls(name=d["name"], payload=d["payload"].encode("utf-8"))


@dataclass
class Transaction:
    proposal: TxProposal
    rwset: ReadWriteSet
    endorsements: List[Endorsement]
    events: List[ChainEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "proposal": self.proposal.to_dict(),
            "rwset": self.rwset.to_dict(),
            "endorsements": [e.to_dict() for e in self.endorsements],
            "events": [e.to_dict() for e in self.events],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transaction":
        return cls(
            proposal=TxProposal.from_dict(d["proposal"]),
            rwset=ReadWriteSet.from_dict(d["rwset"]),
            endorsements=[Endorsement.from_dict(e) for e in d["endorsements"]],
            events=[ChainEvent.from_dict(e) for e in d["events"]],
        )


@dataclass
class Block:
    number: int
    prev_hash: str
    data_hash: str
    commit_time: str
    transactions: List[Transaction]
    validity_flags: List[str] = field(default_factory=list)

    @staticmethod
    def compute_data_hash(commit_time: str, transactions: List[Transaction]) -> str:
        # The data region covers the orderer-assigned commit time as well as
        # the transaction list, so every byte of it is tamper-evident.
        return digest(
            {
                "commit_time": commit_time,
                "transactions": [t.to_dict() for t in transactions],
            }
        )

    def header_dict(self) -> dict:
        return {
            "number": self.number,
            "prev_hash": self.prev_hash,
            "data_hash": self.data_hash,
        }

    def header_hash(self) -> str:
        return sha256_hex(canonical_bytes(self.header_dict()))

    def to_dict(self) -> dict:
        return {
            "header": self.header_dict(),
            "data": {
                "commit_time": self.commit_time,
                "transactions": [t.to_dict() for t in self.transactions],
            },
            "metadata": {"validity_flags": self.validity_flags},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Block":
        return cls(
            number=d["header"]["number"],
            prev_hash=d["header"]["prev_hash"],
            data_hash=d["header"]["data_hash"],
            commit_time=d["data"]["commit_time"],
            transactions=[Transaction.from_dict(t) for t in d["data"]["transactions"]],
            validity_flags=list(d["metadata"]["validity_flags"]),
        )
