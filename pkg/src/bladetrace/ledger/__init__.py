"""Per-organization peer logic: endorsement, validation, block store, world state."""

from .types import (
    Block,
    ChainEvent,
    Endorsement,
    ReadWriteSet,
    Transaction,
    TxProposal,
    TxValidity,
)
from .worldstate import WorldState
from .peer import ChaincodeError, Peer, SimulationStub
from .blockstore import BlockStore, read_block_files

__all__ = [
    "Block",
    "BlockStore",
    "ChainEvent",
    "ChaincodeError",
    "Endorsement",
    "Peer",
    "ReadWriteSet",
    "SimulationStub",
    "Transaction",
    "TxProposal",
    "TxValidity",
    "WorldState",
    "read_block_files",
]
