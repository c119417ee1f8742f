"""Crash-fault-tolerant ordering: replicated log, deterministic batching, fault harness."""

from .node import RaftNode, StableStore, FileStableStore
from .simnet import SimNet
from .service import Envelope, OrderingService, run_scenario

__all__ = [
    "Envelope",
    "FileStableStore",
    "OrderingService",
    "RaftNode",
    "SimNet",
    "StableStore",
    "run_scenario",
]
