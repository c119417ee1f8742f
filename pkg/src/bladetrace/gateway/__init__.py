"""Gateway layer: channel wiring, REST/SSE application, and audit proofs."""

from .network import (
    ChaincodeRejection,
    EndorsementMismatch,
    Network,
    NetworkConfig,
    OrderingTimeout,
)
from .proofs import generate_proof, verify_proof

__all__ = [
    "ChaincodeRejection",
    "EndorsementMismatch",
    "Network",
    "NetworkConfig",
    "OrderingTimeout",
    "generate_proof",
    "verify_proof",
]
