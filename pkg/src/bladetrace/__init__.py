"""Multi-organization traceability ledger for aircraft engine blade inspections.

A self-contained permissioned ledger with majority endorsement and Raft-style
ordering enforces a blade lifecycle state machine, binds off-chain inspection
artifacts to on-chain SHA-256 commitments, records detector provenance per
inspection, and exposes an HTTP gateway for operations, audit proofs, and live
events.
"""

__version__ = "0.1.0"
