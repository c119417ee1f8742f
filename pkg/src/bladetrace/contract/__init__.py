"""Deterministic smart contract enforcing the blade lifecycle state machine."""

from .types import (
    BLADE_KEY_PREFIX,
    EVENT_KEY_PREFIX,
    STATES,
    BladeRecord,
    Defect,
    InspectionEvent,
    Thresholds,
)
from .bladelifecycle import (
    BladeLifecycleContract,
    ERR_FLIGHT_STATE,
    ERR_INSPECT_STATE,
)

__all__ = [
    "BLADE_KEY_PREFIX",
    "BladeLifecycleContract",
    "BladeRecord",
    "Defect",
    "ERR_FLIGHT_STATE",
    "ERR_INSPECT_STATE",
    "EVENT_KEY_PREFIX",
    "InspectionEvent",
    "STATES",
    "Thresholds",
]
