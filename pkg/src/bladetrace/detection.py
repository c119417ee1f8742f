"""Pluggable defect-detection boundary.

Any detector implements ``detect``/``describe``; the gateway records the
reported model name and version on-chain, so detectors can be swapped or
upgraded without touching ledger or workflow code. The stub detector is a
pure function of the image bytes: every report is recomputable from the
image digest alone, which makes the whole pipeline reproducible without ML
dependencies.
"""

from __future__ import annotations

import base64
import hashlib
import json
import time
import urllib.request
from dataclasses import dataclass, field
from typing import List, Protocol

from .contract.types import DEFECT_TYPES, Defect


class DetectionError(Exception):
    pass


@dataclass
class DetectionReport:
    modelName: str
    modelVersion: str
    defects: List[Defect] = field(default_factory=list)
    overallResult: str = "PASS"
    inference_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "modelName": self.modelName,
            "modelVersion": self.modelVersion,
            "defects": [d.to_dict() for d in self.defects],
            "overallResult": self.overallResult,
            "inference_ms": self.inference_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DetectionReport":
        return cls(
            modelName=d["modelName"],
            modelVersion=d["modelVersion"],
            defects=[Defect.from_dict(x) for x in d["defects"]],
            overallResult=d["overallResult"],
            inference_ms=d.get("inference_ms", 0.0),
        )


class Detector(Protocol):
    def detect(self, image: bytes, width: int, height: int) -> DetectionReport: ...
    def describe(self) -> dict: ...


CRITICAL_CONFIDENCE = 0.90
MAX_STUB_DEFECTS = 3


def stub_defects_from_digest(digest: bytes, width: int, height: int) -> List[Defect]:
    """The stub's defect rule, exposed so tests can recompute reports independently.

    byte0 mod 4 gives the defect count; for defect i, byte[1+i] mod 4 picks the
    class, byte[5+i]/255 (clamped to [0.25, 0.99]) the confidence, and bytes
    [9+4i .. 12+4i] tile a bounding box inside the image dimensions.
    """
    count = digest[0] % 4
    defects = []
    for i in range(count):
        klass = DEFECT_TYPES[digest[1 + i] % 4]
        confidence = round(min(0.99, max(0.25, digest[5 + i] / 255.0)), 4)
        b0, b1, b2, b3 = digest[9 + 4 * i : 13 + 4 * i]
        x1 = (b0 * (width - 1)) // 256
        x2 = x1 + 1 + (b1 * (width - x1 - 1)) // 256
        y1 = (b2 * (height - 1)) // 256
        y2 = y1 + 1 + (b3 * (height - y1 - 1)) // 256
        defects.append(Defect(klass, confidence, x1, y1, x2, y2))
    return defects


def stub_result_for(defects: List[Defect]) -> str:
    if any(d.confidence >= CRITICAL_CONFIDENCE for d in defects) or len(defects) == MAX_STUB_DEFECTS:
        return "CRITICAL"
    return "FAIL" if defects else "PASS"


class StubDetector:
    """Deterministic stand-in detector; identical bytes give identical reports."""

    def __init__(self, model_name: str = "StubDetector", model_version: str = "1.0.0"):
        self._name = model_name
        self._version = model_version

    def describe(self) -> dict:
        return {"modelName": self._name, "modelVersion": self._version}

    def detect(self, image: bytes, width: int, height: int) -> DetectionReport:
        if not image:
            raise DetectionError("empty image")
        if width <= 0 or height <= 0:
            raise DetectionError(f"invalid image dimensions: {width}x{height}")
        start = time.perf_counter()
        digest = hashlib.sha256(image).digest()
        defects = stub_defects_from_digest(digest, width, height)
        elapsed = (time.perf_counter() - start) * 1000.0
        return DetectionReport(
            modelName=self._name,
            modelVersion=self._version,
            defects=defects,
            overallResult=stub_result_for(defects),
            inference_ms=round(elapsed, 3),
        )


class ExternalDetector:
    """Adapter for an out-of-process detector speaking the JSON wire format.

    Request: ``{"image": base64, "width": w, "height": h}``; response is a
    DetectionReport as JSON. ``describe()`` negotiates name/version via GET.
    """

    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self._base = base_url.rstrip("/")
        self._timeout = timeout_s

    def describe(self) -> dict:
        try:
            with urllib.request.urlopen(f"{self._base}/describe", timeout=self._timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except OSError as exc:
            raise DetectionError(f"detector unreachable: {exc}")

    def detect(self, image: bytes, width: int, height: int) -> DetectionReport:
        body = json.dumps(
            {"image": base64.b64encode(image).decode("ascii"), "width": width, "height": height}
        ).encode("utf-8")
        req = urllib.request.Request(
            f"{self._base}/detect", data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self._timeout) as resp:
                return DetectionReport.from_dict(json.loads(resp.read().decode("utf-8")))
        except OSError as exc:
            raise DetectionError(f"detector unreachable: {exc}")
