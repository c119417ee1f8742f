"""Content-addressed artifact store: SHA-256-derived identifiers over files.

Stands in for a distributed CAS daemon. One file per content identifier under
a two-level directory layout so auditors can verify any artifact with
standalone tools (``sha256sum`` over the stored file).
"""

from __future__ import annotations

import hashlib
import os
import threading
import time
import uuid
from dataclasses import dataclass

from .canonical import is_sha256_hex

CID_PREFIX = "cas1-"


class ArtifactNotFound(Exception):
    pass


def cid_for_sha256(digest_hex: str) -> str:
    return CID_PREFIX + digest_hex


def cid_for_bytes(content: bytes) -> str:
    return cid_for_sha256(hashlib.sha256(content).hexdigest())


def is_valid_cid(cid: str) -> bool:
    return cid.startswith(CID_PREFIX) and is_sha256_hex(cid[len(CID_PREFIX):])


@dataclass(frozen=True)
class ArtifactRef:
    cid: str
    sha256: str
    size_bytes: int

    def to_dict(self) -> dict:
        return {"cid": self.cid, "sha256": self.sha256, "size_bytes": self.size_bytes}


@dataclass
class VerificationResult:
    verified: bool
    expected_hash: str
    actual_hash: str
    elapsed_ms: float
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "verified": self.verified,
            "expected_hash": self.expected_hash,
            "actual_hash": self.actual_hash,
            "elapsed_ms": self.elapsed_ms,
            "reason": self.reason,
        }


class ContentStore:
    """Filesystem-backed store; puts are idempotent and fsync-durable."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(root, exist_ok=True)

    def _path(self, cid: str) -> str:
        digest_hex = cid[len(CID_PREFIX):]
        return os.path.join(self.root, digest_hex[:2], cid)

    def put(self, content: bytes) -> ArtifactRef:
        digest_hex = hashlib.sha256(content).hexdigest()
        cid = cid_for_sha256(digest_hex)
        path = self._path(cid)
        if not os.path.exists(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
            tmp = f"{path}.{os.getpid()}.{threading.get_ident()}.{uuid.uuid4().hex[:8]}.tmp"
            with open(tmp, "wb") as fh:
                fh.write(content)
                fh.flush()
                os.fsync(fh.fileno())
            # Concurrent identical puts converge: rename is atomic and
            # last-writer-wins over byte-identical content.
            os.replace(tmp, path)
        return ArtifactRef(cid=cid, sha256=digest_hex, size_bytes=len(content))

    def get(self, cid: str) -> bytes:
        path = self._path(cid) if is_valid_cid(cid) else None
        if path is None or not os.path.exists(path):
            raise ArtifactNotFound(cid)
        with open(path, "rb") as fh:
            return fh.read()

    def exists(self, cid: str) -> bool:
        return is_valid_cid(cid) and os.path.exists(self._path(cid))

    def verify(self, cid: str, expected_hash: str) -> VerificationResult:
        """Retrieve, re-hash, compare; unknown cid is a failed verification."""
        start = time.perf_counter()
        try:
            content = self.get(cid)
        except ArtifactNotFound:
            elapsed = (time.perf_counter() - start) * 1000.0
            return VerificationResult(
                verified=False,
                expected_hash=expected_hash,
                actual_hash="",
                elapsed_ms=elapsed,
                reason="not-found",
            )
        actual = hashlib.sha256(content).hexdigest()
        elapsed = (time.perf_counter() - start) * 1000.0
        return VerificationResult(
            verified=actual == expected_hash,
            expected_hash=expected_hash,
            actual_hash=actual,
            elapsed_ms=elapsed,
            reason="" if actual == expected_hash else "hash mismatch",
        )

    def stat(self, cid: str) -> dict:
        """Size and storage time from file metadata; content bytes untouched."""
        path = self._path(cid) if is_valid_cid(cid) else None
        if path is None or not os.path.exists(path):
            raise ArtifactNotFound(cid)
        st = os.stat(path)
        return {"size_bytes": st.st_size, "stored_at": st.st_mtime}

    def count(self) -> int:
        total = 0
        for _dir, _subdirs, files in os.walk(self.root):
            total += sum(1 for f in files if f.startswith(CID_PREFIX))
        return total

    def total_bytes(self) -> int:
        total = 0
        for dirpath, _subdirs, files in os.walk(self.root):
            for f in files:
                if f.startswith(CID_PREFIX):
                    total += os.stat(os.path.join(dirpath, f)).st_size
        return total
