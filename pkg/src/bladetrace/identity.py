"""Simplified membership service: org roots of trust and signed member identities.

Stands in for a full PKI. Each organization holds an Ed25519 root signing
pair; member identities carry a root-signed attestation over their public
key, name, and role. Transaction attribution always resolves through this
chain, never through client-supplied fields.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .canonical import canonical_bytes

ROLES = ("admin", "peer", "client")


class MembershipError(Exception):
    """Registration or issuance violated a membership invariant."""


def _attestation_payload(msp_id: str, common_name: str, role: str, public_key: bytes) -> bytes:
    return canonical_bytes(
        {
            "msp_id": msp_id,
            "common_name": common_name,
            "role": role,
            "public_key": public_key.hex(),
        }
    )


@dataclass(frozen=True)
class Identity:
    """Public half of a member identity; safe to share across the network."""

    msp_id: str
    common_name: str
    role: str
    public_key: bytes
    org_attestation: bytes

    def to_dict(self) -> dict:
        return {
            "msp_id": self.msp_id,
            "common_name": self.common_name,
            "role": self.role,
            "public_key": self.public_key.hex(),
            "org_attestation": self.org_attestation.hex(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Identity":
        return cls(
            msp_id=d["msp_id"],
            common_name=d["common_name"],
            role=d["role"],
            public_key=bytes.fromhex(d["public_key"]),
            org_attestation=bytes.fromhex(d["org_attestation"]),
        )


@dataclass(frozen=True)
class Signature:
    signer: Tuple[str, str]  # (msp_id, common_name)
    bytes_: bytes

    def to_dict(self) -> dict:
        return {"signer": list(self.signer), "bytes": self.bytes_.hex()}

    @classmethod
    def from_dict(cls, d: dict) -> "Signature":
        return cls(signer=(d["signer"][0], d["signer"][1]), bytes_=bytes.fromhex(d["bytes"]))


class SigningIdentity:
    """An identity together with its secret key; held by the owning process only."""

    def __init__(self, identity: Identity, private_key: Ed25519PrivateKey):
        self.identity = identity
        self._private_key = private_key

    def sign(self, message: bytes) -> Signature:
        return Signature(
            signer=(self.identity.msp_id, self.identity.common_name),
            bytes_=self._private_key.sign(message),
        )

    def private_bytes(self) -> bytes:
        from cryptography.hazmat.primitives import serialization

        return self._private_key.private_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PrivateFormat.Raw,
            encryption_algorithm=serialization.NoEncryption(),
        )

    @classmethod
    def from_private_bytes(cls, identity: Identity, raw: bytes) -> "SigningIdentity":
        return cls(identity, Ed25519PrivateKey.from_private_bytes(raw))


class OrgRoot:
    """Per-organization root of trust holding the org signing pair."""

    def __init__(self, msp_id: str, private_key: Optional[Ed25519PrivateKey] = None):
        self.msp_id = msp_id
        self._private_key = private_key or Ed25519PrivateKey.generate()
        from cryptography.hazmat.primitives import serialization

        self.root_public_key: bytes = self._private_key.public_key().public_bytes(
            encoding=serialization.Encoding.Raw,
            format=serialization.PublicFormat.Raw,
        )

    def attest(self, msp_id: str, common_name: str, role: str, public_key: bytes) -> bytes:
        return self._private_key.sign(_attestation_payload(msp_id, common_name, role, public_key))


class MembershipService:
    """Network-wide trust set: registered org roots plus issued identities.

    Registration is append-only after bootstrap, serialized by a lock;
    verification is read-only and safe to call concurrently.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._roots: Dict[str, bytes] = {}  # msp_id -> root public key
        self._org_secrets: Dict[str, OrgRoot] = {}
        self._identities: Dict[Tuple[str, str], Identity] = {}

    # -- bootstrap -----------------------------------------------------

    def create_org(self, msp_id: str) -> OrgRoot:
        with self._lock:
            if msp_id in self._roots:
                raise MembershipError(f"organization already registered: {msp_id}")
            root = OrgRoot(msp_id)
            self._roots[msp_id] = root.root_public_key
            self._org_secrets[msp_id] = root
            return root

    def register_root(self, msp_id: str, root_public_key: bytes) -> None:
        """Register a root by public key only (used when replaying from block files)."""
        with self._lock:
            if msp_id in self._roots:
                raise MembershipError(f"organization already registered: {msp_id}")
            self._roots[msp_id] = root_public_key

    def issue_identity(self, root: OrgRoot, common_name: str, role: str) -> SigningIdentity:
        if role not in ROLES:
            raise MembershipError(f"unknown role: {role}")
        with self._lock:
            if root.msp_id not in self._roots:
                raise MembershipError(f"organization not registered: {root.msp_id}")
            key = (root.msp_id, common_name)
            if key in self._identities:
                raise MembershipError(
                    f"identity already issued: {root.msp_id}/{common_name}"
                )
            private_key = Ed25519PrivateKey.generate()
            from cryptography.hazmat.primitives import serialization

            public_key = private_key.public_key().public_bytes(
                encoding=serialization.Encoding.Raw,
                format=serialization.PublicFormat.Raw,
            )
            attestation = root.attest(root.msp_id, common_name, role, public_key)
            identity = Identity(root.msp_id, common_name, role, public_key, attestation)
            self._identities[key] = identity
            return SigningIdentity(identity, private_key)

    def register_identity(self, identity: Identity) -> None:
        """Admit an externally issued identity after checking its attestation."""
        if not self.verify_identity(identity):
            raise MembershipError(
                f"attestation invalid for {identity.msp_id}/{identity.common_name}"
            )
        with self._lock:
            key = (identity.msp_id, identity.common_name)
            if key not in self._identities:
                self._identities[key] = identity

    # -- verification --------------------------------------------------

    def registered_orgs(self) -> Tuple[str, ...]:
        return tuple(sorted(self._roots))

    def root_public_key(self, msp_id: str) -> Optional[bytes]:
        return self._roots.get(msp_id)

    def get_identity(self, msp_id: str, common_name: str) -> Optional[Identity]:
        return self._identities.get((msp_id, common_name))

    def verify_identity(self, identity: Identity) -> bool:
        """True iff the identity's attestation verifies under a registered root."""
        root_key = self._roots.get(identity.msp_id)
        if root_key is None:
            return False
        payload = _attestation_payload(
            identity.msp_id, identity.common_name, identity.role, identity.public_key
        )
        try:
            Ed25519PublicKey.from_public_bytes(root_key).verify(
                identity.org_attestation, payload
            )
            return True
        except (InvalidSignature, ValueError):
            return False

    def verify(self, signature: Signature, message: bytes) -> bool:
        """True iff the signature verifies under a registered, attested identity."""
        identity = self._identities.get(signature.signer)
        if identity is None:
            return False
        return self.verify_with_identity(signature, message, identity)

    def verify_with_identity(
        self, signature: Signature, message: bytes, identity: Identity
    ) -> bool:
        if signature.signer != (identity.msp_id, identity.common_name):
            return False
        if not self.verify_identity(identity):
            return False
        try:
            Ed25519PublicKey.from_public_bytes(identity.public_key).verify(
                signature.bytes_, message
            )
            return True
        except (InvalidSignature, ValueError):
            return False


# -- wallet persistence -----------------------------------------------


def save_wallet(directory: str, signer: SigningIdentity) -> str:
    """Write one identity (including its secret) as a JSON wallet file."""
    ident = signer.identity
    org_dir = os.path.join(directory, ident.msp_id)
    os.makedirs(org_dir, exist_ok=True)
    path = os.path.join(org_dir, f"{ident.common_name}.json")
    record = dict(ident.to_dict())
    record["private_key"] = signer.private_bytes().hex()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
    return path


def load_wallet(path: str) -> SigningIdentity:
    with open(path, "r", encoding="utf-8") as fh:
        record = json.load(fh)
    identity = Identity.from_dict(record)
    return SigningIdentity.from_private_bytes(identity, bytes.fromhex(record["private_key"]))


def load_org_wallets(directory: str, msp_id: str) -> Dict[str, SigningIdentity]:
    org_dir = os.path.join(directory, msp_id)
    out: Dict[str, SigningIdentity] = {}
    if not os.path.isdir(org_dir):
        return out
    for name in sorted(os.listdir(org_dir)):
        if name.endswith(".json"):
            signer = load_wallet(os.path.join(org_dir, name))
            out[signer.identity.common_name] = signer
    return out
