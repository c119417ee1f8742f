import random

import pytest

from bladetrace.identity import (
    Identity,
    MembershipService,
    MembershipError,
    load_org_wallets,
    save_wallet,
)


@pytest.fixture
def membership():
    return MembershipService()


def test_create_org_and_self_test_signature(membership):
    root = membership.create_org("OEM")
    assert root.msp_id == "OEM"
    signer = membership.issue_identity(root, "selftest", "client")
    sig = signer.sign(b"round trip")
    assert membership.verify(sig, b"round trip")


def test_duplicate_org_rejected(membership):
    membership.create_org("OEM")
    with pytest.raises(MembershipError):
        membership.create_org("OEM")


def test_duplicate_identity_rejected(membership):
    root = membership.create_org("MRO")
    membership.issue_identity(root, "inspector1", "client")
    with pytest.raises(MembershipError):
        membership.issue_identity(root, "inspector1", "client")


def test_sign_verify_binding(membership):
    root = membership.create_org("MRO")
    signer = membership.issue_identity(root, "inspector1", "client")
    sig = signer.sign(b"message")
    assert membership.verify(sig, b"message")
    assert not membership.verify(sig, b"other message")


def test_cross_key_verification_fails(membership):
    root = membership.create_org("MRO")
    a = membership.issue_identity(root, "a", "client")
    b = membership.issue_identity(root, "b", "client")
    sig = a.sign(b"msg")
    # Force the signature to claim b's identity: must not verify.
    forged = type(sig)(signer=(b.identity.msp_id, b.identity.common_name), bytes_=sig.bytes_)
    assert not membership.verify(forged, b"msg")


def test_tampered_attestation_fails_verification(membership):
    root = membership.create_org("OEM")
    signer = membership.issue_identity(root, "qa", "client")
    ident = signer.identity
    for i in range(0, len(ident.org_attestation), 7):
        mutated = bytearray(ident.org_attestation)
        mutated[i] ^= 0x01
        tampered = Identity(
            ident.msp_id, ident.common_name, ident.role, ident.public_key, bytes(mutated)
        )
        assert not membership.verify_identity(tampered)


def test_corrupted_signature_bytes_fail(membership):
    root = membership.create_org("OEM")
    signer = membership.issue_identity(root, "qa", "client")
    sig = signer.sign(b"payload")
    rng = random.Random(1)
    for _ in range(20):
        i = rng.randrange(len(sig.bytes_))
        mutated = bytearray(sig.bytes_)
        mutated[i] ^= 0xFF
        bad = type(sig)(signer=sig.signer, bytes_=bytes(mutated))
        assert not membership.verify(bad, b"payload")


def test_unregistered_root_is_untrusted():
    issuing = MembershipService()
    root = issuing.create_org("ROGUE")
    signer = issuing.issue_identity(root, "x", "client")
    verifying = MembershipService()  # ROGUE not registered here
    assert not verifying.verify_identity(signer.identity)
    with pytest.raises(MembershipError):
        verifying.register_identity(signer.identity)


def test_forgery_resistance_randomized(membership):
    """No signature under key A verifies under key B across random pairs."""
    root = membership.create_org("OEM")
    signers = [membership.issue_identity(root, f"u{i}", "client") for i in range(8)]
    rng = random.Random(42)
    for _ in range(100):
        a, b = rng.sample(signers, 2)
        msg = rng.randbytes(rng.randint(1, 200))
        sig = a.sign(msg)
        assert membership.verify(sig, msg)
        forged = type(sig)(
            signer=(b.identity.msp_id, b.identity.common_name), bytes_=sig.bytes_
        )
        assert not membership.verify(forged, msg)


def test_wallet_round_trip(tmp_path, membership):
    root = membership.create_org("AIRLINE")
    signer = membership.issue_identity(root, "ops1", "client")
    save_wallet(str(tmp_path), signer)
    loaded = load_org_wallets(str(tmp_path), "AIRLINE")
    assert "ops1" in loaded
    sig = loaded["ops1"].sign(b"after reload")
    assert membership.verify(sig, b"after reload")
    record = (tmp_path / "AIRLINE" / "ops1.json").read_text()
    assert "msp_id" in record and "org_attestation" in record
