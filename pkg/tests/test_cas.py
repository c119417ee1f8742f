"""Content-addressed store: addressing, idempotence, tamper evidence."""

import hashlib
import os
import random
import threading

import pytest

from bladetrace.cas import (
    ArtifactNotFound,
    ContentStore,
    cid_for_bytes,
    is_valid_cid,
)

EMPTY_SHA = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


@pytest.fixture
def store(tmp_path):
    return ContentStore(str(tmp_path / "cas"))


def test_put_get_round_trip(store):
    content = b"inspection artifact bytes"
    ref = store.put(content)
    assert ref.cid == cid_for_bytes(content)
    assert ref.sha256 == hashlib.sha256(content).hexdigest()
    assert ref.size_bytes == len(content)
    assert store.get(ref.cid) == content


def test_put_is_idempotent_single_copy(store):
    ref1 = store.put(b"same bytes")
    ref2 = store.put(b"same bytes")
    assert ref1 == ref2
    assert store.count() == 1


def test_different_content_different_cid(store):
    a = store.put(b"content A")
    b = store.put(b"content B")
    assert a.cid != b.cid


def test_single_bit_flip_changes_cid(store):
    content = bytearray(b"exact bytes matter")
    ref1 = store.put(bytes(content))
    content[3] ^= 0x01
    ref2 = store.put(bytes(content))
    assert ref1.cid != ref2.cid


def test_empty_content_reference_hash(store):
    ref = store.put(b"")
    assert ref.sha256 == EMPTY_SHA
    assert ref.size_bytes == 0
    assert store.get(ref.cid) == b""


def test_get_unknown_cid(store):
    with pytest.raises(ArtifactNotFound):
        store.get("cas1-" + "0" * 64)
    with pytest.raises(ArtifactNotFound):
        store.get("garbage")


def test_verify_untampered(store):
    ref = store.put(b"pristine")
    result = store.verify(ref.cid, ref.sha256)
    assert result.verified
    assert result.actual_hash == ref.sha256
    assert result.elapsed_ms >= 0.0


def test_verify_unknown_cid_is_failure_not_exception(store):
    result = store.verify("cas1-" + "1" * 64, "1" * 64)
    assert not result.verified
    assert result.reason == "not-found"


def test_verify_detects_out_of_band_mutation(store):
    content = b"original artifact content"
    ref = store.put(content)
    path = store._path(ref.cid)
    with open(path, "r+b") as fh:
        fh.seek(5)
        fh.write(b"\xff")
    result = store.verify(ref.cid, ref.sha256)
    assert not result.verified
    assert result.actual_hash != ref.sha256
    assert result.reason == "hash mismatch"


def test_tamper_evidence_exhaustive_over_byte_positions(store):
    """Every single-byte mutation of a small artifact fails verification."""
    content = bytes(random.Random(7).randbytes(64))
    ref = store.put(content)
    path = store._path(ref.cid)
    for position in range(len(content)):
        mutated = bytearray(content)
        mutated[position] ^= 0x01
        with open(path, "wb") as fh:
            fh.write(bytes(mutated))
        assert not store.verify(ref.cid, ref.sha256).verified, f"byte {position}"
    with open(path, "wb") as fh:
        fh.write(content)
    assert store.verify(ref.cid, ref.sha256).verified


def test_stat_metadata_only(store):
    ref = store.put(b"x" * 1234)
    stat = store.stat(ref.cid)
    assert stat["size_bytes"] == 1234
    assert stat["stored_at"] > 0
    with pytest.raises(ArtifactNotFound):
        store.stat("cas1-" + "2" * 64)


def test_two_megabyte_verification_under_bound(store):
    content = random.Random(3).randbytes(2 * 1024 * 1024)
    ref = store.put(content)
    timings = [store.verify(ref.cid, ref.sha256).elapsed_ms for _ in range(5)]
    assert all(t < 100.0 for t in timings), timings


def test_directory_layout_two_level(store):
    ref = store.put(b"layout check")
    expected = os.path.join(store.root, ref.sha256[:2], ref.cid)
    assert os.path.exists(expected)


def test_concurrent_identical_puts_converge(store):
    content = b"contended content" * 100
    refs = []
    errors = []

    def worker():
        try:
            refs.append(store.put(content))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert len({r.cid for r in refs}) == 1
    assert store.count() == 1


def test_cid_validation():
    assert is_valid_cid("cas1-" + "a" * 64)
    assert not is_valid_cid("cas2-" + "a" * 64)
    assert not is_valid_cid("cas1-" + "a" * 63)
    assert not is_valid_cid("")
