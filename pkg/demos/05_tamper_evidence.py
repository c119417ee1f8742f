"""Tamper-evidence walkthrough: artifact mutation and block mutation, both caught.

Runs a small seeded workload, then (1) flips one byte of a stored inspection
image and re-verifies it against the on-chain hash, and (2) flips one byte of
a committed block file and re-verifies the whole chain.
"""

import os
import random
import tempfile

from bladetrace.bench.tamper import committed_artifact_events
from bladetrace.bench.workload import WorkloadConfig, run_workload
from bladetrace.cas import ContentStore
from bladetrace.ledger.replay import verify_chain_files

workdir = tempfile.mkdtemp(prefix="bladetrace-tamper-")
print("running a 3-blade seeded workload ...")
report = run_workload(
    WorkloadConfig(blades=3, seed=9, mode="ledger", image_size=256 * 1024, time_scale=100.0),
    workdir,
)
block_dir = report["paths"]["block_dir"]
cas_dir = report["paths"]["cas_dir"]
print(f"done: {report['operation_count']} operations, chain height {report['chain_height']}")

store = ContentStore(cas_dir)
event = committed_artifact_events(block_dir)[0]
print(f"\non-chain commitment for {event['eventID']}: {event['imageHash'][:20]}...")
path = store._path(event["imageIPFS"])
original = open(path, "rb").read()
offset = random.Random(1).randrange(len(original))
with open(path, "wb") as fh:
    fh.write(original[:offset] + bytes([original[offset] ^ 0xFF]) + original[offset + 1:])
result = store.verify(event["imageIPFS"], event["imageHash"])
print(f"after flipping byte {offset}: verified={result.verified} "
      f"(recomputed {result.actual_hash[:20]}... in {result.elapsed_ms:.2f} ms)")
with open(path, "wb") as fh:
    fh.write(original)
print("restored:", store.verify(event["imageIPFS"], event["imageHash"]).verified)

print("\nchain verification:", verify_chain_files(block_dir))
target = os.path.join(block_dir, sorted(os.listdir(block_dir))[3])
raw = open(target, "rb").read()
with open(target, "wb") as fh:
    fh.write(raw[:100] + bytes([raw[100] ^ 1]) + raw[101:])
print("after mutating block 3:", verify_chain_files(block_dir))
with open(target, "wb") as fh:
    fh.write(raw)
print("restored:", verify_chain_files(block_dir))
