"""Deterministic pseudo-image synthesis for workload runs.

Seeded noise blobs stand in for inspection photography; the stub detector is
a pure function of these bytes, so a seed fully determines every detection
outcome in a run.
"""

from __future__ import annotations

import random

DEFAULT_IMAGE_BYTES = 2 * 1024 * 1024  # size profile of real inspection images


def synth_image(rng: random.Random, size_bytes: int = DEFAULT_IMAGE_BYTES) -> bytes:
    return rng.randbytes(size_bytes)


def image_for(seed: int, blade_index: int, cycle: int, size_bytes: int) -> bytes:
    rng = random.Random(f"img:{seed}:{blade_index}:{cycle}")
    return synth_image(rng, size_bytes)
