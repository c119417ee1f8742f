"""File-backed append-only block store: one canonical-JSON file per block.

External auditors can recompute every hash with standard tools; the world
state is rebuildable from the block files alone.
"""

from __future__ import annotations

import os
from typing import Iterator, List, Optional

from ..canonical import canonical_bytes
from .types import Block


def block_filename(number: int) -> str:
    return f"{number:010d}.json"


class BlockStore:
    """Append-only store; rejects overwriting or out-of-order appends."""

    def __init__(self, directory: Optional[str] = None):
        self._dir = directory
        if directory:
            os.makedirs(directory, exist_ok=True)
        self._blocks: List[Block] = []
        if directory:
            for block in read_block_files(directory):
                self._blocks.append(block)

    @property
    def height(self) -> int:
        """Number of committed blocks (genesis counts; height 1 = block 0 only)."""
        return len(self._blocks)

    def last_block(self) -> Optional[Block]:
        return self._blocks[-1] if self._blocks else None

    def get(self, number: int) -> Block:
        return self._blocks[number]

    def __iter__(self) -> Iterator[Block]:
        return iter(self._blocks)

    def append(self, block: Block) -> None:
        if block.number != len(self._blocks):
            raise ValueError(
                f"out-of-order block: got {block.number}, expected {len(self._blocks)}"
            )
        if self._dir:
            path = os.path.join(self._dir, block_filename(block.number))
            tmp = path + ".tmp"
            with open(tmp, "wb") as fh:
                fh.write(canonical_bytes(block.to_dict()))
                fh.flush()
            os.replace(tmp, path)
        self._blocks.append(block)


def read_block_files(directory: str) -> List[Block]:
    """Load all block files from a channel directory in block-number order."""
    import json

    blocks: List[Block] = []
    names = sorted(n for n in os.listdir(directory) if n.endswith(".json"))
    for name in names:
        with open(os.path.join(directory, name), "rb") as fh:
            blocks.append(Block.from_dict(json.loads(fh.read().decode("utf-8"))))
    return blocks
