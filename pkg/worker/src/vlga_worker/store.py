"""Per-node weight storage keyed by model reference.

Every reference handed back in an eval result stays retrievable until it is
explicitly evicted.  In-memory by default; given a directory, references are
also written to disk so several worker processes can share one store.
"""

from __future__ import annotations

import re
from pathlib import Path

import torch

_SAFE_REF = re.compile(r"[^A-Za-z0-9._-]")


class ModelStore:
    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, dict] = {}

    def _path(self, ref: str) -> Path:
        assert self.directory is not None
        return self.directory / (_SAFE_REF.sub("_", ref) + ".pt")

    def save(self, ref: str, node_states: dict) -> None:
        self._memory[ref] = node_states
        if self.directory:
            torch.save(node_states, self._path(ref))

    def load(self, ref: str) -> dict | None:
        if ref in self._memory:
            return self._memory[ref]
        if self.directory and self._path(ref).exists():
            return torch.load(self._path(ref), weights_only=True)
        return None

    def evict(self, ref: str) -> None:
        self._memory.pop(ref, None)
        if self.directory:
            self._path(ref).unlink(missing_ok=True)

    def __contains__(self, ref: str) -> bool:
        return self.load(ref) is not None
