"""Per-node persistent memory: a vector plus the time it was last written."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, TimestampRegression


@dataclass(frozen=True)
class MemorySlot:
    m: np.ndarray
    t_last: float


class MemoryStore:
    """Overwrite-on-interaction memory; never-seen nodes read as zeros at t=0."""

    def __init__(self, dim: int = 64):
        self.dim = dim
        self._m: dict = {}
        self._t: dict = {}
        self._zero = np.zeros(dim)
        self._zero.setflags(write=False)

    def get(self, node) -> MemorySlot:
        m = self._m.get(node)
        if m is None:
            return MemorySlot(self._zero, 0.0)
        return MemorySlot(m, self._t[node])

    def update(self, node, h, t: float):
        h = np.array(h, dtype=np.float64)  # detached value copy
        if h.shape != (self.dim,):
            raise ShapeMismatch(f"memory vector shape {h.shape} != ({self.dim},)")
        t_last = self._t.get(node, 0.0)
        if t < t_last:
            raise TimestampRegression(f"node {node!r}: update at t={t} before t_last={t_last}")
        h.setflags(write=False)
        self._m[node] = h
        self._t[node] = t

    def reset(self):
        self._m.clear()
        self._t.clear()

    def __len__(self):
        return len(self._m)

    def __contains__(self, node):
        return node in self._m

    def snapshot(self) -> dict:
        """Arrays suitable for ``np.savez``: integer node ids, stacked memories, timestamps."""
        nodes = sorted(self._m)
        return {
            "nodes": np.array(nodes, dtype=np.int64),
            "m": np.stack([self._m[n] for n in nodes]) if nodes else np.zeros((0, self.dim)),
            "t_last": np.array([self._t[n] for n in nodes], dtype=np.float64),
        }


# functional aliases
def mem_get(store: MemoryStore, node) -> MemorySlot:
    return store.get(node)


def mem_update(store: MemoryStore, node, h, t: float):
    store.update(node, h, t)


def mem_reset(store: MemoryStore):
    store.reset()
