"""Event streams: CSV ingestion, chronological splits, negative sampling, synthetic data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyDataset, OrderError, SchemaError

TRAIN_FRAC = 0.70
VAL_FRAC = 0.85
SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class TemporalEvent:
    src: int
    dst: int
    t: float
    feat: np.ndarray


@dataclass
class Dataset:
    """Column-oriented event stream over a bipartite user/item node set."""

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    feat: np.ndarray
    n_users: int
    n_items: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.src = np.asarray(self.src, dtype=np.int64)
        self.dst = np.asarray(self.dst, dtype=np.int64)
        self.t = np.asarray(self.t, dtype=np.float64)
        self.feat = np.asarray(self.feat, dtype=np.float64).reshape(len(self.src), -1)
        if len(self.src) == 0:
            raise EmptyDataset("dataset has no events")
        if np.any(np.diff(self.t) < 0):
            k = int(np.argmax(np.diff(self.t) < 0)) + 1
            raise OrderError(f"event {k} has timestamp {self.t[k]} < {self.t[k - 1]}")

    def __len__(self):
        return len(self.src)

    @property
    def d(self) -> int:
        return self.feat.shape[1]

    @property
    def train_end(self) -> int:
        return len(self) * 70 // 100

    @property
    def val_end(self) -> int:
        return len(self) * 85 // 100

    def split_range(self, split: str) -> range:
        bounds = {"train": (0, self.train_end), "val": (self.train_end, self.val_end), "test": (self.val_end, len(self))}
        try:
            return range(*bounds[split])
        except KeyError:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}") from None

    def event(self, k: int) -> TemporalEvent:
        return TemporalEvent(int(self.src[k]), int(self.dst[k]), float(self.t[k]), self.feat[k])

    @property
    def events(self) -> list:
        return [self.event(k) for k in range(len(self))]

    def head(self, n: int) -> "Dataset":
        n = min(n, len(self))
        return Dataset(self.src[:n], self.dst[:n], self.t[:n], self.feat[:n], self.n_users, self.n_items, dict(self.meta))


def _header(d: int) -> list:
    return ["src", "dst", "t"] + [f"f{k}" for k in range(d)]


def parse_events(path) -> Dataset:
    """Load ``src,dst,t,f0..f{d-1}`` CSV; ids are densified per side in sorted order."""
    path = Path(path)
    src, dst, ts, feats = [], [], [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyDataset(f"{path}: empty file")
        header = [h.strip() for h in header]
        d = len(header) - 3
        if d < 0 or header != _header(d):
            raise SchemaError(f"{path}: header must be src,dst,t,f0,...; got {','.join(header)}")
        last_t = -math.inf
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 3:
                raise SchemaError(f"{path}:{lineno}: expected {d + 3} fields, got {len(row)}")
            try:
                u, i = int(row[0]), int(row[1])
                t = float(row[2])
                f = [float(v) for v in row[3:]]
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
            if u < 0 or i < 0:
                raise SchemaError(f"{path}:{lineno}: node ids must be non-negative")
            if t < last_t:
                raise OrderError(f"{path}:{lineno}: timestamp {t} precedes {last_t}")
            last_t = t
            src.append(u)
            dst.append(i)
            ts.append(t)
            feats.append(f)
    if not src:
        raise EmptyDataset(f"{path}: no events")
    users, src_idx = np.unique(np.array(src, dtype=np.int64), return_inverse=True)
    items, dst_idx = np.unique(np.array(dst, dtype=np.int64), return_inverse=True)
    feat = np.array(feats, dtype=np.float64).reshape(len(src), d)
    return Dataset(src_idx, dst_idx, ts, feat, len(users), len(items), {"source": str(path)})


def write_events(ds: Dataset, path):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_header(ds.d))
        for k in range(len(ds)):
            w.writerow([int(ds.src[k]), int(ds.dst[k]), repr(float(ds.t[k]))] + [repr(float(v)) for v in ds.feat[k]])


class InteractionHistory:
    """Items each user has interacted with so far in the replay."""

    def __init__(self):
        self._seen: dict = {}

    def add(self, user, item):
        self._seen.setdefault(user, set()).add(item)

    def items(self, user) -> set:
        return self._seen.get(user, set())

    def __contains__(self, pair):
        user, item = pair
        return item in self._seen.get(user, ())

    def clear(self):
        self._seen.clear()


def sample_negative(user, history: InteractionHistory, n_items: int, rng: np.random.Generator) -> int:
    """Uniform item the user has not interacted with; uniform over all items if none remain."""
    seen = history.items(user)
    if len(seen) >= n_items:
        return int(rng.integers(n_items))
    if 2 * len(seen) <= n_items:
        while True:
            item = int(rng.integers(n_items))
            if item not in seen:
                return item
    free = np.setdiff1d(np.arange(n_items), np.fromiter(seen, dtype=np.int64, count=len(seen)))
    return int(free[rng.integers(free.size)])


def synth_generate(
    n_users: int,
    n_items: int,
    n_events: int,
    signal_strength: float,
    seed: int,
    d: int = 8,
    noise: float = 0.1,
) -> Dataset:
    """Two-community planted-preference stream.

    Each event picks a uniform user and, with probability
    ``0.5 + 0.5 * signal_strength``, an item from the user's own community.
    Features are ``e[c_user] + 0.5 * e[2 + c_item]`` plus Gaussian noise, so
    both communities are visible to the encoder. Timestamps are 1..n_events.
    """
    if min(n_users, n_items, n_events) < 1:
        raise ValueError("sizes must be >= 1")
    if not 0.0 <= signal_strength <= 1.0:
        raise ValueError("signal_strength must lie in [0, 1]")
    if d < 4:
        raise ValueError("synthetic features need d >= 4")
    rng = np.random.default_rng(seed)
    user_comm = rng.permutation(np.arange(n_users) % 2)
    item_comm = rng.permutation(np.arange(n_items) % 2)
    pools = [np.flatnonzero(item_comm == c) for c in (0, 1)]

    src = rng.integers(n_users, size=n_events)
    within = rng.random(n_events) < 0.5 + 0.5 * signal_strength
    pick = rng.random(n_events)
    dst = np.empty(n_events, dtype=np.int64)
    for k in range(n_events):
        c = user_comm[src[k]] if within[k] else 1 - user_comm[src[k]]
        pool = pools[c] if pools[c].size else np.arange(n_items)
        dst[k] = pool[int(pick[k] * pool.size)]

    feat = noise * rng.standard_normal((n_events, d))
    rows = np.arange(n_events)
    feat[rows, user_comm[src]] += 1.0
    feat[rows, 2 + item_comm[dst]] += 0.5
    t = np.arange(1, n_events + 1, dtype=np.float64)
    meta = {"user_community": user_comm, "item_community": item_comm, "seed": seed}
    return Dataset(src, dst, t, feat, n_users, n_items, meta)
