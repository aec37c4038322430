"""Event-by-event training and evaluation loop.

For every event the user and item endpoints are encoded, fused with their
stored memory, and scored against one sampled negative item. Only the two
real endpoints write memory and refresh their encoder caches; negatives are
read-only. Gradients stop at the embedding module: quantum features and
memory reads enter as constants.
"""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import metrics, neural
from .errors import ConfigError, TimestampRegression
from .feature_map import AAEConfig, NodeEncoder, Readout
from .memory import MemoryStore
from .stream import Dataset, InteractionHistory, TemporalEvent, sample_negative

# entropy tags for per-purpose generators derived from the run seed
_TAG_INIT, _TAG_TRAIN, _TAG_EVAL = 11, 23, 37
_SPLIT_TAG = {"train": 0, "val": 1, "test": 2}


@dataclass(frozen=True)
class RunConfig:
    aae: AAEConfig = field(default_factory=AAEConfig)
    lr: float = 1e-3
    batch: int = 32
    epochs: int = 5
    eval_k: int = 20
    seed: int = 0
    memory_dim: int = 64
    embed_hidden: tuple = ()
    scorer_hidden: tuple = (64,)
    threshold: float = 0.5

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigError("lr must be >= 0")
        if self.batch < 1 or self.eval_k < 1 or self.memory_dim < 1:
            raise ConfigError("batch, eval_k and memory_dim must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")

    @property
    def n_qubits(self) -> int:
        return self.aae.n_qubits

    def replace(self, **changes) -> "RunConfig":
        aae_changes = {k: changes.pop(k) for k in list(changes) if k in AAEConfig.__dataclass_fields__}
        aae = AAEConfig(**{**asdict(self.aae), **aae_changes})
        return RunConfig(**{**self._fields(), "aae": aae, **changes})

    def _fields(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["embed_hidden"] = list(self.embed_hidden)
        d["scorer_hidden"] = list(self.scorer_hidden)
        return d


@dataclass
class TrainLogRecord:
    epoch: int
    events_seen: int
    mean_loss: float
    refresh_rate: float
    wall_time: float

    def deterministic(self) -> tuple:
        """Everything except wall-clock time."""
        return (self.epoch, self.events_seen, self.mean_loss, self.refresh_rate)


@dataclass
class EvalResult:
    report: metrics.MetricsReport
    split: str
    ranks: np.ndarray
    pos_scores: np.ndarray
    neg_scores: np.ndarray
    refresh_rate: float
    extra: dict = field(default_factory=dict)

    def record(self, k: int, seed: int, **fields) -> dict:
        return {"split": self.split, **self.report.to_dict(), "K": k, "seed": seed, **fields}


def init_params(cfg: RunConfig) -> neural.ParamStore:
    return neural.ParamStore.init(
        cfg.memory_dim, cfg.n_qubits, cfg.embed_hidden, cfg.scorer_hidden, seed=_rng_seed(cfg.seed, _TAG_INIT)
    )


def _rng_seed(*entropy) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def _rng(*entropy) -> np.random.Generator:
    return np.random.default_rng(list(entropy))


class TGNState:
    """Mutable per-pass state: memories, encoder caches and interaction history."""

    def __init__(self, params: neural.ParamStore, cfg: RunConfig):
        if params.memory_dim != cfg.memory_dim or params.n_qubits != cfg.n_qubits:
            raise ConfigError(
                f"parameters ({params.memory_dim}-dim memory, {params.n_qubits} qubits) do not match "
                f"config ({cfg.memory_dim}, {cfg.n_qubits})"
            )
        self.params = params
        self.cfg = cfg
        self.user_mem = MemoryStore(cfg.memory_dim)
        self.item_mem = MemoryStore(cfg.memory_dim)
        self.user_enc = NodeEncoder(cfg.aae)
        self.item_enc = NodeEncoder(cfg.aae)
        self.history = InteractionHistory()
        self.last_t = -np.inf

    def reset(self):
        self.user_mem.reset()
        self.item_mem.reset()
        self.user_enc.reset()
        self.item_enc.reset()
        self.history.clear()
        self.last_t = -np.inf

    def set_readout(self, readout: Optional[Readout]):
        self.user_enc.readout = readout
        self.item_enc.readout = readout

    @property
    def refresh_rate(self) -> float:
        events = self.user_enc.event_count + self.item_enc.event_count
        if events == 0:
            return 0.0
        return (self.user_enc.refresh_count + self.item_enc.refresh_count) / events

    def _advance(self, e: TemporalEvent):
        if e.t < self.last_t:
            raise TimestampRegression(f"event at t={e.t} arrives after t={self.last_t}")
        self.last_t = e.t

    def encode_endpoints(self, e: TemporalEvent):
        self._advance(e)
        z_u, _ = self.user_enc.observe(e.src, e.feat)
        z_i, _ = self.item_enc.observe(e.dst, e.feat)
        return z_u, z_i

    def commit(self, e: TemporalEvent, h_u, h_i):
        self.user_mem.update(e.src, h_u, e.t)
        self.item_mem.update(e.dst, h_i, e.t)
        self.history.add(e.src, e.dst)

    def replay(self, e: TemporalEvent):
        """Advance memory for a real event without scoring."""
        z_u, z_i = self.encode_endpoints(e)
        m = np.stack([self.user_mem.get(e.src).m, self.item_mem.get(e.dst).m])
        h, _ = neural.embed_forward(m, np.stack([z_u, z_i]), self.params)
        self.commit(e, h[0], h[1])


def process_event(e: TemporalEvent, neg_item: int, state: TGNState, grad: bool = True):
    """Score one positive event and one negative item, accumulate gradients, write memory.

    Returns ``(p_pos, p_neg, loss)``.
    """
    params = state.params
    z_u, z_i = state.encode_endpoints(e)
    z_n = state.item_enc.peek(neg_item)
    m = np.stack([state.user_mem.get(e.src).m, state.item_mem.get(e.dst).m, state.item_mem.get(neg_item).m])
    h, etape = neural.embed_forward(m, np.stack([z_u, z_i, z_n]), params)
    p, stape = neural.score_forward(h[0], h[1:], params)
    loss_pos, g_pos = neural.bce_loss(p[0], 1.0)
    loss_neg, g_neg = neural.bce_loss(p[1], 0.0)
    if grad:
        dh_u, dh_items = neural.score_backward(stape, np.array([g_pos, g_neg]), params)
        neural.embed_backward(etape, np.vstack([dh_u.sum(axis=0), dh_items]), params)
    state.commit(e, h[0], h[1])
    return float(p[0]), float(p[1]), loss_pos + loss_neg


def train(
    dataset: Dataset,
    cfg: RunConfig,
    params: Optional[neural.ParamStore] = None,
    progress: Optional[Callable[[TrainLogRecord], None]] = None,
):
    """Replay the train split ``cfg.epochs`` times; Adam fires every ``cfg.batch`` events.

    Memory, encoder caches and history are reset at the start of each epoch.
    Returns ``(params, logs)``.
    """
    if params is None:
        params = init_params(cfg)
    state = TGNState(params, cfg)
    logs = []
    seen = 0
    for epoch in range(cfg.epochs):
        start = time.perf_counter()
        state.reset()
        # same negative stream every epoch
        rng = _rng(cfg.seed, _TAG_TRAIN)
        params.zero_grad()
        pending = 0
        total = 0.0
        rows = dataset.split_range("train")
        for k in rows:
            e = dataset.event(k)
            neg = sample_negative(e.src, state.history, dataset.n_items, rng)
            _, _, loss = process_event(e, neg, state)
            total += loss
            pending += 1
            if pending == cfg.batch:
                _step(params, cfg, pending)
                pending = 0
        if pending:
            _step(params, cfg, pending)
        seen += len(rows)
        rec = TrainLogRecord(epoch, seen, total / max(len(rows), 1), state.refresh_rate, time.perf_counter() - start)
        logs.append(rec)
        if progress is not None:
            progress(rec)
    return params, logs


def _step(params, cfg: RunConfig, n: int):
    params.scale_grad(1.0 / n)
    neural.adam_step(params, cfg.lr)


Scorer = Callable[[TemporalEvent, np.ndarray], np.ndarray]


def run_evaluation(
    dataset: Dataset,
    split: str,
    params: neural.ParamStore,
    cfg: RunConfig,
    scorer: Optional[Scorer] = None,
    readout: Optional[Readout] = None,
    n_eval: Optional[int] = None,
) -> EvalResult:
    """Rebuild memory from all events before ``split``, then rank each split event.

    Each query scores the true item against ``cfg.eval_k`` sampled negatives.
    Classification metrics pair every positive with its first negative.
    ``scorer`` replaces the model's scores (test seam); ``readout`` replaces
    the exact Z readout for encodings performed inside the split.
    """
    state = TGNState(params, cfg)
    rows = dataset.split_range(split)
    for k in range(rows.start):
        state.replay(dataset.event(k))
    if n_eval is not None:
        rows = range(rows.start, min(rows.stop, rows.start + n_eval))
    if len(rows) == 0:
        raise ValueError(f"split {split!r} has no events to evaluate")
    state.set_readout(readout)
    refresh_before = (
        state.user_enc.refresh_count + state.item_enc.refresh_count,
        state.user_enc.event_count + state.item_enc.event_count,
    )
    rng = _rng(cfg.seed, _TAG_EVAL, _SPLIT_TAG[split])
    ranks = np.empty(len(rows))
    pos_scores = np.empty(len(rows))
    neg_scores = np.empty(len(rows))
    for q, k in enumerate(rows):
        e = dataset.event(k)
        negs = np.array([sample_negative(e.src, state.history, dataset.n_items, rng) for _ in range(cfg.eval_k)])
        z_u, z_i = state.encode_endpoints(e)
        cands = np.concatenate([[e.dst], negs])
        z = np.vstack([z_u, z_i] + [state.item_enc.peek(n) for n in negs])
        m = np.vstack([state.user_mem.get(e.src).m] + [state.item_mem.get(int(c)).m for c in cands])
        h, _ = neural.embed_forward(m, z, params)
        if scorer is None:
            scores, _ = neural.score_forward(h[0], h[1:], params)
        else:
            scores = np.asarray(scorer(e, cands), dtype=np.float64)
        ranks[q] = metrics.rank_of_positive(scores[0], scores[1:])
        pos_scores[q] = scores[0]
        neg_scores[q] = scores[1]
        state.commit(e, h[0], h[1])
    refreshes = state.user_enc.refresh_count + state.item_enc.refresh_count - refresh_before[0]
    observed = state.user_enc.event_count + state.item_enc.event_count - refresh_before[1]
    report = metrics.report(pos_scores, neg_scores, ranks, cfg.threshold)
    return EvalResult(report, split, ranks, pos_scores, neg_scores, refreshes / max(observed, 1))


def evaluate(dataset: Dataset, split: str, params: neural.ParamStore, cfg: RunConfig, **kwargs) -> metrics.MetricsReport:
    return run_evaluation(dataset, split, params, cfg, **kwargs).report


LOG_HEADER = ("epoch", "events", "mean_loss", "refresh_rate", "seconds")


def write_train_log(logs, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_HEADER)
        for r in logs:
            w.writerow([r.epoch, r.events_seen, repr(r.mean_loss), repr(r.refresh_rate), f"{r.wall_time:.3f}"])
