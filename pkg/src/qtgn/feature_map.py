"""Adaptive amplitude encoding of per-node feature streams.

Each node keeps the last accepted feature vector and the last quantum
embedding. A new observation is re-encoded only when its activity factor
``sigmoid(beta * ||x_curr - x_prev||)`` exceeds the threshold ``tau``;
otherwise the cached embedding is reused.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional

import numpy as np

from . import qsim
from .errors import ConfigError, DimensionOverflow, ZeroVector

STRATEGIES = ("adaptive", "always", "never")
ENCODINGS = ("aae", "amplitude", "angle")

# sigmoid saturates to exactly 1.0 in float64 for beta*||dx|| > ~37; keep alpha < 1
_ALPHA_MAX = math.nextafter(1.0, 0.0)

Readout = Callable[[qsim.QuantumState], np.ndarray]


@dataclass(frozen=True)
class AAEConfig:
    beta: float = 1.0
    tau: float = 0.6
    n_qubits: int = 8
    strategy: str = "adaptive"
    encoding: str = "aae"

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError(f"beta must be > 0, got {self.beta}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must lie in [0, 1], got {self.tau}")
        if self.n_qubits < 1:
            raise ConfigError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.encoding not in ENCODINGS:
            raise ConfigError(f"encoding must be one of {ENCODINGS}, got {self.encoding!r}")


@dataclass
class NodeCache:
    node: Hashable
    x_prev: np.ndarray
    z_cached: np.ndarray
    refresh_count: int = 1
    event_count: int = 1


def activity_factor(dx, beta: float) -> float:
    """Sigmoid of the scaled change magnitude; always in [0.5, 1)."""
    r = beta * float(np.linalg.norm(dx))
    return min(1.0 / (1.0 + math.exp(-r)), _ALPHA_MAX)


def blend(x_prev, x_curr, alpha: float) -> Optional[np.ndarray]:
    """Unit-norm ``x_prev + alpha * (x_curr - x_prev)``, or None when that vanishes."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    v = x_prev + alpha * (np.asarray(x_curr, dtype=np.float64) - x_prev)
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        return None
    return v / norm


def uniform_amplitudes(n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    return np.full(dim, 1.0 / math.sqrt(dim))


def amplitude_z(x, n_qubits: int, readout: Optional[Readout] = None) -> np.ndarray:
    """Z readout of the amplitude circuit, with the uniform fallback for zero input."""
    try:
        amps = qsim.pad_normalize(x, n_qubits)
    except ZeroVector:
        amps = uniform_amplitudes(n_qubits)
    if readout is None:
        return qsim.encode_z(amps, n_qubits)
    return readout(qsim.apply_cnot_chain(qsim.QuantumState(n_qubits, amps)))


def angle_state(x, n_qubits: int) -> qsim.QuantumState:
    """Product state of ``RY(x_q)|0>`` per qubit; missing angles are 0."""
    angles = np.zeros(n_qubits)
    x = np.asarray(x, dtype=np.float64).ravel()[:n_qubits]
    angles[: x.size] = x
    amps = np.ones(1)
    for theta in angles:
        amps = np.kron(amps, [math.cos(theta / 2), math.sin(theta / 2)])
    return qsim.QuantumState(n_qubits, amps)


def angle_embed_z(x, n_qubits: int) -> np.ndarray:
    angles = np.zeros(n_qubits)
    x = np.asarray(x, dtype=np.float64).ravel()[:n_qubits]
    angles[: x.size] = x
    return np.cos(angles)


def encode_initial(x, cfg: AAEConfig, node: Hashable = None, readout: Optional[Readout] = None) -> NodeCache:
    x = np.array(x, dtype=np.float64)
    if x.size > (1 << cfg.n_qubits):
        raise DimensionOverflow(f"{x.size} features do not fit in {cfg.n_qubits} qubits")
    return NodeCache(node, x, _encode(x, cfg, readout))


def _encode(x, cfg: AAEConfig, readout: Optional[Readout]) -> np.ndarray:
    if cfg.encoding == "angle":
        if readout is None:
            return angle_embed_z(x, cfg.n_qubits)
        return readout(angle_state(x, cfg.n_qubits))
    return amplitude_z(x, cfg.n_qubits, readout)


def adaptive_update(cache: NodeCache, x_curr, cfg: AAEConfig, readout: Optional[Readout] = None):
    """Process one feature observation for a node.

    Returns ``(z, refreshed, cache)``. The cache is updated in place: on a
    refresh ``x_prev`` advances to ``x_curr``; on reuse it is left alone.
    Encodings other than ``aae`` re-encode ``x_curr`` on every call.
    """
    x_curr = np.asarray(x_curr, dtype=np.float64)
    if x_curr.shape != cache.x_prev.shape:
        raise DimensionOverflow(f"feature shape {x_curr.shape} != cached {cache.x_prev.shape}")
    cache.event_count += 1

    if cfg.encoding != "aae":
        z = _encode(x_curr, cfg, readout)
    else:
        if cfg.strategy == "never":
            return cache.z_cached, False, cache
        alpha = activity_factor(x_curr - cache.x_prev, cfg.beta)
        if cfg.strategy == "adaptive" and not alpha > cfg.tau:
            return cache.z_cached, False, cache
        x_new = blend(cache.x_prev, x_curr, alpha)
        if x_new is None:
            x_new = uniform_amplitudes(cfg.n_qubits)
        z = amplitude_z(x_new, cfg.n_qubits, readout)

    cache.x_prev = x_curr.copy()
    cache.z_cached = z
    cache.refresh_count += 1
    return z, True, cache


@dataclass
class NodeEncoder:
    """Owns the per-node caches for one stream pass."""

    cfg: AAEConfig
    readout: Optional[Readout] = None
    caches: dict = field(default_factory=dict)

    def observe(self, node, x):
        """Encode a real observation for ``node``; returns ``(z, refreshed)``."""
        cache = self.caches.get(node)
        if cache is None:
            cache = encode_initial(x, self.cfg, node, self.readout)
            self.caches[node] = cache
            return cache.z_cached, True
        z, refreshed, _ = adaptive_update(cache, x, self.cfg, self.readout)
        return z, refreshed

    def peek(self, node) -> np.ndarray:
        """Cached embedding without touching state; unseen nodes read as the uniform state."""
        cache = self.caches.get(node)
        if cache is not None:
            return cache.z_cached
        return self._cold_z()

    def _cold_z(self) -> np.ndarray:
        if self.cfg.encoding == "angle":
            return np.ones(self.cfg.n_qubits)
        return np.zeros(self.cfg.n_qubits)

    def reset(self):
        self.caches.clear()

    @property
    def refresh_count(self) -> int:
        return sum(c.refresh_count for c in self.caches.values())

    @property
    def event_count(self) -> int:
        return sum(c.event_count for c in self.caches.values())
