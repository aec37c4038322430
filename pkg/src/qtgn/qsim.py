"""Statevector simulation of the fixed encoding circuit.

Basis indices are big-endian: qubit ``q`` of an ``n``-qubit register is bit
``n - 1 - q`` of the index, so qubit 0 is the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DimensionOverflow, ZeroVector

NORM_TOL = 1e-9


@dataclass(frozen=True)
class QuantumState:
    """Pure state of ``n_qubits`` qubits held as a complex amplitude vector."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized (norm={norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real * a.real + a.imag * a.imag


@dataclass(frozen=True)
class ShotCounts:
    n_qubits: int
    counts: dict[int, int]
    total_shots: int = field(default=0)

    def __post_init__(self):
        total = sum(self.counts.values())
        if self.total_shots == 0:
            object.__setattr__(self, "total_shots", total)
        elif total != self.total_shots:
            raise ValueError(f"counts sum to {total}, expected {self.total_shots}")
        if self.total_shots < 1:
            raise ValueError("total_shots must be >= 1")
        dim = 1 << self.n_qubits
        for b, c in self.counts.items():
            if not 0 <= b < dim or c < 0:
                raise ValueError(f"invalid count entry {b}: {c}")


def pad_normalize(x, n_qubits: int) -> np.ndarray:
    """Zero-pad ``x`` to ``2**n_qubits`` entries and scale to unit L2 norm."""
    x = np.asarray(x, dtype=np.float64).ravel()
    dim = 1 << n_qubits
    if x.size > dim:
        raise DimensionOverflow(f"{x.size} features do not fit in {n_qubits} qubits ({dim} amplitudes)")
    norm = np.linalg.norm(x)
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroVector("cannot amplitude-encode a zero (or non-finite) vector")
    out = np.zeros(dim)
    out[: x.size] = x / norm
    return out


def amplitude_embed(x, n_qubits: int) -> QuantumState:
    return QuantumState(n_qubits, pad_normalize(x, n_qubits))


def apply_cnot(s: QuantumState, control: int, target: int) -> QuantumState:
    n = s.n_qubits
    if not (0 <= control < n and 0 <= target < n) or control == target:
        raise ValueError(f"bad CNOT wires ({control}, {target}) for {n} qubits")
    return QuantumState(n, _backend.kernels.cnot(s.amplitudes, n, control, target))


def apply_cnot_chain(s: QuantumState) -> QuantumState:
    """Apply CNOT(q -> q+1) for q = 0 .. n-2 in ascending order."""
    return QuantumState(s.n_qubits, _backend.kernels.cnot_chain(s.amplitudes, s.n_qubits))


def expect_z_all(s: QuantumState) -> np.ndarray:
    """Per-qubit Pauli-Z expectation values."""
    return _backend.kernels.expect_z(s.amplitudes, s.n_qubits)


def encode_z(x, n_qubits: int) -> np.ndarray:
    """Embed, entangle and read out in one call; the hot path used during training.

    Equivalent to ``expect_z_all(apply_cnot_chain(amplitude_embed(x, n)))``
    but skips the complex state object.
    """
    return _backend.kernels.circuit_z_real(pad_normalize(x, n_qubits), n_qubits)


def sample_indices(s: QuantumState, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``shots`` basis indices by inverse-CDF lookup."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    cdf = np.cumsum(s.probabilities)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(shots), side="right")
    return np.minimum(idx, cdf.size - 1).astype(np.int64)


def sample_bitstrings(s: QuantumState, shots: int, seed: int) -> ShotCounts:
    idx = sample_indices(s, shots, np.random.default_rng(seed))
    values, counts = np.unique(idx, return_counts=True)
    return ShotCounts(s.n_qubits, {int(b): int(c) for b, c in zip(values, counts)}, shots)


def expect_z_from_counts(c: ShotCounts) -> np.ndarray:
    n = c.n_qubits
    z = np.zeros(n)
    for b, k in c.counts.items():
        for q in range(n):
            z[q] += -k if (b >> (n - 1 - q)) & 1 else k
    return z / c.total_shots
