"""Small dense networks with hand-written reverse-mode gradients and Adam.

Forward functions accept a single vector or a 2-D batch of row vectors and
return ``(output, tape)``. Backward functions consume the tape, add
parameter gradients into the layers' ``grad_*`` buffers and return the
gradient with respect to the input.
"""

from __future__ import annotations

import json
import math
import zipfile
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, ShapeMismatch

BCE_EPS = 1e-7
CHECKPOINT_FORMAT = "qtgn-params"
CHECKPOINT_VERSION = 1


class DenseLayer:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator | None = None):
        bound = 1.0 / math.sqrt(in_dim)
        if rng is None:
            self.W = np.zeros((out_dim, in_dim))
            self.b = np.zeros(out_dim)
        else:
            self.W = rng.uniform(-bound, bound, size=(out_dim, in_dim))
            self.b = rng.uniform(-bound, bound, size=out_dim)
        self.grad_W = np.zeros_like(self.W)
        self.grad_b = np.zeros_like(self.b)
        self.adam_m = [np.zeros_like(self.W), np.zeros_like(self.b)]
        self.adam_v = [np.zeros_like(self.W), np.zeros_like(self.b)]

    @property
    def in_dim(self) -> int:
        return self.W.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W.shape[0]

    def zero_grad(self):
        self.grad_W.fill(0.0)
        self.grad_b.fill(0.0)

    def __repr__(self):
        return f"DenseLayer({self.in_dim} -> {self.out_dim})"


def _mlp_forward(layers, x, final_relu: bool):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layers[0].in_dim:
        raise ShapeMismatch(f"input width {x.shape[-1]} != layer width {layers[0].in_dim}")
    inputs, pre = [], []
    a = x
    for k, layer in enumerate(layers):
        inputs.append(a)
        u = a @ layer.W.T + layer.b
        pre.append(u)
        last = k == len(layers) - 1
        a = np.maximum(u, 0.0) if (final_relu or not last) else u
    return a, (inputs, pre, final_relu)


def _mlp_backward(layers, tape, grad_out):
    inputs, pre, final_relu = tape
    g = np.asarray(grad_out, dtype=np.float64)
    for k in range(len(layers) - 1, -1, -1):
        layer = layers[k]
        last = k == len(layers) - 1
        if final_relu or not last:
            g = g * (pre[k] > 0.0)
        a = inputs[k]
        if a.ndim == 1:
            layer.grad_W += np.outer(g, a)
            layer.grad_b += g
        else:
            layer.grad_W += g.T @ a
            layer.grad_b += g.sum(axis=0)
        g = g @ layer.W
    return g


@dataclass
class ParamStore:
    """Trainable parameters of the embedding module and the scorer."""

    embed: list
    scorer: list
    step: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def init(
        cls,
        memory_dim: int = 64,
        n_qubits: int = 8,
        embed_hidden: tuple = (),
        scorer_hidden: tuple = (64,),
        seed: int | None = 0,
        zero: bool = False,
    ) -> "ParamStore":
        """Uniform(+-1/sqrt(fan_in)) initialization; ``zero=True`` gives all-zero weights."""
        rng = None if zero else np.random.default_rng(seed)
        widths = [memory_dim + n_qubits, *embed_hidden, memory_dim]
        embed = [DenseLayer(i, o, rng) for i, o in zip(widths[:-1], widths[1:])]
        widths = [2 * memory_dim, *scorer_hidden, 1]
        scorer = [DenseLayer(i, o, rng) for i, o in zip(widths[:-1], widths[1:])]
        meta = {
            "memory_dim": memory_dim,
            "n_qubits": n_qubits,
            "embed_hidden": list(embed_hidden),
            "scorer_hidden": list(scorer_hidden),
            "seed": seed,
        }
        return cls(embed, scorer, 0, meta)

    @property
    def memory_dim(self) -> int:
        return self.embed[-1].out_dim

    @property
    def n_qubits(self) -> int:
        return self.embed[0].in_dim - self.memory_dim

    def named_layers(self):
        for k, layer in enumerate(self.embed):
            yield f"embed.{k}", layer
        for k, layer in enumerate(self.scorer):
            yield f"scorer.{k}", layer

    def layers(self):
        return [layer for _, layer in self.named_layers()]

    def zero_grad(self):
        for layer in self.layers():
            layer.zero_grad()

    def scale_grad(self, factor: float):
        for layer in self.layers():
            layer.grad_W *= factor
            layer.grad_b *= factor

    def copy(self) -> "ParamStore":
        clone = ParamStore.init(
            self.meta.get("memory_dim", self.memory_dim),
            self.meta.get("n_qubits", self.n_qubits),
            tuple(self.meta.get("embed_hidden", ())),
            tuple(self.meta.get("scorer_hidden", (64,))),
            zero=True,
        )
        for (_, dst), (_, src) in zip(clone.named_layers(), self.named_layers()):
            dst.W[...] = src.W
            dst.b[...] = src.b
        clone.step = self.step
        clone.meta = dict(self.meta)
        return clone

    def state_dict(self) -> dict:
        out = {}
        for name, layer in self.named_layers():
            out[f"{name}.W"] = layer.W
            out[f"{name}.b"] = layer.b
        return out


def embed_forward(m, z, params: ParamStore):
    """h = EmbeddingModule([m || z]). Works on single vectors or row batches."""
    m = np.asarray(m, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if m.shape[-1] != params.memory_dim or z.shape[-1] != params.n_qubits:
        raise ShapeMismatch(
            f"memory/z widths {m.shape[-1]}/{z.shape[-1]} != {params.memory_dim}/{params.n_qubits}"
        )
    return _mlp_forward(params.embed, np.concatenate([m, z], axis=-1), final_relu=True)


def embed_backward(tape, grad_h, params: ParamStore):
    """Accumulate parameter gradients; returns d/d[m || z] (unused by training)."""
    return _mlp_backward(params.embed, tape, grad_h)


def score_logit_forward(h_u, h_i, params: ParamStore):
    h_u = np.asarray(h_u, dtype=np.float64)
    h_i = np.asarray(h_i, dtype=np.float64)
    if h_u.ndim < h_i.ndim:
        h_u = np.broadcast_to(h_u, h_i.shape)
    if h_u.shape != h_i.shape:
        raise ShapeMismatch(f"h_u {h_u.shape} vs h_i {h_i.shape}")
    out, tape = _mlp_forward(params.scorer, np.concatenate([h_u, h_i], axis=-1), final_relu=False)
    return out[..., 0], tape


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def score_forward(h_u, h_i, params: ParamStore):
    """p = sigmoid(Scorer([h_u || h_i])). ``h_i`` may be a batch of candidates."""
    logit, tape = score_logit_forward(h_u, h_i, params)
    p = sigmoid(logit)
    return p, (tape, p)


def score_backward(tape, grad_p, params: ParamStore):
    """Returns ``(dL/dh_u, dL/dh_i)`` and accumulates scorer gradients."""
    mlp_tape, p = tape
    grad_logit = np.asarray(grad_p) * p * (1.0 - p)
    g = _mlp_backward(params.scorer, mlp_tape, grad_logit[..., None])
    half = g.shape[-1] // 2
    return g[..., :half], g[..., half:]


def bce_loss(p, y):
    """Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7]; returns (loss, dL/dp)."""
    pc = np.clip(p, BCE_EPS, 1.0 - BCE_EPS)
    loss = -(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
    grad = -y / pc + (1.0 - y) / (1.0 - pc)
    if np.ndim(loss) == 0:
        return float(loss), float(grad)
    return loss, grad


def adam_step(params: ParamStore, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update over every layer, then zero the gradients."""
    params.step += 1
    t = params.step
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for layer in params.layers():
        for k, (value, grad) in enumerate(((layer.W, layer.grad_W), (layer.b, layer.grad_b))):
            m, v = layer.adam_m[k], layer.adam_v[k]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * grad * grad
            value -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    params.zero_grad()
    return params


def save_params(params: ParamStore, path, extra_meta: dict | None = None):
    """Write a checkpoint as an ``.npz`` archive (see README for the layout)."""
    meta = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "step": params.step, **params.meta}
    if extra_meta:
        meta.update(extra_meta)
    arrays = {k: np.ascontiguousarray(v, dtype="<f8") for k, v in params.state_dict().items()}
    arrays["__meta__"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path) -> ParamStore:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(bytes(data["__meta__"]).decode())
            tensors = {k: data[k] for k in data.files if k != "__meta__"}
    except (OSError, ValueError, KeyError, zipfile.BadZipFile, EOFError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if meta.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a {CHECKPOINT_FORMAT} checkpoint")
    try:
        params = ParamStore.init(
            meta["memory_dim"], meta["n_qubits"], tuple(meta["embed_hidden"]), tuple(meta["scorer_hidden"]), zero=True
        )
    except KeyError as exc:
        raise CheckpointError(f"checkpoint metadata missing {exc}") from exc
    expected = params.state_dict()
    if set(expected) != set(tensors):
        raise CheckpointError(f"tensor names {sorted(tensors)} do not match {sorted(expected)}")
    for name, arr in expected.items():
        if tensors[name].shape != arr.shape:
            raise CheckpointError(f"{name}: shape {tensors[name].shape} != {arr.shape}")
        arr[...] = tensors[name]
    params.step = int(meta.get("step", 0))
    params.meta = {k: meta[k] for k in ("memory_dim", "n_qubits", "embed_hidden", "scorer_hidden", "seed") if k in meta}
    return params
