"""Pure numpy implementations of the statevector kernels (import fallback)."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _signs(n):
    # row q holds +1 where bit (n-1-q) of the basis index is 0, else -1
    idx = np.arange(1 << n)
    bits = (idx[None, :] >> (n - 1 - np.arange(n))[:, None]) & 1
    signs = 1.0 - 2.0 * bits
    signs.setflags(write=False)
    return signs


def _cnot_inplace(psi, n, control, target):
    t = psi.reshape((2,) * n)
    sel = (slice(None),) * control + (1,)
    # selecting the control axis shifts the target axis down by one when target > control
    axis = target - 1 if target > control else target
    t[sel] = np.flip(t[sel], axis=axis).copy()


def cnot(amps, n, control, target):
    out = np.array(amps, dtype=np.complex128, copy=True)
    _cnot_inplace(out, n, control, target)
    return out


def cnot_chain(amps, n):
    out = np.array(amps, dtype=np.complex128, copy=True)
    for q in range(n - 1):
        _cnot_inplace(out, n, q, q + 1)
    return out


def expect_z(amps, n):
    a = np.asarray(amps)
    p = (a.real * a.real + a.imag * a.imag) if np.iscomplexobj(a) else a * a
    return _signs(n) @ p


def circuit_z_real(x, n):
    out = np.array(x, dtype=np.float64, copy=True)
    for q in range(n - 1):
        _cnot_inplace(out, n, q, q + 1)
    return _signs(n) @ (out * out)


def z_from_samples(samples, n):
    s = np.asarray(samples, dtype=np.int64)
    bits = (s[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return (s.shape[0] - 2.0 * bits.sum(axis=0)) / s.shape[0]


def flip_bits(samples, n, eps, uniforms):
    s = np.asarray(samples, dtype=np.int64)
    flips = np.asarray(uniforms) < eps
    weights = np.left_shift(1, n - 1 - np.arange(n)).astype(np.int64)
    return s ^ (flips.astype(np.int64) @ weights)
