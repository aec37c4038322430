"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one row per (kernel, backend) with the best-of-``repeat`` wall time and
the speedup of the compiled backend. The training row swaps the backend module
globally, so it measures the full event loop as a user would see it.
"""

import argparse
import time

import numpy as np

from qtgn import _backend
from qtgn.pipeline import RunConfig, train
from qtgn.stream import synth_generate


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def _cases(rng):
    x8 = rng.standard_normal(256)
    x8 /= np.linalg.norm(x8)
    amps = x8.astype(np.complex128)
    samples = rng.integers(0, 256, 2048)
    uniforms = rng.random((2048, 8))

    def encode(k):
        return lambda: [k.circuit_z_real(x8, 8) for _ in range(2000)]

    def chain(k):
        return lambda: [k.cnot_chain(amps.copy(), 8) for _ in range(2000)]

    def tally(k):
        return lambda: [k.z_from_samples(k.flip_bits(samples, 8, 0.01, uniforms), 8) for _ in range(200)]

    return {"encode_z x2000 (8q)": encode, "cnot_chain x2000 (8q)": chain, "flip+tally x200 (2048 shots)": tally}


def _train_case():
    ds = synth_generate(50, 50, 2000, 0.9, seed=0)
    cfg = RunConfig(epochs=1)
    return lambda: train(ds, cfg)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    names = sorted(_backend.BACKENDS)
    if "cython" not in names:
        print("compiled backend not built; only the python backend is available")
    rng = np.random.default_rng(0)
    rows = []
    for label, make in _cases(rng).items():
        rows.append((label, {name: _best(make(_backend.get(name)), args.repeat) for name in names}))

    fit = _train_case()
    saved = _backend.kernels
    times = {}
    try:
        for name in names:
            _backend.kernels = _backend.get(name)
            times[name] = _best(fit, max(1, args.repeat // 2))
    finally:
        _backend.kernels = saved
    rows.append(("train 1 epoch (2000 events)", times))

    print(f"{'kernel':32s} " + " ".join(f"{n:>10s}" for n in names) + "   speedup")
    for label, t in rows:
        speed = f"{t['python'] / t['cython']:8.1f}x" if "cython" in t else "       -"
        print(f"{label:32s} " + " ".join(f"{t[n]:9.4f}s" for n in names) + "  " + speed)


if __name__ == "__main__":
    main()
