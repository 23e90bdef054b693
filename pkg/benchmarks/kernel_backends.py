"""Benchmark the numba pipeline kernel against its pure-numpy twin.

Usage: python benchmarks/kernel_backends.py [--nodes N] [--fanout L]
       [--layers K] [--repeat R]

Reports per-backend wall time for identical flat inputs and the max
absolute output difference between the two paths.
"""

import argparse
import time

import numpy as np

from streamtgn.config import Dims
from streamtgn.kernels import backend_for, time_encode
from streamtgn.params import init_params


def make_case(seed, dims, n_nodes, fanout):
    rng = np.random.default_rng(seed)
    counts = rng.integers(1, fanout + 1, size=n_nodes)
    offsets = np.zeros(n_nodes + 1, dtype=np.int64)
    offsets[1:] = np.cumsum(counts)
    e_total = int(offsets[-1])
    return (
        rng.standard_normal((n_nodes, dims.d)),
        offsets,
        rng.standard_normal((e_total, dims.layers, dims.d)),
        rng.standard_normal((e_total, dims.d_e)),
        rng.uniform(0, 20, size=e_total),
    )


def bench(backend, params, case, repeat):
    phi0 = time_encode(0.0, params)
    args = case + (params.omega, phi0, params.w_q, params.w_k, params.w_v, params.w_o)
    out = backend.pipeline_many(*args)  # warm (numba compiles here)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        backend.pipeline_many(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=2000)
    ap.add_argument("--fanout", type=int, default=10)
    ap.add_argument("--layers", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    dims = Dims(d_s=8, d_e=4, d_t=8, d_m=8, d_k=4, heads=2, layers=args.layers)
    params = init_params(0, dims)
    case = make_case(1, dims, args.nodes, args.fanout)

    results = {}
    outs = {}
    for name in ("numpy", "numba"):
        try:
            backend = backend_for(name)
        except ImportError:
            print(f"{name}: unavailable")
            continue
        secs, out = bench(backend, params, case, args.repeat)
        results[name] = secs
        outs[name] = out
        pipelines = args.nodes / secs
        print(f"{name:6s}: {secs * 1e3:9.2f} ms/call  {pipelines:12.0f} node-pipelines/s")

    if len(results) == 2:
        diff = float(np.max(np.abs(outs["numpy"] - outs["numba"])))
        print(f"speedup numba/numpy: {results['numpy'] / results['numba']:.1f}x, "
              f"max |diff| = {diff:.2e}")


if __name__ == "__main__":
    main()
