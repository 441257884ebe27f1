"""Benchmark: compiled vs pure-NumPy LSTM scan kernels.

Times the scan forward+backward pair on the two production branch geometries
and a full bidirectional branch pass, then prints the speedup. Run:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from gatedfusion import kernels
from gatedfusion.model import BiLstmBranch, BranchConfig
from gatedfusion.numcore import make_rng

SCAN_CASES = [
    ("audio-layer scan  B16 T20 H256", 16, 20, 256),
    ("text-layer scan   B16 T10 H16 ", 16, 10, 16),
]

BRANCH_CASES = [
    ("audio branch 4x256 T20 D553   ", BranchConfig(4, 256, 20, 1), 553, 8),
    ("text branch  2x16  T10 D103   ", BranchConfig(2, 16, 10, 2), 103, 32),
]


def time_call(fn, repeats):
    fn()  # warmup
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats * 1e3  # ms


def bench_scan(impl, nb, nt, nh, repeats=20):
    rng = make_rng(0)
    pre = rng.normal(0.0, 1.0, (nb, nt, 4 * nh))
    w_rec = rng.normal(0.0, 0.1, (nh, 4 * nh))
    d_hidden = rng.normal(0.0, 1.0, (nb, nt, nh))

    def step():
        gates, cell, _ = impl.lstm_scan_forward(pre, w_rec)
        impl.lstm_scan_backward(gates, cell, w_rec, d_hidden)

    return time_call(step, repeats)


def bench_branch(name, cfg, input_dim, batch, repeats=5):
    rng = make_rng(0)
    branch = BiLstmBranch("bench", input_dim, cfg)
    params = {}
    branch.init_params(rng, params)
    x = rng.normal(0.0, 1.0, (batch, cfg.timestep, input_dim))
    d_feat = rng.normal(0.0, 1.0, (batch, cfg.output_dim))

    def step():
        feat, caches = branch.forward(params, x)
        grads = {}
        branch.backward(caches, d_feat, grads)

    results = {}
    for impl_name in sorted(kernels.IMPLEMENTATIONS):
        with kernels.override(impl_name):
            results[impl_name] = time_call(step, repeats)
    return results


def main():
    print(f"active kernel implementation: {kernels.ACTIVE}")
    if "compiled" not in kernels.IMPLEMENTATIONS:
        print("compiled core not built; showing pure-NumPy timings only")
    print()
    print(f"{'case':34s}  {'pure ms':>9s}  {'compiled ms':>11s}  {'speedup':>7s}")
    for name, nb, nt, nh in SCAN_CASES:
        row = {}
        for impl_name, impl in kernels.IMPLEMENTATIONS.items():
            row[impl_name] = bench_scan(impl, nb, nt, nh)
        pure_ms = row["pure"]
        comp_ms = row.get("compiled")
        speedup = f"{pure_ms / comp_ms:6.2f}x" if comp_ms else "    n/a"
        comp_str = f"{comp_ms:11.3f}" if comp_ms else "        n/a"
        print(f"{name:34s}  {pure_ms:9.3f}  {comp_str}  {speedup}")
    for name, cfg, dim, batch in BRANCH_CASES:
        row = bench_branch(name, cfg, dim, batch)
        pure_ms = row["pure"]
        comp_ms = row.get("compiled")
        speedup = f"{pure_ms / comp_ms:6.2f}x" if comp_ms else "    n/a"
        comp_str = f"{comp_ms:11.3f}" if comp_ms else "        n/a"
        print(f"{name:34s}  {pure_ms:9.3f}  {comp_str}  {speedup}")


if __name__ == "__main__":
    main()
