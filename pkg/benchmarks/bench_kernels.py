"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--n 2000] [--repeat 5]

The first numba call compiles; it is run once untimed before measuring.
"""
import argparse
import time

import numpy as np

from randcent import _kernels
from randcent.netmodel import BlockModel, build_expected_sbm, sample_bernoulli


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n):
    exp = build_expected_sbm(BlockModel.two_probability([0.6, 0.4], 0.3, 0.1), n)
    csr = sample_bernoulli(exp, 1).csr
    indptr, indices, data = csr.indptr.astype(np.int64), csr.indices.astype(np.int64), csr.data.astype(np.float64)
    x0 = np.full(n, 1 / np.sqrt(n))
    key = _kernels.derive_seed(7, 0)
    group_of = exp.group_of.astype(np.int64)
    tri = np.full((2, 2, 2), 0.001)
    P = np.array([[0.3 * 0.6, 0.1 * 0.4], [0.1 * 0.6, 0.3 * 0.4]]) * n
    phi = 0.5 / np.linalg.eigvals(P).real.max()
    return {
        "pair_uniforms": lambda k: k["pair_uniforms"](np.uint64(key), np.int64(n)),
        "triangle_counts": lambda k: k["triangle_counts"](np.uint64(key), group_of[: min(n, 300)], tri),
        "csr_matvec": lambda k: k["csr_matvec"](indptr, indices, data, x0),
        "csr_power": lambda k: k["csr_power"](indptr, indices, data, x0.copy(), 1e-10, 100_000),
        "csr_neumann": lambda k: k["csr_neumann"](indptr, indices, data, 0.5 / (0.3 * 0.6 * n), 60),
        "walk_sum": lambda k: k["walk_sum"](P, phi, 0, 0, 1, 2000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    tables = {b: _kernels.implementations(b) for b in backends}
    print(f"n={args.n}, best of {args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) == 2 else ""))
    for name, fn in cases(args.n).items():
        t = [best_of(lambda: fn(tables[b]), args.repeat) for b in backends]
        line = f"{name:<16}" + "".join(f"{x * 1e3:>10.2f}ms" for x in t)
        if len(t) == 2:
            line += f"{t[0] / t[1]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
