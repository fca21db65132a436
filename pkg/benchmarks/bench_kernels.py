"""Time the compiled kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Both paths must agree on every input; a mismatch aborts the run.
"""
from __future__ import annotations

import argparse
import itertools
import time

import numpy as np

from locforge import _kernels


def _perm_data(degree: int):
    elems = np.array(list(itertools.permutations(range(degree))), dtype=np.int64)
    weights = degree ** np.arange(degree - 1, -1, -1, dtype=np.int64)
    codes = elems @ weights
    order = np.argsort(codes)
    return elems[order], weights, codes[order]


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_cayley(repeat: int) -> list[tuple]:
    rows = []
    for degree in (5, 6):
        elems, weights, codes = _perm_data(degree)
        fast = _kernels.cayley_table(elems, weights, codes)  # warms the jit cache
        slow = _kernels.cayley_table_numpy(elems, weights, codes)
        assert np.array_equal(fast, slow), "cayley tables differ"
        rows.append((f"cayley S{degree}", _best(lambda: _kernels.cayley_table(elems, weights, codes), repeat),
                     _best(lambda: _kernels.cayley_table_numpy(elems, weights, codes), repeat)))
    return rows


def bench_smith(repeat: int) -> list[tuple]:
    rng = np.random.default_rng(0)
    rows = []
    for (m, k), (p, a) in itertools.product([(40, 60), (120, 160)], [(2, 3), (3, 2)]):
        n = p ** a
        A0 = rng.integers(0, n, size=(m, k), dtype=np.int64)

        def run(fn):
            A, U, V = A0.copy(), np.eye(m, dtype=np.int64), np.eye(k, dtype=np.int64)
            return fn(A, U, V, p, a), A

        (r1, v1), A1 = run(_kernels.smith_mod_inplace)
        (r2, v2), A2 = run(_kernels.smith_mod_inplace_numpy)
        assert r1 == r2 and np.array_equal(v1[:r1], v2[:r2]), "smith forms differ"
        rows.append((f"smith {m}x{k} mod {p}^{a}", _best(lambda: run(_kernels.smith_mod_inplace), repeat),
                     _best(lambda: run(_kernels.smith_mod_inplace_numpy), repeat)))
    return rows


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"backend: {_kernels.backend()}")
    print(f"{'kernel':28s} {'compiled':>10s} {'numpy':>10s} {'ratio':>7s}")
    for name, fast, slow in bench_cayley(args.repeat) + bench_smith(args.repeat):
        print(f"{name:28s} {fast * 1e3:9.2f}ms {slow * 1e3:9.2f}ms {slow / fast:7.1f}")


if __name__ == "__main__":
    main()
