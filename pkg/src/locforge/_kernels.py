"""Compiled inner loops with a pure numpy fallback.

Set ``LOCFORGE_PURE_NUMPY=1`` before import to skip numba entirely.
Both paths return identical arrays; the benchmark in ``benchmarks/``
times one against the other.
"""
from __future__ import annotations

import os

import numpy as np

PURE_NUMPY = os.environ.get("LOCFORGE_PURE_NUMPY", "") not in ("", "0")

try:
    if PURE_NUMPY:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAVE_NUMBA = False


# ---------------------------------------------------------------- cayley table

def _cayley_numpy(elems: np.ndarray, weights: np.ndarray, codes: np.ndarray) -> np.ndarray:
    n = elems.shape[0]
    table = np.empty((n, n), dtype=np.int32)
    for i in range(n):
        comp = elems[i][elems]  # row j is elems[i] o elems[j]
        table[i] = np.searchsorted(codes, comp @ weights)
    return table


def _cayley_loops(elems, weights, codes):
    n, d = elems.shape
    table = np.empty((n, n), dtype=np.int32)
    for i in range(n):
        for j in range(n):
            c = 0
            for k in range(d):
                c += elems[i, elems[j, k]] * weights[k]
            lo, hi = 0, n
            while lo < hi:
                mid = (lo + hi) // 2
                if codes[mid] < c:
                    lo = mid + 1
                else:
                    hi = mid
            table[i, j] = lo
    return table


# ------------------------------------------------- smith form over Z/p^a

def _valuation(x, p, a):
    if x == 0:
        return a
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _inv_unit(u, n):
    # extended euclid; u is a unit mod n
    r0, r1 = n, u % n
    s0, s1 = 0, 1
    while r1 != 0:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    return s0 % n


def _smith_mod_loops(A, U, V, p, a):
    """In-place diagonalisation of A over Z/p^a.

    Row operations are mirrored on U and column operations on V, so that
    U @ A_in @ V == A_out (mod p^a).  Returns the rank and the pivot
    valuations in order; each pivot ends up equal to p^valuation.
    """
    n = p ** a
    m, k = A.shape
    vals = np.full(min(m, k), a, dtype=np.int64)
    r = 0
    while r < m and r < k:
        best = a
        bi = -1
        bj = -1
        for i in range(r, m):
            for j in range(r, k):
                x = A[i, j]
                if x != 0:
                    v = _valuation(x, p, a)
                    if v < best:
                        best = v
                        bi = i
                        bj = j
                        if v == 0:
                            break
            if best == 0:
                break
        if bi < 0:
            break
        if bi != r:
            for j in range(k):
                t = A[r, j]
                A[r, j] = A[bi, j]
                A[bi, j] = t
            for j in range(U.shape[1]):
                t = U[r, j]
                U[r, j] = U[bi, j]
                U[bi, j] = t
        if bj != r:
            for i in range(m):
                t = A[i, r]
                A[i, r] = A[i, bj]
                A[i, bj] = t
            for i in range(V.shape[0]):
                t = V[i, r]
                V[i, r] = V[i, bj]
                V[i, bj] = t
        pv = 1
        for _ in range(best):
            pv *= p
        unit = (A[r, r] // pv) % n
        uinv = _inv_unit(unit, n)
        # scale the pivot row so the pivot becomes p^best
        for j in range(k):
            A[r, j] = (A[r, j] * uinv) % n
        for j in range(U.shape[1]):
            U[r, j] = (U[r, j] * uinv) % n
        for i in range(r + 1, m):
            x = A[i, r]
            if x != 0:
                f = (x // pv) % n
                for j in range(r, k):
                    A[i, j] = (A[i, j] - f * A[r, j]) % n
                for j in range(U.shape[1]):
                    U[i, j] = (U[i, j] - f * U[r, j]) % n
        for j in range(r + 1, k):
            x = A[r, j]
            if x != 0:
                f = (x // pv) % n
                A[r, j] = 0
                for i in range(V.shape[0]):
                    V[i, j] = (V[i, j] - f * V[i, r]) % n
        vals[r] = best
        r += 1
    return r, vals


def _smith_mod_numpy(A, U, V, p, a):
    n = p ** a
    m, k = A.shape
    vals = np.full(min(m, k), a, dtype=np.int64)
    r = 0
    while r < m and r < k:
        sub = A[r:, r:]
        nz = sub != 0
        if not nz.any():
            break
        val = np.full(sub.shape, a, dtype=np.int64)
        rest = np.where(nz, sub, 0)
        for v in range(a):
            # entries not divisible by p^(v+1) have valuation exactly v
            hit = nz & (val == a) & (rest % (p ** (v + 1)) != 0)
            val[hit] = v
        flat = int(np.argmin(val))
        bi, bj = divmod(flat, sub.shape[1])
        best = int(val[bi, bj])
        bi += r
        bj += r
        if bi != r:
            A[[r, bi]] = A[[bi, r]]
            U[[r, bi]] = U[[bi, r]]
        if bj != r:
            A[:, [r, bj]] = A[:, [bj, r]]
            V[:, [r, bj]] = V[:, [bj, r]]
        pv = p ** best
        uinv = _inv_unit(int(A[r, r] // pv) % n, n)
        A[r] = (A[r] * uinv) % n
        U[r] = (U[r] * uinv) % n
        f = (A[r + 1:, r] // pv) % n
        if f.any():
            A[r + 1:, r:] = (A[r + 1:, r:] - np.outer(f, A[r, r:])) % n
            U[r + 1:] = (U[r + 1:] - np.outer(f, U[r])) % n
        g = (A[r, r + 1:] // pv) % n
        if g.any():
            A[r, r + 1:] = 0
            V[:, r + 1:] = (V[:, r + 1:] - np.outer(V[:, r], g)) % n
        vals[r] = best
        r += 1
    return r, vals


if HAVE_NUMBA:
    cayley_table = njit(cache=True)(_cayley_loops)
    _valuation = njit(cache=True)(_valuation)
    _inv_unit = njit(cache=True)(_inv_unit)
    smith_mod_inplace = njit(cache=True)(_smith_mod_loops)
else:
    cayley_table = _cayley_numpy
    smith_mod_inplace = _smith_mod_numpy

cayley_table_numpy = _cayley_numpy
smith_mod_inplace_numpy = _smith_mod_numpy


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
