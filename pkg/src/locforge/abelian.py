"""Finite abelian groups in coordinates, and linear algebra over them.

A finite abelian group is a tuple of moduli ``(d_1, ..., d_k)``; elements
are integer vectors reduced coordinatewise.  Homomorphisms are integer
matrices (rows index target coordinates).  All solving is exact: over Z by
Smith normal form with Python integers, or over Z/p^a through the compiled
kernel, split into primary parts by the Chinese remainder theorem.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import gcd
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from . import _kernels


def lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b) if a and b else max(a, b)


def factor(n: int) -> list[tuple[int, int]]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            a = 0
            while n % d == 0:
                n //= d
                a += 1
            out.append((d, a))
        d += 1
    if n > 1:
        out.append((n, 1))
    return out


# ---------------------------------------------------------------- groups

@dataclass(frozen=True)
class FinAb:
    moduli: tuple[int, ...]

    def __post_init__(self):
        if any(d < 1 for d in self.moduli):
            raise ValueError("moduli must be positive")

    @property
    def rank(self) -> int:
        return len(self.moduli)

    @property
    def order(self) -> int:
        return reduce(lambda x, y: x * y, self.moduli, 1)

    @property
    def exponent(self) -> int:
        return reduce(lcm, self.moduli, 1)

    def zero(self) -> np.ndarray:
        return np.zeros(self.rank, dtype=np.int64)

    def reduce(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64).reshape(self.rank)
        return np.mod(v, np.array(self.moduli, dtype=np.int64)) if self.rank else v

    def is_zero(self, v) -> bool:
        return not self.reduce(v).any()

    def basis(self) -> list[np.ndarray]:
        return list(np.eye(self.rank, dtype=np.int64))

    def elements(self):
        """All elements, in lexicographic coordinate order."""
        import itertools

        for t in itertools.product(*(range(d) for d in self.moduli)):
            yield np.array(t, dtype=np.int64)

    def key(self, v) -> tuple[int, ...]:
        return tuple(int(x) for x in self.reduce(v))

    def invariants(self) -> tuple[int, ...]:
        """Invariant factors d_1 | d_2 | ... (ones dropped)."""
        return smith_invariants(np.diag(self.moduli).astype(object)) if self.rank else ()

    def direct_sum(self, other: "FinAb") -> "FinAb":
        return FinAb(self.moduli + other.moduli)

    def random(self, rng) -> np.ndarray:
        return np.array([rng.integers(d) for d in self.moduli], dtype=np.int64)


def direct_sum(groups: Sequence[FinAb]) -> tuple[FinAb, list[int]]:
    """Concatenate; also return the starting offset of each block."""
    offs = []
    mods: list[int] = []
    for g in groups:
        offs.append(len(mods))
        mods.extend(g.moduli)
    return FinAb(tuple(mods)), offs


def check_hom(M: np.ndarray, src: FinAb, tgt: FinAb) -> bool:
    """A matrix defines a hom iff it sends each relation d_j e_j to zero."""
    M = np.asarray(M, dtype=np.int64).reshape(tgt.rank, src.rank)
    for j, d in enumerate(src.moduli):
        if not tgt.is_zero(M[:, j] * d):
            return False
    return True


# ---------------------------------------------------------------- Smith form over Z

def smith_normal_form(A) -> tuple[list[list[int]], list[list[int]], list[list[int]]]:
    """Return (S, U, V) with U A V = S diagonal, divisibility chain on the diagonal.

    Exact, with Python integers.  Intended for small matrices.
    """
    A = [[int(x) for x in row] for row in np.asarray(A, dtype=object).tolist()] if len(A) else []
    m = len(A)
    n = len(A[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(M, i, j):
        M[i], M[j] = M[j], M[i]

    def swap_cols(M, i, j):
        for row in M:
            row[i], row[j] = row[j], row[i]

    def add_row(M, src, dst, f):  # row_dst += f row_src
        if f:
            rs, rd = M[src], M[dst]
            for k in range(len(rd)):
                rd[k] += f * rs[k]

    def add_col(M, src, dst, f):
        if f:
            for row in M:
                row[dst] += f * row[src]

    t = 0
    while t < min(m, n):
        # pick the nonzero entry of least absolute value
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(A, t, best[0])
        swap_rows(U, t, best[0])
        swap_cols(A, t, best[1])
        swap_cols(V, t, best[1])
        while True:
            changed = False
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    add_row(A, t, i, -q)
                    add_row(U, t, i, -q)
                    if A[i][t]:
                        swap_rows(A, t, i)
                        swap_rows(U, t, i)
                        changed = True
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    add_col(A, t, j, -q)
                    add_col(V, t, j, -q)
                    if A[t][j]:
                        swap_cols(A, t, j)
                        swap_cols(V, t, j)
                        changed = True
            if changed:
                continue
            # enforce divisibility against the remaining block
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if A[i][j] % A[t][t]:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(A, bad, t, 1)
            add_row(U, bad, t, 1)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    return A, U, V


def smith_invariants(A) -> tuple[int, ...]:
    """Nontrivial invariant factors of the cokernel of A (zeros mark free summands)."""
    S, _, _ = smith_normal_form(A)
    m = len(S)
    n = len(S[0]) if m else 0
    diag = [abs(S[i][i]) for i in range(min(m, n))]
    out = [d for d in diag if d != 1]
    out += [0] * (m - min(m, n))
    return tuple(sorted((d for d in out if d), key=int) + [d for d in out if d == 0])


# ---------------------------------------------------------------- modular primitives

def _smith_mod(M: np.ndarray, p: int, a: int):
    A = np.array(M, dtype=np.int64) % (p ** a)
    m, k = A.shape
    U = np.eye(m, dtype=np.int64)
    V = np.eye(k, dtype=np.int64)
    if m == 0 or k == 0:
        return A, U, V, 0, np.zeros(0, dtype=np.int64)
    r, vals = _kernels.smith_mod_inplace(A, U, V, p, a)
    return A, U, V, int(r), np.asarray(vals)


def _val(x: int, p: int, a: int) -> int:
    if x == 0:
        return a
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _solve_prime_power(M, b, p, a):
    """Solve M x = b over Z/p^a; return (x, kernel generator columns) or (None, None)."""
    n = p ** a
    m, k = M.shape
    S, U, V, r, vals = _smith_mod(M, p, a)
    ub = (U @ (np.asarray(b, dtype=np.int64) % n)) % n if m else np.zeros(0, dtype=np.int64)
    w = np.zeros(k, dtype=np.int64)
    for i in range(r):
        pv = p ** int(vals[i])
        if ub[i] % pv:
            return None, None
        w[i] = (ub[i] // pv) % n
    if ub[r:].any():
        return None, None
    x = (V @ w) % n if k else w
    gens = []
    for i in range(k):
        if i < r:
            v = int(vals[i])
            if v == 0:
                continue
            gens.append((V[:, i] * p ** (a - v)) % n)
        else:
            gens.append(V[:, i] % n)
    K = np.array(gens, dtype=np.int64).T if gens else np.zeros((k, 0), dtype=np.int64)
    return x, K


def _crt(parts: list[tuple[int, np.ndarray]], N: int) -> np.ndarray:
    out = np.zeros_like(parts[0][1])
    for q, v in parts:
        e = N // q
        inv = pow(e, -1, q)
        out = (out + v.astype(object) * e * inv) % N
    return np.array(out, dtype=np.int64)


def solve_mod(M, b, N: int):
    """Solve M x = b over Z/N.  Returns (particular x, kernel generators) or (None, None)."""
    M = np.asarray(M, dtype=np.int64)
    m, k = M.shape
    b = np.asarray(b, dtype=np.int64).reshape(m)
    if N == 1:
        return np.zeros(k, dtype=np.int64), np.zeros((k, 0), dtype=np.int64)
    xs = []
    kers = []
    for p, a in factor(N):
        q = p ** a
        x, K = _solve_prime_power(M % q, b % q, p, a)
        if x is None:
            return None, None
        xs.append((q, x))
        # lift each kernel generator so it vanishes at the other primes
        kers.append((q, K))
    x = _crt(xs, N)
    gens = []
    for q, K in kers:
        e = N // q
        for j in range(K.shape[1]):
            gens.append((K[:, j].astype(object) * e * pow(e, -1, q)) % N)
    Kall = np.array(gens, dtype=np.int64).T if gens else np.zeros((k, 0), dtype=np.int64)
    return x, Kall.reshape(k, -1)


def _module_N(*groups: FinAb) -> int:
    return reduce(lcm, (g.exponent for g in groups), 1)


# ---------------------------------------------------------------- linear problems between groups

def _scaled_rows(M: np.ndarray, tgt: FinAb, N: int) -> np.ndarray:
    """Rows multiplied by N / m_i, so that row i vanishes mod N iff it vanishes mod m_i."""
    scale = np.array([N // m for m in tgt.moduli], dtype=np.int64).reshape(-1, 1)
    return (M % N) * scale % N


def solve(M, b, src: FinAb, tgt: FinAb):
    """Find x in ``src`` with M x = b in ``tgt``.

    Returns (x, kernel generators as columns in src coordinates) or
    (None, None) when there is no solution.
    """
    M = np.asarray(M, dtype=np.int64).reshape(tgt.rank, src.rank)
    N = _module_N(src, tgt)
    b = np.asarray(b, dtype=np.int64).reshape(tgt.rank)
    x, K = solve_mod(_scaled_rows(M, tgt, N), _scaled_rows(b.reshape(-1, 1), tgt, N).reshape(-1), N)
    if x is None:
        return None, None
    xs = src.reduce(x)
    cols = [src.reduce(K[:, j]) for j in range(K.shape[1])]
    cols = [c for c in cols if c.any()]
    Kmat = np.array(cols, dtype=np.int64).T if cols else np.zeros((src.rank, 0), dtype=np.int64)
    return xs, Kmat


def image_order(M, src: FinAb, tgt: FinAb) -> int:
    """|M(src)| for a homomorphism given by its matrix, without transforms."""
    M = np.asarray(M, dtype=np.int64).reshape(tgt.rank, src.rank)
    N = _module_N(src, tgt)
    if N == 1 or not M.size:
        return 1
    A = _scaled_rows(M, tgt, N)
    order = 1
    for p, a in factor(N):
        q = p ** a
        B = A % q
        r, vals = _kernels.smith_mod_inplace(B, np.zeros((B.shape[0], 0), dtype=np.int64),
                                             np.zeros((0, B.shape[1]), dtype=np.int64), p, a)
        for i in range(int(r)):
            order *= p ** (a - int(vals[i]))
    return order


def span_order(G: np.ndarray, A: FinAb) -> int:
    """Order of the subgroup of A generated by the columns of G."""
    return A.order // quotient_invariants_order(G, A)


def quotient_invariants(G: np.ndarray, A: FinAb) -> tuple[int, ...]:
    """Invariant factors of A / <columns of G>."""
    rel = np.hstack([np.asarray(G, dtype=np.int64).reshape(A.rank, -1), np.diag(np.array(A.moduli, dtype=np.int64))]) \
        if A.rank else np.zeros((0, 0), dtype=np.int64)
    return _coker_invariants(rel, _module_N(A))


def quotient_invariants_order(G, A: FinAb) -> int:
    return reduce(lambda x, y: x * y, quotient_invariants(G, A), 1)


def _coker_invariants(rel: np.ndarray, N: int) -> tuple[int, ...]:
    """Invariants of (Z/N)^m / span(rel columns) where rel already contains N-torsion relations."""
    m = rel.shape[0]
    if m == 0 or N == 1:
        return ()
    primary: list[int] = []
    for p, a in factor(N):
        S, U, V, r, vals = _smith_mod(rel % p ** a, p, a)
        for i in range(m):
            v = int(vals[i]) if i < r else a
            if v:
                primary.append(p ** v)
    return _primary_to_invariants(primary)


def _primary_to_invariants(primary: list[int]) -> tuple[int, ...]:
    by_p: dict[int, list[int]] = {}
    for q in primary:
        p = factor(q)[0][0]
        by_p.setdefault(p, []).append(q)
    for p in by_p:
        by_p[p].sort(reverse=True)
    k = max((len(v) for v in by_p.values()), default=0)
    out = []
    for i in range(k):
        d = 1
        for v in by_p.values():
            if i < len(v):
                d *= v[i]
        out.append(d)
    return tuple(sorted(out))


def image_generators(M, src: FinAb, tgt: FinAb) -> np.ndarray:
    M = np.asarray(M, dtype=np.int64).reshape(tgt.rank, src.rank)
    cols = [tgt.reduce(M[:, j]) for j in range(src.rank)]
    return np.array(cols, dtype=np.int64).T if cols else np.zeros((tgt.rank, 0), dtype=np.int64)


def kernel_generators(M, src: FinAb, tgt: FinAb) -> np.ndarray:
    _, K = solve(M, np.zeros(tgt.rank, dtype=np.int64), src, tgt)
    return K


@dataclass
class Subquotient:
    """H = Z / B for subgroups B <= Z of an ambient finite abelian group."""

    invariants: tuple[int, ...]
    witnesses: list[np.ndarray] = field(default_factory=list)

    @property
    def order(self) -> int:
        return reduce(lambda x, y: x * y, self.invariants, 1)


def subquotient(Z: np.ndarray, B: np.ndarray, A: FinAb, want_witnesses: bool = False) -> Subquotient:
    """Invariants of <Z>/<B> inside A, assuming <B> <= <Z>.

    With ``want_witnesses`` also return elements of <Z> mapping onto a
    generating set of the quotient.
    """
    Z = np.asarray(Z, dtype=np.int64).reshape(A.rank, -1)
    B = np.asarray(B, dtype=np.int64).reshape(A.rank, -1)
    kz = Z.shape[1]
    if kz == 0:
        return Subquotient(())
    # c in Z^kz is killed iff Z c in <B>: kernel of [Z | -B | D] projected to c
    N = _module_N(A)
    sysm = _scaled_rows(np.hstack([Z, -B]), A, N)
    _, K = solve_mod(sysm, np.zeros(A.rank, dtype=np.int64), N)
    L = K[:kz, :]
    # also kill N * e_i so the quotient of (Z/N)^kz is the right thing
    rel = np.hstack([L, np.zeros((kz, 0), dtype=np.int64)])
    inv = _coker_invariants(rel % N, N)
    out = Subquotient(inv)
    if want_witnesses and inv:
        out.witnesses = _witnesses(Z, rel % N, N, A)
    return out


def _witnesses(Z, rel, N, A) -> list[np.ndarray]:
    """Elements of <Z> whose classes generate (Z/N)^kz / span(rel)."""
    kz = Z.shape[1]
    found = []
    # greedy: add unit vectors whose class is not yet in the span
    cur = rel.copy()
    base = _coker_invariants(cur, N)
    for i in range(kz):
        e = np.zeros((kz, 1), dtype=np.int64)
        e[i, 0] = 1
        cand = np.hstack([cur, e])
        inv = _coker_invariants(cand, N)
        if inv != base:
            cur = cand
            base = inv
            found.append(A.reduce(Z[:, i]))
        if not base:
            break
    return found


# ---------------------------------------------------------------- concrete abelian groups

class AbelianCoordinates:
    """Coordinates on a concrete finite abelian group.

    ``elements`` are hashable, ``mul`` is the group law and ``one`` the
    identity.  Builds invariant-factor coordinates by Smith form of the
    triangular relation matrix of a greedy generating set.
    """

    def __init__(self, elements: Iterable[Hashable], mul: Callable, one: Hashable):
        elements = list(elements)
        self.one = one
        self.mul = mul
        gens: list = []
        exps: list[int] = []
        rels: list[list[int]] = []
        # span maps element -> exponent vector w.r.t. gens so far
        span = {one: ()}
        for g in elements:
            if g in span:
                continue
            # order of g modulo current span
            e = 1
            x = g
            while x not in span:
                x = mul(x, g)
                e += 1
            rel = [-c for c in span[x]] + [e]
            k = len(gens)
            gens.append(g)
            exps.append(e)
            new = {}
            for h, vec in span.items():
                y = h
                for j in range(e):
                    new[y] = vec + (j,)
                    y = mul(y, g)
            span = new
            rels.append(rel)
        k = len(gens)
        R = [r + [0] * (k - len(r)) for r in rels]
        # rows of R generate the relation lattice in Z^k
        S, U, V = smith_normal_form(R) if k else ([], [], [])
        diag = [abs(S[i][i]) for i in range(k)]
        keep = [i for i in range(k) if diag[i] != 1]
        self.group = FinAb(tuple(diag[i] for i in keep))
        self._V = np.array(V, dtype=object) if k else np.zeros((0, 0), dtype=object)
        self._keep = keep
        self._gens = gens
        self.coords: dict = {}
        self.elements: dict = {}
        for h, vec in span.items():
            c = self._convert(vec)
            self.coords[h] = c
            self.elements[c] = h
        if len(self.elements) != len(span):  # pragma: no cover - sanity
            raise RuntimeError("coordinate map is not injective")

    def _convert(self, vec) -> tuple[int, ...]:
        if not self._keep:
            return ()
        v = np.array(vec, dtype=object) @ self._V
        return tuple(int(v[i]) % self.group.moduli[j] for j, i in enumerate(self._keep))

    def to_coords(self, x) -> np.ndarray:
        return np.array(self.coords[x], dtype=np.int64)

    def to_element(self, v):
        return self.elements[self.group.key(v)]

    @property
    def order(self) -> int:
        return len(self.coords)

    def basis_elements(self) -> list:
        return [self.to_element(e) for e in self.group.basis()]

    def hom_matrix(self, f: Callable, target: "AbelianCoordinates") -> np.ndarray:
        """Matrix of the homomorphism f in the two coordinate systems."""
        cols = [target.to_coords(f(b)) for b in self.basis_elements()]
        if not cols:
            return np.zeros((target.group.rank, 0), dtype=np.int64)
        return np.array(cols, dtype=np.int64).T
