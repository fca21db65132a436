"""Cohomology of finite categories with contravariant abelian coefficients.

An n-chain is a string q(0) -> q(1) -> ... -> q(n) of composable
morphisms; an n-cochain assigns to every n-chain an element of F(q(0)).
The differential is

    (d c)(q) = F(q(0.1)) c(d_0 q) + sum_{i=1..n} (-1)^i c(d_i q) + (-1)^(n+1) c(d_{n+1} q)

so that in degree one (d c)(x, y) = F(y) c_x - c_{x y} + c_y.
Everything is integral: coefficient groups are finite abelian groups in
invariant-factor coordinates and all kernels and images go through Smith
forms over Z / p^a.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .abelian import FinAb, direct_sum, image_order, solve, subquotient
from .fusion import Ext, FusionSystem, divisibility_set, ext_class, ext_compose, normal_form_terms
from .groups import Hom, Subgroup, identity_hom

DEFAULT_CHAIN_BUDGET = 200_000
MAX_DEGREE = 3


class ChainBudgetExceeded(RuntimeError):
    pass


class NotACocycle(ValueError):
    pass


class NotAFunctor(ValueError):
    pass


# ---------------------------------------------------------------- categories

class FiniteCategory:
    """Objects and morphisms by index, with a full composition table.

    ``compose(i, j)`` is i o j for j: a -> b and i: b -> c.
    """

    def __init__(self, objects: Sequence[Hashable], morphisms: Sequence[tuple[int, int, Hashable]],
                 compose: dict[tuple[int, int], int], identities: Sequence[int], name: str = ""):
        self.objects = list(objects)
        self.source = [m[0] for m in morphisms]
        self.target = [m[1] for m in morphisms]
        self.labels = [m[2] for m in morphisms]
        self._compose = dict(compose)
        self.identities = list(identities)
        self.name = name
        self.out = [[] for _ in self.objects]
        for i, s in enumerate(self.source):
            self.out[s].append(i)
        self._isos = None

    @property
    def n_morphisms(self) -> int:
        return len(self.source)

    def compose(self, i: int, j: int) -> int:
        return self._compose[(i, j)]

    def isomorphisms(self) -> dict[int, int]:
        """Invertible morphisms mapped to their inverses."""
        if self._isos is None:
            out = {}
            for i in range(self.n_morphisms):
                a, b = self.source[i], self.target[i]
                for j in self.out[b]:
                    if self.target[j] == a and self._compose[(j, i)] == self.identities[a] \
                            and self._compose[(i, j)] == self.identities[b]:
                        out[i] = j
                        break
            self._isos = out
        return self._isos

    def is_iso(self, i: int) -> bool:
        return i in self.isomorphisms()

    def check(self) -> bool:
        """Units and associativity over all composable triples."""
        for i in range(self.n_morphisms):
            if self._compose[(self.identities[self.target[i]], i)] != i:
                return False
            if self._compose[(i, self.identities[self.source[i]])] != i:
                return False
        for i in range(self.n_morphisms):
            for j in self.out[self.target[i]]:
                ji = self._compose[(j, i)]
                for k in self.out[self.target[j]]:
                    if self._compose[(k, ji)] != self._compose[(self._compose[(k, j)], i)]:
                        return False
        return True


def exterior_category(F: FusionSystem, X: Iterable[Subgroup]) -> FiniteCategory:
    """F~^X: objects X, morphisms the exterior classes between them."""
    X = sorted(set(X))
    pos = {Q: i for i, Q in enumerate(X)}
    mors: list[tuple[int, int, Ext]] = []
    index: dict[Ext, int] = {}
    for R in X:
        for Q in X:
            for e in F.ext(Q, R):
                index[e] = len(mors)
                mors.append((pos[R], pos[Q], e))
    ident = [index[ext_class(identity_hom(Q))] for Q in X]
    comp = {}
    for j, (a, b, ej) in enumerate(mors):
        for i, (b2, c, ei) in enumerate(mors):
            if b2 == b:
                comp[(i, j)] = index[ext_compose(ei, ej)]
    C = FiniteCategory(X, mors, comp, ident, name="F~^X")
    C.fusion = F
    C.index = index
    return C


def subcategory(C: FiniteCategory, keep: Iterable[int], name: str = "") -> tuple[FiniteCategory, list[int]]:
    """Wide subcategory on the given morphisms (identities are always kept).

    Returns the subcategory and the list of original indices.
    """
    keep = sorted(set(keep) | set(C.identities))
    pos = {m: i for i, m in enumerate(keep)}
    comp = {}
    for i in keep:
        for j in keep:
            if C.target[j] == C.source[i]:
                c = C.compose(i, j)
                if c not in pos:
                    raise ValueError("morphism set is not closed under composition")
                comp[(pos[i], pos[j])] = pos[c]
    mors = [(C.source[m], C.target[m], C.labels[m]) for m in keep]
    sub = FiniteCategory(C.objects, mors, comp, [pos[m] for m in C.identities], name=name or C.name + "-sub")
    for attr in ("fusion",):
        if hasattr(C, attr):
            setattr(sub, attr, getattr(C, attr))
    return sub, keep


def restrict_functor(Fn: "CoefficientFunctor", sub: FiniteCategory, keep: list[int]) -> "CoefficientFunctor":
    return CoefficientFunctor(sub, Fn.groups, [Fn.matrices[m] for m in keep], check=False)


def parallel_arrows_category() -> FiniteCategory:
    """Two objects a, b and two arrows f, g: a -> b; its nerve is a circle."""
    mors = [(0, 0, "1a"), (1, 1, "1b"), (0, 1, "f"), (0, 1, "g")]
    comp = {(0, 0): 0, (1, 1): 1, (2, 0): 2, (3, 0): 3, (1, 2): 2, (1, 3): 3}
    return FiniteCategory(["a", "b"], mors, comp, [0, 1], name="parallel arrows")


def group_category(n: int) -> FiniteCategory:
    """The cyclic group of order n as a one-object category."""
    mors = [(0, 0, k) for k in range(n)]
    comp = {(i, j): (i + j) % n for i in range(n) for j in range(n)}
    return FiniteCategory(["*"], mors, comp, [0], name=f"C{n}")


# ---------------------------------------------------------------- coefficients

class CoefficientFunctor:
    """A contravariant functor to finite abelian groups.

    ``matrices[m]`` maps groups[target(m)] -> groups[source(m)].
    """

    def __init__(self, C: FiniteCategory, groups: Sequence[FinAb], matrices: Sequence[np.ndarray], check: bool = True):
        self.C = C
        self.groups = list(groups)
        self.matrices = []
        for m in range(C.n_morphisms):
            src, tgt = self.groups[C.source[m]], self.groups[C.target[m]]
            M = np.asarray(matrices[m], dtype=np.int64).reshape(src.rank, tgt.rank)
            if src.rank:
                M = M % np.array(src.moduli, dtype=np.int64)[:, None]
            self.matrices.append(M)
        if check:
            bad = self.law_violations(limit=1)
            if bad:
                raise NotAFunctor(f"functor law fails at {bad[0]}")

    def apply(self, m: int, v) -> np.ndarray:
        return self.groups[self.C.source[m]].reduce(self.matrices[m] @ np.asarray(v, dtype=np.int64))

    def law_violations(self, limit: int | None = None) -> list[tuple]:
        C = self.C
        out = []
        for a, e in enumerate(C.identities):
            G = self.groups[a]
            if G.rank and ((self.matrices[e] - np.eye(G.rank, dtype=np.int64)) % np.array(G.moduli)[:, None]).any():
                out.append(("identity", a))
        for j in range(C.n_morphisms):
            for i in C.out[C.target[j]]:
                G = self.groups[C.source[j]]
                if not G.rank:
                    continue
                lhs = self.matrices[C.compose(i, j)]
                rhs = self.matrices[j] @ self.matrices[i]
                if ((lhs - rhs) % np.array(G.moduli)[:, None]).any():
                    out.append(("composition", i, j))
                    if limit and len(out) >= limit:
                        return out
        return out


def constant_functor(C: FiniteCategory, A: FinAb) -> CoefficientFunctor:
    return CoefficientFunctor(C, [A] * len(C.objects), [np.eye(A.rank, dtype=np.int64)] * C.n_morphisms)


def kernel_functor(L, C: FiniteCategory | None = None) -> CoefficientFunctor:
    """Ker(pi) of an extension-form locality as a functor on F~^X."""
    F = L.F
    if C is None:
        C = exterior_category(F, L.objects)
    mats = []
    for m in range(C.n_morphisms):
        e: Ext = C.labels[m]
        Q = C.objects[C.target[m]]
        psi = Hom(e.source, F.P, e.rep.images)
        mats.append(L.action(Q, psi))
    return CoefficientFunctor(C, [L.kernels[Q] for Q in C.objects], mats)


# ---------------------------------------------------------------- chains

@dataclass(frozen=True)
class Chain:
    objects: tuple[int, ...]
    morphisms: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.morphisms)


def enumerate_chains(C: FiniteCategory, n: int, budget: int = DEFAULT_CHAIN_BUDGET,
                     max_degree: int = MAX_DEGREE) -> list[Chain]:
    """All functors Delta_n -> C in lexicographic order of morphism indices."""
    if n < 0:
        return []
    if n > max_degree:
        raise ChainBudgetExceeded(f"degree {n} exceeds the configured maximum {max_degree}")
    chains = [Chain((a,), ()) for a in range(len(C.objects))]
    for _ in range(n):
        nxt = []
        for ch in chains:
            for m in C.out[ch.objects[-1]]:
                nxt.append(Chain(ch.objects + (C.target[m],), ch.morphisms + (m,)))
                if len(nxt) > budget:
                    raise ChainBudgetExceeded(f"more than {budget} chains of degree {n}")
        chains = nxt
    return chains


def face(C: FiniteCategory, q: Chain, i: int) -> Chain:
    n = q.n
    if i == 0:
        return Chain(q.objects[1:], q.morphisms[1:])
    if i == n:
        return Chain(q.objects[:-1], q.morphisms[:-1])
    m = C.compose(q.morphisms[i], q.morphisms[i - 1])
    return Chain(q.objects[:i] + q.objects[i + 1:], q.morphisms[: i - 1] + (m,) + q.morphisms[i + 1:])


class CochainComplex:
    """Cochain groups and differential matrices of (C, F), built lazily."""

    def __init__(self, F: CoefficientFunctor, budget: int = DEFAULT_CHAIN_BUDGET, max_degree: int = MAX_DEGREE):
        self.F = F
        self.C = F.C
        self.budget = budget
        self.max_degree = max_degree
        self._chains: dict[int, list[Chain]] = {}
        self._index: dict[int, dict[Chain, int]] = {}
        self._groups: dict[int, tuple[FinAb, list[int]]] = {}
        self._d: dict[int, np.ndarray] = {}

    def chains(self, n: int) -> list[Chain]:
        if n not in self._chains:
            ch = enumerate_chains(self.C, n, self.budget, self.max_degree)
            self._chains[n] = ch
            self._index[n] = {q: i for i, q in enumerate(ch)}
        return self._chains[n]

    def group(self, n: int) -> FinAb:
        return self._group(n)[0]

    def _group(self, n: int):
        if n not in self._groups:
            self._groups[n] = direct_sum([self.F.groups[q.objects[0]] for q in self.chains(n)])
        return self._groups[n]

    def block(self, n: int, q: Chain) -> slice:
        _, offs = self._group(n)
        i = self._index[n][q]
        return slice(offs[i], offs[i] + self.F.groups[q.objects[0]].rank)

    def d(self, n: int) -> np.ndarray:
        """Matrix of d_n: C^n -> C^(n+1)."""
        if n in self._d:
            return self._d[n]
        src, tgt = self.group(n), self.group(n + 1)
        D = np.zeros((tgt.rank, src.rank), dtype=np.int64)
        C = self.C
        for q in self.chains(n + 1):
            rows = self.block(n + 1, q)
            if rows.start == rows.stop:
                continue
            D[rows, self.block(n, face(C, q, 0))] += self.F.matrices[q.morphisms[0]]
            r = rows.stop - rows.start
            eye = np.eye(r, dtype=np.int64)
            for i in range(1, n + 2):
                D[rows, self.block(n, face(C, q, i))] += (-1) ** i * eye
        if tgt.rank:
            D %= np.array(tgt.moduli, dtype=np.int64)[:, None]
        self._d[n] = D
        return D

    def differential(self, c: np.ndarray, n: int) -> np.ndarray:
        return self.group(n + 1).reduce(self.d(n) @ np.asarray(c, dtype=np.int64))

    def as_dict(self, c: np.ndarray, n: int) -> dict[Chain, np.ndarray]:
        return {q: np.asarray(c)[self.block(n, q)] for q in self.chains(n)}

    def from_dict(self, values: dict, n: int) -> np.ndarray:
        out = self.group(n).zero()
        for q, v in values.items():
            out[self.block(n, q)] = v
        return self.group(n).reduce(out)


def differential(F: CoefficientFunctor, c, n: int, complex_: CochainComplex | None = None) -> np.ndarray:
    K = complex_ or CochainComplex(F)
    return K.differential(c, n)


# ---------------------------------------------------------------- stable cochains

def _chain_moves(C: FiniteCategory, q: Chain):
    """Chains reached by changing one vertex along an isomorphism, with the iso used at vertex 0."""
    isos = C.isomorphisms()
    for i, a in enumerate(q.objects):
        for g in C.out[a]:
            if g not in isos:
                continue
            gi = isos[g]
            mors = list(q.morphisms)
            if i > 0:
                mors[i - 1] = C.compose(g, mors[i - 1])
            if i < q.n:
                mors[i] = C.compose(mors[i], gi)
            objs = list(q.objects)
            objs[i] = C.target[g]
            yield Chain(tuple(objs), tuple(mors)), (g if i == 0 else None)


def stable_subspace(K: CochainComplex, n: int, regular: bool = False) -> np.ndarray:
    """Generators (columns of C^n) of the cochains invariant under chain isomorphisms.

    A natural isomorphism (gamma_i) from q to q' transports c(q) to
    c(q') = F(gamma_0^{-1}) c(q).  With ``regular`` the cochains must also
    vanish on chains having an invertible step.
    """
    C, F = K.C, K.F
    isos = C.isomorphisms()
    chains = K.chains(n)
    G = K.group(n)
    seen: dict[Chain, np.ndarray] = {}
    gens = []
    for q0 in chains:
        if q0 in seen:
            continue
        A0 = F.groups[q0.objects[0]]
        transport = {q0: np.eye(A0.rank, dtype=np.int64)}
        constraints = []
        stack = [q0]
        while stack:
            q = stack.pop()
            T = transport[q]
            for q2, g in _chain_moves(C, q):
                M = T if g is None else F.matrices[isos[g]] @ T
                A2 = F.groups[q2.objects[0]]
                if A2.rank:
                    M = M % np.array(A2.moduli, dtype=np.int64)[:, None]
                if q2 in transport:
                    diff = (M - transport[q2])
                    if A2.rank and (diff % np.array(A2.moduli)[:, None]).any():
                        constraints.append((A2, diff))
                else:
                    transport[q2] = M
                    stack.append(q2)
        for q in transport:
            seen[q] = transport[q]
        if regular and any(any(m in isos for m in q.morphisms) for q in transport):
            continue
        if not A0.rank:
            continue
        # v in A0 with diff v = 0 in every constraint
        if constraints:
            tgt, _ = direct_sum([a for a, _ in constraints])
            M = np.vstack([d for _, d in constraints])
            _, Kv = solve(M, np.zeros(tgt.rank, dtype=np.int64), A0, tgt)
            basis = [Kv[:, j] for j in range(Kv.shape[1])]
        else:
            basis = A0.basis()
        for v in basis:
            c = G.zero()
            for q, T in transport.items():
                c[K.block(n, q)] = T @ v
            gens.append(G.reduce(c))
    return np.array(gens, dtype=np.int64).T.reshape(G.rank, len(gens))


def _span_order(cols: np.ndarray, A: FinAb) -> int:
    N = A.exponent
    return image_order(cols, FinAb(tuple([N] * cols.shape[1])), A) if cols.shape[1] and N > 1 else 1


# ---------------------------------------------------------------- cohomology

@dataclass
class CohomologyReport:
    n: int
    stable: bool
    order: int
    invariants: tuple[int, ...]
    cocycle_order: int
    coboundary_order: int
    witnesses: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return 0

    @property
    def vanishes(self) -> bool:
        return self.order == 1

    def to_json(self) -> dict:
        out = {"n": self.n, "stable": self.stable, "group": {"rank": 0, "torsion": list(self.invariants)},
               "order": self.order, "cocycles": self.cocycle_order, "coboundaries": self.coboundary_order}
        if self.witnesses:
            out["witnesses"] = [[int(x) for x in w] for w in self.witnesses]
        return out


def _restricted(K: CochainComplex, n: int, stable: bool, regular: bool):
    """Generator matrix of the (stable) cochains in degree n, or None for all of C^n."""
    if not stable:
        return None
    return stable_subspace(K, n, regular=regular)


def cohomology(K: CochainComplex, n: int, stable: bool = False, regular: bool = False,
               witnesses: bool = False) -> CohomologyReport:
    """H^n = ker d_n / im d_{n-1}; orders by Smith forms, invariants when nontrivial."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    Cn, Cn1 = K.group(n), K.group(n + 1)
    Dn = K.d(n)
    Sn = _restricted(K, n, stable, regular)
    if Sn is None:
        z_order = Cn.order // image_order(Dn, Cn, Cn1)
    else:
        free = FinAb(tuple([max(Cn.exponent, 1)] * Sn.shape[1]))
        z_order = _span_order(Sn, Cn) // image_order(Dn @ Sn, free, Cn1) if Sn.shape[1] else 1
    if n == 0:
        b_order = 1
        Bgen = np.zeros((Cn.rank, 0), dtype=np.int64)
    else:
        Dm = K.d(n - 1)
        Sm = _restricted(K, n - 1, stable, regular)
        Bgen = Dm if Sm is None else Dm @ Sm
        Bgen = Bgen % np.array(Cn.moduli, dtype=np.int64)[:, None] if Cn.rank else Bgen
        b_order = _span_order(Bgen, Cn)
    if z_order % b_order:
        raise ArithmeticError("coboundaries are not contained in cocycles")
    order = z_order // b_order
    inv: tuple[int, ...] = ()
    wit = []
    if order > 1:
        if Sn is None:
            _, Z = solve(Dn, np.zeros(Cn1.rank, dtype=np.int64), Cn, Cn1)
        else:
            free = FinAb(tuple([Cn.exponent] * Sn.shape[1]))
            _, Zs = solve(Dn @ Sn, np.zeros(Cn1.rank, dtype=np.int64), free, Cn1)
            Z = Sn @ Zs
        sq = subquotient(Z, Bgen, Cn, want_witnesses=witnesses)
        inv = sq.invariants
        wit = sq.witnesses
        if sq.order != order:
            raise ArithmeticError("Smith-form orders disagree with the subquotient")
    return CohomologyReport(n, stable, order, inv, z_order, b_order, wit)


def solve_coboundary(K: CochainComplex, z, n: int, stable: bool = False, regular: bool = False):
    """c with d_{n-1} c = z, or None when the class of z is nonzero."""
    Cn = K.group(n)
    z = Cn.reduce(z)
    if K.differential(z, n).any():
        raise NotACocycle(f"d_{n} z is nonzero")
    if n == 0:
        return None if z.any() else np.zeros(0, dtype=np.int64)
    Cm = K.group(n - 1)
    Dm = K.d(n - 1)
    Sm = _restricted(K, n - 1, stable, regular)
    if Sm is None:
        x, _ = solve(Dm, z, Cm, Cn)
        return x
    free = FinAb(tuple([max(Cm.exponent, 1)] * Sm.shape[1]))
    x, _ = solve(Dm @ Sm, z, free, Cn)
    return None if x is None else Cm.reduce(Sm @ x)


# ---------------------------------------------------------------- the T-set count

def _minimal_divisors(F: FusionSystem, X: set, b: Ext) -> list[Ext]:
    """theta: V -> Q' with |Q'| = p |V| and b = b' o theta for some b'."""
    V = b.source
    out = []
    for Qp in X:
        if Qp.order != F.p * V.order:
            continue
        for th in F.ext(Qp, V):
            if any(ext_compose(bp, th) == b for bp in F.ext(b.target, Qp)):
                out.append(th)
    return out


def _divides(F: FusionSystem, th: Ext, b: Ext) -> bool:
    return any(ext_compose(bp, th) == b for bp in F.ext(b.target, th.target))


def _chain_composite(C: FiniteCategory, q: Chain) -> Ext:
    m = C.identities[q.objects[0]]
    for k in q.morphisms:
        m = C.compose(k, m)
    return C.labels[m]


def iota_divisibility_set(F: FusionSystem, V: Subgroup) -> list[Ext]:
    """F~(P,V)_iota: union over T > V of the divisibility sets of iota_V^T."""
    out = set()
    for T in F.subgroups:
        if T.order > V.order and V.le(T):
            a = ext_class(Hom(V, T, V.elems))
            out.update(divisibility_set(F, F.P, V, a))
    return sorted(out)


@dataclass
class TSetCount:
    direct: int
    formula: int
    p: int

    @property
    def agree(self) -> bool:
        return self.direct == self.formula

    @property
    def prime_to_p(self) -> bool:
        return self.direct % self.p != 0


def count_T_set(F: FusionSystem, X: Iterable[Subgroup], C: FiniteCategory, q: Chain) -> TSetCount:
    """|T_q| by enumerating triples and by the complement count; q(0) must be minimal in X."""
    X = set(X)
    P = F.P
    q0 = C.objects[q.objects[0]]
    qn = C.objects[q.objects[-1]]
    if any(Q.order < q0.order and F.hom(q0, Q) for Q in X):
        raise ValueError("the first object of the chain is not minimal in X")
    chi = _chain_composite(C, q)
    iota_P = {}

    def iota(V):
        if V not in iota_P:
            iota_P[V] = ext_class(Hom(V, P, V.elems))
        return iota_P[V]

    alphas = F.ext(P, qn)
    # direct: triples (alpha, V, gamma) over the normal-form terms of q(0)
    direct = 0
    terms = normal_form_terms(F, X, q0)
    for alpha in alphas:
        ac = ext_compose(alpha, chi)
        for t in terms:
            g = t.beta.rep                       # q0' -> P with q0' = q0 by minimality
            V = g.image
            gamma = ext_class(g.inverse().corestrict(q0)) if t.Q == q0 else None
            if gamma is None:
                raise ValueError("normal-form term of a minimal object is not an isomorphism")
            b = ext_compose(ac, gamma)
            if all(_divides(F, th, iota(V)) for th in _minimal_divisors(F, X, b)):
                direct += 1
    # formula: complement of the bad pairs inside F~(P,q(n)) x F~(P,q(0))
    n0 = len(F.ext(P, q0))
    formula = 0
    for alpha in alphas:
        W = alpha.rep.compose(chi.rep).image
        formula += n0 - len(iota_divisibility_set(F, W))
    return TSetCount(direct, formula, F.p)


def admissible_chains(F: FusionSystem, X: Iterable[Subgroup], C: FiniteCategory, n: int, budget: int = DEFAULT_CHAIN_BUDGET) -> list[Chain]:
    """Chains of degree n whose first object is minimal in X."""
    X = list(X)
    mins = {i for i, Q in enumerate(C.objects)
            if not any(R.order < Q.order and F.hom(Q, R) for R in X)}
    return [q for q in enumerate_chains(C, n, budget) if q.objects[0] in mins]
