"""P x P-sets with a free right P-action.

A biset is a multiset of orbit types (P x P)/D where D = {(phi(t), t) : t in T}
for a subgroup T of P and an injective phi: T -> P.  Everything is kept
symbolic; ``materialize`` builds an explicit point set when the locality
code needs actual permutations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .fusion import (
    Ext,
    FusionSystem,
    XNotSelfcentralizing,
    divisibility_set,
    ext_class,
    is_selfcentralizing,
)
from .groups import Hom, Subgroup, all_injective_homs, all_subgroups, centralizer, conjugation_hom, normalizer


@dataclass(frozen=True, eq=False)
class OrbitType:
    """The orbit (P x P)/{(phi(t), t)}; ``T`` sits in the right-hand factor."""

    T: Subgroup
    phi: Hom

    @cached_property
    def key(self) -> tuple:
        """Canonical label of the P x P-conjugacy class of the stabilizer."""
        P = self.phi.target
        best = None
        for b in P.elems:
            Tb = self.T.conjugate(b)
            inner = conjugation_hom(int(P.group.inv[b]), Tb, self.T)
            cand = (Tb.elems, ext_class(self.phi.compose(inner)).rep.images)
            if best is None or cand < best:
                best = cand
        return best

    def __eq__(self, other):
        return isinstance(other, OrbitType) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return (len(self.key[0]), self.key) < (len(other.key[0]), other.key)

    def __repr__(self):
        return f"OrbitType(|T|={self.T.order}, {self.phi.images})"

    @property
    def P(self) -> Subgroup:
        return self.phi.target

    def size(self) -> int:
        return self.P.order ** 2 // self.T.order

    def opposite(self) -> "OrbitType":
        inv = self.phi.inverse()
        return OrbitType(self.phi.image, Hom(inv.source, self.P, inv.images))

    def canonical(self) -> "OrbitType":
        T = Subgroup(self.T.group, self.key[0])
        return OrbitType(T, Hom(T, self.P, self.key[1]))


def twisted_fixed_points(orbit: OrbitType, R: Subgroup, psi: Hom) -> int:
    """Points of (P x P)/Delta_phi(T) fixed by {(psi(w), w) : w in R}.

    The coset (x, y) is fixed iff y^-1 R y <= T and x^-1 psi(w) x equals
    phi(y^-1 w y) for all w; for a fixed y the admissible x form one coset
    of C_P(psi(R)) or nothing.
    """
    P = orbit.P
    grp = P.group
    ct = grp.conj_table
    T, phi = orbit.T, orbit.phi
    tset = T.set
    gens = R.generators
    psi_t = psi.table
    phi_t = phi.table
    cent = centralizer(P, psi.image_of(R)).order
    total = 0
    for y in P.elems:
        yi = int(grp.inv[y])
        conj = [int(ct[yi, w]) for w in gens]
        if not all(c in tset for c in conj):
            continue
        want = [phi_t[c] for c in conj]
        for x in P.elems:
            xi = int(grp.inv[x])
            if all(int(ct[xi, psi_t[w]]) == v for w, v in zip(gens, want)):
                total += cent
                break
    return total // T.order


@dataclass
class Biset:
    P: Subgroup
    orbits: dict = field(default_factory=dict)  # OrbitType -> multiplicity

    def copy(self) -> "Biset":
        return Biset(self.P, dict(self.orbits))

    def add(self, t: OrbitType, k: int = 1) -> None:
        t = t.canonical()
        self.orbits[t] = self.orbits.get(t, 0) + k
        if self.orbits[t] == 0:
            del self.orbits[t]

    def remove(self, t: OrbitType, k: int = 1) -> None:
        self.add(t, -k)

    def items(self) -> list[tuple[OrbitType, int]]:
        return sorted(self.orbits.items(), key=lambda kv: kv[0])

    @property
    def total_size(self) -> int:
        return sum(k * t.size() for t, k in self.orbits.items())

    def mark(self, R: Subgroup, psi: Hom) -> int:
        return sum(k * twisted_fixed_points(t, R, psi) for t, k in self.orbits.items())

    def opposite(self) -> "Biset":
        out = Biset(self.P)
        for t, k in self.orbits.items():
            out.add(t.opposite(), k)
        return out

    def same_as(self, other: "Biset") -> bool:
        return {t.key: k for t, k in self.orbits.items()} == {t.key: k for t, k in other.orbits.items()}

    def to_json(self) -> list[dict]:
        return [
            {"T": list(t.T.elems), "psi": list(t.phi.images), "psi_prime": list(t.T.elems), "multiplicity": k}
            for t, k in self.items()
        ]

    def materialize(self) -> "PointSet":
        return PointSet(self)


def fixed_points(omega: Biset, Q: Subgroup, phi: Hom, phi2: Hom | None = None) -> int:
    """|Omega^{Delta_{phi,phi'}(Q)}| with phi' the inclusion when omitted."""
    P = omega.P
    if phi2 is None:
        phi2 = Hom(Q, P, Q.elems)
    # {(phi(u), phi'(u))} = {(phi phi'^-1 (w), w) : w in phi'(Q)}
    R = phi2.image
    inv = phi2.inverse()
    psi = Hom(R, P, tuple(phi(inv(w)) for w in R.elems))
    return omega.mark(R, psi)


# ---------------------------------------------------------------- natural basic set

def natural_basic_set(F: FusionSystem, X: Iterable[Subgroup]) -> Biset:
    """One orbit per P-class of Q in X and per F_P(Q)-orbit on F~(P,Q)_{inclusion}."""
    X = sorted(set(X))
    for Q in X:
        if not is_selfcentralizing(F, Q):
            raise XNotSelfcentralizing(f"subgroup of order {Q.order} is not selfcentralizing")
    P = F.P
    out = Biset(P)
    seen = set()
    for Q in X:
        if Q in seen:
            continue
        seen.update(Q.conjugate(u) for u in P.elems)
        iota = F.inclusion(Q, P)
        cands = divisibility_set(F, P, Q, iota)
        FPQ = F.F_Q(P, Q)
        done = set()
        for phi in cands:
            if phi in done:
                continue
            orbit = {ext_class(phi.rep.compose(s)) for s in FPQ}
            done |= orbit
            rep = min(orbit)
            out.add(OrbitType(Q, rep.rep))
    return out


def _type_classes(F: FusionSystem, S: Subgroup) -> list[OrbitType]:
    """All orbit types Delta_theta(S') for S' F-conjugate to S, theta in F(P, S'), up to conjugacy."""
    out = set()
    for Sp in F.class_of(S):
        for th in F.homs[Sp]:
            out.add(OrbitType(Sp, th).canonical())
    return sorted(out)


def orbit_weight(t: OrbitType) -> int:
    """|N_{PxP}(D)/D|, the number of points of the orbit fixed by its own stabilizer."""
    return twisted_fixed_points(t, t.T, t.phi)


def thicken(omega: Biset, F: FusionSystem, mode: str = "natural") -> Biset:
    """Extend to an F-basic set, adding only orbits of non-selfcentralizing type.

    Each F-class of non-selfcentralizing subgroups is handled from the largest
    order down.  For the orbit types D in the class the marks must become a
    common value N; adding one orbit of type D raises the mark of D by its
    weight and leaves the other types of the same order untouched, so N is
    the least value with N = mark(D) mod weight(D) and multiplicity at least
    two throughout.  ``mode="thick"`` first multiplies every existing
    multiplicity by p + 1, which keeps |Omega|/|P| prime to p.
    """
    out = omega.copy()
    if mode == "thick":
        for t in list(out.orbits):
            out.orbits[t] *= F.p + 1
    elif mode != "natural":
        raise ValueError(f"unknown thickening mode {mode!r}")
    classes = [c for c in F.classes if not is_selfcentralizing(F, c[0])]
    classes.sort(key=lambda c: -c[0].order)
    for cls in classes:
        types = _type_classes(F, cls[0])
        marks = [out.mark(t.T, t.phi) for t in types]
        weights = [orbit_weight(t) for t in types]
        lo = max(m + 2 * w for m, w in zip(marks, weights))
        step = 1
        for w in weights:
            step = step * w // _gcd(step, w)
        N = None
        for cand in range(lo, lo + step + 1):
            if all((cand - m) % w == 0 for m, w in zip(marks, weights)):
                N = cand
                break
        if N is None:
            raise ValueError("mark congruences are incompatible; input is not extendable")
        for t, m, w in zip(types, marks, weights):
            out.add(t, (N - m) // w)
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def natural_F_basic_set(F: FusionSystem) -> Biset:
    """A natural F-basic set: the selfcentralizing part plus thickening."""
    return thicken(natural_basic_set(F, F.sc), F, "natural")


# ---------------------------------------------------------------- verification

@dataclass
class BasicReport:
    checks: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def fail(self, name, **kw):
        self.checks[name] = False
        if sum(1 for w in self.witnesses if w["check"] == name) < 5:
            self.witnesses.append({"check": name, **kw})


def restriction_marks(omega: Biset, R: Subgroup, phi: Hom) -> dict:
    """Marks of Res_{phi x id}(Omega) on all subgroups {(s, beta(s))} of R x P.

    Only injective beta matter: other subgroups meet {1} x P or P x {1}
    nontrivially and fix nothing.
    """
    P = omega.P
    out = {}
    for S in all_subgroups(R):
        phiS = phi.restrict(S)
        for beta in all_injective_homs(S, P):
            # {(phi(s), beta(s))} = {(phi beta^-1 (w), w) : w in beta(S)}
            B = beta.image
            binv = beta.inverse()
            psi = Hom(B, P, tuple(phiS(binv(w)) for w in B.elems))
            out[(S.elems, beta.images)] = omega.mark(B, psi)
    return out


def f_omega(omega: Biset, R: Subgroup) -> list[Hom]:
    """F^Omega(P, R): injective phi with Res_{phi x id} isomorphic to Res_{incl x id}."""
    P = omega.P
    base = restriction_marks(omega, R, Hom(R, P, R.elems))
    return [phi for phi in all_injective_homs(R, P) if restriction_marks(omega, R, phi) == base]


def verify_f_basic(omega: Biset, F: FusionSystem, X: Iterable[Subgroup] | None = None, check_fusion: bool = True) -> BasicReport:
    rep = BasicReport()
    P = F.P
    p = F.p
    X = list(F.subgroups if X is None else X)
    # (a) free right action: stabilisers {(phi(t), t)} meet {1} x P trivially by construction,
    # but check injectivity of phi which gives freeness on the left as well
    rep.checks["free_right_action"] = all(t.phi.is_injective() for t in omega.orbits)
    # (b) symmetric
    rep.checks["opposite_isomorphic"] = omega.opposite().same_as(omega)
    if not rep.checks["opposite_isomorphic"]:
        rep.fail("opposite_isomorphic")
    # (c)
    q = omega.total_size // P.order
    rep.data["orbits_mod_p"] = q % p
    rep.checks["size_prime_to_p"] = q % p != 0
    if q % p == 0:
        rep.fail("size_prime_to_p", size_over_P=q)
    # (d) stabilisers and fixed-point invariance
    rep.checks["stabilizers_in_F"] = True
    xkeys = {Q.elems for Q in X}
    for t, _ in omega.items():
        if t.T.elems not in xkeys or not any(h.images == t.phi.images for h in F.homs[t.T]):
            rep.fail("stabilizers_in_F", T=list(t.T.elems), psi=list(t.phi.images))
    rep.checks["fixed_points_invariant"] = True
    for Q in X:
        base = fixed_points(omega, Q, Hom(Q, P, Q.elems))
        for phi in F.homs[Q]:
            for phi2 in F.homs[Q]:
                v = fixed_points(omega, Q, phi, phi2)
                if v != base:
                    rep.fail("fixed_points_invariant", Q=list(Q.elems), phi=list(phi.images), phi2=list(phi2.images), got=v, want=base)
    # (e) F^Omega = F
    if check_fusion:
        rep.checks["fusion_matches"] = True
        for R in F.subgroups:
            got = {h.images for h in f_omega(omega, R)}
            want = {h.images for h in F.homs[R]}
            if got != want:
                rep.fail("fusion_matches", R=list(R.elems), extra=sorted(got - want)[:3], missing=sorted(want - got)[:3])
    return rep


# ---------------------------------------------------------------- materialisation

class PointSet:
    """Explicit points of a biset with the two one-sided actions as arrays.

    Points are numbered orbit by orbit; within an orbit by the least element
    of each coset.  ``left[a]`` and ``right[b]`` are the permutations induced
    by (a, 1) and (1, b), indexed by positions in ``P.elems``.
    """

    def __init__(self, omega: Biset):
        self.omega = omega
        P = omega.P
        self.P = P
        grp = P.group
        self.pidx = {x: i for i, x in enumerate(P.elems)}
        n = P.order
        pm = np.array([[self.pidx[int(grp.mul[a, b])] for b in P.elems] for a in P.elems], dtype=np.int64)
        self.pmul = pm
        self.pinv = np.array([self.pidx[int(grp.inv[a])] for a in P.elems], dtype=np.int64)
        points = []
        orbit_of = []
        self.orbit_list: list[tuple[OrbitType, int]] = []  # (type, copy number)
        self.orbit_points: list[np.ndarray] = []
        # a coset (x, y)D is identified with its label min over d of (x phi(t), y t)
        left_blocks = []
        right_blocks = []
        start = 0
        for t, k in omega.items():
            Tl = [self.pidx[x] for x in t.T.elems]
            Fl = [self.pidx[t.phi(x)] for x in t.T.elems]
            label = {}
            reps = []
            for x in range(n):
                for y in range(n):
                    if (x, y) in label:
                        continue
                    c = len(reps)
                    reps.append((x, y))
                    for a, b in zip(Fl, Tl):
                        label[(int(pm[x, a]), int(pm[y, b]))] = c
            m = len(reps)
            L = np.empty((n, m), dtype=np.int64)
            Rr = np.empty((n, m), dtype=np.int64)
            for a in range(n):
                for c, (x, y) in enumerate(reps):
                    L[a, c] = label[(int(pm[a, x]), y)]
                    Rr[a, c] = label[(x, int(pm[a, y]))]
            for copy in range(k):
                self.orbit_list.append((t, copy))
                self.orbit_points.append(np.arange(start, start + m))
                left_blocks.append(L + start)
                right_blocks.append(Rr + start)
                points.extend((len(self.orbit_list) - 1, r) for r in reps)
                orbit_of.extend([len(self.orbit_list) - 1] * m)
                start += m
        self.size = start
        self.points = points
        self.orbit_of = np.array(orbit_of, dtype=np.int64)
        self.left = np.hstack(left_blocks) if left_blocks else np.zeros((n, 0), dtype=np.int64)
        self.right = np.hstack(right_blocks) if right_blocks else np.zeros((n, 0), dtype=np.int64)

    def act(self, a: int, b: int) -> np.ndarray:
        """Permutation of (a, b), arguments given as elements of the ambient group."""
        return self.left[self.pidx[a]][self.right[self.pidx[b]]]

    def fixed_count(self, pairs: Iterable[tuple[int, int]]) -> int:
        mask = np.ones(self.size, dtype=bool)
        ar = np.arange(self.size)
        for a, b in pairs:
            mask &= self.act(a, b) == ar
        return int(mask.sum())

    def right_action_is_free(self) -> bool:
        ar = np.arange(self.size)
        for b in range(1, self.P.order):
            if (self.right[b] == ar).any():
                return False
        return True


def fixed_points_bruteforce(points: PointSet, Q: Subgroup, phi: Hom, phi2: Hom | None = None) -> int:
    P = points.P
    if phi2 is None:
        phi2 = Hom(Q, P, Q.elems)
    return points.fixed_count((phi(u), phi2(u)) for u in Q.generators)


# ---------------------------------------------------------------- restriction to Q x P

@dataclass
class OrbitClass:
    """One isomorphism class of Q x P-orbits in Res_{Q x P}(Omega)."""

    base: int                # a base point
    stabilizer: list         # list of (a, b) pairs, ambient elements
    members: list            # one point with stabilizer exactly equal, per orbit in the class
    normalizer: list         # N_{QxP}(stabilizer) as pairs
    T: Subgroup              # second projection of the stabilizer
    eta: Hom                 # T -> Q with stabilizer {(eta(t), t)}

    @property
    def multiplicity(self) -> int:
        return len(self.members)

    @property
    def aut_order(self) -> int:
        return len(self.normalizer) // len(self.stabilizer)


def restrict_orbits(points: PointSet, Q: Subgroup) -> list[OrbitClass]:
    """Decompose Res_{Q x P}(Omega) into classes of isomorphic orbits.

    Two orbits are isomorphic iff their stabilisers are Q x P-conjugate; for
    each orbit we pick a point whose stabiliser is the class base stabiliser,
    so the base isomorphisms are (a, b) o0 -> (a, b) oi.
    """
    P = points.P
    grp = P.group
    qx = [(a, b) for a in Q.elems for b in P.elems]
    gensQ = [(a, 0) for a in Q.generators] + [(0, b) for b in P.generators]
    n = points.size
    # orbits under Q x P
    orbit_id = -np.ones(n, dtype=np.int64)
    reps = []
    for s in range(n):
        if orbit_id[s] >= 0:
            continue
        oid = len(reps)
        reps.append(s)
        stack = [s]
        orbit_id[s] = oid
        while stack:
            x = stack.pop()
            for a, b in gensQ:
                y = int(points.act(a, b)[x])
                if orbit_id[y] < 0:
                    orbit_id[y] = oid
                    stack.append(y)
    perms = {g: points.act(*g) for g in qx}

    def stab(x):
        return tuple(g for g in qx if perms[g][x] == x)

    def conj_pair(g, h):  # g h g^-1 in Q x P
        return (int(grp.conj_table[g[0], h[0]]), int(grp.conj_table[g[1], h[1]]))

    classes: list[OrbitClass] = []
    for r in reps:
        S = stab(r)
        Sset = set(S)
        placed = False
        for c in classes:
            base = set(c.stabilizer)
            if len(base) != len(Sset):
                continue
            # find g with g S g^-1 = base; then point g.r has stabiliser base
            for g in qx:
                if all(conj_pair(g, h) in base for h in S):
                    c.members.append(int(perms[g][r]))
                    placed = True
                    break
            if placed:
                break
        if not placed:
            Tset = sorted({b for _, b in S})
            T = Subgroup(grp, tuple(Tset))
            eta = Hom(T, Q, tuple(dict((b, a) for a, b in S)[t] for t in T.elems))
            N = [g for g in qx if all(conj_pair(g, h) in Sset for h in S)]
            classes.append(OrbitClass(r, list(S), [r], N, T, eta))
    return classes
