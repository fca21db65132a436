"""Frobenius P-categories stored extensionally.

A fusion system keeps, for every subgroup R of P, the list of its morphisms
into P.  ``F(Q, R)`` is the sublist landing in Q.  Exterior classes are
orbits under post-composition with inner automorphisms of the target and
are named by their least representative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable

import numpy as np

from .abelian import AbelianCoordinates, FinAb, direct_sum
from .groups import (
    Hom,
    PermGroup,
    Subgroup,
    all_subgroups,
    as_subgroup,
    centralizer,
    conjugation_hom,
    identity_hom,
    normalizer,
    sylow,
    transporter,
)


class NotFullyCentralized(ValueError):
    pass


class XNotSelfcentralizing(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Ext:
    """An exterior class R -> Q, named by its least representative."""

    rep: Hom

    @property
    def source(self) -> Subgroup:
        return self.rep.source

    @property
    def target(self) -> Subgroup:
        return self.rep.target

    @cached_property
    def key(self):
        return self.rep.key

    def __eq__(self, other):
        return isinstance(other, Ext) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        return f"Ext({self.rep.images}: {len(self.source)}->{len(self.target)})"


def ext_class(phi: Hom) -> Ext:
    """Least representative among t-conjugates of phi, t in the target."""
    Q = phi.target
    ct = Q.group.conj_table
    imgs = np.array(phi.images)
    best = min(tuple(int(x) for x in ct[t, imgs]) for t in Q.elems)
    return Ext(Hom(phi.source, Q, best))


def ext_compose(a: Ext, b: Ext) -> Ext:
    return ext_class(a.rep.compose(b.rep))


class FusionSystem:
    def __init__(self, P: Subgroup, p: int, homs: dict[Subgroup, Iterable[Hom]], realized_by: PermGroup | None = None):
        self.P = P
        self.p = p
        self.realized_by = realized_by
        self.subgroups = all_subgroups(P)
        self.homs: dict[Subgroup, list[Hom]] = {}
        for R in self.subgroups:
            hs = sorted({h if h.target == P else Hom(h.source, P, h.images) for h in homs.get(R, ())})
            self.homs[R] = hs
        self._homset_cache: dict = {}

    def __repr__(self):
        return f"FusionSystem(|P|={self.P.order}, p={self.p})"

    @property
    def group(self) -> PermGroup:
        return self.P.group

    # ------------------------------------------------------------ morphisms
    def hom(self, Q: Subgroup, R: Subgroup) -> list[Hom]:
        """F(Q, R): morphisms R -> Q."""
        key = (Q, R)
        if key not in self._homset_cache:
            qs = Q.set
            self._homset_cache[key] = [Hom(R, Q, h.images) for h in self.homs[R] if set(h.images) <= qs]
        return self._homset_cache[key]

    def aut(self, Q: Subgroup) -> list[Hom]:
        return self.hom(Q, Q)

    def without(self, phi: Hom) -> "FusionSystem":
        """A copy with one morphism into P removed (for negative fixtures)."""
        homs = {R: [h for h in hs if not (R == phi.source and h.images == phi.images)] for R, hs in self.homs.items()}
        return FusionSystem(self.P, self.p, homs, self.realized_by)

    def conj_in(self, T: Subgroup, R: Subgroup) -> list[Hom]:
        """Morphisms R -> T induced by elements of T."""
        return sorted({conjugation_hom(t, R, T) for t in transporter(T, R, T)})

    def F_Q(self, Q: Subgroup, R: Subgroup) -> list[Hom]:
        """F_Q(R): automorphisms of R induced by N_Q(R)."""
        return sorted({conjugation_hom(u, R, R) for u in normalizer(Q, R).elems})

    # ------------------------------------------------------------ classes of objects
    @cached_property
    def classes(self) -> list[list[Subgroup]]:
        """F-isomorphism classes of subgroups, each sorted; classes sorted by their first member."""
        seen = set()
        out = []
        for R in self.subgroups:
            if R in seen:
                continue
            cls = sorted({h.image for h in self.homs[R]})
            seen.update(cls)
            out.append(cls)
        return out

    def class_of(self, Q: Subgroup) -> list[Subgroup]:
        for c in self.classes:
            if Q in c:
                return c
        raise KeyError(Q)

    def is_fully_normalized(self, Q: Subgroup) -> bool:
        return normalizer(self.P, Q).order == max(normalizer(self.P, R).order for R in self.class_of(Q))

    def is_fully_centralized(self, Q: Subgroup) -> bool:
        return centralizer(self.P, Q).order == max(centralizer(self.P, R).order for R in self.class_of(Q))

    def is_selfcentralizing(self, Q: Subgroup) -> bool:
        return is_selfcentralizing(self, Q)

    @cached_property
    def sc(self) -> list[Subgroup]:
        return [Q for Q in self.subgroups if is_selfcentralizing(self, Q)]

    # ------------------------------------------------------------ exterior quotient
    def ext(self, Q: Subgroup, R: Subgroup) -> list[Ext]:
        """The exterior homset of classes R -> Q, sorted."""
        key = ("ext", Q, R)
        if key not in self._homset_cache:
            self._homset_cache[key] = sorted({ext_class(h) for h in self.hom(Q, R)})
        return self._homset_cache[key]

    def ext_members(self, a: Ext) -> list[Hom]:
        Q = a.target
        return sorted({Hom(a.source, Q, tuple(int(Q.group.conj_table[t, x]) for x in a.rep.images)) for t in Q.elems})

    def ext_is_iso(self, a: Ext) -> bool:
        return a.source.order == a.target.order

    def inclusion(self, R: Subgroup, Q: Subgroup) -> Ext:
        return ext_class(identity_hom(R, Q))


# ---------------------------------------------------------------- construction

def fusion_from_group(G, p: int, P: Subgroup | None = None) -> FusionSystem:
    """F_G on a Sylow p-subgroup: every morphism is conjugation by some g in G."""
    Gs = as_subgroup(G)
    grp = Gs.group
    P = P or sylow(Gs, p)
    subs = all_subgroups(P)
    ct = grp.conj_table
    pset = P.set
    homs: dict[Subgroup, set] = {R: set() for R in subs}
    for R in subs:
        el = np.array(R.elems)
        seen = set()
        for g in Gs.elems:
            imgs = tuple(int(x) for x in ct[g, el])
            if imgs in seen:
                continue
            seen.add(imgs)
            if set(imgs) <= pset:
                homs[R].add(Hom(R, P, imgs))
    return FusionSystem(P, p, homs, realized_by=grp)


def transporter_fusion(P: Subgroup, p: int) -> FusionSystem:
    """F_P: only conjugations by elements of P."""
    return fusion_from_group(P, p, P)


# ---------------------------------------------------------------- axioms

@dataclass
class AxiomReport:
    checks: dict[str, bool] = field(default_factory=dict)
    witnesses: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def fail(self, name: str, **data):
        self.checks[name] = False
        if sum(1 for w in self.witnesses if w["check"] == name) < 5:
            self.witnesses.append({"check": name, **data})


def _hom_data(h: Hom) -> dict:
    return {"source": list(h.source.elems), "images": list(h.images)}


def check_frobenius_axioms(F: FusionSystem) -> AxiomReport:
    """Sweep every quantifier of the three Frobenius conditions at desk scale."""
    rep = AxiomReport()
    P = F.P
    grp = F.group
    homsets = {R: set(h.images for h in F.homs[R]) for R in F.subgroups}
    by_elems = {R.elems: R for R in F.subgroups}

    # F contains F_P
    rep.checks["contains_F_P"] = True
    for R in F.subgroups:
        for u in P.elems:
            imgs = tuple(int(grp.conj_table[u, r]) for r in R.elems)
            if imgs not in homsets[R]:
                rep.fail("contains_F_P", subgroup=list(R.elems), element=u)
                break

    # morphisms are injective homomorphisms
    rep.checks["injective_homs"] = True
    for R in F.subgroups:
        for h in F.homs[R]:
            if not (h.is_injective() and h.is_homomorphism()):
                rep.fail("injective_homs", hom=_hom_data(h))

    # closure under composition (restrictions included, via inclusions)
    rep.checks["composition_closed"] = True
    for R in F.subgroups:
        for h in F.homs[R]:
            S = by_elems[tuple(sorted(h.images))]
            for k in F.homs[S]:
                c = k.compose(Hom(R, S, h.images))
                if c.images not in homsets[R]:
                    rep.fail("composition_closed", first=_hom_data(h), second=_hom_data(k))

    # the inclusion of F_Q into iGr_Q is full; it suffices to test Q = P
    rep.checks["inclusion_full"] = True
    for R in F.subgroups:
        for T in F.subgroups:
            if T.order < R.order:
                continue
            for psi in F.homs[T]:
                inv = {y: x for x, y in zip(T.elems, psi.images)}
                ims = psi.image.set
                for phi in F.homs[R]:
                    if not set(phi.images) <= ims:
                        continue
                    eta = tuple(inv[y] for y in phi.images)
                    if eta not in homsets[R]:
                        rep.fail("inclusion_full", phi=_hom_data(phi), psi=_hom_data(psi), missing=list(eta))

    # F_P(P) is Sylow in F(P)
    autP = len(F.homs[P])
    inn = len({tuple(int(grp.conj_table[u, x]) for x in P.elems) for u in P.elems})
    q = autP // inn if autP % inn == 0 else 0
    ok = autP % inn == 0 and q % F.p != 0
    rep.checks["sylow_automorphisms"] = ok
    if not ok:
        rep.fail("sylow_automorphisms", aut_order=autP, inner_order=inn)

    # extension condition
    rep.checks["extension"] = True
    for Q in F.subgroups:
        if not _centralizer_condition(F, Q):
            continue
        NQ = normalizer(P, Q)
        FPQ = {tuple(int(grp.conj_table[u, x]) for x in Q.elems) for u in NQ.elems}
        for phi in F.homs[Q]:
            phiQ = phi.image
            N = normalizer(P, phiQ)
            inv = {y: x for x, y in zip(Q.elems, phi.images)}
            for R in F.subgroups:
                if not (phiQ.le(R) and R.le(N)):
                    continue
                # F_P(Q) must contain phi^-1 c_r phi for r in R
                good = True
                for r in R.generators:
                    act = tuple(inv[int(grp.conj_table[r, y])] for y in phi.images)
                    if act not in FPQ:
                        good = False
                        break
                if not good:
                    continue
                want = dict(zip(phi.images, Q.elems))
                found = False
                for zeta in F.homs[R]:
                    t = zeta.table
                    if all(t[y] == want[y] for y in phi.images):
                        found = True
                        break
                if not found:
                    rep.fail("extension", Q=list(Q.elems), phi=_hom_data(phi), R=list(R.elems))
    return rep


def _centralizer_condition(F: FusionSystem, Q: Subgroup) -> bool:
    """xi(C_P(Q)) = C_P(xi(Q)) for every F-morphism xi from Q.C_P(Q)."""
    C = centralizer(F.P, Q)
    QC = Q.join(C)
    for xi in F.homs[QC]:
        if xi.image_of(C) != centralizer(F.P, xi.image_of(Q)):
            return False
    return True


def is_fully_K_normalized(F: FusionSystem, Q: Subgroup, K: Iterable[Hom]) -> bool:
    """xi(N_P^K(Q)) = N_P^{xi K}(xi(Q)) for all xi defined on Q.N_P^K(Q)."""
    grp = F.group
    Kset = {k.images for k in K}
    NK = _n_k(F.P, Q, Kset)
    QN = Q.join(NK)
    for xi in F.homs[QN]:
        xQ = xi.image_of(Q)
        t = xi.table
        inv = {y: x for x, y in t.items()}
        # xi K xi^-1 as automorphisms of xi(Q), stored as image tuples on xQ.elems
        xK = {tuple(t[k[Q.elems.index(inv[y])]] for y in xQ.elems) for k in Kset}
        if xi.image_of(NK) != _n_k(F.P, xQ, xK):
            return False
    return True


def _n_k(P: Subgroup, Q: Subgroup, Kset: set) -> Subgroup:
    grp = P.group
    N = normalizer(P, Q)
    keep = [u for u in N.elems if tuple(int(grp.conj_table[u, x]) for x in Q.elems) in Kset]
    return Subgroup(P.group, tuple(keep))


def is_fully_centralized(F: FusionSystem, Q: Subgroup) -> bool:
    return is_fully_K_normalized(F, Q, [identity_hom(Q)])


def is_selfcentralizing(F: FusionSystem, Q: Subgroup) -> bool:
    for phi in F.homs[Q]:
        im = phi.image
        if not centralizer(F.P, im).le(im):
            return False
    return True


# ---------------------------------------------------------------- hyperfocal subgroups

def _p_prime_order(auts: list[Hom], p: int) -> list[Hom]:
    out = []
    for a in auts:
        k, b = 1, a
        ident = a.source.elems
        while b.images != ident:
            b = a.compose(b)
            k += 1
        if k % p:
            out.append(a)
    return out


def hyperfocal(F: FusionSystem, Q: Subgroup | None = None) -> Subgroup:
    """H_F, or with Q given the hyperfocal subgroup of C_F(Q) inside C_P(Q)."""
    grp = F.group
    gens = []
    if Q is None:
        for R in F.subgroups:
            for s in _p_prime_order(F.aut(R), F.p):
                t = s.table
                gens.extend(int(grp.mul[grp.inv[u], t[u]]) for u in R.elems)
        return grp.generate(gens)
    if not is_fully_centralized(F, Q):
        raise NotFullyCentralized("hyperfocal subgroup of C_F(Q) needs Q fully centralized")
    C = centralizer(F.P, Q)
    for T in all_subgroups(C):
        QT = Q.join(T)
        auts = []
        for psi in F.aut(QT):
            t = psi.table
            if all(t[x] == x for x in Q.elems) and psi.image_of(T) == T:
                auts.append(psi.restrict(T).corestrict(T))
        for s in _p_prime_order(sorted(set(auts)), F.p):
            t = s.table
            gens.extend(int(grp.mul[grp.inv[u], t[u]]) for u in T.elems)
    return grp.generate(gens)


# ---------------------------------------------------------------- divisibility

def _aut_transport(alpha: Hom, S: Iterable[Hom]) -> set[tuple[int, ...]]:
    """alpha^* S alpha as automorphisms of the source of alpha (image tuples)."""
    Q = alpha.source
    inv = {y: x for x, y in zip(Q.elems, alpha.images)}
    out = set()
    for s in S:
        t = s.table
        out.add(tuple(inv[t[y]] for y in alpha.images))
    return out


def divides_criterion(F: FusionSystem, a: Ext, b: Ext) -> bool:
    """Test b in F~(T,Q)_a by the intersection criterion on automorphism groups."""
    alpha, beta = a.rep, b.rep
    Q = alpha.source
    A = _aut_transport(alpha, F.F_Q(alpha.target, alpha.image))
    B = _aut_transport(beta, F.F_Q(beta.target, beta.image))
    inner = {h.images for h in F.F_Q(Q, Q)}
    return (A & B) == inner


def divisibility_set(F: FusionSystem, T: Subgroup, Q: Subgroup, a: Ext) -> list[Ext]:
    """F~(T,Q)_a through the intersection criterion; Q must be selfcentralizing."""
    if not is_selfcentralizing(F, a.source):
        raise XNotSelfcentralizing(f"subgroup of order {a.source.order} is not selfcentralizing")
    return [b for b in F.ext(T, Q) if divides_criterion(F, a, b)]


def dividing_morphisms(F: FusionSystem, a: Ext) -> list[tuple[Ext, Ext]]:
    """All pairs (theta, a') with theta: Q -> Q' a non-isomorphism and a' o theta = a."""
    Q, R = a.source, a.target
    out = []
    for Qp in F.subgroups:
        if Qp.order <= Q.order:
            continue
        for th in F.ext(Qp, Q):
            for ap in F.ext(R, Qp):
                if ext_compose(ap, th) == a:
                    out.append((th, ap))
    return out


def divisibility_set_subtraction(F: FusionSystem, T: Subgroup, Q: Subgroup, a: Ext) -> list[Ext]:
    """F~(T,Q)_a by removing everything that factors through a proper divisor."""
    removed = set()
    for th, _ in dividing_morphisms(F, a):
        for g in F.ext(T, th.target):
            removed.add(ext_compose(g, th))
    return [b for b in F.ext(T, Q) if b not in removed]


def ext_isomorphic_from(F: FusionSystem, t1: Ext, t2: Ext) -> bool:
    """Whether t2 = eta o t1 for some exterior isomorphism eta."""
    if t1.target.order != t2.target.order:
        return False
    return any(ext_compose(eta, t1) == t2 for eta in F.ext(t2.target, t1.target))


def divisibility_partition(F: FusionSystem, T: Subgroup, a: Ext):
    """Decompose F~(T,Q) along divisors of a.

    Returns a list of (theta, a / theta, block) where block is
    F~(T,Q')_{a/theta} o theta, one entry per isomorphism class of divisor
    (the identity class included).
    """
    Q = a.source
    divs = [(ext_class(identity_hom(Q)), a)] + dividing_morphisms(F, a)
    reps: list[tuple[Ext, Ext]] = []
    for th, ap in divs:
        if not any(ext_isomorphic_from(F, r[0], th) for r in reps):
            reps.append((th, ap))
    out = []
    for th, ap in reps:
        block = [ext_compose(g, th) for g in divisibility_set(F, T, th.target, ap)]
        out.append((th, ap, block))
    return out


# ---------------------------------------------------------------- exterior intersections

@dataclass(frozen=True)
class Term:
    """One summand (a, Q, b) of an exterior intersection R cap T."""

    alpha: Ext
    beta: Ext

    @property
    def Q(self) -> Subgroup:
        return self.alpha.source


def _check_X(F: FusionSystem, X: Iterable[Subgroup]) -> list[Subgroup]:
    X = sorted(set(X))
    if not X:
        raise ValueError("object set must be nonempty")
    for Q in X:
        if not is_selfcentralizing(F, Q):
            raise XNotSelfcentralizing(f"subgroup of order {Q.order} is not selfcentralizing")
    return X


def strict_triples(F: FusionSystem, X, R: Subgroup, T: Subgroup) -> list[Term]:
    X = _check_X(F, X)
    out = []
    for Q in X:
        for a in F.ext(R, Q):
            for b in F.ext(T, Q):
                if divides_criterion(F, a, b):
                    out.append(Term(a, b))
    return out


def triple_classes(F: FusionSystem, X, R: Subgroup, T: Subgroup) -> list[list[Term]]:
    """Equivalence classes of strict triples under exterior isomorphisms of the middle term."""
    triples = strict_triples(F, X, R, T)
    index = {t: i for i, t in enumerate(triples)}
    parent = list(range(len(triples)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in triples:
        Q = t.Q
        for Qp in F.class_of(Q):
            for th in F.ext(Qp, Q):
                # t' o th = t  means  t' = t o th^-1
                thi = ext_class(th.rep.inverse().corestrict(Q))
                tp = Term(ext_compose(t.alpha, thi), ext_compose(t.beta, thi))
                j = index.get(tp)
                if j is not None:
                    parent[find(j)] = find(index[t])
    groups: dict[int, list[Term]] = {}
    for i, t in enumerate(triples):
        groups.setdefault(find(i), []).append(t)
    return sorted((sorted(g, key=lambda t: (t.alpha, t.beta)) for g in groups.values()),
                  key=lambda g: (g[0].alpha, g[0].beta))


def exterior_intersection(F: FusionSystem, X, R: Subgroup, T: Subgroup) -> list[Term]:
    """R cap T: one strict triple per equivalence class (least member)."""
    return [g[0] for g in triple_classes(F, X, R, T)]


def normal_form_terms(F: FusionSystem, X, R: Subgroup) -> list[Term]:
    """Normal form of R cap P.

    Q runs over R-conjugacy class representatives of members of X inside R
    and gamma over F_R(Q)-orbit representatives in F~(P,Q)_{inclusion}.
    """
    X = _check_X(F, X)
    grp = F.group
    out = []
    seen = set()
    for Q in X:
        if not Q.le(R) or Q in seen:
            continue
        seen.update(Q.conjugate(r) for r in R.elems)
        iota = F.inclusion(Q, R)
        gams = divisibility_set(F, F.P, Q, iota)
        FRQ = F.F_Q(R, Q)
        done = set()
        for g in gams:
            if g in done:
                continue
            orbit = {ext_class(g.rep.compose(s)) for s in FRQ}
            done.update(orbit)
            out.append(Term(iota, min(orbit)))
    return out


# ---------------------------------------------------------------- centres as abelian groups

class CenterCoords:
    """Coordinates on Z(T) for a subgroup T of P."""

    def __init__(self, T: Subgroup):
        grp = T.group
        self.T = T
        self.Z = T.center
        self.coords = AbelianCoordinates(self.Z.elems, lambda a, b: int(grp.mul[a, b]), 0)
        self.group: FinAb = self.coords.group

    def vec(self, z: int) -> np.ndarray:
        return self.coords.to_coords(int(z))

    def elem(self, v) -> int:
        return int(self.coords.to_element(v))

    def hom_matrix(self, f, other: "CenterCoords") -> np.ndarray:
        return self.coords.hom_matrix(lambda z: int(f(z)), other.coords)


_CENTER_CACHE: dict = {}


def center_coords(T: Subgroup) -> CenterCoords:
    key = (id(T.group), T.elems)
    if key not in _CENTER_CACHE:
        _CENTER_CACHE[key] = CenterCoords(T)
    return _CENTER_CACHE[key]


@dataclass
class KerPiValue:
    """Z(Q cap P) as a direct sum of centres over normal-form terms."""

    Q: Subgroup
    terms: list[Term]
    group: FinAb
    offsets: list[int]

    def block(self, i: int) -> slice:
        return slice(self.offsets[i], self.offsets[i] + center_coords(self.terms[i].Q).group.rank)


def ker_pi_value(F: FusionSystem, X, Q: Subgroup) -> KerPiValue:
    terms = normal_form_terms(F, X, Q)
    grp, offs = direct_sum([center_coords(t.Q).group for t in terms])
    return KerPiValue(Q, terms, grp, offs)


def ker_pi_order_bruteforce(F: FusionSystem, X, Q: Subgroup) -> int:
    """|(prod_T prod_gamma Z(T))^Q| by explicit orbits and stabilisers.

    T runs over all members of X inside Q (not up to conjugacy) and gamma
    over all of F~(P,T)_{inclusion}.  Does not assume the action is free.
    """
    X = _check_X(F, X)
    grp = F.group
    ct = grp.conj_table
    comps = []
    for T in X:
        if not T.le(Q):
            continue
        iota = F.inclusion(T, Q)
        for g in divisibility_set_subtraction(F, F.P, T, iota):
            comps.append((T, g))
    index = {c: i for i, c in enumerate(comps)}
    done = set()
    total = 1
    for c in comps:
        if c in done:
            continue
        T, g = c
        stab = []
        for u in Q.elems:
            Tu = T.conjugate(u)
            # u sends the (T, g) factor to (uTu^-1, g o c_u^-1)
            cu_inv = conjugation_hom(int(grp.inv[u]), Tu, T)
            img = (Tu, ext_class(g.rep.compose(cu_inv)))
            done.add(img)
            if img == c:
                stab.append(u)
        Z = T.center
        fixed = [z for z in Z.elems if all(int(ct[u, z]) == z for u in stab)]
        total *= len(fixed)
    return total
