"""Perfect localities, built one class of objects at a time.

Objects are added in order of decreasing size. At each step the new
locality is carved out of the natural locality over the enlarged object
set: morphisms between old objects must restrict into the previous perfect
locality, morphisms from new objects are unrestricted, and the result is
cut down to kernels Z(R) by a functorial section of the quotient by
tau(Z(R)). The section comes from an isomorphism-compatible choice of
liftings, corrected first by a 1-cochain (vanishing of the degree 2 class)
and then by a 0-cochain (agreement with tau on transporters).

The same step also produces the locality as a quotient: a section over
the old objects only, full homsets from the new ones, and the kernel at a
new object V cut down by the averaging map
    nabla_V(z) = |F~(P, V)|^-1 sum_theta z_theta.
Both constructions must give isomorphic localities; the sublocality form
is carried to the next step.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .abelian import FinAb, solve
from .cohomology import (CochainComplex, Chain, cohomology, exterior_category, kernel_functor, restrict_functor,
                         solve_coboundary, subcategory)
from .fusion import FusionSystem, XNotSelfcentralizing, center_coords, ext_class, hyperfocal
from .groups import Hom, Subgroup, centralizer, conjugation_hom, normalizer, o_upper_p, transporter
from .locality import (CheckReport, ExtLocality, OmegaModel, check_functor, compose_functors, compose_maps,
                       find_locality_isomorphism, group_locality, mkey, natural_iso_search, natural_locality,
                       quotient_map, restrict_objects)


class SectionUnsolvable(RuntimeError):
    """No functorial section exists for the chosen data; ``certificate`` says why."""

    def __init__(self, message: str, certificate: dict | None = None):
        super().__init__(message)
        self.certificate = certificate or {}


class NotRealized(ValueError):
    pass


class NotFullyNormalized(ValueError):
    pass


class NotInImage(ValueError):
    pass


# ---------------------------------------------------------------- small linear algebra helpers

class _Linear:
    """Unknown vectors in finite abelian groups and affine equations among them."""

    def __init__(self):
        self.blocks: dict = {}
        self.mods: list[int] = []
        self.eqs: list = []

    def unknown(self, key, K: FinAb) -> None:
        if key not in self.blocks:
            self.blocks[key] = (len(self.mods), K)
            self.mods.extend(K.moduli)

    def equation(self, K: FinAb, terms: list, rhs) -> None:
        if K.rank:
            self.eqs.append((K, terms, np.asarray(rhs, dtype=np.int64)))

    def solve(self) -> dict | None:
        n = len(self.mods)
        m = sum(K.rank for K, _, _ in self.eqs)
        A = np.zeros((m, n), dtype=np.int64)
        b = np.zeros(m, dtype=np.int64)
        tmods: list[int] = []
        r = 0
        for K, terms, rhs in self.eqs:
            for key, M in terms:
                off, Kk = self.blocks[key]
                A[r: r + K.rank, off: off + Kk.rank] += np.asarray(M, dtype=np.int64).reshape(K.rank, Kk.rank)
            b[r: r + K.rank] = rhs
            tmods.extend(K.moduli)
            r += K.rank
        if m:
            col = np.array(tmods, dtype=np.int64)
            A %= col[:, None]
            b %= col
        if not n:
            return {key: np.zeros(0, dtype=np.int64) for key in self.blocks} if not b.any() else None
        if not m:
            x = np.zeros(n, dtype=np.int64)
        else:
            x, _ = solve(A, b, FinAb(tuple(self.mods)), FinAb(tuple(tmods)))
            if x is None:
                return None
        return {key: x[off: off + K.rank] for key, (off, K) in self.blocks.items()}


class Embedded:
    """An injective homomorphism S -> K (columns of E) with coordinates on its image."""

    def __init__(self, S: FinAb, K: FinAb, E: np.ndarray):
        self.S, self.K = S, K
        self.E = np.asarray(E, dtype=np.int64).reshape(K.rank, S.rank)
        self._cache: dict = {}

    def embed(self, z) -> np.ndarray:
        return self.K.reduce(self.E @ np.asarray(z, dtype=np.int64))

    def coords(self, v) -> np.ndarray:
        v = self.K.reduce(v)
        key = v.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not self.S.rank:
            if v.any():
                raise NotInImage("nonzero value in a trivial subgroup")
            x = self.S.zero()
        else:
            x, _ = solve(self.E, v, self.S, self.K)
            if x is None:
                raise NotInImage(f"{v.tolist()} is outside the subgroup")
            x = self.S.reduce(x)
        self._cache[key] = x
        return x


def center_embedding(L: ExtLocality, R: Subgroup) -> Embedded:
    """tau restricted to Z(R) = C_P(R), as a map into the kernel at R."""
    cc = center_coords(R)
    cols = [L.tau_vec(R, cc.elem(e)) for e in cc.group.basis()]
    K = L.kernels[R]
    E = np.array(cols, dtype=np.int64).T.reshape(K.rank, cc.group.rank)
    return Embedded(cc.group, K, E)


def transport(L: ExtLocality, kernels: dict, lift: Callable, coord: dict, embed: dict, name: str) -> ExtLocality:
    """Locality whose morphism (phi, z) stands for (phi, lift(phi) + embed_R(z)) in L.

    ``coord[T]`` reads back kernel elements of L at T; it must be additive on
    the values that occur and raise NotInImage outside them.
    """
    def kappa(phi, psi):
        R, T = phi.source, psi.source
        v = L.kappa(phi, psi) + L.action(R, psi) @ lift(phi) + lift(psi) - lift(compose_maps(phi, psi))
        return coord[T](L.kernels[T].reduce(v))

    def action(R, psi):
        T = psi.source
        A = L.action(R, psi)
        cols = [coord[T](L.kernels[T].reduce(A @ embed[R](e))) for e in kernels[R].basis()]
        return np.array(cols, dtype=np.int64).T.reshape(kernels[T].rank, kernels[R].rank)

    def tau(R, u):
        return coord[R](L.kernels[R].reduce(L.tau_vec(R, u) - lift(L.conj(R, u))))

    out = ExtLocality(L.F, L.objects, kernels, kappa, action, tau, name=name)
    out.parent = L
    return out


def _inverse_map(phi: Hom, P: Subgroup) -> Hom:
    """phi: Q -> P injective; returns phi^-1 on phi(Q), as a map into P."""
    img = phi.image
    back = {y: x for x, y in zip(phi.source.elems, phi.images)}
    return Hom(img, P, tuple(back[y] for y in img.elems))


def _closure_generators(elems: list[Hom]) -> list[Hom]:
    """A generating set of a finite group of automorphisms (as maps into P)."""
    if not elems:
        return []
    target = {mkey(a) for a in elems}
    ident = [a for a in elems if a.images == a.source.elems][0]
    span = {mkey(ident): ident}
    gens: list[Hom] = []
    for a in elems:
        if mkey(a) in span:
            continue
        gens.append(a)
        frontier = list(span.values())
        while frontier:
            nxt = []
            for x in frontier:
                for g in gens:
                    y = compose_maps(x, g)
                    if mkey(y) not in span:
                        span[mkey(y)] = y
                        nxt.append(y)
            frontier = nxt
        if len(span) == len(target):
            break
    return gens


# ---------------------------------------------------------------- functorial sections

@dataclass
class SectionSolution:
    """A functorial section sigma(phi) = (phi, lifts[phi]) over the objects of L."""

    lifts: dict
    aut_sections: dict
    transversal: dict
    defect: np.ndarray
    ell: np.ndarray
    transporter_cocycle: np.ndarray
    z: dict
    stats: dict = field(default_factory=dict)


def aut_section(L: ExtLocality, Q: Subgroup) -> dict:
    """A homomorphic section of Aut_L(Q) -> Aut_F(Q) through tau on N_P(Q).

    Returned as mkey(alpha) -> kernel vector. Solved as one linear system:
    m_{alpha beta} = kappa(alpha, beta) + A_beta m_alpha + m_beta for beta in
    a generating set, and m_{c_u} = t(u).
    """
    K = L.kernels[Q]
    auts = L.maps(Q, Q)
    gens = _closure_generators(auts)
    sys = _Linear()
    for a in auts:
        sys.unknown(mkey(a), K)
    eye = np.eye(K.rank, dtype=np.int64)
    for a in auts:
        for b in gens:
            sys.equation(K, [(mkey(compose_maps(a, b)), eye), (mkey(a), -L.action(Q, b)), (mkey(b), -eye)],
                         L.kappa(a, b))
    for u in normalizer(L.P, Q).elems:
        sys.equation(K, [(mkey(L.conj(Q, u)), eye)], L.tau_vec(Q, u))
    sol = sys.solve()
    if sol is None:
        raise SectionUnsolvable("no homomorphic section of the automorphism group", {"object": list(Q.elems)})
    return {k: K.reduce(v) for k, v in sol.items()}


def functorial_section(L: ExtLocality, rng: random.Random | None = None, verify: bool = True) -> SectionSolution:
    """A functor F^X -> L splitting pi and extending tau.

    L must have abelian kernels killed by tau(Z(R)) (kernels of pi are then
    functors on the exterior quotient).
    """
    F, P = L.F, L.P
    objs = L.objects
    oset = set(objs)

    def mul(x, y):
        return L.compose(x, y)

    def inv(x):
        phi, k = x
        Q = phi.source
        phinv = _inverse_map(phi, P)
        l = -(L.kappa(phi, phinv) + L.action(Q, phinv) @ np.asarray(k, dtype=np.int64))
        return phinv, L.kernels[phi.image].reduce(l)

    # sections over automorphism groups
    mu = {Q: aut_section(L, Q) for Q in objs}

    def mu_x(a: Hom):
        return a, mu[a.source][mkey(a)]

    # a representative of every isomorphism class, and a lift of one isomorphism onto it
    reps: dict = {}
    classes: list[list[Subgroup]] = []
    for cls in F.classes:
        members = [Q for Q in cls if Q in oset]
        if members:
            classes.append(members)
    for members in classes:
        cands = [Q for Q in members if F.is_fully_normalized(Q)] or members
        hat = rng.choice(cands) if rng else cands[0]
        for Q in members:
            reps[Q] = hat
    omega: dict = {}
    for Q in objs:
        hat = reps[Q]
        KQ = L.kernels[Q]
        if Q == hat:
            omega[Q] = L.identity(Q)
            continue
        cands = [h for h in F.homs[Q] if h.image == hat]
        w = rng.choice(cands) if rng else cands[0]
        winv = _inverse_map(w, P)
        # (A_alpha - 1) k = kappa(w a w^-1, w) + A_w m^hat - kappa(w, a) - m_a
        sys = _Linear()
        sys.unknown("k", KQ)
        eye = np.eye(KQ.rank, dtype=np.int64)
        for a in _closure_generators(L.maps(Q, Q)):
            c = compose_maps(w, compose_maps(a, winv))
            rhs = L.kappa(c, w) + L.action(hat, w) @ mu[hat][mkey(c)] - L.kappa(w, a) - mu[Q][mkey(a)]
            sys.equation(KQ, [("k", L.action(Q, a) - eye)], rhs)
        sol = sys.solve()
        if sol is None:
            raise SectionUnsolvable("no lift of an isomorphism compatible with automorphisms", {"object": list(Q.elems)})
        omega[Q] = (w, KQ.reduce(sol["k"]))

    # orbit representatives of F(Q^) x F(R^) on F(Q^, R^), with stabilizer-compatible lifts
    hats = sorted(set(reps.values()))
    decomp: dict = {}
    xhat: dict = {}
    for Qh in hats:
        autQ = L.maps(Qh, Qh)
        for Rh in hats:
            autR = L.maps(Rh, Rh)
            maps = L.maps(Qh, Rh)
            if not maps:
                continue
            seen: set = set()
            order = list(maps)
            if rng:
                rng.shuffle(order)
            if Qh == Rh:
                # automorphisms lift through mu: the identity represents their orbit
                order.sort(key=lambda h: h.images != h.source.elems)
            KR = L.kernels[Rh]
            eye = np.eye(KR.rank, dtype=np.int64)
            for phi in order:
                if mkey(phi) in seen:
                    continue
                stab = []
                for a in autQ:
                    ap = compose_maps(a, phi)
                    for b in autR:
                        y = compose_maps(ap, _inverse_map(b, P))
                        key = (Qh.elems, mkey(y))
                        if mkey(y) not in seen:
                            seen.add(mkey(y))
                            decomp[key] = (a, phi, _inverse_map(b, P))
                        if y.images == phi.images:
                            stab.append((a, b))
                sys = _Linear()
                sys.unknown("k", KR)
                for a, b in stab:
                    rhs = L.kappa(phi, b) + mu[Rh][mkey(b)] - L.kappa(a, phi) - L.action(Qh, phi) @ mu[Qh][mkey(a)]
                    sys.equation(KR, [("k", eye - L.action(Rh, b))], rhs)
                sol = sys.solve()
                if sol is None:
                    raise SectionUnsolvable("no stabilizer-compatible lift", {"morphism": list(phi.images)})
                xhat[(Qh.elems, mkey(phi))] = (phi, KR.reduce(sol["k"]))

    # liftings of all morphisms: x_phi = x_Q^-1 mu(a) x_phihat mu(b) x_R
    x: dict = {}
    for Q in objs:
        Qh = reps[Q]
        xQinv = inv(omega[Q])
        for R in objs:
            Rh = reps[R]
            xR = omega[R]
            wRinv = _inverse_map(xR[0], P)
            for phi in L.maps(Q, R):
                y = compose_maps(omega[Q][0], compose_maps(phi, wRinv))
                a, ph, b = decomp[(Qh.elems, mkey(y))]
                b = Hom(b.source, P, b.images)
                g = mul(xQinv, mul(mu_x(a), mul(xhat[(Qh.elems, mkey(ph))], mul(mu_x(b), xR))))
                if g[0].images != phi.images:
                    raise AssertionError("transversal decomposition does not reproduce the morphism")
                x[(Q.elems, mkey(phi))] = g[1]

    # defect 2-cocycle on the exterior category and its primitive
    C = exterior_category(F, objs)
    Kf = kernel_functor(L, C)
    K = CochainComplex(Kf)
    vals = {}
    for q in K.chains(2):
        T, R, Q = (C.objects[i] for i in q.objects)
        psi = Hom(T, P, C.labels[q.morphisms[0]].rep.images)
        phi = Hom(R, P, C.labels[q.morphisms[1]].rep.images)
        v = L.kappa(phi, psi) + L.action(R, psi) @ x[(Q.elems, mkey(phi))] + x[(R.elems, mkey(psi))] \
            - x[(Q.elems, mkey(compose_maps(phi, psi)))]
        vals[q] = L.kernels[T].reduce(v)
    kvec = K.from_dict(vals, 2)
    if verify:
        _check_defect(L, C, x, vals)
    ell = solve_coboundary(K, kvec, 2)
    if ell is None:
        rep = cohomology(K, 2, witnesses=True)
        raise SectionUnsolvable("defect cocycle is not a coboundary", {"H2": rep.to_json()})
    ell_d = {}
    for q, v in K.as_dict(ell, 1).items():
        R, Q = (C.objects[i] for i in q.objects)
        ell_d[(Q.elems, C.labels[q.morphisms[0]].key)] = v
    b: dict = {}
    for Q in objs:
        for R in objs:
            for phi in L.maps(Q, R):
                e = ext_class(Hom(R, Q, phi.images))
                b[(Q.elems, mkey(phi))] = L.kernels[R].reduce(x[(Q.elems, mkey(phi))] - ell_d[(Q.elems, e.key)])

    # transporter correction: m = d_0 z on the transporter subcategory
    keep = set()
    for R in objs:
        for Q in objs:
            for u in transporter(P, R, Q):
                keep.add(C.index[ext_class(conjugation_hom(u, R, Q))])
    sub, kept = subcategory(C, keep, name="F~_P^X")
    Ks = CochainComplex(restrict_functor(Kf, sub, kept))
    mvals = {}
    for q in Ks.chains(1):
        R, Q = (sub.objects[i] for i in q.objects)
        e = sub.labels[q.morphisms[0]]
        found = None
        for u in transporter(P, R, Q):
            if ext_class(conjugation_hom(u, R, Q)) != e:
                continue
            zeta = L.conj(R, u)
            m = L.kernels[R].reduce(L.tau_vec(R, u) - b[(Q.elems, mkey(zeta))])
            if found is None:
                found = m
                if not verify:
                    break
            elif not np.array_equal(found, m):
                raise AssertionError("transporter defect depends on more than the exterior class")
        mvals[q] = found
    mvec = Ks.from_dict(mvals, 1)
    zvec = solve_coboundary(Ks, mvec, 1)
    if zvec is None:
        rep = cohomology(Ks, 1, witnesses=True)
        raise SectionUnsolvable("transporter defect is not a coboundary", {"H1": rep.to_json()})
    z = {sub.objects[q.objects[0]]: v for q, v in Ks.as_dict(zvec, 0).items()}
    lifts: dict = {}
    for Q in objs:
        for R in objs:
            for phi in L.maps(Q, R):
                v = L.kernels[R].reduce(b[(Q.elems, mkey(phi))] + L.action(Q, phi) @ z[Q] - z[R])
                prev = lifts.get(mkey(phi))
                if prev is None:
                    lifts[mkey(phi)] = v
                elif not np.array_equal(prev, v):
                    raise AssertionError("corrected section depends on the target object")
    sol = SectionSolution(lifts, mu, {Q: (omega[Q][0].images, omega[Q][1]) for Q in objs}, kvec, ell, mvec, z,
                          stats={"chains2": len(K.chains(2)), "transporter_morphisms": sub.n_morphisms})
    if verify:
        bad = section_violations(L, lifts)
        if bad:
            raise AssertionError(f"section fails: {bad[:3]}")
    return sol


def _check_defect(L: ExtLocality, C, x: dict, vals: dict) -> None:
    """The defect vanishes when either factor is an isomorphism."""
    for q, v in vals.items():
        if v.any() and (C.is_iso(q.morphisms[0]) or C.is_iso(q.morphisms[1])):
            raise AssertionError("defect cocycle is not regular")


def section_violations(L: ExtLocality, lifts: dict) -> list:
    """Composable pairs and transporters where phi -> (phi, lifts[phi]) fails to be a functor through tau."""
    F, P = L.F, L.P
    out = []
    for T in L.objects:
        for R in L.objects:
            for psi in L.maps(R, T):
                for phi in F.homs[R]:
                    g = L.compose((phi, lifts[mkey(phi)]), (psi, lifts[mkey(psi)]))
                    if not np.array_equal(g[1], lifts[mkey(g[0])]):
                        out.append(("composition", phi.images, psi.images))
    for R in L.objects:
        for u in transporter(P, R, P):
            if not np.array_equal(L.tau_vec(R, u), lifts[mkey(L.conj(R, u))]):
                out.append(("tau", R.elems, u))
    return out


def section_difference(L: ExtLocality, s1: dict, s2: dict) -> dict | None:
    """z with s2 = z s1 z^-1, i.e. s2(phi) - s1(phi) = A_phi z_Q - z_R for phi: R -> Q; None if none exists."""
    sys = _Linear()
    for R in L.objects:
        sys.unknown(R.elems, L.kernels[R])
    for Q in L.objects:
        for R in L.objects:
            KR = L.kernels[R]
            for phi in L.maps(Q, R):
                sys.equation(KR, [(Q.elems, L.action(Q, phi)), (R.elems, -np.eye(KR.rank, dtype=np.int64))],
                             s2[mkey(phi)] - s1[mkey(phi)])
    return sys.solve()


# ---------------------------------------------------------------- the inductive step

@dataclass
class PerfectSub:
    """A perfect locality as a sublocality of an extension locality L.

    Morphisms are (phi, lifts[phi] + iota_R(z)) for z in Z(R).
    """

    L: ExtLocality
    lifts: dict
    iota: dict
    locality: ExtLocality

    def closure_violations(self) -> list:
        L = self.L
        out = []
        for T in L.objects:
            for R in L.objects:
                for psi in L.maps(R, T):
                    for phi in L.F.homs[R]:
                        g = L.compose((phi, self.lifts[mkey(phi)]), (psi, self.lifts[mkey(psi)]))
                        try:
                            self.iota[T].coords(g[1] - self.lifts[mkey(g[0])])
                        except NotInImage:
                            out.append((phi.images, psi.images))
        return out


def perfect_sub(L: ExtLocality, lifts: dict, iota: dict | None = None, name: str = "perfect") -> PerfectSub:
    iota = iota or {R: center_embedding(L, R) for R in L.objects}
    kern = {R: iota[R].S for R in L.objects}

    def lift(phi):
        return lifts[mkey(phi)]

    loc = transport(L, kern, lift, {R: iota[R].coords for R in L.objects}, {R: iota[R].embed for R in L.objects}, name)
    return PerfectSub(L, lifts, iota, loc)


@dataclass
class StepReport:
    U: Subgroup
    new: list
    objects: list
    sub: PerfectSub
    dirac: ExtLocality | None
    routes_agree: bool | None
    section_stats: dict
    m_bar: ExtLocality | None = None
    checks: dict = field(default_factory=dict)


def _nabla(F: FusionSystem, L: ExtLocality, V: Subgroup) -> Embedded:
    """Averaging over the blocks of the kernel at a minimal object V, as coordinates on Z(V)."""
    K = L.kernels[V]
    Z = center_coords(V).group
    r = Z.rank
    nb = K.rank // r if r else len(F.ext(F.P, V))
    if nb * r != K.rank or nb != len(F.ext(F.P, V)):
        raise AssertionError("kernel at a minimal object is not a product of copies of Z(V)")
    for i in range(nb):
        if tuple(K.moduli[i * r:(i + 1) * r]) != Z.moduli:
            raise AssertionError("block moduli differ from Z(V)")
    e = max(Z.exponent, 1)
    inv = pow(nb, -1, e) if e > 1 else 0
    N = np.hstack([inv * np.eye(r, dtype=np.int64)] * nb) if nb else np.zeros((r, 0), dtype=np.int64)
    iota = center_embedding(L, V)

    class _Avg(Embedded):
        def coords(self, v):
            return Z.reduce(N @ np.asarray(v, dtype=np.int64))

    out = _Avg(Z, K, iota.E)
    if r and np.mod(N @ iota.E - np.eye(r, dtype=np.int64), np.array(Z.moduli)[:, None]).any():
        raise AssertionError("averaging is not a retraction of tau on Z(V)")
    out.matrix = N
    return out


def extend_step(F: FusionSystem, LX: ExtLocality, prev: PerfectSub | None, new: list, U: Subgroup,
                rng: random.Random | None = None, dual_route: bool = True, verify: bool = True) -> StepReport:
    """Add the class ``new`` (containing U) to a perfect locality over the remaining objects of LX."""
    Y = [] if prev is None else list(prev.L.objects)
    Yset = set(Y)
    objs = LX.objects
    iotaX = {R: center_embedding(LX, R) for R in objs}
    ypos, upos = {}, {}
    for R in Y:
        pos = {c: i for i, c in enumerate(LX.keep[R])}
        ypos[R] = [pos[c] for c in prev.L.keep[R]]
        ys = set(ypos[R])
        upos[R] = [i for i in range(LX.kernels[R].rank) if i not in ys]

    def lift_M(phi):
        R = phi.source
        v = LX.kernels[R].zero()
        if R in Yset:
            v[ypos[R]] = prev.lifts[mkey(phi)]
        return v

    # M-bar: M (pull-back of the previous locality) modulo tau(Z(R))
    kern, coord, embed = {}, {}, {}
    for R in objs:
        K = LX.kernels[R]
        if R in Yset:
            S = FinAb(tuple(K.moduli[i] for i in upos[R]))

            def c(v, R=R, K=K):
                v = K.reduce(v)
                zc = prev.iota[R].coords(v[ypos[R]])
                w = K.reduce(v - iotaX[R].embed(zc))
                if w[ypos[R]].any():
                    raise NotInImage("tau on Z(R) does not restrict coherently")
                return w[upos[R]]

            def e(k, R=R, K=K):
                v = K.zero()
                v[upos[R]] = k
                return K.reduce(v)
        else:
            S, proj = quotient_map(iotaX[R].E, K)
            back = []
            for b in S.basis():
                xb, _ = solve(proj, b, K, S)
                back.append(xb)
            back = np.array(back, dtype=np.int64).T.reshape(K.rank, S.rank)

            def c(v, S=S, proj=proj):
                return S.reduce(proj @ np.asarray(v, dtype=np.int64))

            def e(k, K=K, back=back):
                return K.reduce(back @ np.asarray(k, dtype=np.int64))
        kern[R], coord[R], embed[R] = S, c, e
    Mb = transport(LX, kern, lift_M, coord, embed, "M-bar")
    if verify:
        rep = Mb.check()
        if not rep.passed:
            raise AssertionError(f"quotient locality fails its axioms: {rep.witnesses[:3]}")

    checks = {}
    if verify:
        checks.update(_m_bar_sweeps(F, LX, Mb, Yset, upos, iotaX))
    sec = functorial_section(Mb, rng, verify)
    lifts = {}
    for R in objs:
        for phi in F.homs[R]:
            lifts[mkey(phi)] = LX.kernels[R].reduce(lift_M(phi) + embed[R](sec.lifts[mkey(phi)]))
    sub = perfect_sub(LX, lifts, iotaX)
    if verify:
        bad = sub.closure_violations()
        if bad:
            raise AssertionError(f"section image is not closed: {bad[:3]}")

    dirac = None
    agree = None
    if dual_route:
        if Y:
            secY = functorial_section(restrict_objects(Mb, Y, name="M-bar^Y"), rng, verify)
        else:
            secY = None

        def lift_N(phi):
            R = phi.source
            if R in Yset:
                return LX.kernels[R].reduce(lift_M(phi) + embed[R](secY.lifts[mkey(phi)]))
            return LX.kernels[R].zero()

        ncoord, nembed, nkern = {}, {}, {}
        for R in objs:
            emb = iotaX[R] if R in Yset else _nabla(F, LX, R)
            ncoord[R], nembed[R], nkern[R] = emb.coords, emb.embed, emb.S
        dirac = transport(LX, nkern, lift_N, ncoord, nembed, "dirac")
        iso = find_locality_isomorphism(dirac, sub.locality)
        agree = iso is not None and check_functor(iso)
        if verify:
            checks["quotient_route_perfect"] = dirac.check_perfect().passed
    if verify:
        checks["sublocality_perfect"] = sub.locality.check_perfect().passed
    return StepReport(U, list(new), list(objs), sub, dirac, agree, sec.stats, Mb, checks)


def _m_bar_sweeps(F: FusionSystem, LX: ExtLocality, Mb: ExtLocality, Yset: set, upos: dict, iotaX: dict) -> dict:
    """Kernel orders of M-bar and trivial meeting of its kernel with the image of each object."""
    orders = True
    for R in LX.objects:
        K = LX.kernels[R]
        if R in Yset:
            want = int(np.prod([K.moduli[i] for i in upos[R]], dtype=object)) if upos[R] else 1
        else:
            want = K.order // iotaX[R].S.order
        orders &= Mb.kernels[R].order == want
    meet = True
    for Q in Mb.objects:
        for u in Q.elems:
            phi = Mb.conj(Q, u)
            if phi.images == Q.elems and Mb.tau_vec(Q, u).any():
                meet = False
    return {"m_bar_kernel_orders": orders, "m_bar_kernel_meets_image_trivially": meet}


# ---------------------------------------------------------------- the whole construction

@dataclass
class PerfectResult:
    F: FusionSystem
    objects: list
    seed: int | None
    locality: ExtLocality
    sub: PerfectSub
    steps: list

    def check(self) -> CheckReport:
        return self.locality.check_perfect()

    def summary(self) -> dict:
        return {
            "objects": len(self.objects),
            "steps": [{"U": list(s.U.elems), "new": len(s.new), "routes_agree": s.routes_agree} for s in self.steps],
            "kernels": [list(self.locality.kernels[R].moduli) for R in self.locality.objects],
        }


def _objects(F: FusionSystem, X) -> list[Subgroup]:
    sc = set(F.sc)
    X = sorted(set(F.sc if X is None else X))
    bad = [R for R in X if R not in sc]
    if bad:
        raise XNotSelfcentralizing(f"{len(bad)} objects are not F-selfcentralizing")
    xs = set(X)
    for R in X:
        for Q in F.subgroups:
            if R.le(Q) and Q not in xs:
                raise ValueError("object set is not closed under overgroups")
        if any(h.image not in xs for h in F.homs[R]):
            raise ValueError("object set is not closed under F-conjugation")
    return X


def class_order(F: FusionSystem, X: list[Subgroup], rng: random.Random | None = None) -> list[tuple[list, Subgroup]]:
    """Classes of X by decreasing order, ties broken by the rng; with a fully normalized member each."""
    xs = set(X)
    classes = [[Q for Q in c if Q in xs] for c in F.classes]
    classes = [c for c in classes if c]
    if rng:
        rng.shuffle(classes)
    classes.sort(key=lambda c: -c[0].order)
    out = []
    for c in classes:
        fn = [Q for Q in c if F.is_fully_normalized(Q)]
        out.append((c, rng.choice(fn) if rng else fn[0]))
    return out


def build_perfect_locality(F: FusionSystem, X: Iterable[Subgroup] | None = None, seed: int | None = None,
                           omega=None, dual_route: bool = True, verify: bool = True,
                           progress: Callable | None = None) -> PerfectResult:
    """The perfect F^X-locality, as a sublocality of the natural locality over X."""
    from .biset import natural_F_basic_set

    X = _objects(F, X)
    rng = random.Random(seed) if seed is not None else None
    model = OmegaModel(F, omega if omega is not None else natural_F_basic_set(F), X)
    prev = None
    Y: list[Subgroup] = []
    steps = []
    for cls, U in class_order(F, X, rng):
        Xi = sorted(Y + cls)
        LX = natural_locality(F, Xi, model=model)
        step = extend_step(F, LX, prev, cls, U, rng, dual_route, verify)
        if dual_route and not step.routes_agree:
            raise AssertionError(f"quotient and sublocality constructions disagree at |U| = {U.order}")
        steps.append(step)
        if progress:
            progress(step)
        prev = step.sub
        Y = Xi
    return PerfectResult(F, X, seed, prev.locality, prev, steps)


def compare_with_oracle(result: PerfectResult, G=None) -> dict:
    """Locality isomorphism to the group locality N_G-transporters modulo O^p(C_G(R))."""
    F = result.F
    G = G if G is not None else F.realized_by
    if G is None:
        raise NotRealized("the fusion system carries no realizing group")
    oracle = group_locality(G, F.p, result.objects, F).to_ext()
    iso = find_locality_isomorphism(result.locality, oracle)
    return {"isomorphic": iso is not None and check_functor(iso), "oracle": oracle, "functor": iso}


def seed_independence(F: FusionSystem, seeds: Iterable[int], X=None, dual_route: bool = False, G=None) -> dict:
    """Builds for every seed, an isomorphism from the first build to each other one and,
    for realized systems, a natural isomorphism between the two routes to the oracle."""
    seeds = list(seeds)
    base = build_perfect_locality(F, X, seeds[0], dual_route=dual_route)
    G = G if G is not None else F.realized_by
    oracle = group_locality(G, F.p, base.objects, F).to_ext() if G is not None else None
    f_base = find_locality_isomorphism(base.locality, oracle) if oracle is not None else None
    out = {"seeds": seeds, "isomorphic": [], "natural": []}
    for s in seeds[1:]:
        other = build_perfect_locality(F, X, s, dual_route=dual_route)
        g = find_locality_isomorphism(base.locality, other.locality)
        out["isomorphic"].append(g is not None and check_functor(g))
        if oracle is not None and g is not None and f_base is not None:
            f_other = find_locality_isomorphism(other.locality, oracle)
            nat = None if f_other is None else natural_iso_search(f_base, compose_functors(f_other, g))
            out["natural"].append(nat is not None)
    out["all"] = all(out["isomorphic"]) and all(out["natural"])
    return out


# ---------------------------------------------------------------- localizers

@dataclass
class Localizer:
    """N_G(Q) / O^p(C_G(Q)) on chosen coset representatives, with tau and pi."""

    Q: Subgroup
    p: int
    reps: list
    mul: np.ndarray
    one: int
    tau: dict
    pi: list
    kernel_order: int

    @property
    def order(self) -> int:
        return len(self.reps)

    def check(self) -> dict:
        n = self.order
        auts = {h.images for h in self.pi}
        fibre = n // len(auts)
        out = {"pi_fibres_equal": all(sum(1 for h in self.pi if h.images == a) == fibre for a in auts)}
        cp = {self.tau[u] for u in centralizer(self.Q.group.whole, self.Q).elems if u in self.tau}
        ker_pi = {i for i, h in enumerate(self.pi) if h.images == self.Q.elems}
        out["kernel_is_tau_centralizer"] = cp == ker_pi and len(cp) == self.kernel_order
        pp = 1
        while n % (pp * self.p) == 0:
            pp *= self.p
        out["sylow_image"] = len(set(self.tau.values())) == pp
        return out


def localizer(F: FusionSystem, Q: Subgroup, seed: int | None = None) -> Localizer:
    """The localizer of a fully normalized Q in a realized system; the seed picks coset representatives."""
    G = F.realized_by
    if G is None:
        raise NotRealized("localizers are computed from a realizing group")
    if not F.is_fully_normalized(Q):
        raise NotFullyNormalized("Q must be fully F-normalized")
    W = G.whole
    N = normalizer(W, Q)
    Kp = o_upper_p(centralizer(W, Q), F.p)
    mul = G.mul
    rng = random.Random(seed) if seed is not None else None
    cosets = sorted({tuple(sorted(int(mul[x, k]) for k in Kp.elems)) for x in N.elems})
    if rng:
        rng.shuffle(cosets)
    reps = [rng.choice(c) if rng else c[0] for c in cosets]
    where = {x: i for i, c in enumerate(cosets) for x in c}
    table = np.array([[where[int(mul[a, b])] for b in reps] for a in reps], dtype=np.int64)
    tau = {u: where[u] for u in normalizer(F.P, Q).elems}
    pi = [Hom(Q, F.P, conjugation_hom(r, Q, Q).images) for r in reps]
    H = hyperfocal(F, Q)
    return Localizer(Q, F.p, reps, table, where[0], tau, pi, centralizer(F.P, Q).order // H.order)


def localizer_isomorphism(A: Localizer, B: Localizer) -> dict | None:
    """An isomorphism lam: A -> B with lam tau_A = tau_B and pi_B lam = pi_A, by search over pi-fibres."""
    if A.order != B.order or A.Q != B.Q:
        return None
    fixed = {A.tau[u]: B.tau[u] for u in A.tau}
    gens: list[int] = []
    span = {A.one}

    def grow(span, g):
        frontier = list(span)
        span = set(span)
        while frontier:
            nxt = []
            for x in frontier:
                for h in gens + [g]:
                    y = int(A.mul[x, h])
                    if y not in span:
                        span.add(y)
                        nxt.append(y)
            frontier = nxt
        return span

    for x in sorted(fixed) + list(range(A.order)):
        if x not in span:
            span = grow(span, x)
            gens.append(x)
        if len(span) == A.order:
            break
    fibres = [[j for j in range(B.order) if B.pi[j].images == A.pi[g].images] for g in gens]
    choices = [[fixed[g]] if g in fixed else fibres[i] for i, g in enumerate(gens)]

    def extend(images):
        lam = {A.one: B.one}
        frontier = [A.one]
        while frontier:
            x = frontier.pop()
            for g, h in zip(gens, images):
                y, v = int(A.mul[x, g]), int(B.mul[lam[x], h])
                if y in lam:
                    if lam[y] != v:
                        return None
                else:
                    lam[y] = v
                    frontier.append(y)
        if len(set(lam.values())) != A.order:
            return None
        return lam

    def search(i, images):
        if i == len(gens):
            lam = extend(images)
            if lam is None:
                return None
            if all(lam[A.tau[u]] == B.tau[u] for u in A.tau) and \
                    all(B.pi[lam[x]].images == A.pi[x].images for x in range(A.order)):
                return lam
            return None
        for c in choices[i]:
            r = search(i + 1, images + [c])
            if r is not None:
                return r
        return None

    return search(0, [])


def localizer_of_locality(L: ExtLocality, Q: Subgroup) -> int:
    """|Aut_L(Q)|, to compare with a group-theoretic localizer."""
    return len(L.maps(Q, Q)) * L.kernels[Q].order
