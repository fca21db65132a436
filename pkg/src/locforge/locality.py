"""Localities over a fusion system.

Two concrete shapes are used.  ``CosetLocality`` keeps morphisms as cosets
T_H(R, Q)/K(R) inside a permutation group and is checked element by
element.  ``ExtLocality`` keeps a morphism R -> Q as a pair (phi, k) with
phi in F(Q, R) and k in an abelian kernel K(R); composition is

    (phi, k)(psi, l) = (phi psi, kappa(phi, psi) + A_psi k + l)

so the structural checks reduce to finite identities between the data
kappa, A and t (the kernel part of tau).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable

import numpy as np

from .abelian import FinAb, direct_sum, smith_normal_form, solve
from .fusion import FusionSystem, hyperfocal, is_fully_centralized, transporter_fusion, fusion_from_group
from .groups import Hom, Subgroup, as_subgroup, centralizer, normalizer, o_upper_p, transporter


class NotEquivariant(ValueError):
    pass


class NotAFunctor(ValueError):
    pass


class IllDefinedComposition(ValueError):
    pass


def mkey(phi: Hom) -> tuple:
    """Key of a morphism R -> P by source and images (the target is implicit)."""
    return (phi.source.elems, phi.images)


def compose_maps(phi: Hom, psi: Hom) -> Hom:
    """phi o psi where psi lands inside the source of phi; the result maps into phi.target."""
    t = phi.table
    return Hom(psi.source, phi.target, tuple(t[y] for y in psi.images))


@dataclass
class CheckReport:
    checks: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def ok(self, name: str) -> None:
        self.checks.setdefault(name, True)

    def fail(self, name: str, **data) -> None:
        self.checks[name] = False
        if sum(1 for w in self.witnesses if w["check"] == name) < 5:
            self.witnesses.append({"check": name, **data})


# ---------------------------------------------------------------- coset localities

class CosetLocality:
    """L(Q, R) = T_H(R, Q)/K(R) for a group H containing P."""

    def __init__(self, F: FusionSystem, objects: Iterable[Subgroup], H: Subgroup, kernels: dict, name: str = ""):
        self.F = F
        self.objects = sorted(set(objects))
        self.H = H
        self.K = {R: kernels[R] for R in self.objects}
        self.name = name
        self.grp = H.group
        self._cache: dict = {}

    def __repr__(self):
        return f"CosetLocality({self.name}, objects={len(self.objects)})"

    def canon(self, x: int, R: Subgroup) -> int:
        mul = self.grp.mul
        return min(int(mul[x, k]) for k in self.K[R].elems)

    def morphisms(self, Q: Subgroup, R: Subgroup) -> list[int]:
        key = ("mor", Q, R)
        if key not in self._cache:
            self._cache[key] = sorted({self.canon(x, R) for x in transporter(self.H, R, Q)})
        return self._cache[key]

    def compose(self, x: int, y: int, T: Subgroup) -> int:
        return self.canon(int(self.grp.mul[x, y]), T)

    def tau(self, u: int, R: Subgroup) -> int:
        return self.canon(u, R)

    def pi(self, x: int, R: Subgroup) -> Hom:
        ct = self.grp.conj_table
        return Hom(R, self.F.P, tuple(int(ct[x, r]) for r in R.elems))

    def kernel(self, R: Subgroup) -> list[int]:
        return sorted({self.canon(c, R) for c in centralizer(self.H, R).elems})

    def kernel_order(self, R: Subgroup) -> int:
        return centralizer(self.H, R).order // self.K[R].order

    # -------------------------------------------------------- checks
    def check(self) -> CheckReport:
        """Locality axioms, divisibility and coherence by exhaustive sweep."""
        rep = CheckReport()
        F, P = self.F, self.F.P
        grp = self.grp
        for name in ("kernels_normal", "pi_full", "pi_tau_is_kappa", "composition_well_defined",
                     "divisible", "coherent", "p_coherent"):
            rep.ok(name)
        for R in self.objects:
            C = centralizer(self.H, R)
            if not (self.K[R].le(C) and self.K[R].is_normal_in(C)):
                rep.fail("kernels_normal", R=list(R.elems))
            if not self.K[R].le(normalizer(self.H, R)):
                rep.fail("kernels_normal", R=list(R.elems))
            if not _p_power(self.kernel_order(R), F.p):
                rep.fail("p_coherent", R=list(R.elems), kernel_order=self.kernel_order(R))
        for Q in self.objects:
            for R in self.objects:
                mors = self.morphisms(Q, R)
                got = {self.pi(x, R).images for x in mors}
                want = {h.images for h in F.homs[R] if set(h.images) <= Q.set}
                if got != want:
                    rep.fail("pi_full", Q=list(Q.elems), R=list(R.elems),
                             missing=sorted(want - got)[:3], extra=sorted(got - want)[:3])
                for u in transporter(P, R, Q):
                    if self.pi(self.tau(u, R), R).images != tuple(int(grp.conj_table[u, r]) for r in R.elems):
                        rep.fail("pi_tau_is_kappa", u=u)
                # regular action of the kernel on each fibre
                kern = self.kernel(R)
                fib: dict = {}
                for x in mors:
                    fib.setdefault(self.pi(x, R).images, []).append(x)
                for imgs, xs in fib.items():
                    if len(xs) != len(kern):
                        rep.fail("divisible", Q=list(Q.elems), R=list(R.elems), fibre=len(xs), kernel=len(kern))
                        continue
                    x0 = xs[0]
                    orbit = {self.compose(x0, k, R) for k in kern}
                    if orbit != set(xs):
                        rep.fail("divisible", Q=list(Q.elems), R=list(R.elems))
                # coherence: x tau_R(v) = tau_Q(phi(v)) x
                for x in mors:
                    phi = self.pi(x, R)
                    for v in R.generators:
                        lhs = self.compose(x, self.tau(v, R), R)
                        rhs = self.compose(self.tau(phi(v), Q), x, R)
                        if lhs != rhs:
                            rep.fail("coherent", x=x, v=v)
                # composition independent of representatives
                for T in self.objects:
                    for y in self.morphisms(R, T)[:4]:
                        for x in mors[:4]:
                            base = self.compose(x, y, T)
                            for k in self.K[R].generators:
                                if self.compose(int(grp.mul[x, k]), y, T) != base:
                                    rep.fail("composition_well_defined", x=x, y=y)
        if not rep.checks["coherent"]:
            rep.checks["p_coherent"] = False
        return rep

    def check_perfect(self) -> CheckReport:
        rep = self.check()
        F, P = self.F, self.F.P
        for name in ("P_bounded", "hyperfocal_kernel", "localizer_sequence", "sylow_image"):
            rep.ok(name)
        for Q in self.objects:
            NP = normalizer(P, Q)
            CP = centralizer(P, Q)
            if F.is_fully_normalized(Q):
                kern = set(self.kernel(Q))
                timg = {self.tau(u, Q) for u in CP.elems}
                if not kern <= {self.tau(u, Q) for u in NP.elems}:
                    rep.fail("P_bounded", Q=list(Q.elems))
                if timg != kern:
                    rep.fail("localizer_sequence", Q=list(Q.elems), reason="Ker(pi) != tau(C_P(Q))")
                L = len(self.morphisms(Q, Q))
                if L != sum(1 for h in F.homs[Q] if h.image == Q) * len(kern):
                    rep.fail("localizer_sequence", Q=list(Q.elems), reason="order")
                ntau = len({self.tau(u, Q) for u in NP.elems})
                if ntau != _p_part(L, F.p):
                    rep.fail("sylow_image", Q=list(Q.elems), tau_image=ntau, order=L)
            if is_fully_centralized(F, Q):
                H = hyperfocal(F, Q)
                ker_tau = {u for u in NP.elems if self.tau(u, Q) == self.tau(0, Q)}
                if ker_tau != H.set:
                    rep.fail("hyperfocal_kernel", Q=list(Q.elems), ker_tau=sorted(ker_tau), H=list(H.elems))
                    if F.is_fully_normalized(Q):
                        rep.fail("localizer_sequence", Q=list(Q.elems), reason="Ker(tau) != H")
        return rep

    def to_ext(self) -> "ExtLocality":
        """Extension form; needs abelian kernels (true for selfcentralizing objects)."""
        return coset_to_ext(self)


def _identity_matrix(K: FinAb) -> np.ndarray:
    return np.mod(np.eye(K.rank, dtype=np.int64), np.array(K.moduli, dtype=np.int64)[:, None]) if K.rank \
        else np.zeros((0, 0), dtype=np.int64)


def _p_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def _p_part(n: int, p: int) -> int:
    q = 1
    while n % p == 0:
        n //= p
        q *= p
    return q


def transporter_locality(P: Subgroup, X: Iterable[Subgroup], F: FusionSystem | None = None, p: int | None = None) -> CosetLocality:
    """T_P over X with tau the identity; ``F`` defaults to F_P."""
    if F is None:
        if p is None:
            raise ValueError("either F or p is needed")
        F = transporter_fusion(P, p)
    triv = P.group.generate([])
    return CosetLocality(F, X, P, {R: triv for R in X}, name="transporter")


def group_locality(G, p: int, X: Iterable[Subgroup] | None = None, F: FusionSystem | None = None) -> CosetLocality:
    """L_G(Q, R) = T_G(R, Q)/O^p(C_G(R))."""
    Gs = as_subgroup(G)
    F = F or fusion_from_group(Gs, p)
    X = list(F.sc if X is None else X)
    K = {R: o_upper_p(centralizer(Gs, R), p) for R in X}
    return CosetLocality(F, X, Gs, K, name="group")


# ---------------------------------------------------------------- extension localities

class ExtLocality:
    """Locality stored as kernel groups plus cocycle, kernel action and tau data.

    Subclasses or callers provide three callables:
      kappa_fn(phi, psi) -> vector in K(psi.source)
      action_fn(R, psi) -> integer matrix K(R) -> K(psi.source)
      tau_fn(R, u) -> vector in K(R) for u in T_P(R, -)
    Values are cached by morphism keys.
    """

    def __init__(self, F: FusionSystem, objects: Iterable[Subgroup], kernels: dict,
                 kappa_fn: Callable, action_fn: Callable, tau_fn: Callable, name: str = ""):
        self.F = F
        self.P = F.P
        self.objects = sorted(set(objects))
        self.kernels: dict[Subgroup, FinAb] = {R: kernels[R] for R in self.objects}
        self._kappa_fn = kappa_fn
        self._action_fn = action_fn
        self._tau_fn = tau_fn
        self.name = name
        self._kappa: dict = {}
        self._action: dict = {}
        self._tau: dict = {}
        self._obj = {R.elems: R for R in self.objects}

    def __repr__(self):
        return f"ExtLocality({self.name}, objects={len(self.objects)})"

    # -------------------------------------------------------- data access
    def maps(self, Q: Subgroup, R: Subgroup) -> list[Hom]:
        """pi-images: F-morphisms R -> Q, as maps into P."""
        qs = Q.set
        return [h for h in self.F.homs[R] if set(h.images) <= qs]

    def kappa(self, phi: Hom, psi: Hom) -> np.ndarray:
        key = (mkey(phi), mkey(psi))
        v = self._kappa.get(key)
        if v is None:
            T = psi.source
            v = self.kernels[T].reduce(self._kappa_fn(phi, psi))
            self._kappa[key] = v
        return v

    def action(self, R: Subgroup, psi: Hom) -> np.ndarray:
        key = (R.elems, mkey(psi))
        M = self._action.get(key)
        if M is None:
            T = psi.source
            M = np.asarray(self._action_fn(R, psi), dtype=np.int64).reshape(self.kernels[T].rank, self.kernels[R].rank)
            M = np.mod(M, np.array(self.kernels[T].moduli, dtype=np.int64)[:, None]) if self.kernels[T].rank else M
            self._action[key] = M
        return M

    def tau_vec(self, R: Subgroup, u: int) -> np.ndarray:
        key = (R.elems, int(u))
        v = self._tau.get(key)
        if v is None:
            v = self.kernels[R].reduce(self._tau_fn(R, int(u)))
            self._tau[key] = v
        return v

    def conj(self, R: Subgroup, u: int) -> Hom:
        ct = self.F.group.conj_table
        return Hom(R, self.P, tuple(int(ct[u, r]) for r in R.elems))

    # -------------------------------------------------------- category structure
    def compose(self, x: tuple, y: tuple) -> tuple:
        """(phi, k)(psi, l); psi lands in the source of phi."""
        phi, k = x
        psi, l = y
        R = phi.source
        T = psi.source
        K = self.kernels[T]
        v = self.kappa(phi, psi) + self.action(R, psi) @ np.asarray(k, dtype=np.int64) + np.asarray(l, dtype=np.int64)
        return compose_maps(phi, psi), K.reduce(v)

    def tau(self, R: Subgroup, u: int) -> tuple:
        return self.conj(R, u), self.tau_vec(R, u)

    def identity(self, R: Subgroup) -> tuple:
        return Hom(R, self.P, R.elems), self.kernels[R].zero()

    def morphism_count(self, Q: Subgroup, R: Subgroup) -> int:
        return len(self.maps(Q, R)) * self.kernels[R].order

    def kernel_matrix(self, Q: Subgroup, phi: Hom) -> np.ndarray:
        """Ker(pi)(phi~): K(Q) -> K(R) for phi: R -> Q."""
        return self.action(Q, phi)

    # -------------------------------------------------------- checks
    def _triples(self):
        F = self.F
        for T in self.objects:
            for R in self.objects:
                for psi in self.maps(R, T):
                    for Q in self.objects:
                        for phi in self.maps(Q, R):
                            yield Q, R, T, phi, psi

    def check(self, triple_limit: int | None = None) -> CheckReport:
        """Unit laws, functoriality of A, cocycle identity, tau functor, coherence."""
        rep = CheckReport()
        F = self.F
        for name in ("unital", "action_homs", "action_functor", "cocycle", "tau_functor", "pi_tau_is_kappa",
                     "divisible", "coherent", "A_coherent", "p_coherent"):
            rep.ok(name)
        for R in self.objects:
            K = self.kernels[R]
            idR = Hom(R, self.P, R.elems)
            if not np.array_equal(self.action(R, idR), _identity_matrix(K)):
                rep.fail("unital", R=list(R.elems), what="A_id")
            if self.tau_vec(R, 0).any():
                rep.fail("unital", R=list(R.elems), what="tau(1)")
            if not _p_power(K.order, F.p):
                rep.fail("p_coherent", R=list(R.elems), order=K.order)
        for Q in self.objects:
            idQ = Hom(Q, self.P, Q.elems)
            for R in self.objects:
                idR = Hom(R, self.P, R.elems)
                for phi in self.maps(Q, R):
                    M = self.action(Q, phi)
                    src, tgt = self.kernels[Q], self.kernels[R]
                    for j, d in enumerate(src.moduli):
                        if tgt.reduce(M[:, j] * d).any():
                            rep.fail("action_homs", Q=list(Q.elems), phi=list(phi.images))
                            break
                    if self.kappa(phi, idR).any() or self.kappa(idQ, phi).any():
                        rep.fail("unital", phi=list(phi.images))
        count = 0
        for Q, R, T, phi, psi in self._triples():
            count += 1
            if triple_limit is not None and count > triple_limit:
                break
            KT = self.kernels[T]
            phpsi = compose_maps(phi, psi)
            lhs = self.action(Q, phpsi)
            rhs = np.mod(self.action(R, psi) @ self.action(Q, phi), np.array(KT.moduli, dtype=np.int64)[:, None]) if KT.rank else lhs
            if not np.array_equal(lhs, rhs):
                rep.fail("action_functor", phi=list(phi.images), psi=list(psi.images))
        # cocycle: kappa(phi psi, chi) + A_chi kappa(phi, psi) = kappa(phi, psi chi) + kappa(psi, chi)
        count = 0
        for U in self.objects:
            for T in self.objects:
                for chi in self.maps(T, U):
                    for R in self.objects:
                        for psi in self.maps(R, T):
                            for phi in self.F.homs[R]:
                                count += 1
                                if triple_limit is not None and count > triple_limit:
                                    break
                                lhs = self.kappa(compose_maps(phi, psi), chi) + self.action(T, chi) @ self.kappa(phi, psi)
                                rhs = self.kappa(phi, compose_maps(psi, chi)) + self.kappa(psi, chi)
                                if self.kernels[U].reduce(lhs - rhs).any():
                                    rep.fail("cocycle", phi=list(phi.images), psi=list(psi.images), chi=list(chi.images))
        # tau is a functor and pi tau = kappa
        P = self.P
        for Q in self.objects:
            for R in self.objects:
                for T in self.objects:
                    for v in transporter(P, T, R):
                        for u in transporter(P, R, Q):
                            x = self.tau(R, u)
                            y = self.tau(T, v)
                            z = self.compose(x, y)
                            w = self.tau(T, int(F.group.mul[u, v]))
                            if z[0].images != w[0].images or self.kernels[T].reduce(z[1] - w[1]).any():
                                rep.fail("tau_functor", u=u, v=v)
                        break  # one Q per (R, T) suffices: tau does not depend on Q
        # coherence: A_{c_v} = 1 on K(R), and kappa(phi, c_v) + t_R(v) = kappa(c_{phi v}, phi) + A_phi t_Q(phi v)
        for R in self.objects:
            K = self.kernels[R]
            for v in R.generators:
                cv = self.conj(R, v)
                if not np.array_equal(self.action(R, cv), _identity_matrix(K)):
                    rep.fail("coherent", R=list(R.elems), v=v, what="inner action")
            for Q in self.objects:
                for phi in self.maps(Q, R):
                    for v in R.generators:
                        pv = phi(v)
                        lhs = self.kappa(phi, self.conj(R, v)) + self.tau_vec(R, v)
                        rhs = self.kappa(self.conj(Q, pv), phi) + self.action(Q, phi) @ self.tau_vec(Q, pv)
                        if K.reduce(lhs - rhs).any():
                            rep.fail("coherent", Q=list(Q.elems), phi=list(phi.images), v=v)
        if not rep.checks["coherent"]:
            rep.checks["p_coherent"] = False
            rep.checks["A_coherent"] = False
        if not rep.checks["unital"]:
            rep.checks["divisible"] = False
        return rep

    def check_perfect(self, triple_limit: int | None = None) -> CheckReport:
        rep = self.check(triple_limit)
        F, P = self.F, self.P
        for name in ("P_bounded", "hyperfocal_kernel", "localizer_sequence", "sylow_image"):
            rep.ok(name)
        for Q in self.objects:
            K = self.kernels[Q]
            NP = normalizer(P, Q)
            CP = centralizer(P, Q)
            tcols = np.array([self.tau_vec(Q, u) for u in CP.elems], dtype=np.int64).T.reshape(K.rank, CP.order)
            from .abelian import span_order
            img = span_order(tcols, K) if K.rank else 1
            if F.is_fully_normalized(Q):
                if img != K.order:
                    rep.fail("P_bounded", Q=list(Q.elems), image=img, kernel=K.order)
                    rep.fail("localizer_sequence", Q=list(Q.elems), reason="Ker(pi) != tau(C_P(Q))")
                autQ = len(self.maps(Q, Q))
                L = autQ * K.order
                # tau(N_P(Q)) has order |N_P(Q)| / |Ker tau|
                ker = [u for u in NP.elems if self.conj(Q, u).images == Q.elems and not self.tau_vec(Q, u).any()]
                if NP.order // len(ker) != _p_part(L, F.p):
                    rep.fail("sylow_image", Q=list(Q.elems), tau_image=NP.order // len(ker), order=L)
            if is_fully_centralized(F, Q):
                H = hyperfocal(F, Q)
                ker_tau = {u for u in CP.elems if not self.tau_vec(Q, u).any()}
                if ker_tau != H.set:
                    rep.fail("hyperfocal_kernel", Q=list(Q.elems), ker_tau=sorted(ker_tau), H=list(H.elems))
                    if F.is_fully_normalized(Q):
                        rep.fail("localizer_sequence", Q=list(Q.elems), reason="Ker(tau) != H")
        return rep

    # -------------------------------------------------------- export
    def to_json(self) -> dict:
        objs = self.objects
        idx = {R.elems: i for i, R in enumerate(objs)}
        morphs = []
        for Q in objs:
            for R in objs:
                for phi in self.maps(Q, R):
                    if phi.image.le(Q):
                        morphs.append({"target": idx[Q.elems], "source": idx[R.elems], "images": list(phi.images),
                                       "action": self.action(Q, phi).tolist()})
        cocycle = []
        for R in objs:
            for phi in self.F.homs[R]:
                for T in objs:
                    for psi in self.maps(R, T):
                        v = self.kappa(phi, psi)
                        if v.any():
                            cocycle.append({"phi": [idx[R.elems], list(phi.images)], "psi": [idx[T.elems], list(psi.images)],
                                            "value": v.tolist()})
        tau = []
        for R in objs:
            for u in centralizer(self.P, R).elems:
                tau.append({"object": idx[R.elems], "u": int(u), "value": self.tau_vec(R, u).tolist()})
        return {
            "name": self.name,
            "objects": [list(R.elems) for R in objs],
            "kernels": [list(self.kernels[R].moduli) for R in objs],
            "morphisms": morphs,
            "cocycle": cocycle,
            "tau_centralizers": tau,
        }


class TableLocality(ExtLocality):
    """ExtLocality with explicit dictionaries (kappa, action, tau keyed as in ExtLocality)."""

    def __init__(self, F, objects, kernels, kappa: dict, action: dict, tau: dict, name: str = ""):
        super().__init__(F, objects, kernels, self._k, self._a, self._t, name)
        self._kt, self._at, self._tt = kappa, action, tau

    def _k(self, phi, psi):
        v = self._kt.get((mkey(phi), mkey(psi)))
        return self.kernels[psi.source].zero() if v is None else v

    def _a(self, R, psi):
        return self._at[(R.elems, mkey(psi))]

    def _t(self, R, u):
        return self._tt[(R.elems, u)]


# ---------------------------------------------------------------- conversion from cosets

def coset_to_ext(L: CosetLocality) -> ExtLocality:
    """Extension form of a coset locality with abelian kernels.

    Base lifts are the least group elements inducing each F-morphism, with
    the lift of an inclusion taken to be 1, so the cocycle is normalized.
    """
    F = L.F
    grp = L.grp
    mul, inv = grp.mul, grp.inv
    lifts: dict = {}
    coords: dict = {}
    for R in L.objects:
        for x in transporter(L.H, R, F.P):
            phi = L.pi(x, R)
            key = mkey(phi)
            if key not in lifts:
                lifts[key] = x
        lifts[mkey(Hom(R, F.P, R.elems))] = 0
        # kernel coordinates: C_H(R)/K(R) through coset representatives
        reps = L.kernel(R)
        from .abelian import AbelianCoordinates
        ac = AbelianCoordinates(reps, lambda a, b, R=R: L.canon(int(mul[a, b]), R), L.canon(0, R))
        coords[R] = ac
    kernels = {R: coords[R].group for R in L.objects}
    objs = {R.elems: R for R in L.objects}

    def vec(R, c):
        return coords[R].to_coords(L.canon(c, R))

    def kappa(phi, psi):
        T = psi.source
        a = lifts[mkey(compose_maps(phi, psi))]
        b = int(mul[lifts[mkey(phi)], lifts[mkey(psi)]])
        return vec(T, int(mul[inv[a], b]))

    def action(R, psi):
        T = psi.source
        x = lifts[mkey(psi)]
        cols = []
        for e in coords[R].basis_elements():
            c = int(mul[mul[inv[x], e], x])
            cols.append(vec(T, c))
        return np.array(cols, dtype=np.int64).T.reshape(kernels[T].rank, kernels[R].rank)

    def tau(R, u):
        phi = Hom(R, F.P, tuple(int(grp.conj_table[u, r]) for r in R.elems))
        return vec(R, int(mul[inv[lifts[mkey(phi)]], u]))

    out = ExtLocality(F, L.objects, kernels, kappa, action, tau, name=L.name + "-ext")
    out.lifts = lifts
    out.coords = coords
    return out


# ---------------------------------------------------------------- quotients

def quotient_map(G: np.ndarray, A: FinAb) -> tuple[FinAb, np.ndarray]:
    """A/<columns of G> in invariant coordinates and the projection matrix."""
    if not A.rank:
        return FinAb(()), np.zeros((0, 0), dtype=np.int64)
    G = np.asarray(G, dtype=np.int64).reshape(A.rank, -1)
    rel = [[int(x) for x in row] for row in np.hstack([G, np.diag(np.array(A.moduli, dtype=np.int64))])]
    S, U, V = smith_normal_form(rel)
    mods = []
    rows = []
    for i in range(A.rank):
        d = abs(S[i][i]) if i < len(S[0]) else 0
        if d == 1:
            continue
        if d == 0:
            raise ValueError("quotient of a finite group cannot be infinite")
        mods.append(d)
        rows.append([int(x) % d for x in U[i]])
    proj = np.array(rows, dtype=np.int64).reshape(len(mods), A.rank)
    return FinAb(tuple(mods)), proj


def quotient_locality(L: ExtLocality, k: dict, name: str = "") -> ExtLocality:
    """L / k for a subfunctor k of Ker(pi); k[R] is a generator matrix inside K(R).

    Contravariance of k is verified: A_phi must carry k(Q) into k(R).
    """
    proj: dict = {}
    qk: dict = {}
    for R in L.objects:
        G = k.get(R)
        if G is None:
            G = np.zeros((L.kernels[R].rank, 0), dtype=np.int64)
        qk[R], proj[R] = quotient_map(G, L.kernels[R])
    lift: dict = {}
    for R in L.objects:
        cols = []
        for e in qk[R].basis():
            x, _ = solve(proj[R], e, L.kernels[R], qk[R])
            cols.append(x)
        lift[R] = np.array(cols, dtype=np.int64).T.reshape(L.kernels[R].rank, qk[R].rank)
    for Q in L.objects:
        G = k.get(Q)
        if G is None or not G.size:
            continue
        for R in L.objects:
            for phi in L.maps(Q, R):
                img = proj[R] @ (L.action(Q, phi) @ G)
                if qk[R].rank and np.mod(img, np.array(qk[R].moduli)[:, None]).any():
                    raise NotAFunctor(f"subfunctor not stable under {phi.images}")

    def kappa(phi, psi):
        return proj[psi.source] @ L.kappa(phi, psi)

    def action(R, psi):
        return proj[psi.source] @ L.action(R, psi) @ lift[R]

    def tau(R, u):
        return proj[R] @ L.tau_vec(R, u)

    out = ExtLocality(L.F, L.objects, qk, kappa, action, tau, name=name or (L.name + "/k"))
    out.parent = L
    out.projection = proj
    return out


def restrict_objects(L: ExtLocality, X: Iterable[Subgroup], name: str = "") -> ExtLocality:
    """Full subcategory over X."""
    X = sorted(set(X))
    return ExtLocality(L.F, X, {R: L.kernels[R] for R in X}, L.kappa, L.action, L.tau_vec, name=name or L.name)


# ---------------------------------------------------------------- locality functors and isomorphisms

@dataclass
class ExtFunctor:
    """A locality functor between extension localities over the same F.

    Sends (phi, k) to (phi, M_R k + ell_phi), M_R: K(R) -> K'(R).
    """

    source: ExtLocality
    target: ExtLocality
    M: dict
    ell: dict  # mkey(phi) -> vector in K'(source of phi)

    def apply(self, x: tuple) -> tuple:
        phi, k = x
        R = phi.source
        K2 = self.target.kernels[R]
        return phi, K2.reduce(self.M[R] @ np.asarray(k, dtype=np.int64) + self.ell[mkey(phi)])


def _blocks(L: ExtLocality):
    """All morphisms phi: R -> P, R an object, as (R, phi)."""
    for R in L.objects:
        for phi in L.F.homs[R]:
            yield R, phi


def find_locality_isomorphism(L1: ExtLocality, L2: ExtLocality) -> ExtFunctor | None:
    """Search an F-locality isomorphism L1 -> L2 identical on F.

    Kernel maps are forced by tau on C_P(R) whenever tau_R is onto the
    kernel (as in perfect localities); the remaining unknowns ell_phi enter
    linearly:
        ell_{phi psi} - A2_psi ell_phi - ell_psi = kappa2(phi, psi) - M kappa1(phi, psi)
        ell_{c_u} = t2(u) - M t1(u)
    Returns None when the system has no solution.
    """
    F = L1.F
    if L1.objects != L2.objects:
        return None
    P = F.P
    M: dict = {}
    for R in L1.objects:
        K1, K2 = L1.kernels[R], L2.kernels[R]
        if K1.invariants() != K2.invariants():
            return None
        C = centralizer(P, R).elems
        A = np.array([L1.tau_vec(R, u) for u in C], dtype=np.int64).T.reshape(K1.rank, len(C))
        B = np.array([L2.tau_vec(R, u) for u in C], dtype=np.int64).T.reshape(K2.rank, len(C))
        # tau restricted to C_P(R) is a homomorphism onto K1; M is forced by M A = B
        free = FinAb((max(K1.exponent, K2.exponent),) * A.shape[1])
        cols = []
        for e in K1.basis():
            c, _ = solve(A, e, free, K1)
            if c is None:
                return None
            cols.append(B @ c)
        Mi = np.array(cols, dtype=np.int64).T.reshape(K2.rank, K1.rank)
        if K2.rank:
            Mi = np.mod(Mi, _mods_col(K2))
            if np.mod(Mi @ A - B, _mods_col(K2)).any():
                return None
            for j, d in enumerate(K1.moduli):
                if K2.reduce(Mi[:, j] * d).any():
                    return None
        M[R] = Mi
    # unknown vector: ell_phi for all phi with source an object
    index = {}
    mods: list[int] = []
    for R, phi in _blocks(L1):
        index[mkey(phi)] = (len(mods), R)
        mods.extend(L2.kernels[R].moduli)
    src = FinAb(tuple(mods))
    eqs = []
    rhs = []
    eq_mods: list[int] = []

    def add_equation(T, coeffs, value):
        K = L2.kernels[T]
        row = np.zeros((K.rank, src.rank), dtype=np.int64)
        for key, mat in coeffs:
            off, _ = index[key]
            row[:, off: off + mat.shape[1]] += mat
        eqs.append(row)
        rhs.append(K.reduce(value))
        eq_mods.extend(K.moduli)

    for T in L1.objects:
        for R in L1.objects:
            for psi in L1.maps(R, T):
                for phi in F.homs[R]:
                    KT = L2.kernels[T]
                    eye = np.eye(KT.rank, dtype=np.int64)
                    val = L2.kappa(phi, psi) - M[T] @ L1.kappa(phi, psi)
                    add_equation(T, [(mkey(compose_maps(phi, psi)), eye), (mkey(phi), -L2.action(R, psi)), (mkey(psi), -eye)], val)
    # tau: compatibility at the transporter
    for R in L1.objects:
        KR = L2.kernels[R]
        eye = np.eye(KR.rank, dtype=np.int64)
        for u in transporter(P, R, P):
            key = mkey(L1.conj(R, u))
            add_equation(R, [(key, eye)], L2.tau_vec(R, u) - M[R] @ L1.tau_vec(R, u))
    # kernel maps must intertwine the actions
    for Q in L1.objects:
        for R in L1.objects:
            for phi in L1.maps(Q, R):
                lhs = M[R] @ L1.action(Q, phi)
                rhs2 = L2.action(Q, phi) @ M[Q]
                if L2.kernels[R].rank and np.mod(lhs - rhs2, np.array(L2.kernels[R].moduli)[:, None]).any():
                    return None
    if not eqs:
        return ExtFunctor(L1, L2, M, {k: np.zeros(0, dtype=np.int64) for k in index})
    A = np.vstack(eqs)
    b = np.concatenate(rhs)
    tgt = FinAb(tuple(eq_mods))
    x, _ = solve(A, b, src, tgt)
    if x is None:
        return None
    ell = {}
    for key, (off, R) in index.items():
        ell[key] = x[off: off + L2.kernels[R].rank]
    return ExtFunctor(L1, L2, M, ell)


def compose_functors(f: ExtFunctor, g: ExtFunctor) -> ExtFunctor:
    """f o g."""
    M = {}
    ell = {}
    for R in g.source.objects:
        M[R] = np.mod(f.M[R] @ g.M[R], _mods_col(f.target.kernels[R]))
    for R, phi in _blocks(g.source):
        k = mkey(phi)
        ell[k] = f.target.kernels[R].reduce(f.M[R] @ g.ell[k] + f.ell[k])
    return ExtFunctor(g.source, f.target, M, ell)


def natural_iso_search(l1: ExtFunctor, l2: ExtFunctor):
    """A natural F-isomorphism l1 => l2, or None.

    With normalized cocycles the naturality square at phi: R -> Q reads
    A'_phi lam_Q - lam_R = ell2_phi - ell1_phi, a linear system in the
    family lam; it is determined by lam_P through tau'(1) whenever the
    target is divisible.
    """
    L = l1.target
    F = L.F
    for R in L.objects:
        if L.kernels[R].rank and np.mod(l1.M[R] - l2.M[R], _mods_col(L.kernels[R])).any():
            return None
    index = {}
    mods: list[int] = []
    for R in L.objects:
        index[R.elems] = len(mods)
        mods.extend(L.kernels[R].moduli)
    src = FinAb(tuple(mods))
    eqs, rhs, eq_mods = [], [], []
    for Q in L.objects:
        for R in L.objects:
            for phi in L.maps(Q, R):
                K = L.kernels[R]
                row = np.zeros((K.rank, src.rank), dtype=np.int64)
                oq, orr = index[Q.elems], index[R.elems]
                row[:, oq: oq + L.kernels[Q].rank] += L.action(Q, phi)
                row[:, orr: orr + K.rank] -= np.eye(K.rank, dtype=np.int64)
                eqs.append(row)
                rhs.append(K.reduce(l2.ell[mkey(phi)] - l1.ell[mkey(phi)]))
                eq_mods.extend(K.moduli)
    if not eqs or not src.rank:
        return {R: np.zeros(0, dtype=np.int64) for R in L.objects}
    x, _ = solve(np.vstack(eqs), np.concatenate(rhs), src, FinAb(tuple(eq_mods)))
    if x is None:
        return None
    return {R: x[index[R.elems]: index[R.elems] + L.kernels[R].rank] for R in L.objects}


def _mods_col(K: FinAb) -> np.ndarray:
    return np.array(K.moduli, dtype=np.int64)[:, None] if K.rank else np.ones((0, 1), dtype=np.int64)


def identity_functor(L: ExtLocality) -> ExtFunctor:
    M = {R: np.eye(L.kernels[R].rank, dtype=np.int64) for R in L.objects}
    ell = {mkey(phi): L.kernels[R].zero() for R, phi in _blocks(L)}
    return ExtFunctor(L, L, M, ell)


def check_functor(f: ExtFunctor) -> bool:
    """Compatibility with composition, tau and pi on generators of each kernel."""
    L1, L2 = f.source, f.target
    F = L1.F
    for T in L1.objects:
        for R in L1.objects:
            for psi in L1.maps(R, T):
                for phi in F.homs[R]:
                    ks = [L1.kernels[R].zero()] + L1.kernels[R].basis()
                    for k in ks[:3]:
                        x = (phi, k)
                        y = (psi, L1.kernels[T].zero())
                        a = f.apply(L1.compose(x, y))
                        b = L2.compose(f.apply(x), f.apply(y))
                        if a[0].images != b[0].images or L2.kernels[T].reduce(a[1] - b[1]).any():
                            return False
    for R in L1.objects:
        for u in transporter(F.P, R, F.P):
            a = f.apply(L1.tau(R, u))
            b = L2.tau(R, u)
            if L2.kernels[R].reduce(a[1] - b[1]).any():
                return False
    return True


# ---------------------------------------------------------------- localities from a basic set

class _PairGroup:
    """Q x P as index pairs, with multiplication through the ambient table."""

    def __init__(self, Q: Subgroup, P: Subgroup):
        self.Q, self.P = Q, P
        self.pairs = [(a, b) for a in Q.elems for b in P.elems]
        self.index = {g: i for i, g in enumerate(self.pairs)}
        self.mul = Q.group.mul
        self.inv = Q.group.inv

    def m(self, g, h):
        return (int(self.mul[g[0], h[0]]), int(self.mul[g[1], h[1]]))

    def i(self, g):
        return (int(self.inv[g[0]]), int(self.inv[g[1]]))


class _Abelianized:
    """ab(N/D) for subgroups D <= N of a pair group, with coordinates."""

    def __init__(self, pg: _PairGroup, N: list, D: list):
        from .abelian import AbelianCoordinates

        Nset = set(N)
        K = set(D)
        gens = [pg.m(pg.m(x, y), pg.m(pg.i(x), pg.i(y))) for x in N for y in N]
        frontier = list(K)
        for g in gens:
            if g not in K:
                K.add(g)
                frontier.append(g)
        # close under multiplication
        while frontier:
            nxt = []
            for x in frontier:
                for g in list(K):
                    y = pg.m(x, g)
                    if y not in K:
                        K.add(y)
                        nxt.append(y)
            frontier = nxt
        self.K = sorted(K)
        self.pg = pg
        rep = {}
        for x in sorted(Nset):
            if x in rep:
                continue
            coset = [pg.m(x, k) for k in self.K]
            r = min(coset)
            for y in coset:
                rep[y] = r
        self.rep = rep
        reps = sorted(set(rep.values()))
        self.coords = AbelianCoordinates(reps, lambda a, b: rep[pg.m(a, b)], rep[(0, 0)])
        self.group = self.coords.group

    def vec(self, n) -> np.ndarray:
        return self.coords.to_coords(self.rep[n])

    def element(self, v):
        return self.coords.to_element(v)


@dataclass
class KernelClass:
    """One isomorphism class of R x P-orbits of Omega, with its ab(Aut) coordinates."""

    base: int
    stabilizer: list          # pairs (a, b)
    normalizer: list          # N_{RxP}(stabilizer)
    members: list             # one point per orbit of the class, each with stabilizer exactly `stabilizer`
    T: Subgroup               # first projection (a subgroup of R)
    gamma: Hom                # T -> P with stabilizer {(t, gamma(t))}
    sc: bool
    group: FinAb = None
    term: int | None = None   # index in normal_form_terms when sc
    _ab: object = None
    _center: object = None

    @property
    def multiplicity(self) -> int:
        return len(self.members)

    @property
    def aut_order(self) -> int:
        return len(self.normalizer) // len(self.stabilizer)

    def vec(self, n) -> np.ndarray:
        if self.sc:
            # (a, b) = (z, 1)(t, gamma(t)) with z in Z(T)
            a, b = n
            grp = self.T.group
            t = self.gamma.inverse()(b)
            z = int(grp.mul[a, grp.inv[t]])
            return self._center.vec(z)
        return self._ab.vec(n)

    def element(self, v):
        if self.sc:
            return (self._center.elem(v), 0)
        return self._ab.element(v)


class OmegaModel:
    """A materialized basic set with the kernel data of L^Omega on chosen objects."""

    def __init__(self, F: FusionSystem, omega, objects: Iterable[Subgroup]):
        from .biset import PointSet

        self.F = F
        self.P = F.P
        self.omega = omega
        self.points: PointSet = omega.materialize()
        pts = self.points
        P = self.P
        n = P.order
        # act[a_idx, b_idx] = permutation of (a, b)
        self.act = np.empty((n, n, pts.size), dtype=np.int64)
        for a in range(n):
            self.act[a] = pts.left[a][pts.right]
        self.pidx = pts.pidx
        self.objects = sorted(set(objects))
        self.classes: dict = {}
        self.where: dict = {}
        self.kernels: dict = {}
        self.offsets: dict = {}
        self._lifts: dict = {}
        for R in self.objects:
            self._decompose(R)

    # -------------------------------------------------------- helpers
    def A(self, a: int, b: int) -> np.ndarray:
        return self.act[self.pidx[a], self.pidx[b]]

    def _orbits(self, gens_left: list, gens_right: list) -> np.ndarray:
        """Orbit labels (least point) under the given left and right generators."""
        size = self.points.size
        lab = np.arange(size)
        perms = [self.A(a, 0) for a in gens_left] + [self.A(0, b) for b in gens_right]
        changed = True
        while changed:
            changed = False
            for g in perms:
                new = np.minimum(lab, lab[g])
                new2 = np.minimum(new, new[np.argsort(g)])
                if not np.array_equal(new2, lab):
                    lab = new2
                    changed = True
            # path compression
            lab = lab[lab]
        return lab

    def _stab(self, R: Subgroup, x: int) -> list:
        return [(a, b) for a in R.elems for b in self.P.elems if self.A(a, b)[x] == x]

    # -------------------------------------------------------- decomposition of Res_{R x P}
    def _decompose(self, R: Subgroup):
        from .fusion import center_coords, normal_form_terms

        F, P = self.F, self.P
        grp = F.group
        pg = _PairGroup(R, P)
        lab = self._orbits(list(R.generators), list(P.generators))
        reps = sorted(set(int(x) for x in lab))
        terms = normal_form_terms(F, F.sc, R)
        term_stabs = []
        for t in terms:
            T = t.Q
            g = t.beta.rep
            term_stabs.append(frozenset((x, g(x)) for x in T.elems))
        classes: list[KernelClass] = []
        by_term: dict = {}

        def conj_pair(g, h):
            return (int(grp.conj_table[g[0], h[0]]), int(grp.conj_table[g[1], h[1]]))

        for r in reps:
            S = self._stab(R, r)
            Sset = frozenset(S)
            placed = False
            for c in classes:
                if len(c.stabilizer) != len(S):
                    continue
                base = set(c.stabilizer)
                for g in pg.pairs:
                    if all(conj_pair(g, h) in base for h in S):
                        c.members.append(int(self.A(*g)[r]))
                        placed = True
                        break
                if placed:
                    break
            if placed:
                continue
            # new class: re-base onto a normal-form term when selfcentralizing
            T = Subgroup(grp, tuple(sorted({a for a, _ in S})))
            sc = F.is_selfcentralizing(T) and len(S) == T.order
            base_pt, base_S, term = r, S, None
            if sc:
                for i, ts in enumerate(term_stabs):
                    if len(ts) != len(S):
                        continue
                    for g in pg.pairs:
                        if frozenset(conj_pair(g, h) for h in S) == ts:
                            base_pt = int(self.A(*g)[r])
                            base_S = sorted(ts)
                            term = i
                            break
                    if term is not None:
                        break
                if term is None:
                    raise RuntimeError("selfcentralizing orbit type without a normal-form term")
            Tb = Subgroup(grp, tuple(sorted({a for a, _ in base_S})))
            gmap = dict(base_S)
            gamma = Hom(Tb, P, tuple(gmap[x] for x in Tb.elems))
            bset = set(base_S)
            N = [g for g in pg.pairs if all(conj_pair(g, h) in bset for h in base_S)]
            c = KernelClass(base_pt, list(base_S), N, [base_pt], Tb, gamma, sc, term=term)
            if sc:
                c._center = center_coords(Tb)
                c.group = c._center.group
                if c.aut_order != Tb.center.order:
                    raise RuntimeError("automorphism group of a selfcentralizing orbit is not Z(T)")
            else:
                c._ab = _Abelianized(pg, N, list(base_S))
                c.group = c._ab.group
            classes.append(c)
        # sc classes first, in normal-form order, then the rest in discovery order
        sc_classes = sorted((c for c in classes if c.sc), key=lambda c: c.term)
        if [c.term for c in sc_classes] != list(range(len(terms))):
            raise RuntimeError("selfcentralizing classes do not match the normal-form terms")
        classes = sc_classes + [c for c in classes if not c.sc]
        where_cls = -np.ones(self.points.size, dtype=np.int64)
        where_mem = -np.ones(self.points.size, dtype=np.int64)
        where_g = -np.ones(self.points.size, dtype=np.int64)
        for ci, c in enumerate(classes):
            for mi, m in enumerate(c.members):
                for gi, g in enumerate(pg.pairs):
                    y = int(self.A(*g)[m])
                    if where_cls[y] < 0:
                        where_cls[y] = ci
                        where_mem[y] = mi
                        where_g[y] = gi
        if (where_cls < 0).any():
            raise RuntimeError("orbit decomposition does not cover Omega")
        K, offs = direct_sum([c.group for c in classes])
        self.classes[R] = classes
        self.where[R] = (where_cls, where_mem, where_g, pg)
        self.kernels[R] = K
        self.offsets[R] = offs

    def sc_rank(self, R: Subgroup) -> int:
        return sum(c.group.rank for c in self.classes[R] if c.sc)

    # -------------------------------------------------------- projection C_G(R) -> c~(R)
    def project(self, R: Subgroup, c: np.ndarray, check: bool = False) -> np.ndarray:
        """Image in prod ab(Aut(O)) of an R x P-equivariant permutation ``c``."""
        where_cls, where_mem, where_g, pg = self.where[R]
        K = self.kernels[R]
        out = K.zero()
        for ci, cl in enumerate(self.classes[R]):
            off = self.offsets[R][ci]
            r = cl.group.rank
            for m in cl.members:
                y = int(c[m])
                if where_cls[y] != ci:
                    raise NotEquivariant("permutation does not preserve orbit classes")
                if r:
                    out[off: off + r] += cl.vec(pg.pairs[where_g[y]])
        if check and not self.is_equivariant(R, c):
            raise NotEquivariant("permutation does not commute with R x P")
        return K.reduce(out)

    def is_equivariant(self, R: Subgroup, c: np.ndarray) -> bool:
        for a in R.generators:
            g = self.A(a, 0)
            if not np.array_equal(c[g], g[c]):
                return False
        for b in self.P.generators:
            g = self.A(0, b)
            if not np.array_equal(c[g], g[c]):
                return False
        return True

    def kernel_lift(self, R: Subgroup, ci: int, v) -> np.ndarray:
        """The automorphism of the base orbit of class ``ci`` with coordinate v, identity elsewhere."""
        cl = self.classes[R][ci]
        _, _, _, pg = self.where[R]
        n = cl.element(v)
        c = np.arange(self.points.size)
        m = cl.base
        for g in pg.pairs:
            c[int(self.A(*g)[m])] = int(self.A(*pg.m(g, n))[m])
        return c

    def basis_lifts(self, R: Subgroup) -> list[np.ndarray]:
        out = []
        for ci, cl in enumerate(self.classes[R]):
            for e in cl.group.basis():
                out.append(self.kernel_lift(R, ci, e))
        return out

    # -------------------------------------------------------- lifts of F-morphisms
    def lift(self, phi: Hom) -> np.ndarray:
        """x in G with x (r w) = phi(r) x(w): an R x P-isomorphism Omega -> Res_phi(Omega)."""
        key = mkey(phi)
        x = self._lifts.get(key)
        if x is not None:
            return x
        R = phi.source
        if phi.images == R.elems:
            x = np.arange(self.points.size)
            self._lifts[key] = x
            return x
        P = self.P
        size = self.points.size
        src_lab = self._orbits(list(R.generators), list(P.generators))
        S2 = phi.image
        tgt_lab = self._orbits(list(S2.generators), list(P.generators))
        tgt_size = np.bincount(tgt_lab, minlength=size)
        src_size = np.bincount(src_lab, minlength=size)
        used = np.zeros(size, dtype=bool)
        x = -np.ones(size, dtype=np.int64)
        pairs = [(a, b) for a in R.elems for b in P.elems]
        ar = np.arange(size)
        for s in sorted(set(int(v) for v in src_lab)):
            S = self._stab(R, s)
            mask = (tgt_size[tgt_lab] == src_size[s]) & ~used[tgt_lab]
            for a, b in S:
                mask &= self.A(phi(a), b) == ar
            cand = np.flatnonzero(mask)
            if not cand.size:
                raise NotEquivariant(f"no orbit matches under {phi.images}; F^Omega differs from F")
            t = int(cand[0])
            used[tgt_lab[t]] = True
            for a, b in pairs:
                x[self.A(a, b)[s]] = self.A(phi(a), b)[t]
        if (x < 0).any() or len(set(x.tolist())) != size:
            raise RuntimeError("lift is not a permutation")
        self._lifts[key] = x
        return x

    # -------------------------------------------------------- the locality data
    def kappa(self, phi: Hom, psi: Hom) -> np.ndarray:
        T = psi.source
        xs = self.lift(compose_maps(phi, psi))
        inv = np.argsort(xs)
        d = inv[self.lift(phi)[self.lift(psi)]]
        return self.project(T, d)

    def action_conj(self, R: Subgroup, psi: Hom) -> np.ndarray:
        """c~(psi): c~(R) -> c~(T) by conjugation with the lift of psi."""
        T = psi.source
        x = self.lift(psi)
        xi = np.argsort(x)
        cols = [self.project(T, xi[c[x]]) for c in self.basis_lifts(R)]
        return np.array(cols, dtype=np.int64).T.reshape(self.kernels[T].rank, self.kernels[R].rank)

    def tau(self, R: Subgroup, u: int) -> np.ndarray:
        ct = self.F.group.conj_table
        phi = Hom(R, self.P, tuple(int(ct[u, r]) for r in R.elems))
        x = self.lift(phi)
        return self.project(R, np.argsort(x)[self.A(u, 0)])

    # -------------------------------------------------------- transfer route
    def _twisted_stab(self, T: Subgroup, psi: Hom, y: int) -> frozenset:
        return frozenset((a, b) for a in T.elems for b in self.P.elems if self.A(psi(a), b)[y] == y)

    def action_transfer(self, R: Subgroup, psi: Hom) -> np.ndarray:
        """c~(psi) as a sum over suborbits of ab(delta_f) composed with the transfer."""
        T = psi.source
        P = self.P
        ct = self.F.group.conj_table
        KT = self.kernels[T]
        _, _, _, pg = self.where[R]
        _, _, _, tpg = self.where[T]
        tw = {(a, b): (psi(a), b) for a, b in tpg.pairs}
        cols = []
        for cl in self.classes[R]:
            m = cl.base
            at = {}
            for g in pg.pairs:
                at.setdefault(int(self.A(*g)[m]), g)
            # N/D as points n.m
            nreps = {}
            for n in cl.normalizer:
                nreps.setdefault(int(self.A(*n)[m]), n)
            nreps = list(nreps.values())

            def act_aut(n, y):
                return int(self.A(*pg.m(at[y], n))[m])

            # T x P suborbits of Res_{psi x id}(O), labelled by least point
            sub = {}
            for y in sorted(at):
                if y in sub:
                    continue
                orb = {int(self.A(*tw[g])[y]) for g in tpg.pairs}
                for z in orb:
                    sub[z] = y
            # Aut(O)-orbits on suborbits, with a matched base point in each representative
            seen = set()
            reps = []
            for s0 in sorted(set(sub.values())):
                if s0 in seen:
                    continue
                seen |= {sub[act_aut(n, s0)] for n in nreps}
                H = [n for n in nreps if sub[act_aut(n, s0)] == s0]
                st = self._twisted_stab(T, psi, s0)
                match = None
                for tj, tcl in enumerate(self.classes[T]):
                    if len(tcl.stabilizer) != len(st):
                        continue
                    want = frozenset(tcl.stabilizer)
                    for g in tpg.pairs:
                        if frozenset((int(ct[g[0], a]), int(ct[g[1], b])) for a, b in st) == want:
                            match = (tj, int(self.A(*tw[g])[s0]))
                            break
                    if match:
                        break
                if match is None:
                    raise RuntimeError("suborbit matches no orbit class of the smaller object")
                reps.append((H, match))
            for e in cl.group.basis():
                g_e = cl.element(e)
                total = KT.zero()
                for H, (tj, y) in reps:
                    tcl = self.classes[T][tj]
                    if not tcl.group.rank:
                        continue
                    key = lambda n: frozenset(int(self.A(*pg.m(n, h))[m]) for h in H)
                    trans, index = [], {}
                    for n in nreps:
                        k = key(n)
                        if k not in index:
                            index[k] = len(trans)
                            trans.append(n)
                    v = tcl.group.zero()
                    for t in trans:
                        w = pg.m(g_e, t)
                        h = pg.m(pg.i(trans[index[key(w)]]), w)
                        target = act_aut(h, y)
                        k = next(g for g in tpg.pairs if int(self.A(*tw[g])[y]) == target)
                        v = v + tcl.vec(k)
                    off = self.offsets[T][tj]
                    total[off: off + tcl.group.rank] += v
                cols.append(KT.reduce(total))
        return np.array(cols, dtype=np.int64).T.reshape(KT.rank, self.kernels[R].rank)

    # -------------------------------------------------------- the locality
    def locality(self, name: str = "omega") -> ExtLocality:
        L = ExtLocality(self.F, self.objects, self.kernels, self.kappa, self.action_conj, self.tau, name=name)
        L.model = self
        return L


def omega_locality(F: FusionSystem, omega, X: Iterable[Subgroup] | None = None) -> ExtLocality:
    """L^Omega(Q, R) = T_G(R, Q)/S^1_Omega(R) over X (default: selfcentralizing subgroups)."""
    X = list(F.sc if X is None else X)
    return OmegaModel(F, omega, X).locality()


def s1_projection(model: OmegaModel, Q: Subgroup, c: np.ndarray) -> np.ndarray:
    return model.project(Q, c, check=True)


def c_tilde_map(model: OmegaModel, R: Subgroup, psi: Hom, route: str = "transfer") -> np.ndarray:
    """Matrix of c~(psi~): c~(R) -> c~(T); ``route`` is "transfer" or "conjugation"."""
    if route == "transfer":
        return model.action_transfer(R, psi)
    if route == "conjugation":
        return model.action_conj(R, psi)
    raise ValueError(route)


def nsc_subfunctor(model: OmegaModel) -> dict:
    """Generators of c~nsc(R): the blocks of non-selfcentralizing orbit classes."""
    out = {}
    for R in model.objects:
        K = model.kernels[R]
        start = model.sc_rank(R)
        cols = [np.eye(K.rank, dtype=np.int64)[:, j] for j in range(start, K.rank)]
        out[R] = np.array(cols, dtype=np.int64).T.reshape(K.rank, len(cols))
    return out


def natural_locality(F: FusionSystem, X: Iterable[Subgroup] | None = None, omega=None, model: OmegaModel | None = None) -> ExtLocality:
    """L^{n,X}: L^{Omega,sc} modulo c~nsc, restricted to X and modulo k~^X.

    The kernel at Q is Z(Q cap P) over X, in the block order of
    ``fusion.ker_pi_value``.
    """
    from .biset import natural_F_basic_set
    from .fusion import normal_form_terms

    sc = F.sc
    X = sorted(set(sc if X is None else X))
    if model is None:
        omega = omega if omega is not None else natural_F_basic_set(F)
        model = OmegaModel(F, omega, X)
    L = model.locality()
    xset = set(X)
    if set(L.objects) != xset:
        L = restrict_objects(L, X, name=L.name)
    k = {}
    for R in X:
        K = model.kernels[R]
        terms = normal_form_terms(F, sc, R)
        cols = []
        for ci, cl in enumerate(model.classes[R]):
            drop = (not cl.sc) or (terms[cl.term].Q not in xset)
            if drop:
                off = model.offsets[R][ci]
                for j in range(cl.group.rank):
                    e = np.zeros(K.rank, dtype=np.int64)
                    e[off + j] = 1
                    cols.append(e)
        k[R] = np.array(cols, dtype=np.int64).T.reshape(K.rank, len(cols))
    out = _coordinate_quotient(L, k, name="natural")
    out.model = model
    return out


def _coordinate_quotient(L: ExtLocality, k: dict, name: str) -> ExtLocality:
    """Quotient by coordinate blocks: keeps the surviving coordinates unchanged."""
    keep = {}
    for R in L.objects:
        K = L.kernels[R]
        G = k[R]
        killed = set(int(np.flatnonzero(G[:, j])[0]) for j in range(G.shape[1]))
        keep[R] = [i for i in range(K.rank) if i not in killed]
    kern = {R: FinAb(tuple(L.kernels[R].moduli[i] for i in keep[R])) for R in L.objects}
    for Q in L.objects:
        drop_q = [i for i in range(L.kernels[Q].rank) if i not in keep[Q]]
        if not drop_q:
            continue
        for R in L.objects:
            for phi in L.maps(Q, R):
                A = L.action(Q, phi)
                if A[np.ix_(keep[R], drop_q)].any():
                    raise NotAFunctor(f"killed block is not stable under {phi.images}")

    def kappa(phi, psi):
        return L.kappa(phi, psi)[keep[psi.source]]

    def action(R, psi):
        return L.action(R, psi)[np.ix_(keep[psi.source], keep[R])]

    def tau(R, u):
        return L.tau_vec(R, u)[keep[R]]

    out = ExtLocality(L.F, L.objects, kern, kappa, action, tau, name=name)
    out.parent = L
    out.keep = keep
    return out
