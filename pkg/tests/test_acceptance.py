"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Every check is exact. Time limits apply per catalog system unless noted.
"""
import time

import numpy as np
import pytest

from locforge.abelian import FinAb, direct_sum
from locforge.biset import fixed_points, natural_basic_set, natural_F_basic_set, restrict_orbits
from locforge.catalog import catalog_fusion, catalog_group, names
from locforge.cohomology import (CochainComplex, admissible_chains, cohomology, constant_functor, count_T_set,
                                 exterior_category, group_category, kernel_functor, parallel_arrows_category)
from locforge.fusion import (check_frobenius_axioms, divisibility_partition, divisibility_set,
                             divisibility_set_subtraction, ext_class, is_selfcentralizing, ker_pi_value)
from locforge.locality import OmegaModel, natural_locality
from locforge.perfect import (build_perfect_locality, compare_with_oracle, localizer, localizer_of_locality,
                              seed_independence)

CATALOG = names()


@pytest.fixture
def report(capsys):
    def emit(number, title, failures, seconds):
        line = f"[criterion {number}] {'PASS' if not failures else 'FAIL'}  {title}  ({seconds:.1f}s)"
        with capsys.disabled():
            print("\n" + line)
            for f in failures[:5]:
                print(f"    {f}")
        assert not failures, failures[:5]
    return emit


def timed(limit, label, failures, fn):
    t = time.perf_counter()
    fn()
    dt = time.perf_counter() - t
    if dt > limit:
        failures.append(f"{label}: {dt:.1f}s over the {limit}s limit")
    return dt


def test_criterion_1_axioms(report):
    failures = []
    t0 = time.perf_counter()
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            rep = check_frobenius_axioms(F)
            if not rep.passed:
                failures.append(f"{name}: {rep.witnesses[:2]}")
            # mutated fixtures: drop one morphism at each non-identity F-class representative
            mutated = 0
            for cls in F.classes:
                Q = cls[0]
                phi = next((h for h in F.homs[Q] if h.images != Q.elems), None)
                if phi is None:
                    continue
                bad = check_frobenius_axioms(F.without(phi))
                mutated += 1
                if bad.passed or not bad.witnesses:
                    failures.append(f"{name}: mutation at |Q|={Q.order} not detected")
        timed(10, name, failures, run)
    report(1, "axioms hold on the catalog, mutations fail with witnesses", failures, time.perf_counter() - t0)


def test_criterion_2_fixed_points(report):
    failures = []
    t0 = time.perf_counter()
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            om = natural_basic_set(F, F.sc)
            for Q in F.sc:
                for phi in F.homs[Q]:
                    got = fixed_points(om, Q, phi)
                    if got != Q.center.order:
                        failures.append(f"{name}: |Q|={Q.order} phi={phi.images} fixed={got}")
            orbits = om.total_size // F.P.order
            if (orbits - len(F.ext(F.P, F.P))) % F.p:
                failures.append(f"{name}: {orbits} orbits vs |F~(P)|={len(F.ext(F.P, F.P))}")
        timed(30, name, failures, run)
    report(2, "natural sc biset: fixed points |Z(Q)|, orbit count congruence", failures, time.perf_counter() - t0)


def test_criterion_3_orbit_types(report):
    failures = []
    t0 = time.perf_counter()
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            P, grp = F.P, F.group
            pts = natural_F_basic_set(F).materialize()
            for Q in F.sc:
                present = set()
                for c in restrict_orbits(pts, Q):
                    if not (is_selfcentralizing(F, c.T) and len(c.stabilizer) == c.T.order):
                        continue
                    if c.multiplicity > 1:
                        failures.append(f"{name}: multiplicity {c.multiplicity} at |T|={c.T.order}")
                    Z = c.T.center
                    if c.aut_order != Z.order or _quotient_exponent(c, grp) != _exponent(Z, grp):
                        failures.append(f"{name}: Aut of orbit at |T|={c.T.order} is not Z(T)")
                    for a in Q.elems:
                        for b in P.elems:
                            present.add(frozenset((int(grp.conj_table[a, x]), int(grp.conj_table[b, y]))
                                                  for x, y in c.stabilizer))
                for T in F.sc:
                    allowed = set(divisibility_set(F, Q, T, F.inclusion(T, P)))
                    for eta in F.hom(Q, T):
                        there = frozenset((eta(t), t) for t in T.elems) in present
                        if there != (ext_class(eta) in allowed):
                            failures.append(f"{name}: presence mismatch at |Q|={Q.order} |T|={T.order}")
        timed(30, name, failures, run)
    report(3, "sc orbit types: multiplicity <= 1, presence by divisibility, Aut = Z(T)", failures,
           time.perf_counter() - t0)


def _exponent(Z, grp):
    e = 1
    for z in Z.elems:
        e = np.lcm(e, grp.element_order(z))
    return int(e)


def _quotient_exponent(c, grp):
    S = set(c.stabilizer)
    e = 1
    for n in c.normalizer:
        k, x = 1, n
        while x not in S:
            x = (int(grp.mul[x[0], n[0]]), int(grp.mul[x[1], n[1]]))
            k += 1
        e = np.lcm(e, k)
    return int(e)


def test_criterion_4_divisibility(report):
    failures = []
    t0 = time.perf_counter()
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            for Q in F.sc:
                if len(F.ext(F.P, Q)) % F.p == 0:
                    failures.append(f"{name}: p divides |F~(P,Q)| at |Q|={Q.order}")
                for R in F.sc:
                    for a in F.ext(R, Q):
                        for T in F.sc:
                            if set(divisibility_set(F, T, Q, a)) != set(divisibility_set_subtraction(F, T, Q, a)):
                                failures.append(f"{name}: criterion and subtraction differ")
                            flat = [b for _, _, block in divisibility_partition(F, T, a) for b in block]
                            if len(flat) != len(set(flat)) or sorted(flat) != sorted(F.ext(T, Q)):
                                failures.append(f"{name}: partition fails at |Q|={Q.order} |T|={T.order}")
        timed(60, name, failures, run)
    report(4, "divisor partition, p-prime exterior counts, two definitions agree", failures, time.perf_counter() - t0)


def test_criterion_5_omega_locality(report):
    failures = []
    t0 = time.perf_counter()
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            M = OmegaModel(F, natural_F_basic_set(F), F.sc)
            rep = M.locality().check()
            for key in ("divisible", "coherent", "p_coherent"):
                if not rep.checks[key]:
                    failures.append(f"{name}: {key} fails {rep.witnesses[:1]}")
            for Q in F.sc:
                nsc = [c.group for c in M.classes[Q] if not c.sc]
                want, _ = direct_sum([ker_pi_value(F, F.sc, Q).group] + nsc)
                if M.kernels[Q].invariants() != want.invariants():
                    failures.append(f"{name}: kernel {M.kernels[Q].invariants()} != {want.invariants()}")
        timed(60, name, failures, run)
    report(5, "L^Omega divisible, coherent, p-coherent; kernel Z(Q cap P) x nsc part", failures,
           time.perf_counter() - t0)


def test_criterion_6_vanishing(report):
    failures = []
    t0 = time.perf_counter()
    K = CochainComplex(constant_functor(parallel_arrows_category(), FinAb((2,))))
    if cohomology(K, 1).invariants != (2,):
        failures.append("control H^1 is not Z/2")
    K = CochainComplex(constant_functor(group_category(1), FinAb((2,))))
    if any(cohomology(K, n).invariants for n in (1, 2)):
        failures.append("final-object control is not acyclic")
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            N = natural_locality(F)
            C = exterior_category(F, F.sc)
            Kx = CochainComplex(kernel_functor(N, C))
            for n in (1, 2):
                r = cohomology(Kx, n)
                if not r.vanishes:
                    failures.append(f"{name}: H^{n} = {r.invariants}")
            for n in (0, 1, 2):
                for q in admissible_chains(F, F.sc, C, n):
                    t = count_T_set(F, F.sc, C, q)
                    if not (t.agree and t.prime_to_p):
                        failures.append(f"{name}: T-set {t} at chain {q}")
        timed(120, name, failures, run)
    report(6, "H^1 = H^2 = 0 on the catalog, control Z/2, T-set counts prime to p", failures,
           time.perf_counter() - t0)


def test_criterion_7_perfect(report):
    failures = []
    t0 = time.perf_counter()
    for name in CATALOG:
        def run():
            F = catalog_fusion(name)
            res = build_perfect_locality(F)
            rep = res.check()
            if not rep.passed:
                failures.append(f"{name}: not perfect {rep.witnesses[:1]}")
            for Q in F.sc:
                if F.is_fully_normalized(Q):
                    loc = localizer(F, Q)
                    if not all(loc.check().values()) or loc.order != localizer_of_locality(res.locality, Q):
                        failures.append(f"{name}: localizer sequence fails at |Q|={Q.order}")
            if not compare_with_oracle(res, catalog_group(name))["isomorphic"]:
                failures.append(f"{name}: not isomorphic to the group locality")
            out = seed_independence(F, [0, 1, 2])
            if not out["all"]:
                failures.append(f"{name}: seeds disagree {out}")
        limit = 300 if catalog_fusion(name).P.order <= 8 else 1800
        timed(limit, name, failures, run)
    report(7, "perfect locality: perfect, localizers, group oracle, seed independence", failures,
           time.perf_counter() - t0)


def test_criterion_8_simplicial_and_functor_laws(report):
    failures = []
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    functors = [constant_functor(parallel_arrows_category(), FinAb((2,))),
                constant_functor(group_category(3), FinAb((3, 9)))]
    for name in CATALOG:
        F = catalog_fusion(name)
        N = natural_locality(F)
        functors.append(kernel_functor(N, exterior_category(F, F.sc)))
        res = build_perfect_locality(F)
        functors.append(kernel_functor(res.locality, exterior_category(F, res.objects)))
    d_samples = law_samples = 0
    per = 1000 // len(functors) + 1
    for Fn in functors:
        K = CochainComplex(Fn)
        C = Fn.C
        for _ in range(per):
            n = int(rng.integers(0, 2))
            G = K.group(n)
            c = G.reduce(rng.integers(0, 10 ** 6, size=G.rank))
            if K.differential(K.differential(c, n), n + 1).any():
                failures.append(f"d o d != 0 on {C.name} degree {n}")
            d_samples += 1
            j = int(rng.integers(0, C.n_morphisms))
            i = int(rng.choice(C.out[C.target[j]]))
            A = Fn.groups[C.target[i]]
            v = A.reduce(rng.integers(0, 10 ** 6, size=A.rank))
            if not np.array_equal(Fn.apply(C.compose(i, j), v), Fn.apply(j, Fn.apply(i, v))):
                failures.append(f"composition law fails on {C.name}")
            B = Fn.groups[C.source[j]]
            w = B.reduce(rng.integers(0, 10 ** 6, size=B.rank))
            if not np.array_equal(Fn.apply(C.identities[C.source[j]], w), w):
                failures.append(f"identity law fails on {C.name}")
            law_samples += 1
    if d_samples < 1000 or law_samples < 1000:
        failures.append(f"only {d_samples} / {law_samples} samples")
    report(8, f"d o d = 0 ({d_samples} samples) and functor laws ({law_samples} samples)", failures,
           time.perf_counter() - t0)
