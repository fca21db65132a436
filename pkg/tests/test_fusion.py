import pytest

from locforge.fusion import (FusionSystem, check_frobenius_axioms, divisibility_partition, divisibility_set,
                             divisibility_set_subtraction, ext_class, hyperfocal, ker_pi_order_bruteforce,
                             ker_pi_value, transporter_fusion)
from locforge.groups import Hom, all_injective_homs, all_subgroups, centralizer, normalizer, o_upper_p

from conftest import CATALOG, fusion, group

# (number of sc subgroups, number of F-classes, |H_F|, sorted (|Q|, |F~(P,Q)|) over sc Q)
FROZEN = {
    "trivial": (1, 1, 1, [(1, 1)]),
    "S4": (4, 7, 4, [(4, 1), (4, 1), (4, 3), (8, 1)]),
    "A4": (1, 3, 4, [(4, 3)]),
    "D8": (4, 8, 1, [(4, 1), (4, 1), (4, 1), (8, 1)]),
    "Q8": (4, 6, 1, [(4, 1), (4, 1), (4, 1), (8, 1)]),
    "SL23": (4, 4, 8, [(4, 3), (4, 3), (4, 3), (8, 3)]),
    "A6": (4, 6, 8, [(4, 1), (4, 3), (4, 3), (8, 1)]),
    "C3xC3:S3-wreath-slice": (1, 4, 9, [(9, 8)]),
}

# invariants of Z(Q cap P) at each sc Q, sorted by (|Q|, invariants)
KER_PI = {
    "S4": [(4, (2, 2)), (4, (2, 2, 2, 2, 2, 2)), (4, (4,)), (8, (2, 2, 2))],
    "A6": [(4, (2, 2, 2, 2, 2, 2)), (4, (2, 2, 2, 2, 2, 2)), (4, (4,)), (8, (2, 2, 2, 2, 2))],
    "SL23": [(4, (4, 4, 4))] * 3 + [(8, (2, 2, 2))],
    "C3xC3:S3-wreath-slice": [(9, (3,) * 16)],
}


@pytest.mark.parametrize("name", CATALOG)
def test_frozen_invariants(name):
    F = fusion(name)
    nsc, ncls, h, ext = FROZEN[name]
    assert len(F.sc) == nsc
    assert len(F.classes) == ncls
    assert hyperfocal(F).order == h
    assert sorted((Q.order, len(F.ext(F.P, Q))) for Q in F.sc) == ext


@pytest.mark.parametrize("name", CATALOG)
def test_selfcentralizing_against_group(name):
    F, G = fusion(name), group(name)
    P, W = F.P, G.whole
    want = []
    for Q in all_subgroups(P):
        conj = [Q.conjugate(g) for g in W.elems]
        if all(centralizer(P, R).le(R) for R in conj if R.le(P)):
            want.append(Q)
    assert sorted(want) == sorted(F.sc)


@pytest.mark.parametrize("name", CATALOG)
def test_hyperfocal_is_P_cap_Op(name):
    F, G = fusion(name), group(name)
    assert hyperfocal(F).set == F.P.set & o_upper_p(G.whole, F.p).set


@pytest.mark.parametrize("name", CATALOG)
def test_fully_normalized_maximizes_normalizer(name):
    F = fusion(name)
    for cls in F.classes:
        best = max(normalizer(F.P, Q).order for Q in cls)
        for Q in cls:
            assert F.is_fully_normalized(Q) == (normalizer(F.P, Q).order == best)


@pytest.mark.parametrize("name", CATALOG)
def test_axioms_hold(name):
    rep = check_frobenius_axioms(fusion(name))
    assert rep.passed, rep.witnesses[:3]


@pytest.mark.parametrize("name", ["S4", "A4", "A6", "SL23"])
def test_removing_a_morphism_fails_with_witness(name):
    F = fusion(name)
    phi = next(h for Q in F.subgroups if Q.order > 1 for h in F.homs[Q] if h.images != Q.elems)
    rep = check_frobenius_axioms(F.without(phi))
    assert not rep.passed and rep.witnesses
    assert all("check" in w for w in rep.witnesses)


def test_extra_automorphism_breaks_sylow():
    # D8 with every automorphism of V4 added is not saturated
    F = fusion("D8")
    homs = {Q: list(v) for Q, v in F.homs.items()}
    V = next(Q for Q in F.subgroups if Q.order == 4 and all(F.group.element_order(x) <= 2 for x in Q.elems))
    for Q in F.subgroups:
        if Q.le(V):
            homs[Q] = all_injective_homs(Q, F.P)
    bad = FusionSystem(F.P, 2, homs)
    rep = check_frobenius_axioms(bad)
    assert not rep.passed


def test_transporter_system_on_p_group():
    F = fusion("D8")
    T = transporter_fusion(F.P, 2)
    assert check_frobenius_axioms(T).passed
    assert all(len(T.homs[Q]) == len(F.homs[Q]) for Q in F.subgroups)


@pytest.mark.parametrize("name", CATALOG)
def test_ker_pi_order_two_routes(name):
    F = fusion(name)
    for Q in F.sc:
        assert ker_pi_value(F, F.sc, Q).group.order == ker_pi_order_bruteforce(F, F.sc, Q)


@pytest.mark.parametrize("name", list(KER_PI))
def test_ker_pi_invariants_frozen(name):
    F = fusion(name)
    got = sorted((Q.order, ker_pi_value(F, F.sc, Q).group.invariants()) for Q in F.sc)
    assert got == KER_PI[name]


@pytest.mark.parametrize("name", CATALOG)
def test_divisibility_two_definitions(name):
    F = fusion(name)
    for Q in F.sc:
        for R in F.sc:
            for a in F.ext(R, Q):
                for T in F.sc:
                    assert set(divisibility_set(F, T, Q, a)) == set(divisibility_set_subtraction(F, T, Q, a))


@pytest.mark.parametrize("name", CATALOG)
def test_partition_and_p_prime(name):
    F = fusion(name)
    for Q in F.sc:
        assert len(F.ext(F.P, Q)) % F.p
        for R in F.sc:
            for a in F.ext(R, Q):
                for T in F.sc:
                    parts = divisibility_partition(F, T, a)
                    flat = [b for _, _, block in parts for b in block]
                    assert len(flat) == len(set(flat))
                    assert sorted(flat) == sorted(F.ext(T, Q))


def test_identity_divides_only_itself_at_P():
    F = fusion("S4")
    a = ext_class(Hom(F.P, F.P, F.P.elems))
    assert divisibility_set(F, F.P, F.P, a) == F.ext(F.P, F.P)
