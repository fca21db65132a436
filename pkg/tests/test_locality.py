from collections import Counter
from math import gcd

import numpy as np
import pytest

from locforge.abelian import FinAb, direct_sum
from locforge.fusion import ker_pi_value
from locforge.locality import (NotEquivariant, c_tilde_map, check_functor, find_locality_isomorphism,
                               group_locality, natural_locality, nsc_subfunctor, s1_projection,
                               transporter_locality)

from conftest import CATALOG, SMALL, fusion, group, natural, omega_model


def _order_profile_finab(A: FinAb) -> Counter:
    out = Counter()
    for v in A.elements():
        k = 1
        for x, m in zip(A.reduce(v), A.moduli):
            o = m // gcd(int(x), m)
            k = k * o // gcd(k, o)
        out[k] += 1
    return out


def _order_profile_quotient(pairs: list, sub: set, mul) -> Counter:
    """Element orders of ab(N/S): N as a list of pairs, quotient by S and commutators."""
    K = set(sub)
    inv = {}
    for x in pairs:
        for y in pairs:
            if mul(x, y) == (0, 0):
                inv[x] = y
    gens = {mul(mul(x, y), mul(inv[x], inv[y])) for x in pairs for y in pairs} | K
    K = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = mul(x, g)
                if y not in K:
                    K.add(y)
                    nxt.append(y)
        frontier = nxt
    cosets = {}
    for x in pairs:
        cosets.setdefault(min(mul(x, k) for k in K), x)
    out = Counter()
    for x in cosets.values():
        k, w = 1, x
        while w not in K:
            w = mul(w, x)
            k += 1
        out[k] += 1
    return out


@pytest.mark.parametrize("name", CATALOG)
def test_group_locality_is_perfect(name):
    F, G = fusion(name), group(name)
    L = group_locality(G, F.p, F=F)
    assert L.check_perfect().passed
    E = L.to_ext()
    rep = E.check_perfect()
    assert rep.passed, rep.witnesses[:3]


@pytest.mark.parametrize("name", ["S4", "A4", "Q8"])
def test_transporter_locality(name):
    # realizes F_P, which is coarser than F whenever F has outer fusion
    F = fusion(name)
    L = transporter_locality(F.P, F.sc, p=F.p)
    assert L.check().passed


@pytest.mark.parametrize("name", SMALL)
def test_omega_locality_structure(name):
    L = omega_model(name).locality()
    rep = L.check()
    for key in ("divisible", "coherent", "p_coherent", "cocycle", "action_functor", "tau_functor"):
        assert rep.checks[key], (key, rep.witnesses[:3])


@pytest.mark.parametrize("name", SMALL)
def test_omega_kernel_splits(name):
    """Ker(pi) of L^Omega is Z(Q cap P) times the non-selfcentralizing part."""
    F = fusion(name)
    M = omega_model(name)
    grp = F.group

    def mul(x, y):
        return (int(grp.mul[x[0], y[0]]), int(grp.mul[x[1], y[1]]))

    for Q in F.sc:
        nsc = [c.group for c in M.classes[Q] if not c.sc]
        for c in M.classes[Q]:
            if c.sc:
                assert c.multiplicity == 1
                assert c.group.order == c.T.center.order
            elif c.group.order <= 64:
                assert _order_profile_quotient(c.normalizer, set(c.stabilizer), mul) == _order_profile_finab(c.group)
        want, _ = direct_sum([ker_pi_value(F, F.sc, Q).group] + nsc)
        assert M.kernels[Q].invariants() == want.invariants()


@pytest.mark.parametrize("name", SMALL)
def test_transfer_and_conjugation_routes_agree(name):
    M = omega_model(name)
    L = M.locality()
    for R in M.objects:
        for T in M.objects:
            for psi in L.maps(R, T):
                A1 = c_tilde_map(M, R, psi, "conjugation")
                A2 = c_tilde_map(M, R, psi, "transfer")
                mods = np.array(M.kernels[T].moduli, dtype=np.int64).reshape(-1, 1)
                assert not ((A1 - A2) % mods).any()


@pytest.mark.parametrize("name", ["S4", "A4", "C3xC3:S3-wreath-slice"])
def test_s1_projection_roundtrip(name):
    M = omega_model(name)
    for R in M.objects:
        K = M.kernels[R]
        for ci, cl in enumerate(M.classes[R]):
            for e in cl.group.basis():
                c = M.kernel_lift(R, ci, e)
                v = s1_projection(M, R, c)
                want = K.zero()
                want[M.offsets[R][ci]: M.offsets[R][ci] + cl.group.rank] = e
                assert np.array_equal(v, K.reduce(want))
        lifts = M.basis_lifts(R)
        if len(lifts) >= 2:
            a, b = lifts[0], lifts[-1]
            assert np.array_equal(s1_projection(M, R, a[b]), K.reduce(s1_projection(M, R, a) + s1_projection(M, R, b)))


def test_s1_projection_rejects_non_equivariant():
    M = omega_model("S4")
    R = M.objects[0]
    c = np.arange(M.points.size)
    c[[0, 1]] = c[[1, 0]]
    with pytest.raises(NotEquivariant):
        s1_projection(M, R, c)


@pytest.mark.parametrize("name", SMALL)
def test_nsc_subfunctor_is_stable(name):
    M = omega_model(name)
    L = M.locality()
    gens = nsc_subfunctor(M)
    for R in M.objects:
        for T in M.objects:
            for psi in L.maps(R, T):
                A = L.action(R, psi)
                start = M.sc_rank(T)
                img = A @ gens[R]
                mods = np.array(M.kernels[T].moduli, dtype=np.int64).reshape(-1, 1)
                assert not (img[:start] % mods[:start]).any()


@pytest.mark.parametrize("name", CATALOG)
def test_natural_locality(name):
    F = fusion(name)
    N = natural(name)
    rep = N.check()
    assert rep.passed, rep.witnesses[:3]
    for Q in N.objects:
        assert N.kernels[Q].invariants() == ker_pi_value(F, F.sc, Q).group.invariants()


@pytest.mark.parametrize("name", ["S4", "A6"])
def test_natural_locality_on_smaller_base(name):
    F = fusion(name)
    big = max(Q.order for Q in F.sc)
    X = [Q for Q in F.sc if Q.order == big]
    N = natural_locality(F, X)
    assert N.check().passed
    for Q in X:
        assert N.kernels[Q].invariants() == ker_pi_value(F, X, Q).group.invariants()


@pytest.mark.parametrize("name", ["S4", "Q8", "C3xC3:S3-wreath-slice"])
def test_group_locality_self_isomorphism(name):
    F, G = fusion(name), group(name)
    E = group_locality(G, F.p, F=F).to_ext()
    f = find_locality_isomorphism(E, E)
    assert f is not None and check_functor(f)
