import random

import numpy as np
import pytest

from locforge.fusion import XNotSelfcentralizing
from locforge.groups import centralizer, normalizer, o_upper_p
from locforge.locality import mkey
from locforge.perfect import (NotFullyNormalized, build_perfect_locality, compare_with_oracle, functorial_section,
                              localizer, localizer_isomorphism, localizer_of_locality, section_difference,
                              section_violations, seed_independence)

from conftest import CATALOG, SMALL, fusion, group, perfect

# |N_G(Q) / O^p(C_G(Q))| at the fully normalized sc subgroups, sorted
LOCALIZER_ORDERS = {
    "trivial": [1],
    "S4": [8, 8, 8, 24],
    "A4": [12],
    "D8": [8, 8, 8, 8],
    "Q8": [8, 8, 8, 8],
    "SL23": [8, 8, 8, 24],
    "A6": [8, 8, 24, 24],
    "C3xC3:S3-wreath-slice": [72],
}


def _richest_m_bar(name):
    """The intermediate quotient with the largest kernels, where sections have room to differ."""
    steps = perfect(name).steps
    return max((s.m_bar for s in steps), key=lambda L: sum(L.kernels[R].order for R in L.objects))


def _fn_sc(F):
    return [Q for Q in F.sc if F.is_fully_normalized(Q)]


@pytest.mark.parametrize("name", CATALOG)
def test_build_is_perfect_and_matches_group(name):
    res = perfect(name)
    rep = res.check()
    assert rep.passed, rep.witnesses[:3]
    for step in res.steps:
        assert step.routes_agree
        assert all(step.checks.values()), step.checks
    assert compare_with_oracle(res)["isomorphic"]


@pytest.mark.parametrize("name", ["S4", "Q8", "C3xC3:S3-wreath-slice"])
def test_seeds_give_naturally_isomorphic_results(name):
    out = seed_independence(fusion(name), [0, 1, 2])
    assert out["isomorphic"] == [True, True]
    assert out["natural"] == [True, True]


@pytest.mark.parametrize("name", ["A4", "SL23"])
def test_seeded_build_with_dual_route(name):
    res = perfect(name, 5)
    assert res.check().passed
    assert all(s.routes_agree for s in res.steps)


@pytest.mark.parametrize("name", CATALOG)
def test_localizer_orders_and_sequence(name):
    F, G = fusion(name), group(name)
    W = G.whole
    orders = []
    for Q in _fn_sc(F):
        loc = localizer(F, Q)
        assert all(loc.check().values())
        want = normalizer(W, Q).order // o_upper_p(centralizer(W, Q), F.p).order
        assert loc.order == want
        assert localizer_of_locality(perfect(name).locality, Q) == want
        orders.append(loc.order)
    assert sorted(orders) == LOCALIZER_ORDERS[name]


@pytest.mark.parametrize("name", ["S4", "A6", "C3xC3:S3-wreath-slice"])
def test_localizer_independent_of_representatives(name):
    F = fusion(name)
    for Q in _fn_sc(F):
        A, B = localizer(F, Q), localizer(F, Q, seed=11)
        assert localizer_isomorphism(A, B) is not None


def test_localizer_needs_fully_normalized():
    F = fusion("S4")
    bad = [Q for Q in F.subgroups if not F.is_fully_normalized(Q)]
    with pytest.raises(NotFullyNormalized):
        localizer(F, bad[0])


@pytest.mark.parametrize("name", ["S4", "A4", "SL23", "C3xC3:S3-wreath-slice"])
def test_base_P_gives_the_localizer(name):
    F = fusion(name)
    res = build_perfect_locality(F, [F.P])
    assert res.check().passed
    assert localizer_of_locality(res.locality, F.P) == localizer(F, F.P).order
    assert compare_with_oracle(res)["isomorphic"]


@pytest.mark.parametrize("name", SMALL)
def test_sections_unique_up_to_conjugation(name):
    Mb = _richest_m_bar(name)
    s1 = functorial_section(Mb, random.Random(1))
    s2 = functorial_section(Mb, random.Random(2))
    assert not section_violations(Mb, s1.lifts)
    assert not section_violations(Mb, s2.lifts)
    z = section_difference(Mb, s1.lifts, s2.lifts)
    assert z is not None
    for Q in Mb.objects:
        for R in Mb.objects:
            for phi in Mb.maps(Q, R):
                d = Mb.action(Q, phi) @ z[Q.elems] - z[R.elems]
                assert np.array_equal(Mb.kernels[R].reduce(d), Mb.kernels[R].reduce(s2.lifts[mkey(phi)] - s1.lifts[mkey(phi)]))


def test_section_violations_detects_a_broken_lift():
    Mb = _richest_m_bar("S4")
    s = functorial_section(Mb)
    lifts = dict(s.lifts)
    R = next(R for R in Mb.objects if Mb.kernels[R].rank)
    phi = next(h for h in Mb.F.homs[R] if h.images != R.elems)
    e = Mb.kernels[R].zero()
    e[0] = 1
    lifts[mkey(phi)] = Mb.kernels[R].reduce(lifts[mkey(phi)] + e)
    assert section_violations(Mb, lifts)


def test_rejects_bad_objects():
    F = fusion("S4")
    nsc = [Q for Q in F.subgroups if Q not in set(F.sc)]
    with pytest.raises(XNotSelfcentralizing):
        build_perfect_locality(F, nsc[:1])
    small = [Q for Q in F.sc if Q.order == 4][:1]
    with pytest.raises(ValueError):
        build_perfect_locality(F, small)
