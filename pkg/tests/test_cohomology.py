import functools

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from locforge.abelian import FinAb
from locforge.cohomology import (Chain, ChainBudgetExceeded, CochainComplex, CoefficientFunctor, NotAFunctor,
                                 admissible_chains, cohomology, constant_functor, count_T_set, enumerate_chains,
                                 exterior_category, group_category, kernel_functor, parallel_arrows_category,
                                 solve_coboundary)

from conftest import CATALOG, fusion, natural

# H^0, H^1, H^2 of Ker(pi) on the exterior category over sc, and T-set sizes seen
CATALOG_H = {
    "trivial": ([(), (), ()], {1}),
    "S4": ([(2,), (), ()], {1, 3}),
    "A4": ([(2, 2), (), ()], {9}),
    "D8": ([(2,), (), ()], {1}),
    "Q8": ([(2,), (), ()], {1}),
    "SL23": ([(2,), (), ()], {9}),
    "A6": ([(2,), (), ()], {1, 3}),
    "C3xC3:S3-wreath-slice": ([(3, 3), (), ()], {64}),
}


def sign_functor():
    return CoefficientFunctor(group_category(2), [FinAb((4,))], [np.eye(1, dtype=np.int64), -np.eye(1, dtype=np.int64)])


@functools.lru_cache(maxsize=None)
def functors():
    out = {
        "parallel Z/2": constant_functor(parallel_arrows_category(), FinAb((2,))),
        "C2 Z/2": constant_functor(group_category(2), FinAb((2,))),
        "C3 Z/3+Z/9": constant_functor(group_category(3), FinAb((3, 9))),
        "C2 sign Z/4": sign_functor(),
    }
    for name in ("S4", "A4", "Q8", "C3xC3:S3-wreath-slice"):
        N = natural(name)
        out[f"ker {name}"] = kernel_functor(N, exterior_category(N.F, N.objects))
        M = N.model
        L = M.locality()
        out[f"omega {name}"] = kernel_functor(L, exterior_category(L.F, L.objects))
    return out


@functools.lru_cache(maxsize=None)
def complex_of(key):
    return CochainComplex(functors()[key])


def _faces(C, q):
    """All faces of a chain, written out from the nerve directly."""
    objs, mors = list(q.objects), list(q.morphisms)
    out = [(tuple(objs[1:]), tuple(mors[1:]))]
    for i in range(1, len(mors)):
        out.append((tuple(objs[:i] + objs[i + 1:]), tuple(mors[:i - 1] + [C.compose(mors[i], mors[i - 1])] + mors[i + 1:])))
    out.append((tuple(objs[:-1]), tuple(mors[:-1])))
    return out


@pytest.mark.parametrize("key,want", [
    ("parallel Z/2", [(2,), (2,), ()]),
    ("C2 Z/2", [(2,), (2,), (2,)]),
    ("C2 sign Z/4", [(2,), (2,), (2,)]),
])
def test_control_cohomology(key, want):
    K = complex_of(key)
    assert [cohomology(K, n).invariants for n in range(3)] == want


def test_final_object_is_acyclic():
    K = CochainComplex(constant_functor(group_category(1), FinAb((2,))))
    assert [cohomology(K, n).invariants for n in range(3)] == [(2,), (), ()]


def test_trivial_module_over_C2():
    K = CochainComplex(constant_functor(group_category(2), FinAb((4,))))
    assert [cohomology(K, n).invariants for n in range(3)] == [(4,), (2,), (2,)]


def test_control_witness_is_not_a_coboundary():
    K = complex_of("parallel Z/2")
    r = cohomology(K, 1, witnesses=True)
    assert r.witnesses
    w = np.asarray(r.witnesses[0])
    assert not K.differential(w, 1).any()
    assert solve_coboundary(K, w, 1) is None


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_cohomology(name):
    F = fusion(name)
    C = exterior_category(F, F.sc)
    assert C.check()
    K = CochainComplex(kernel_functor(natural(name), C))
    want, sizes = CATALOG_H[name]
    assert [cohomology(K, n).invariants for n in range(3)] == want
    assert [cohomology(K, n, stable=True).invariants for n in range(3)] == want
    seen = set()
    for n in range(3):
        for q in admissible_chains(F, F.sc, C, n):
            t = count_T_set(F, F.sc, C, q)
            assert t.agree and t.prime_to_p
            seen.add(t.direct)
    assert seen == sizes


def test_chain_budget():
    C = exterior_category(fusion("S4"), fusion("S4").sc)
    with pytest.raises(ChainBudgetExceeded):
        enumerate_chains(C, 2, budget=10)


def test_non_functor_rejected():
    with pytest.raises(NotAFunctor):
        CoefficientFunctor(group_category(2), [FinAb((4,))], [np.eye(1, dtype=np.int64), 2 * np.eye(1, dtype=np.int64)])


KEYS = ["parallel Z/2", "C2 Z/2", "C3 Z/3+Z/9", "C2 sign Z/4"] + \
    [f"{k} {n}" for n in ("S4", "A4", "Q8", "C3xC3:S3-wreath-slice") for k in ("ker", "omega")]


@settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(KEYS), st.integers(0, 1), st.data())
def test_d_squared_is_zero(key, n, data):
    K = complex_of(key)
    G = K.group(n)
    c = G.reduce(np.array(data.draw(st.lists(st.integers(0, 10 ** 6), min_size=G.rank, max_size=G.rank)), dtype=np.int64))
    dc = K.differential(c, n)
    assert not K.differential(dc, n + 1).any()
    # the matrix agrees with the nerve formula at a sampled chain
    chains = K.chains(n + 1)
    q = chains[data.draw(st.integers(0, len(chains) - 1))]
    vals = K.as_dict(c, n)
    Fn = K.F
    faces = _faces(K.C, q)
    total = Fn.matrices[q.morphisms[0]] @ vals[Chain(*faces[0])]
    for i, f in enumerate(faces[1:], start=1):
        total = total + (-1) ** i * vals[Chain(*f)]
    G0 = Fn.groups[q.objects[0]]
    assert np.array_equal(G0.reduce(total), K.as_dict(dc, n + 1)[q])


@settings(max_examples=1000, deadline=None)
@given(st.sampled_from(KEYS), st.data())
def test_functor_laws(key, data):
    Fn = functors()[key]
    C = Fn.C
    j = data.draw(st.integers(0, C.n_morphisms - 1))
    i = data.draw(st.sampled_from(C.out[C.target[j]]))
    G = Fn.groups[C.target[i]]
    v = G.reduce(np.array(data.draw(st.lists(st.integers(0, 10 ** 6), min_size=G.rank, max_size=G.rank)), dtype=np.int64))
    assert np.array_equal(Fn.apply(C.compose(i, j), v), Fn.apply(j, Fn.apply(i, v)))
    a = C.source[j]
    w = Fn.groups[a].reduce(np.arange(Fn.groups[a].rank) + 1)
    assert np.array_equal(Fn.apply(C.identities[a], w), w)


@pytest.mark.parametrize("key", KEYS)
def test_functor_laws_exhaustive(key):
    assert functors()[key].law_violations() == []
