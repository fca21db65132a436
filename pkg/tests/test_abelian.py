import itertools
from functools import reduce
from math import gcd

import numpy as np
from hypothesis import given, settings, strategies as st

from locforge import _kernels
from locforge.abelian import (FinAb, check_hom, factor, image_order, quotient_invariants, smith_invariants, smith_normal_form,
                              solve, solve_mod, span_order)

moduli = st.lists(st.sampled_from([2, 3, 4, 8, 9]), min_size=1, max_size=3).map(tuple)


def _span(G, A):
    """Subgroup generated by the columns of G, by closure."""
    seen = {A.key(A.zero())}
    frontier = [A.zero()]
    gens = [A.reduce(G[:, j]) for j in range(G.shape[1])]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = A.reduce(v + g)
                if A.key(w) not in seen:
                    seen.add(A.key(w))
                    nxt.append(w)
        frontier = nxt
    return seen


def test_factor():
    assert factor(360) == [(2, 3), (3, 2), (5, 1)]
    assert factor(1) == []


def test_smith_form_known():
    assert smith_invariants([[2, 4, 4], [-6, 6, 12], [10, -4, -16]]) == (2, 6, 12)
    assert smith_invariants([[1, 0], [0, 0]]) == (0,)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.lists(st.integers(-6, 6), min_size=3, max_size=3), min_size=3, max_size=3))
def test_smith_form_is_equivalent(rows):
    A = np.array(rows, dtype=object)
    S, U, V = smith_normal_form(rows)
    assert (np.array(U, dtype=object) @ A @ np.array(V, dtype=object) == np.array(S, dtype=object)).all()
    diag = [abs(S[i][i]) for i in range(3)]
    for a, b in zip(diag, diag[1:]):
        assert b == 0 or (a != 0 and b % a == 0)
    det = round(abs(np.linalg.det(np.array(rows, dtype=float))))
    assert reduce(lambda x, y: x * y, diag, 1) == det


@settings(max_examples=300, deadline=None)
@given(moduli, st.integers(0, 3), st.data())
def test_span_and_quotient_against_closure(mods, k, data):
    A = FinAb(mods)
    G = np.array(data.draw(st.lists(st.lists(st.integers(0, 71), min_size=k, max_size=k),
                                    min_size=A.rank, max_size=A.rank)), dtype=np.int64).reshape(A.rank, k)
    span = _span(G, A)
    assert span_order(G, A) == len(span)
    q = quotient_invariants(G, A)
    assert reduce(lambda x, y: x * y, q, 1) * len(span) == A.order


@settings(max_examples=300, deadline=None)
@given(moduli, moduli, st.data())
def test_solve_against_enumeration(smods, tmods, data):
    src, tgt = FinAb(smods), FinAb(tmods)
    raw = np.array(data.draw(st.lists(st.integers(0, 71), min_size=src.rank * tgt.rank,
                                      max_size=src.rank * tgt.rank)), dtype=np.int64).reshape(tgt.rank, src.rank)
    # entry (i, j) must kill s_j in Z/t_i
    step = np.array([[t // gcd(t, s) for s in smods] for t in tmods], dtype=np.int64)
    M = raw * step
    assert check_hom(M, src, tgt)
    image = {tgt.key(tgt.reduce(M @ x)) for x in src.elements()}
    assert image_order(M, src, tgt) == len(image)
    b = tgt.reduce(np.array(data.draw(st.lists(st.integers(0, 71), min_size=tgt.rank, max_size=tgt.rank))))
    x, K = solve(M, b, src, tgt)
    if tgt.key(b) in image:
        assert x is not None and np.array_equal(tgt.reduce(M @ x), b)
    else:
        assert x is None


def test_solve_mod_composite():
    M = np.array([[2, 3], [4, 1]])
    x, K = solve_mod(M, np.array([1, 5]), 12)
    assert x is not None and not ((M @ x - np.array([1, 5])) % 12).any()
    for j in range(K.shape[1]):
        assert not ((M @ K[:, j]) % 12).any()


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.sampled_from([(2, 1), (2, 3), (3, 2), (5, 1)]), st.data())
def test_smith_mod_backends_agree(m, k, pa, data):
    p, a = pa
    n = p ** a
    A0 = np.array(data.draw(st.lists(st.integers(0, n - 1), min_size=m * k, max_size=m * k)), dtype=np.int64).reshape(m, k)
    outs = []
    for fn in (_kernels.smith_mod_inplace, _kernels.smith_mod_inplace_numpy):
        A, U, V = A0.copy(), np.eye(m, dtype=np.int64), np.eye(k, dtype=np.int64)
        r, vals = fn(A, U, V, p, a)
        assert not ((U @ A0 @ V - A) % n).any()
        outs.append(sorted(int(v) for v in vals[:r]))
    assert outs[0] == outs[1]


def test_elements_enumeration():
    A = FinAb((2, 4))
    els = list(A.elements())
    assert len(els) == 8 and len({A.key(v) for v in els}) == 8
    assert A.invariants() == (2, 4)
    assert FinAb((2, 3)).invariants() == (6,)


def test_direct_sum_orders():
    for mods in itertools.product([2, 3, 4], repeat=2):
        assert FinAb(mods).order == mods[0] * mods[1]
