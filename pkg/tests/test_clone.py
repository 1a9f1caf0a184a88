import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamecon.clone import (PermGroup, PolyTable, induced_algebra, pol_perm_group,
                           restricted_pol, twin_group)
from tamecon.congruence import Partition, con_all
from tamecon.core import AlgebraError

from conftest import random_algebra


def tables(polys):
    return {p.values for p in polys}


def naive_pol(A, U, k):
    """Polynomial restrictions by iterating operations on explicit maps U^k -> A."""
    pts = list(itertools.product(U, repeat=k))
    funcs = {tuple(p[j] for p in pts) for j in range(k)}
    funcs |= {(c,) * len(pts) for c in range(A.size)}
    while True:
        new = set()
        cur = list(funcs)
        for op in A.ops:
            for args in itertools.product(cur, repeat=op.arity):
                new.add(tuple(op(*[a[i] for a in args]) for i in range(len(pts))))
        if new <= funcs:
            return funcs
        funcs |= new


def test_semilattice_unary(alg):
    assert tables(restricted_pol(alg("s2"), (0, 1), 1)) == {(0, 1), (0, 0), (1, 1)}


def test_boolean_ternary_complete(alg):
    polys = restricted_pol(alg("b2"), (0, 1), 3)
    assert len(polys) == 256
    assert tables(polys) == set(itertools.product((0, 1), repeat=8))


def test_flip_unary(alg):
    assert tables(restricted_pol(alg("zflip"), (0, 1), 1)) == {(0, 1), (1, 0), (0, 0), (1, 1)}


def test_order_is_deterministic(alg):
    vals = [p.values for p in restricted_pol(alg("z4"), (0, 2), 2)]
    assert vals == sorted(vals)


@pytest.mark.parametrize("name,U,k", [("z4", (0, 2), 2), ("l2", (0, 1), 2), ("zflip", (0, 1), 2),
                                      ("z4", (1, 3), 1), ("s2", (0, 1), 3)])
def test_against_naive_generation(alg, name, U, k):
    A = alg(name)
    assert tables(restricted_pol(A, U, k)) == naive_pol(A, U, k)


@pytest.mark.parametrize("name", ["z4", "b2", "zflip", "set3", "l2"])
@pytest.mark.parametrize("k", [1, 2])
def test_restriction_commutes(alg, name, k):
    A = alg(name)
    full = restricted_pol(A, range(A.size), k)
    for r in range(1, A.size):
        for U in itertools.combinations(range(A.size), r):
            pts_full = list(itertools.product(range(A.size), repeat=k))
            keep = [i for i, p in enumerate(pts_full) if set(p) <= set(U)]
            restricted = {tuple(f.values[i] for i in keep) for f in full}
            assert restricted == tables(restricted_pol(A, U, k))


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_restriction_commutes_random(seed):
    A = random_algebra(seed, 3, (2,))
    full = restricted_pol(A, range(3), 1)
    assert {f.values[:2] for f in full} == tables(restricted_pol(A, (0, 1), 1))


def test_polytable_total():
    with pytest.raises(AlgebraError):
        PolyTable((0, 1), 2, (0, 1, 1))
    t = PolyTable((0, 2), 2, (0, 2, 2, 0))
    assert t(2, 0) == 2 and t.depends_on() == [0, 1]
    assert PolyTable((0, 1), 2, (0, 0, 1, 1)).depends_on() == [0]


def test_induced_semilattice_has_meet(alg):
    B = induced_algebra(alg("s2"), (0, 1))
    meet = np.array([[0, 0], [0, 1]])
    assert any(op.arity == 2 and np.array_equal(op.table, meet) for op in B.ops)


def test_induced_z4_has_malcev(alg):
    B = induced_algebra(alg("z4"), (0, 2))
    # labels 0,2 become 0,1; x - y + z mod 4 restricted, i.e. xor
    m = np.array([[[(x - y + z) % 2 for z in range(2)] for y in range(2)] for x in range(2)])
    assert any(op.arity == 3 and np.array_equal(op.table, m) for op in B.ops)


def test_induced_flip_essentially_unary(alg):
    B = induced_algebra(alg("zflip"), (0, 1))
    for op in B.ops:
        dom = tuple(range(B.size))
        assert len(PolyTable(dom, op.arity, tuple(op.flat())).depends_on()) <= 1


def test_perm_groups(alg):
    assert pol_perm_group(alg("s2"), (0, 1)).elements == [(0, 1)]
    assert pol_perm_group(alg("zflip"), (0, 1)).elements == [(0, 1), (1, 0)]
    assert pol_perm_group(alg("z4"), (0, 2)).elements == [(0, 2), (2, 0)]


def test_twin_examples(alg):
    top2 = Partition.top(2)
    assert twin_group(alg("zflip"), (0, 1), top2).elements == [(0, 1)]
    assert twin_group(alg("z4"), (0, 2), Partition.top(4)).elements == [(0, 2), (2, 0)]
    for name in ["z4", "b2", "zflip", "s2"]:
        A = alg(name)
        assert len(twin_group(A, (0, 1), Partition.bottom(A.size))) == 1


def brute_twins(A, U, theta):
    """f is a twin iff some binary-parameter polynomial t(x, p) gives id at e and f at d."""
    polys = restricted_pol(A, range(A.size), 2)
    out = set()
    for t in polys:
        for e, d in theta.pairs():
            g = tuple(t(u, e) for u in U)
            f = tuple(t(u, d) for u in U)
            if g == tuple(U) and sorted(f) == list(U):
                out.add(f)
    return out


@pytest.mark.parametrize("name", ["z4", "b2", "zflip", "l2", "set3"])
def test_twins_normal_and_monotone(alg, name):
    A = alg(name)
    lat = con_all(A)
    for r in range(2, A.size + 1):
        for U in itertools.combinations(range(A.size), r):
            P = pol_perm_group(A, U)
            groups = {th: twin_group(A, U, th) for th in lat.elements}
            for th, T in groups.items():
                assert T.is_group() and T.is_normal_in(P)
                # single-parameter twins are a lower bound
                assert brute_twins(A, U, th) <= set(T.elements)
            for t1 in lat.elements:
                for t2 in lat.elements:
                    if t1 <= t2:
                        assert set(groups[t1].elements) <= set(groups[t2].elements)


def test_permgroup_helpers():
    G = PermGroup((0, 1, 2), [(0, 1, 2), (1, 2, 0), (2, 0, 1)])
    assert G.is_group()
    assert G.orbits() == [[0, 1, 2]]
    assert G.inverse((1, 2, 0)) == (2, 0, 1)
    assert G.set_image((1, 2, 0), {0}) == frozenset({1})
    assert len(G.table()) == 3
