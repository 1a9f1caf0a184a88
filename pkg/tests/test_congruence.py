import itertools

import pytest
from hypothesis import given, settings, strategies as st

from tamecon import corpus
from tamecon.congruence import (NotSubdirectlyIrreducible, Partition, all_partitions, cg, cg_pairs,
                                con_all, is_congruence, join, meet, meet_irreducibles, monolith)
from tamecon.core import AlgebraError, direct_power, quotient

from conftest import random_algebra


def brute_cg(A, a, b):
    """Least compatible partition relating a and b, found by filtering every partition."""
    cands = [p for p in all_partitions(A.size) if p.related(a, b) and is_congruence(A, p)]
    least = [p for p in cands if all(p <= q for q in cands)]
    assert len(least) == 1
    return least[0]


def test_partition_canonical_form():
    p = Partition([5, 5, 3, 3])
    assert p.ids == (0, 0, 1, 1)
    assert Partition.parse("1 3|0 2", 4) == Partition.parse("0 2|1 3", 4)
    assert Partition.parse("0 2|1 3", 4).literal() == "0 2|1 3"
    assert Partition.parse("2 3", 4).literal() == "0|1|2 3"
    with pytest.raises(AlgebraError):
        Partition.parse("0 1|1 2", 4)


def test_join_meet_examples():
    n = 4
    assert join(Partition.parse("0 1", n), Partition.parse("1 2", n)) == Partition.parse("0 1 2|3", n)
    assert meet(Partition.parse("0 2|1 3", n), Partition.parse("0 1|2 3", n)) == Partition.bottom(n)
    p = Partition.parse("0 3|1 2", n)
    assert join(p, Partition.bottom(n)) == p


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=5, max_size=5), st.lists(st.integers(0, 4), min_size=5, max_size=5))
def test_lattice_laws(xs, ys):
    p, q = Partition(xs), Partition(ys)
    j, m = join(p, q), meet(p, q)
    assert p <= j and q <= j and m <= p and m <= q
    assert join(p, m) == p and meet(p, j) == p
    for r in all_partitions(5):
        if p <= r and q <= r:
            assert j <= r


def test_cg_examples(alg):
    assert cg(alg("z4"), 0, 2) == Partition.parse("0 2|1 3", 4)
    assert cg(alg("z4"), 1, 1) == Partition.bottom(4)
    assert cg(alg("s2"), 0, 1) == Partition.top(2)


@pytest.mark.parametrize("name", corpus.ALGEBRAS)
def test_cg_matches_partition_filter(alg, name):
    A = alg(name)
    for a, b in itertools.product(range(A.size), repeat=2):
        assert cg(A, a, b) == brute_cg(A, a, b)


@pytest.mark.parametrize("seed", range(15))
def test_cg_matches_partition_filter_random(seed):
    A = random_algebra(seed, 4 + seed % 2, [2] if seed % 3 else [1, 2])
    for a, b in itertools.combinations(range(A.size), 2):
        assert cg(A, a, b) == brute_cg(A, a, b)


def test_cg_pairs_with_start(alg):
    A = alg("z4")
    assert cg_pairs(A, [], start=Partition.parse("0 2", 4)) == Partition.parse("0 2|1 3", 4)


def test_con_all_examples(alg):
    lat = con_all(alg("z4"))
    assert [p.literal() for p in lat] == ["0|1|2|3", "0 2|1 3", "0 1 2 3"]
    assert lat.covers == [(0, 1), (1, 2)]
    assert len(con_all(alg("s2"))) == 2
    one = quotient(alg("s2"), Partition.top(2))
    assert len(con_all(one)) == 1


@pytest.mark.parametrize("seed", range(8))
def test_con_all_equals_filtered_partitions(seed):
    A = random_algebra(seed, 4, [1] if seed % 2 else [2])
    lat = con_all(A)
    expect = sorted((p for p in all_partitions(4) if is_congruence(A, p)), key=Partition.sort_key)
    assert lat.elements == expect
    for p, q in itertools.product(lat.elements, repeat=2):
        assert join(p, q) in lat and meet(p, q) in lat
    # covers are the transitive reduction of inclusion
    for i, j in itertools.product(range(len(lat)), repeat=2):
        strict = lat.elements[i] < lat.elements[j]
        gap = any(lat.elements[i] < r < lat.elements[j] for r in lat.elements)
        assert ((i, j) in lat.covers) == (strict and not gap)


def test_quotient_correspondence(alg):
    for name in ("z4", "set3", "b2"):
        A = alg(name)
        lat = con_all(A)
        for theta in lat:
            Q = quotient(A, theta)
            above = [p for p in lat if theta <= p]
            assert len(con_all(Q)) == len(above)
            images = {Partition(psi.ids[r] for r in [min(b) for b in theta.blocks()]) for psi in above}
            assert images == set(con_all(Q).elements)


def test_monolith_examples(alg):
    assert monolith(alg("z4")) == Partition.parse("0 2|1 3", 4)
    assert monolith(alg("s2")) == Partition.top(2)
    m = monolith(direct_power(alg("s2"), 2))
    assert isinstance(m, NotSubdirectlyIrreducible)
    assert set(m.atoms) == {Partition.parse("0 1|2|3", 4), Partition.parse("0 2|1|3", 4)}


def test_meet_irreducibles(alg):
    z4 = meet_irreducibles(alg("z4"))
    assert [(p.literal(), q.literal()) for p, q in z4] == [("0|1|2|3", "0 2|1 3"), ("0 2|1 3", "0 1 2 3")]
    assert [(p.literal(), q.literal()) for p, q in meet_irreducibles(alg("s2"))] == [("0|1", "0 1")]
    P = direct_power(alg("s2"), 2)
    lat = con_all(P)
    brute = []
    for i, p in enumerate(lat.elements):
        ups = [q for q in lat.elements if p < q and not any(p < r < q for r in lat.elements)]
        if len(ups) == 1:
            brute.append((p, ups[0]))
    assert meet_irreducibles(P) == brute


def test_dot_export(alg):
    dot = con_all(alg("z4")).to_dot()
    assert dot.count("->") == 2 and '"0 2|1 3"' in dot


def test_size_bound_is_configurable(alg):
    from tamecon.congruence import lattice_size_bound
    from tamecon.core import CapExceeded, direct_product
    P = direct_product(alg("z4"), alg("z4"))
    with pytest.raises(CapExceeded):
        con_all(P)
    with lattice_size_bound(16):
        # subgroups of Z4 x Z4: 15
        assert len(con_all(P)) == 15
    with pytest.raises(CapExceeded):
        con_all(P)
