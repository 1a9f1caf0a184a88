import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamecon.congruence import Partition, con_all
from tamecon.core import (AlgebraError, App, CapExceeded, Const, FiniteAlgebra, Var, closure,
                          direct_power, evaluate, free_algebra, generate_subuniverse, is_closed,
                          is_isomorphic, parse_term, quotient, subalgebra_from_subset, term_table)
from tamecon.formats import parse_algebra, serialize_algebra
from tamecon import corpus

from conftest import naive_closure, random_algebra


def test_evaluate_examples(alg):
    assert evaluate(alg("z4"), App("plus", (Var(0), Var(1))), (1, 3)) == 0
    assert evaluate(alg("s2"), App("meet", (Var(0), Var(0))), (1,)) == 1
    t = App("neg", (App("meet", (Var(0), Var(1))),))
    assert evaluate(alg("b2"), t, (1, 1)) == 0


def test_evaluate_errors(alg):
    with pytest.raises(AlgebraError):
        evaluate(alg("z4"), App("times", (Var(0), Var(1))), (1, 1))
    with pytest.raises(AlgebraError):
        evaluate(alg("z4"), App("plus", (Var(0),)), (1,))
    with pytest.raises(AlgebraError):
        evaluate(alg("z4"), Var(0), (7,))
    with pytest.raises(AlgebraError):
        evaluate(alg("z4"), Const(9), ())


def test_parse_term_roundtrip(alg):
    t = parse_term("neg(meet(v0, join(v1, 1)))")
    assert str(t) == "neg(meet(v0,join(v1,1)))"
    table = term_table(alg("b2"), t, 2)
    for x, y in itertools.product(range(2), repeat=2):
        assert table[x, y] == evaluate(alg("b2"), t, (x, y))


def test_generate_subuniverse_examples(alg):
    assert generate_subuniverse(alg("s2"), [(0, 0), (1, 1), (1, 0)]) == [(0, 0), (1, 0), (1, 1)]
    assert generate_subuniverse(alg("z4"), [(1,)]) == [(0,), (1,), (2,), (3,)]
    assert generate_subuniverse(alg("b2"), [(0, 0), (1, 1)]) == [(0, 0), (1, 1)]


@pytest.mark.parametrize("seed", range(12))
def test_closure_matches_naive_fixpoint(seed):
    A = random_algebra(seed, 3, [2, 1] if seed % 2 else [2])
    rng = np.random.default_rng(seed)
    gens = [tuple(int(x) for x in rng.integers(0, 3, size=3)) for _ in range(2)]
    assert generate_subuniverse(A, gens) == naive_closure(A, gens)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=4))
def test_closure_idempotent_and_monotone(seed, gens):
    A = random_algebra(seed, 3, [2])
    once = generate_subuniverse(A, gens)
    assert generate_subuniverse(A, once) == once
    bigger = generate_subuniverse(A, gens + [(0, 1)])
    assert set(once) <= set(bigger)
    assert is_closed(A, np.array(once)) is None


def test_closure_provenance_rebuilds_rows(alg):
    A = alg("b2")
    cl = closure(A, [(0, 1, 1), (1, 1, 0)], track=True)
    gens = [(0, 1, 1), (1, 1, 0)]
    for i, row in enumerate(cl.tuples()):
        t = cl.term(i, ["a", "b"])
        def ev(s):
            if not s.args and s.op in ("a", "b"):
                return gens["ab".index(s.op)]
            vals = [ev(x) for x in s.args]
            return tuple(A.op(s.op)(*[v[c] for v in vals]) for c in range(3))
        assert ev(t) == row


def test_cap_overflow_is_explicit(alg):
    with pytest.raises(CapExceeded):
        closure(alg("z4"), [(1, 0, 0), (0, 1, 0), (0, 0, 1)], cap=10)


def test_quotient_examples(alg):
    z4 = alg("z4")
    q = quotient(z4, Partition.parse("0 2|1 3", 4))
    assert q.size == 2 and q.op("plus").table.tolist() == [[0, 1], [1, 0]]
    assert quotient(z4, Partition.bottom(4)).same_tables(z4)
    assert quotient(z4, Partition.top(4)).size == 1
    with pytest.raises(AlgebraError, match="plus"):
        quotient(z4, Partition.parse("0 1|2 3", 4))


@pytest.mark.parametrize("name", ["z4", "b2", "set3", "zflip"])
def test_quotient_map_is_homomorphism(alg, name):
    A = alg(name)
    for theta in con_all(A):
        Q = quotient(A, theta)
        h = theta.ids
        for op in A.ops:
            for args in itertools.product(range(A.size), repeat=op.arity):
                assert h[op(*args)] == Q.op(op.name)(*[h[a] for a in args])
        assert set(h) == set(range(Q.size))


def test_power_and_subalgebra(alg):
    P = direct_power(alg("s2"), 2)
    assert P.size == 4 and P.labels == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert P.op("meet")(1, 2) == 0
    sub = subalgebra_from_subset(alg("z4"), {0, 2})
    assert sub.size == 2 and sub.op("plus")(1, 1) == 0
    with pytest.raises(AlgebraError, match="outside"):
        subalgebra_from_subset(alg("z4"), {0, 1})


def test_free_algebra_sizes(alg):
    assert free_algebra(alg("s2"), 2).size == 3
    assert free_algebra(alg("s2"), 1).size == 1
    assert free_algebra(alg("b2"), 1).size == 4
    assert free_algebra(alg("zflip"), 3).size == 6
    assert free_algebra(alg("z4"), 2).size == 16


def _relabel(A, perm):
    inv = np.argsort(perm)
    ops = []
    for op in A.ops:
        idx = np.ix_(*([inv] * op.arity)) if op.arity else ()
        t = np.asarray(perm)[op.table[idx]] if op.arity else perm[int(op.table)]
        ops.append((op.name, op.arity, np.asarray(t).reshape(-1)))
    return FiniteAlgebra(A.name + "'", A.size, ops)


@pytest.mark.parametrize("seed", range(5))
def test_free_algebra_size_invariant_under_renaming(seed):
    A = random_algebra(seed, 3, [2])
    perm = list(np.random.default_rng(seed).permutation(3))
    B = _relabel(A, perm)
    assert is_isomorphic(A, B) is not None
    assert free_algebra(A, 2).size == free_algebra(B, 2).size


@pytest.mark.parametrize("name", corpus.ALGEBRAS)
def test_algebra_format_roundtrip(name):
    text = corpus.text(f"{name}.alg")
    A = parse_algebra(text)
    assert serialize_algebra(A) == text
