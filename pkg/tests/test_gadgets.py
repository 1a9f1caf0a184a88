import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tamecon import corpus
from tamecon.congruence import Partition
from tamecon.core import AlgebraError
from tamecon.gadgets import (GRAPH_KINDS, KINDS, EqPair, Eq, Exists, Graph, PreconditionUnmet,
                             Preorder, Ref, build_gadget, closure_audit, extension,
                             find_package, fixed_point_audit, hunt_witness, model_check,
                             naive_check, preorder_ll, random_formula, recover,
                             sigma_formula_crosscheck, structural_package, theta_generate,
                             validate_package, verify_graph_recovery)
from tamecon.theorems import HOLDS, FAILS, diagonal_subpower

from oracles import brute_cg_ids


@pytest.fixture(scope="module")
def packages():
    return {k: find_package(k, corpus.algebra(a)) for k, a in corpus.GADGET_ALGEBRAS.items()}


_built = {}


def gadget(packages, kind, source):
    key = (kind, source)
    if key not in _built:
        inp = corpus.eqpair(source) if kind == "eq_constraint" else corpus.graph(source)
        _built[key] = build_gadget(kind, inp, packages[kind])
    return _built[key]


def cases(graphs):
    out = [(k, g) for k in GRAPH_KINDS for g in graphs]
    return out + [("eq_constraint", "eq_small")]


@pytest.mark.parametrize("kind", KINDS)
def test_packages_validate(packages, kind):
    assert validate_package(packages[kind]).status == HOLDS


@pytest.mark.parametrize("kind,source", cases(["k3", "p3"]))
def test_recovery_on_small_inputs(packages, kind, source):
    G = gadget(packages, kind, source)
    v = verify_graph_recovery(G)
    assert v.status == HOLDS, v.trace


@pytest.mark.parametrize("kind", ["split_vertex", "vertex_product", "support_point"])
def test_recovery_on_c5(packages, kind):
    G = gadget(packages, kind, "c5")
    assert verify_graph_recovery(G).status == HOLDS


@pytest.mark.parametrize("kind,source", cases(["k3"]))
def test_closure_audit(packages, kind, source):
    G = gadget(packages, kind, source)
    assert all(closure_audit(G).values())
    assert all(fixed_point_audit(G).values())


@pytest.mark.parametrize("kind,source", cases(["k3"]))
def test_vectorized_and_naive_evaluators_agree(packages, kind, source):
    G = gadget(packages, kind, source)
    rng = random.Random(f"{kind}/{source}")
    truths = set()
    for _ in range(200):
        phi = random_formula(G, rng)
        truth = model_check(G, phi)
        assert truth == naive_check(G, phi), str(phi)
        truths.add(truth)
    assert truths == {True, False}


def test_wrong_original_is_rejected(packages):
    G = gadget(packages, "split_vertex", "k3")
    v = verify_graph_recovery(G, corpus.graph("p3"))
    assert v.status == FAILS and v.witness["pair"] == (0, 2)


@pytest.mark.parametrize("kind", ["split_vertex", "support_point", "twin_quotient"])
def test_edgeless_graph_recovers_no_edges(packages, kind):
    g = Graph("empty3", 3, ())
    G = build_gadget(kind, g, packages[kind])
    v = verify_graph_recovery(G)
    assert v.status == HOLDS and v.witness["edges"] == []


def test_eqpair_with_identity_relations(packages):
    bot = Partition.bottom(3)
    e = EqPair("ids", 3, bot, bot)
    G = build_gadget("eq_constraint", e, packages["eq_constraint"])
    assert verify_graph_recovery(G).status == HOLDS


def test_eqpair_relations_must_meet_in_identity():
    top = Partition.top(3)
    with pytest.raises(AlgebraError):
        EqPair("bad", 3, top, top)


@pytest.mark.parametrize("source", ["k3", "p3"])
def test_vertex_product_generators(packages, source):
    g = corpus.graph(source)
    G = gadget(packages, "vertex_product", source)
    vertex = [n for n in G.names if n.startswith("chi_beta_")]
    edge = [n for n in G.names if n.startswith("chi_alpha_")]
    assert len(vertex) == g.n and len(edge) == len(g.edges)


@pytest.mark.parametrize("kind,source", [("eq_constraint", "eq_small"), ("sigma_constant", "k3")])
def test_structural_gadgets_build_without_recovery(packages, kind, source):
    pkg = packages[kind]
    spkg = structural_package(kind, pkg.algebra, **pkg.congruences)
    inp = corpus.eqpair(source) if kind == "eq_constraint" else corpus.graph(source)
    G = build_gadget(kind, inp, spkg)
    assert all(closure_audit(G).values())
    assert verify_graph_recovery(G).status == "precondition-unmet"


def test_structural_mode_only_for_constraint_kinds(packages):
    with pytest.raises(AlgebraError):
        structural_package("split_vertex", packages["split_vertex"].algebra)


def test_unbound_variable_is_an_error(packages):
    G = gadget(packages, "split_vertex", "k3")
    with pytest.raises(AlgebraError, match="unbound"):
        model_check(G, Eq(Ref("x"), Ref("x")))


def test_exists_self_equality_is_true(packages):
    G = gadget(packages, "support_point", "k3")
    phi = Exists("x", Eq(Ref("x"), Ref("x")))
    assert model_check(G, phi) and naive_check(G, phi)
    assert len(extension(G, Eq(Ref("x"), Ref("x")), "x")) == G.size


def test_theta_from_nothing_or_diagonal_is_bottom(packages):
    A = packages["vertex_product"].algebra
    D = diagonal_subpower(A, [(0, 1)])
    for pairs in ([], [(0, 0), (3, 3)]):
        theta, merged = theta_generate(A, D, pairs)
        assert theta.is_bottom() and merged == []


def _naive_theta(A, rows, pairs):
    """Least equivalence containing `pairs` closed under basic translations, by fixpoint."""
    rows = [tuple(r) for r in rows.tolist()]
    pos = {r: i for i, r in enumerate(rows)}
    m = len(rows)
    cls = list(range(m))

    def find(i):
        while cls[i] != i:
            i = cls[i]
        return i

    for a, b in pairs:
        cls[find(a)] = find(b)
    changed = True
    while changed:
        changed = False
        for op in A.ops:
            for args in itertools.product(range(m), repeat=op.arity):
                for p in range(op.arity):
                    for alt in range(m):
                        if alt == args[p] or find(alt) != find(args[p]):
                            continue
                        other = args[:p] + (alt,) + args[p + 1:]
                        u = tuple(op(*[rows[i][c] for i in args]) for c in range(len(rows[0])))
                        v = tuple(op(*[rows[i][c] for i in other]) for c in range(len(rows[0])))
                        if find(pos[u]) != find(pos[v]):
                            cls[find(pos[u])] = find(pos[v])
                            changed = True
    return [find(i) for i in range(m)]


def _same(p, q):
    return all((p[i] == p[j]) == (q[i] == q[j]) for i in range(len(p)) for j in range(len(p)))


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["va5", "bw5", "sp4", "tw4"]), st.data())
def test_theta_generate_matches_fixpoint(name, data):
    A = corpus.algebra(name)
    extra = data.draw(st.tuples(st.integers(0, A.size - 1), st.integers(0, A.size - 1)))
    D = diagonal_subpower(A, [extra])
    m = len(D)
    pairs = data.draw(st.lists(st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)),
                               max_size=2))
    theta, _ = theta_generate(A, D, pairs)
    assert _same(list(theta.ids), _naive_theta(A, D, pairs))


@pytest.mark.parametrize("name", ["va5", "sp4"])
def test_theta_generate_width_one_is_principal_congruence(name):
    A = corpus.algebra(name)
    rows = np.arange(A.size).reshape(-1, 1)
    for a, b in itertools.combinations(range(A.size), 2):
        theta, _ = theta_generate(A, rows, [(a, b)])
        assert _same(list(theta.ids), brute_cg_ids(A, a, b))


def test_theta_leaving_sigma_is_unmet(packages):
    A = packages["twin_quotient"].algebra
    sigma = Partition.bottom(A.size)
    D = diagonal_subpower(A)
    with pytest.raises(PreconditionUnmet):
        theta_generate(A, D, [(0, 1)], sigma=sigma)


@pytest.mark.parametrize("source", ["k3", "p3"])
def test_support_point_levels_follow_the_graph(packages, source):
    g = corpus.graph(source)
    pre = preorder_ll(gadget(packages, "support_point", source))
    counts = {}
    for lv in pre.levels:
        counts[lv] = counts.get(lv, 0) + 1
    # full support, then edge supports, then single-vertex supports
    assert counts == {0: 1, 1: len(g.edges), 2: g.n}


@pytest.mark.parametrize("kind", ["support_point", "twin_quotient", "sigma_constant"])
def test_recovered_preorders_are_preorders(packages, kind):
    assert preorder_ll(gadget(packages, kind, "k3")).is_preorder()


def test_preorder_on_divisibility():
    dom = np.arange(1, 7)
    leq = np.array([[b % a == 0 for b in dom] for a in dom])
    pre = Preorder(dom, leq)
    assert pre.is_preorder()
    assert len(pre.classes) == 6
    assert sorted(pre.members(c)[0] for c in pre.maximal()) == [4, 5, 6]
    assert [int(pre.members(c)[0]) for c in pre.at_level(0)] == [1]


def test_preorder_ll_rejects_graph_only_kinds(packages):
    with pytest.raises(AlgebraError):
        preorder_ll(gadget(packages, "split_vertex", "k3"))


def test_sigma_constant_formulas_agree_with_matrices(packages):
    G = gadget(packages, "sigma_constant", "k3")
    assert sigma_formula_crosscheck(G, recover(G), random.Random(7)) is None


def test_gadget_rejects_large_inputs(packages):
    from tamecon.core import CapExceeded
    g = Graph("k6", 6, tuple(itertools.combinations(range(6), 2)))
    with pytest.raises(CapExceeded):
        build_gadget("split_vertex", g, packages["split_vertex"])


def test_gadget_rejects_mismatched_package(packages):
    with pytest.raises(AlgebraError):
        build_gadget("split_vertex", corpus.graph("k3"), packages["vertex_product"])


def test_unknown_kind(packages):
    with pytest.raises(AlgebraError):
        find_package("nonsense", packages["split_vertex"].algebra)


def test_no_package_on_groups():
    with pytest.raises(PreconditionUnmet):
        find_package("split_vertex", corpus.algebra("z4"))


def test_graph_rejects_loops():
    with pytest.raises(AlgebraError):
        Graph("loop", 2, ((1, 1),))


def test_dump_marks_blocks_only_with_theta(packages):
    plain = gadget(packages, "split_vertex", "k3").dump().splitlines()
    assert all(";" not in line for line in plain)
    q = gadget(packages, "twin_quotient", "k3").dump().splitlines()
    assert all(";" in line for line in q)


def test_hunt_is_deterministic():
    a = hunt_witness("support_point", 3, tries=40, seed=3)
    b = hunt_witness("support_point", 3, tries=40, seed=3)
    if a is None:
        assert b is None
    else:
        assert a[0].ops[0].table.tolist() == b[0].ops[0].table.tolist()
        assert validate_package(a[1]).status == HOLDS
