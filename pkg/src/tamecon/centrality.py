"""Term-condition machinery: matrix closures, TC and strong TC, commutators, centralizers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .congruence import Partition, cg_pairs
from .core import DEFAULT_CAP, closure


def relation_pairs(rel, n):
    """Pairs of a relation given as a Partition, an element set (meaning R x R), or pairs."""
    if isinstance(rel, Partition):
        return rel.pairs()
    rel = list(rel)
    if rel and all(isinstance(x, (int, np.integer)) for x in rel):
        elems = sorted(set(int(x) for x in rel))
        return [(a, b) for a in elems for b in elems]
    return [(int(a), int(b)) for a, b in rel]


def _gamma_ids(gamma, n):
    return np.array(gamma.ids if gamma is not None else range(n), dtype=np.intp)


def matrix_generators(A, alpha, beta):
    n = A.size
    gens = [(a, a, b, b) for a, b in relation_pairs(alpha, n)]
    gens += [(u, v, u, v) for u, v in relation_pairs(beta, n)]
    return list(dict.fromkeys(gens))


def matrices22(A, alpha, beta, cap=DEFAULT_CAP, track=False):
    """All 2x2 value matrices (m11, m12, m21, m22) reachable from α-rows and β-columns."""
    key = ("m22", _rel_key(alpha), _rel_key(beta), track)
    if key in A.cache:
        return A.cache[key]
    gens = matrix_generators(A, alpha, beta)
    cl = closure(A, gens, width=4, cap=cap, track=track, what="2x2 matrix closure")
    cl.generators = gens
    A.cache[key] = cl
    return cl


def _rel_key(rel):
    if isinstance(rel, Partition):
        return rel.ids
    return tuple(sorted(map(lambda x: x if isinstance(x, tuple) else (x,), rel)))


@dataclass
class TCResult:
    holds: bool
    matrix: tuple | None = None
    shifted_pair: tuple | None = None
    term: str | None = None
    generators: list = field(default_factory=list)

    def __bool__(self):
        return self.holds


def _tc_violations(rows, g):
    return (g[rows[:, 0]] == g[rows[:, 1]]) & (g[rows[:, 2]] != g[rows[:, 3]])


def tc_check(A, alpha, beta, gamma, cap=DEFAULT_CAP, witness_term=False):
    """Decide TC(α, β; γ); on failure the witness shifts a single α-variable."""
    n = A.size
    g = _gamma_ids(gamma, n)
    cl = matrices22(A, alpha, beta, cap)
    bad = np.nonzero(_tc_violations(cl.rows, g))[0]
    if len(bad) == 0:
        return TCResult(True)
    # normalize: find one α-pair whose single shift already fails
    beta_gens = [(u, v, u, v) for u, v in relation_pairs(beta, n)]
    consts = [(c, c, c, c) for c in range(n)]
    for a, b in relation_pairs(alpha, n):
        if a == b:
            continue
        gens = [(a, a, b, b)] + consts + beta_gens
        gens = list(dict.fromkeys(gens))
        sub = closure(A, gens, width=4, cap=cap, track=witness_term, what="2x2 matrix closure")
        hit = np.nonzero(_tc_violations(sub.rows, g))[0]
        if len(hit):
            i = int(hit[0])
            m = tuple(int(x) for x in sub.rows[i])
            term = None
            if witness_term:
                names = _names_for(gens, a, b, n, beta)
                term = str(sub.term(i, names))
            return TCResult(False, m, (a, b), term, gens)
    raise AssertionError("TC failure could not be normalized to one shifted variable")


def _names_for(gens, a, b, n, beta):
    out = []
    for gen in gens:
        if gen == (a, a, b, b):
            out.append(f"x[{a}->{b}]")
        elif gen[0] == gen[1] == gen[2] == gen[3]:
            out.append(f"c{gen[0]}")
        else:
            out.append(f"y[{gen[0]}->{gen[1]}]")
    return out


def strong_generators(A, beta):
    n = A.size
    rows = [(a, a, a, b, b, b) for a, b in relation_pairs(beta, n)]
    blocks = beta.blocks() if isinstance(beta, Partition) else [sorted(set(x for p in relation_pairs(beta, n) for x in p))]
    cols = [(u, v, w, u, v, w) for blk in blocks for u in blk for v in blk for w in blk]
    return list(dict.fromkeys(rows + cols))


def matrices23(A, beta, cap=DEFAULT_CAP):
    key = ("m23", _rel_key(beta))
    if key in A.cache:
        return A.cache[key]
    cl = closure(A, strong_generators(A, beta), width=6, cap=cap, what="2x3 matrix closure")
    A.cache[key] = cl
    return cl


@dataclass
class StrongTCResult:
    holds: bool
    matrix: tuple | None = None
    route: str = "2x3"
    simplified: bool | None = None

    def __bool__(self):
        return self.holds


def strong_tc_direct(A, beta, gamma, cap=DEFAULT_CAP):
    """Rows (m11 m12 m13 / m21 m22 m23): m11 ≡γ m22 must force m13 ≡γ m23."""
    g = _gamma_ids(gamma, A.size)
    rows = matrices23(A, beta, cap).rows
    bad = np.nonzero((g[rows[:, 0]] == g[rows[:, 4]]) & (g[rows[:, 2]] != g[rows[:, 5]]))[0]
    if len(bad):
        return StrongTCResult(False, tuple(int(x) for x in rows[bad[0]]))
    return StrongTCResult(True)


def strong_tc_simplified(A, beta, gamma, cap=DEFAULT_CAP):
    """The equivalent form valid under TC(β, β; γ): m11 ≡γ m22 forces all four entries equal mod γ."""
    g = _gamma_ids(gamma, A.size)
    rows = matrices22(A, beta, beta, cap).rows
    G = g[rows]
    hyp = G[:, 0] == G[:, 3]
    concl = (G[:, 0] == G[:, 1]) & (G[:, 0] == G[:, 2])
    bad = np.nonzero(hyp & ~concl)[0]
    if len(bad):
        return StrongTCResult(False, tuple(int(x) for x in rows[bad[0]]), route="2x2")
    return StrongTCResult(True, route="2x2")


def strong_tc_check(A, beta, gamma, cap=DEFAULT_CAP):
    """Strong term condition of β over γ; both routes are cross-checked when TC(β,β;γ) holds."""
    direct = strong_tc_direct(A, beta, gamma, cap)
    if tc_check(A, beta, beta, gamma, cap).holds:
        simple = strong_tc_simplified(A, beta, gamma, cap)
        if simple.holds != direct.holds:
            raise AssertionError("strong term condition routes disagree")
        direct.simplified = simple.holds
    return direct


def commutator(A, alpha, beta, cap=DEFAULT_CAP):
    """Least γ with TC(α, β; γ), by fixpoint iteration."""
    n = A.size
    rows = matrices22(A, alpha, beta, cap).rows
    gamma = Partition.bottom(n)
    while True:
        g = gamma.array()
        bad = _tc_violations(rows, g)
        if not bad.any():
            return gamma
        pairs = {(int(x), int(y)) for x, y in rows[bad][:, 2:4]}
        gamma = cg_pairs(A, sorted(pairs), start=gamma)


def centralizer(A, beta, gamma, cap=DEFAULT_CAP):
    """(γ : β): pairs (a, b) for which a single a/b shift satisfies TC against β over γ."""
    n = A.size
    g = _gamma_ids(gamma, n)
    beta_gens = [(u, v, u, v) for u, v in relation_pairs(beta, n)]
    good = []
    for a in range(n):
        for b in range(a + 1, n):
            gens = list(dict.fromkeys([(a, a, b, b), (b, b, a, a)] + beta_gens))
            rows = closure(A, gens, width=4, cap=cap, what="2x2 matrix closure").rows
            if not _tc_violations(rows, g).any():
                good.append((a, b))
    result = Partition.from_pairs(n, good)
    if set(result.nontrivial_pairs()) != {p for a, b in good for p in ((a, b), (b, a))}:
        raise AssertionError("centralizer pairs do not form an equivalence relation")
    from .congruence import is_congruence
    if not is_congruence(A, result):
        raise AssertionError("centralizer is not a congruence")
    return result


def is_abelian_over(A, beta, gamma, cap=DEFAULT_CAP):
    return tc_check(A, beta, beta, gamma, cap).holds


def is_strongly_abelian_over(A, beta, gamma, cap=DEFAULT_CAP):
    return strong_tc_check(A, beta, gamma, cap).holds


def is_abelian_algebra(A, cap=DEFAULT_CAP):
    n = A.size
    return tc_check(A, Partition.top(n), Partition.top(n), Partition.bottom(n), cap).holds
