"""Polynomial clones restricted to subsets, with the induced algebras and permutation groups they give."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_CAP, AlgebraError, FiniteAlgebra, closure

DEFAULT_ARITY_CAP = 3


@dataclass(frozen=True)
class PolyTable:
    """A map U^k -> universe, values listed in lexicographic order of U^k."""
    domain: tuple
    arity: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != len(self.domain) ** self.arity:
            raise AlgebraError("polynomial table is not total on U^k")

    def __call__(self, *args):
        m = len(self.domain)
        pos = {u: i for i, u in enumerate(self.domain)}
        idx = 0
        for a in args:
            idx = idx * m + pos[a]
        return self.values[idx]

    def image(self):
        return frozenset(self.values)

    def maps_into(self, W):
        return set(self.values) <= set(W)

    def depends_on(self):
        """Indices of the variables the table actually depends on."""
        m = len(self.domain)
        arr = np.array(self.values).reshape((m,) * self.arity) if self.arity else None
        out = []
        for i in range(self.arity):
            if not (arr == np.take(arr, [0], axis=i)).all():
                out.append(i)
        return out

    def as_map(self):
        if self.arity != 1:
            raise AlgebraError("as_map needs a unary table")
        return dict(zip(self.domain, self.values))


def _points(U, k):
    return np.array(list(itertools.product(U, repeat=k)), dtype=np.intp).reshape(-1, k)


def pol_closure(A, U, k, cap=DEFAULT_CAP):
    """Closure rows of the k-ary polynomials restricted to U^k (one row per table)."""
    U = tuple(sorted(set(int(u) for u in U)))
    if not U:
        raise AlgebraError("empty domain")
    key = ("pol", U, k)
    if key in A.cache:
        return A.cache[key]
    pts = _points(U, k)
    width = len(pts)
    gens = [tuple(pts[:, j]) for j in range(k)]
    gens += [(c,) * width for c in range(A.size)]
    cl = closure(A, gens, width=width, cap=cap, what=f"Pol_{k} restricted to {len(U)} points")
    A.cache[key] = cl
    return cl


def restricted_pol(A, U, k, cap=DEFAULT_CAP):
    """Every k-ary polynomial of A restricted to U^k, in lexicographic order."""
    U = tuple(sorted(set(int(u) for u in U)))
    cl = pol_closure(A, U, k, cap)
    return [PolyTable(U, k, tuple(r)) for r in cl.rows.tolist()]


def unary_polynomials(A, cap=DEFAULT_CAP):
    """Rows of Pol_1(A) as an array of shape (m, n)."""
    return pol_closure(A, range(A.size), 1, cap).rows


def induced_algebra(A, W, max_arity=DEFAULT_ARITY_CAP, cap=DEFAULT_CAP, name=None):
    """The algebra on W whose operations are the polynomials of arity <= max_arity preserving W.

    Elements are relabelled 0..|W|-1 in increasing order of W.
    """
    W = tuple(sorted(set(int(w) for w in W)))
    pos = np.full(A.size, -1, dtype=np.intp)
    pos[list(W)] = np.arange(len(W))
    ops = []
    for k in range(1, max_arity + 1):
        rows = pol_closure(A, W, k, cap).rows
        inside = (pos[rows] >= 0).all(axis=1)
        for j, r in enumerate(rows[inside]):
            ops.append((f"p{k}_{j}", k, pos[r]))
    return FiniteAlgebra(name or f"{A.name}|W", len(W), ops, W)


@dataclass
class PermGroup:
    """A permutation group on `domain`; permutations stored as image tuples."""
    domain: tuple
    elements: list

    def __post_init__(self):
        self.elements = sorted(set(tuple(p) for p in self.elements))
        self._pos = {u: i for i, u in enumerate(self.domain)}
        self._index = {p: i for i, p in enumerate(self.elements)}

    def __len__(self):
        return len(self.elements)

    def __contains__(self, p):
        return tuple(p) in self._index

    def identity(self):
        return tuple(self.domain)

    def compose(self, p, q):
        """p after q."""
        return tuple(p[self._pos[x]] for x in q)

    def inverse(self, p):
        out = [None] * len(p)
        for i, x in enumerate(p):
            out[self._pos[x]] = self.domain[i]
        return tuple(out)

    def table(self):
        return [[self._index[self.compose(p, q)] for q in self.elements] for p in self.elements]

    def is_group(self):
        if self.identity() not in self:
            return False
        return all(self.compose(p, q) in self for p in self.elements for q in self.elements) and \
            all(self.inverse(p) in self for p in self.elements)

    def is_normal_in(self, big):
        if not all(p in big for p in self.elements):
            return False
        return all(self.compose(self.compose(g, h), big.inverse(g)) in self
                   for g in big.elements for h in self.elements)

    def orbits(self, points=None):
        pts = list(points if points is not None else self.domain)
        left = set(pts)
        out = []
        for x in pts:
            if x not in left:
                continue
            orb = {p[self._pos[x]] for p in self.elements}
            out.append(sorted(orb))
            left -= orb
        return out

    def set_image(self, p, subset):
        return frozenset(p[self._pos[x]] for x in subset)


def pol_perm_group(A, U, cap=DEFAULT_CAP):
    """Unary polynomial permutations of U."""
    U = tuple(sorted(set(int(u) for u in U)))
    rows = pol_closure(A, U, 1, cap).rows
    target = np.array(U)
    perms = [tuple(r) for r in rows.tolist() if sorted(r) == list(target)]
    G = PermGroup(U, perms)
    if not G.is_group():
        raise AssertionError("polynomial permutations failed to form a group")
    return G


def twin_group(A, U, theta, cap=DEFAULT_CAP):
    """θ-twins of the identity on U.

    Closes the pairs (t(-, e), t(-, d)) with d ≡θ e inside (A x A)^U: the first
    half of each row is g on U, the second half f on U.
    """
    U = tuple(sorted(set(int(u) for u in U)))
    m = len(U)
    gens = [U + U]
    gens += [(e,) * m + (d,) * m for (e, d) in theta.pairs()]
    cl = closure(A, gens, width=2 * m, cap=cap, what="twin pair closure")
    ident = np.array(U)
    keep = []
    for r in cl.rows:
        g, f = r[:m], r[m:]
        if np.array_equal(g, ident) and sorted(f.tolist()) == list(U):
            keep.append(tuple(int(x) for x in f))
    T = PermGroup(U, keep)
    if not T.is_group():
        raise AssertionError("twin permutations failed to form a group")
    return T
