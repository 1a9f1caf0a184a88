"""Interpretation gadgets.

Graphs (and pairs of disjoint equivalence relations) are encoded into diagonal
subpowers of a finite algebra, optionally modulo a congruence.  The encoded
structure is then read back with first-order formulas, which are evaluated by
exhaustive quantification over the finite gadget.

Two evaluators are provided: `model_check` (vectorised over numpy index
arrays) and `naive_check` (plain tuples and dictionaries).  They share no
evaluation code, so agreement between them is a meaningful test.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .centrality import tc_check
from .clone import pol_perm_group, twin_group, unary_polynomials
from .congruence import Partition, _UnionFind, con_all, meet, monolith
from .core import (DEFAULT_CAP, AlgebraError, CapExceeded, FiniteAlgebra, Lookup, closure,
                   is_closed, lex_order)
from .tct import labeled_lattice, minimal_sets, s_radical, ss_radical
from .theorems import FAILS, HOLDS, UNMET, Verdict

KINDS = ("split_vertex", "vertex_product", "eq_constraint", "support_point",
         "twin_quotient", "sigma_constant")
GRAPH_KINDS = tuple(k for k in KINDS if k != "eq_constraint")
# vertex count the recovery argument needs for each graph kind
MIN_VERTICES = {"split_vertex": 3, "vertex_product": 5, "support_point": 1,
                "twin_quotient": 1, "sigma_constant": 3}
MAX_VERTICES = 5
MAX_ALGEBRA = 6
GADGET_CAP = 1 << 16
INF = "inf"


# ------------------------------------------------------------------ inputs

@dataclass(frozen=True)
class Graph:
    """A loopless undirected graph on vertices 0..n-1."""
    name: str
    n: int
    edges: tuple

    def __post_init__(self):
        clean = set()
        for u, v in self.edges:
            if u == v:
                raise AlgebraError(f"graph {self.name}: loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise AlgebraError(f"graph {self.name}: vertex out of range in edge ({u},{v})")
            clean.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", tuple(sorted(clean)))

    @property
    def vertices(self):
        return range(self.n)

    def adjacent(self, u, v):
        return (min(u, v), max(u, v)) in set(self.edges)


@dataclass(frozen=True)
class EqPair:
    """A carrier with two equivalence relations meeting in the identity."""
    name: str
    n: int
    r0: Partition
    r1: Partition

    def __post_init__(self):
        if self.r0.n != self.n or self.r1.n != self.n:
            raise AlgebraError(f"eqpair {self.name}: relation size differs from carrier")
        if not meet(self.r0, self.r1).is_bottom():
            raise AlgebraError(f"eqpair {self.name}: r0 and r1 must meet in the identity")


# ------------------------------------------------------------------ formulas

@dataclass(frozen=True)
class Ref:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Named:
    """A named element of the gadget (generator or parameter)."""
    name: str

    def __str__(self):
        return f"@{self.name}"


@dataclass(frozen=True)
class Diag:
    """The diagonal element with every coordinate equal to `value`."""
    value: int

    def __str__(self):
        return f"#{self.value}"


@dataclass(frozen=True)
class Ap:
    """A basic operation or package polynomial applied coordinatewise."""
    fn: str
    args: tuple

    def __str__(self):
        return f"{self.fn}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class Truth:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Eq:
    left: object
    right: object

    def __str__(self):
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class In:
    """Membership in a named (previously defined) subset."""
    term: object
    subset: str

    def __str__(self):
        return f"{self.term} in {self.subset}"


@dataclass(frozen=True)
class Not:
    body: object

    def __str__(self):
        return f"~({self.body})"


@dataclass(frozen=True)
class And:
    parts: tuple

    def __str__(self):
        return "(" + " & ".join(map(str, self.parts)) + ")" if self.parts else "true"


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __str__(self):
        return "(" + " | ".join(map(str, self.parts)) + ")" if self.parts else "false"


@dataclass(frozen=True)
class Implies:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Iff:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} <-> {self.right})"


@dataclass(frozen=True)
class Exists:
    var: str
    body: object
    over: str | None = None

    def __str__(self):
        dom = f" in {self.over}" if self.over else ""
        return f"E {self.var}{dom}. {self.body}"


@dataclass(frozen=True)
class Forall:
    var: str
    body: object
    over: str | None = None

    def __str__(self):
        dom = f" in {self.over}" if self.over else ""
        return f"A {self.var}{dom}. {self.body}"


def conj(*parts):
    return And(tuple(parts))


def disj(*parts):
    return Or(tuple(parts))


def neq(a, b):
    return Not(Eq(a, b))


def term_vars(t):
    if isinstance(t, Ref):
        return {t.name}
    if isinstance(t, Ap):
        return set().union(*(term_vars(a) for a in t.args)) if t.args else set()
    return set()


def free_vars(f):
    if isinstance(f, Eq):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, In):
        return term_vars(f.term)
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        return set().union(*(free_vars(p) for p in f.parts)) if f.parts else set()
    if isinstance(f, (Implies, Iff)):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - {f.var}
    if isinstance(f, Truth):
        return set()
    raise AlgebraError(f"not a formula: {f!r}")


def depth(f):
    """Nesting depth of connectives and quantifiers (atoms have depth 0)."""
    if isinstance(f, (Eq, In, Truth)):
        return 0
    if isinstance(f, Not):
        return 1 + depth(f.body)
    if isinstance(f, (And, Or)):
        return 1 + max((depth(p) for p in f.parts), default=0)
    if isinstance(f, (Implies, Iff)):
        return 1 + max(depth(f.left), depth(f.right))
    return 1 + depth(f.body)


def quantifier_depth(f):
    if isinstance(f, (Eq, In, Truth)):
        return 0
    if isinstance(f, Not):
        return quantifier_depth(f.body)
    if isinstance(f, (And, Or)):
        return max((quantifier_depth(p) for p in f.parts), default=0)
    if isinstance(f, (Implies, Iff)):
        return max(quantifier_depth(f.left), quantifier_depth(f.right))
    return 1 + quantifier_depth(f.body)


# ------------------------------------------------------------------ gadget structures

@dataclass
class GadgetStructure:
    """A subpower D of A^I given by its rows, optionally modulo a congruence Θ of D.

    Elements of the structure are the least row index of each Θ-block, so
    equality in D/Θ is equality of representatives.
    """
    kind: str
    algebra: FiniteAlgebra
    index: tuple
    rows: np.ndarray
    theta: Partition | None = None
    names: dict = field(default_factory=dict)
    polys: dict = field(default_factory=dict)
    subsets: dict = field(default_factory=dict)
    source: object = None
    package: object = None
    needs_diagonal: bool = True
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.intp).reshape(-1, len(self.index))
        self._look = Lookup(self.rows, self.algebra.size)
        m = len(self.rows)
        if self.theta is None:
            self.rep = np.arange(m)
        else:
            if self.theta.n != m:
                raise AlgebraError("theta must partition the rows of the subpower")
            ids = self.theta.array()
            first = np.full(self.theta.nblocks, m)
            np.minimum.at(first, ids, np.arange(m))
            self.rep = first[ids]
        self.universe = np.unique(self.rep)
        self._masks = {}

    @property
    def size(self):
        return len(self.universe)

    @property
    def width(self):
        return len(self.index)

    def coordinate(self, label):
        return self.index.index(label)

    def element(self, i):
        return tuple(int(x) for x in self.rows[i])

    def locate(self, row):
        """Representative index of a row of A^I, or -1 when the row is not in D."""
        i = int(self._look(np.asarray(row, dtype=np.intp).reshape(1, -1))[0])
        return int(self.rep[i]) if i >= 0 else -1

    def const(self, value):
        i = self.locate((value,) * self.width)
        if i < 0:
            raise AlgebraError(f"diagonal element {value} is not in the gadget")
        return i

    def named(self, name):
        try:
            return int(self.rep[self.names[name]])
        except KeyError:
            raise AlgebraError(f"unknown gadget constant {name!r}") from None

    def table(self, fn):
        if fn in self.polys:
            return self.polys[fn]
        return self.algebra.op(fn).table

    def arity(self, fn):
        return self.table(fn).ndim

    def apply(self, fn, args):
        """Apply `fn` coordinatewise to broadcastable arrays of element indices."""
        tab = self.table(fn)
        if len(args) != tab.ndim:
            raise AlgebraError(f"{fn} expects {tab.ndim} arguments, got {len(args)}")
        if tab.ndim == 0:
            return np.asarray(self.const(int(tab)))
        arrs = np.broadcast_arrays(*[np.asarray(a, dtype=np.intp) for a in args])
        shape = arrs[0].shape
        res = tab[tuple(self.rows[a.reshape(-1)] for a in arrs)]
        idx = self._look(res)
        if (idx < 0).any():
            bad = res[np.nonzero(idx < 0)[0][0]]
            raise AlgebraError(f"{fn} leaves the gadget at {tuple(bad.tolist())}")
        return self.rep[idx].reshape(shape)

    def domain(self, subset=None):
        if subset is None:
            return self.universe
        try:
            return self.subsets[subset]
        except KeyError:
            raise AlgebraError(f"unknown subset {subset!r}") from None

    def mask(self, subset):
        if subset not in self._masks:
            m = np.zeros(len(self.rows), dtype=bool)
            m[self.domain(subset)] = True
            self._masks[subset] = m
        return self._masks[subset]

    def add_subset(self, name, members):
        self.subsets[name] = np.unique(self.rep[np.asarray(members, dtype=np.intp)])
        self._masks.pop(name, None)
        return self.subsets[name]

    def block_id(self, i):
        return int(self.theta.ids[i]) if self.theta is not None else int(i)

    def dump(self):
        """One line per element of D: coordinates, then `;block` when Θ is present."""
        out = []
        for i, r in enumerate(self.rows.tolist()):
            line = ",".join(map(str, r))
            if self.theta is not None:
                line += f";{self.theta.ids[i]}"
            out.append(line)
        return "\n".join(out) + "\n"


def _unit(index, labels, on, off):
    """Row equal to `on` at the coordinates in `labels` and `off` elsewhere."""
    labels = set(labels)
    return tuple(on if i in labels else off for i in index)


# ------------------------------------------------------------------ vectorised evaluator

_BUDGET = 1 << 18


class _Vectorized:
    def __init__(self, G):
        self.G = G

    def term(self, t, env):
        G = self.G
        if isinstance(t, Ref):
            if t.name not in env:
                raise AlgebraError(f"unbound variable {t.name!r}")
            return env[t.name]
        if isinstance(t, Named):
            return np.asarray(G.named(t.name))
        if isinstance(t, Diag):
            return np.asarray(G.const(t.value))
        if isinstance(t, Ap):
            return G.apply(t.fn, [self.term(a, env) for a in t.args])
        raise AlgebraError(f"not a term: {t!r}")

    def formula(self, f, env, shape):
        if isinstance(f, Eq):
            return self.term(f.left, env) == self.term(f.right, env)
        if isinstance(f, In):
            return self.G.mask(f.subset)[self.term(f.term, env)]
        if isinstance(f, Truth):
            return np.asarray(f.value)
        if isinstance(f, Not):
            return ~self.formula(f.body, env, shape)
        if isinstance(f, And):
            acc = np.asarray(True)
            for p in f.parts:
                acc = acc & self.formula(p, env, shape)
                if not acc.any():
                    break
            return acc
        if isinstance(f, Or):
            acc = np.asarray(False)
            for p in f.parts:
                acc = acc | self.formula(p, env, shape)
                if acc.all():
                    break
            return acc
        if isinstance(f, Implies):
            return ~self.formula(f.left, env, shape) | self.formula(f.right, env, shape)
        if isinstance(f, Iff):
            return self.formula(f.left, env, shape) == self.formula(f.right, env, shape)
        if isinstance(f, (Exists, Forall)):
            return self.quantify(f, env, shape)
        raise AlgebraError(f"not a formula: {f!r}")

    def quantify(self, f, env, shape):
        some = isinstance(f, Exists)
        dom = self.G.domain(f.over)
        base = math.prod(shape) if shape else 1
        step = max(1, _BUDGET // max(base, 1))
        acc = np.full(shape, not some)
        lifted = {k: (v[..., None] if np.ndim(v) else v) for k, v in env.items()}
        for s in range(0, len(dom), step):
            chunk = dom[s:s + step]
            inner = dict(lifted)
            inner[f.var] = chunk.reshape((1,) * len(shape) + (-1,))
            val = np.broadcast_to(self.formula(f.body, inner, shape + (len(chunk),)),
                                  shape + (len(chunk),))
            if some:
                acc = acc | val.any(axis=-1)
                if acc.all():
                    break
            else:
                acc = acc & val.all(axis=-1)
                if not acc.any():
                    break
        return acc


def _bind(G, assignment):
    env = {}
    for k, v in (assignment or {}).items():
        v = np.asarray(v, dtype=np.intp)
        env[k] = G.rep[v]
    return env


def model_check(G, phi, assignment=None):
    """Truth of `phi` in G under `assignment` (variable name -> element index)."""
    missing = free_vars(phi) - set(assignment or {})
    if missing:
        raise AlgebraError(f"unbound variable(s): {', '.join(sorted(missing))}")
    env = _bind(G, assignment)
    return bool(_Vectorized(G).formula(phi, env, ()))


def extension(G, phi, var, over=None, assignment=None):
    """Representatives x (from `over`, default the universe) with G |= phi[x]."""
    dom = G.domain(over)
    env = _bind(G, assignment)
    env[var] = dom
    missing = free_vars(phi) - set(env)
    if missing:
        raise AlgebraError(f"unbound variable(s): {', '.join(sorted(missing))}")
    val = np.broadcast_to(_Vectorized(G).formula(phi, env, (len(dom),)), (len(dom),))
    return dom[val]


def definable_set(G, phi, var, name=None, over=None, parameters=None):
    """Extension of phi in the variable `var`; stored as a named subset when `name` is given."""
    ext = extension(G, phi, var, over, parameters)
    if name is not None:
        G.add_subset(name, ext)
    return ext


def relation(G, phi, v1, v2, over1=None, over2=None, assignment=None):
    """Boolean matrix of phi over (over1 x over2)."""
    d1, d2 = G.domain(over1), G.domain(over2)
    env = _bind(G, assignment)
    env[v1] = d1[:, None]
    env[v2] = d2[None, :]
    shape = (len(d1), len(d2))
    return np.broadcast_to(_Vectorized(G).formula(phi, env, shape), shape).copy()


# ------------------------------------------------------------------ naive evaluator

def naive_check(G, phi, assignment=None):
    """Reference evaluator over coordinate tuples; independent of `model_check`."""
    rows = [tuple(int(x) for x in r) for r in G.rows.tolist()]
    ids = list(G.theta.ids) if G.theta is not None else list(range(len(rows)))
    block = dict(zip(rows, ids))
    reps = {}
    for r in rows:
        reps.setdefault(block[r], r)
    universe = list(reps.values())
    width = len(G.index)

    def dom(name):
        if name is None:
            return universe
        return [reps[ids[i]] for i in G.subsets[name].tolist()]

    def fn_table(name):
        return G.polys[name] if name in G.polys else G.algebra.op(name).table

    def term(t, env):
        if isinstance(t, Ref):
            if t.name not in env:
                raise AlgebraError(f"unbound variable {t.name!r}")
            return env[t.name]
        if isinstance(t, Named):
            return rows[G.names[t.name]]
        if isinstance(t, Diag):
            return (t.value,) * width
        vals = [term(a, env) for a in t.args]
        tab = fn_table(t.fn)
        if not vals:
            out = (int(tab),) * width
        else:
            out = tuple(int(tab.item(tuple(v[c] for v in vals))) for c in range(width))
        if out not in block:
            raise AlgebraError(f"{t.fn} leaves the gadget")
        return out

    def holds(f, env):
        if isinstance(f, Eq):
            return block[term(f.left, env)] == block[term(f.right, env)]
        if isinstance(f, In):
            return block[term(f.term, env)] in {block[x] for x in dom(f.subset)}
        if isinstance(f, Truth):
            return f.value
        if isinstance(f, Not):
            return not holds(f.body, env)
        if isinstance(f, And):
            return all(holds(p, env) for p in f.parts)
        if isinstance(f, Or):
            return any(holds(p, env) for p in f.parts)
        if isinstance(f, Implies):
            return (not holds(f.left, env)) or holds(f.right, env)
        if isinstance(f, Iff):
            return holds(f.left, env) == holds(f.right, env)
        if isinstance(f, Exists):
            return any(holds(f.body, {**env, f.var: x}) for x in dom(f.over))
        if isinstance(f, Forall):
            return all(holds(f.body, {**env, f.var: x}) for x in dom(f.over))
        raise AlgebraError(f"not a formula: {f!r}")

    env = {k: rows[int(v)] for k, v in (assignment or {}).items()}
    return holds(phi, env)


# ------------------------------------------------------------------ random formulas

def random_formula(G, rng, max_depth=3, scope=(), work=1, budget=4096):
    """A random formula of depth <= max_depth whose free variables lie in `scope`.

    Quantifiers range over the universe or a named subset; the product of the
    domain sizes along any branch stays below `budget` so the naive evaluator
    remains fast.
    """
    fns = [op.name for op in G.algebra.ops] + sorted(G.polys)
    consts = sorted(G.names)
    subsets = sorted(G.subsets)

    def leaf(scope):
        pool = [Ref(v) for v in scope] + [Named(c) for c in consts] + [None]
        pick = rng.choice(pool)
        return Diag(rng.randrange(G.algebra.size)) if pick is None else pick

    def term(d, scope):
        if d == 0 or not fns or rng.random() < 0.4:
            return leaf(scope)
        fn = rng.choice(fns)
        return Ap(fn, tuple(term(d - 1, scope) for _ in range(G.arity(fn))))

    def atom(scope):
        if subsets and rng.random() < 0.25:
            return In(term(1, scope), rng.choice(subsets))
        return Eq(term(2, scope), term(2, scope))

    def form(d, scope, work):
        r = rng.random()
        if d == 0 or r < 0.2:
            return atom(scope)
        if r < 0.35:
            return Not(form(d - 1, scope, work))
        if r < 0.6:
            cls = rng.choice([And, Or, Implies, Iff])
            a, b = form(d - 1, scope, work), form(d - 1, scope, work)
            return cls((a, b)) if cls in (And, Or) else cls(a, b)
        doms = [s for s in [None] + subsets if 0 < work * len(G.domain(s)) <= budget]
        if not doms:
            return atom(scope)
        over = rng.choice(doms)
        var = f"x{len(scope)}"
        body = form(d - 1, scope + (var,), work * len(G.domain(over)))
        return (Exists if rng.random() < 0.5 else Forall)(var, body, over)

    return form(max_depth, tuple(scope), work)


# ------------------------------------------------------------------ polynomial search

class PreconditionUnmet(AlgebraError):
    """A construction's hypotheses fail; `clause` names the first one that does."""

    def __init__(self, clause, detail=""):
        super().__init__(f"{clause}: {detail}" if detail else clause)
        self.clause = clause
        self.detail = detail


def _grid(n, k):
    return np.array(list(itertools.product(range(n), repeat=k)), dtype=np.intp).reshape(-1, k)


def tracked_polys(A, points, cap=DEFAULT_CAP):
    """Closure of polynomial value rows on a list of k-tuples, with provenance."""
    pts = np.asarray(points, dtype=np.intp)
    if pts.ndim == 1:
        pts = pts[:, None]
    k, w = pts.shape[1], len(pts)
    gens = [tuple(pts[:, j]) for j in range(k)] + [(c,) * w for c in range(A.size)]
    return closure(A, gens, width=w, cap=cap, track=True, what="restricted polynomial search")


def extend_poly(A, cl, row, k):
    """Full A^k table of the polynomial that produced `row` in a tracked closure.

    Replays the provenance DAG iteratively (chains can be long).
    """
    n = A.size
    grid = _grid(n, k)
    memo = {}
    stack = [int(row)]
    while stack:
        j = stack[-1]
        if j in memo:
            stack.pop()
            continue
        tag, args = cl.origin[j]
        if tag == "gen":
            memo[j] = grid[:, args] if args < k else np.full(len(grid), args - k, dtype=np.intp)
            stack.pop()
            continue
        todo = [a for a in args if a not in memo]
        if todo:
            stack.extend(todo)
            continue
        tab = A.op(tag).table
        memo[j] = (tab[tuple(memo[a] for a in args)] if args
                   else np.full(len(grid), int(tab), dtype=np.intp))
        stack.pop()
    return memo[int(row)].reshape((n,) * k)


def _poly_search(A, points, accept, k=None):
    """First polynomial whose values on `points` satisfy `accept(row)`, as a full table."""
    pts = np.asarray(points, dtype=np.intp)
    k = pts.shape[1] if k is None else k
    cl = tracked_polys(A, pts)
    for i, r in enumerate(cl.rows):
        if accept(r):
            tab = extend_poly(A, cl, i, k)
            if not np.array_equal(tab[tuple(pts.T)], r):
                raise AssertionError("polynomial replay disagrees with its closure row")
            return tab
    return None


def idempotents_onto(A, W):
    """Unary polynomial tables e with e∘e = e and e(A) = W."""
    W = set(int(w) for w in W)
    return [r for r in unary_polynomials(A)
            if np.array_equal(r[r], r) and set(r.tolist()) == W]


def _boolean_ops(A, zero, one):
    """Polynomial tables acting on {zero, one} as join and complement."""
    pts = [(zero, zero), (zero, one), (one, zero), (one, one)]
    join_tab = _poly_search(A, pts, lambda r: tuple(r) == (zero, one, one, one))
    comp = next((r for r in unary_polynomials(A) if r[zero] == one and r[one] == zero), None)
    return join_tab, comp


def _mu_pairs_on(mu, U):
    U = set(U)
    return [(a, b) for a, b in mu.pairs() if a in U and b in U]


# ------------------------------------------------------------------ witness packages

@dataclass
class WitnessPackage:
    """Everything a construction needs, found by search and then validated.

    `polys` holds full tables on A^k.  A structural package carries congruences
    only and supports building (never recovery).
    """
    kind: str
    algebra: FiniteAlgebra
    congruences: dict = field(default_factory=dict)
    elements: dict = field(default_factory=dict)
    polys: dict = field(default_factory=dict)
    sets: dict = field(default_factory=dict)
    structural: bool = False
    extra: dict = field(default_factory=dict)

    def describe(self):
        return {
            "kind": self.kind,
            "algebra": self.algebra.name,
            "structural": self.structural,
            "congruences": {k: v.literal() for k, v in self.congruences.items()},
            "elements": dict(self.elements),
            "sets": {k: list(v) for k, v in self.sets.items()},
            "polys": sorted(self.polys),
        }


def structural_package(kind, S, **congruences):
    """Package for the constraint-only gadgets (constraint congruences only)."""
    if kind not in ("eq_constraint", "sigma_constant"):
        raise AlgebraError(f"no structural mode for {kind}")
    return WitnessPackage(kind, S, dict(congruences), structural=True)


def _si_unary(S):
    lat = con_all(S)
    mu = monolith(S, lat)
    if not isinstance(mu, Partition):
        raise PreconditionUnmet("subdirectly irreducible", "the algebra has no monolith")
    bot = Partition.bottom(S.size)
    ll = labeled_lattice(S, lat)
    t = ll.labels[(lat.index(bot), lat.index(mu))]
    if t != 1:
        raise PreconditionUnmet("unary-type monolith", f"monolith has type {t}")
    return lat, ll, mu


def _tc(S, a, b, g):
    return tc_check(S, a, b, g).holds


def find_package(kind, S):
    """Search S for a witness package of the given kind; raises PreconditionUnmet."""
    finders = {
        "split_vertex": _find_split_vertex,
        "vertex_product": _find_vertex_product,
        "eq_constraint": _find_eq_constraint,
        "support_point": _find_support_point,
        "twin_quotient": _find_twin_quotient,
        "sigma_constant": _find_sigma_constant,
    }
    if kind not in finders:
        raise AlgebraError(f"unknown gadget kind {kind!r}; expected one of {', '.join(KINDS)}")
    if S.size > MAX_ALGEBRA:
        raise CapExceeded("algebra size for gadgets", MAX_ALGEBRA, S.size)
    pkg = finders[kind](S)
    verdict = validate_package(pkg)
    if verdict.status != HOLDS:
        raise AssertionError(f"search produced an invalid package: {verdict.trace}")
    return pkg


def _two_point_sets(S, lo, hi):
    """(lo, hi)-minimal sets with exactly two elements, as ordered pairs (both orders)."""
    out = []
    for ms in minimal_sets(S, lo, hi):
        if len(ms.U) == 2:
            a, b = ms.U
            out.append((ms, a, b))
            out.append((ms, b, a))
    return out


def _find_split_vertex(S):
    n = S.size
    lat = con_all(S)
    ll = labeled_lattice(S, lat)
    bot = Partition.bottom(n)
    atoms = [lat.elements[j] for (i, j), t in sorted(ll.labels.items())
             if i == lat.index(bot) and t == 1]
    if not atoms:
        raise PreconditionUnmet("unary-type atom", "no atom of type 1")
    covers = [(lat.elements[i], lat.elements[j]) for (i, j), t in sorted(ll.labels.items()) if t == 3]
    if not covers:
        raise PreconditionUnmet("boolean-type cover", "no cover of type 3")
    last = "no candidate"
    for delta in atoms:
        for alpha, beta in covers:
            for msK, zero, one in _two_point_sets(S, alpha, beta):
                K = [zero, one]
                if _tc(S, K, delta, bot):
                    last = "TC(K, delta; bot) holds"
                    continue
                if not _tc(S, delta, K, bot):
                    last = "TC(delta, K; bot) fails"
                    continue
                for ms in minimal_sets(S, bot, delta):
                    U = list(ms.U)
                    for N in ms.traces:
                        for c, d in itertools.permutations(N, 2):
                            pts = [(x, y) for x in K for y in range(n)]

                            def ok(r, c=c, d=d, U=U):
                                val = dict(zip(pts, r.tolist()))
                                return (val[(zero, c)] == val[(zero, d)]
                                        and val[(one, c)] != val[(one, d)]
                                        and all(val[(one, u)] == u for u in U))
                            q = _poly_search(S, pts, ok)
                            if q is None:
                                last = "no binary polynomial separates the trace"
                                continue
                            join_tab, comp = _boolean_ops(S, zero, one)
                            e01 = idempotents_onto(S, K)
                            if join_tab is None or comp is None or not e01:
                                last = "boolean operations on K are not polynomial"
                                continue
                            return WitnessPackage(
                                "split_vertex", S,
                                {"delta": delta, "alpha": alpha, "beta": beta},
                                {"zero": zero, "one": one, "c": c, "d": d},
                                {"q": q, "join": join_tab, "comp": comp, "e01": e01[0],
                                 "eU": np.array(ms.e)},
                                {"K": tuple(K), "U": tuple(U), "N": tuple(N)})
    raise PreconditionUnmet("split-vertex witness", last)


def _separators(S, zero, one):
    """Binary polynomials s(x, y), x in {zero, one}, whose equalizer patterns separate S."""
    n = S.size
    found = []
    pattern = lambda tab, a: tab[zero, a] == tab[one, a]
    for a, b in itertools.combinations(range(n), 2):
        if any(pattern(t, a) != pattern(t, b) for t in found):
            continue
        pts = [(zero, a), (one, a), (zero, b), (one, b)]
        tab = _poly_search(S, pts, lambda r: (r[0] == r[1]) != (r[2] == r[3]))
        if tab is None:
            return None, (a, b)
        found.append(tab)
    return found, None


def _find_vertex_product(S):
    lat, ll, mu = _si_unary(S)
    sigma = ss_radical(S, ll)
    last = "no boolean cover incomparable to the radical"
    for (i, j), t in sorted(ll.labels.items()):
        if t != 3:
            continue
        ab, beta = lat.elements[i], lat.elements[j]
        if beta <= sigma or sigma <= beta:
            continue
        for k in lat.upper_covers(i):
            alpha = lat.elements[k]
            if ll.labels[(i, k)] != 1 or not alpha <= sigma or meet(alpha, beta) != ab:
                continue
            for msK, zero, one in _two_point_sets(S, ab, beta):
                seps, bad = _separators(S, zero, one)
                if seps is None:
                    last = f"the centralizer of K is not trivial (pair {bad})"
                    continue
                join_tab, comp = _boolean_ops(S, zero, one)
                e01 = idempotents_onto(S, [zero, one])
                if join_tab is None or comp is None or not e01:
                    last = "boolean operations on K are not polynomial"
                    continue
                ms = minimal_sets(S, ab, alpha)[0]
                N = ms.traces[0]
                c = N[0]
                d = next(x for x in N if not ab.related(c, x))
                polys = {"join": join_tab, "comp": comp, "e01": e01[0], "eU": np.array(ms.e)}
                for s, tab in enumerate(seps):
                    polys[f"sep{s}"] = tab
                return WitnessPackage(
                    "vertex_product", S,
                    {"mu": mu, "sigma": sigma, "alpha": alpha, "beta": beta, "alpha_beta": ab},
                    {"zero": zero, "one": one, "c": c, "d": d},
                    polys, {"K": (zero, one), "U": ms.U, "N": N},
                    extra={"separators": [f"sep{s}" for s in range(len(seps))]})
    raise PreconditionUnmet("vertex-product witness", last)


def _find_eq_constraint(S):
    n = S.size
    lat, ll, mu = _si_unary(S)
    bot = Partition.bottom(n)
    rad = s_radical(S, ll)
    if rad != mu:
        raise PreconditionUnmet("radical is the monolith", f"solvable radical {rad.literal()}")
    im = lat.index(mu)
    ups = [k for k in lat.upper_covers(im) if ll.labels[(im, k)] == 3]
    if len(ups) < 2:
        raise PreconditionUnmet("two boolean covers above the radical",
                                f"{len(ups)} boolean upper cover(s)")
    last = "no witness"
    for k0, k1 in itertools.permutations(ups, 2):
        a0, a1 = lat.elements[k0], lat.elements[k1]
        for ms0, z0, o0 in _two_point_sets(S, mu, a0):
            if _tc(S, [z0, o0], mu, bot) or _tc(S, mu, [z0, o0], bot):
                last = "K0 centralizes or is centralized by the monolith"
                continue
            for ms1, z1, o1 in _two_point_sets(S, mu, a1)[::2]:
                if _tc(S, [z1, o1], mu, bot) or _tc(S, mu, [z1, o1], bot):
                    last = "K1 centralizes or is centralized by the monolith"
                    continue
                for qt in unary_polynomials(S):
                    q0, q1 = int(qt[z0]), int(qt[o0])
                    if q0 == q1 or not mu.related(q0, q1):
                        continue
                    pts = [(q0, z1), (q0, o1), (q1, z1), (q1, o1)]
                    p1 = _poly_search(S, pts, lambda r: r[0] == r[1] and r[2] != r[3])
                    if p1 is None:
                        last = "no binary polynomial links the two minimal sets"
                        continue
                    j0, _ = _boolean_ops(S, z0, o0)
                    j1, _ = _boolean_ops(S, z1, o1)
                    if j0 is None or j1 is None:
                        last = "no join polynomial on a minimal set"
                        continue
                    return WitnessPackage(
                        "eq_constraint", S,
                        {"mu": mu, "alpha0": a0, "alpha1": a1},
                        {"zero0": z0, "one0": o0, "zero1": z1, "one1": o1},
                        {"q": np.asarray(qt), "p1": p1, "e0": np.array(ms0.e),
                         "e1": np.array(ms1.e), "join0": j0, "join1": j1},
                        {"K0": (z0, o0), "K1": (z1, o1)})
    raise PreconditionUnmet("eq-constraint witness", last)


def _support_search(S, U, Up, a0, a1, mu):
    """Binary q with q(a1, -) the identity on U, q(a0, -) collapsing, each q(u', -) idempotent."""
    n = S.size
    Ulist = list(U)
    pts = [(x, y) for x in Up for y in range(n)]
    pos = {p: i for i, p in enumerate(pts)}
    blocks = [b for b in (tuple(sorted(set(Ulist) & set(B))) for B in mu.blocks()) if len(b) > 1]

    def ok(r):
        val = lambda x, y: int(r[pos[(x, y)]])
        if any(val(x, y) not in U for x, y in pts):
            return False
        for x in Up:
            row = [val(x, y) for y in range(n)]
            if any(row[row[y]] != row[y] for y in range(n)):
                return False
            ident = all(row[u] == u for u in Ulist)
            coll = all(len({row[u] for u in b}) == 1 for b in blocks)
            if not (ident or coll):
                return False
        return (all(val(a1, u) == u for u in Ulist)
                and all(len({val(a0, u) for u in b}) == 1 for b in blocks))
    return _poly_search(S, pts, ok)


def _find_support_point(S):
    n = S.size
    lat, ll, mu = _si_unary(S)
    bot = Partition.bottom(n)
    sigma = ss_radical(S, ll)
    if not _tc(S, sigma, sigma, mu):
        raise PreconditionUnmet("sigma abelian over the monolith", "TC(sigma, sigma; mu) fails")
    if _tc(S, sigma, sigma, bot):
        raise PreconditionUnmet("sigma not abelian", "TC(sigma, sigma; bot) holds")
    last = "no witness"
    for ms in minimal_sets(S, bot, mu):
        U = ms.U
        muU = _mu_pairs_on(mu, U)
        if _tc(S, sigma, muU, bot):
            last = "TC(sigma, mu|U; bot) holds"
            continue
        for (i, j), t in sorted(ll.labels.items()):
            th0, th1 = lat.elements[i], lat.elements[j]
            if t != 1 or not (mu <= th0 and th1 <= sigma):
                continue
            if not _tc(S, th0, muU, bot) or _tc(S, th1, muU, bot):
                continue
            for msp in minimal_sets(S, th0, th1):
                for Np in msp.traces:
                    for a0, a1 in itertools.permutations(Np, 2):
                        if th0.related(a0, a1):
                            continue
                        q = _support_search(S, set(U), msp.U, a0, a1, mu)
                        if q is None:
                            last = "no binary polynomial with the support properties"
                            continue
                        N = ms.traces[0]
                        m0 = int(q[a0, N[0]])
                        m1 = next(x for x in N if x != m0)
                        return WitnessPackage(
                            "support_point", S,
                            {"mu": mu, "sigma": sigma, "theta0": th0, "theta1": th1},
                            {"a0": a0, "a1": a1, "m0": m0, "m1": m1},
                            {"q": q, "eU": np.array(ms.e), "eUp": np.array(msp.e)},
                            {"U": U, "Uprime": msp.U, "N": N, "Nprime": Np})
    raise PreconditionUnmet("support-point witness", last)


def _twin_data(S, mu, sigma, ms):
    P = pol_perm_group(S, ms.U)
    T = twin_group(S, ms.U, sigma)
    pos = {u: i for i, u in enumerate(ms.U)}
    moves = any(T.set_image(g, N) == frozenset(N) and any(g[pos[x]] != x for x in N)
                for g in T.elements for N in ms.traces)
    return P, T, moves


def _find_twin_quotient(S):
    n = S.size
    lat, ll, mu = _si_unary(S)
    bot = Partition.bottom(n)
    sigma = ss_radical(S, ll)
    if not _tc(S, sigma, sigma, mu):
        raise PreconditionUnmet("sigma abelian over the monolith", "TC(sigma, sigma; mu) fails")
    for ms in minimal_sets(S, bot, mu):
        P, T, moves = _twin_data(S, mu, sigma, ms)
        if not moves:
            continue
        orbits = {a: tuple(o) for o in T.orbits(ms.body) for a in o}
        return WitnessPackage(
            "twin_quotient", S, {"mu": mu, "sigma": sigma}, {},
            {"e": np.array(ms.e)},
            {"U": ms.U, "body": ms.body},
            extra={"traces": ms.traces, "polgrp": P, "twingrp": T, "orbits": orbits})
    raise PreconditionUnmet("twins permute a trace", "the twin group fixes every trace pointwise")


def _equalizer(t0, A, y1, y2):
    return frozenset(x for x in A if t0[x, y1] == t0[x, y2])


def _find_sigma_constant(S):
    n = S.size
    lat, ll, mu = _si_unary(S)
    bot = Partition.bottom(n)
    sigma = ss_radical(S, ll)
    for name, (a, b, g, want) in {
            "TC(sigma, sigma; mu)": (sigma, sigma, mu, True),
            "TC(sigma, mu; bot)": (sigma, mu, bot, True),
            "TC(mu, sigma; bot)": (mu, sigma, bot, True),
            "TC(sigma, sigma; bot) fails": (sigma, sigma, bot, False)}.items():
        if _tc(S, a, b, g) != want:
            raise PreconditionUnmet(name)
    last = "no binary witness"
    for ms in minimal_sets(S, bot, mu):
        e = np.array(ms.e)
        for CA in sigma.blocks():
            for CB in sigma.blocks():
                if len(CA) < 2 or len(CB) < 2:
                    continue
                pts = [(x, y) for x in CA for y in CB]
                cl = tracked_polys(S, pts)
                best = None
                for i, r in enumerate(cl.rows):
                    t = np.full((n, n), -1)
                    t[tuple(np.array(pts).T)] = e[r]
                    for b0, b1 in itertools.permutations(CB, 2):
                        E = _equalizer(t, CA, b0, b1)
                        if not E or len(E) == len(CA):
                            continue
                        key = (len(E), -i)
                        if best is None or key > best[0]:
                            best = (key, i, b0, b1, E)
                if best is None:
                    last = "no equalizer is proper"
                    continue
                _, i, b0, b1, E = best
                t0 = e[extend_poly(S, cl, i, 2)]
                a0 = min(E)
                a1 = min(x for x in CA if x not in E)
                c, m0, m1 = int(t0[a0, b0]), int(t0[a1, b0]), int(t0[a1, b1])
                M = next(N for N in ms.traces if m0 in N)
                return WitnessPackage(
                    "sigma_constant", S, {"mu": mu, "sigma": sigma},
                    {"a0": a0, "a1": a1, "b0": b0, "b1": b1, "c": c, "m0": m0, "m1": m1},
                    {"t0": t0, "e": e},
                    {"U": ms.U, "A": tuple(CA), "B": tuple(CB), "M": tuple(M),
                     "E_b0_b1": tuple(sorted(E))})
    raise PreconditionUnmet("sigma-constant witness", last)


# ------------------------------------------------------------------ package validation

def _is_cover(S, lo, hi, want_type=None):
    lat = con_all(S)
    if lo not in lat or hi not in lat:
        return False
    i, j = lat.index(lo), lat.index(hi)
    if j not in lat.upper_covers(i):
        return False
    return want_type is None or labeled_lattice(S, lat).labels[(i, j)] == want_type


def _is_minimal_set(S, lo, hi, W):
    return any(set(ms.U) == set(W) for ms in minimal_sets(S, lo, hi))


def _idempotent_onto(e, W):
    e = np.asarray(e)
    return np.array_equal(e[e], e) and set(e.tolist()) == set(W)


def _package_clauses(pkg):
    """Ordered (clause, predicate) pairs for the package's construction."""
    S, C, E, P, W = pkg.algebra, pkg.congruences, pkg.elements, pkg.polys, pkg.sets
    n = S.size
    bot = Partition.bottom(n)
    kind = pkg.kind
    if pkg.structural:
        return [(f"{k} is a congruence", lambda k=k: C[k] in con_all(S)) for k in sorted(C)]
    if kind == "split_vertex":
        zero, one, c, d = E["zero"], E["one"], E["c"], E["d"]
        K, U, N = W["K"], W["U"], W["N"]
        q = P["q"]
        return [
            ("delta is a unary-type atom", lambda: _is_cover(S, bot, C["delta"], 1)),
            ("alpha < beta is a boolean-type cover", lambda: _is_cover(S, C["alpha"], C["beta"], 3)),
            ("K is (alpha, beta)-minimal", lambda: _is_minimal_set(S, C["alpha"], C["beta"], K)),
            ("beta = Cg(0, 1)", lambda: cg_of(S, zero, one) == C["beta"]),
            ("TC(K, delta; bot) fails", lambda: not _tc(S, list(K), C["delta"], bot)),
            ("TC(delta, K; bot) holds", lambda: _tc(S, C["delta"], list(K), bot)),
            ("U is (bot, delta)-minimal", lambda: _is_minimal_set(S, bot, C["delta"], U)),
            ("c, d distinct in one trace N of U", lambda: c != d and {c, d} <= set(N)
             and set(N) <= set(U) and C["delta"].related(c, d)),
            ("no nonconstant polynomial map from N into K", lambda: all(
                len({int(f[x]) for x in N}) == 1 for f in unary_polynomials(S)
                if {int(f[x]) for x in N} <= set(K))),
            ("q(0, c) = q(0, d)", lambda: q[zero, c] == q[zero, d]),
            ("q(1, c) != q(1, d)", lambda: q[one, c] != q[one, d]),
            ("q(1, u) = u on U", lambda: all(q[one, u] == u for u in U)),
            ("e01 is idempotent onto K", lambda: _idempotent_onto(P["e01"], K)),
            ("eU is idempotent onto U", lambda: _idempotent_onto(P["eU"], U)),
            ("join and comp are boolean on K", lambda: _boolean_on(P["join"], P["comp"], zero, one)),
        ]
    if kind == "vertex_product":
        zero, one, c, d = E["zero"], E["one"], E["c"], E["d"]
        ab, al, be, sig = C["alpha_beta"], C["alpha"], C["beta"], C["sigma"]
        seps = [P[s] for s in pkg.extra["separators"]]
        return [
            ("subdirectly irreducible with unary monolith", lambda: _si_ok(S, C["mu"])),
            ("sigma is the strongly solvable radical", lambda: ss_radical(S) == sig),
            ("beta is incomparable to sigma", lambda: not (be <= sig or sig <= be)),
            ("alpha_beta < beta is boolean", lambda: _is_cover(S, ab, be, 3)),
            ("alpha_beta < alpha is unary and alpha <= sigma",
             lambda: _is_cover(S, ab, al, 1) and al <= sig and meet(al, be) == ab),
            ("K is (alpha_beta, beta)-minimal", lambda: _is_minimal_set(S, ab, be, W["K"])),
            ("U is (alpha_beta, alpha)-minimal", lambda: _is_minimal_set(S, ab, al, W["U"])),
            ("c, d in U are alpha- but not alpha_beta-related",
             lambda: {c, d} <= set(W["U"]) and al.related(c, d) and not ab.related(c, d)),
            ("the separators distinguish every pair (centralizer of K is trivial)",
             lambda: all(any((t[zero, a] == t[one, a]) != (t[zero, b] == t[one, b]) for t in seps)
                         for a, b in itertools.combinations(range(n), 2))),
            ("e01 is idempotent onto K", lambda: _idempotent_onto(P["e01"], W["K"])),
            ("eU is idempotent onto U", lambda: _idempotent_onto(P["eU"], W["U"])),
            ("join and comp are boolean on K", lambda: _boolean_on(P["join"], P["comp"], zero, one)),
        ]
    if kind == "eq_constraint":
        mu, a0, a1 = C["mu"], C["alpha0"], C["alpha1"]
        z0, o0, z1, o1 = E["zero0"], E["one0"], E["zero1"], E["one1"]
        q, p1 = P["q"], P["p1"]
        return [
            ("subdirectly irreducible with unary monolith", lambda: _si_ok(S, mu)),
            ("the solvable radical is the monolith", lambda: s_radical(S) == mu),
            ("alpha0, alpha1 are distinct boolean covers of mu", lambda: a0 != a1
             and _is_cover(S, mu, a0, 3) and _is_cover(S, mu, a1, 3)),
            ("K0 is (mu, alpha0)-minimal", lambda: _is_minimal_set(S, mu, a0, W["K0"])),
            ("K1 is (mu, alpha1)-minimal", lambda: _is_minimal_set(S, mu, a1, W["K1"])),
            ("K0 is alpha0- but not alpha1-related", lambda: a0.related(z0, o0) and not a1.related(z0, o0)),
            ("K1 is alpha1- but not alpha0-related", lambda: a1.related(z1, o1) and not a0.related(z1, o1)),
            ("TC(K_a, mu; bot) fails", lambda: not _tc(S, [z0, o0], mu, bot)
             and not _tc(S, [z1, o1], mu, bot)),
            ("TC(mu, K_a; bot) fails", lambda: not _tc(S, mu, [z0, o0], bot)
             and not _tc(S, mu, [z1, o1], bot)),
            ("q maps K0 injectively into a mu-class", lambda: q[z0] != q[o0] and mu.related(q[z0], q[o0])),
            ("p1(q(0_0), 0_1) = p1(q(0_0), 1_1)", lambda: p1[q[z0], z1] == p1[q[z0], o1]),
            ("p1(q(1_0), 0_1) != p1(q(1_0), 1_1)", lambda: p1[q[o0], z1] != p1[q[o0], o1]),
            ("e0, e1 are idempotent onto K0, K1", lambda: _idempotent_onto(P["e0"], W["K0"])
             and _idempotent_onto(P["e1"], W["K1"])),
            ("join0, join1 are joins with bottoms 0_0, 0_1",
             lambda: _is_join(P["join0"], z0, o0) and _is_join(P["join1"], z1, o1)),
        ]
    if kind == "support_point":
        mu, sig, th0, th1 = C["mu"], C["sigma"], C["theta0"], C["theta1"]
        a0, a1, m0, m1 = E["a0"], E["a1"], E["m0"], E["m1"]
        U, Up, N = W["U"], W["Uprime"], W["N"]
        q = P["q"]
        muU = _mu_pairs_on(mu, U)
        blocks = [b for b in (tuple(sorted(set(U) & set(B))) for B in mu.blocks()) if len(b) > 1]
        collapses = lambda x: all(len({int(q[x, u]) for u in b}) == 1 for b in blocks)
        identity = lambda x: all(q[x, u] == u for u in U)
        return [
            ("subdirectly irreducible with unary monolith", lambda: _si_ok(S, mu)),
            ("sigma is the strongly solvable radical", lambda: ss_radical(S) == sig),
            ("TC(sigma, sigma; mu) holds", lambda: _tc(S, sig, sig, mu)),
            ("TC(sigma, sigma; bot) fails", lambda: not _tc(S, sig, sig, bot)),
            ("U is (bot, mu)-minimal", lambda: _is_minimal_set(S, bot, mu, U)),
            ("TC(sigma, mu|U; bot) fails", lambda: not _tc(S, sig, muU, bot)),
            ("mu <= theta0 < theta1 <= sigma is a unary cover",
             lambda: mu <= th0 and th1 <= sig and _is_cover(S, th0, th1, 1)),
            ("TC(theta0, mu|U; bot) holds and TC(theta1, mu|U; bot) fails",
             lambda: _tc(S, th0, muU, bot) and not _tc(S, th1, muU, bot)),
            ("U' is (theta0, theta1)-minimal", lambda: _is_minimal_set(S, th0, th1, Up)),
            ("a0, a1 lie in one trace of U' and are theta0-separated",
             lambda: {a0, a1} <= set(W["Nprime"]) and not th0.related(a0, a1)),
            ("q takes values in U", lambda: set(np.unique(q).tolist()) <= set(U)),
            ("q(u', -) is idempotent for u' in U'", lambda: all(
                np.array_equal(q[x][q[x]], q[x]) for x in Up)),
            ("q(u', -) is the identity or collapsing on U", lambda: all(
                identity(x) or collapses(x) for x in Up)),
            ("q(a1, -) is the identity on U", lambda: identity(a1)),
            ("q(a0, -) collapses mu|U", lambda: collapses(a0)),
            ("m0 = q(a0, N) and m1 != m0 in N", lambda: {int(q[a0, u]) for u in N} == {m0}
             and m1 in N and m1 != m0),
            ("eU, eU' are idempotent onto U, U'", lambda: _idempotent_onto(P["eU"], U)
             and _idempotent_onto(P["eUp"], Up)),
        ]
    if kind == "twin_quotient":
        mu, sig = C["mu"], C["sigma"]
        U = W["U"]
        T = pkg.extra["twingrp"]
        return [
            ("subdirectly irreducible with unary monolith", lambda: _si_ok(S, mu)),
            ("sigma is the strongly solvable radical", lambda: ss_radical(S) == sig),
            ("TC(sigma, sigma; mu) holds", lambda: _tc(S, sig, sig, mu)),
            ("U is (bot, mu)-minimal", lambda: _is_minimal_set(S, bot, mu, U)),
            ("e is idempotent onto U", lambda: _idempotent_onto(P["e"], U)),
            ("the twin group permutes a trace nontrivially", lambda: _twin_data(
                S, mu, sig, next(m for m in minimal_sets(S, bot, mu) if set(m.U) == set(U)))[2]),
            ("twin group matches a fresh computation", lambda: set(T.elements) == set(
                twin_group(S, U, sig).elements)),
        ]
    if kind == "sigma_constant":
        mu, sig = C["mu"], C["sigma"]
        a0, a1, b0, b1 = E["a0"], E["a1"], E["b0"], E["b1"]
        t0 = P["t0"]
        A_, B_ = W["A"], W["B"]
        Eb = _equalizer(t0, A_, b0, b1)
        return [
            ("subdirectly irreducible with unary monolith", lambda: _si_ok(S, mu)),
            ("sigma is the strongly solvable radical", lambda: ss_radical(S) == sig),
            ("TC(sigma, sigma; mu) holds", lambda: _tc(S, sig, sig, mu)),
            ("TC(sigma, mu; bot) holds", lambda: _tc(S, sig, mu, bot)),
            ("TC(mu, sigma; bot) holds", lambda: _tc(S, mu, sig, bot)),
            ("TC(sigma, sigma; bot) fails", lambda: not _tc(S, sig, sig, bot)),
            ("A = a0/sigma contains a1, B = b0/sigma contains b1",
             lambda: set(A_) == set(sig.block_of(a0)) and a1 in A_
             and set(B_) == set(sig.block_of(b0)) and b1 in B_),
            ("t0 takes values in a (bot, mu)-minimal set U", lambda: _is_minimal_set(S, bot, mu, W["U"])
             and set(np.unique(t0).tolist()) <= set(W["U"])),
            ("c = t0(a0, b0) = t0(a0, b1)", lambda: t0[a0, b0] == t0[a0, b1] == E["c"]),
            ("m0 = t0(a1, b0) != t0(a1, b1) = m1", lambda: t0[a1, b0] == E["m0"] != E["m1"] == t0[a1, b1]),
            ("E(b0, b1) is a proper subset of A", lambda: a0 in Eb and a1 not in Eb and len(Eb) < len(A_)),
            ("E(b0, b1) is maximal among proper equalizers", lambda: not any(
                Eb < _equalizer(t0, A_, y1, y2) < frozenset(A_) for y1, y2 in itertools.product(B_, B_))),
        ]
    raise AlgebraError(f"unknown gadget kind {kind!r}")


def cg_of(S, a, b):
    from .congruence import cg
    return cg(S, a, b)


def _si_ok(S, mu):
    lat = con_all(S)
    m = monolith(S, lat)
    return isinstance(m, Partition) and m == mu and _is_cover(S, Partition.bottom(S.size), mu, 1)


def _boolean_on(join_tab, comp, zero, one):
    j = join_tab
    return (j[zero, zero] == zero and j[zero, one] == j[one, zero] == j[one, one] == one
            and comp[zero] == one and comp[one] == zero)


def _is_join(j, zero, one):
    return j[zero, zero] == zero and j[zero, one] == j[one, zero] == j[one, one] == one


def validate_package(pkg):
    """Check a package against its construction's hypotheses, clause by clause."""
    trace = []
    for clause, pred in _package_clauses(pkg):
        try:
            ok = bool(pred())
        except (KeyError, IndexError) as exc:
            ok = False
            clause = f"{clause} (missing {exc})"
        trace.append(f"{clause}: {'ok' if ok else 'FAILS'}")
        if not ok:
            return Verdict(UNMET, {"kind": pkg.kind, "clause": clause}, trace)
    return Verdict(HOLDS, {"kind": pkg.kind, "package": pkg.describe()}, trace)


# ------------------------------------------------------------------ congruences of subpowers

def _translations(op, rows, look, xs, pos):
    """Indices of op(..., x, ...) with x from `xs` at `pos` and every choice of
    the other arguments from `rows`; shape (len(xs), m^(k-1))."""
    m, width = rows.shape
    k = op.arity
    others = (np.indices((m,) * (k - 1)).reshape(k - 1, -1) if k > 1
              else np.zeros((0, 1), dtype=np.intp))
    cnt = others.shape[1]
    args, j = [], 0
    for p in range(k):
        if p == pos:
            args.append(rows[xs][:, None, :])
        else:
            args.append(rows[others[j]][None, :, :])
            j += 1
    res = op.table[tuple(args)]
    idx = look(res.reshape(-1, width))
    if (idx < 0).any():
        raise AlgebraError("subpower is not closed under the basic operations")
    return idx.reshape(len(xs), cnt)


def _batch(m, arity, budget=1 << 21):
    return max(1, budget // max(1, m ** (arity - 1)))


def theta_generate(A, rows, pairs, sigma=None, cap=GADGET_CAP):
    """Least congruence of the subpower `rows` containing `pairs` (row-index pairs).

    Unary translations of merged pairs are applied in batches to every other
    element; only merges that join distinct classes are queued again.  With
    `sigma` (a congruence of A), Θ <= σ^I is checked along the way.
    Returns (Partition over row indices, list of merging pairs).
    """
    rows = np.asarray(rows, dtype=np.intp)
    m = len(rows)
    look = Lookup(rows, A.size)
    comp = np.arange(m)
    sig = None if sigma is None else sigma.array()
    merged, queue = [], []

    def union(a, b):
        ca, cb = comp[a], comp[b]
        if ca == cb:
            return
        if sig is not None and not np.array_equal(sig[rows[a]], sig[rows[b]]):
            raise PreconditionUnmet("theta below sigma^I",
                                    f"{rows[a].tolist()} ~ {rows[b].tolist()} leaves sigma^I")
        lo, hi = min(ca, cb), max(ca, cb)
        comp[comp == hi] = lo
        merged.append((int(a), int(b)))
        queue.append((int(a), int(b)))

    for a, b in pairs:
        union(int(a), int(b))
    ops = [op for op in A.ops if op.arity > 0]
    for op in ops:
        if m ** (op.arity - 1) > cap:
            raise CapExceeded("translations for theta generation", cap, m ** (op.arity - 1))
    while queue:
        size = min(_batch(m, op.arity) for op in ops) if ops else len(queue)
        batch, queue[:] = queue[:size], queue[size:]
        xa = np.array([a for a, _ in batch])
        xb = np.array([b for _, b in batch])
        for op in ops:
            for pos in range(op.arity):
                ia = _translations(op, rows, look, xa, pos).reshape(-1)
                ib = _translations(op, rows, look, xb, pos).reshape(-1)
                hit = np.nonzero(comp[ia] != comp[ib])[0]
                if not len(hit):
                    continue
                _, first = np.unique(np.stack([comp[ia[hit]], comp[ib[hit]]]), axis=1,
                                     return_index=True)
                for h in hit[first]:
                    union(int(ia[h]), int(ib[h]))
    return Partition(comp.tolist()), merged


def _theta_is_congruence(A, rows, theta):
    """Compatibility of Θ with every basic operation, checked on a spanning set of pairs."""
    rows = np.asarray(rows, dtype=np.intp)
    ids = theta.array()
    m = len(rows)
    first = {}
    pairs = []
    for i, b in enumerate(ids.tolist()):
        if b in first:
            pairs.append((first[b], i))
        else:
            first[b] = i
    if not pairs:
        return True
    look = Lookup(rows, A.size)
    pa = np.array([a for a, _ in pairs])
    pb = np.array([b for _, b in pairs])
    for op in A.ops:
        if op.arity == 0:
            continue
        size = _batch(m, op.arity)
        for s in range(0, len(pairs), size):
            for pos in range(op.arity):
                ia = _translations(op, rows, look, pa[s:s + size], pos)
                ib = _translations(op, rows, look, pb[s:s + size], pos)
                if (ids[ia] != ids[ib]).any():
                    return False
    return True


# ------------------------------------------------------------------ builders

def _vertex_labels(graph, split=False, infinity=False):
    if split:
        idx = [f"{v}{s}" for v in graph.vertices for s in "+-"]
    else:
        idx = [str(v) for v in graph.vertices]
    if infinity:
        idx.append(INF)
    return tuple(idx)


def _diagonal(n, width):
    return [(a,) * width for a in range(n)]


def _generated(S, named, width, cap):
    gens = list(dict.fromkeys(list(named.values()) + _diagonal(S.size, width)))
    return closure(S, gens, width=width, cap=cap, what="gadget subpower").rows


def _index_names(rows, n, named):
    look = Lookup(rows, n)
    out = {}
    for k, r in named.items():
        i = int(look(np.array(r, dtype=np.intp).reshape(1, -1))[0])
        if i < 0:
            raise AssertionError(f"named element {k} is missing from the subpower")
        out[k] = i
    return out


def _fixed_subset(G, poly, name):
    x = Ref("x")
    return definable_set(G, Eq(Ap(poly, (x,)), x), "x", name=name)


def build_gadget(kind, source, pkg, cap=GADGET_CAP):
    """Materialize the subpower (and quotient) of the given construction."""
    if kind not in KINDS:
        raise AlgebraError(f"unknown gadget kind {kind!r}; expected one of {', '.join(KINDS)}")
    if pkg.kind != kind:
        raise AlgebraError(f"package is for {pkg.kind}, not {kind}")
    verdict = validate_package(pkg)
    if verdict.status != HOLDS:
        raise PreconditionUnmet(verdict.witness.get("clause", "package"), "package fails validation")
    S = pkg.algebra
    if S.size > MAX_ALGEBRA:
        raise CapExceeded("algebra size for gadgets", MAX_ALGEBRA, S.size)
    if kind == "eq_constraint":
        if not isinstance(source, EqPair):
            raise AlgebraError("eq_constraint needs an EqPair input")
        if source.n > MAX_VERTICES:
            raise CapExceeded("carrier size", MAX_VERTICES, source.n)
    else:
        if not isinstance(source, Graph):
            raise AlgebraError(f"{kind} needs a Graph input")
        if source.n > MAX_VERTICES:
            raise CapExceeded("vertex count", MAX_VERTICES, source.n)
    builder = {
        "split_vertex": _build_split_vertex,
        "vertex_product": _build_vertex_product,
        "eq_constraint": _build_eq_constraint,
        "support_point": _build_support_point,
        "twin_quotient": _build_twin_quotient,
        "sigma_constant": _build_sigma_constant,
    }[kind]
    G = builder(source, pkg, cap)
    G.source, G.package = source, pkg
    return G


def _build_split_vertex(g, pkg, cap):
    S, E = pkg.algebra, pkg.elements
    zero, one, c, d = E["zero"], E["one"], E["c"], E["d"]
    idx = _vertex_labels(g, split=True)
    named = {f"chi_beta_{v}": _unit(idx, {f"{v}+", f"{v}-"}, one, zero) for v in g.vertices}
    for v, w in g.edges:
        named[f"chi_delta_{v}_{w}"] = _unit(idx, {f"{v}+", f"{w}+"}, d, c)
    named["chi_delta_plus"] = _unit(idx, {f"{v}+" for v in g.vertices}, d, c)
    rows = _generated(S, named, len(idx), cap)
    G = GadgetStructure("split_vertex", S, idx, rows, names=_index_names(rows, S.size, named),
                        polys=dict(pkg.polys))
    _fixed_subset(G, "e01", "K")
    _fixed_subset(G, "eU", "U")
    definable_set(G, formula_atom("join", zero, "K"), "x", name="atoms")
    return G


def _build_vertex_product(g, pkg, cap):
    S, E = pkg.algebra, pkg.elements
    zero, one, c, d = E["zero"], E["one"], E["c"], E["d"]
    idx = _vertex_labels(g)
    named = {f"chi_beta_{v}": _unit(idx, {str(v)}, one, zero) for v in g.vertices}
    for v, w in g.edges:
        named[f"chi_alpha_{v}_{w}"] = _unit(idx, {str(v), str(w)}, d, c)
    rows = _generated(S, named, len(idx), cap)
    G = GadgetStructure("vertex_product", S, idx, rows, names=_index_names(rows, S.size, named),
                        polys=dict(pkg.polys))
    _fixed_subset(G, "e01", "K")
    _fixed_subset(G, "eU", "U")
    definable_set(G, formula_atom("join", zero, "K"), "x", name="atoms")
    if g.n < MIN_VERTICES["vertex_product"]:
        G.notes.append(f"{g.n} vertices: the edge argument is only guaranteed from "
                       f"{MIN_VERTICES['vertex_product']} vertices on")
    return G


def _eq_rows(S, e, a0, a1):
    """All x in S^I that are alpha0-constant on R1-blocks and alpha1-constant on R0-blocks."""
    n = e.n
    rows = _grid(S.size, n)
    keep = np.ones(len(rows), dtype=bool)
    for rel, cong in ((e.r1, a0), (e.r0, a1)):
        cls = cong.array()[rows]
        for blk in rel.blocks():
            blk = list(blk)
            keep &= (cls[:, blk] == cls[:, blk[:1]]).all(axis=1)
    return rows[keep]


def _build_eq_constraint(e, pkg, cap):
    S = pkg.algebra
    C = pkg.congruences
    if S.size ** e.n > cap:
        raise CapExceeded("eq_constraint power", cap, S.size ** e.n)
    idx = tuple(str(i) for i in range(e.n))
    rows = _eq_rows(S, e, C["alpha0"], C["alpha1"])
    if pkg.structural:
        return GadgetStructure("eq_constraint", S, idx, rows,
                               notes=["structural package: recovery not available"])
    E = pkg.elements
    z0, o0, z1, o1 = E["zero0"], E["one0"], E["zero1"], E["one1"]
    named = {}
    for i in range(e.n):
        named[f"y_{i}"] = _unit(idx, {str(j) for j in e.r0.block_of(i)}, o0, z0)
        named[f"z_{i}"] = _unit(idx, {str(j) for j in e.r1.block_of(i)}, o1, z1)
    G = GadgetStructure("eq_constraint", S, idx, rows, names=_index_names(rows, S.size, named),
                        polys=dict(pkg.polys))
    _fixed_subset(G, "e0", "K0")
    _fixed_subset(G, "e1", "K1")
    definable_set(G, formula_atom("join0", z0, "K0"), "x", name="atoms0")
    definable_set(G, formula_atom("join1", z1, "K1"), "x", name="atoms1")
    return G


def _build_support_point(g, pkg, cap):
    S, E = pkg.algebra, pkg.elements
    a0, a1, m0, m1 = E["a0"], E["a1"], E["m0"], E["m1"]
    idx = _vertex_labels(g, infinity=True)
    named = {f"g_{v}": _unit(idx, {str(v), INF}, a1, a0) for v in g.vertices}
    for v, w in g.edges:
        named[f"g_{v}_{w}"] = _unit(idx, {str(v), str(w), INF}, a1, a0)
    named["chi_inf"] = _unit(idx, {INF}, m1, m0)
    rows = _generated(S, named, len(idx), cap)
    G = GadgetStructure("support_point", S, idx, rows, names=_index_names(rows, S.size, named),
                        polys=dict(pkg.polys))
    _fixed_subset(G, "eU", "U")
    _fixed_subset(G, "eUp", "Uprime")
    definable_set(G, formula_support_gamma(m0), "x", name="Gamma")
    return G


def _blocks_pm_inf(g):
    return [(f"{v}+", f"{v}-") for v in g.vertices] + [(INF,)]


def twin_generators(g, pkg):
    """The three constraint-described generator sets, with their labels."""
    mu, sigma = pkg.congruences["mu"], pkg.congruences["sigma"]
    U, body = pkg.sets["U"], pkg.sets["body"]
    orbits = pkg.extra["orbits"]
    idx = _vertex_labels(g, split=True, infinity=True)
    pos = {lab: i for i, lab in enumerate(idx)}
    sig = sigma.array()
    V = list(g.vertices)
    # Γ0: U-valued, constant on V-blocks, σ-constant
    gamma0 = []
    for vals in itertools.product(U, repeat=len(V) + 1):
        if len({int(sig[x]) for x in vals}) != 1:
            continue
        row = [0] * len(idx)
        for v, x in zip(V, vals):
            row[pos[f"{v}+"]] = row[pos[f"{v}-"]] = x
        row[pos[INF]] = vals[-1]
        gamma0.append(tuple(row))
    spikes = {}
    for a in body:
        allowed = sorted(set(orbits[a]) & set(sigma.block_of(a)))
        spikes[a] = allowed
    labeled = {}

    def spiky(spiked):
        out = set()
        for a in body:
            allowed = spikes[a]
            for vals in itertools.product(allowed, repeat=len(V) + 1):
                for extra in itertools.product(allowed, repeat=len(spiked)):
                    row = [0] * len(idx)
                    ok = True
                    label = []
                    k = 0
                    for v, x in zip(V, vals):
                        row[pos[f"{v}+"]] = x
                        if v in spiked:
                            y = extra[k]
                            k += 1
                            if y == x or not mu.related(x, y):
                                ok = False
                                break
                            row[pos[f"{v}-"]] = y
                            label += [v, x]
                        else:
                            row[pos[f"{v}-"]] = x
                    if not ok:
                        continue
                    row[pos[INF]] = vals[-1]
                    out.add(tuple(row))
                    labeled[tuple(row)] = tuple(label)
        return out
    gammaV, gammaE = set(), set()
    for v in V:
        gammaV |= spiky((v,))
    for v, w in g.edges:
        gammaE |= spiky((v, w))
    return idx, sorted(set(gamma0)), sorted(gammaV), sorted(gammaE), labeled


def _twin_schema_pairs(rows, look, mu, idx, gamma0, gammaV, gammaE, labeled):
    """Generating pairs for Θ: Γ0 pairs agreeing mod μ, and equally labelled spiky pairs
    agreeing mod μ off the labelled coordinates."""
    mu_ids = mu.array()
    pairs = []

    def emit(group, skip):
        keys = {}
        for r in group:
            free = tuple(int(mu_ids[x]) if i not in skip(r) else ("=", x) for i, x in enumerate(r))
            keys.setdefault((labeled.get(r), free), []).append(r)
        for members in keys.values():
            ids = look(np.array(members, dtype=np.intp))
            pairs.extend((int(ids[0]), int(j)) for j in ids[1:])
    plus = {lab: i for i, lab in enumerate(idx)}
    emit(gamma0, lambda r: ())
    spk = lambda r: {plus[f"{v}+"] for v in labeled[r][::2]}
    emit(gammaV, spk)
    emit(gammaE, spk)
    return pairs


def _build_twin_quotient(g, pkg, cap):
    S = pkg.algebra
    mu, sigma = pkg.congruences["mu"], pkg.congruences["sigma"]
    idx, gamma0, gammaV, gammaE, labeled = twin_generators(g, pkg)
    gens = list(dict.fromkeys(gamma0 + gammaV + gammaE + _diagonal(S.size, len(idx))))
    rows = closure(S, gens, width=len(idx), cap=cap, what="gadget subpower").rows
    look = Lookup(rows, S.size)
    pairs = _twin_schema_pairs(rows, look, mu, idx, gamma0, gammaV, gammaE, labeled)
    theta, merged = theta_generate(S, rows, pairs, sigma=sigma, cap=cap)
    G = GadgetStructure("twin_quotient", S, idx, rows, theta=theta, polys=dict(pkg.polys))
    G.extra = {"gamma0": gamma0, "gammaV": gammaV, "gammaE": gammaE, "labels": labeled,
               "schema_pairs": pairs}
    _fixed_subset(G, "e", "Gamma")
    return G


def _sigma_constant_rows(S, sigma, width):
    out = []
    for blk in sigma.blocks():
        out.append(_grid(len(blk), width) if width else np.zeros((1, 0), int))
        out[-1] = np.array(blk)[out[-1]]
    rows = np.concatenate(out)
    return rows[lex_order(rows)]


def _build_sigma_constant(g, pkg, cap):
    S = pkg.algebra
    sigma = pkg.congruences["sigma"]
    idx = _vertex_labels(g, split=True, infinity=True)
    width = len(idx)
    total = sum(len(b) ** width for b in sigma.blocks())
    if total > cap:
        raise CapExceeded("sigma-constant subpower", cap, total)
    rows = _sigma_constant_rows(S, sigma, width)
    if pkg.structural:
        return GadgetStructure("sigma_constant", S, idx, rows,
                               notes=["structural package: recovery not available"])
    E = pkg.elements
    m0, m1 = E["m0"], E["m1"]
    look = Lookup(rows, S.size)
    pairs = []

    def loc(r):
        i = int(look(np.array(r, dtype=np.intp).reshape(1, -1))[0])
        if i < 0:
            raise AssertionError("schema element outside the subpower")
        return i
    for v in g.vertices:
        pairs.append((loc(_unit(idx, {f"{v}+"}, m1, m0)), loc(_unit(idx, {f"{v}-"}, m1, m0))))
    for v, w in g.edges:
        pairs.append((loc(_unit(idx, {f"{v}+", f"{w}+"}, m1, m0)),
                      loc(_unit(idx, {f"{v}-", f"{w}-"}, m1, m0))))
    theta, merged = theta_generate(S, rows, pairs, sigma=sigma, cap=cap)
    a0, b0, b1 = E["a0"], E["b0"], E["b1"]
    named = {"frak_b": _unit(idx, {INF}, b1, b0)}
    for a in pkg.sets["A"]:
        named[f"probe_{a}"] = _unit(idx, {INF}, a, a0)
    G = GadgetStructure("sigma_constant", S, idx, rows, theta=theta,
                        names=_index_names(rows, S.size, named), polys=dict(pkg.polys))
    G.extra = {"schema_pairs": pairs}
    _fixed_subset(G, "e", "U")
    return G


# ------------------------------------------------------------------ named formulas

def formula_atom(join, bottom, subset, var="x"):
    """var is an atom of the boolean algebra `subset` ordered by `join`."""
    x, y = Ref(var), Ref(var + "_below")
    return conj(In(x, subset), neq(x, Diag(bottom)),
                Forall(y.name, Implies(Eq(Ap(join, (y, x)), x),
                                       disj(Eq(y, Diag(bottom)), Eq(y, x))), over=subset))


def formula_split_edge(c, a1="a1", a2="a2", var="x"):
    """Some x in U^I is d on the + copies of a1, a2 and c elsewhere."""
    s = Ap("join", (Ref(a1), Ref(a2)))
    sc = Ap("comp", (s,))
    x = Ref(var)
    body = conj(Eq(Ap("q", (s, x)), Ap("q", (s, Named("chi_delta_plus")))),
                Eq(Ap("q", (sc, x)), Ap("q", (sc, Diag(c)))))
    return conj(neq(Ref(a1), Ref(a2)), Exists(var, body, over="U"))


def formula_coordinate_probe(separators, zero, chi, y, z):
    """y and z agree at the coordinate picked out by the atom chi."""
    def same(s, w):
        return Eq(Ap(s, (Diag(zero), w)), Ap(s, (chi, w)))
    return And(tuple(Iff(same(s, y), same(s, z)) for s in separators))


def formula_vertex_product_edge(separators, zero, c, d, a1="a1", a2="a2", var="x"):
    x, A1, A2 = Ref(var), Ref(a1), Ref(a2)
    probe = lambda chi, val: formula_coordinate_probe(separators, zero, chi, x, Diag(val))
    other = Ref("a_other")
    rest = Forall(other.name, Implies(conj(neq(other, A1), neq(other, A2)), probe(other, c)),
                  over="atoms")
    return conj(neq(A1, A2), Exists(var, conj(probe(A1, d), probe(A2, d), rest)))


def formula_bowtie(zero1, y="y", z="z"):
    qy = Ap("q", (Ref(y),))
    return neq(Ap("p1", (qy, Ref(z))), Ap("p1", (qy, Diag(zero1))))


def formula_support_gamma(m0, var="x"):
    x = Ref(var)
    return conj(In(x, "Uprime"), Eq(Ap("q", (x, Diag(m0))), Diag(m0)),
                Eq(Ap("q", (x, Named("chi_inf"))), Named("chi_inf")))


def formula_support_preorder(x="x", y="y"):
    """x << y: whenever q(x, -) identifies u, v in U^I, so does q(y, -)."""
    u, v = Ref("u"), Ref("v")
    inner = Implies(Eq(Ap("q", (Ref(x), u)), Ap("q", (Ref(x), v))),
                    Eq(Ap("q", (Ref(y), u)), Ap("q", (Ref(y), v))))
    return Forall("u", Forall("v", inner, over="U"), over="U")


def formula_equalizer_member(x, y1, y2, fn="t0"):
    """x lies in the equalizer E(y1, y2) of t0."""
    return Eq(Ap(fn, (x, y1)), Ap(fn, (x, y2)))


def formula_proportional(z, y, b0):
    """z ∝ y: every x in E(b0, frak_b) (x σ-related to a0) also lies in E(z, y)."""
    x = Ref("x_prop")
    return Forall(x.name, Implies(formula_equalizer_member(x, Diag(b0), Named("frak_b")),
                                  formula_equalizer_member(x, z, y)), over="XA")


def formula_pset_member(x, y, b0):
    """x ∈ P(y), via an existential witness z that agrees with b0 at infinity."""
    z = Ref("z_wit")
    return conj(Exists(z.name, conj(In(z, "Z0"), formula_proportional(z, y, b0),
                                    formula_equalizer_member(x, Diag(b0), z)), over="Z0"),
                formula_equalizer_member(x, Named("frak_b"), y),
                Not(formula_equalizer_member(x, Diag(b0), Named("frak_b"))))


# ------------------------------------------------------------------ preorders

@dataclass
class Preorder:
    """A preorder on `domain` given by its relation matrix, with its biequivalence
    classes and the level of each class (longest strict chain from a minimal class)."""
    domain: np.ndarray
    leq: np.ndarray
    classes: list = field(init=False)
    class_of: np.ndarray = field(init=False)
    strict: np.ndarray = field(init=False)
    levels: list = field(init=False)

    def __post_init__(self):
        leq = np.asarray(self.leq, dtype=bool)
        n = len(self.domain)
        equiv = leq & leq.T
        self.class_of = np.full(n, -1)
        self.classes = []
        for i in range(n):
            if self.class_of[i] < 0:
                members = np.nonzero(equiv[i] & (self.class_of < 0))[0]
                self.class_of[members] = len(self.classes)
                self.classes.append(members)
        reps = [c[0] for c in self.classes]
        cl = leq[np.ix_(reps, reps)]
        self.strict = cl & ~cl.T
        below = self.strict.sum(axis=0)
        level = np.zeros(len(reps), dtype=int)
        for c in np.argsort(below, kind="stable"):
            lower = np.nonzero(self.strict[:, c])[0]
            if len(lower):
                level[c] = level[lower].max() + 1
        self.levels = level.tolist()

    def is_preorder(self):
        leq = np.asarray(self.leq, dtype=bool)
        refl = bool(np.diag(leq).all())
        trans = not (((leq.astype(np.int32) @ leq.astype(np.int32)) > 0) & ~leq).any()
        return refl and trans

    def at_level(self, k):
        return [c for c, lv in enumerate(self.levels) if lv == k]

    def maximal(self):
        return [c for c in range(len(self.classes)) if not self.strict[c].any()]

    def members(self, c):
        return self.domain[self.classes[c]]


# ------------------------------------------------------------------ recovery

@dataclass
class Recovery:
    """Structure read back from a gadget.

    `vertices` are recovered vertex handles (element or class ids), `edges`
    pairs of handles, and `vertex_map` sends a handle to the input vertex it
    was built from (computed from coordinates, for checking only).
    """
    kind: str
    vertices: list
    edges: set
    vertex_map: dict
    audits: dict = field(default_factory=dict)
    formula: str = ""
    notes: list = field(default_factory=list)
    carrier: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def mapped_edges(self):
        return {tuple(sorted((self.vertex_map[a], self.vertex_map[b]))) for a, b in self.edges}


def _require_recoverable(G):
    if G.package is None or G.package.structural:
        raise PreconditionUnmet("recovery", "structural gadgets carry no witness package")


def _edge_matrix(handles, rel):
    edges = set()
    for i, j in itertools.combinations(range(len(handles)), 2):
        if rel[i, j] or rel[j, i]:
            edges.add((handles[i], handles[j]))
    return edges


def _atom_vertices(G, one, labels_of):
    """Map atoms to input vertices through the coordinates carrying `one`."""
    out = {}
    for a in G.domain("atoms").tolist():
        on = [G.index[i] for i, x in enumerate(G.rows[a]) if x == one]
        out[int(a)] = labels_of(on)
    return out


def _recover_split_vertex(G):
    E = G.package.elements
    atoms = [int(a) for a in G.domain("atoms")]
    phi = formula_split_edge(E["c"])
    rel = relation(G, phi, "a1", "a2", "atoms", "atoms")
    vmap = _atom_vertices(G, E["one"], lambda on: int(on[0][:-1]) if
                          len(on) == 2 and {s[-1] for s in on} == {"+", "-"} and on[0][:-1] == on[1][:-1]
                          else None)
    sym = bool((rel == rel.T).all())
    return Recovery("split_vertex", atoms, _edge_matrix(atoms, rel), vmap,
                    audits={"edge relation symmetric": sym}, formula=str(phi))


def _recover_vertex_product(G):
    E = G.package.elements
    seps = G.package.extra["separators"]
    atoms = [int(a) for a in G.domain("atoms")]
    phi = formula_vertex_product_edge(seps, E["zero"], E["c"], E["d"])
    rel = relation(G, phi, "a1", "a2", "atoms", "atoms")
    vmap = _atom_vertices(G, E["one"], lambda on: int(on[0]) if len(on) == 1 else None)
    audits = {"edge relation symmetric": bool((rel == rel.T).all()),
              "coordinate probe": _coordinate_probe_audit(G, seps, E["zero"], vmap)}
    rec = Recovery("vertex_product", atoms, _edge_matrix(atoms, rel), vmap, audits=audits,
                   formula=str(phi))
    rec.notes.extend(G.notes)
    return rec


def _coordinate_probe_audit(G, seps, zero, vmap):
    """For every atom chi_i, element y and value s: the probe formula holds iff y^i = s."""
    for a, v in vmap.items():
        if v is None:
            return False
        col = G.coordinate(str(v))
        for s in range(G.algebra.size):
            phi = formula_coordinate_probe(seps, zero, Ref("chi"), Ref("y"), Diag(s))
            got = extension(G, phi, "y", assignment={"chi": a})
            want = G.universe[G.rows[G.universe, col] == s]
            if not np.array_equal(np.sort(got), np.sort(want)):
                return False
    return True


def _recover_eq_constraint(G):
    E = G.package.elements
    phi = formula_bowtie(E["zero1"])
    a0 = [int(a) for a in G.domain("atoms0")]
    a1 = [int(a) for a in G.domain("atoms1")]
    rel = relation(G, phi, "y", "z", "atoms0", "atoms1")
    carrier = [(a0[i], a1[j]) for i, j in zip(*np.nonzero(rel))]
    pos = {p: k for k, p in enumerate(carrier)}
    src = G.source
    vmap = {}
    for i in range(src.n):
        key = (G.named(f"y_{i}"), G.named(f"z_{i}"))
        vmap[pos.get(key, ("missing", i))] = i
    return Recovery("eq_constraint", list(range(len(carrier))), set(), vmap,
                    formula=str(phi), carrier=carrier)


def recovered_eqpair(rec, name="recovered"):
    carrier = rec.carrier
    n = len(carrier)
    r0 = Partition.from_pairs(n, [(i, j) for i in range(n) for j in range(n)
                                  if carrier[i][0] == carrier[j][0]])
    r1 = Partition.from_pairs(n, [(i, j) for i in range(n) for j in range(n)
                                  if carrier[i][1] == carrier[j][1]])
    return EqPair(name, n, r0, r1)


def _support(G, x):
    q = G.table("q")
    m1 = G.package.elements["m1"]
    return frozenset(G.index[i] for i, v in enumerate(G.rows[x]) if q[v, m1] == m1)


def _recover_support_point(G):
    gamma = G.domain("Gamma")
    phi = formula_support_preorder()
    pre = Preorder(gamma, relation(G, phi, "x", "y", "Gamma", "Gamma"))
    bottom = set(pre.at_level(0))
    who = [c for c in pre.maximal() if c not in bottom]
    edges = set()
    for c1, c2 in itertools.combinations(who, 2):
        if any(pre.strict[c, c1] and pre.strict[c, c2] for c in range(len(pre.classes))
               if c not in bottom):
            edges.add((c1, c2))
    vmap = {}
    for c in who:
        s = _support(G, int(pre.members(c)[0])) - {INF}
        vmap[c] = int(next(iter(s))) if len(s) == 1 else None
    edge_sets = {frozenset(map(str, e)) for e in G.source.edges}
    supports = [_support(G, int(x)) for x in gamma]
    full = frozenset(G.index)
    claim = all(s == full or (INF in s and (len(s) == 2 or (len(s) == 3 and s - {INF} in edge_sets)))
                for s in supports)
    law = all(bool(pre.leq[i, j]) == (supports[i] >= supports[j])
              for i in range(len(gamma)) for j in range(len(gamma)))
    return Recovery("support_point", who, edges, vmap, formula=str(phi), data={"preorder": pre},
                    audits={"preorder laws": pre.is_preorder(), "support shapes": claim,
                            "preorder is reverse support inclusion": law,
                            "single bottom class": len(bottom) == 1},
                    notes=[f"levels: {_level_counts(pre)}"])


def _level_counts(pre):
    out = {}
    for lv in pre.levels:
        out[lv] = out.get(lv, 0) + 1
    return dict(sorted(out.items()))


# twin quotient: semantic evaluation of the group-quantified preorder

def _perm_maps(group, n):
    maps = []
    for g in group.elements:
        m = np.arange(n)
        m[list(group.domain)] = g
        maps.append(m)
    return np.array(maps)


def _block_products(G, tmaps, cap):
    """Every choice of one twin per V-block, as coordinatewise maps (h, width, n)."""
    blocks = [[G.coordinate(lab) for lab in blk] for blk in _blocks_pm_inf(G.source)]
    total = len(tmaps) ** len(blocks)
    if total > cap:
        raise CapExceeded("twin group of the quotient", cap, total)
    out = np.empty((total, G.width, G.algebra.size), dtype=np.intp)
    for k, choice in enumerate(itertools.product(range(len(tmaps)), repeat=len(blocks))):
        for blk, g in zip(blocks, choice):
            out[k, blk] = tmaps[g]
    return out, blocks


def _apply_coordinatewise(G, maps, xs):
    """maps: (h, width, n); xs: element indices.  Returns reps of shape (h, len(xs))."""
    rows = G.rows[xs]
    cols = np.arange(G.width)
    img = maps[np.arange(len(maps))[:, None, None], cols[None, None, :], rows[None, :, :]]
    idx = G._look(img.reshape(-1, G.width))
    if (idx < 0).any():
        raise AlgebraError("a twin translation leaves the gadget")
    return G.rep[idx].reshape(len(maps), len(xs))


def _recover_twin_quotient(G, cap=GADGET_CAP):
    pkg = G.package
    n = G.algebra.size
    sig = pkg.congruences["sigma"].array()
    tmaps = _perm_maps(pkg.extra["twingrp"], n)
    pmaps = _perm_maps(pkg.extra["polgrp"], n)
    H, blocks = _block_products(G, tmaps, cap)
    gamma = G.domain("Gamma")
    inf_col = G.coordinate(INF)
    # Γ0: x is fixed mod Θ by "twin at infinity only" exactly when by "twin everywhere"
    only_inf = np.broadcast_to(np.arange(n), (len(tmaps), G.width, n)).copy()
    only_inf[:, inf_col] = tmaps
    everywhere = np.broadcast_to(tmaps[:, None, :], (len(tmaps), G.width, n))
    fi = _apply_coordinatewise(G, only_inf, gamma) == gamma[None, :]
    fe = _apply_coordinatewise(G, everywhere, gamma) == gamma[None, :]
    in_g0 = (~fi | fe).all(axis=0)
    gamma0 = gamma[in_g0]
    rest = gamma[~in_g0]
    # Stab(w) = {h : h w ≡Θ w}
    stab = (_apply_coordinatewise(G, H, rest) == rest[None, :]).T
    pos = {int(x): k for k, x in enumerate(rest)}
    sigkey = [tuple(sig[G.rows[x]].tolist()) for x in rest]
    leq = np.zeros((len(rest), len(rest)), dtype=bool)
    fx = np.stack([_apply_coordinatewise(G, np.broadcast_to(p[None, :], (G.width, n))[None], rest)[0]
                   for p in pmaps])
    for k in range(len(rest)):
        orbit = np.unique(_apply_coordinatewise(G, H, np.unique(fx[:, k])))
        for z in orbit.tolist():
            zi = pos.get(z)
            if zi is None:
                continue
            ok = ~(stab & ~stab[zi][None, :]).any(axis=1)
            for j in np.nonzero(ok)[0]:
                if sigkey[zi] == sigkey[j]:
                    leq[k, j] = True
    pre = Preorder(rest, leq)
    verts = pre.at_level(0)
    edges = set()
    for c1, c2 in itertools.combinations(verts, 2):
        if any(pre.strict[c1, c] and pre.strict[c2, c] for c in range(len(pre.classes))):
            edges.add((c1, c2))
    spikes = {int(x): _spike_set(G, x) for x in rest}
    vmap = {c: (next(iter(spikes[int(pre.members(c)[0])]))
                if len(spikes[int(pre.members(c)[0])]) == 1 else None) for c in verts}
    audits = {"preorder laws": pre.is_preorder(),
              "gamma0 matches its description": _gamma0_audit(G, gamma0),
              "theta on gamma is the generating pairs": _twin_theta_audit(G),
              "clauses (a)-(d)": _twin_clause_audit(G, pre, spikes)}
    return Recovery("twin_quotient", verts, edges, vmap, audits=audits, data={"preorder": pre},
                    notes=[f"levels: {_level_counts(pre)}", f"|Gamma0/Theta| = {len(gamma0)}"])


def _spike_set(G, x):
    r = G.rows[x]
    return frozenset(v for v in G.source.vertices
                     if r[G.coordinate(f"{v}+")] != r[G.coordinate(f"{v}-")])


def _gamma0_audit(G, gamma0):
    want = set()
    for r in G.extra["gamma0"]:
        want.add(G.locate(r))
    return want == set(int(x) for x in gamma0)


def _twin_theta_audit(G):
    uf = _UnionFind(len(G.rows))
    for a, b in G.extra["schema_pairs"]:
        uf.union(a, b)
    gamma = np.nonzero(G.mask("Gamma")[G.rep])[0]
    ids = G.theta.array()
    roots = np.array([uf.find(int(i)) for i in gamma])
    return len(np.unique(roots)) == len(np.unique(ids[gamma]))


def _twin_clause_audit(G, pre, spikes):
    def lab(k):
        return spikes[int(pre.domain[k])]
    m = len(pre.domain)
    for i in range(m):
        for j in range(m):
            si, sj = lab(i), lab(j)
            le = bool(pre.leq[i, j])
            if len(si) == len(sj):
                if le != (si == sj):
                    return False
            elif len(si) == 2 and len(sj) == 1:
                if le:
                    return False
            elif len(si) == 1 and len(sj) == 2:
                if le != (si <= sj):
                    return False
    return True


# sigma-constant gadget: the displayed formulas evaluated as matrices

@dataclass
class _SigmaTables:
    XA: np.ndarray
    Y: np.ndarray
    T: np.ndarray
    xpos: dict
    ypos: dict


def _sigma_tables(G, chunk=256):
    E = G.package.elements
    sig = G.package.congruences["sigma"].array()
    rows = G.rows[G.universe]
    A_cls, B_cls = sig[E["a0"]], sig[E["b0"]]
    XA = G.universe[(sig[rows] == A_cls).all(axis=1)]
    Yc = G.universe[(sig[rows] == B_cls).all(axis=1)]
    t0 = G.table("t0")
    a0bar = G.const(E["a0"])
    c = G.apply("t0", (np.array([a0bar]), np.array([G.const(E["b0"])])))[0]
    first = G.apply("t0", (np.full(len(Yc), a0bar), Yc))
    Y = Yc[first == c]
    T = np.empty((len(XA), len(Y)), dtype=np.intp)
    yr = G.rows[Y]
    for s in range(0, len(XA), chunk):
        xr = G.rows[XA[s:s + chunk]]
        res = t0[xr[:, None, :], yr[None, :, :]].reshape(-1, G.width)
        idx = G._look(res)
        if (idx < 0).any():
            raise AlgebraError("t0 leaves the gadget")
        T[s:s + chunk] = G.rep[idx].reshape(len(xr), len(Y))
    return _SigmaTables(XA, Y, T, {int(x): i for i, x in enumerate(XA)},
                        {int(y): i for i, y in enumerate(Y)})


def _recover_sigma_constant(G):
    pkg = G.package
    E, W = pkg.elements, pkg.sets
    tb = _sigma_tables(G)
    T = tb.T
    col = lambda y: T[:, tb.ypos[int(y)]]
    row = lambda x: T[tb.xpos[int(x)]]
    b0, b1 = G.const(E["b0"]), G.const(E["b1"])
    fb = G.named("frak_b")
    probes = [G.named(f"probe_{a}") for a in W["A"]]
    inf0 = np.all([row(p) == row(p)[tb.ypos[b0]] for p in probes], axis=0)
    inf1 = np.all([row(p) == row(p)[tb.ypos[b1]] for p in probes], axis=0)
    X0 = col(b0) == col(fb)
    Z = np.nonzero(inf0)[0]
    Y1 = np.nonzero(inf1)[0]
    # ∝ compares columns on E(b0, frak_b)
    _, sig_ids = np.unique(T[X0].T, axis=0, return_inverse=True)
    sig_ids = sig_ids.reshape(-1)
    EZ = T[:, Z] == col(b0)[:, None]
    groups = np.unique(sig_ids[Z])
    gpos = {int(g): k for k, g in enumerate(groups)}
    any_z = np.zeros((len(tb.XA), len(groups)), dtype=bool)
    for k, z in enumerate(Z):
        any_z[:, gpos[int(sig_ids[z])]] |= EZ[:, k]
    # 𝓑 and the sets P(y)
    consts = [G.const(a) for a in W["E_b0_b1"]]
    inB = inf1.copy()
    for a in consts:
        inB &= row(a) == row(a)[tb.ypos[fb]]
    Bi = np.nonzero(inB)[0]
    EY = T[:, Bi] == col(fb)[:, None]
    via = np.zeros_like(EY)
    for k, y in enumerate(Bi):
        g = gpos.get(int(sig_ids[y]))
        if g is not None:
            via[:, k] = any_z[:, g]
    P = (~X0)[:, None] & EY & via
    Pf = P.astype(np.float32)
    leq = ((1.0 - Pf).T @ Pf) == 0  # y1 << y2 iff P(y2) ⊆ P(y1)
    pre = Preorder(tb.Y[Bi], leq)
    B1, B2 = pre.at_level(1), pre.at_level(2)
    a1 = G.const(E["a1"])
    t1 = row(a1)

    def S_of(c):
        members = pre.classes[c]
        gs = {int(sig_ids[Bi[m]]) for m in members}
        return {int(t1[z]) for z in Z if int(sig_ids[z]) in gs}
    S = {c: S_of(c) for c in B1 + B2}
    eq = {(c, d): c == d or bool(S[c] & S[d]) for c in B1 for d in B1}
    uf = _UnionFind(len(pre.classes))
    for (c, d), v in eq.items():
        if v:
            uf.union(c, d)
    groups_of = {}
    for c in B1:
        groups_of.setdefault(uf.find(c), []).append(c)
    verts = sorted(groups_of)
    below = {d: [c for c in B1 if pre.strict[c, d]] for d in B2}
    edges = set()
    for g1, g2 in itertools.combinations(verts, 2):
        found = False
        for d7, d8 in itertools.product(B2, repeat=2):
            if not S[d7] & S[d8]:
                continue
            l7, l8 = set(below[d7]), set(below[d8])
            for v3, v4 in itertools.permutations(groups_of[g1], 2):
                for v5, v6 in itertools.permutations(groups_of[g2], 2):
                    if {v3, v5} <= l7 and {v4, v6} <= l8:
                        found = True
                        break
                if found:
                    break
            if found:
                break
        if found:
            edges.add((g1, g2))
    chi = {c: _chi(G, int(pre.members(c)[0])) for c in B1}
    vmap = {}
    for g, cs in groups_of.items():
        vs = {chi[c][:-1] if chi[c] else None for c in cs}
        vmap[g] = int(vs.pop()) if len(vs) == 1 and None not in vs else None
    transitive = all(eq[(c, e)] or not (eq[(c, d)] and eq[(d, e)]) for c in B1 for d in B1 for e in B1)
    nv = G.source.n
    audits = {"preorder laws": pre.is_preorder(),
              "boolean algebra with 2|V| atoms": len(B1) == 2 * nv and len(pre.classes) == 2 ** (2 * nv),
              "EQ is an equivalence": transitive,
              "EQ classes are vertex pairs": all(len(cs) == 2 for cs in groups_of.values()),
              "theta block claims": sigma_theta_audit(G)}
    G.add_subset("XA", tb.XA)
    G.add_subset("Z0", tb.Y[Z])
    data = {"tables": tb, "sig": sig_ids, "Z": Z, "Y1": Y1, "B": Bi, "P": P, "preorder": pre}
    return Recovery("sigma_constant", verts, edges, vmap, audits=audits,
                    notes=[f"levels: {_level_counts(pre)}"], data=data)


def sigma_formula_crosscheck(G, rec, rng, samples=30):
    """Evaluate the first-order E-set, proportionality and P-membership formulas with
    `model_check` on sampled tuples and compare with the matrix evaluation.
    Returns the first disagreement, or None."""
    d = rec.data
    tb, sig, P = d["tables"], d["sig"], d["P"]
    b0 = G.package.elements["b0"]
    x, y, z = Ref("x"), Ref("y"), Ref("z")
    Y, XA = tb.Y, tb.XA
    for _ in range(samples):
        i, j, k = rng.randrange(len(XA)), rng.randrange(len(Y)), rng.randrange(len(Y))
        got = model_check(G, formula_equalizer_member(x, y, z),
                          {"x": XA[i], "y": Y[j], "z": Y[k]})
        if got != bool(tb.T[i, j] == tb.T[i, k]):
            return ("E-set", int(XA[i]), int(Y[j]), int(Y[k]))
    Z, Y1 = d["Z"], d["Y1"]
    pairs = [(zz, yy) for zz in Z for yy in Y1]
    same = [p for p in pairs if sig[p[0]] == sig[p[1]]]
    for zz, yy in rng.sample(pairs, min(samples, len(pairs))) + rng.sample(same, min(samples, len(same))):
        got = model_check(G, formula_proportional(z, y, b0), {"z": Y[zz], "y": Y[yy]})
        if got != bool(sig[zz] == sig[yy]):
            return ("proportional", int(Y[zz]), int(Y[yy]))
    B = d["B"]
    cells = [(i, k) for i in range(len(XA)) for k in range(len(B))]
    hits = [c for c in cells if P[c]]
    for i, k in rng.sample(cells, min(samples, len(cells))) + rng.sample(hits, min(samples, len(hits))):
        got = model_check(G, formula_pset_member(x, y, b0), {"x": XA[i], "y": Y[B[k]]})
        if got != bool(P[i, k]):
            return ("P", int(XA[i]), int(Y[B[k]]))
    return None


def _chi(G, y):
    """The coordinate i (not infinity) where E(b0, y^i) is the witness equalizer."""
    E, W = G.package.elements, G.package.sets
    t0 = G.table("t0")
    target = frozenset(W["E_b0_b1"])
    hits = [G.index[i] for i, v in enumerate(G.rows[y])
            if G.index[i] != INF and _equalizer(t0, W["A"], E["b0"], int(v)) == target]
    return hits[0] if len(hits) == 1 else None


def sigma_theta_audit(G):
    """Θ ≤ μ^I, Θ-related rows agree at infinity, blocks on U^I have at most two
    elements, and two related rows differ on nothing, one V-block or an edge pair."""
    mu = G.package.congruences["mu"].array()
    inf = G.coordinate(INF)
    U = set(G.package.sets["U"])
    edge_sets = {frozenset((v, w)) for v, w in G.source.edges}
    for blk in G.theta.blocks():
        if len(blk) < 2:
            continue
        rows = G.rows[list(blk)]
        if (mu[rows] != mu[rows[:1]]).any() or (rows[:, inf] != rows[0, inf]).any():
            return False
        inU = [r for r in rows.tolist() if set(r) <= U]
        if len(inU) > 2:
            return False
        if len(inU) == 2:
            diff = {G.index[i] for i in range(G.width) if inU[0][i] != inU[1][i]}
            verts = {lab[:-1] for lab in diff}
            if diff != {f"{v}{s}" for v in verts for s in "+-"}:
                return False
            if len(verts) == 2 and frozenset(int(v) for v in verts) not in edge_sets:
                return False
            if len(verts) > 2:
                return False
    return True


RECOVERERS = {
    "split_vertex": _recover_split_vertex,
    "vertex_product": _recover_vertex_product,
    "eq_constraint": _recover_eq_constraint,
    "support_point": _recover_support_point,
    "twin_quotient": _recover_twin_quotient,
    "sigma_constant": _recover_sigma_constant,
}


def recover(G):
    """Read the input structure back out of a built gadget."""
    _require_recoverable(G)
    return RECOVERERS[G.kind](G)


def preorder_ll(G):
    """The definable preorder of a support_point, twin_quotient or sigma_constant gadget."""
    if G.kind not in ("support_point", "twin_quotient", "sigma_constant"):
        raise AlgebraError(f"{G.kind} gadgets carry no preorder")
    return recover(G).data["preorder"]


def verify_graph_recovery(G, original=None):
    """Compare the structure recovered from G with `original` (default: G's own input)."""
    if original is not None and original is not G.source:
        G = _with_source(G, original)
    try:
        rec = recover(G)
    except PreconditionUnmet as exc:
        return Verdict(UNMET, {"clause": exc.clause, "detail": exc.detail}, [])
    trace = [f"{k}: {'ok' if v else 'FAILS'}" for k, v in rec.audits.items()] + rec.notes
    bad = [k for k, v in rec.audits.items() if not v]
    if bad:
        return Verdict(FAILS, {"audit": bad[0]}, trace)
    src = G.source
    if G.kind == "eq_constraint":
        return _verify_eq(G, rec, trace)
    images = [rec.vertex_map.get(h) for h in rec.vertices]
    if None in images or sorted(images) != list(src.vertices):
        return Verdict(FAILS, {"vertices": images, "expected": list(src.vertices)}, trace)
    got, want = rec.mapped_edges(), set(src.edges)
    if got != want:
        pair = sorted(got ^ want)[0]
        return Verdict(FAILS, {"pair": pair, "in_input": pair in want, "formula": rec.formula}, trace)
    return Verdict(HOLDS, {"vertices": len(images), "edges": sorted(got)}, trace)


def _with_source(G, original):
    import copy
    H = copy.copy(G)
    H.source = original
    return H


def _verify_eq(G, rec, trace):
    src = G.source
    if sorted(rec.vertex_map.values()) != list(range(src.n)) or len(rec.carrier) != src.n:
        return Verdict(FAILS, {"carrier": rec.carrier, "expected_size": src.n}, trace)
    back = {i: k for k, i in rec.vertex_map.items()}
    got = recovered_eqpair(rec)
    for name, orig, new in (("R0", src.r0, got.r0), ("R1", src.r1, got.r1)):
        for i in range(src.n):
            for j in range(src.n):
                if orig.related(i, j) != new.related(back[i], back[j]):
                    return Verdict(FAILS, {"relation": name, "pair": (i, j), "formula": rec.formula},
                                   trace)
    return Verdict(HOLDS, {"carrier": src.n}, trace)


# ------------------------------------------------------------------ audits

def closure_audit(G):
    """D is closed and contains the diagonal; Θ, when present, is a congruence of D."""
    S = G.algebra
    out = {"closed": is_closed(S, G.rows) is None}
    out["diagonal"] = all(G.locate((a,) * G.width) >= 0 for a in range(S.size))
    if G.theta is not None:
        out["theta congruence"] = _theta_is_congruence(S, G.rows, G.theta)
    return out


def fixed_point_audit(G):
    """For each idempotent polynomial e: {x : e(x) = x} is the set of classes meeting e(S)^I."""
    out = {}
    x = Ref("x")
    for name, tab in G.polys.items():
        tab = np.asarray(tab)
        if tab.ndim != 1 or not np.array_equal(tab[tab], tab):
            continue
        image = np.unique(tab)
        got = set(extension(G, Eq(Ap(name, (x,)), x), "x").tolist())
        inside = np.isin(G.rows, image).all(axis=1)
        want = set(np.unique(G.rep[inside]).tolist())
        out[name] = got == want
    return out


# ------------------------------------------------------------------ witness hunting

def hunt_witness(kind, size, tries=200, arity=2, seed=0):
    """Random search for an algebra with one `arity`-ary operation carrying a
    validated package of the given kind.  Returns (algebra, package) or None."""
    rng = random.Random(seed)
    for k in range(tries):
        table = np.array([rng.randrange(size) for _ in range(size ** arity)]).reshape((size,) * arity)
        S = FiniteAlgebra(f"hunt{k}", size, [("f", arity, table)])
        try:
            pkg = find_package(kind, S)
        except (PreconditionUnmet, CapExceeded):
            continue
        return S, pkg
    return None
