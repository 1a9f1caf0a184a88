"""Finite algebras given by operation tables, with terms and closure in direct powers."""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

DEFAULT_CAP = 1 << 20
_CHUNK = 1 << 21


class AlgebraError(ValueError):
    """Malformed input to an algebra computation."""


class CapExceeded(RuntimeError):
    """A closure or enumeration grew past its configured cap."""

    def __init__(self, what, cap, reached):
        super().__init__(f"{what}: cap of {cap} exceeded (reached {reached})")
        self.what = what
        self.cap = cap
        self.reached = reached


@dataclass(frozen=True, eq=False)
class Operation:
    name: str
    arity: int
    table: np.ndarray

    def __call__(self, *args):
        if len(args) != self.arity:
            raise AlgebraError(f"{self.name} expects {self.arity} arguments, got {len(args)}")
        return int(self.table[tuple(args)]) if self.arity else int(self.table)

    def flat(self):
        return self.table.reshape(-1)


class FiniteAlgebra:
    """An algebra on {0..n-1} given by total operation tables.

    `labels` is optional display metadata (for instance tuples for products);
    no computation depends on it.
    """

    def __init__(self, name, size, ops=(), labels=None):
        if size < 1:
            raise AlgebraError("an algebra needs at least one element")
        self.name = name
        self.size = int(size)
        built = []
        seen = set()
        for op in ops:
            if isinstance(op, Operation):
                oname, arity, table = op.name, op.arity, op.table
            else:
                oname, arity, table = op
            if oname in seen:
                raise AlgebraError(f"duplicate operation symbol {oname!r}")
            seen.add(oname)
            arr = np.asarray(table, dtype=np.intp)
            if arr.size != self.size ** arity:
                raise AlgebraError(
                    f"operation {oname}: expected {self.size ** arity} entries, got {arr.size}")
            arr = arr.reshape((self.size,) * arity).copy()
            if arr.size and (arr.min() < 0 or arr.max() >= self.size):
                raise AlgebraError(f"operation {oname}: entry out of range 0..{self.size - 1}")
            arr.setflags(write=False)
            built.append(Operation(oname, int(arity), arr))
        self.ops = tuple(built)
        self._by_name = {op.name: op for op in self.ops}
        self.labels = tuple(labels) if labels is not None else None
        self.cache = {}

    def op(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise AlgebraError(f"unknown operation symbol {name!r} in {self.name}") from None

    @property
    def signature(self):
        return tuple((op.name, op.arity) for op in self.ops)

    @property
    def universe(self):
        return range(self.size)

    def same_tables(self, other):
        return (self.size == other.size and self.signature == other.signature
                and all(np.array_equal(a.table, b.table) for a, b in zip(self.ops, other.ops)))

    def renamed(self, name):
        return FiniteAlgebra(name, self.size, self.ops, self.labels)

    def __repr__(self):
        sig = ", ".join(f"{n}/{k}" for n, k in self.signature)
        return f"FiniteAlgebra({self.name!r}, size={self.size}, ops=[{sig}])"


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self):
        return f"v{self.index}"


@dataclass(frozen=True)
class Const:
    value: int

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class App:
    op: str
    args: tuple = ()

    def __str__(self):
        if not self.args:
            return self.op
        return f"{self.op}({','.join(map(str, self.args))})"


def term_vars(t):
    if isinstance(t, Var):
        return {t.index}
    if isinstance(t, Const):
        return set()
    out = set()
    for s in t.args:
        out |= term_vars(s)
    return out


def evaluate(A, t, args=()):
    """Value of term `t` in `A` with variable v_i bound to args[i]."""
    if isinstance(t, Var):
        if not 0 <= t.index < len(args):
            raise AlgebraError(f"no argument for variable v{t.index}")
        x = args[t.index]
        if not 0 <= x < A.size:
            raise AlgebraError(f"element {x} out of range for {A.name}")
        return int(x)
    if isinstance(t, Const):
        if not 0 <= t.value < A.size:
            raise AlgebraError(f"constant {t.value} out of range for {A.name}")
        return int(t.value)
    op = A.op(t.op)
    if len(t.args) != op.arity:
        raise AlgebraError(f"{t.op} has arity {op.arity}, used with {len(t.args)} arguments")
    return op(*(evaluate(A, s, args) for s in t.args))


def term_table(A, t, nvars):
    """Table of `t` as an nvars-ary operation, shape (n,)*nvars."""
    n = A.size
    grids = np.indices((n,) * nvars, dtype=np.intp) if nvars else np.zeros((0,), dtype=np.intp)

    def go(s):
        if isinstance(s, Var):
            if s.index >= nvars:
                raise AlgebraError(f"variable v{s.index} beyond declared {nvars}")
            return grids[s.index]
        if isinstance(s, Const):
            if not 0 <= s.value < n:
                raise AlgebraError(f"constant {s.value} out of range")
            return np.full((n,) * nvars, s.value, dtype=np.intp)
        op = A.op(s.op)
        if len(s.args) != op.arity:
            raise AlgebraError(f"{s.op} has arity {op.arity}, used with {len(s.args)} arguments")
        if op.arity == 0:
            return np.full((n,) * nvars, int(op.table), dtype=np.intp)
        return op.table[tuple(go(a) for a in s.args)]

    return go(t)


_TOKEN = re.compile(r"\s*(?:(\()|(\))|(,)|([A-Za-z_][A-Za-z0-9_]*)|(\d+))")


def parse_term(text):
    """Parse `op(v0,neg(v1),2)` style terms: `v<i>` variables, integers constants."""
    pos = 0
    tokens = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise AlgebraError(f"cannot parse term near {text[pos:]!r}")
        tokens.append(m.group(m.lastindex))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    i = 0

    def node():
        nonlocal i
        if i >= len(tokens):
            raise AlgebraError("unexpected end of term")
        tok = tokens[i]
        i += 1
        if tok.isdigit():
            return Const(int(tok))
        if re.fullmatch(r"v\d+", tok) and (i >= len(tokens) or tokens[i] != "("):
            return Var(int(tok[1:]))
        if tok in "(),":
            raise AlgebraError(f"unexpected {tok!r} in term")
        args = []
        if i < len(tokens) and tokens[i] == "(":
            i += 1
            if tokens[i] == ")":
                i += 1
                return App(tok, ())
            while True:
                args.append(node())
                if i >= len(tokens):
                    raise AlgebraError("unbalanced parentheses in term")
                if tokens[i] == ",":
                    i += 1
                    continue
                if tokens[i] == ")":
                    i += 1
                    break
                raise AlgebraError(f"unexpected {tokens[i]!r} in term")
        return App(tok, tuple(args))

    t = node()
    if i != len(tokens):
        raise AlgebraError(f"trailing input in term: {' '.join(tokens[i:])}")
    return t


# ---------------------------------------------------------------- row sets

class RowIndex:
    """Exact lookup from rows over {0..n-1}^width to positions."""

    def __init__(self, n, width):
        self.n = max(int(n), 2)
        self.width = width
        self.packed = width * math.log2(self.n) < 62
        if self.packed:
            self.radix = (self.n ** np.arange(width - 1, -1, -1, dtype=np.int64)).astype(np.int64)

    def keys(self, rows):
        rows = np.asarray(rows)
        if self.packed:
            return rows.astype(np.int64, copy=False) @ self.radix if self.width else np.zeros(len(rows), np.int64)
        raw = np.ascontiguousarray(rows.astype(np.uint8 if self.n <= 256 else np.uint16))
        return raw.view(np.dtype((np.void, raw.dtype.itemsize * self.width))).reshape(-1)

    def key_list(self, rows):
        k = self.keys(rows)
        return k.tolist()


class Lookup:
    """Map rows to their index in a fixed row array (or -1)."""

    def __init__(self, rows, n):
        rows = np.asarray(rows)
        self.rix = RowIndex(n, rows.shape[1])
        keys = self.rix.keys(rows)
        if self.rix.packed:
            order = np.argsort(keys, kind="stable")
            self._sorted = keys[order]
            self._order = order
        else:
            self._map = {k: i for i, k in enumerate(keys.tolist())}

    def __call__(self, rows):
        keys = self.rix.keys(rows)
        if self.rix.packed:
            pos = np.searchsorted(self._sorted, keys)
            pos_c = np.minimum(pos, len(self._sorted) - 1)
            hit = self._sorted[pos_c] == keys
            return np.where(hit, self._order[pos_c], -1)
        return np.array([self._map.get(k, -1) for k in keys.tolist()], dtype=np.intp)


def lex_order(rows):
    rows = np.asarray(rows)
    if rows.shape[1] == 0:
        return np.arange(len(rows))
    return np.lexsort(tuple(rows[:, c] for c in range(rows.shape[1] - 1, -1, -1)))


# ---------------------------------------------------------------- closure

@dataclass
class Closure:
    """Result of subuniverse generation in a power A^width.

    `rows` is sorted lexicographically.  With provenance on, `origin[i]` is
    ('gen', j) or (op_name, arg_indices) with indices into `rows`.
    """
    algebra: FiniteAlgebra
    rows: np.ndarray
    origin: list | None = None
    _lookup: Lookup | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.rows)

    def index(self, row):
        return int(self.lookup()(np.asarray(row, dtype=np.intp).reshape(1, -1))[0])

    def lookup(self):
        if self._lookup is None:
            self._lookup = Lookup(self.rows, self.algebra.size)
        return self._lookup

    def tuples(self):
        return [tuple(r) for r in self.rows.tolist()]

    def term(self, i, gen_names=None):
        """Term skeleton producing row i from the generators."""
        if self.origin is None:
            raise AlgebraError("closure was computed without provenance")
        memo = {}

        def go(j):
            if j in memo:
                return memo[j]
            src = self.origin[j]
            if src[0] == "gen":
                name = gen_names[src[1]] if gen_names else f"g{src[1]}"
                out = App(name, ())
            else:
                out = App(src[0], tuple(go(a) for a in src[1]))
            memo[j] = out
            return out

        return go(i)


def _product_results(table, width, pools, elems, track):
    """Apply `table` coordinatewise to every tuple in pools[0] x ... x pools[k-1].

    Pools are index arrays into `elems`.  Yields (result_rows, arg_index_matrix|None).
    """
    sizes = [len(p) for p in pools]
    total = math.prod(sizes)
    if total == 0:
        return
    step = max(1, _CHUNK // max(width, 1))
    for start in range(0, total, step):
        flat = np.arange(start, min(total, start + step), dtype=np.int64)
        coords = np.unravel_index(flat, sizes)
        idx = [pools[p][coords[p]] for p in range(len(pools))]
        res = table[tuple(elems[ix] for ix in idx)]
        yield res, (np.stack(idx, axis=1) if track else None)


def closure(A, gens, width=None, cap=DEFAULT_CAP, track=False, what="subuniverse"):
    """Least subset of A^width containing `gens` and closed under the basic operations."""
    gens = [tuple(int(x) for x in g) for g in gens]
    if width is None:
        if not gens:
            raise AlgebraError("width required when there are no generators")
        width = len(gens[0])
    for g in gens:
        if len(g) != width:
            raise AlgebraError("generators must share one index set")
        if any(not 0 <= x < A.size for x in g):
            raise AlgebraError(f"generator {g} has an entry out of range")
    rix = RowIndex(A.size, width)
    seen = {}
    buf = []
    origin = [] if track else None
    # small packed key spaces get a bitmap so duplicates are dropped without a Python loop
    dense = np.zeros(A.size ** width, dtype=bool) if rix.packed and A.size ** width <= 1 << 26 else None

    def admit(rows, srcs):
        if len(rows) == 0:
            return
        keys = rix.key_list(rows)
        for r, k, s in zip(rows, keys, srcs):
            if k not in seen:
                seen[k] = len(buf)
                buf.append(r)
                if track:
                    origin.append(s)
        if dense is not None:
            dense[keys] = True
        if len(buf) > cap:
            raise CapExceeded(what, cap, len(buf))

    if gens:
        admit(np.array(gens, dtype=np.intp).reshape(-1, width), [("gen", j) for j in range(len(gens))])
    for op in A.ops:
        if op.arity == 0:
            admit(np.full((1, width), int(op.table), dtype=np.intp), [(op.name, ())])

    elems = np.array(buf, dtype=np.intp).reshape(-1, width)
    n_old = 0
    active = [op for op in A.ops if op.arity > 0]
    full = A.size ** width
    while n_old < len(buf) < full:
        n_all = len(buf)
        elems = np.array(buf, dtype=np.intp).reshape(-1, width)
        old = np.arange(0, n_old)
        front = np.arange(n_old, n_all)
        every = np.arange(0, n_all)
        for op in active:
            k = op.arity
            for j in range(k):
                pools = [old] * j + [front] + [every] * (k - j - 1)
                for res, args in _product_results(op.table, width, pools, elems, track):
                    if len(buf) == full:
                        break
                    keys = rix.keys(res)
                    if dense is not None:
                        fresh = np.nonzero(~dense[keys])[0]
                        if len(fresh) == 0:
                            continue
                        res, keys = res[fresh], keys[fresh]
                        if track:
                            args = args[fresh]
                    _, first = np.unique(keys, return_index=True)
                    first.sort()
                    res = res[first]
                    srcs = ([(op.name, tuple(int(a) for a in args[f])) for f in first]
                            if track else itertools.repeat(None))
                    admit(res, srcs)
        n_old = n_all
    elems = np.array(buf, dtype=np.intp).reshape(-1, width)
    order = lex_order(elems)
    rows = elems[order]
    rows.setflags(write=False)
    if track:
        inv = np.empty(len(order), dtype=np.intp)
        inv[order] = np.arange(len(order))
        new_origin = []
        for i in order:
            src = origin[i]
            if src[0] == "gen":
                new_origin.append(src)
            else:
                new_origin.append((src[0], tuple(int(inv[a]) for a in src[1])))
        origin = new_origin
    return Closure(A, rows, origin)


def generate_subuniverse(A, gens, width=None, cap=DEFAULT_CAP):
    """Subuniverse of A^I generated by `gens`, as a lexicographically sorted list of tuples."""
    return closure(A, gens, width=width, cap=cap).tuples()


def is_closed(A, rows):
    """Return None if the row set is closed under every basic operation, else a witness."""
    rows = np.asarray(rows, dtype=np.intp)
    if rows.ndim != 2:
        raise AlgebraError("rows must be two dimensional")
    look = Lookup(rows, A.size)
    every = np.arange(len(rows))
    for op in A.ops:
        if op.arity == 0:
            r = np.full((1, rows.shape[1]), int(op.table), dtype=np.intp)
            if look(r)[0] < 0:
                return (op.name, ())
            continue
        for res, args in _product_results(op.table, rows.shape[1], [every] * op.arity, rows, True):
            miss = np.nonzero(look(res) < 0)[0]
            if len(miss):
                return (op.name, tuple(int(a) for a in args[miss[0]]))
    return None


# ---------------------------------------------------------------- constructions

def algebra_on_rows(A, rows, name=None, labels=True):
    """The subalgebra of a power of A whose universe is `rows` (which must be closed)."""
    rows = np.asarray(rows, dtype=np.intp)
    m, width = rows.shape
    look = Lookup(rows, A.size)
    every = np.arange(m)
    ops = []
    for op in A.ops:
        if op.arity == 0:
            r = np.full((1, width), int(op.table), dtype=np.intp)
            idx = look(r)
            if idx[0] < 0:
                raise AlgebraError(f"row set is not closed under constant {op.name}")
            ops.append((op.name, 0, idx.reshape(())))
            continue
        out = np.empty(m ** op.arity, dtype=np.intp)
        pos = 0
        for res, _ in _product_results(op.table, width, [every] * op.arity, rows, False):
            idx = look(res)
            if (idx < 0).any():
                raise AlgebraError(f"row set is not closed under {op.name}")
            out[pos:pos + len(idx)] = idx
            pos += len(idx)
        ops.append((op.name, op.arity, out))
    lab = [tuple(r) for r in rows.tolist()] if labels else None
    return FiniteAlgebra(name or f"{A.name}^{width}/sub", m, ops, lab)


def direct_product(A, B, name=None):
    if A.signature != B.signature:
        raise AlgebraError("direct product needs a common signature")
    n, m = A.size, B.size
    pairs = [(a, b) for a in range(n) for b in range(m)]
    ops = []
    for oa, ob in zip(A.ops, B.ops):
        k = oa.arity
        table = []
        for args in itertools.product(range(n * m), repeat=k):
            xa = tuple(a // m for a in args)
            xb = tuple(a % m for a in args)
            table.append(oa(*xa) * m + ob(*xb))
        ops.append((oa.name, k, table))
    return FiniteAlgebra(name or f"{A.name}x{B.name}", n * m, ops, pairs)


def direct_power(A, k, name=None):
    """A^k with coordinates enumerated lexicographically."""
    if k < 0:
        raise AlgebraError("power must be non-negative")
    rows = np.array(list(itertools.product(range(A.size), repeat=k)), dtype=np.intp).reshape(-1, k)
    if k == 0:
        ops = [(op.name, op.arity, np.zeros(1 ** op.arity, dtype=np.intp)) for op in A.ops]
        return FiniteAlgebra(name or f"{A.name}^0", 1, ops, [()])
    return algebra_on_rows(A, rows, name=name or f"{A.name}^{k}")


def subalgebra_from_subset(A, subset, name=None):
    """Subalgebra on a closed subset, relabelled 0..m-1 in increasing order."""
    elems = sorted(set(int(x) for x in subset))
    if not elems:
        raise AlgebraError("empty subset")
    if any(not 0 <= x < A.size for x in elems):
        raise AlgebraError("subset element out of range")
    members = set(elems)
    pos = {x: i for i, x in enumerate(elems)}
    ops = []
    for op in A.ops:
        table = []
        for args in itertools.product(elems, repeat=op.arity):
            v = op(*args)
            if v not in members:
                raise AlgebraError(
                    f"subset not closed: {op.name}{tuple(args)} = {v} is outside")
            table.append(pos[v])
        ops.append((op.name, op.arity, table))
    return FiniteAlgebra(name or f"{A.name}|{{{','.join(map(str, elems))}}}", len(elems), ops, elems)


def compatibility_violation(A, ids):
    """First (op, args1, args2) where `ids`-related inputs give unrelated outputs, else None."""
    ids = np.asarray(ids, dtype=np.intp)
    n = A.size
    rep = np.empty(n, dtype=np.intp)
    first = {}
    for x in range(n):
        rep[x] = first.setdefault(int(ids[x]), x)
    for op in A.ops:
        if op.arity == 0:
            continue
        g = ids[op.table]
        for axis in range(op.arity):
            moved = np.take(g, rep, axis=axis)
            bad = np.argwhere(moved != g)
            if len(bad):
                args = tuple(int(v) for v in bad[0])
                other = list(args)
                other[axis] = int(rep[args[axis]])
                return op.name, args, tuple(other)
    return None


def quotient(A, theta, name=None):
    """A/θ with blocks numbered by ascending minimum representative."""
    ids = np.asarray(theta.ids if hasattr(theta, "ids") else theta, dtype=np.intp)
    bad = compatibility_violation(A, ids)
    if bad:
        op, x, y = bad
        raise AlgebraError(f"partition not compatible with {op}: {op}{x} vs {op}{y}")
    blocks = int(ids.max()) + 1
    reps = [int(np.nonzero(ids == b)[0][0]) for b in range(blocks)]
    ops = []
    for op in A.ops:
        table = [int(ids[op(*[reps[a] for a in args])]) for args in
                 itertools.product(range(blocks), repeat=op.arity)]
        ops.append((op.name, op.arity, table))
    return FiniteAlgebra(name or f"{A.name}/theta", blocks, ops)


def free_algebra(A, k, cap=DEFAULT_CAP, name=None):
    """The free algebra on k generators in HSP(A): term-function tables on A^k."""
    if k < 0:
        raise AlgebraError("number of generators must be non-negative")
    n = A.size
    pts = np.array(list(itertools.product(range(n), repeat=k)), dtype=np.intp).reshape(-1, k)
    gens = [tuple(pts[:, j]) for j in range(k)]
    cl = closure(A, gens, width=len(pts), cap=cap, what="free algebra")
    if len(cl) == 0:
        raise AlgebraError("free algebra on 0 generators is empty (no constants)")
    F = algebra_on_rows(A, cl.rows, name=name or f"F({A.name},{k})")
    F.generators = [cl.index(g) for g in gens]
    return F


def is_isomorphic(A, B):
    """Brute-force isomorphism test; returns a bijection list or None."""
    if A.size != B.size or A.signature != B.signature:
        return None
    n = A.size
    for perm in itertools.permutations(range(n)):
        p = np.array(perm, dtype=np.intp)
        ok = True
        for oa, ob in zip(A.ops, B.ops):
            if oa.arity == 0:
                if p[int(oa.table)] != int(ob.table):
                    ok = False
                    break
                continue
            idx = np.ix_(*([p] * oa.arity))
            if not np.array_equal(p[oa.table], ob.table[idx]):
                ok = False
                break
        if ok:
            return list(perm)
    return None
