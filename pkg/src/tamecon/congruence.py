"""Partitions and congruence lattices."""

from __future__ import annotations

import contextlib
import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import AlgebraError, CapExceeded, compatibility_violation

DEFAULT_LATTICE_CAP = 20000
DEFAULT_SIZE_BOUND = 10
_size_bound = [DEFAULT_SIZE_BOUND]


class Partition:
    """A partition of {0..n-1} stored as canonical block ids.

    Block ids are assigned in order of each block's least element, so two
    partitions are equal exactly when their id tuples are equal.
    """

    __slots__ = ("ids", "_hash")

    def __init__(self, ids):
        seen = {}
        canon = tuple(seen.setdefault(int(b), len(seen)) for b in ids)
        object.__setattr__(self, "ids", canon)
        object.__setattr__(self, "_hash", hash(canon))

    def __setattr__(self, *_):
        raise AttributeError("Partition is immutable")

    @classmethod
    def bottom(cls, n):
        return cls(range(n))

    @classmethod
    def top(cls, n):
        return cls([0] * n)

    @classmethod
    def from_blocks(cls, n, blocks):
        ids = list(range(n))
        uf = _UnionFind(n)
        for block in blocks:
            block = list(block)
            for x in block:
                if not 0 <= x < n:
                    raise AlgebraError(f"element {x} out of range 0..{n - 1}")
            for x in block[1:]:
                uf.union(block[0], x)
        return cls(uf.find(x) for x in ids)

    @classmethod
    def from_pairs(cls, n, pairs):
        uf = _UnionFind(n)
        for a, b in pairs:
            uf.union(int(a), int(b))
        return cls(uf.find(x) for x in range(n))

    @classmethod
    def parse(cls, literal, n):
        """Parse `0 2|1 3`; omitted elements become singletons.

        Also accepts `bot` and `top`, and digit runs like `02|13` when n <= 10.
        """
        text = literal.strip()
        if text in ("bot", "bottom", "⊥"):
            return cls.bottom(n)
        if text in ("top", "⊤"):
            return cls.top(n)
        blocks = []
        seen = set()
        for chunk in text.split("|"):
            try:
                toks = chunk.split()
                if n <= 10 and len(toks) == 1 and toks[0].isdigit():
                    toks = list(toks[0])
                block = [int(tok) for tok in toks]
            except ValueError:
                raise AlgebraError(f"bad partition literal {literal!r}") from None
            for x in block:
                if x in seen:
                    raise AlgebraError(f"element {x} appears twice in {literal!r}")
                if not 0 <= x < n:
                    raise AlgebraError(f"element {x} out of range in {literal!r}")
                seen.add(x)
            if block:
                blocks.append(block)
        return cls.from_blocks(n, blocks)

    @property
    def n(self):
        return len(self.ids)

    @property
    def nblocks(self):
        return max(self.ids) + 1 if self.ids else 0

    def blocks(self):
        out = [[] for _ in range(self.nblocks)]
        for x, b in enumerate(self.ids):
            out[b].append(x)
        return out

    def block_of(self, x):
        b = self.ids[x]
        return [y for y, c in enumerate(self.ids) if c == b]

    def related(self, a, b):
        return self.ids[a] == self.ids[b]

    def pairs(self):
        return [(a, b) for blk in self.blocks() for a in blk for b in blk]

    def nontrivial_pairs(self):
        return [(a, b) for blk in self.blocks() for a in blk for b in blk if a != b]

    def array(self):
        return np.array(self.ids, dtype=np.intp)

    def is_bottom(self):
        return self.nblocks == self.n

    def is_top(self):
        return self.nblocks <= 1

    def __eq__(self, other):
        return isinstance(other, Partition) and self.ids == other.ids

    def __hash__(self):
        return self._hash

    def __le__(self, other):
        _same_size(self, other)
        img = {}
        for a, b in zip(self.ids, other.ids):
            if img.setdefault(a, b) != b:
                return False
        return True

    def __lt__(self, other):
        return self != other and self <= other

    def __ge__(self, other):
        return other <= self

    def __gt__(self, other):
        return other < self

    def sort_key(self):
        return (-self.nblocks, self.ids)

    def literal(self):
        return "|".join(" ".join(map(str, b)) for b in self.blocks())

    def __str__(self):
        return self.literal()

    def __repr__(self):
        return f"Partition({self.literal()!r})"


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb
        return True


def _same_size(p, q):
    if p.n != q.n:
        raise AlgebraError(f"partitions on different sizes: {p.n} vs {q.n}")


def join(p, q):
    _same_size(p, q)
    uf = _UnionFind(p.n)
    for ids in (p.ids, q.ids):
        first = {}
        for x, b in enumerate(ids):
            uf.union(first.setdefault(b, x), x)
    return Partition(uf.find(x) for x in range(p.n))


def meet(p, q):
    _same_size(p, q)
    return Partition(_pair_ids(p.ids, q.ids))


def _pair_ids(a, b):
    seen = {}
    return [seen.setdefault(pair, len(seen)) for pair in zip(a, b)]


def is_congruence(A, p):
    return compatibility_violation(A, p.ids) is None


def cg_pairs(A, pairs, start=None):
    """Least congruence containing `pairs` (and `start`, if given)."""
    n = A.size
    uf = _UnionFind(n)
    if start is not None:
        for blk in start.blocks():
            for x in blk[1:]:
                uf.union(blk[0], x)
    pending = []
    for a, b in pairs:
        if not (0 <= a < n and 0 <= b < n):
            raise AlgebraError(f"pair ({a},{b}) out of range")
        if uf.union(a, b):
            pending.append((a, b))
    if start is not None:
        pending.extend((blk[0], x) for blk in start.blocks() for x in blk[1:])
    ops = [op for op in A.ops if op.arity > 0]
    while pending:
        xs = np.array([p[0] for p in pending], dtype=np.intp)
        ys = np.array([p[1] for p in pending], dtype=np.intp)
        pending = []
        us, vs = [], []
        for op in ops:
            for axis in range(op.arity):
                us.append(np.take(op.table, xs, axis=axis).reshape(-1))
                vs.append(np.take(op.table, ys, axis=axis).reshape(-1))
        if not us:
            break
        u = np.concatenate(us)
        v = np.concatenate(vs)
        roots = np.array([uf.find(x) for x in range(n)], dtype=np.intp)
        ru, rv = roots[u], roots[v]
        keep = ru != rv
        if not keep.any():
            continue
        cand = np.unique(np.stack([ru[keep], rv[keep]], axis=1), axis=0)
        for a, b in cand.tolist():
            if uf.union(a, b):
                pending.append((a, b))
    return Partition(uf.find(x) for x in range(n))


def cg(A, a, b):
    """Principal congruence Cg(a, b)."""
    return cg_pairs(A, [(a, b)])


@dataclass
class LatticeDiagram:
    """All congruences of one algebra with the Hasse covers between them."""
    elements: list
    covers: list
    leq: np.ndarray = field(repr=False)
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._index = {p: i for i, p in enumerate(self.elements)}
        self._join = {}
        self._meet = {}

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index(self, p):
        try:
            return self._index[p]
        except KeyError:
            raise AlgebraError(f"{p} is not a congruence in this lattice") from None

    def __contains__(self, p):
        return p in self._index

    @property
    def bottom(self):
        return self.elements[0]

    @property
    def top(self):
        return self.elements[-1]

    def join(self, i, j):
        key = (min(i, j), max(i, j))
        if key not in self._join:
            self._join[key] = self.index(join(self.elements[i], self.elements[j]))
        return self._join[key]

    def meet(self, i, j):
        key = (min(i, j), max(i, j))
        if key not in self._meet:
            self._meet[key] = self.index(meet(self.elements[i], self.elements[j]))
        return self._meet[key]

    def upper_covers(self, i):
        return [b for a, b in self.covers if a == i]

    def lower_covers(self, i):
        return [a for a, b in self.covers if b == i]

    def interval(self, lo, hi):
        return [k for k in range(len(self.elements)) if self.leq[lo, k] and self.leq[k, hi]]

    def cover_pairs(self):
        return [(self.elements[a], self.elements[b]) for a, b in self.covers]

    def to_dot(self, labels=None, name="con"):
        lines = [f"digraph {name} {{", "  rankdir=BT;"]
        for i, p in enumerate(self.elements):
            lines.append(f'  n{i} [label="{p.literal()}"];')
        for a, b in self.covers:
            if labels is not None:
                lines.append(f'  n{a} -> n{b} [label="{labels[(a, b)]}"];')
            else:
                lines.append(f"  n{a} -> n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _build_diagram(parts):
    parts = sorted(set(parts), key=Partition.sort_key)
    L = len(parts)
    n = parts[0].n
    ids = np.array([p.ids for p in parts], dtype=np.intp).reshape(L, n)
    reps = np.empty_like(ids)
    for i, p in enumerate(parts):
        first = {}
        reps[i] = [first.setdefault(b, x) for x, b in enumerate(p.ids)]
    leq = np.zeros((L, L), dtype=bool)
    for a in range(L):
        leq[a] = (ids[:, reps[a]] == ids).all(axis=1)
    lt = leq & ~np.eye(L, dtype=bool)
    lti = lt.astype(np.int32)
    between = (lti @ lti) > 0
    cov = lt & ~between
    covers = [(int(a), int(b)) for a, b in zip(*np.nonzero(cov))]
    covers.sort()
    return LatticeDiagram(parts, covers, leq)


def principal_congruences(A):
    out = {}
    for a, b in itertools.combinations(range(A.size), 2):
        out[(a, b)] = cg(A, a, b)
    return out


@contextlib.contextmanager
def lattice_size_bound(n):
    """Temporarily allow `con_all` (and everything built on it) on algebras of size <= n."""
    if n <= 0:
        raise ValueError("size bound must be positive")
    _size_bound.append(n)
    try:
        yield
    finally:
        _size_bound.pop()


def con_all(A, size_bound=None, cap=DEFAULT_LATTICE_CAP):
    """The congruence lattice of A as the join-closure of its principal congruences."""
    size_bound = size_bound or _size_bound[-1]
    if A.size > size_bound:
        raise CapExceeded("congruence lattice (algebra size bound)", size_bound, A.size)
    n = A.size
    prin = list(dict.fromkeys(principal_congruences(A).values()))
    found = {Partition.bottom(n)}
    found.update(prin)
    frontier = list(prin)
    while frontier:
        nxt = []
        for p in frontier:
            for q in prin:
                r = join(p, q)
                if r not in found:
                    found.add(r)
                    nxt.append(r)
                    if len(found) > cap:
                        raise CapExceeded("congruence lattice", cap, len(found))
        frontier = nxt
    return _build_diagram(found)


@dataclass(frozen=True)
class NotSubdirectlyIrreducible:
    atoms: tuple

    def __str__(self):
        return "not subdirectly irreducible; atoms: " + ", ".join(p.literal() for p in self.atoms)


def atoms(lat):
    return [lat.elements[b] for b in lat.upper_covers(0)]


def monolith(A, lat=None):
    """The monolith of A, or a NotSubdirectlyIrreducible record listing the atoms."""
    lat = lat or con_all(A)
    ats = atoms(lat)
    if len(ats) == 1:
        return ats[0]
    return NotSubdirectlyIrreducible(tuple(ats))


def is_si(A, lat=None):
    return isinstance(monolith(A, lat), Partition)


def meet_irreducibles(A, lat=None):
    """Pairs (θ, θ*) where θ has exactly one upper cover θ*."""
    lat = lat or con_all(A)
    out = []
    for i, p in enumerate(lat.elements):
        ups = lat.upper_covers(i)
        if len(ups) == 1:
            out.append((p, lat.elements[ups[0]]))
    return out


def all_partitions(n):
    """Every partition of {0..n-1} (restricted growth strings)."""
    def rec(prefix, top):
        if len(prefix) == n:
            yield Partition(prefix)
            return
        for b in range(top + 2):
            yield from rec(prefix + [b], max(top, b))
    if n == 0:
        return
    yield from rec([0], 0)


def restrict(p, subset):
    """The partition p restricted to `subset`, as a list of blocks (subset order)."""
    groups = {}
    for x in subset:
        groups.setdefault(p.ids[x], []).append(x)
    return list(groups.values())
