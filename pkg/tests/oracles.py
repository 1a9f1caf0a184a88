"""Independent brute-force oracles used by the unit and acceptance tests."""

import itertools

import numpy as np


def term_function_levels(A, nvars, depth):
    """Yield, level by level, the new term-function tables (depth <= `depth`, `nvars` variables)."""
    n = A.size
    grids = np.indices((n,) * nvars).reshape(nvars, -1)
    seen = set()
    current = []

    def admit(rows):
        out = []
        for r in rows:
            key = r.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(r)
        return out

    level = admit(list(grids))
    for op in A.ops:
        if op.arity == 0:
            level += admit([np.full(n ** nvars, int(op.table))])
    current.extend(level)
    yield level
    for _ in range(depth):
        stack = np.array(current)
        fresh = []
        for op in A.ops:
            if op.arity == 0:
                continue
            for combo in _chunks(len(stack), op.arity):
                args = tuple(stack[c] for c in combo)
                vals = op.table[args]
                fresh.extend(admit(list(np.unique(vals, axis=0))))
        current.extend(fresh)
        yield fresh


def _chunks(m, k, size=4096):
    idx = np.array(list(itertools.product(range(m), repeat=k))) if m ** k <= 4_000_000 else None
    if idx is None:
        raise RuntimeError("term enumeration too large")
    for s in range(0, len(idx), size):
        block = idx[s:s + size]
        yield tuple(block[:, j] for j in range(k))


def _related_pairs(ids, n, width):
    """Pairs of tuples in A^width related coordinatewise, as two index arrays (unequal only)."""
    tuples = np.array(list(itertools.product(range(n), repeat=width))).reshape(-1, width)
    cls = np.asarray(ids)[tuples]
    same = (cls[:, None, :] == cls[None, :, :]).all(axis=2)
    np.fill_diagonal(same, False)
    return np.nonzero(same)


def tc_by_terms(A, alpha, beta, gamma, nvars=5, depth=3):
    """Search terms for a TC(α,β;γ) failure directly: returns (holds, witness)."""
    n = A.size
    if alpha.is_bottom() or beta.is_bottom() or gamma.is_top():
        return True, None
    g = np.array(gamma.ids)
    splits = []
    for j in range(1, nvars):
        rp = _related_pairs(alpha.ids, n, j)
        cp = _related_pairs(beta.ids, n, nvars - j)
        splits.append((j, rp, cp))
    for level in term_function_levels(A, nvars, depth):
        if not level:
            continue
        T = g[np.array(level)]
        for j, (r1, r2), (c1, c2) in splits:
            R, C = n ** j, n ** (nvars - j)
            M = T.reshape(len(level), R, C)
            E = M[:, :, c1] == M[:, :, c2]
            for b in range(len(level)):
                hit = E[b][r1] & ~E[b][r2]
                if hit.any():
                    pi, ci = np.argwhere(hit)[0]
                    return False, {"table": level[b], "split": j,
                                   "rows": (int(r1[pi]), int(r2[pi])), "cols": (int(c1[ci]), int(c2[ci]))}
    return True, None


def set_partitions(n):
    """Every partition of range(n) as a tuple of block ids (restricted growth strings)."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(top + 2):
            yield from grow(prefix + [b], max(top, b))
    if n == 0:
        yield ()
        return
    yield from grow([0], 0)


def compatible(A, ids):
    """Does the partition (block-id tuple) respect every operation of A?"""
    n = A.size
    for op in A.ops:
        k = op.arity
        if k == 0:
            continue
        tab = op.table
        for args in itertools.product(range(n), repeat=k):
            for pos in range(k):
                for alt in range(n):
                    if ids[alt] == ids[args[pos]] and alt != args[pos]:
                        other = args[:pos] + (alt,) + args[pos + 1:]
                        if ids[tab[args]] != ids[tab[other]]:
                            return False
    return True


def brute_congruences(A):
    return [p for p in set_partitions(A.size) if compatible(A, p)]


def refines(p, q):
    """p <= q for block-id tuples."""
    return all(q[i] == q[j] for i in range(len(p)) for j in range(len(p)) if p[i] == p[j])


def brute_cg_ids(A, a, b, cons=None):
    cons = brute_congruences(A) if cons is None else cons
    cands = [p for p in cons if p[a] == p[b]]
    least = [p for p in cands if all(refines(p, q) for q in cands)]
    assert len(least) == 1
    return least[0]
