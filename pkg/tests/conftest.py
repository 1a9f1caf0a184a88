import itertools
import random
import sys

import pytest

from tamecon import corpus
from tamecon.core import FiniteAlgebra


@pytest.fixture(scope="session")
def alg():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = corpus.algebra(name)
        return cache[name]
    return get


def random_algebra(seed, n, signature, name="rand"):
    rng = random.Random(seed)
    ops = []
    for i, k in enumerate(signature):
        ops.append((f"f{i}", k, [rng.randrange(n) for _ in range(n ** k)]))
    return FiniteAlgebra(name, n, ops)


def naive_closure(A, gens):
    """Fixpoint of coordinatewise application, one tuple at a time."""
    elems = set(tuple(g) for g in gens)
    width = len(next(iter(elems))) if elems else 0
    for op in A.ops:
        if op.arity == 0:
            elems.add((op(),) * width)
    changed = True
    while changed:
        changed = False
        current = list(elems)
        for op in A.ops:
            if op.arity == 0:
                continue
            for args in itertools.product(current, repeat=op.arity):
                out = tuple(op(*[a[c] for a in args]) for c in range(width))
                if out not in elems:
                    elems.add(out)
                    changed = True
    return sorted(elems)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
