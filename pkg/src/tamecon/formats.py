"""Text formats for algebras, partitions, polynomial tables, graphs and equivalence pairs."""

from __future__ import annotations

from pathlib import Path

from .congruence import Partition, meet
from .core import AlgebraError, FiniteAlgebra


class ParseError(ValueError):
    def __init__(self, source, line, token, message):
        super().__init__(f"{source}:{line}: {message} (at {token!r})")
        self.source = source
        self.line = line
        self.token = token


def _lines(text):
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if body:
            yield no, body.split()


def _int(source, no, tok):
    try:
        return int(tok)
    except ValueError:
        raise ParseError(source, no, tok, "expected an integer") from None


def _read(path_or_text, source):
    if isinstance(path_or_text, Path) or ("\n" not in str(path_or_text) and Path(str(path_or_text)).exists()):
        p = Path(path_or_text)
        return p.read_text(), source or str(p)
    return str(path_or_text), source or "<text>"


def parse_algebra(path_or_text, source=None):
    text, source = _read(path_or_text, source)
    lines = list(_lines(text))
    if len(lines) < 2:
        raise ParseError(source, 1, "", "missing header")
    no, toks = lines[0]
    if toks[0] != "algebra" or len(toks) != 2:
        raise ParseError(source, no, toks[0], "expected 'algebra <name>'")
    name = toks[1]
    no, toks = lines[1]
    if toks[0] != "size" or len(toks) != 2:
        raise ParseError(source, no, toks[0], "expected 'size <n>'")
    n = _int(source, no, toks[1])
    if n < 1:
        raise ParseError(source, no, toks[1], "size must be positive")
    ops = []
    current = None
    for no, toks in lines[2:]:
        if toks[0] == "op":
            if current:
                ops.append(_finish_op(source, n, current))
            if len(toks) != 3:
                raise ParseError(source, no, toks[0], "expected 'op <name> <arity>'")
            arity = _int(source, no, toks[2])
            if arity < 0:
                raise ParseError(source, no, toks[2], "arity must be non-negative")
            current = [toks[1], arity, [], no]
            continue
        if current is None:
            raise ParseError(source, no, toks[0], "table entries before any 'op' line")
        for tok in toks:
            v = _int(source, no, tok)
            if not 0 <= v < n:
                raise ParseError(source, no, tok, f"entry out of range 0..{n - 1}")
            current[2].append(v)
    if current:
        ops.append(_finish_op(source, n, current))
    try:
        return FiniteAlgebra(name, n, ops)
    except AlgebraError as exc:
        raise ParseError(source, lines[0][0], name, str(exc)) from None


def _finish_op(source, n, current):
    name, arity, entries, no = current
    if len(entries) != n ** arity:
        raise ParseError(source, no, name,
                         f"operation {name} needs {n ** arity} entries, found {len(entries)}")
    return (name, arity, entries)


def serialize_algebra(A):
    out = [f"algebra {A.name}", f"size {A.size}"]
    for op in A.ops:
        out.append(f"op {op.name} {op.arity}")
        flat = [int(v) for v in op.table.reshape(-1)]
        if op.arity == 0:
            out.append(str(flat[0]))
        else:
            for i in range(0, len(flat), A.size):
                out.append(" ".join(map(str, flat[i:i + A.size])))
    return "\n".join(out) + "\n"


def parse_partition(literal, n):
    return Partition.parse(literal, n)


def serialize_poly(table):
    head = f"poly U={','.join(map(str, table.domain))} arity={table.arity}"
    return head + "\n" + " ".join(map(str, table.values)) + "\n"


def parse_poly(text):
    from .clone import PolyTable
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    head = lines[0].split()
    if head[0] != "poly":
        raise ParseError("<poly>", 1, head[0], "expected 'poly'")
    fields = dict(tok.split("=", 1) for tok in head[1:])
    dom = tuple(int(x) for x in fields["U"].split(","))
    k = int(fields["arity"])
    vals = tuple(int(x) for ln in lines[1:] for x in ln.split())
    return PolyTable(dom, k, vals)


def parse_graph(path_or_text, source=None):
    from .gadgets import Graph
    text, source = _read(path_or_text, source)
    lines = list(_lines(text))
    name, nv, edges = None, None, []
    for no, toks in lines:
        kw = toks[0]
        if kw == "graph" and len(toks) == 2:
            name = toks[1]
        elif kw == "vertices" and len(toks) == 2:
            nv = _int(source, no, toks[1])
        elif kw == "edge" and len(toks) == 3:
            u, v = _int(source, no, toks[1]), _int(source, no, toks[2])
            if nv is None:
                raise ParseError(source, no, kw, "edge before 'vertices'")
            if u == v:
                raise ParseError(source, no, toks[1], "loops are not allowed")
            if not (0 <= u < nv and 0 <= v < nv):
                raise ParseError(source, no, toks[1], "vertex out of range")
            e = (min(u, v), max(u, v))
            if e in edges:
                raise ParseError(source, no, toks[1], "repeated edge")
            edges.append(e)
        else:
            raise ParseError(source, no, kw, "unexpected line")
    if name is None or nv is None:
        raise ParseError(source, 1, "", "missing 'graph' or 'vertices' line")
    return Graph(name, nv, tuple(sorted(edges)))


def serialize_graph(g):
    out = [f"graph {g.name}", f"vertices {g.n}"]
    out += [f"edge {u} {v}" for u, v in g.edges]
    return "\n".join(out) + "\n"


def parse_eqpair(path_or_text, source=None):
    from .gadgets import EqPair
    text, source = _read(path_or_text, source)
    name = n = r0 = r1 = None
    for no, toks in _lines(text):
        kw = toks[0]
        rest = " ".join(toks[1:])
        if kw == "eqpair":
            name = rest
        elif kw == "carrier":
            n = _int(source, no, rest)
        elif kw in ("r0", "r1"):
            if n is None:
                raise ParseError(source, no, kw, "relation before 'carrier'")
            try:
                p = Partition.parse(rest, n)
            except AlgebraError as exc:
                raise ParseError(source, no, rest, str(exc)) from None
            if kw == "r0":
                r0 = p
            else:
                r1 = p
        else:
            raise ParseError(source, no, kw, "unexpected line")
    if None in (name, n, r0, r1):
        raise ParseError(source, 1, "", "incomplete eqpair")
    if not meet(r0, r1).is_bottom():
        raise ParseError(source, 1, name, "r0 and r1 must intersect in the identity relation")
    return EqPair(name, n, r0, r1)


def serialize_eqpair(e):
    return f"eqpair {e.name}\ncarrier {e.n}\nr0 {e.r0.literal()}\nr1 {e.r1.literal()}\n"
