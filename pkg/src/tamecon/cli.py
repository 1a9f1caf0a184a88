"""Command-line front end.

Exit codes: 0 holds or success, 1 fails with a witness, 2 precondition unmet,
3 usage or parse error, 4 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus
from .centrality import centralizer, commutator, tc_check
from .congruence import DEFAULT_SIZE_BOUND, Partition, cg, con_all, is_congruence, lattice_size_bound
from .core import DEFAULT_CAP, AlgebraError, CapExceeded, free_algebra, parse_term
from .formats import ParseError, parse_algebra, parse_eqpair, parse_graph
from .gadgets import (KINDS, build_gadget, closure_audit, find_package, fixed_point_audit,
                      PreconditionUnmet, verify_graph_recovery)
from .tct import labeled_lattice, minimal_sets, s_radical, ss_radical, type_of
from .theorems import (CAPPED, FAILS, HOLDS, UNMET, Verdict, affine_si_ring_bound,
                       check_linear_above_radical, coherence_check,
                       essential_arity_mod_blocks, gb_signature_injectivity,
                       pair_square_construction, plain, si_scan, twin_orbit_analysis,
                       verify_comparability, verify_radical_strongly_abelian)

EXIT = {HOLDS: 0, "success": 0, FAILS: 1, UNMET: 2, "usage": 3, CAPPED: 4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _resolve(path, *suffixes):
    """A filesystem path, or the name of a bundled example file."""
    p = Path(path)
    if p.exists():
        return p
    for name in [p.name] if p.suffix else [p.name + s for s in suffixes]:
        bundled = corpus.path(name)
        if bundled.is_file():
            return bundled
    raise UsageError(f"no such file: {path}")


def load_algebra(path):
    p = _resolve(path, ".alg")
    return parse_algebra(p.read_text(), source=p.name)


def load_input(path):
    """A graph or an equivalence pair, chosen by the file's first keyword."""
    p = _resolve(path, ".graph", ".eqp")
    text = p.read_text()
    first = next((ln.split()[0] for ln in text.splitlines()
                  if ln.strip() and not ln.lstrip().startswith("#")), "")
    if first == "eqpair":
        return parse_eqpair(text, source=p.name)
    return parse_graph(text, source=p.name)


def congruence_arg(A, literal, role):
    p = Partition.parse(literal, A.size)
    if not is_congruence(A, p):
        raise AlgebraError(f"--{role} {literal!r} is not a congruence of {A.name}")
    return p


def _cover_problem(A, lo, hi):
    lat = con_all(A)
    if not lo < hi or (lat.index(lo), lat.index(hi)) not in set(lat.covers):
        return {"status": UNMET, "reason": f"{lo.literal()} < {hi.literal()} is not a cover"}
    return None


# ------------------------------------------------------------------ commands

def cmd_con(a):
    A = load_algebra(a.algebra)
    lat = con_all(A, cap=a.lattice_cap)
    if a.dot:
        return {"status": "success"}, lat.to_dot(name=A.name)
    return {"status": "success", "algebra": A.name, "count": len(lat),
            "congruences": [p.literal() for p in lat],
            "covers": [[a_, b] for a_, b in lat.covers]}, None


def cmd_cg(a):
    A = load_algebra(a.algebra)
    for x in (a.a, a.b):
        if not 0 <= x < A.size:
            raise AlgebraError(f"element {x} out of range for {A.name}")
    return {"status": "success", "algebra": A.name, "pair": [a.a, a.b],
            "cg": cg(A, a.a, a.b).literal()}, None


def cmd_type(a):
    A = load_algebra(a.algebra)
    lo, hi = congruence_arg(A, a.alpha, "alpha"), congruence_arg(A, a.beta, "beta")
    bad = _cover_problem(A, lo, hi)
    if bad:
        return bad, None
    return {"status": "success", "alpha": lo.literal(), "beta": hi.literal(),
            "type": type_of(A, lo, hi)}, None


def cmd_typeset(a):
    A = load_algebra(a.algebra)
    ll = labeled_lattice(A)
    if a.dot:
        return {"status": "success"}, ll.to_dot(name=A.name)
    covers = [{"lower": ll.elements[i].literal(), "upper": ll.elements[j].literal(),
               "type": t} for (i, j), t in sorted(ll.labels.items())]
    return {"status": "success", "algebra": A.name, "typeset": ll.typeset(),
            "covers": covers}, None


def cmd_radical(a):
    A = load_algebra(a.algebra)
    return {"status": "success", "algebra": A.name,
            "strongly_solvable": ss_radical(A).literal(), "solvable": s_radical(A).literal()}, None


def cmd_tc(a):
    A = load_algebra(a.algebra)
    al, be, ga = (congruence_arg(A, getattr(a, r), r) for r in ("alpha", "beta", "gamma"))
    res = tc_check(A, al, be, ga, cap=a.cap, witness_term=True)
    out = {"status": HOLDS if res.holds else FAILS}
    if not res.holds:
        out.update({"matrix": list(res.matrix), "shifted_pair": list(res.shifted_pair),
                    "term": res.term})
    return out, None


def cmd_commutator(a):
    A = load_algebra(a.algebra)
    al, be = congruence_arg(A, a.alpha, "alpha"), congruence_arg(A, a.beta, "beta")
    return {"status": "success", "commutator": commutator(A, al, be, cap=a.cap).literal()}, None


def cmd_centralizer(a):
    A = load_algebra(a.algebra)
    be, ga = congruence_arg(A, a.beta, "beta"), congruence_arg(A, a.gamma, "gamma")
    return {"status": "success", "centralizer": centralizer(A, be, ga, cap=a.cap).literal()}, None


def cmd_minsets(a):
    A = load_algebra(a.algebra)
    lo, hi = congruence_arg(A, a.alpha, "alpha"), congruence_arg(A, a.beta, "beta")
    bad = _cover_problem(A, lo, hi)
    if bad:
        return bad, None
    sets = minimal_sets(A, lo, hi)
    return {"status": "success", "count": len(sets), "minimal_sets": [m.report() for m in sets]}, None


def cmd_twin(a):
    A = load_algebra(a.algebra)
    mu = congruence_arg(A, a.mu, "mu")
    U = [int(x) for x in a.U.split(",")] if a.U else None
    return twin_orbit_analysis(A, mu, U), None


VERIFIERS = {
    "comparability": verify_comparability,
    "radical": verify_radical_strongly_abelian,
    "chain-above-radical": check_linear_above_radical,
    "pair-square": pair_square_construction,
}


def cmd_verify(a):
    A = load_algebra(a.algebra)
    if a.which == "coherence":
        if not (a.alpha and a.beta and a.gamma):
            raise UsageError("verify coherence needs --alpha, --beta and --gamma")
        args = [congruence_arg(A, getattr(a, r), r) for r in ("alpha", "beta", "gamma")]
        return coherence_check(A, *args), None
    return VERIFIERS[a.which](A), None


def cmd_scan_si(a):
    K = [load_algebra(p) for p in a.algebras]
    scan = si_scan(K, a.max_power, cap=a.cap)
    rep = scan.report()
    status = CAPPED if scan.partial else "success"
    return dict({"status": status}, **rep), None


def cmd_bounds(a):
    A = load_algebra(a.algebra)
    if a.which == "ring":
        return affine_si_ring_bound(A, cap=a.cap), None
    if a.which == "signature":
        return gb_signature_injectivity(A, cap=a.cap), None
    if not (a.term and a.blocks and a.beta):
        raise UsageError("bounds arity needs --term, --blocks and --beta")
    blocks = [[int(v) for v in blk.split(",")] for blk in a.blocks.split("|")]
    nvars = 1 + sum(len(b) for b in blocks)
    beta = congruence_arg(A, a.beta, "beta")
    return essential_arity_mod_blocks(A, parse_term(a.term), blocks, beta, nvars, cap=a.cap), None


def _gadget(a):
    S = load_algebra(a.algebra)
    src = load_input(a.input)
    pkg = find_package(a.kind, S)
    return build_gadget(a.kind, src, pkg, cap=a.cap)


def cmd_gadget(a):
    G = _gadget(a)
    if a.action == "build":
        audits = dict(closure_audit(G))
        audits.update({f"fixed points of {k}": v for k, v in fixed_point_audit(G).items()})
        out = {"status": HOLDS if all(audits.values()) else FAILS, "kind": G.kind,
               "algebra": G.algebra.name, "input": G.source.name, "index": list(G.index),
               "rows": len(G.rows), "elements": G.size,
               "named": dict(sorted(G.names.items())), "subsets":
                   {k: len(v) for k, v in sorted(G.subsets.items())},
               "audits": audits, "notes": list(G.notes)}
        if a.dump:
            Path(a.dump).write_text(G.dump())
        return out, None
    return verify_graph_recovery(G), None


def cmd_free(a):
    A = load_algebra(a.algebra)
    F = free_algebra(A, a.k, cap=a.cap)
    return {"status": "success", "algebra": A.name, "generators": a.k, "size": F.size}, None


# ------------------------------------------------------------------ parser

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-o", "--output", help="write the report here instead of stdout")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="element cap for closures")
    common.add_argument("--size-bound", type=int, default=DEFAULT_SIZE_BOUND,
                        help="largest algebra whose congruence lattice is computed")
    p = _Parser(prog="tamecon", description="Finite algebra congruence and tame congruence tools.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(fn=fn)
        return sp

    def partitions(sp, *roles, required=True):
        for r in roles:
            sp.add_argument(f"--{r}", required=required, help=f"{r} as a partition literal")

    sp = cmd("con", cmd_con, "congruence lattice")
    sp.add_argument("algebra")
    sp.add_argument("--dot", action="store_true")
    sp.add_argument("--lattice-cap", type=int, default=100_000)
    sp = cmd("cg", cmd_cg, "principal congruence")
    sp.add_argument("algebra")
    sp.add_argument("a", type=int)
    sp.add_argument("b", type=int)
    sp = cmd("type", cmd_type, "type label of a cover")
    sp.add_argument("algebra")
    partitions(sp, "alpha", "beta")
    sp = cmd("typeset", cmd_typeset, "labeled congruence lattice")
    sp.add_argument("algebra")
    sp.add_argument("--dot", action="store_true")
    sp = cmd("radical", cmd_radical, "solvable and strongly solvable radicals")
    sp.add_argument("algebra")
    sp = cmd("tc", cmd_tc, "term condition")
    sp.add_argument("algebra")
    partitions(sp, "alpha", "beta", "gamma")
    sp = cmd("commutator", cmd_commutator, "commutator [alpha, beta]")
    sp.add_argument("algebra")
    partitions(sp, "alpha", "beta")
    sp = cmd("centralizer", cmd_centralizer, "centralizer (gamma : beta)")
    sp.add_argument("algebra")
    partitions(sp, "beta", "gamma")
    sp = cmd("minsets", cmd_minsets, "minimal sets of a cover")
    sp.add_argument("algebra")
    partitions(sp, "alpha", "beta")
    sp = cmd("twin", cmd_twin, "polynomial and twin groups of a unary-type atom")
    sp.add_argument("algebra")
    partitions(sp, "mu")
    sp.add_argument("--U", help="comma-separated minimal set (default: the first one)")
    sp = cmd("verify", cmd_verify, "structural verifiers")
    sp.add_argument("which", choices=sorted(list(VERIFIERS) + ["coherence"]))
    sp.add_argument("algebra")
    partitions(sp, "alpha", "beta", "gamma", required=False)
    sp = cmd("scan-si", cmd_scan_si, "subdirectly irreducibles in small products")
    sp.add_argument("algebras", nargs="+")
    sp.add_argument("--max-power", type=int, default=2)
    sp = cmd("bounds", cmd_bounds, "size bounds for subdirectly irreducibles")
    sp.add_argument("which", choices=["arity", "ring", "signature"])
    sp.add_argument("algebra")
    sp.add_argument("--term", help="term such as f(v0,v1,v2)")
    sp.add_argument("--blocks", help="variable blocks such as 1,2|3")
    partitions(sp, "beta", required=False)
    sp = cmd("gadget", cmd_gadget, "build or verify a graph gadget")
    sp.add_argument("action", choices=["build", "verify"])
    sp.add_argument("kind", choices=KINDS)
    sp.add_argument("algebra")
    sp.add_argument("input", help="graph or eqpair file")
    sp.add_argument("--dump", help="write the gadget elements to this file")
    sp = cmd("free", cmd_free, "size of a free algebra")
    sp.add_argument("algebra")
    sp.add_argument("k", type=int)
    return p


# ------------------------------------------------------------------ rendering

def _text(obj, indent=0):
    pad = "  " * indent
    lines = []
    for k, v in obj.items():
        if isinstance(v, dict) and v:
            lines.append(f"{pad}{k}:")
            lines.extend(_text(v, indent + 1))
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            lines.append(f"{pad}{k}:")
            for x in v:
                lines.extend(_text(x, indent + 1))
                lines.append("")
            lines.pop()
        else:
            lines.append(f"{pad}{k}: {json.dumps(v, ensure_ascii=False) if not isinstance(v, str) else v}")
    return lines


def render(report, as_json):
    if as_json:
        return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    return "\n".join(_text(report)) + "\n"


def execute(argv):
    """Run one command; returns (exit code, report text)."""
    try:
        args = build_parser().parse_args(argv)
        if min(args.cap, args.size_bound, getattr(args, "lattice_cap", 1)) <= 0:
            raise UsageError("caps must be positive")
        with lattice_size_bound(args.size_bound):
            result, raw = args.fn(args)
        if isinstance(result, Verdict):
            report = {"command": args.command, **result.to_dict()}
        else:
            report = {"command": args.command, **plain(result)}
        code = EXIT[report["status"]]
        return code, raw if raw is not None else render(report, args.json), args.output
    except UsageError as exc:
        return 3, f"usage error: {exc}\n", None
    except ParseError as exc:
        return 3, f"parse error: {exc}\n", None
    except PreconditionUnmet as exc:
        return 2, render({"status": UNMET, "clause": exc.clause, "detail": exc.detail},
                         "--json" in argv), None
    except CapExceeded as exc:
        return 4, render({"status": CAPPED, "what": exc.what, "cap": exc.cap,
                          "reached": exc.reached}, "--json" in argv), None
    except (AlgebraError, ValueError) as exc:
        return 3, f"error: {exc}\n", None


def run(argv=None):
    code, text, dest = execute(sys.argv[1:] if argv is None else list(argv))
    if dest:
        Path(dest).write_text(text)
    else:
        stream = sys.stdout if code in (0, 1, 2, 4) else sys.stderr
        stream.write(text)
    return code


def main():
    sys.exit(run())
