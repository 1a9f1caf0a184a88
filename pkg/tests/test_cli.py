import json
import re

import pytest

from tamecon import corpus
from tamecon.cli import execute, run

from oracles import brute_congruences


def call(*argv):
    code, text, _ = execute(list(argv))
    return code, text


def test_con_dot_is_a_chain_for_z4():
    code, text = call("con", "z4.alg", "--dot")
    assert code == 0
    nodes = re.findall(r"^\s*n\d+ \[label", text, re.M)
    edges = re.findall(r"^\s*n(\d+) -> n(\d+);", text, re.M)
    assert len(nodes) == len(brute_congruences(corpus.algebra("z4"))) == 3
    assert edges == [("0", "1"), ("1", "2")]


def test_tc_failure_on_semilattice_reports_matrix():
    code, text = call("tc", "s2.alg", "--alpha", "top", "--beta", "top", "--gamma", "bot",
                      "--json")
    report = json.loads(text)
    assert code == 1 and report["status"] == "fails"
    assert report["matrix"] == [0, 0, 0, 1]


def test_verify_radical_on_zflip():
    code, text = call("verify", "radical", "zflip.alg", "--json")
    w = json.loads(text)["witness"]
    assert code == 0
    assert w["zeta"] == w["sigma"] == "0 1"


@pytest.mark.parametrize("argv,expected", [
    (["verify", "comparability", "va5"], 1),
    (["verify", "radical", "z2"], 2),
    (["verify", "chain-above-radical", "eqw5"], 1),
    (["verify", "pair-square", "pairsq"], 0),
    (["verify", "coherence", "bw5", "--alpha", "bot", "--beta", "0|1|2 3|4",
      "--gamma", "0|1|2 3 4"], 0),
    (["type", "z4", "--alpha", "bot", "--beta", "top"], 2),
    (["twin", "tw4", "--mu", "0 1|2|3"], 0),
    (["bounds", "ring", "z2"], 0),
    (["bounds", "signature", "zflip"], 0),
    (["bounds", "arity", "zflip", "--term", "neg(v1)", "--blocks", "1", "--beta", "top"], 0),
    (["scan-si", "b2"], 0),
    (["free", "z4", "3", "--cap", "10"], 4),
    (["gadget", "verify", "split_vertex", "z4", "k3"], 2),
    (["gadget", "verify", "eq_constraint", "eqw5", "eq_small"], 0),
    (["bogus"], 3),
    (["con", "missing.alg"], 3),
    (["verify", "coherence", "bw5"], 3),
    (["tc", "z4", "--alpha", "0 1|2 3", "--beta", "top", "--gamma", "bot"], 3),
    (["con", "z4", "--cap", "0"], 3),
])
def test_exit_codes(argv, expected):
    assert call(*argv)[0] == expected


def test_typeset_of_z4(capsys):
    code, text = call("typeset", "z4", "--json")
    report = json.loads(text)
    assert report["typeset"] == [2] and len(report["covers"]) == 2


def test_cg_matches_library():
    code, text = call("cg", "va5", "0", "1", "--json")
    assert json.loads(text)["cg"] == "0 1 4|2 3"


def test_free_algebra_of_z2():
    # term functions of Z2 in two variables: a x + b y with a, b in {0, 1}
    assert json.loads(call("free", "z2", "2", "--json")[1])["size"] == 4


def test_parse_error_names_file_line_and_token(tmp_path):
    bad = tmp_path / "bad.alg"
    bad.write_text("algebra bad\nsize 2\nop f 1\n0 7\n")
    code, text = call("con", str(bad))
    assert code == 3
    assert "bad.alg:4" in text and "'7'" in text


def test_loop_edge_is_a_parse_error(tmp_path):
    g = tmp_path / "loop.graph"
    g.write_text("graph g\nvertices 2\nedge 1 1\n")
    assert call("gadget", "build", "split_vertex", "bw5", str(g))[0] == 3


def test_output_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert run(["radical", "z4", "--json", "-o", str(out)]) == 0
    assert capsys.readouterr().out == ""
    report = json.loads(out.read_text())
    assert report["strongly_solvable"] == "0|1|2|3" and report["solvable"] == "0 1 2 3"


def test_gadget_dump(tmp_path):
    dump = tmp_path / "d.txt"
    code, text = call("gadget", "build", "split_vertex", "bw5", "k3", "--dump", str(dump),
                      "--json")
    report = json.loads(text)
    assert code == 0 and all(report["audits"].values())
    lines = dump.read_text().splitlines()
    assert len(lines) == report["rows"] and all(len(ln.split(",")) == 6 for ln in lines)


def test_inputs_are_not_modified(tmp_path):
    src = tmp_path / "z4.alg"
    src.write_text(corpus.text("z4.alg"))
    before = src.read_bytes()
    call("con", str(src))
    assert src.read_bytes() == before


def test_reports_repeat_byte_for_byte():
    argv = ["verify", "comparability", "va5", "--json"]
    assert call(*argv) == call(*argv)


def test_size_bound_flag(tmp_path):
    from tamecon.core import direct_product
    from tamecon.formats import serialize_algebra
    p = tmp_path / "z4sq.alg"
    p.write_text(serialize_algebra(direct_product(corpus.algebra("z4"), corpus.algebra("z4"))))
    assert call("con", str(p))[0] == 4
    code, text = call("con", str(p), "--size-bound", "16", "--json")
    assert code == 0 and json.loads(text)["count"] == 15
