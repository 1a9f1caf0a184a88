"""Access to the bundled example files."""

from importlib import resources

from .formats import parse_algebra, parse_eqpair, parse_graph

ALGEBRAS = ("z4", "z2", "s2", "b2", "l2", "zflip", "set3")
WITNESSES = ("pairsq", "bw5", "eqw5", "va5", "sp4", "tw4", "sc4")
# algebra carrying a witness package for each gadget kind
GADGET_ALGEBRAS = {"split_vertex": "bw5", "vertex_product": "va5", "eq_constraint": "eqw5",
                   "support_point": "sp4", "twin_quotient": "tw4", "sigma_constant": "sc4"}
GRAPHS = ("k3", "p3", "c5")
EQPAIRS = ("eq_small",)


def path(filename):
    return resources.files("tamecon") / "data" / filename


def text(filename):
    return path(filename).read_text()


def algebra(name):
    return parse_algebra(text(f"{name}.alg"), source=f"{name}.alg")


def graph(name):
    return parse_graph(text(f"{name}.graph"), source=f"{name}.graph")


def eqpair(name):
    return parse_eqpair(text(f"{name}.eqp"), source=f"{name}.eqp")
