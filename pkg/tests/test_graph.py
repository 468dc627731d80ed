import pytest

from causalgames.errors import (
    CycleDetected, DanglingEndpoint, DuplicateEdge, OverlappingSets, SelfLoop, UnknownNode,
)
from causalgames.graph import Dag, Digraph, condense, d_separated, family, requisite_node, to_dot

import oracles


def chain():
    return Dag(["A", "B", "C"], [("A", "B"), ("B", "C")])


def test_construction_errors():
    with pytest.raises(DanglingEndpoint):
        Digraph(["A"], [("A", "B")])
    with pytest.raises(SelfLoop):
        Digraph(["A"], [("A", "A")])
    with pytest.raises(DuplicateEdge):
        Digraph(["A", "B"], [("A", "B"), ("A", "B")])
    with pytest.raises(CycleDetected):
        Dag(["A", "B", "C"], [("A", "B"), ("B", "C"), ("C", "A")])
    Digraph(["A", "B"], [("A", "B"), ("B", "A")])


def test_closures_and_order():
    g = Dag(["C", "A", "B"], [("A", "B"), ("C", "B")])
    assert g.topological_order() == ("C", "A", "B")
    assert g.ancestors({"B"}) == ("C", "A")
    assert g.descendants({"C"}) == ("B",)
    assert g.parents("B") == ("A", "C")
    with pytest.raises(UnknownNode):
        g.check("Z")
    assert family(g, "B").parents == ("A", "C")


def test_d_separation_basics():
    g = chain()
    assert not d_separated(g, {"A"}, {"C"})
    assert d_separated(g, {"A"}, {"C"}, {"B"})
    collider = Dag(["A", "B", "C"], [("A", "B"), ("C", "B")])
    assert d_separated(collider, {"A"}, {"C"})
    assert not d_separated(collider, {"A"}, {"C"}, {"B"})
    assert d_separated(g, set(), {"C"})
    with pytest.raises(OverlappingSets):
        d_separated(g, {"A"}, {"A"})
    with pytest.raises(UnknownNode):
        d_separated(g, {"A"}, {"Q"})


def test_requisite_node():
    g = chain()
    assert requisite_node(g, "A", {"C"})
    assert not requisite_node(g, "A", {"C"}, {"B"})


def test_condensation_is_topological():
    g = Digraph(["A", "B", "C", "D"], [("A", "B"), ("B", "A"), ("B", "C"), ("D", "C")])
    c = condense(g)
    assert set(map(frozenset, c.components)) == {frozenset("AB"), frozenset("C"), frozenset("D")}
    pos = {n: c.component_of(n) for n in g.nodes}
    assert pos["A"] < pos["C"] and pos["D"] < pos["C"]
    assert all(a < b for a, b in c.component_edges)
    c.as_dag()


def test_dot_mentions_every_edge():
    text = to_dot(chain())
    assert "A" in text and "->" in text


def test_d_separation_matches_exact_independence_three_nodes():
    checked, bad = oracles.dsep_agrees_on_all_dags(3, seed=7)
    assert checked > 0 and not bad
