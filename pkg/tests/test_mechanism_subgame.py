from causalgames.fixtures import b2_game1, c2_family, job_market, warehouse
from causalgames.mechanism import mechanise, recall, relevance_dot, relevance_graph
from causalgames.subgame import enumerate_subdiagrams, is_subdiagram, subgames

from builders import game, var

B = (0, 1)


def sequential():
    """Agent 2 sees agent 1's move; nothing else is hidden."""
    return game([
        var("D1", "decision", B, 1),
        var("D2", "decision", B, 2, ["D1"]),
        var("U1", "utility", agent=1, parents=["D1", "D2"]),
        var("U2", "utility", agent=2, parents=["D1", "D2"]),
    ], {"U1": lambda D1, D2: 2 * D1 + D2, "U2": lambda D1, D2: int(D1 == D2)})


def one_agent(observes: bool, shared_utility: bool):
    us = [var("U", "utility", agent=1, parents=["D1", "D2"])] if shared_utility else [
        var("Ua", "utility", agent=1, parents=["D1"]), var("Ub", "utility", agent=1, parents=["D2"])]
    fns = {"U": lambda D1, D2: int(D1 == D2), "Ua": lambda D1: D1, "Ub": lambda D2: D2}
    return game([var("D1", "decision", B, 1),
                 var("D2", "decision", B, 1, ["D1"] if observes else [])] + us, fns)


def test_perfect_information_relevance():
    m = sequential()
    assert set(relevance_graph(m, "s", decisions_only=True).edges) == {("PI[D2]", "PI[D1]")}
    # a best response also depends on which of D2's contexts have positive probability
    assert set(relevance_graph(m, decisions_only=True).edges) == {("PI[D2]", "PI[D1]"), ("PI[D1]", "PI[D2]")}


def test_job_market_relevance_is_cyclic():
    rel = relevance_graph(job_market(), decisions_only=True)
    assert set(rel.edges) == {("PI[D1]", "PI[D2]"), ("PI[D2]", "PI[D1]")}


def test_mechanised_graph_has_policy_nodes():
    mg = mechanise(sequential())
    assert "PI[D1]" in mg.graph and ("PI[D1]", "D1") in mg.graph.edges
    assert "digraph" in relevance_dot(sequential())


def test_recall_levels():
    assert recall(one_agent(True, True)) == {1: "perfect"}
    assert recall(one_agent(False, False)) == {1: "sufficient"}
    assert recall(one_agent(False, True)) == {1: "insufficient"}
    assert recall(b2_game1())[1] == "insufficient"


def test_subdiagrams_of_sequential_game():
    m = sequential()
    found = {d.nodes for d in enumerate_subdiagrams(m)}
    assert frozenset(m.names) in found
    assert frozenset({"D2", "U1", "U2"}) in found or frozenset({"D2", "U2"}) in found
    for nodes in found:
        assert is_subdiagram(m, nodes)
    # one subgame per value of the observed D1
    assert len(subgames(m)) == 1 + 2


def test_job_market_has_no_proper_subgame():
    assert [d.nodes for d in enumerate_subdiagrams(job_market())] == [frozenset(job_market().names)]


def test_warehouse_subgames_are_feasible():
    sgs = subgames(warehouse())
    assert all(sg.feasible for sg in sgs)
    assert {sg.diagram.agents for sg in sgs} == {(1, 2), (2,)}


def test_c2_subdiagrams_split_by_pair():
    agents = {d.agents for d in enumerate_subdiagrams(c2_family(2))}
    assert {(2, 3), (4, 5), (2, 3, 4, 5), (1, 2, 3, 4, 5)} <= agents
