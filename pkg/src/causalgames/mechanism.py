"""Mechanised graphs, rationality relations, relevance and recall."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .graph import Dag, Digraph, condense, d_separated, mechanism_name, to_dot
from .model import GameModel
from .policy import PolicyProfile, best_responses, enumerate_pure_policies


def mech(m: GameModel, v: str) -> str:
    return mechanism_name(v, m.variables[v].kind == "decision")


def object_of(node: str) -> str:
    return node[node.index("[") + 1:-1]


@lru_cache(maxsize=256)
def independent_graph(m: GameModel) -> Dag:
    """Object graph plus one parentless mechanism node per variable."""
    names = list(m.names)
    mechs = [mech(m, v) for v in names]
    return Dag(names + mechs, list(m.graph.edges) + [(mech(m, v), v) for v in names])


@dataclass(frozen=True)
class Relation:
    """Rationality relation for one decision.

    ``kind`` is ``br`` (best response), ``subgame-perfect`` or ``custom``.
    Custom relations list query templates (X, Y) used for relevance and an
    opaque predicate used only when evaluating outcomes.
    """

    decision: str
    kind: str = "br"
    queries: tuple[tuple[frozenset, frozenset], ...] = ()
    predicate: object = field(default=None, compare=False, hash=False)
    followers: tuple[str, ...] = ()

    @property
    def criterion(self) -> str:
        if self.kind == "br":
            return "br"
        if self.kind == "custom":
            return "custom"
        return "s"


def default_relations(m: GameModel, kind: str = "br") -> dict[str, Relation]:
    declared = m.extras.get("relations") or {}
    out = {}
    for d in m.decisions:
        spec = declared.get(d)
        if spec:
            k = spec.get("kind", kind)
            if k == "optimistic":
                out[d] = Relation(d, "optimistic", followers=tuple(spec.get("followers", ())))
            else:
                out[d] = Relation(d, k)
        else:
            out[d] = Relation(d, kind)
    return out


def own_downstream_utilities(m: GameModel, d: str) -> set[str]:
    desc = set(m.graph.descendants(d))
    return {u for u in m.utilities_of(m.agent_of(d)) if u in desc}


def s_queries(m: GameModel, d: str):
    return ((frozenset(own_downstream_utilities(m, d)), frozenset((d,) + m.parents(d))),)


def br_queries(m: GameModel, d: str):
    return s_queries(m, d) + ((frozenset(m.parents(d)), frozenset()),)


def custom_reachable(m: GameModel, queries, source: str, d: str) -> bool:
    """Whether the mechanism of ``source`` is requisite for some query of ``d``."""
    if source == d:
        return False
    if not own_downstream_utilities(m, d):
        return False
    g = independent_graph(m)
    src = mech(m, source)
    for X, Y in queries:
        X = set(X) - set(Y)
        if X and not d_separated(g, {src}, X, set(Y)):
            return True
    return False


def s_reachable(m: GameModel, source: str, d: str) -> bool:
    """Strategic relevance of the mechanism of ``source`` to the rule of ``d``."""
    return custom_reachable(m, s_queries(m, d), source, d)


def r_br_reachable(m: GameModel, source: str, d: str) -> bool:
    return custom_reachable(m, br_queries(m, d), source, d)


def reachable(m: GameModel, source: str, d: str, relation: Relation | str = "br") -> bool:
    rel = relation if isinstance(relation, Relation) else Relation(d, relation if relation != "s" else "subgame-perfect")
    crit = rel.criterion
    if crit == "br":
        return r_br_reachable(m, source, d)
    if crit == "custom":
        return custom_reachable(m, rel.queries, source, d)
    return s_reachable(m, source, d)


@dataclass
class MechanisedGraph:
    base: GameModel
    graph: Digraph
    mech_edges: tuple[tuple[str, str], ...]
    pruned: tuple[tuple[str, str], ...]

    def dot(self) -> str:
        kinds = {v: self.base.variables[v].kind for v in self.base.names}
        for v in self.base.names:
            kinds[mech(self.base, v)] = "mechanism"
        styles = {e: "dashed" for e in self.mech_edges}
        return to_dot(self.graph, kinds, name="mechanised", edge_styles=styles,
                      extra_edges=[(a, b, "dotted") for a, b in self.pruned])


def _criterion_of(relations, d):
    if relations is None or isinstance(relations, str):
        return relations or "br"
    return relations[d]


def mechanise(m: GameModel, relations: Mapping[str, Relation] | str | None = None,
              edges: str = "minimal") -> MechanisedGraph:
    """Mechanised graph; ``minimal`` keeps only edges whose reachability test fires."""
    names = list(m.names)
    mechs = [mech(m, v) for v in names]
    kept, pruned = [], []
    for d in m.decisions:
        rel = _criterion_of(relations, d)
        for v in names:
            if v == d:
                continue
            e = (mech(m, v), mech(m, d))
            if edges == "maximal" or reachable(m, v, d, rel):
                kept.append(e)
            else:
                pruned.append(e)
    all_edges = list(m.graph.edges) + [(mech(m, v), v) for v in names] + kept
    return MechanisedGraph(m, Digraph(names + mechs, all_edges), tuple(kept), tuple(pruned))


def relevance_graph(m: GameModel, relations=None, decisions_only: bool = False) -> Digraph:
    """Mechanism-level graph with an edge source -> PI[D] when reachability fires."""
    names = m.decisions if decisions_only else m.names
    nodes = [mech(m, v) for v in names]
    edges = []
    for d in m.decisions:
        rel = _criterion_of(relations, d)
        for v in names:
            if v != d and reachable(m, v, d, rel):
                edges.append((mech(m, v), mech(m, d)))
    return Digraph(nodes, edges)


def relevance_dot(m: GameModel, relations=None, decisions_only=False) -> str:
    g = relevance_graph(m, relations, decisions_only)
    kinds = {n: ("decision" if n.startswith("PI[") else "chance") for n in g.nodes}
    return to_dot(g, kinds, name="relevance")


def recall(m: GameModel) -> dict:
    """Per agent: ``perfect``, ``sufficient`` or ``insufficient``."""
    out = {}
    rel = relevance_graph(m, "s", decisions_only=True)
    for agent in m.agents:
        ds = [d for d in m.topo if d in set(m.decisions_of(agent))]
        perfect = all(
            set(m.parents(a)) | {a} <= set(m.parents(b))
            for i, a in enumerate(ds) for b in ds[i + 1:]
        )
        if perfect:
            out[agent] = "perfect"
            continue
        mine = {mech(m, d) for d in ds}
        sub = rel.subgraph(mine)
        acyclic = all(len(c) == 1 for c in condense(sub).components)
        out[agent] = "sufficient" if acyclic else "insufficient"
    return out


def rational_outcomes(m: GameModel, relations=None, space="pure") -> list[PolicyProfile]:
    """Profiles in which every decision rule is a rational response.

    ``space`` is ``pure``, ``representative`` (equilibrium representatives) or
    an explicit list of profiles to filter.
    """
    if space == "representative":
        from .equilibrium import behavioural_ne
        return list(behavioural_ne(m).profiles)
    rels = relations or default_relations(m)
    if isinstance(rels, str):
        rels = default_relations(m, rels)
    if space == "pure":
        per_agent = [enumerate_pure_policies(m, a) for a in m.strategic_agents()]
        candidates = (PolicyProfile({k: v for part in combo for k, v in part.items()})
                      for combo in itertools.product(*per_agent))
    else:
        candidates = iter(space)
    out = []
    for prof in candidates:
        if all(_responds(m, prof, rels[d]) for d in m.decisions):
            out.append(prof)
    return out


def _responds(m: GameModel, prof: PolicyProfile, rel: Relation) -> bool:
    d = rel.decision
    if rel.kind == "custom":
        return bool(rel.predicate(m, prof, d))
    if rel.kind == "subgame-perfect":
        from .equilibrium import rule_is_subgame_perfect
        return rule_is_subgame_perfect(m, prof, d)
    if d not in prof.rules:
        return True
    return best_responses(m, prof, d).contains(prof.rules[d])
