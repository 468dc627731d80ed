"""Directed-graph substrate: DAG checks, families, d-separation, condensation."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import networkx as nx

from .errors import (
    CycleDetected,
    DanglingEndpoint,
    DuplicateEdge,
    OverlappingSets,
    SelfLoop,
    UnknownNode,
)


class Digraph:
    """Directed graph over string nodes; may contain cycles."""

    def __init__(self, nodes: Iterable[str], edges: Iterable[tuple[str, str]]):
        self.nodes: tuple[str, ...] = tuple(dict.fromkeys(nodes))
        self._index = {n: i for i, n in enumerate(self.nodes)}
        seen = set()
        ordered = []
        for a, b in edges:
            if a not in self._index or b not in self._index:
                raise DanglingEndpoint(f"edge {a}->{b} has an undeclared endpoint")
            if a == b:
                raise SelfLoop(f"self-loop on {a}")
            if (a, b) in seen:
                raise DuplicateEdge(f"duplicate edge {a}->{b}")
            seen.add((a, b))
            ordered.append((a, b))
        self.edges: tuple[tuple[str, str], ...] = tuple(ordered)
        self._pa = {n: [] for n in self.nodes}
        self._ch = {n: [] for n in self.nodes}
        for a, b in self.edges:
            self._pa[b].append(a)
            self._ch[a].append(b)

    def __contains__(self, node) -> bool:
        return node in self._index

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self.nodes)} nodes, {len(self.edges)} edges)"

    def order(self, node: str) -> int:
        return self._index[node]

    def sort(self, nodes: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(set(nodes), key=self._index.__getitem__))

    def check(self, node: str) -> None:
        if node not in self._index:
            raise UnknownNode(node)

    def parents(self, node: str) -> tuple[str, ...]:
        self.check(node)
        return tuple(self._pa[node])

    def children(self, node: str) -> tuple[str, ...]:
        self.check(node)
        return tuple(self._ch[node])

    def ancestors(self, nodes) -> tuple[str, ...]:
        return self._closure(nodes, self._pa)

    def descendants(self, nodes) -> tuple[str, ...]:
        return self._closure(nodes, self._ch)

    def _closure(self, nodes, nbrs) -> tuple[str, ...]:
        start = [nodes] if isinstance(nodes, str) else list(nodes)
        for n in start:
            self.check(n)
        seen: set[str] = set()
        todo = deque(start)
        while todo:
            for m in nbrs[todo.popleft()]:
                if m not in seen:
                    seen.add(m)
                    todo.append(m)
        return self.sort(seen - set(start) if isinstance(nodes, str) else seen)

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from(self.edges)
        return g

    def subgraph(self, keep: Iterable[str]):
        keep = set(keep)
        return type(self)(
            [n for n in self.nodes if n in keep],
            [(a, b) for a, b in self.edges if a in keep and b in keep],
        )

    def with_edges(self, add=(), remove=()):
        remove = set(remove)
        edges = [e for e in self.edges if e not in remove]
        edges += [e for e in add if e not in set(edges)]
        return type(self)(self.nodes, edges)


class Dag(Digraph):
    """Acyclic digraph; construction fails on a cycle."""

    def __init__(self, nodes, edges):
        super().__init__(nodes, edges)
        validate_dag(self)

    def topological_order(self) -> tuple[str, ...]:
        """Topological order, ties broken by declaration order."""
        return tuple(
            nx.lexicographical_topological_sort(self.to_networkx(), key=self._index.__getitem__)
        )


def validate_dag(g: Digraph) -> None:
    """Raise unless ``g`` is acyclic over its declared nodes."""
    ng = nx.DiGraph()
    ng.add_nodes_from(g.nodes)
    ng.add_edges_from(g.edges)
    try:
        cycle = nx.find_cycle(ng)
    except nx.NetworkXNoCycle:
        return
    raise CycleDetected([a for a, _ in cycle] + [cycle[0][0]])


@dataclass(frozen=True)
class Family:
    parents: tuple[str, ...]
    children: tuple[str, ...]
    ancestors: tuple[str, ...]
    descendants: tuple[str, ...]
    family: tuple[str, ...]


def family(g: Digraph, v: str) -> Family:
    g.check(v)
    return Family(
        parents=g.parents(v),
        children=g.children(v),
        ancestors=g.ancestors(v),
        descendants=g.descendants(v),
        family=g.sort(set(g.parents(v)) | {v}),
    )


def _as_set(g: Digraph, xs) -> set[str]:
    xs = {xs} if isinstance(xs, str) else set(xs)
    for x in xs:
        g.check(x)
    return xs


def reachable(g: Digraph, sources, given) -> set[str]:
    """Nodes d-connected to ``sources`` given ``given`` (Bayes-ball reachability).

    Returns every node reachable along an active trail, sources included.
    """
    given = set(given)
    # nodes that are in `given` or have a descendant in it open colliders
    opens = set(given) | set(g.ancestors(given)) if given else set()
    visited: set[tuple[str, str]] = set()
    found: set[str] = set()
    # direction "up": arrived from a child, "down": arrived from a parent
    todo = deque((s, "up") for s in sources)
    while todo:
        node, way = todo.popleft()
        if (node, way) in visited:
            continue
        visited.add((node, way))
        if node not in given:
            found.add(node)
        if way == "up" and node not in given:
            todo.extend((p, "up") for p in g._pa[node])
            todo.extend((c, "down") for c in g._ch[node])
        elif way == "down":
            if node not in given:
                todo.extend((c, "down") for c in g._ch[node])
            if node in opens:
                todo.extend((p, "up") for p in g._pa[node])
    return found


def d_separated(g: Digraph, X, Z, Y=()) -> bool:
    """True iff every trail between X and Z is blocked by Y."""
    X, Z, Y = _as_set(g, X), _as_set(g, Z), _as_set(g, Y)
    if X & Z or X & Y or Z & Y:
        raise OverlappingSets(f"sets overlap: {sorted((X & Z) | (X & Y) | (Z & Y))}")
    if not X or not Z:
        return True
    return not (reachable(g, X, Y) & Z)


def mechanism_name(v: str, decision: bool = False) -> str:
    return f"PI[{v}]" if decision else f"THETA[{v}]"


def independently_mechanised(g: Digraph, decisions=()) -> Dag:
    """Add one parentless mechanism node per object node (no mechanism edges)."""
    decisions = set(decisions)
    mech = [mechanism_name(v, v in decisions) for v in g.nodes]
    edges = list(g.edges) + [(m, v) for m, v in zip(mech, g.nodes)]
    return Dag(list(g.nodes) + mech, edges)


def requisite_node(g: Digraph, v: str, X, Y=()) -> bool:
    """Whether the CPD of ``v`` can affect Pr(X | Y) (mechanism-parent test)."""
    g.check(v)
    X, Y = _as_set(g, X), _as_set(g, Y)
    mg = independently_mechanised(g)
    src = mechanism_name(v)
    if not X - Y:
        return False
    return not d_separated(mg, {src}, X - Y, Y)


@dataclass(frozen=True)
class Condensation:
    components: tuple[tuple[str, ...], ...]
    component_edges: tuple[tuple[int, int], ...]

    @property
    def topo_order(self) -> tuple[int, ...]:
        # components are stored already in topological order
        return tuple(range(len(self.components)))

    def component_of(self, node: str) -> int:
        for i, comp in enumerate(self.components):
            if node in comp:
                return i
        raise UnknownNode(node)

    def as_dag(self) -> Dag:
        return Dag([str(i) for i in range(len(self.components))],
                   [(str(a), str(b)) for a, b in self.component_edges])


def condense(g: Digraph) -> Condensation:
    """Maximal strongly connected components in a stable topological order."""
    ng = g.to_networkx()
    cg = nx.condensation(ng)
    members = {c: g.sort(cg.nodes[c]["members"]) for c in cg.nodes}
    key = {c: g.order(members[c][0]) for c in cg.nodes}
    order = list(nx.lexicographical_topological_sort(cg, key=key.__getitem__))
    pos = {c: i for i, c in enumerate(order)}
    comps = tuple(members[c] for c in order)
    edges = tuple(sorted((pos[a], pos[b]) for a, b in cg.edges))
    return Condensation(comps, edges)


_SHAPES = {
    "chance": "ellipse",
    "decision": "box",
    "utility": "diamond",
    "exogenous": "ellipse",
    "mechanism": "box",
}


def to_dot(g: Digraph, kinds: Mapping[str, str] | None = None, name: str = "G",
           edge_styles: Mapping[tuple[str, str], str] | None = None,
           extra_edges: Iterable[tuple[str, str, str]] = ()) -> str:
    """Graphviz text; node shape follows the node kind."""
    kinds = kinds or {}
    edge_styles = edge_styles or {}
    lines = [f'digraph "{name}" {{']
    for n in g.nodes:
        kind = kinds.get(n, "chance")
        attrs = [f"shape={_SHAPES.get(kind, 'ellipse')}"]
        if kind == "mechanism":
            attrs.append('style="rounded"')
        if kind == "exogenous":
            attrs.append('style="dashed"')
        lines.append(f'  "{n}" [{", ".join(attrs)}];')
    for a, b in g.edges:
        style = edge_styles.get((a, b))
        suffix = f" [style={style}]" if style else ""
        lines.append(f'  "{a}" -> "{b}"{suffix};')
    for a, b, style in extra_edges:
        lines.append(f'  "{a}" -> "{b}" [style={style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
