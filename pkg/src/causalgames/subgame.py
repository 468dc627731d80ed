"""Subdiagram enumeration and subgame instantiation."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ExplosionGuard
from .inference import joint
from .mechanism import reachable
from .model import GameModel, restrict
from .policy import DecisionRule, MixedPolicy, PolicyProfile, uniform_profile

log = logging.getLogger(__name__)

MAX_EXTRAS = 12
MAX_DECISION_UNIONS = 1 << 12


@dataclass(frozen=True)
class Subdiagram:
    nodes: frozenset
    agents: tuple
    minimal: bool = False
    proper: bool = True

    def sorted_nodes(self, m: GameModel) -> tuple[str, ...]:
        return m.graph.sort(self.nodes)


@dataclass
class Subgame:
    diagram: Subdiagram
    context: dict
    model: GameModel
    feasible: bool


def _convex(m: GameModel, nodes: set[str]) -> set[str]:
    """Add every node on a directed path between two members."""
    if not nodes:
        return set()
    down = set(m.graph.descendants(nodes))
    up = set(m.graph.ancestors(nodes))
    return set(nodes) | (down & up)


def closure(m: GameModel, nodes: Iterable[str], criterion="s") -> frozenset:
    """Smallest superset closed under reachability and mediation."""
    cur = set(nodes)
    while True:
        nxt = set(cur)
        for d in [x for x in cur if m.variables[x].kind == "decision"]:
            for v in m.names:
                if v not in nxt and reachable(m, v, d, _relation(criterion, d)):
                    nxt.add(v)
        nxt = _convex(m, nxt)
        if nxt == cur:
            return frozenset(cur)
        cur = nxt


def _relation(criterion, d):
    if isinstance(criterion, Mapping):
        return criterion[d]
    return "s" if criterion in ("s", "spe", "subgame-perfect") else criterion


def is_subdiagram(m: GameModel, nodes, criterion="s") -> bool:
    nodes = set(nodes)
    return closure(m, nodes, criterion) == nodes


def _agents(m, nodes) -> tuple:
    return tuple(sorted({m.agent_of(d) for d in nodes if m.variables[d].kind == "decision"}))


def enumerate_subdiagrams(m: GameModel, criterion="s", full: bool = True) -> list[Subdiagram]:
    """All subdiagrams with at least one decision, the improper one first.

    ``full=False`` restricts to the lattice generated by unions of single
    decision closures; ``full=True`` also adds any admissible extra
    non-decision variables to each lattice element.
    """
    decisions = m.decisions
    everything = frozenset(m.names)
    base = {d: closure(m, {d}, criterion) for d in decisions}
    lattice: set[frozenset] = set()
    subsets = 0
    for r in range(1, len(decisions) + 1):
        for combo in itertools.combinations(decisions, r):
            subsets += 1
            if subsets > MAX_DECISION_UNIONS:
                raise ExplosionGuard("too many decision subsets for subdiagram enumeration")
            union = frozenset().union(*(base[d] for d in combo))
            lattice.add(closure(m, union, criterion))
    found = set(lattice)
    if full:
        for elem in lattice:
            extras = [v for v in m.names if v not in elem and m.variables[v].kind != "decision"]
            if len(extras) > MAX_EXTRAS:
                log.warning("subdiagram enumeration capped to the closure lattice (%d extra nodes)", len(extras))
                continue
            for r in range(1, len(extras) + 1):
                for add in itertools.combinations(extras, r):
                    cand = elem | set(add)
                    if _convex(m, set(cand)) != cand:
                        continue
                    if closure(m, cand, criterion) == cand:
                        found.add(frozenset(cand))
    found.add(everything)
    ordered = sorted(found, key=lambda s: (s != everything, -len(s), sorted(m.graph.order(v) for v in s)))
    minimal = {s for s in found if not any(t < s for t in found)}
    return [Subdiagram(s, _agents(m, s), s in minimal, s != everything) for s in ordered]


def boundary(m: GameModel, nodes) -> tuple[str, ...]:
    """Dropped variables with a child among ``nodes``."""
    nodes = set(nodes)
    return m.graph.sort({p for v in nodes for p in m.parents(v) if p not in nodes})


def is_feasible(m: GameModel, context: Mapping) -> bool:
    """Positive probability of ``context`` under the uniform policy completion."""
    if not context:
        return True
    jt = joint(m, uniform_profile(m))
    hit = [(jt.index[k], v) for k, v in context.items()]
    return any(all(row[i] == v for i, v in hit) for row, _ in jt.rows)


def instantiate_subgames(m: GameModel, d: Subdiagram) -> list[Subgame]:
    keep = set(d.nodes)
    bnd = boundary(m, keep)
    out = []
    for values in itertools.product(*(m.domain(b) for b in bnd)):
        ctx = dict(zip(bnd, values))
        out.append(Subgame(d, ctx, restrict(m, keep, ctx), is_feasible(m, ctx)))
    return out


def subgames(m: GameModel, criterion="s", full: bool = False, feasible_only: bool = True) -> list[Subgame]:
    out = []
    for d in enumerate_subdiagrams(m, criterion, full=full):
        for sg in instantiate_subgames(m, d):
            if sg.feasible or not feasible_only:
                out.append(sg)
    return out


def restrict_profile(profile: PolicyProfile, keep, context: Mapping) -> PolicyProfile:
    """Rules of decisions inside ``keep`` with dropped parents plugged in."""
    keep = set(keep)
    rules = {d: r.restricted(context) for d, r in profile.rules.items() if d in keep}
    mixes = []
    for mp in profile.mixtures:
        inside = [d for d in mp.decisions if d in keep]
        if not inside:
            continue
        acc: dict = {}
        for part, w in mp.support:
            key = tuple((dd, r.restricted(context)) for dd, r in part if dd in keep)
            acc[key] = acc.get(key, Fraction(0)) + w
        if len(acc) == 1:
            rules.update(dict(next(iter(acc))))
        else:
            mixes.append(MixedPolicy(mp.agent, tuple(acc.items())))
    return PolicyProfile(rules, mixes)


__all__ = [
    "Subdiagram", "Subgame", "closure", "enumerate_subdiagrams", "instantiate_subgames",
    "is_feasible", "is_subdiagram", "boundary", "subgames", "restrict_profile", "DecisionRule",
]
