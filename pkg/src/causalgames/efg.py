"""Conversions between game models and extensive-form trees."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import networkx as nx

from .equilibrium import verify_ne
from .errors import (
    EfgError, ExplosionGuard, InvalidInterventionSets, MappingMismatch, NonAncestralConditioning,
)
from .gambit import Efg, EfgNode
from .inference import expected_utilities, joint
from .model import ONE, ZERO, Cpd, GameModel, Variable
from .policy import DecisionRule, PolicyProfile, profile_cap

BOTTOM = "⊥"


@dataclass
class NaturalMapping:
    """Information set ``(player, iset)`` <-> decision context ``(D, ctx)``."""

    efg: Efg
    model: GameModel
    infosets: dict = field(default_factory=dict)

    def to_efg(self, rules: Mapping[str, DecisionRule]) -> dict:
        beh = {}
        for key, (d, ctx) in self.infosets.items():
            dist = rules[d].dist(ctx)
            beh[key] = {a: dist.get(a, ZERO) for a in self.efg.nodes[self.efg.infosets()[key][0]].actions}
        return beh

    def to_maid(self, beh: Mapping) -> PolicyProfile:
        m = self.model
        seen: dict = {}
        for key, (d, ctx) in self.infosets.items():
            seen.setdefault(d, {})[ctx] = beh[key]
        rules = {}
        for d in m.decisions:
            dom = m.domain(d)
            q = Fraction(1, len(dom))
            table = {c: seen.get(d, {}).get(c, {a: q for a in dom}) for c in m.contexts(d)}
            rules[d] = DecisionRule.from_table(m, d, table)
        return PolicyProfile(rules)


# tree utilities -------------------------------------------------------------

def expected_payoffs(e: Efg, beh: Mapping) -> tuple[Fraction, ...]:
    """Expected payoff vector under a behaviour profile ``{(player, iset): {action: p}}``."""
    tot = [ZERO] * len(e.players)
    todo = [(0, ONE)]
    while todo:
        i, p = todo.pop()
        n = e.nodes[i]
        if n.kind == "leaf":
            for k, u in enumerate(n.payoff):
                tot[k] += p * u
            continue
        if n.kind == "chance":
            probs = n.probs
        else:
            row = beh[(n.player, n.iset)]
            probs = [Fraction(row.get(a, 0)) for a in n.actions]
        for c, q in zip(n.children, probs):
            if q:
                todo.append((c, p * q))
    return tuple(tot)


def pure_strategies(e: Efg, player) -> list[dict]:
    keys = sorted(k for k in e.infosets() if k[0] == player)
    acts = [e.nodes[e.infosets()[k][0]].actions for k in keys]
    n = 1
    for a in acts:
        n *= len(a)
    if n > profile_cap():
        raise ExplosionGuard(f"player {player} has {n} pure strategies")
    return [{k: {a: ONE} for k, a in zip(keys, combo)} for combo in itertools.product(*acts)]


def is_ne(e: Efg, beh: Mapping) -> bool:
    base = expected_payoffs(e, beh)
    for k, pl in enumerate(e.players):
        for s in pure_strategies(e, pl):
            if expected_payoffs(e, {**beh, **s})[k] > base[k]:
                return False
    return True


def subgame_roots(e: Efg, proper: bool = True) -> list[int]:
    """Nodes whose subtree cuts no information set."""
    isets = e.infosets()
    out = []
    for i, n in enumerate(e.nodes):
        if n.kind == "leaf" or (proper and i == 0):
            continue
        sub = set(e.subtree(i))
        if all(set(isets[(e.nodes[k].player, e.nodes[k].iset)]) <= sub
               for k in sub if e.nodes[k].kind == "decision"):
            out.append(i)
    return out


def ancestors(e: Efg, i: int) -> list[int]:
    return [p for p, _ in e.path(i)]


# MAID -> EFG -----------------------------------------------------------------

def _order(m: GameModel, keep: set[str], order: Sequence[str] | None) -> list[str]:
    if order is not None:
        order = [v for v in order if v in keep]
        pos = {v: i for i, v in enumerate(order)}
        if set(order) != keep or any(pos[a] > pos[b] for a, b in m.graph.edges if a in pos and b in pos):
            raise EfgError("ordering is not a topological order of the split variables")
        return order
    g = nx.DiGraph()
    g.add_nodes_from(keep)
    g.add_edges_from((a, b) for a, b in m.graph.edges if a in keep and b in keep)
    # reachability through dropped nodes still constrains the order
    full = m.graph.to_networkx()
    for a in keep:
        for b in nx.descendants(full, a):
            if b in keep:
                g.add_edge(a, b)
    return list(nx.lexicographical_topological_sort(g))


def maid2efg(m: GameModel, split: str = "full", order: Sequence[str] | None = None) -> tuple[Efg, NaturalMapping]:
    """Game tree that splits on chance and decision variables in a topological order.

    ``split="reduced"`` only splits on decisions and their parents; leaves then
    carry conditional expected utilities.
    """
    if split == "full":
        keep = set(m.chance) | set(m.decisions)
    elif split == "reduced":
        keep = set(m.decisions)
        for d in m.decisions:
            keep |= set(m.parents(d))
    else:
        raise EfgError(f"unknown split {split!r}")
    seq = _order(m, keep, order)
    players = tuple(m.agents)
    uniform = {d: DecisionRule.uniform(m, d) for d in m.decisions}
    cache: dict = {}

    def jt_for(path):
        key = tuple((v, x) for v, x in path.items() if m[v].kind == "decision")
        if key not in cache:
            rules = dict(uniform)
            rules.update({d: DecisionRule.constant(m, d, x) for d, x in key})
            cache[key] = joint(m, PolicyProfile(rules))
        return cache[key]

    nodes: list[EfgNode] = []
    isets: dict[tuple, tuple[int, int]] = {}
    counters = {p: 0 for p in players}
    mapping = {}
    sets: dict[str, list[int]] = {v: [] for v in seq}

    def grow(k, path, parent):
        idx = len(nodes)
        if k == len(seq):
            jt = jt_for(path)
            given = {v: x for v, x in path.items() if m[v].kind != "decision"}
            pay = tuple(jt.expect(list(m.utilities_of(a)), given) if m.utilities_of(a) else ZERO
                        for a in players)
            nodes.append(EfgNode("leaf", "", payoff=pay, parent=parent))
            return idx
        v = seq[k]
        sets[v].append(idx)
        if m[v].kind == "decision":
            ctx = tuple(path[p] for p in m.parents(v))
            pl = m[v].agent
            if (v, ctx) not in isets:
                counters[pl] += 1
                isets[(v, ctx)] = (pl, counters[pl])
                mapping[isets[(v, ctx)]] = (v, ctx)
            _, num = isets[(v, ctx)]
            nodes.append(EfgNode("decision", v, pl, num, m.domain(v), parent=parent))
            branches = [(a, None) for a in m.domain(v)]
        else:
            jt = jt_for(path)
            given = {u: x for u, x in path.items() if m[u].kind != "decision"}
            branches = [(x, jt.prob({v: x}, given)) for x in m.domain(v)]
            branches = [(x, q) for x, q in branches if q]
            nodes.append(EfgNode("chance", v, 0, 0, tuple(x for x, _ in branches),
                                 tuple(q for _, q in branches), parent=parent))
        for x, _ in branches:
            c = grow(k + 1, {**path, v: x}, idx)
            nodes[idx].children.append(c)
        return idx

    grow(0, {}, None)
    e = Efg(players, nodes, title=m.extras.get("description", "") or "",
            intervention_sets={v: ids for v, ids in sets.items()})
    e.check()
    return e, NaturalMapping(e, m, mapping)


# EFG -> MAID -----------------------------------------------------------------

def _label(e: Efg, i: int):
    return e.nodes[i].name or f"N{i}"


def default_sets(e: Efg) -> dict[str, list[int]]:
    """Singleton sets: one per chance node, information set and leaf."""
    out: dict[str, list[int]] = {}
    used: set = set()

    def name(base):
        n, k = base, 1
        while n in used:
            k += 1
            n = f"{base}_{k}"
        used.add(n)
        return n

    for key, members in sorted(e.infosets().items(), key=lambda kv: kv[1][0]):
        out[name(e.nodes[members[0]].name or f"D{key[0]}_{key[1]}")] = list(members)
    for i, n in enumerate(e.nodes):
        if n.kind == "chance":
            out[name(_label(e, i))] = [i]
        elif n.kind == "leaf":
            out[name(f"L{i}")] = [i]
    return out


def _complete_sets(e: Efg, given: Mapping[str, Sequence[int]] | None) -> dict[str, list[int]]:
    if not given:
        return default_sets(e)
    out = {k: list(v) for k, v in given.items()}
    covered = [i for v in out.values() for i in v]
    if len(covered) != len(set(covered)):
        raise InvalidInterventionSets("intervention sets overlap")
    if any(not 0 <= i < len(e.nodes) for i in covered):
        raise InvalidInterventionSets("intervention set names an unknown node")
    rest = {k: v for k, v in default_sets(e).items() if not set(v) & set(covered)}
    for k, v in rest.items():
        name = k
        while name in out:
            name += "'"
        out[name] = v
    return out


def validate_sets(e: Efg, sets: Mapping[str, Sequence[int]]) -> None:
    """Raise InvalidInterventionSets unless ``sets`` is a valid partition."""
    where = {i: s for s, ids in sets.items() for i in ids}
    if set(where) != set(range(len(e.nodes))):
        raise InvalidInterventionSets("intervention sets do not cover every node")
    isets = e.infosets()
    for s, ids in sets.items():
        kinds = {e.nodes[i].kind for i in ids}
        if len(kinds) != 1:
            raise InvalidInterventionSets(f"set {s} mixes node kinds {sorted(kinds)}")
        kind = kinds.pop()
        if kind == "decision":
            if len({e.nodes[i].player for i in ids}) != 1:
                raise InvalidInterventionSets(f"set {s} mixes players")
            for i in ids:
                if not set(isets[(e.nodes[i].player, e.nodes[i].iset)]) <= set(ids):
                    raise InvalidInterventionSets(f"set {s} splits an information set")
            if len({len(e.nodes[i].actions) for i in ids}) != 1:
                raise InvalidInterventionSets(f"members of {s} have different numbers of children")
        if kind != "leaf":
            hist = {frozenset(where[p] for p in ancestors(e, i)) for i in ids}
            if len(hist) != 1:
                raise InvalidInterventionSets(f"paths into {s} pass through different intervention sets")
    for leaf in e.leaves():
        seen = [where[p] for p in ancestors(e, leaf)]
        if len(seen) != len(set(seen)):
            raise InvalidInterventionSets("a path passes through one intervention set twice")


def efg2maid(e: Efg, intervention_sets: Mapping[str, Sequence[int]] | None = None,
             ) -> tuple[GameModel, NaturalMapping]:
    """Canonical game model of a tree, one variable per intervention set."""
    sets = _complete_sets(e, intervention_sets if intervention_sets is not None else e.intervention_sets)
    validate_sets(e, sets)
    where = {i: s for s, ids in sets.items() for i in ids}
    kind = {s: e.nodes[ids[0]].kind for s, ids in sets.items()}
    paths = {i: e.path(i) for i in range(len(e.nodes))}

    def on_path(i):
        return {where[p]: lab for p, lab in paths[i]}

    parents: dict[str, list[str]] = {}
    for s, ids in sets.items():
        if kind[s] == "chance":
            parents[s] = sorted(on_path(ids[0]))
        elif kind[s] == "decision":
            # pruned branches can make a lone node "observe" extra variables;
            # keep what every information set of the variable observes
            keys = sorted({(e.nodes[i].player, e.nodes[i].iset) for i in ids})
            mus = []
            for key in keys:
                known = [on_path(i) for i in e.infosets()[key]]
                mus.append({k: v for k, v in known[0].items()
                            if all(kn.get(k) == v for kn in known)})
            common = set.intersection(*(set(mu) for mu in mus))
            ctxs = {tuple(sorted((k, mu[k]) for k in common)) for mu in mus}
            if len(ctxs) != len(keys):
                raise InvalidInterventionSets(f"information sets of {s} cannot be told apart by what they observe")
            parents[s] = sorted(common)
    dag = nx.DiGraph()
    dag.add_nodes_from(s for s in sets if kind[s] != "leaf")
    dag.add_edges_from((p, s) for s, ps in parents.items() for p in ps)
    if not nx.is_directed_acyclic_graph(dag):
        raise InvalidInterventionSets("intervention sets induce a cycle")
    topo = list(nx.lexicographical_topological_sort(dag))

    domains: dict[str, tuple] = {}
    cpds: dict[str, Cpd] = {}
    for s in topo:
        ids = sets[s]
        labels = []
        for i in ids:
            labels += [a for a in e.nodes[i].actions if a not in labels]
        if kind[s] == "decision":
            domains[s] = tuple(labels)
            continue
        pa = parents[s]
        table: dict = {}
        for i in ids:
            ctx = tuple(on_path(i)[p] for p in pa)
            n = e.nodes[i]
            table[ctx] = {a: q for a, q in zip(n.actions, n.probs)}
        ctxs = list(itertools.product(*(domains[p] for p in pa)))
        if len(table) < len(ctxs):
            labels.append(BOTTOM)
        domains[s] = tuple(labels)
        cpds[s] = Cpd(s, tuple(pa), {c: table.get(c, {BOTTOM: ONE}) for c in ctxs})

    # one utility per (leaf set, agent), then merge equal parent sets
    groups: dict[tuple, dict] = {}
    for s, ids in sets.items():
        if kind[s] != "leaf":
            continue
        pa = sorted({p for i in ids for p in on_path(i)}, key=topo.index)
        for k, pl in enumerate(e.players):
            tab = groups.setdefault((pl, tuple(pa)), {})
            for i in ids:
                known = on_path(i)
                ctx = tuple(known.get(p, BOTTOM) for p in pa)
                tab[ctx] = tab.get(ctx, ZERO) + e.nodes[i].payoff[k]
    variables = [Variable(s, kind[s], domains[s], e.nodes[sets[s][0]].player if kind[s] == "decision" else None)
                 for s in topo]
    edges = [(p, s) for s in topo for p in parents[s]]
    taken = set(topo)
    per_agent: dict = {}
    for (pl, pa), tab in groups.items():
        per_agent.setdefault(pl, []).append((pa, tab))
    for pl in e.players:
        for n, (pa, tab) in enumerate(per_agent.get(pl, [])):
            name = f"U{pl}" if len(per_agent[pl]) == 1 else f"U{pl}_{n + 1}"
            while name in taken:
                name += "'"
            taken.add(name)
            ctxs = list(itertools.product(*(domains[p] for p in pa)))
            rows = {c: tab.get(c, ZERO) for c in ctxs}
            variables.append(Variable(name, "utility", tuple(sorted(set(rows.values()))), pl))
            edges += [(p, name) for p in pa]
            cpds[name] = Cpd(name, pa, {c: {u: ONE} for c, u in rows.items()})
    m = GameModel(variables, edges, cpds, agents=e.players, extras={"description": e.title} if e.title else None)
    mapping = {}
    for key, members in e.infosets().items():
        d = where[members[0]]
        known = on_path(members[0])
        mapping[key] = (d, tuple(known[p] for p in m.parents(d)))
    return m, NaturalMapping(e, m, mapping)


# interventions --------------------------------------------------------------

def efg_intervene(e: Efg, J, dist, given: Sequence[int] = ()) -> Efg:
    """Pre-strategy intervention: the nodes of ``J`` follow ``dist`` instead.

    ``J`` is an intervention-set name or a list of node ids. ``dist`` is a
    fixed distribution over labels, a mapping from the labels of the ``given``
    nodes to such distributions, or a callable on that label tuple.
    """
    ids = list(e.intervention_sets[J]) if isinstance(J, str) else list(J)
    if not ids:
        raise EfgError("empty intervention set")
    if any(e.nodes[i].kind == "leaf" for i in ids):
        raise EfgError("leaves have no outgoing edges to intervene on")
    common = set(ancestors(e, ids[0]))
    for i in ids[1:]:
        common &= set(ancestors(e, i))
    bad = [g for g in given if g not in common]
    if bad:
        raise NonAncestralConditioning(f"nodes {bad} are not common ancestors of the intervened nodes")
    nodes = [EfgNode(n.kind, n.name, n.player, n.iset, n.actions, n.probs, list(n.children), n.payoff, n.parent)
             for n in e.nodes]
    for i in ids:
        labels = dict(e.path(i))
        key = tuple(labels[g] for g in given)
        if callable(dist):
            d = dist(key)
        elif given:
            d = dist[key]
        else:
            d = dist
        n = nodes[i]
        probs = tuple(Fraction(d.get(a, 0)) for a in n.actions)
        if sum(probs) != 1 or any(q < 0 for q in probs):
            raise EfgError(f"intervention at node {i} is not a distribution over {n.actions}")
        nodes[i] = EfgNode("chance", n.name, 0, 0, n.actions, probs, n.children, (), n.parent)
    out = Efg(e.players, nodes, e.title, {k: list(v) for k, v in e.intervention_sets.items()})
    out.check()
    return out


# equivalence ----------------------------------------------------------------

@dataclass
class EquivalenceReport:
    profiles: int = 0
    ne_checks: int = 0


def _random_behaviour(e: Efg, rng: random.Random) -> dict:
    out = {}
    for key, members in e.infosets().items():
        acts = e.nodes[members[0]].actions
        w = [rng.randint(0, 4) for _ in acts]
        if not any(w):
            w[rng.randrange(len(w))] = 1
        out[key] = {a: Fraction(x, sum(w)) for a, x in zip(acts, w)}
    return out


def _pure_profiles(e: Efg, cap: int):
    n = 1
    for (_, _), ids in e.infosets().items():
        n *= len(e.nodes[ids[0]].actions)
    if n > cap:
        return []
    per = [pure_strategies(e, p) for p in e.players]
    out = []
    for combo in itertools.product(*per):
        beh = {}
        for s in combo:
            beh.update(s)
        out.append(beh)
    return out


def verify_equivalence(e: Efg, m: GameModel, mapping: NaturalMapping, trials: int = 20,
                       seed: int = 0, max_pure: int = 512) -> EquivalenceReport:
    """Exact expected utilities must agree across ``mapping``; pure NE status too."""
    rng = random.Random(seed)
    rep = EquivalenceReport()
    agents = list(e.players)

    def compare(beh, check_ne):
        prof = mapping.to_maid(beh)
        eu_m = expected_utilities(m, prof)
        eu_e = expected_payoffs(e, beh)
        for k, a in enumerate(agents):
            if eu_m.get(a, ZERO) != eu_e[k]:
                raise MappingMismatch(f"agent {a}: model {eu_m.get(a, ZERO)} vs tree {eu_e[k]} at {beh}")
        rep.profiles += 1
        if check_ne:
            if verify_ne(m, prof)[0] != is_ne(e, beh):
                raise MappingMismatch(f"Nash status differs at {beh}")
            rep.ne_checks += 1

    pure = _pure_profiles(e, max_pure)
    for beh in pure:
        compare(beh, True)
    if not pure:
        # too many to enumerate: sample pure profiles, utilities only
        isets = e.infosets()
        for _ in range(trials):
            compare({k: {rng.choice(e.nodes[ids[0]].actions): ONE} for k, ids in isets.items()}, False)
    for _ in range(trials):
        compare(_random_behaviour(e, rng), False)
    return rep


__all__ = [
    "BOTTOM", "NaturalMapping", "EquivalenceReport", "maid2efg", "efg2maid", "efg_intervene",
    "verify_equivalence", "expected_payoffs", "is_ne", "subgame_roots", "validate_sets", "default_sets",
    "pure_strategies",
]
