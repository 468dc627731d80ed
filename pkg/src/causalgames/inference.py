"""Exact inference over a game completed with a policy profile."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import networkx as nx

from .errors import CycleIntroduced, ModelError, ZeroProbabilityEvidence
from .model import ONE, ZERO, Cpd, GameModel


# interventions ------------------------------------------------------------

@dataclass(frozen=True)
class ObjectIntervention:
    """CPD replacements for object-level variables (hard or soft)."""

    targets: tuple[Cpd, ...] = ()

    @classmethod
    def do(cls, m: GameModel, **values) -> "ObjectIntervention":
        return cls.hard(m, values)

    @classmethod
    def hard(cls, m: GameModel, values: Mapping) -> "ObjectIntervention":
        cpds = []
        for v, x in values.items():
            if x not in m.domain(v):
                raise ModelError(f"{x!r} not in domain of {v}")
            cpds.append(Cpd(v, (), {(): {x: ONE}}))
        return cls(tuple(cpds))

    @classmethod
    def soft(cls, cpds: Iterable[Cpd]) -> "ObjectIntervention":
        return cls(tuple(cpds))

    def __bool__(self):
        return bool(self.targets)

    def __add__(self, other: "ObjectIntervention") -> "ObjectIntervention":
        mine = {c.child: c for c in self.targets}
        mine.update({c.child: c for c in other.targets})
        return ObjectIntervention(tuple(mine.values()))


def _factors(m: GameModel, rules: Mapping, overrides: tuple[Cpd, ...]) -> dict[str, object]:
    """Variable -> CPD-like object (Cpd or DecisionRule) after overrides."""
    out: dict[str, object] = {}
    replaced = {c.child for c in overrides}
    for name in m.names:
        if name in replaced:
            continue
        if m.variables[name].kind == "decision":
            if name not in rules:
                raise ModelError(f"no decision rule for {name}")
            out[name] = rules[name]
        else:
            out[name] = m.cpds[name]
    for cpd in overrides:
        m.graph.check(cpd.child)
        if m.variables[cpd.child].kind == "exogenous":
            raise ModelError(f"cannot intervene on exogenous {cpd.child}")
        out[cpd.child] = cpd
    return out


def _order(m: GameModel, factors: Mapping) -> tuple[str, ...]:
    changed = any(tuple(f.parents) != m.parents(n) for n, f in factors.items())
    if not changed:
        return m.topo
    g = nx.DiGraph()
    g.add_nodes_from(m.names)
    g.add_edges_from((p, n) for n, f in factors.items() for p in f.parents)
    try:
        return tuple(nx.lexicographical_topological_sort(g, key=m.graph.order))
    except nx.NetworkXUnfeasible:
        raise CycleIntroduced("intervention parents introduce a cycle") from None


class Joint:
    """Positive-support joint distribution as a list of (values, probability)."""

    def __init__(self, order: tuple[str, ...], rows: list[tuple[tuple, Fraction]]):
        self.order = order
        self.index = {v: i for i, v in enumerate(order)}
        self.rows = rows

    def __len__(self):
        return len(self.rows)

    def distribution(self) -> dict[tuple, Fraction]:
        out: dict[tuple, Fraction] = {}
        for row, p in self.rows:
            out[row] = out.get(row, ZERO) + p
        return out

    def _match(self, event: Mapping) -> Callable[[tuple], bool]:
        idx = [(self.index[k], v) for k, v in event.items()]
        return lambda row: all(row[i] == v for i, v in idx)

    def prob(self, event: Mapping = None, given: Mapping = None) -> Fraction:
        event, given = dict(event or {}), dict(given or {})
        for k in list(event) + list(given):
            if k not in self.index:
                raise ModelError(f"unknown variable {k}")
        for k in set(event) & set(given):
            if event[k] != given[k]:
                return ZERO
        hit_g = self._match(given)
        hit_e = self._match(event)
        pg = pe = ZERO
        for row, p in self.rows:
            if hit_g(row):
                pg += p
                if hit_e(row):
                    pe += p
        if pg == 0:
            raise ZeroProbabilityEvidence(f"Pr({given}) = 0")
        return pe / pg

    def expect(self, f, given: Mapping = None) -> Fraction:
        """E[f | given]; ``f`` is a variable name, list of names (summed) or callable on dict."""
        given = dict(given or {})
        if isinstance(f, str):
            i = self.index[f]
            fn = lambda row: row[i]
        elif callable(f):
            fn = lambda row: f(dict(zip(self.order, row)))
        else:
            ids = [self.index[x] for x in f]
            fn = lambda row: sum((row[i] for i in ids), ZERO)
        hit = self._match(given)
        pg = tot = ZERO
        for row, p in self.rows:
            if hit(row):
                pg += p
                tot += p * fn(row)
        if pg == 0:
            raise ZeroProbabilityEvidence(f"Pr({given}) = 0")
        return tot / pg

    def marginal(self, names: Iterable[str]) -> dict[tuple, Fraction]:
        ids = [self.index[n] for n in names]
        out: dict[tuple, Fraction] = {}
        for row, p in self.rows:
            key = tuple(row[i] for i in ids)
            out[key] = out.get(key, ZERO) + p
        return out


def _behavioural_joint(m, rules, overrides) -> Joint:
    factors = _factors(m, rules, overrides)
    order = _order(m, factors)
    pos = {v: i for i, v in enumerate(order)}
    rows: list[tuple[tuple, Fraction]] = [((), ONE)]
    for name in order:
        f = factors[name]
        pidx = [pos[p] for p in f.parents]
        cache: dict = {}
        nxt = []
        for vals, p in rows:
            ctx = tuple(vals[i] for i in pidx)
            sup = cache.get(ctx)
            if sup is None:
                sup = [(v, q) for v, q in f.dist(ctx).items() if q]
                cache[ctx] = sup
            for v, q in sup:
                nxt.append((vals + (v,), p * q))
        rows = nxt
    return Joint(order, rows)


@lru_cache(maxsize=4096)
def _joint_cached(m, profile, overrides) -> Joint:
    parts = profile.components()
    if len(parts) == 1:
        return _behavioural_joint(m, parts[0][1], overrides)
    acc: dict[tuple, Fraction] = {}
    order = None
    for w, rules in parts:
        jt = _behavioural_joint(m, rules, overrides)
        order = jt.order
        for row, p in jt.rows:
            acc[row] = acc.get(row, ZERO) + w * p
    return Joint(order, [(r, p) for r, p in acc.items() if p])


def joint(m: GameModel, profile, overrides=()) -> Joint:
    """Pr^pi over all variables by forward enumeration of the positive support."""
    if isinstance(overrides, ObjectIntervention):
        overrides = overrides.targets
    return _joint_cached(m, profile, tuple(overrides))


# variable elimination -----------------------------------------------------

class Factor:
    __slots__ = ("vars", "table")

    def __init__(self, vars_: tuple[str, ...], table: dict[tuple, Fraction]):
        self.vars = vars_
        self.table = table

    def multiply(self, other: "Factor", domains) -> "Factor":
        vs = self.vars + tuple(v for v in other.vars if v not in self.vars)
        ia = [vs.index(v) for v in self.vars]
        ib = [vs.index(v) for v in other.vars]
        table = {}
        for a, pa in self.table.items():
            partial = dict(zip(self.vars, a))
            rest = [v for v in other.vars if v not in partial]
            for ext in itertools.product(*(domains[v] for v in rest)):
                full = dict(partial)
                full.update(zip(rest, ext))
                pb = other.table.get(tuple(full[v] for v in other.vars), ZERO)
                if pb:
                    table[tuple(full[v] for v in vs)] = pa * pb
        return Factor(vs, table)

    def sum_out(self, var: str) -> "Factor":
        i = self.vars.index(var)
        vs = self.vars[:i] + self.vars[i + 1:]
        table: dict[tuple, Fraction] = {}
        for k, p in self.table.items():
            key = k[:i] + k[i + 1:]
            table[key] = table.get(key, ZERO) + p
        return Factor(vs, table)


def _min_fill_order(factors: list[Factor], eliminate: set[str]) -> list[str]:
    nbrs: dict[str, set[str]] = {v: set() for v in eliminate}
    for f in factors:
        for v in f.vars:
            nbrs.setdefault(v, set()).update(set(f.vars) - {v})
    order = []
    remaining = set(eliminate)
    while remaining:
        def fill(v):
            ns = list(nbrs[v])
            return sum(1 for a, b in itertools.combinations(ns, 2) if b not in nbrs[a])
        v = min(sorted(remaining), key=fill)
        ns = nbrs.pop(v)
        for a in ns:
            nbrs[a].discard(v)
            nbrs[a].update(ns - {a})
        order.append(v)
        remaining.discard(v)
    return order


def _ve_mass(m: GameModel, rules, overrides, evidence: Mapping) -> Fraction:
    factors_src = _factors(m, rules, overrides)
    _order(m, factors_src)  # cycle check
    domains = {n: m.domain(n) for n in m.names}
    factors = []
    for name, f in factors_src.items():
        vs = tuple(f.parents) + (name,)
        table = {}
        ctxs = itertools.product(*(domains[p] for p in f.parents))
        for ctx in ctxs:
            full = dict(zip(f.parents, ctx))
            if any(full[k] != v for k, v in evidence.items() if k in full):
                continue
            for v, q in f.dist(ctx).items():
                if q and (name not in evidence or evidence[name] == v):
                    table[ctx + (v,)] = q
        factors.append(Factor(vs, table))
    hidden = set(m.names)
    for v in _min_fill_order(factors, hidden):
        touching = [f for f in factors if v in f.vars]
        if not touching:
            continue
        rest = [f for f in factors if v not in f.vars]
        prod = touching[0]
        for f in touching[1:]:
            prod = prod.multiply(f, domains)
        rest.append(prod.sum_out(v))
        factors = rest
    total = ONE
    for f in factors:
        total *= f.table.get((), ZERO)
    return total


def prob_ve(m: GameModel, profile, event: Mapping, given: Mapping = None, overrides=()) -> Fraction:
    given = dict(given or {})
    if isinstance(overrides, ObjectIntervention):
        overrides = overrides.targets
    for k, v in list(event.items()) + list(given.items()):
        if v not in m.domain(k):
            raise ModelError(f"{v!r} not in domain of {k}")
    both = dict(given)
    for k, v in event.items():
        if k in both and both[k] != v:
            return ZERO
        both[k] = v
    num = den = ZERO
    for w, rules in profile.components():
        num += w * _ve_mass(m, rules, tuple(overrides), both)
        den += w * _ve_mass(m, rules, tuple(overrides), given)
    if den == 0:
        raise ZeroProbabilityEvidence(f"Pr({given}) = 0")
    return num / den


# public API -----------------------------------------------------------------

@dataclass(frozen=True)
class JointContext:
    model: GameModel
    profile: object
    intervention: ObjectIntervention = ObjectIntervention()

    def joint(self) -> Joint:
        return joint(self.model, self.profile, self.intervention.targets)


def prob(ctx: JointContext, event: Mapping, given: Mapping = None, method: str = "ve") -> Fraction:
    """Pr^pi(event | given)."""
    if method == "enum":
        return ctx.joint().prob(event, given)
    return prob_ve(ctx.model, ctx.profile, event, given, ctx.intervention.targets)


def expected_utility(ctx: JointContext, agent, given: Mapping = None) -> Fraction:
    m = ctx.model
    if agent not in m.agents:
        raise ModelError(f"unknown agent {agent}")
    return ctx.joint().expect(list(m.utilities_of(agent)), given)


def expected_utilities(m: GameModel, profile, overrides=()) -> dict:
    jt = joint(m, profile, overrides)
    return {a: jt.expect(list(m.utilities_of(a))) for a in m.agents}


def intervene(ctx: JointContext, I: ObjectIntervention) -> JointContext:
    """Post-policy object-level intervention; the policy stays unchanged."""
    new = ctx.intervention + I
    _order(ctx.model, _factors(ctx.model, _first_rules(ctx.profile), new.targets))
    return JointContext(ctx.model, ctx.profile, new)


def _first_rules(profile):
    return profile.components()[0][1]
