"""Blame, intent and single-decision incentive criteria."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ExplosionGuard, ModelError, MultiDecisionUnsupported, SensitivityTooLow
from .graph import d_separated
from .inference import ObjectIntervention, joint
from .io import _value
from .model import ZERO, GameModel, to_structural
from .policy import DecisionRule, PolicyProfile, pure_rules

MAX_INTENT_VARS = 12


# events ---------------------------------------------------------------------

class Event:
    """Boolean combination of ``V=v`` literals with ``&``, ``|``, ``!`` and parentheses."""

    def __init__(self, fn: Callable[[Mapping], bool], text: str = "", variables: Iterable[str] = ()):
        self.fn = fn
        self.text = text
        self.variables = tuple(variables)

    def __call__(self, row: Mapping) -> bool:
        return self.fn(row)

    def __repr__(self):
        return f"Event({self.text})"

    @classmethod
    def of(cls, m: GameModel, spec) -> "Event":
        if isinstance(spec, Event):
            return spec
        if isinstance(spec, str):
            return cls.parse(m, spec)
        if isinstance(spec, Mapping):
            items = {v: _value(m.domain(v), x, m[v].kind) for v, x in spec.items()}
            return cls(lambda row: all(row[v] == x for v, x in items.items()),
                       " & ".join(f"{v}={x}" for v, x in items.items()), items)
        raise ModelError(f"cannot read an event from {spec!r}")

    @classmethod
    def parse(cls, m: GameModel, text: str) -> "Event":
        toks = re.findall(r"[()&|!]|[^\s()&|!=]+\s*=\s*[^\s()&|!]+", text)
        if "".join(toks).replace(" ", "") != text.replace(" ", ""):
            raise ModelError(f"cannot parse event {text!r}")
        pos = 0
        names: list[str] = []

        def atom():
            nonlocal pos
            tok = toks[pos]
            pos += 1
            if tok == "!":
                inner = atom()
                return lambda r: not inner(r)
            if tok == "(":
                inner = disj()
                if pos >= len(toks) or toks[pos] != ")":
                    raise ModelError(f"unbalanced parentheses in {text!r}")
                pos += 1
                return inner
            if "=" not in tok:
                raise ModelError(f"expected V=v, found {tok!r} in event {text!r}")
            var, raw = (s.strip() for s in tok.split("=", 1))
            m[var]
            val = _value(m.domain(var), raw, m[var].kind)
            names.append(var)
            return lambda r: r[var] == val

        def conj():
            nonlocal pos
            parts = [atom()]
            while pos < len(toks) and toks[pos] == "&":
                pos += 1
                parts.append(atom())
            return lambda r: all(p(r) for p in parts)

        def disj():
            nonlocal pos
            parts = [conj()]
            while pos < len(toks) and toks[pos] == "|":
                pos += 1
                parts.append(conj())
            return lambda r: any(p(r) for p in parts)

        if not toks:
            raise ModelError("empty event")
        try:
            fn = disj()
        except IndexError:
            raise ModelError(f"incomplete event {text!r}") from None
        if pos != len(toks):
            raise ModelError(f"unexpected {toks[pos]!r} in event {text!r}")
        return cls(fn, text, names)


# shared helpers ---------------------------------------------------------------

def _do_decision(m: GameModel, prof: PolicyProfile, d: str, a) -> PolicyProfile:
    return prof.with_rules({d: DecisionRule.constant(m, d, a)})


def _eu(m, prof, agent, overrides=()) -> Fraction:
    jt = joint(m, prof, overrides)
    return jt.expect(list(m.utilities_of(agent)))


def _prob(m, prof, event: Event, overrides=()) -> Fraction:
    jt = joint(m, prof, overrides)
    rows = jt.rows
    return sum((p for row, p in rows if event(dict(zip(jt.order, row)))), ZERO)


# blame ----------------------------------------------------------------------

def cost(m: GameModel, prof: PolicyProfile, d: str, a) -> Fraction:
    """c^i(a): expected utility lost by agent i when ``d`` is forced to ``a``."""
    agent = m[d].agent
    return _eu(m, prof, agent) - _eu(m, _do_decision(m, prof, d, a), agent)


def blame(m: GameModel, prof: PolicyProfile, d: str, action, event, S, alternative=None) -> Fraction:
    """Degree of blameworthiness of ``action`` for ``event`` relative to ``alternative``.

    Without ``alternative`` the overall degree (maximum over the domain) is returned.
    """
    if m[d].kind != "decision":
        raise ModelError(f"{d} is not a decision")
    ev = Event.of(m, event)
    dom = m.domain(d)
    action = _value(dom, action, "decision")
    S = Fraction(S)
    costs = {a: cost(m, prof, d, a) for a in dom}
    if S <= max(costs.values()):
        raise SensitivityTooLow(f"S = {S} must exceed the largest cost {max(costs.values())}")
    alts = dom if alternative is None else (_value(dom, alternative, "decision"),)
    p_act = _prob(m, _do_decision(m, prof, d, action), ev)
    best = ZERO
    for alt in alts:
        delta = max(ZERO, p_act - _prob(m, _do_decision(m, prof, d, alt), ev))
        val = delta * (S - max(costs[alt] - costs[action], ZERO)) / S
        best = max(best, val)
    return best


# intent ---------------------------------------------------------------------

@dataclass
class IntentResult:
    """Verdicts per setting of the exogenous variables.

    A setting matters only through the values ``z_d`` it induces under the
    decision, so settings are grouped by the support points of that
    interventional distribution.
    """

    exists: bool
    forall: bool
    possible: bool
    optimal: bool
    settings: list = field(default_factory=list)  # (weight, values, minimal sets, verdict)
    witness: frozenset | None = None

    def __bool__(self):
        return self.exists


def _minimal_sets(check, cands: Sequence[str]) -> list[frozenset]:
    found: list[frozenset] = []
    for k in range(len(cands) + 1):
        for combo in itertools.combinations(cands, k):
            z = frozenset(combo)
            if any(f <= z for f in found):
                continue
            if check(z):
                found.append(z)
    return found


def intent(m: GameModel, prof: PolicyProfile, d: str, action, target: Mapping,
           alternatives: Iterable | None = None) -> IntentResult:
    """Does the owner of ``d`` intend ``target`` by choosing ``action``?"""
    if m[d].kind != "decision":
        raise ModelError(f"{d} is not a decision")
    agent = m[d].agent
    dom = m.domain(d)
    action = _value(dom, action, "decision")
    alts = [a for a in dom if a != action] if alternatives is None else \
        [_value(dom, a, "decision") for a in alternatives]
    target = {v: _value(m.domain(v), x, m[v].kind) for v, x in target.items()}
    cands = [v for v in m.topo if v != d and m[v].kind != "exogenous"]
    if len(cands) > MAX_INTENT_VARS:
        raise ExplosionGuard(f"minimal-set search over {len(cands)} variables")
    for v in target:
        if v not in cands:
            raise ModelError(f"{v} cannot be an intended target")
    under_d = _do_decision(m, prof, d, action)
    jt = joint(m, under_d)
    eu_d = jt.expect(list(m.utilities_of(agent)))
    cache: dict = {}

    def eu_alt(a, zvals):
        key = (a, tuple(sorted(zvals.items())))
        if key not in cache:
            over = ObjectIntervention.hard(m, zvals).targets
            cache[key] = _eu(m, _do_decision(m, prof, d, a), agent, over)
        return cache[key]

    # second and third conditions do not depend on the setting
    ys = list(target)
    support = jt.marginal(ys)
    possible = support.get(tuple(target[v] for v in ys), ZERO) > 0
    eu_y = _eu(m, prof, agent, ObjectIntervention.hard(m, target).targets)
    optimal = all(_eu(m, prof, agent, ObjectIntervention.hard(m, dict(zip(ys, y))).targets) <= eu_y
                  for y, q in support.items() if q)

    settings = []
    seen: dict = {}
    for row, p in jt.rows:
        vals = dict(zip(jt.order, row))
        key = tuple(vals[v] for v in cands)
        if key in seen:
            settings[seen[key]][0] += p
            continue

        def check(z, vals=vals):
            return bool(alts) and eu_d <= max(eu_alt(a, {v: vals[v] for v in z}) for a in alts)

        mins = _minimal_sets(check, cands)
        ok = any(set(target) <= z for z in mins) and possible and optimal
        seen[key] = len(settings)
        settings.append([p, {v: vals[v] for v in cands}, mins, ok])
    settings = [tuple(s) for s in settings]
    common = None
    for _, _, mins, _ in settings:
        common = set(mins) if common is None else common & set(mins)
    pool = sorted(common or (settings[0][2] if settings else []), key=lambda z: (len(z), sorted(z)))
    return IntentResult(
        exists=any(s[3] for s in settings), forall=bool(settings) and all(s[3] for s in settings),
        possible=possible, optimal=optimal, settings=settings, witness=pool[0] if pool else None)


# incentives -----------------------------------------------------------------

def _single_decision(m: GameModel) -> str:
    if len(m.decisions) != 1:
        raise MultiDecisionUnsupported(f"expected one decision, found {len(m.decisions)}")
    return m.decisions[0]


def requisite_observations(m: GameModel) -> tuple[str, ...]:
    d = _single_decision(m)
    us = set(m.graph.descendants(d)) & set(m.utilities)
    pa = set(m.parents(d))
    return tuple(y for y in m.parents(d)
                 if us and not d_separated(m.graph, {y}, us, (pa - {y}) | {d}))


def response_incentive(m: GameModel, x: str) -> bool:
    """Graphical criterion: a directed path x ~> D once non-requisite information links are cut."""
    d = _single_decision(m)
    m[x]
    if x == d:
        return False
    keep = set(requisite_observations(m))
    g = m.graph.with_edges(remove=[(p, d) for p in m.parents(d) if p not in keep])
    return d in g.descendants(x)


def instrumental_control_incentive(m: GameModel, x: str) -> bool:
    """Graphical criterion: a directed path D ~> x ~> U for a utility U."""
    d = _single_decision(m)
    m[x]
    if x == d or x not in m.graph.descendants(d):
        return False
    if m[x].kind == "utility":
        return True
    return bool(set(m.graph.descendants(x)) & set(m.utilities))


# semantic oracles for small models ------------------------------------------------

def optimal_rules(m: GameModel) -> list[DecisionRule]:
    d = _single_decision(m)
    agent = m[d].agent
    vals = [(r, _eu(m, PolicyProfile({d: r}), agent)) for r in pure_rules(m, d)]
    best = max(v for _, v in vals)
    return [r for r, v in vals if v == best]


def responds(m: GameModel, rule: DecisionRule, x: str) -> bool:
    """Some exogenous setting makes D change when x is set by intervention."""
    ms = to_structural(m)
    d = rule.decision
    exo = [v for v in ms.topo if ms[v].kind == "exogenous"]
    for combo in itertools.product(*(ms.domain(e) for e in exo)):
        world = dict(zip(exo, combo))

        def run(do):
            vals = dict(world)
            for v in ms.topo:
                if ms[v].kind == "exogenous":
                    continue
                if v in do:
                    vals[v] = do[v]
                elif v == d:
                    vals[v] = rule.action(tuple(vals[p] for p in rule.parents))
                else:
                    cpd = ms.cpds[v]
                    vals[v] = next(iter(cpd.dist(tuple(vals[p] for p in cpd.parents))))
            return vals[d]

        base = run({})
        if any(run({x: xv}) != base for xv in ms.domain(x)):
            return True
    return False


def response_incentive_semantic(m: GameModel, x: str) -> bool:
    """All pure optimal rules respond to x in this parameterisation."""
    return all(responds(m, r, x) for r in optimal_rules(m))


__all__ = [
    "Event", "cost", "blame", "IntentResult", "intent", "requisite_observations",
    "response_incentive", "instrumental_control_incentive", "optimal_rules", "responds",
    "response_incentive_semantic",
]
