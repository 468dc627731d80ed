"""Conditional and interventional queries over rational outcomes."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .equilibrium import EquilibriumSet, solve
from .errors import EmptyAnswerSet, ModelError, ZeroProbabilityEvidence
from .inference import ObjectIntervention, joint
from .io import _value, parse_game, rule_from_json
from .model import ONE, ZERO, Cpd, GameModel, Variable
from .policy import DecisionRule, PolicyProfile

log = logging.getLogger(__name__)


# targets --------------------------------------------------------------------

@dataclass(frozen=True)
class Target:
    """One additive term: ``P(event)``, ``E[var]`` or ``E[U^agent]``."""

    kind: str  # "prob" | "expect" | "utility"
    event: tuple = ()
    var: str | None = None
    agent: int | None = None
    coef: Fraction = ONE

    def evaluate(self, m: GameModel, jt, given: Mapping) -> Fraction:
        if self.kind == "prob":
            v = jt.prob(dict(self.event), given)
        elif self.kind == "expect":
            v = jt.expect(self.var, given)
        else:
            if self.agent not in m.agents:
                raise ModelError(f"unknown agent {self.agent}")
            v = jt.expect(list(m.utilities_of(self.agent)), given)
        return self.coef * v


def prob_target(**event) -> Target:
    return Target("prob", tuple(event.items()))


def expect_target(var: str) -> Target:
    return Target("expect", var=var)


def utility_target(agent) -> Target:
    return Target("utility", agent=agent)


# interventions ----------------------------------------------------------------

@dataclass
class Intervention:
    """Object part (hard values) plus mechanism part (rules, parameters,
    codomain restrictions). ``timing`` says whether agents see it before
    choosing their rules."""

    timing: str = "post"
    do: dict = field(default_factory=dict)
    rules: dict = field(default_factory=dict)
    cpds: tuple = ()
    constant_in: dict = field(default_factory=dict)
    remove_edges: tuple = ()

    def __bool__(self):
        return bool(self.do or self.rules or self.cpds or self.constant_in or self.remove_edges)

    @property
    def targets(self) -> set[str]:
        out = set(self.do) | set(self.rules) | {c.child for c in self.cpds}
        out |= set(self.constant_in) | {b for _, b in self.remove_edges}
        return out

    @classmethod
    def named(cls, m: GameModel, name: str) -> "Intervention":
        specs = m.extras.get("interventions") or {}
        if name not in specs:
            raise ModelError(f"no intervention named {name!r}")
        return cls.from_spec(m, specs[name])

    @classmethod
    def from_spec(cls, m: GameModel, spec: Mapping) -> "Intervention":
        do = {v: _value(m.domain(v), x, m[v].kind) for v, x in (spec.get("do") or {}).items()}
        rules = {d: resolve_rule(m, d, ref) for d, ref in (spec.get("rules") or {}).items()}
        cpds = []
        for c in spec.get("cpds") or ():
            cpds.append(_cpd_from_rows(m, c["child"], c["rows"]))
        return cls(spec.get("timing", "pre"), do, rules, tuple(cpds),
                   {d: tuple(ps) for d, ps in (spec.get("restrict_constant_in") or {}).items()},
                   tuple(tuple(e) for e in spec.get("remove_edges") or ()))

    def object_part(self, m: GameModel) -> ObjectIntervention:
        return ObjectIntervention.hard(m, self.do) + ObjectIntervention.soft(self.cpds)


def _cpd_from_rows(m: GameModel, child: str, rows) -> Cpd:
    var = m.variables[child]
    pa = m.parents(child)
    table = {}
    for row in rows:
        ctx = tuple(_value(m.domain(p), row["given"][p], m[p].kind) for p in pa)
        if row.get("value") is not None:
            table[ctx] = {_value(var.domain, row["value"], var.kind): ONE}
        else:
            table[ctx] = {_value(var.domain, k, var.kind): Fraction(q) for k, q in row["dist"].items()}
    return Cpd(child, pa, table)


def resolve_rule(m: GameModel, decision: str, ref) -> DecisionRule:
    """Decision rule from a reference: named policy, ``const:a``, ``uniform``,
    ``file:path`` or an inline table."""
    if isinstance(ref, DecisionRule):
        return ref
    if isinstance(ref, Mapping):
        return rule_from_json(m, decision, ref)
    if ref == "uniform":
        return DecisionRule.uniform(m, decision)
    if ref.startswith("const:"):
        return DecisionRule.constant(m, decision, _value(m.domain(decision), ref[6:]))
    if ref.startswith("file:"):
        import json
        with open(ref[5:], encoding="utf-8") as fh:
            data = json.load(fh)
        return rule_from_json(m, decision, data.get(decision, data))
    pols = m.extras.get("policies") or {}
    if ref not in pols:
        raise ModelError(f"unknown policy reference {ref!r}")
    if decision not in pols[ref]:
        raise ModelError(f"policy {ref!r} has no rule for {decision}")
    return rule_from_json(m, decision, pols[ref][decision])


def fix_decisions(m: GameModel, rules: Mapping[str, DecisionRule]) -> GameModel:
    """Turn decisions into chance variables governed by the given rules."""
    variables, cpds = [], dict(m.cpds)
    for name in m.names:
        v = m.variables[name]
        if name in rules:
            variables.append(Variable(name, "chance", v.domain))
            cpds[name] = rules[name].to_cpd()
        else:
            variables.append(v)
    return m.replace(variables=variables, cpds=cpds)


def apply_pre(m: GameModel, I: Intervention) -> tuple[GameModel, dict]:
    """The modified game agents solve, plus remaining codomain restrictions."""
    out = m
    if I.remove_edges:
        gone = set(map(tuple, I.remove_edges))
        for a, b in gone:
            if (a, b) not in set(m.graph.edges):
                raise ModelError(f"no edge {a}->{b} to remove")
        cpds = dict(out.cpds)
        for a, b in gone:
            if b in cpds:
                cpds[b] = _drop_parent(cpds[b], a)
        edges = [e for e in out.graph.edges if tuple(e) not in gone]
        out = out.replace(edges=edges, cpds=cpds)
    if I.cpds:
        cpds = dict(out.cpds)
        for c in I.cpds:
            if out.variables[c.child].kind == "decision":
                raise ModelError(f"{c.child} is a decision; intervene on its rule instead")
            cpds[c.child] = c
        out = out.replace(cpds=cpds)
    fixed = dict(I.rules)
    for v, x in I.do.items():
        if out.variables[v].kind == "decision":
            fixed[v] = DecisionRule.constant(out, v, x)
    if fixed:
        out = fix_decisions(out, fixed)
    chance_do = {v: x for v, x in I.do.items() if v not in fixed}
    if chance_do:
        cpds = dict(out.cpds)
        for c in ObjectIntervention.hard(out, chance_do).targets:
            cpds[c.child] = c
        edges = [e for e in out.graph.edges if e[1] not in chance_do]
        out = out.replace(edges=edges, cpds=cpds)
    return out, dict(I.constant_in)


def _drop_parent(cpd: Cpd, parent: str) -> Cpd:
    i = cpd.parents.index(parent)
    table = {}
    for ctx, row in cpd.table.items():
        key = ctx[:i] + ctx[i + 1:]
        if key in table and table[key] != row:
            raise ModelError(f"CPD of {cpd.child} depends on {parent}; cannot drop the edge")
        table[key] = row
    return Cpd(cpd.child, cpd.parents[:i] + cpd.parents[i + 1:], table)


# answers --------------------------------------------------------------------

@dataclass
class AnswerSet:
    """Distinct values plus the per-outcome trace they came from."""

    trace: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def values(self) -> list[Fraction]:
        return sorted(set(v for _, v in self.trace))

    def as_set(self) -> set:
        return set(self.values)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def quantify(ans: AnswerSet, mode: str, predicate: Callable | None = None,
             prior: Sequence[Fraction] | None = None):
    """``exists``/``forall`` need ``predicate``; ``mean`` weights outcomes uniformly
    unless ``prior`` (one weight per traced outcome) is given."""
    vals = [v for _, v in ans.trace]
    if mode == "exists":
        return any(predicate(v) for v in vals)
    if mode == "forall":
        return all(predicate(v) for v in vals)
    if not vals:
        raise EmptyAnswerSet(f"{mode} of an empty answer set")
    if mode == "min":
        return min(vals)
    if mode == "max":
        return max(vals)
    if mode == "mean":
        if prior is None:
            return sum(vals, ZERO) / len(vals)
        if len(prior) != len(vals) or sum(prior) != 1:
            raise ModelError("prior must give one weight per outcome and sum to 1")
        return sum((Fraction(w) * v for w, v in zip(prior, vals)), ZERO)
    raise ModelError(f"unknown quantifier {mode!r}")


def rational_outcomes(m: GameModel, under="ne", constant_in: Mapping | None = None) -> list[PolicyProfile]:
    """Outcome profiles for a solution concept, a policy file, or an explicit list."""
    if isinstance(under, EquilibriumSet):
        return list(under.profiles)
    if isinstance(under, (list, tuple)):
        return list(under)
    if isinstance(under, str) and under.startswith("file:"):
        from .io import load_policy
        return [load_policy(m, under[5:])]
    return list(solve(m, under, constant_in).profiles)


def _consistent(prof: PolicyProfile, policy_evidence: Mapping[str, DecisionRule]) -> bool:
    for d, rule in policy_evidence.items():
        if d in prof.rules:
            if prof.rules[d] != rule:
                return False
        else:
            return False  # mixed policies never equal a single behavioural rule
    return True


def _evaluate(m, outcomes, targets, evidence, overrides=(), rule_overrides=None) -> AnswerSet:
    ans = AnswerSet()
    for prof in outcomes:
        p = prof.with_rules(rule_overrides) if rule_overrides else prof
        jt = joint(m, p, overrides)
        try:
            val = sum((t.evaluate(m, jt, evidence) for t in targets), ZERO)
        except ZeroProbabilityEvidence:
            continue
        ans.trace.append((prof, val))
    return ans


def conditional(m: GameModel, targets: Iterable[Target], evidence: Mapping | None = None,
                policy_evidence: Mapping | None = None, under="ne",
                outcomes: Sequence[PolicyProfile] | None = None) -> AnswerSet:
    """Values over outcomes consistent with object and mechanism evidence."""
    targets = list(targets)
    evidence = dict(evidence or {})
    policy_evidence = {d: resolve_rule(m, d, r) for d, r in (policy_evidence or {}).items()}
    outs = rational_outcomes(m, under) if outcomes is None else list(outcomes)
    outs = [p for p in outs if _consistent(p, policy_evidence)]
    ans = _evaluate(m, outs, targets, evidence)
    if not ans.trace:
        ans.notes.append("no rational outcome is consistent with the evidence")
    return ans


def interventional(m: GameModel, targets: Iterable[Target], I: Intervention | None = None,
                   evidence: Mapping | None = None, under="ne",
                   outcomes: Sequence[PolicyProfile] | None = None) -> AnswerSet:
    """Post-policy parts act on each fixed outcome; pre-policy parts re-solve the game."""
    targets = list(targets)
    I = I or Intervention()
    evidence = dict(evidence or {})
    if not I:
        return conditional(m, targets, evidence, under=under, outcomes=outcomes)
    if I.timing == "post":
        if I.constant_in or I.remove_edges:
            raise ModelError("codomain restrictions only make sense before policies are chosen")
        outs = rational_outcomes(m, under) if outcomes is None else list(outcomes)
        ans = _evaluate(m, outs, targets, evidence, I.object_part(m).targets, I.rules)
        return ans
    mi, constant_in = apply_pre(m, I)
    outs = rational_outcomes(mi, under, constant_in) if outcomes is None else list(outcomes)
    ans = _evaluate(mi, outs, targets, evidence)
    ans.notes.append(f"{len(outs)} outcomes of the intervened game")
    return ans
