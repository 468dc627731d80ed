"""Counterfactuals in structural games via canonical decision noise.

Each decision D carries independent cells eps_D[rule, pa] distributed as
rule(.|pa); the structural rule reads the cell of its own rule and context.
Cells are created lazily, so only rules that actually occur are represented.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ExplosionGuard, ModelError, ZeroProbabilityEvidence
from .graph import condense
from .inference import Joint
from .mechanism import mech, object_of, relevance_graph
from .model import ONE, ZERO, GameModel, exogenous_name, to_structural
from .policy import DecisionRule, PolicyProfile, profile_cap
from .query import (
    AnswerSet, Intervention, Target, _consistent, apply_pre, rational_outcomes, resolve_rule,
)

PRINCIPLES = ("simplicity", "cpw")


@dataclass
class World:
    """One exogenous assignment: response functions plus decision cells."""

    exo: dict
    cells: dict
    p: Fraction


@dataclass
class Posterior:
    worlds: list
    fresh: list = field(default_factory=list)

    def total(self) -> Fraction:
        return sum((w.p for w in self.worlds), ZERO)


def verify_canonical(m: GameModel, rule: DecisionRule) -> bool:
    """Marginalising the deterministic rule over its cells gives back ``rule``."""
    ctxs = list(rule.contexts)
    supports = [[(a, q) for a, q in zip(rule.actions, rule.row(c)) if q] for c in ctxs]
    n = 1
    for s in supports:
        n *= len(s)
    if n > profile_cap():
        raise ExplosionGuard("too many cell assignments")
    acc = {c: {a: ZERO for a in rule.actions} for c in ctxs}
    for combo in itertools.product(*supports):
        w = ONE
        for _, q in combo:
            w *= q
        cells = {c: a for c, (a, _) in zip(ctxs, combo)}
        for c in ctxs:
            acc[c][cells[c]] += w
    return all(acc[c][a] == rule.p(a, c) for c in ctxs for a in rule.actions)


def _struct(m: GameModel) -> GameModel:
    return to_structural(m)


def _response(ms: GameModel, var: str, ctx: dict, eps_val):
    cpd = ms.cpds[var]
    key = tuple(ctx[p] for p in cpd.parents[:-1]) + (eps_val,)
    return next(iter(cpd.table[key]))


def abduce(m: GameModel, profile: PolicyProfile, evidence: Mapping | None = None) -> Posterior:
    """Exact posterior over exogenous assignments given object evidence."""
    ms = _struct(m)
    evidence = dict(evidence or {})
    worlds = []
    for w0, rules in profile.components():
        states = [({}, {}, {}, w0)]
        for var in ms.topo:
            kind = ms.variables[var].kind
            nxt = []
            for vals, exo, cells, p in states:
                if kind == "exogenous":
                    for e, q in ms.cpds[var].dist(()).items():
                        if q:
                            nxt.append((vals, {**exo, var: e}, cells, p * q))
                    continue
                if kind == "decision":
                    rule = rules[var]
                    ctx = tuple(vals[x] for x in rule.parents)
                    key = (var, rule, ctx)
                    if key in cells:
                        opts = [(cells[key], ONE, cells)]
                    else:
                        opts = [(a, q, {**cells, key: a}) for a, q in rule.dist(ctx).items()]
                    for a, q, c in opts:
                        if var in evidence and evidence[var] != a:
                            continue
                        nxt.append(({**vals, var: a}, exo, c, p * q))
                    continue
                v = _response(ms, var, vals, exo[exogenous_name(var)])
                if var in evidence and evidence[var] != v:
                    continue
                nxt.append(({**vals, var: v}, exo, cells, p))
            states = nxt
            if len(states) > profile_cap():
                raise ExplosionGuard("abduction state space exceeds the cap")
        worlds += [World(exo, cells, p) for _, exo, cells, p in states]
    total = sum((w.p for w in worlds), ZERO)
    if total == 0:
        raise ZeroProbabilityEvidence(f"Pr({evidence}) = 0")
    merged: dict = {}
    for w in worlds:
        key = (tuple(sorted(w.exo.items())), tuple(sorted(w.cells.items(), key=repr)))
        merged[key] = merged.get(key, ZERO) + w.p / total
    return Posterior([World(dict(e), dict(c), p) for (e, c), p in merged.items()])


def predict(m: GameModel, post: Posterior, profile: PolicyProfile, I: Intervention | None = None) -> Joint:
    """Counterfactual joint: replay the posterior worlds under ``profile`` and ``I``.

    Mechanisms changed by ``I`` get fresh exogenous noise named
    ``eps_star_<var>_<seq>`` drawn from the new mechanism.
    """
    I = I or Intervention()
    mi, _ = apply_pre(m, I) if I.timing == "pre" else (m, {})
    ms = _struct(m)
    changed = {c.child for c in I.cpds}
    rules_over = dict(I.rules)
    fixed_rules = {}
    for v in mi.names:
        if m.variables[v].kind == "decision" and mi.variables[v].kind != "decision":
            fixed_rules[v] = DecisionRule(v, mi.cpds[v].parents, tuple(mi.contexts(v)), mi.domain(v),
                                          tuple(tuple(mi.cpds[v].p(a, c) for a in mi.domain(v))
                                                for c in mi.contexts(v)))
    seq = itertools.count()
    post.fresh = [f"eps_star_{v}_{next(seq)}" for v in sorted(changed, key=m.graph.order)]
    order = mi.topo
    acc: dict = {}
    for world in post.worlds:
        for w0, rules in profile.components():
            rules = {**rules, **rules_over, **fixed_rules}
            states = [({}, world.cells, world.p * w0)]
            for var in order:
                kind = mi.variables[var].kind if var not in fixed_rules else "decision"
                nxt = []
                for vals, cells, p in states:
                    if var in I.do:
                        nxt.append(({**vals, var: I.do[var]}, cells, p))
                        continue
                    if kind == "decision":
                        rule = rules[var]
                        ctx = tuple(vals[x] for x in rule.parents)
                        key = (var, rule, ctx)
                        if key in cells:
                            nxt.append(({**vals, var: cells[key]}, cells, p))
                        else:
                            for a, q in rule.dist(ctx).items():
                                nxt.append(({**vals, var: a}, {**cells, key: a}, p * q))
                        continue
                    if var in changed or tuple(mi.parents(var)) != tuple(m.parents(var)):
                        ctx = tuple(vals[x] for x in mi.parents(var))
                        for v, q in mi.cpds[var].dist(ctx).items():
                            if q:
                                nxt.append(({**vals, var: v}, cells, p * q))
                        continue
                    nxt.append(({**vals, var: _response(ms, var, vals, world.exo[exogenous_name(var)])}, cells, p))
                states = nxt
            for vals, _, p in states:
                row = tuple(vals[v] for v in order)
                acc[row] = acc.get(row, ZERO) + p
    return Joint(order, [(r, p) for r, p in acc.items() if p])


def invariant_rules(m: GameModel, I: Intervention, principle: str = "simplicity", under="ne",
                    actual: Sequence[PolicyProfile] | None = None,
                    counter: Sequence[PolicyProfile] | None = None) -> set[str]:
    """Decisions whose rules carry over from the actual to the counterfactual world."""
    if principle not in PRINCIPLES:
        raise ModelError(f"unknown principle {principle!r}")
    if I.timing == "post":
        return set(m.decisions)
    if principle == "simplicity":
        return set()
    rel = relevance_graph(m, "s", decisions_only=False)
    hit = {mech(m, v) for v in I.targets}
    down = set(rel.descendants(hit)) | hit
    inv = {d for d in m.decisions if mech(m, d) not in down}
    actual = rational_outcomes(m, under) if actual is None else actual
    if counter is None:
        mi, constant_in = apply_pre(m, I)
        counter = rational_outcomes(mi, under, constant_in)
    cond = condense(rel)
    for comp in cond.components:
        ds = [object_of(n) for n in comp if n.startswith("PI[")]
        ds = [d for d in ds if d not in inv and d not in I.targets]
        if not ds:
            continue
        a = {tuple(p.rules.get(d) for d in ds) for p in actual}
        c = {tuple(p.rules.get(d) for d in ds) for p in counter}
        if a == c:
            inv.update(ds)
    return inv


def counterfactual(m: GameModel, targets: Iterable[Target], I: Intervention | None = None,
                   evidence: Mapping | None = None, policy_evidence: Mapping | None = None,
                   principle: str = "simplicity", under="ne",
                   actual: Sequence[PolicyProfile] | None = None) -> AnswerSet:
    """Abduction under each actual outcome, action, prediction under its partners."""
    if m.level not in ("causal", "structural"):
        raise ModelError("counterfactuals need a causal or structural game")
    targets = list(targets)
    I = I or Intervention()
    evidence = dict(evidence or {})
    policy_evidence = {d: resolve_rule(m, d, r) for d, r in (policy_evidence or {}).items()}
    rational = rational_outcomes(m, under) if actual is None else list(actual)
    outs = [p for p in rational if _consistent(p, policy_evidence)]
    if I.timing == "pre" and I:
        mi, constant_in = apply_pre(m, I)
        counter = rational_outcomes(mi, under, constant_in)
    else:
        counter = None
    # invariance compares whole outcome sets; evidence only selects the actual world
    inv = invariant_rules(m, I, principle, under, rational, counter)
    ans = AnswerSet()
    mi_for_eval = apply_pre(m, I)[0] if I.timing == "pre" and I else m
    for prof in outs:
        try:
            post = abduce(m, prof, evidence)
        except ZeroProbabilityEvidence:
            continue
        partners = [prof] if counter is None else [
            q for q in counter if all(q.rules.get(d) == prof.rules.get(d) for d in inv if d in mi_for_eval.decisions)]
        for q in partners:
            jt = predict(m, post, q, I)
            val = sum((t.evaluate(mi_for_eval, jt, {}) for t in targets), ZERO)
            ans.trace.append(((prof, q), val))
    if not ans.trace:
        ans.notes.append("no actual/counterfactual outcome pair survives the pairing")
    ans.notes.append(f"invariant rules: {sorted(inv, key=m.graph.order)}")
    return ans
