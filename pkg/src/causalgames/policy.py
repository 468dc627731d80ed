"""Decision rules, policy profiles, mixed policies and best responses."""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

from .errors import ExplosionGuard, ModelError
from .model import ONE, ZERO, Cpd, GameModel

DEFAULT_CAP = 10**6


def profile_cap() -> int:
    try:
        return int(os.environ.get("CG_MAX_PROFILES", DEFAULT_CAP))
    except ValueError:
        return DEFAULT_CAP


@dataclass(frozen=True)
class DecisionRule:
    """Tabular CPD for one decision; rows align with ``contexts`` and ``actions``."""

    decision: str
    parents: tuple[str, ...]
    contexts: tuple[tuple, ...]
    actions: tuple
    rows: tuple[tuple[Fraction, ...], ...]
    _lookup: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_lookup", {c: i for i, c in enumerate(self.contexts)})
        for ctx, row in zip(self.contexts, self.rows):
            if sum(row, ZERO) != 1 or any(q < 0 for q in row):
                raise ModelError(f"rule for {self.decision}: row {ctx} is not a distribution")

    def __repr__(self):
        if self.is_pure:
            body = ", ".join(f"{_ctx_str(self.parents, c)}->{self.action(c)}" for c in self.contexts)
        else:
            body = "stochastic"
        return f"Rule({self.decision}: {body})"

    # construction ---------------------------------------------------
    @classmethod
    def from_table(cls, m: GameModel, decision: str, table: Mapping[tuple, Mapping]):
        ctxs = tuple(m.contexts(decision))
        actions = m.domain(decision)
        rows = []
        for ctx in ctxs:
            if ctx not in table:
                raise ModelError(f"rule for {decision} misses context {ctx}")
            dist = table[ctx]
            rows.append(tuple(Fraction(dist.get(a, 0)) for a in actions))
        return cls(decision, m.parents(decision), ctxs, actions, tuple(rows))

    @classmethod
    def pure(cls, m: GameModel, decision: str, choice):
        """``choice`` is a mapping ctx -> action, or a callable on parent values."""
        ctxs = m.contexts(decision)
        pa = m.parents(decision)
        if callable(choice):
            table = {c: {choice(**dict(zip(pa, c))): ONE} for c in ctxs}
        else:
            table = {c: {choice[c]: ONE} for c in ctxs}
        return cls.from_table(m, decision, table)

    @classmethod
    def constant(cls, m: GameModel, decision: str, action):
        return cls.pure(m, decision, {c: action for c in m.contexts(decision)})

    @classmethod
    def uniform(cls, m: GameModel, decision: str):
        dom = m.domain(decision)
        q = Fraction(1, len(dom))
        return cls.from_table(m, decision, {c: {a: q for a in dom} for c in m.contexts(decision)})

    # queries --------------------------------------------------------
    def row(self, ctx) -> tuple[Fraction, ...]:
        return self.rows[self._lookup[ctx]]

    def dist(self, ctx) -> dict:
        return {a: q for a, q in zip(self.actions, self.row(ctx)) if q}

    def p(self, action, ctx) -> Fraction:
        return self.row(ctx)[self.actions.index(action)]

    def action(self, ctx):
        """The chosen action of a pure rule."""
        row = self.row(ctx)
        for a, q in zip(self.actions, row):
            if q == 1:
                return a
        raise ModelError(f"rule for {self.decision} is not pure at {ctx}")

    @property
    def is_pure(self) -> bool:
        return all(max(r) == 1 for r in self.rows)

    @property
    def fully_stochastic(self) -> bool:
        return all(min(r) > 0 for r in self.rows)

    def to_cpd(self) -> Cpd:
        return Cpd(self.decision, self.parents, {c: self.dist(c) for c in self.contexts})

    def restricted(self, context: Mapping) -> "DecisionRule":
        """Plug ``context`` values into dropped parents."""
        kept = tuple(p for p in self.parents if p not in context)
        ctxs, rows = [], []
        for ctx, row in zip(self.contexts, self.rows):
            full = dict(zip(self.parents, ctx))
            if all(full[p] == context[p] for p in self.parents if p in context):
                ctxs.append(tuple(full[p] for p in kept))
                rows.append(row)
        return DecisionRule(self.decision, kept, tuple(ctxs), self.actions, tuple(rows))

    def is_constant_in(self, parents: Iterable[str]) -> bool:
        """True if the rule ignores every parent in ``parents``."""
        parents = set(parents)
        seen = {}
        for ctx, row in zip(self.contexts, self.rows):
            key = tuple(v for p, v in zip(self.parents, ctx) if p not in parents)
            if seen.setdefault(key, row) != row:
                return False
        return True


def _ctx_str(parents, ctx) -> str:
    return ",".join(f"{p}={v}" for p, v in zip(parents, ctx)) or "()"


@dataclass(frozen=True)
class MixedPolicy:
    """Distribution over an agent's pure policies; each policy is a tuple of (D, rule)."""

    agent: int
    support: tuple[tuple[tuple[tuple[str, DecisionRule], ...], Fraction], ...]

    def __post_init__(self):
        if sum((w for _, w in self.support), ZERO) != 1:
            raise ModelError("mixed policy weights must sum to 1")

    @classmethod
    def of(cls, agent, pairs: Iterable[tuple[Mapping[str, DecisionRule], Fraction]]):
        support = tuple((tuple(sorted(p.items())), Fraction(w)) for p, w in pairs if w)
        return cls(agent, support)

    @property
    def decisions(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.support[0][0])


class PolicyProfile:
    """One rule per decision, optionally with some agents playing mixed policies."""

    __slots__ = ("rules", "mixtures", "_key")

    def __init__(self, rules: Mapping[str, DecisionRule], mixtures: Iterable[MixedPolicy] = ()):
        self.rules = dict(rules)
        self.mixtures = tuple(mixtures)
        self._key = (tuple(sorted(self.rules.items())), self.mixtures)

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        return isinstance(other, PolicyProfile) and self._key == other._key

    def __repr__(self):
        parts = [repr(r) for r in self.rules.values()]
        parts += [f"Mixed(agent {mp.agent}, {len(mp.support)} policies)" for mp in self.mixtures]
        return "Profile(" + "; ".join(parts) + ")"

    def __getitem__(self, d) -> DecisionRule:
        return self.rules[d]

    def __contains__(self, d):
        return d in self.rules or any(d in mp.decisions for mp in self.mixtures)

    @property
    def decisions(self) -> tuple[str, ...]:
        out = list(self.rules)
        for mp in self.mixtures:
            out.extend(mp.decisions)
        return tuple(out)

    @property
    def is_pure(self) -> bool:
        return not self.mixtures and all(r.is_pure for r in self.rules.values())

    def with_rules(self, rules: Mapping[str, DecisionRule]) -> "PolicyProfile":
        new = dict(self.rules)
        new.update(rules)
        mixes = tuple(mp for mp in self.mixtures if not set(mp.decisions) & set(rules))
        return PolicyProfile(new, mixes)

    def with_mixture(self, mp: MixedPolicy) -> "PolicyProfile":
        rules = {d: r for d, r in self.rules.items() if d not in mp.decisions}
        mixes = tuple(x for x in self.mixtures if x.agent != mp.agent) + (mp,)
        return PolicyProfile(rules, mixes)

    def without(self, decisions: Iterable[str]) -> "PolicyProfile":
        decisions = set(decisions)
        return PolicyProfile({d: r for d, r in self.rules.items() if d not in decisions},
                             tuple(mp for mp in self.mixtures if not set(mp.decisions) & decisions))

    def components(self) -> list[tuple[Fraction, dict[str, DecisionRule]]]:
        """Expand mixtures into weighted behavioural profiles."""
        out = [(ONE, dict(self.rules))]
        for mp in self.mixtures:
            nxt = []
            for w, rules in out:
                for part, q in mp.support:
                    r = dict(rules)
                    r.update(dict(part))
                    nxt.append((w * q, r))
            out = nxt
        return out

    def check(self, m: GameModel) -> None:
        missing = set(m.decisions) - set(self.decisions)
        if missing:
            raise ModelError(f"profile misses rules for {sorted(missing)}")


def uniform_profile(m: GameModel, decisions=None) -> PolicyProfile:
    decisions = m.decisions if decisions is None else decisions
    return PolicyProfile({d: DecisionRule.uniform(m, d) for d in decisions})


def pure_rules(m: GameModel, decision: str) -> list[DecisionRule]:
    ctxs = m.contexts(decision)
    dom = m.domain(decision)
    count = len(dom) ** len(ctxs)
    if count > profile_cap():
        raise ExplosionGuard(f"{count} pure rules for {decision}")
    return [DecisionRule.pure(m, decision, dict(zip(ctxs, choice)))
            for choice in itertools.product(dom, repeat=len(ctxs))]


def count_pure_policies(m: GameModel, agent) -> int:
    n = 1
    for d in m.decisions_of(agent):
        n *= len(m.domain(d)) ** len(m.contexts(d))
    return n


def enumerate_pure_policies(m: GameModel, agent, cap: int | None = None) -> list[dict[str, DecisionRule]]:
    """All pure policies of ``agent`` as {decision: rule} dicts, deterministic order."""
    cap = profile_cap() if cap is None else cap
    n = count_pure_policies(m, agent)
    if n > cap:
        raise ExplosionGuard(f"agent {agent} has {n} pure policies (cap {cap})")
    ds = m.decisions_of(agent)
    per = [pure_rules(m, d) for d in ds]
    return [dict(zip(ds, combo)) for combo in itertools.product(*per)]


@dataclass
class BestResponse:
    """Per-context optimal action sets; ``None`` marks an infeasible context."""

    decision: str
    parents: tuple[str, ...]
    optimal: dict[tuple, frozenset | None]
    values: dict[tuple, dict]
    actions: tuple

    def allowed(self, ctx) -> tuple:
        opt = self.optimal[ctx]
        return self.actions if opt is None else tuple(a for a in self.actions if a in opt)

    def count(self) -> int:
        n = 1
        for ctx in self.optimal:
            n *= len(self.allowed(ctx))
        return n

    def rules(self, m: GameModel) -> Iterator[DecisionRule]:
        ctxs = list(self.optimal)
        for choice in itertools.product(*(self.allowed(c) for c in ctxs)):
            yield DecisionRule.pure(m, self.decision, dict(zip(ctxs, choice)))

    def contains(self, rule: DecisionRule) -> bool:
        """Whether ``rule`` (possibly stochastic) is optimal."""
        for ctx in self.optimal:
            support = set(rule.dist(ctx))
            if not support <= set(self.allowed(ctx)):
                return False
        return True

    def feasible_contexts(self) -> list[tuple]:
        return [c for c, o in self.optimal.items() if o is not None]


def context_values(m: GameModel, profile: PolicyProfile, decision: str, overrides=()) -> tuple[dict, dict]:
    """Q(pa, a) = E[sum of own downstream utility * 1{pa}] under do(D=a), and P(pa)."""
    from .inference import joint

    agent = m.agent_of(decision)
    desc = set(m.graph.descendants(decision))
    utils = [u for u in m.utilities_of(agent) if u in desc]
    pa = m.parents(decision)
    ctxs = m.contexts(decision)
    q = {c: {} for c in ctxs}
    pctx = {c: ZERO for c in ctxs}
    for k, a in enumerate(m.domain(decision)):
        prof = profile.with_rules({decision: DecisionRule.constant(m, decision, a)})
        jt = joint(m, prof, overrides)
        acc = {c: ZERO for c in ctxs}
        pidx = [jt.index[p] for p in pa]
        uidx = [jt.index[u] for u in utils]
        for row, pr in jt.rows:
            ctx = tuple(row[i] for i in pidx)
            acc[ctx] += pr * sum((row[i] for i in uidx), ZERO)
            if k == 0:
                pctx[ctx] += pr
        for c in ctxs:
            q[c][a] = acc[c]
    return q, pctx


def best_responses(m: GameModel, profile: PolicyProfile, decision: str, overrides=()) -> BestResponse:
    """Optimal rules for ``decision`` holding all other rules in ``profile`` fixed."""
    q, pctx = context_values(m, profile, decision, overrides)
    optimal = {}
    for ctx, vals in q.items():
        if pctx[ctx] == 0:
            optimal[ctx] = None
            continue
        best = max(vals.values())
        optimal[ctx] = frozenset(a for a, v in vals.items() if v == best)
    return BestResponse(decision, m.parents(decision), optimal, q, m.domain(decision))


@dataclass(frozen=True)
class NoEquivalent:
    """Verdict that no behavioural policy reproduces a mixed policy."""

    witness: dict
    mixed_prob: Fraction
    behavioural_prob: Fraction
    candidate: dict

    def __bool__(self):
        return False


def behavioural_from_mixed(m: GameModel, mu: MixedPolicy, opponents: Iterable[PolicyProfile] | None = None):
    """Behavioural rules inducing the same joint as ``mu``, or :class:`NoEquivalent`.

    Rules are the conditionals of each decision given its parents under the
    mixture (other agents uniform); off-path contexts take the mixture's
    average rule. The result is then checked against ``opponents``.
    """
    from .inference import joint

    others = [d for d in m.decisions if d not in mu.decisions]
    base = uniform_profile(m, others)
    jt = joint(m, base.with_mixture(mu))
    rules = {}
    for d in mu.decisions:
        pa = m.parents(d)
        num: dict = {}
        den: dict = {}
        pidx = [jt.index[p] for p in pa]
        di = jt.index[d]
        for row, pr in jt.rows:
            ctx = tuple(row[i] for i in pidx)
            den[ctx] = den.get(ctx, ZERO) + pr
            num[(ctx, row[di])] = num.get((ctx, row[di]), ZERO) + pr
        table = {}
        for ctx in m.contexts(d):
            if den.get(ctx):
                table[ctx] = {a: num.get((ctx, a), ZERO) / den[ctx] for a in m.domain(d)}
            else:
                avg = {a: ZERO for a in m.domain(d)}
                for part, w in mu.support:
                    r = dict(part)[d]
                    for a, pa_ in r.dist(ctx).items():
                        avg[a] += w * pa_
                table[ctx] = avg
        rules[d] = DecisionRule.from_table(m, d, table)
    checks = [base] + list(opponents or [])
    for opp in checks:
        mixed = joint(m, opp.with_mixture(mu)).distribution()
        beh = joint(m, opp.with_rules(rules)).distribution()
        for key in sorted(set(mixed) | set(beh), key=repr):
            if mixed.get(key, ZERO) != beh.get(key, ZERO):
                witness = dict(zip(jt.order, key))
                return NoEquivalent(witness, mixed.get(key, ZERO), beh.get(key, ZERO), rules)
    return rules
