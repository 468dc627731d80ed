"""Equilibrium solvers: NE verification, pure and behavioural NE, SPE, THPE,
and the leader/follower relation solver."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import ExplosionGuard, NoSpeFound, UnsupportedShape
from .graph import condense
from .inference import expected_utilities, joint
from .mechanism import object_of, own_downstream_utilities, relevance_graph
from .model import ONE, ZERO, GameModel
from .nash import extreme_equilibria, support_equilibria, support_work, weakly_dominated
from .policy import (
    DecisionRule, MixedPolicy, NoEquivalent, PolicyProfile, behavioural_from_mixed,
    best_responses, context_values, enumerate_pure_policies, profile_cap, uniform_profile,
)
from .subgame import restrict_profile, subgames

log = logging.getLogger(__name__)

DEFAULT_EPS = (Fraction(1, 100), Fraction(1, 1000), Fraction(1, 10000))


@dataclass
class Deviation:
    agent: int
    rules: dict
    gain: Fraction


@dataclass
class EquilibriumSet:
    kind: str
    profiles: list
    notes: list = field(default_factory=list)
    stage_profiles: int = 0
    annotations: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.profiles)

    def __len__(self):
        return len(self.profiles)

    def utilities(self, m: GameModel) -> list[dict]:
        return [expected_utilities(m, p) for p in self.profiles]


# helpers ------------------------------------------------------------------

def _policies(m: GameModel, agent, decisions=None, constant_in: Mapping | None = None):
    pols = enumerate_pure_policies(m, agent)
    if decisions is not None:
        seen, out = set(), []
        for p in pols:
            sub = tuple((d, p[d]) for d in decisions)
            if sub not in seen:
                seen.add(sub)
                out.append(dict(sub))
        pols = out
    if constant_in:
        pols = [p for p in pols if all(r.is_constant_in(constant_in.get(d, ())) for d, r in p.items())]
    return pols


def _merge(*parts: Mapping) -> dict:
    out = {}
    for p in parts:
        out.update(p)
    return out


def indifferent_agents(m: GameModel) -> list:
    return [a for a in m.strategic_agents()
            if all(not own_downstream_utilities(m, d) for d in m.decisions_of(a))]


def best_rule(m: GameModel, prof: PolicyProfile, d: str, constant_in: Iterable[str] = ()) -> DecisionRule:
    """A pure optimal rule for ``d``; pooled over contexts sharing the kept parents."""
    q, pctx = context_values(m, prof, d)
    pa = m.parents(d)
    ignore = set(constant_in)
    groups: dict = {}
    for ctx in m.contexts(d):
        key = tuple(v for p, v in zip(pa, ctx) if p not in ignore)
        groups.setdefault(key, []).append(ctx)
    choice = {}
    for ctxs in groups.values():
        scores = {a: sum((q[c][a] for c in ctxs), ZERO) for a in m.domain(d)}
        best = max(scores.values())
        a = next(a for a in m.domain(d) if scores[a] == best)
        for c in ctxs:
            choice[c] = a
    return DecisionRule.pure(m, d, choice)


def best_deviation(m: GameModel, prof: PolicyProfile, agent, constant_in: Mapping | None = None):
    """Best value ``agent`` can reach by changing only its own policy."""
    ds = m.decisions_of(agent)
    constant_in = constant_in or {}
    if len(ds) == 1:
        d = ds[0]
        rule = best_rule(m, prof, d, constant_in.get(d, ()))
        dev = {d: rule}
        return expected_utilities(m, prof.with_rules(dev))[agent], dev
    best = None
    for pol in _policies(m, agent, constant_in=constant_in):
        v = expected_utilities(m, prof.with_rules(pol))[agent]
        if best is None or v > best[0]:
            best = (v, pol)
    return best


def verify_ne(m: GameModel, prof: PolicyProfile, constant_in: Mapping | None = None, agents=None):
    """``(True, None)`` for a Nash equilibrium, else ``(False, Deviation)``."""
    prof.check(m)
    eus = expected_utilities(m, prof)
    for a in agents if agents is not None else m.strategic_agents():
        val, dev = best_deviation(m, prof, a, constant_in)
        if val > eus[a]:
            return False, Deviation(a, dev, val - eus[a])
    return True, None


def _off_path(m: GameModel, prof: PolicyProfile) -> list[tuple[str, tuple]]:
    jt = joint(m, prof)
    out = []
    for d in m.decisions:
        seen = set(jt.marginal(m.parents(d)))
        out += [(d, c) for c in m.contexts(d) if c not in seen]
    return out


# pure NE ------------------------------------------------------------------

def pure_ne(m: GameModel, constant_in: Mapping | None = None) -> EquilibriumSet:
    agents = m.strategic_agents()
    per = [_policies(m, a, constant_in=constant_in) for a in agents]
    total = 1
    for p in per:
        total *= len(p)
    if total > profile_cap():
        raise ExplosionGuard(f"{total} pure profiles (cap {profile_cap()})")
    out = []
    for combo in itertools.product(*per):
        prof = PolicyProfile(_merge(*combo))
        if verify_ne(m, prof, constant_in)[0]:
            out.append(prof)
    return EquilibriumSet("pure", out, stage_profiles=total)


# behavioural NE -------------------------------------------------------------

def _mixed_part(m, agent, pols, weights):
    support = [(p, w) for p, w in zip(pols, weights) if w]
    if len(support) == 1:
        return support[0][0], None
    mu = MixedPolicy.of(agent, support)
    rules = behavioural_from_mixed(m, mu)
    if isinstance(rules, NoEquivalent):
        return None, mu
    return rules, None


def _two_agent_stage(m, agents, pols, base: PolicyProfile, notes: list):
    """Extreme equilibria of a two-agent stage game; returns (profiles, families, cells)."""
    p1, p2 = pols
    A, B = [], []
    for r1 in p1:
        ra, rb = [], []
        for r2 in p2:
            eu = expected_utilities(m, base.with_rules(_merge(r1, r2)))
            ra.append(eu[agents[0]])
            rb.append(eu[agents[1]])
        A.append(ra)
        B.append(rb)
    eqs = extreme_equilibria(A, B)
    # group extreme equilibria into connected families via shared strategies
    parent = list(range(len(eqs)))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i
    for i, j in itertools.combinations(range(len(eqs)), 2):
        if eqs[i][0] == eqs[j][0] or eqs[i][1] == eqs[j][1]:
            parent[find(i)] = find(j)
    roots = sorted({find(i) for i in range(len(eqs))})
    out, fams = [], []
    for i, (x, y) in enumerate(eqs):
        prof = base
        for agent, ps, w in ((agents[0], p1, x), (agents[1], p2, y)):
            rules, mu = _mixed_part(m, agent, ps, w)
            if mu is not None:
                notes.append(f"agent {agent} keeps a mixed policy (no behavioural equivalent)")
                prof = prof.with_mixture(mu)
            else:
                prof = prof.with_rules(rules)
        out.append(prof)
        fams.append(roots.index(find(i)))
    return out, fams, len(p1) * len(p2)


def behavioural_ne(m: GameModel, constant_in: Mapping | None = None) -> EquilibriumSet:
    """Representative NE: every extreme point of the mixed NE set, mapped to
    behavioural policies where outcome-equivalent ones exist."""
    notes = []
    idle = indifferent_agents(m)
    base = uniform_profile(m, [d for a in idle for d in m.decisions_of(a)])
    if idle:
        notes.append(f"indifferent agents {idle} fixed to uniform rules")
    agents = [a for a in m.strategic_agents() if a not in idle]
    if len(agents) == 0:
        return EquilibriumSet("ne", [base], notes)
    if len(agents) == 1:
        a = agents[0]
        pols = _policies(m, a, constant_in=constant_in)
        vals = [expected_utilities(m, base.with_rules(p))[a] for p in pols]
        best = max(vals)
        profs = [base.with_rules(p) for p, v in zip(pols, vals) if v == best]
        return EquilibriumSet("ne", profs, notes, len(pols), [{"family": 0} for _ in profs])
    if len(agents) == 2:
        pols = [_policies(m, a, constant_in=constant_in) for a in agents]
        if len(pols[0]) * len(pols[1]) > profile_cap():
            raise ExplosionGuard("normal form exceeds the profile cap")
        profs, fams, cells = _two_agent_stage(m, agents, pols, base, notes)
        uniq, ann = [], []
        for p, f in zip(profs, fams):
            if p not in uniq:
                uniq.append(p)
                ann.append({"family": f, "off_path": _off_path(m, p)})
        return EquilibriumSet("ne", uniq, sorted(set(notes)), cells, ann)
    log.warning("more than two strategic agents: falling back to pure NE")
    res = pure_ne(m, constant_in)
    res.kind = "ne"
    res.notes = notes + ["more than two strategic agents; pure NE only"]
    return res


def flat_ne(m: GameModel, constant_in: Mapping | None = None) -> EquilibriumSet:
    """Isolated mixed NE of the whole normal form, with no decomposition."""
    agents = list(m.strategic_agents())
    pols = [_policies(m, a, constant_in=constant_in) for a in agents]
    sizes = [len(p) for p in pols]
    work = support_work(sizes)
    if work > profile_cap():
        raise ExplosionGuard(f"flat support enumeration needs {work} steps (cap {profile_cap()})")
    payoffs = {}
    for combo in itertools.product(*(range(s) for s in sizes)):
        eu = expected_utilities(m, PolicyProfile(_merge(*(ps[c] for ps, c in zip(pols, combo)))))
        payoffs[combo] = tuple(eu[a] for a in agents)
    eqs, unresolved = support_equilibria(payoffs, sizes)
    out = []
    for sigma in eqs:
        prof = PolicyProfile({})
        for a, ps, w in zip(agents, pols, sigma):
            support = [(p, q) for p, q in zip(ps, w) if q]
            if len(support) == 1:
                prof = prof.with_rules(support[0][0])
            else:
                prof = prof.with_mixture(MixedPolicy.of(a, support))
        out.append(prof)
    notes = [f"{unresolved} support profiles unresolved (coupled or non-isolated)"] if unresolved else []
    return EquilibriumSet("flat", out, notes, stage_profiles=len(payoffs))


# subgame perfection ---------------------------------------------------------

def rule_is_subgame_perfect(m: GameModel, prof: PolicyProfile, d: str) -> bool:
    """Whether the rule for ``d`` is optimal in every feasible subgame containing it."""
    agent = m.agent_of(d)
    for sg in subgames(m, "s", full=False):
        if d not in sg.diagram.nodes:
            continue
        sub = restrict_profile(prof, sg.diagram.nodes, sg.context)
        if d in sub.rules:
            if not best_responses(sg.model, sub, d).contains(sub.rules[d]):
                return False
        elif not verify_ne(sg.model, sub, agents=[agent])[0]:
            return False
    return True


def is_spe(m: GameModel, prof: PolicyProfile, constant_in: Mapping | None = None):
    """``(True, None)`` or ``(False, (context, Deviation))`` for the first failing subgame."""
    for sg in subgames(m, "s", full=False):
        sub = restrict_profile(prof, sg.diagram.nodes, sg.context)
        ok, dev = verify_ne(sg.model, sub, constant_in, agents=sg.diagram.agents)
        if not ok:
            return False, (sg.diagram.nodes, sg.context, dev)
    return True, None


def spe(m: GameModel, constant_in: Mapping | None = None) -> EquilibriumSet:
    """Subgame perfect equilibria by stages over the strategic relevance graph.

    Components of the relevance graph are solved sources first, with rules of
    relevant (ancestor) components fixed and everything else uniform. Every
    candidate is then checked in every feasible subgame.
    """
    rel = relevance_graph(m, "s", decisions_only=True)
    cond = condense(rel)
    dag = cond.as_dag()
    notes: list[str] = []
    branches = [PolicyProfile({})]
    stage = 0
    for ci in cond.topo_order:
        comp = [object_of(n) for n in cond.components[ci]]
        anc = dag.ancestors(str(ci))
        fixed = {object_of(n) for a in anc for n in cond.components[int(a)]}
        agents = sorted({m.agent_of(d) for d in comp})
        new_branches = []
        for br in branches:
            keep = br.without([d for d in br.decisions if d not in fixed])
            others = [d for d in m.decisions if d not in fixed]
            base = uniform_profile(m, others).with_rules(keep.rules)
            for mp in keep.mixtures:
                base = base.with_mixture(mp)
            if len(comp) == 1 and len(agents) == 1:
                brs = best_responses(m, base, comp[0])
                stage += len(m.domain(comp[0]))
                if brs.count() > profile_cap():
                    raise ExplosionGuard(f"too many optimal rules for {comp[0]}")
                opts = [{comp[0]: r} for r in brs.rules(m)]
                stage_profiles = [base.with_rules(o) for o in opts]
            elif len(agents) == 1:
                pols = _policies(m, agents[0], comp)
                vals = [expected_utilities(m, base.with_rules(p))[agents[0]] for p in pols]
                stage += len(pols)
                top = max(vals)
                stage_profiles = [base.with_rules(p) for p, v in zip(pols, vals) if v == top]
            elif len(agents) == 2:
                pols = [_policies(m, a, [d for d in comp if m.agent_of(d) == a], constant_in)
                        for a in agents]
                stage_profiles, _, cells = _two_agent_stage(m, agents, pols, base, notes)
                stage += cells
            else:
                log.warning("stage with %d agents: pure equilibria only", len(agents))
                notes.append(f"stage {comp} solved in pure policies")
                pols = [_policies(m, a, [d for d in comp if m.agent_of(d) == a], constant_in)
                        for a in agents]
                stage_profiles = []
                for combo in itertools.product(*pols):
                    stage += 1
                    cand = base.with_rules(_merge(*combo))
                    if verify_ne(m, cand, constant_in, agents=agents)[0]:
                        stage_profiles.append(cand)
            for sp in stage_profiles:
                nb = br
                for mp in sp.mixtures:
                    if set(mp.decisions) <= set(comp):
                        nb = nb.with_mixture(mp)
                nb = nb.with_rules({d: r for d, r in sp.rules.items() if d in comp})
                if nb not in new_branches:
                    new_branches.append(nb)
        branches = new_branches
    survivors = []
    for prof in branches:
        ok, _ = is_spe(m, prof, constant_in)
        if ok:
            survivors.append(prof)
    if not survivors:
        raise NoSpeFound(f"none of {len(branches)} stage-wise candidates is subgame perfect")
    ann = [{"off_path": _off_path(m, p)} for p in survivors]
    return EquilibriumSet("spe", survivors, sorted(set(notes)), stage, ann)


# trembling hand -------------------------------------------------------------

def perturb(m: GameModel, prof: PolicyProfile, eps: Fraction) -> PolicyProfile:
    """Every action keeps at least ``eps`` probability in every context."""
    rules = {}
    if prof.mixtures:
        raise UnsupportedShape("perturbation of mixed policies is not supported")
    for d, r in prof.rules.items():
        k = len(r.actions)
        rows = tuple(tuple((1 - k * eps) * q + eps for q in row) for row in r.rows)
        rules[d] = DecisionRule(d, r.parents, r.contexts, r.actions, rows)
    return PolicyProfile(rules)


def _agent_payoff_vector(m, prof, agent, opp_pols):
    mine = prof.without([d for d in prof.decisions if m.agent_of(d) != agent])
    out = []
    for opp in opp_pols:
        p = PolicyProfile(opp)
        p = p.with_rules(mine.rules)
        for mp in mine.mixtures:
            p = p.with_mixture(mp)
        out.append(expected_utilities(m, p)[agent])
    return out


def undominated(m: GameModel, prof: PolicyProfile, constant_in: Mapping | None = None) -> bool:
    """No agent's policy in ``prof`` is weakly dominated (mixed dominators allowed)."""
    agents = [a for a in m.strategic_agents() if a not in indifferent_agents(m)]
    pols = {a: _policies(m, a, constant_in=constant_in) for a in agents}
    for a in agents:
        others = [b for b in m.strategic_agents() if b != a]
        opp = [_merge(*c) for c in itertools.product(*(
            pols.get(b) or _policies(m, b, constant_in=constant_in) for b in others))]
        target = _agent_payoff_vector(m, prof, a, opp)
        rows = [_agent_payoff_vector(m, PolicyProfile(p), a, opp) for p in pols[a]]
        if weakly_dominated(rows, target) is not None:
            return False
    return True


def trembles_converge(m: GameModel, prof: PolicyProfile, eps=DEFAULT_EPS) -> bool:
    """Each rule stays a best response when all rules tremble by each ``eps``."""
    for e in eps:
        pert = perturb(m, prof, Fraction(e))
        for d, r in prof.rules.items():
            if not own_downstream_utilities(m, d):
                continue
            if not best_responses(m, pert, d).contains(r):
                return False
    return True


def thpe(m: GameModel, method: str = "auto", eps=DEFAULT_EPS, candidates=None) -> EquilibriumSet:
    """Trembling-hand perfect equilibria among the representative NE.

    ``exact`` (two agents) keeps NE whose policies are not weakly dominated;
    ``numeric`` keeps profiles that remain best responses under trembles.
    """
    agents = [a for a in m.strategic_agents() if a not in indifferent_agents(m)]
    if method == "auto":
        method = "exact" if len(agents) <= 2 else "numeric"
    if candidates is None:
        cands = list(behavioural_ne(m).profiles)
        if method == "numeric" or len(agents) <= 2:
            try:
                for p in pure_ne(m).profiles:
                    if p not in cands:
                        cands.append(p)
            except ExplosionGuard:
                pass
    else:
        cands = list(candidates)
    if method == "exact":
        kept = [p for p in cands if undominated(m, p)]
        note = "undominated Nash equilibria"
    else:
        kept = [p for p in cands if not p.mixtures and trembles_converge(m, p, eps)]
        note = f"tremble check at eps={[str(Fraction(e)) for e in eps]}"
    return EquilibriumSet("thpe", kept, [note])


# leader / follower relations -------------------------------------------------

def _declared(m: GameModel) -> dict:
    return m.extras.get("relations") or {}


def has_custom_relations(m: GameModel) -> bool:
    return any(spec.get("kind") == "optimistic" for spec in _declared(m).values())


def relation_outcomes(m: GameModel, constant_in: Mapping | None = None) -> EquilibriumSet:
    """Rational outcomes under optimistic leaders and best-responding followers.

    Leaders evaluate each leader profile assuming followers break ties in the
    leader's favour. Leader profiles in pure equilibrium are filtered by the
    declared selection; followers then branch over every tie that occurs with
    positive probability.
    """
    rels = _declared(m)
    leaders = [d for d in m.decisions if rels.get(d, {}).get("kind") == "optimistic"]
    followers = sorted({f for d in leaders for f in rels[d].get("followers", ())}, key=m.graph.order)
    stray = [d for d in m.decisions if d not in leaders and d not in followers]
    if stray or not leaders:
        raise UnsupportedShape(f"relation solver needs every decision to be a leader or follower: {stray}")
    if len(followers) != 1:
        raise UnsupportedShape("relation solver supports exactly one follower")
    f = followers[0]
    opt = best_responses(m, uniform_profile(m), f)
    canon = DecisionRule.pure(m, f, {c: opt.allowed(c)[0] for c in m.contexts(f)})
    leader_agents = sorted({m.agent_of(d) for d in leaders})
    pols = [_policies(m, a, constant_in=constant_in) for a in leader_agents]
    fidx = m.parents(f)
    table = {}
    stage = 0
    for combo in itertools.product(*(range(len(p)) for p in pols)):
        rules = _merge(*(pols[i][k] for i, k in enumerate(combo)))
        prof = PolicyProfile(rules).with_rules({f: canon})
        q = {a: {} for a in leader_agents}
        for act in m.domain(f):
            jt = joint(m, prof.with_rules({f: DecisionRule.constant(m, f, act)}))
            stage += 1
            pidx = [jt.index[p] for p in fidx]
            for a in leader_agents:
                uidx = [jt.index[u] for u in m.utilities_of(a)]
                acc = q[a]
                for row, pr in jt.rows:
                    key = (tuple(row[i] for i in pidx), act)
                    acc[key] = acc.get(key, ZERO) + pr * sum((row[i] for i in uidx), ZERO)
        pay = []
        for a in leader_agents:
            ctxs = {c for c, _ in q[a]}
            pay.append(sum((max(q[a].get((c, act), ZERO) for act in opt.allowed(c)) for c in ctxs), ZERO))
        table[combo] = tuple(pay)
    eqs = []
    for combo, pay in table.items():
        stable = True
        for i in range(len(leader_agents)):
            for k in range(len(pols[i])):
                alt = combo[:i] + (k,) + combo[i + 1:]
                if table[alt][i] > pay[i]:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            eqs.append(combo)
    notes = [f"{len(eqs)} leader equilibria"]
    sel = m.extras.get("selection") or {}
    chosen = eqs
    if "maximize_agent" in sel and eqs:
        k = sel["maximize_agent"]
        vals = {}
        for combo in eqs:
            rules = _merge(*(pols[i][j] for i, j in enumerate(combo)))
            vals[combo] = expected_utilities(m, PolicyProfile(rules).with_rules({f: canon}))[k]
        top = max(vals.values())
        chosen = [c for c in eqs if vals[c] == top]
        notes.append(f"selected {len(chosen)} maximising agent {k}")
    out = []
    for combo in chosen:
        rules = _merge(*(pols[i][j] for i, j in enumerate(combo)))
        seen = set(joint(m, PolicyProfile(rules).with_rules({f: canon})).marginal(fidx))
        ctxs = m.contexts(f)
        choices = [opt.allowed(c) if c in seen else (opt.allowed(c)[0],) for c in ctxs]
        for pick in itertools.product(*choices):
            fr = DecisionRule.pure(m, f, dict(zip(ctxs, pick)))
            out.append(PolicyProfile(rules).with_rules({f: fr}))
    return EquilibriumSet("relations", out, notes, stage)


def solve(m: GameModel, under: str = "ne", constant_in: Mapping | None = None) -> EquilibriumSet:
    """Dispatch on the solution concept; declared custom relations take precedence."""
    if has_custom_relations(m):
        return relation_outcomes(m, constant_in)
    if under == "ne":
        return behavioural_ne(m, constant_in)
    if under == "pure":
        return pure_ne(m, constant_in)
    if under == "spe":
        return spe(m, constant_in)
    if under == "thpe":
        return thpe(m)
    if under == "flat":
        return flat_ne(m, constant_in)
    raise ValueError(f"unknown solution concept {under!r}")
