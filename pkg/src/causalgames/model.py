"""Game container: typed variables, tabular CPDs, validation, restriction."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import (
    ContextIncomplete,
    ExplosionGuard,
    MissingCpd,
    ModelError,
    RowNotNormalized,
    StructuralDiscipline,
    UnknownNode,
    UtilityHasChild,
)
from .graph import Dag

KINDS = ("chance", "decision", "utility", "exogenous")
LEVELS = ("associational", "causal", "structural")

ONE = Fraction(1)
ZERO = Fraction(0)


def frac(x) -> Fraction:
    """Exact rational from int, Fraction, "num/den" or decimal string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    domain: tuple
    agent: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"{self.name}: unknown kind {self.kind!r}")
        if not self.domain:
            raise ModelError(f"{self.name}: empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ModelError(f"{self.name}: repeated domain values")
        if self.kind in ("decision", "utility") and self.agent is None:
            raise ModelError(f"{self.name}: {self.kind} variable needs an agent")


@dataclass(frozen=True)
class Cpd:
    """Conditional table: parent-value tuple -> {value: probability}."""

    child: str
    parents: tuple[str, ...]
    table: Mapping[tuple, Mapping[object, Fraction]] = field(hash=False, compare=True)

    def dist(self, ctx: tuple) -> Mapping[object, Fraction]:
        return self.table[ctx]

    def p(self, value, ctx: tuple) -> Fraction:
        return self.table[ctx].get(value, ZERO)

    @property
    def deterministic(self) -> bool:
        return all(sum(1 for q in row.values() if q) == 1 for row in self.table.values())

    @classmethod
    def from_function(cls, child, parents, domains: Mapping[str, tuple], fn: Callable):
        """Deterministic CPD; ``fn`` maps parent values (keyword args) to a value."""
        parents = tuple(parents)
        table = {}
        for ctx in itertools.product(*(domains[p] for p in parents)):
            table[ctx] = {fn(**dict(zip(parents, ctx))): ONE}
        return cls(child, parents, table)

    @classmethod
    def stochastic(cls, child, parents, domains, fn: Callable):
        """``fn`` maps parent values (keyword args) to a {value: prob} dict."""
        parents = tuple(parents)
        table = {}
        for ctx in itertools.product(*(domains[p] for p in parents)):
            table[ctx] = {k: frac(v) for k, v in fn(**dict(zip(parents, ctx))).items()}
        return cls(child, parents, table)

    @classmethod
    def prior(cls, child, dist: Mapping):
        return cls(child, (), {(): {k: frac(v) for k, v in dist.items()}})


class GameModel:
    """Multi-agent influence diagram, optionally causal or structural.

    ``extras`` carries optional file-level annotations (named policies,
    interventions, relation declarations) that the solvers may consult.
    """

    def __init__(self, variables: Iterable[Variable], edges, cpds: Mapping[str, Cpd] | Iterable[Cpd],
                 agents=None, level: str = "causal", extras: Mapping | None = None):
        variables = list(variables)
        self.variables: dict[str, Variable] = {v.name: v for v in variables}
        self.graph = Dag([v.name for v in variables], edges)
        if not isinstance(cpds, Mapping):
            cpds = {c.child: c for c in cpds}
        self.cpds: dict[str, Cpd] = dict(cpds)
        declared = sorted({v.agent for v in variables if v.agent is not None})
        self.agents: tuple[int, ...] = tuple(agents) if agents is not None else tuple(declared)
        if level not in LEVELS:
            raise ModelError(f"unknown level {level!r}")
        self.level = level
        self.extras = dict(extras or {})
        self.topo = self.graph.topological_order()
        self._validate()

    # basic accessors -------------------------------------------------
    def __repr__(self):
        return f"GameModel({len(self.variables)} variables, agents={list(self.agents)})"

    def __getitem__(self, name) -> Variable:
        try:
            return self.variables[name]
        except KeyError:
            raise UnknownNode(name) from None

    @property
    def names(self) -> tuple[str, ...]:
        return self.graph.nodes

    def of_kind(self, kind) -> tuple[str, ...]:
        return tuple(n for n in self.names if self.variables[n].kind == kind)

    @property
    def decisions(self) -> tuple[str, ...]:
        return self.of_kind("decision")

    @property
    def utilities(self) -> tuple[str, ...]:
        return self.of_kind("utility")

    @property
    def chance(self) -> tuple[str, ...]:
        return self.of_kind("chance")

    def decisions_of(self, agent) -> tuple[str, ...]:
        return tuple(d for d in self.decisions if self.variables[d].agent == agent)

    def utilities_of(self, agent) -> tuple[str, ...]:
        return tuple(u for u in self.utilities if self.variables[u].agent == agent)

    def agent_of(self, name):
        return self.variables[name].agent

    def domain(self, name) -> tuple:
        return self[name].domain

    def parents(self, name) -> tuple[str, ...]:
        return self.graph.parents(name)

    def contexts(self, name) -> list[tuple]:
        """All parent assignments of ``name`` in parent order."""
        return list(itertools.product(*(self.domain(p) for p in self.parents(name))))

    def strategic_agents(self) -> tuple[int, ...]:
        return tuple(a for a in self.agents if self.decisions_of(a))

    # validation ------------------------------------------------------
    def _validate(self):
        for name, var in self.variables.items():
            if var.kind == "utility" and self.graph.children(name):
                raise UtilityHasChild(f"utility {name} has children {self.graph.children(name)}")
            if var.kind == "exogenous":
                bad = [p for p in self.graph.parents(name)]
                if bad:
                    raise StructuralDiscipline(f"exogenous {name} has parents {bad}")
            if var.kind == "decision":
                if name in self.cpds:
                    raise ModelError(f"decision {name} must not carry a CPD")
                continue
            if name not in self.cpds:
                raise MissingCpd(name)
            self._check_cpd(self.cpds[name])
        for name in self.cpds:
            if name not in self.variables:
                raise UnknownNode(name)
        if self.level == "structural":
            self._check_structural()

    def _check_cpd(self, cpd: Cpd):
        name = cpd.child
        if tuple(cpd.parents) != self.parents(name):
            if set(cpd.parents) != set(self.parents(name)):
                raise ModelError(f"CPD of {name} has parents {cpd.parents}, graph has {self.parents(name)}")
            # reorder to graph parent order
            idx = [cpd.parents.index(p) for p in self.parents(name)]
            table = {tuple(ctx[i] for i in idx): row for ctx, row in cpd.table.items()}
            cpd = Cpd(name, self.parents(name), table)
            self.cpds[name] = cpd
        expected = set(self.contexts(name))
        if set(cpd.table) != expected:
            missing = expected - set(cpd.table)
            raise MissingCpd(f"CPD of {name} does not cover contexts, e.g. {sorted(missing, key=str)[:1]}")
        dom = set(self.domain(name))
        for ctx, row in cpd.table.items():
            for val, q in row.items():
                if val not in dom:
                    raise ModelError(f"CPD of {name}: value {val!r} not in domain")
                if q < 0 or q > 1:
                    raise RowNotNormalized(name, ctx, sum(row.values()))
            total = sum(row.values(), ZERO)
            if total != 1:
                raise RowNotNormalized(name, ctx, total)

    def _check_structural(self):
        for name, var in self.variables.items():
            if var.kind in ("exogenous", "decision"):
                continue
            exo = [p for p in self.parents(name) if self.variables[p].kind == "exogenous"]
            if len(exo) != 1:
                raise StructuralDiscipline(f"{name} needs exactly one exogenous parent, has {exo}")
            if not self.cpds[name].deterministic:
                raise StructuralDiscipline(f"{name} has a non-deterministic CPD")

    # derived models --------------------------------------------------
    def replace(self, variables=None, edges=None, cpds=None, level=None, extras=None) -> "GameModel":
        return GameModel(
            variables if variables is not None else self.variables.values(),
            edges if edges is not None else self.graph.edges,
            cpds if cpds is not None else self.cpds,
            agents=self.agents,
            level=level or self.level,
            extras=self.extras if extras is None else extras,
        )


def build(decls, edges, params, level="causal", agents=None, extras=None) -> GameModel:
    """Validated model from declarations, edge list and CPDs."""
    return GameModel(decls, edges, params, agents=agents, level=level, extras=extras)


def exogenous_name(v: str) -> str:
    return f"eps_{v}"


def to_structural(m: GameModel, max_cells: int = 10**5) -> GameModel:
    """Split every non-decision CPD into an exogenous noise variable plus a function.

    The noise of ``V`` ranges over response functions (one value per parent
    context) with independent per-context cells; response functions with zero
    probability are dropped. Decisions get their noise lazily in the
    counterfactual engine.
    """
    if m.level == "structural":
        return m
    variables, edges, cpds = [], list(m.graph.edges), {}
    for name in m.names:
        var = m.variables[name]
        if var.kind == "decision":
            variables.append(var)
            continue
        cpd = m.cpds[name]
        ctxs = m.contexts(name)
        supports = [[(v, q) for v, q in cpd.dist(ctx).items() if q] for ctx in ctxs]
        count = 1
        for s in supports:
            count *= len(s)
        if count > max_cells:
            raise ExplosionGuard(f"exogenous domain of {name} would have {count} values")
        eps = exogenous_name(name)
        responses, probs = [], {}
        for combo in itertools.product(*supports):
            resp = tuple(v for v, _ in combo)
            q = ONE
            for _, c in combo:
                q *= c
            responses.append(resp)
            probs[resp] = q
        variables.append(Variable(eps, "exogenous", tuple(responses)))
        variables.append(var)
        edges.append((eps, name))
        cpds[eps] = Cpd(eps, (), {(): probs})
        index = {ctx: i for i, ctx in enumerate(ctxs)}
        table = {}
        for ctx in ctxs:
            for resp in responses:
                table[ctx + (resp,)] = {resp[index[ctx]]: ONE}
        cpds[name] = Cpd(name, tuple(cpd.parents) + (eps,), table)
    # keep declaration order: exogenous node right before its child
    return GameModel(variables, edges, cpds, agents=m.agents, level="structural", extras=m.extras)


def restrict(m: GameModel, keep, context: Mapping[str, object]) -> GameModel:
    """Sub-model over ``keep`` with dropped parents fixed to ``context`` values.

    CPDs of kept non-decision variables become their original conditionals
    with the dropped parents plugged in.
    """
    keep = set(keep)
    for k in keep:
        m.graph.check(k)
    needed = {p for v in keep for p in m.parents(v) if p not in keep}
    missing = needed - set(context)
    if missing:
        raise ContextIncomplete(f"context must assign {sorted(missing)}")
    variables = [m.variables[n] for n in m.names if n in keep]
    edges = [(a, b) for a, b in m.graph.edges if a in keep and b in keep]
    cpds = {}
    for name in keep:
        if m.variables[name].kind == "decision":
            continue
        cpd = m.cpds[name]
        kept = tuple(p for p in cpd.parents if p in keep)
        table = {}
        for ctx, row in cpd.table.items():
            full = dict(zip(cpd.parents, ctx))
            if all(full[p] == context[p] for p in cpd.parents if p not in keep):
                table[tuple(full[p] for p in kept)] = row
        cpds[name] = Cpd(name, kept, table)
    return GameModel(variables, edges, cpds, agents=m.agents, level=m.level, extras={})
