"""JSON game and policy files."""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from .errors import ModelError, UnknownKey
from .model import Cpd, GameModel, Variable, frac

Scalar = Union[int, str, float]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VariableSpec(_Strict):
    name: str
    kind: Literal["chance", "decision", "utility", "exogenous"]
    agent: Optional[int] = None
    domain: Optional[list[Scalar]] = None
    parents: list[str] = []


class RowSpec(_Strict):
    given: dict[str, Scalar] = {}
    dist: Optional[dict[str, Scalar]] = None
    value: Optional[Scalar] = None


class CpdSpec(_Strict):
    child: str
    rows: list[RowSpec]


class InterventionSpec(_Strict):
    timing: Literal["pre", "post"] = "pre"
    do: dict[str, Scalar] = {}
    rules: dict[str, str] = {}
    cpds: list[CpdSpec] = []
    restrict_constant_in: dict[str, list[str]] = {}
    remove_edges: list[tuple[str, str]] = []


class RelationSpec(_Strict):
    kind: Literal["br", "subgame-perfect", "optimistic"] = "br"
    followers: list[str] = []


class SelectionSpec(_Strict):
    maximize_agent: int


class GameSpec(_Strict):
    agents: list[int] = []
    level: Literal["associational", "causal", "structural"] = "causal"
    variables: list[VariableSpec]
    cpds: list[CpdSpec] = []
    policies: dict[str, dict[str, dict[str, dict[str, Scalar]]]] = {}
    interventions: dict[str, InterventionSpec] = {}
    relations: dict[str, RelationSpec] = {}
    selection: Optional[SelectionSpec] = None
    description: str = ""

    @field_validator("variables")
    @classmethod
    def _names_unique(cls, v):
        names = [x.name for x in v]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        return v


def _value(domain: tuple, key, kind: str = "chance"):
    """Map a JSON key/value onto a domain element."""
    for d in domain:
        if d == key or str(d) == str(key):
            return d
    if kind == "utility":
        try:
            q = frac(key)
        except (ValueError, ZeroDivisionError):
            q = None
        if q is not None and q in domain:
            return q
    raise ModelError(f"value {key!r} not in domain {list(domain)}")


def _domain(spec: VariableSpec, rows: list[RowSpec] | None) -> tuple:
    if spec.kind == "utility":
        if spec.domain is not None:
            vals = [frac(x) for x in spec.domain]
        else:
            vals = []
            for r in rows or []:
                keys = [r.value] if r.value is not None else list((r.dist or {}).keys())
                vals.extend(frac(k) for k in keys)
            vals = sorted(set(vals))
        return tuple(dict.fromkeys(vals))
    if spec.domain is None:
        raise ModelError(f"{spec.name}: domain required")
    return tuple(spec.domain)


def _cpd(spec: CpdSpec, variables: dict[str, Variable], parents: dict[str, list[str]]) -> Cpd:
    var = variables[spec.child]
    pa = tuple(parents[spec.child])
    table = {}
    for row in spec.rows:
        extra = set(row.given) - set(pa)
        if extra:
            raise ModelError(f"CPD of {spec.child}: {sorted(extra)} are not parents")
        if set(row.given) != set(pa):
            raise ModelError(f"CPD of {spec.child}: row must assign all parents {list(pa)}")
        ctx = tuple(_value(variables[p].domain, row.given[p], variables[p].kind) for p in pa)
        if row.value is not None:
            dist = {_value(var.domain, row.value, var.kind): Fraction(1)}
        elif row.dist is not None:
            dist = {_value(var.domain, k, var.kind): frac(q) for k, q in row.dist.items()}
        else:
            raise ModelError(f"CPD of {spec.child}: row needs dist or value")
        table[ctx] = dist
    return Cpd(spec.child, pa, table)


def parse_game(data: dict) -> GameModel:
    try:
        spec = GameSpec.model_validate(data)
    except ValidationError as exc:
        if any(e["type"] == "extra_forbidden" for e in exc.errors()):
            raise UnknownKey(str(exc)) from exc
        raise ModelError(str(exc)) from exc
    rows = {c.child: c.rows for c in spec.cpds}
    variables = {}
    for v in spec.variables:
        variables[v.name] = Variable(v.name, v.kind, _domain(v, rows.get(v.name)), v.agent)
    parents = {v.name: v.parents for v in spec.variables}
    edges = [(p, v.name) for v in spec.variables for p in v.parents]
    cpds = {c.child: _cpd(c, variables, parents) for c in spec.cpds if c.child in variables}
    unknown = [c.child for c in spec.cpds if c.child not in variables]
    if unknown:
        raise ModelError(f"CPDs for undeclared variables {unknown}")
    extras = {
        "policies": spec.policies,
        "interventions": {k: v.model_dump(mode="json", exclude_none=True) for k, v in spec.interventions.items()},
        "relations": {k: v.model_dump(mode="json", exclude_none=True) for k, v in spec.relations.items()},
        "selection": spec.selection.model_dump(mode="json", exclude_none=True) if spec.selection else None,
        "description": spec.description,
    }
    agents = spec.agents or None
    return GameModel(variables.values(), edges, cpds, agents=agents, level=spec.level, extras=extras)


def load_game(path) -> GameModel:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: invalid JSON ({exc})") from exc
    return parse_game(data)


def jsonable(x):
    """Rationals as "num/den" strings (integers stay integers)."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


def _key(x) -> str:
    return str(jsonable(x))


def cpd_rows(cpd: Cpd) -> list[dict]:
    rows = []
    for ctx, dist in cpd.table.items():
        given = {p: jsonable(v) for p, v in zip(cpd.parents, ctx)}
        support = [(k, q) for k, q in dist.items() if q]
        if len(support) == 1:
            rows.append({"given": given, "value": jsonable(support[0][0])})
        else:
            rows.append({"given": given, "dist": {_key(k): jsonable(q) for k, q in support}})
    return rows


def dump_game(m: GameModel) -> dict:
    out: dict[str, Any] = {"agents": list(m.agents), "level": m.level, "variables": [], "cpds": []}
    if m.extras.get("description"):
        out["description"] = m.extras["description"]
    for name in m.names:
        v = m.variables[name]
        entry: dict[str, Any] = {"name": name, "kind": v.kind}
        if v.agent is not None:
            entry["agent"] = v.agent
        entry["domain"] = [jsonable(x) for x in v.domain]
        entry["parents"] = list(m.parents(name))
        out["variables"].append(entry)
    for name in m.names:
        if name in m.cpds:
            out["cpds"].append({"child": name, "rows": cpd_rows(m.cpds[name])})
    for key in ("policies", "interventions", "relations", "selection"):
        if m.extras.get(key):
            out[key] = m.extras[key]
    return out


def save_game(m: GameModel, path) -> None:
    Path(path).write_text(json.dumps(dump_game(m), indent=1) + "\n", encoding="utf-8")


# policy files ---------------------------------------------------------

def context_key(parents, ctx) -> str:
    return ",".join(f"{p}={_key(v)}" for p, v in zip(parents, ctx))


def parse_context_key(m: GameModel, decision: str, key: str) -> tuple:
    parents = m.parents(decision)
    given = {}
    for part in filter(None, (s.strip() for s in key.split(","))):
        if "=" not in part:
            raise ModelError(f"bad context {key!r} for {decision}")
        name, val = (s.strip() for s in part.split("=", 1))
        if name not in parents:
            raise ModelError(f"{name} is not a parent of {decision}")
        given[name] = _value(m.domain(name), val, m[name].kind)
    if set(given) != set(parents):
        raise ModelError(f"context {key!r} must assign {list(parents)}")
    return tuple(given[p] for p in parents)


def rule_from_json(m: GameModel, decision: str, table: dict):
    from .policy import DecisionRule

    m.graph.check(decision)
    rows = {}
    for key, dist in table.items():
        ctx = parse_context_key(m, decision, key)
        rows[ctx] = {_value(m.domain(decision), a): frac(q) for a, q in dist.items()}
    return DecisionRule.from_table(m, decision, rows)


def rule_to_json(rule) -> dict:
    return {
        context_key(rule.parents, ctx): {_key(a): jsonable(q) for a, q in zip(rule.actions, row) if q}
        for ctx, row in zip(rule.contexts, rule.rows)
    }


def load_policy(m: GameModel, path):
    from .policy import PolicyProfile

    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return PolicyProfile({d: rule_from_json(m, d, t) for d, t in data.items()})


def dump_policy(profile) -> dict:
    out = {d: rule_to_json(r) for d, r in profile.rules.items()}
    if profile.mixtures:
        out["_mixed"] = [
            {"agent": mp.agent,
             "support": [{"weight": jsonable(w), "rules": {d: rule_to_json(r) for d, r in part}}
                         for part, w in mp.support]}
            for mp in profile.mixtures
        ]
    return out
