"""Small helpers that write game descriptions in the JSON file format."""

import itertools

from causalgames.io import parse_game


def var(name, kind, domain=None, agent=None, parents=()):
    out = {"name": name, "kind": kind, "parents": list(parents)}
    if domain is not None:
        out["domain"] = list(domain)
    if agent is not None:
        out["agent"] = agent
    return out


def rows(parents, domains, fn):
    """CPD rows from ``fn(**context)``; a dict result is a distribution, anything else a value."""
    out = []
    for ctx in itertools.product(*domains):
        given = dict(zip(parents, ctx))
        res = fn(**given)
        if isinstance(res, dict):
            out.append({"given": given, "dist": {str(k): str(q) for k, q in res.items()}})
        else:
            out.append({"given": given, "value": str(res)})
    return out


def game(variables, fns, agents=None):
    """Parse a game from declarations and per-node CPD functions."""
    doms = {v["name"]: v.get("domain") for v in variables}
    cpds = []
    for v in variables:
        if v["kind"] == "decision":
            continue
        pa = v["parents"]
        cpds.append({"child": v["name"], "rows": rows(pa, [doms[p] for p in pa], fns[v["name"]])})
    data = {"variables": variables, "cpds": cpds}
    if agents is not None:
        data["agents"] = agents
    return parse_game(data)
