"""Builders for the reference games shipped with the package."""

from __future__ import annotations

from fractions import Fraction as F

from .model import Cpd, GameModel, Variable

BIN = (0, 1)


def _utility_domain(parents_domains, fn):
    import itertools
    vals = set()
    for combo in itertools.product(*parents_domains):
        out = fn(*combo)
        vals |= {F(k) for k, q in out.items() if q} if isinstance(out, dict) else {F(out)}
    return tuple(sorted(vals))


def _build(spec, edges, cpd_fns, agents=None, level="causal", extras=None) -> GameModel:
    """``spec`` lists (name, kind, domain-or-None, agent); utility domains are derived."""
    parents: dict[str, list[str]] = {}
    for a, b in edges:
        parents.setdefault(b, []).append(a)
    variables: dict[str, Variable] = {}
    for name, kind, domain, agent in spec:
        if domain is None:
            pa = parents.get(name, [])
            fn = cpd_fns[name]
            domain = _utility_domain([variables[p].domain for p in pa], lambda *xs: fn(**dict(zip(pa, xs))))
        variables[name] = Variable(name, kind, tuple(domain), agent)
    cpds = {}
    for name, fn in cpd_fns.items():
        pa = parents.get(name, [])
        doms = {p: variables[p].domain for p in pa}
        if variables[name].kind == "utility":
            if getattr(fn, "stochastic", False):
                cpds[name] = Cpd.stochastic(name, pa, doms, lambda _f=fn, **kw: {F(k): q for k, q in _f(**kw).items()})
            else:
                cpds[name] = Cpd.from_function(name, pa, doms, lambda _f=fn, **kw: F(_f(**kw)))
        elif isinstance(fn, dict):
            cpds[name] = Cpd.prior(name, fn)
        else:
            cpds[name] = Cpd.stochastic(name, pa, doms, fn)
    return GameModel(variables.values(), edges, cpds, agents=agents, level=level, extras=extras)


def fig1_bn() -> GameModel:
    """Four-node Bayesian network C->A, C->D, D->A, D->B."""
    spec = [("C", "chance", BIN, None), ("D", "chance", BIN, None),
            ("A", "chance", BIN, None), ("B", "chance", BIN, None)]
    edges = [("C", "A"), ("C", "D"), ("D", "A"), ("D", "B")]
    fns = {
        "C": {1: F(2, 5), 0: F(3, 5)},
        "D": lambda C: {1: F(3, 4), 0: F(1, 4)} if C else {1: F(1, 5), 0: F(4, 5)},
        "A": lambda C, D: {1: F(1 + C + 2 * D, 6), 0: 1 - F(1 + C + 2 * D, 6)},
        "B": lambda D: {1: F(2, 3), 0: F(1, 3)} if D else {1: F(1, 4), 0: F(3, 4)},
    }
    return _build(spec, edges, fns, agents=[])


JOB_MARKET_POLICIES = {
    "always_g": {"D1": {"T=h": {"g": 1}, "T=nh": {"g": 1}}},
    "never_g": {"D1": {"T=h": {"ng": 1}, "T=nh": {"ng": 1}}},
    "g_iff_h": {"D1": {"T=h": {"g": 1}, "T=nh": {"ng": 1}}},
    "lottery": {"D1": {"T=h": {"g": "1/2", "ng": "1/2"}, "T=nh": {"g": "1/2", "ng": "1/2"}}},
    "hire_iff_g": {"D2": {"D1=g": {"j": 1}, "D1=ng": {"nj": 1}}},
    "always_hire": {"D2": {"D1=g": {"j": 1}, "D1=ng": {"j": 1}}},
}


def job_market(p=F(1, 2), modified: bool = False) -> GameModel:
    """Signalling game: worker T -> D1 (university), firm D1 -> D2 (hire)."""
    spec = [("T", "chance", ("h", "nh"), None), ("D1", "decision", ("g", "ng"), 1),
            ("D2", "decision", ("j", "nj"), 2), ("U1", "utility", None, 1), ("U2", "utility", None, 2)]
    edges = [("T", "D1"), ("D1", "D2"), ("T", "U1"), ("D1", "U1"), ("D2", "U1")]

    def u1(T, D1, D2):
        t, g, j = T == "h", D1 == "g", D2 == "j"
        return 5 * j - t * g - 2 * g * (1 - t)

    if modified:
        edges += [("D1", "U2"), ("D2", "U2")]

        def u2(D1, D2):
            g, j = D1 == "g", D2 == "j"
            return 3 * g * j - 2 * (1 - g) * j - (1 - j) * g
    else:
        edges += [("T", "U2"), ("D2", "U2")]

        def u2(T, D2):
            t, j = T == "h", D2 == "j"
            return 3 * t * j - 2 * (1 - t) * j - (1 - j) * t

    p = F(p)
    extras = {
        "policies": JOB_MARKET_POLICIES,
        "interventions": {
            "do_g": {"timing": "post", "do": {"D1": "g"}, "rules": {}, "cpds": [],
                     "restrict_constant_in": {}, "remove_edges": []},
            "lottery": {"timing": "pre", "do": {}, "rules": {"D1": "lottery"}, "cpds": [],
                        "restrict_constant_in": {}, "remove_edges": []},
        },
        "description": "modified job market" if modified else "job market",
    }
    fns = {"T": {"h": p, "nh": 1 - p}, "U1": u1, "U2": u2}
    return _build(spec, edges, fns, extras=extras)


def warehouse() -> GameModel:
    """Two robots: D1 speed (q quick), D2 patrol (p), B breakage."""
    spec = [("D1", "decision", ("q", "nq"), 1), ("B", "chance", ("b", "nb"), None),
            ("D2", "decision", ("p", "np"), 2), ("U1", "utility", None, 1), ("U2", "utility", None, 2)]
    edges = [("D1", "D2"), ("D1", "U1"), ("D1", "B"), ("B", "U2"), ("B", "U1"), ("D2", "U2"), ("D2", "U1")]

    def b_cpd(D1):
        return {"b": F(1, 3), "nb": F(2, 3)} if D1 == "q" else {"b": 0, "nb": 1}

    def u1(D1, B, D2):
        # patrolling obstructs robot one half of the time, which then earns 0
        q, b, p = D1 == "q", B == "b", D2 == "p"
        done = (1 - q) * 2 + q * 5 - 3 * b
        return {0: F(1, 2), done: F(1, 2)} if p and done else {done: 1}
    u1.stochastic = True

    def u2(B, D2):
        b, p = B == "b", D2 == "p"
        return 6 * (1 - (1 - p) * b) - p

    extras = {
        "policies": {
            "q": {"D1": {"": {"q": 1}}},
            "nq": {"D1": {"": {"nq": 1}}},
            "always_p": {"D2": {"D1=q": {"p": 1}, "D1=nq": {"p": 1}}},
            "p_iff_q": {"D2": {"D1=q": {"p": 1}, "D1=nq": {"np": 1}}},
        },
        "description": "warehouse robots",
    }
    fns = {"B": b_cpd, "U1": u1, "U2": u2}
    return _build(spec, edges, fns, extras=extras)


def _b2_u(A, B, D2):
    if A != B:
        return (-2, 2)
    if A == 1:
        return (1, -1) if D2 == 1 else (-1, 1)
    return (-1, 1) if D2 == 1 else (1, -1)


def b2_game1() -> GameModel:
    """Agent 1 with two unlinked decisions against agent 2 (insufficient recall)."""
    spec = [("A", "decision", BIN, 1), ("B", "decision", BIN, 1), ("D2", "decision", BIN, 2),
            ("U1", "utility", None, 1), ("U2", "utility", None, 2)]
    edges = [(x, u) for u in ("U1", "U2") for x in ("A", "B", "D2")]
    fns = {"U1": lambda A, B, D2: _b2_u(A, B, D2)[0], "U2": lambda A, B, D2: _b2_u(A, B, D2)[1]}
    return _build(spec, edges, fns)


def b2_game2() -> GameModel:
    """Game 1 extended with agents 3 and 4; admits no subgame perfect equilibrium."""
    spec = [("D3", "decision", BIN, 3), ("A", "decision", BIN, 1), ("B", "decision", BIN, 1),
            ("X", "chance", BIN, None), ("D2", "decision", BIN, 2), ("D4", "decision", BIN, 4),
            ("U1", "utility", None, 1), ("U2", "utility", None, 2), ("U3", "utility", None, 3),
            ("U4", "utility", None, 4)]
    edges = [(x, u) for u in ("U1", "U2") for x in ("A", "B", "D2")]
    edges += [("D3", "X"), ("A", "X"), ("D3", "U3"), ("D4", "U4"), ("B", "U4"), ("X", "D4")]
    fns = {
        "X": lambda D3, A: {A if D3 == 1 else 1 - A: 1},
        "U1": lambda A, B, D2: _b2_u(A, B, D2)[0],
        "U2": lambda A, B, D2: _b2_u(A, B, D2)[1],
        "U3": lambda D3: D3,
        "U4": lambda D4, B: int(D4 == B),
    }
    return _build(spec, edges, fns)


def b2_game3() -> GameModel:
    """Single agent, X -> A -> B: sufficient but imperfect recall."""
    spec = [("X", "chance", BIN, None), ("A", "decision", BIN, 1), ("B", "decision", BIN, 1),
            ("U1", "utility", None, 1)]
    edges = [("X", "A"), ("A", "B"), ("A", "U1"), ("B", "U1")]
    fns = {"X": {1: F(1, 2), 0: F(1, 2)}, "U1": lambda A, B: A + 2 * B}
    return _build(spec, edges, fns)


def c2_family(k: int) -> GameModel:
    """Agent 1 wants all heads; k further pairs play matching pennies."""
    n = 1 + 2 * k
    ds = [f"D{i}" for i in range(1, n + 1)]
    spec = [(d, "decision", BIN, i + 1) for i, d in enumerate(ds)]
    spec += [(f"U{i}", "utility", None, i) for i in range(1, n + 1)]
    edges = [(d, "U1") for d in ds]
    fns = {"U1": lambda **kw: int(all(v == 1 for v in kw.values()))}
    for j in range(k):
        a, b = 2 + 2 * j, 3 + 2 * j
        da, db = f"D{a}", f"D{b}"
        edges += [(da, f"U{a}"), (db, f"U{a}"), (da, f"U{b}"), (db, f"U{b}")]
        fns[f"U{a}"] = (lambda x, y: lambda **kw: 1 if kw[x] == kw[y] else -1)(da, db)
        fns[f"U{b}"] = (lambda x, y: lambda **kw: -1 if kw[x] == kw[y] else 1)(da, db)
    return _build(spec, edges, fns)


def cirl_reduced() -> GameModel:
    """Assistance game after A^H_1, A^R_1 and A^H_2 have been played.

    Earlier actions become chance nodes; R1 and R2 are observed rewards and
    are kept as chance nodes so that only R3 is a utility of the robot.
    """
    names = ["PH", "S1", "R1", "AH1", "AR1", "S2", "R2", "AH2", "AR2", "S3", "R3"]
    spec = [(n, "chance", BIN, None) for n in names]
    spec[names.index("AR2")] = ("AR2", "decision", BIN, 1)
    spec[names.index("R3")] = ("R3", "utility", None, 1)
    edges = [("S1", "R1"), ("PH", "R1"), ("S1", "AH1"), ("R1", "AH1"), ("PH", "AH1"),
             ("S1", "AR1"), ("AH1", "AR1"),
             ("S1", "S2"), ("AR1", "S2"), ("AH1", "S2"), ("S2", "R2"), ("PH", "R2"),
             ("S1", "AH2"), ("R1", "AH2"), ("R2", "AH2"), ("S2", "AH2"), ("AR1", "AH2"), ("AH1", "AH2"),
             ("PH", "AH2"),
             ("S2", "AR2"), ("S1", "AR2"), ("AH1", "AR2"), ("AH2", "AR2"), ("AR1", "AR2"),
             ("S2", "S3"), ("AR2", "S3"), ("AH2", "S3"), ("S3", "R3"), ("PH", "R3")]
    half = {0: F(1, 2), 1: F(1, 2)}
    fns = {}
    parents: dict[str, list[str]] = {}
    for a, b in edges:
        parents.setdefault(b, []).append(a)
    for n in names:
        if n in ("AR2", "R3"):
            continue
        fns[n] = half if not parents.get(n) else (lambda **kw: {0: F(1, 2), 1: F(1, 2)})
    fns["R3"] = lambda S3, PH: int(S3 == PH)
    return _build(spec, edges, fns)


def cpw_pair() -> GameModel:
    """Two decisions where PI[D] is relevant to PI[E] but E's optimal set never moves."""
    spec = [("D", "decision", BIN, 1), ("E", "decision", BIN, 2),
            ("U1", "utility", None, 1), ("U2", "utility", None, 2)]
    edges = [("D", "U1"), ("D", "U2"), ("E", "U2")]
    fns = {"U1": lambda D: D, "U2": lambda D, E: 2 * E + D}
    extras = {"policies": {"uniform_d": {"D": {"": {"0": "1/2", "1": "1/2"}}}}}
    return _build(spec, edges, fns, extras=extras)


GRID = (206, 224, 244, 250, 288)
MARGINAL_COST = 206
VALUATION = 296
SWITCHING_COST = 38
INERT_PENALTY = 1000  # finite stand-in for a prohibitive search cost


def _u3(switching_cost):
    def u3(C, T, D1, D2, D3):
        if D3 == 0:
            return 0
        price = D1 if D3 == 1 else D2
        cost = 0 if D3 == C else switching_cost + (INERT_PENALTY if T == "i" else 0)
        return VALUATION - price - cost
    return u3


def insurance(p=F(3, 5), savvy=F(18, 25)) -> GameModel:
    """Duopoly pricing with a savvy or inert customer."""
    spec = [("C", "chance", (1, 2), None), ("T", "chance", ("s", "i"), None),
            ("D1", "decision", GRID, 1), ("D2", "decision", GRID, 2),
            ("D3", "decision", (0, 1, 2), 3),
            ("U1", "utility", None, 1), ("U2", "utility", None, 2), ("U3", "utility", None, 3)]
    edges = [("C", "D1"), ("C", "D2"), ("C", "D3"), ("T", "D3"), ("D1", "D3"), ("D2", "D3"),
             ("D1", "U1"), ("D3", "U1"), ("D2", "U2"), ("D3", "U2"),
             ("C", "U3"), ("T", "U3"), ("D1", "U3"), ("D2", "U3"), ("D3", "U3")]
    fns = {
        "C": {1: F(p), 2: 1 - F(p)},
        "T": {"s": F(savvy), "i": 1 - F(savvy)},
        "U1": lambda D1, D3: D1 - MARGINAL_COST if D3 == 1 else 0,
        "U2": lambda D2, D3: D2 - MARGINAL_COST if D3 == 2 else 0,
        "U3": _u3(SWITCHING_COST),
    }
    m = _build(spec, edges, fns)
    # the zero-switching-cost variant of U3 used by the second intervention
    alt = Cpd.from_function("U3", m.parents("U3"), {v: m.domain(v) for v in m.parents("U3")},
                            lambda **kw: F(_u3(0)(**kw)))
    from .io import cpd_rows
    extras = {
        "relations": {
            "D1": {"kind": "optimistic", "followers": ["D3"]},
            "D2": {"kind": "optimistic", "followers": ["D3"]},
            "D3": {"kind": "br", "followers": []},
        },
        "selection": {"maximize_agent": 3},
        "interventions": {
            "ban": {"timing": "pre", "do": {}, "rules": {}, "cpds": [],
                    "restrict_constant_in": {"D1": ["C"], "D2": ["C"]}, "remove_edges": []},
            "ban_edges": {"timing": "pre", "do": {}, "rules": {}, "cpds": [],
                          "restrict_constant_in": {}, "remove_edges": [["C", "D1"], ["C", "D2"]]},
            "ban_free_switch": {"timing": "pre", "do": {}, "rules": {},
                                "cpds": [{"child": "U3", "rows": cpd_rows(alt)}],
                                "restrict_constant_in": {"D1": ["C"], "D2": ["C"]}, "remove_edges": []},
        },
        "description": "insurance pricing duopoly",
    }
    # U3's domain must also cover the zero-switching-cost values
    u3_dom = tuple(sorted(set(m.domain("U3")) | {q for row in alt.table.values() for q in row}))
    variables = [Variable("U3", "utility", u3_dom, 3) if v.name == "U3" else v for v in m.variables.values()]
    return GameModel(variables, m.graph.edges, m.cpds, agents=m.agents, level=m.level, extras=extras)


GAMES = {
    "job_market": job_market,
    "job_market_modified": lambda: job_market(modified=True),
    "warehouse": warehouse,
    "b2_game1": b2_game1,
    "b2_game2": b2_game2,
    "b2_game3": b2_game3,
    "c2_k2": lambda: c2_family(2),
    "cirl_reduced": cirl_reduced,
    "insurance": insurance,
    "cpw_pair": cpw_pair,
    "fig1_bn": fig1_bn,
}
