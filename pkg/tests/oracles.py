"""Brute-force reference implementations used by the property and acceptance tests.

Nothing here goes through the package's inference or graph code.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from causalgames.equilibrium import pure_ne
from causalgames.inference import expected_utilities
from causalgames.policy import PolicyProfile, pure_rules


def all_dags(n: int):
    """Every labelled DAG on nodes ``V0..V{n-1}`` as (nodes, edges)."""
    nodes = [f"V{i}" for i in range(n)]
    pairs = list(itertools.combinations(range(n), 2))
    for choice in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = []
        for (i, j), c in zip(pairs, choice):
            if c == 1:
                edges.append((i, j))
            elif c == 2:
                edges.append((j, i))
        if _acyclic(n, edges):
            yield nodes, [(nodes[a], nodes[b]) for a, b in edges]


def _acyclic(n, edges) -> bool:
    indeg = [0] * n
    out = [[] for _ in range(n)]
    for a, b in edges:
        out[a].append(b)
        indeg[b] += 1
    todo = [i for i in range(n) if indeg[i] == 0]
    seen = 0
    while todo:
        i = todo.pop()
        seen += 1
        for j in out[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                todo.append(j)
    return seen == n


SCALE = 97


def random_cpds(nodes, edges, rng: random.Random) -> dict:
    """Strictly positive binary CPDs: node -> {parent values: SCALE * P(node=1)}."""
    parents = {v: [a for a, b in edges if b == v] for v in nodes}
    return {v: {ctx: rng.randint(1, SCALE - 1) for ctx in itertools.product((0, 1), repeat=len(parents[v]))}
            for v in nodes}


def full_joint(nodes, edges, cpds) -> dict:
    """Joint scaled by SCALE ** len(nodes), so every entry is an integer.

    Independence and conditional-table comparisons are invariant under the
    common scale, which keeps the sweeps exact without Fraction overhead.
    """
    parents = {v: [a for a, b in edges if b == v] for v in nodes}
    out = {}
    for vals in itertools.product((0, 1), repeat=len(nodes)):
        row = dict(zip(nodes, vals))
        p = 1
        for v in nodes:
            q = cpds[v][tuple(row[a] for a in parents[v])]
            p *= q if row[v] else SCALE - q
        out[vals] = p
    return out


def marginal(nodes, joint, names) -> dict:
    idx = [nodes.index(n) for n in names]
    out: dict = {}
    for vals, p in joint.items():
        key = tuple(vals[i] for i in idx)
        out[key] = out.get(key, 0) + p
    return out


def independent(nodes, joint, X, Z, Y) -> bool:
    """Exact test of X _|_ Z | Y in ``joint``."""
    X, Z, Y = list(X), list(Z), list(Y)
    pxzy = marginal(nodes, joint, X + Z + Y)
    pxy = marginal(nodes, joint, X + Y)
    pzy = marginal(nodes, joint, Z + Y)
    py = marginal(nodes, joint, Y)
    nx_, nz = len(X), len(Z)
    for key, p in pxzy.items():
        x, z, y = key[:nx_], key[nx_:nx_ + nz], key[nx_ + nz:]
        if p * py[y] != pxy[x + y] * pzy[z + y]:
            return False
    return True


def conditional_table(nodes, joint, X, Y) -> dict:
    pxy = marginal(nodes, joint, list(X) + list(Y))
    py = marginal(nodes, joint, list(Y))
    k = len(X)
    return {key: (p, py[key[k:]]) for key, p in pxy.items()}


def same_conditional(a: dict, b: dict) -> bool:
    """Compare two tables of (numerator, denominator) pairs by cross-multiplication."""
    return all(pa * b[key][1] == b[key][0] * qa for key, (pa, qa) in a.items())


def requisite_by_parameterisation(nodes, edges, v, X, Y, rng, tries: int = 3) -> bool:
    """Does some change to v's CPD move Pr(X | Y)?"""
    for _ in range(tries):
        base = random_cpds(nodes, edges, rng)
        alt = dict(base)
        alt[v] = random_cpds(nodes, edges, rng)[v]
        a = conditional_table(nodes, full_joint(nodes, edges, base), X, Y)
        b = conditional_table(nodes, full_joint(nodes, edges, alt), X, Y)
        if not same_conditional(a, b):
            return True
    return False


def brute_pure_ne(m) -> set:
    """Pure NE by checking every unilateral deviation of every pure profile."""
    per = {d: pure_rules(m, d) for d in m.decisions}
    profiles = [PolicyProfile(dict(zip(per, combo))) for combo in itertools.product(*per.values())]
    eu = {p: expected_utilities(m, p) for p in profiles}
    out = set()
    for p in profiles:
        stable = True
        for agent in m.strategic_agents():
            ds = m.decisions_of(agent)
            for alt in itertools.product(*(per[d] for d in ds)):
                if eu[p.with_rules(dict(zip(ds, alt)))][agent] > eu[p][agent]:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            out.add(p)
    return out


def pure_profile_count(m) -> int:
    n = 1
    for d in m.decisions:
        n *= len(m.domain(d)) ** len(m.contexts(d))
    return n


def pure_ne_matches(m) -> bool:
    return set(pure_ne(m).profiles) == brute_pure_ne(m)


def random_rule_table(rng: random.Random, n_ctx: int, n_act: int) -> list[list[Fraction]]:
    """Rows of a random stochastic matrix, some of them deterministic."""
    rows = []
    for _ in range(n_ctx):
        if rng.random() < 0.25:
            row = [Fraction(0)] * n_act
            row[rng.randrange(n_act)] = Fraction(1)
        else:
            w = [rng.randint(0, 6) for _ in range(n_act)]
            if not any(w):
                w[0] = 1
            row = [Fraction(x, sum(w)) for x in w]
        rows.append(row)
    return rows


def canonical_marginal(rows) -> list[list[Fraction]]:
    """Marginalise the deterministic cell representation of a rule.

    One cell per context, cells independent with law equal to that
    context's row; the action at a context is the value of its cell.
    """
    n_ctx, n_act = len(rows), len(rows[0])
    acc = [[Fraction(0)] * n_act for _ in range(n_ctx)]
    for cells in itertools.product(range(n_act), repeat=n_ctx):
        w = Fraction(1)
        for c, a in enumerate(cells):
            w *= rows[c][a]
        if not w:
            continue
        for c, a in enumerate(cells):
            acc[c][a] += w
    return acc


def requisite_queries(nodes, edges, v, queries, rng: random.Random, tries: int = 2) -> dict:
    """``requisite_by_parameterisation`` for many (X, Y) queries sharing the parameter draws."""
    out = {q: False for q in queries}
    for _ in range(tries):
        todo = [q for q in queries if not out[q]]
        if not todo:
            break
        base = random_cpds(nodes, edges, rng)
        alt = dict(base)
        alt[v] = random_cpds(nodes, edges, rng)[v]
        ja, jb = full_joint(nodes, edges, base), full_joint(nodes, edges, alt)
        for X, Y in todo:
            if not same_conditional(conditional_table(nodes, ja, X, Y), conditional_table(nodes, jb, X, Y)):
                out[(X, Y)] = True
    return out


def dsep_agrees_on_all_dags(max_nodes: int, seed: int = 0) -> tuple[int, list]:
    """Check d_separated against exact independence; returns (queries, mismatches)."""
    from causalgames.graph import Digraph, d_separated

    rng = random.Random(seed)
    checked, bad = 0, []
    for n in range(2, max_nodes + 1):
        for nodes, edges in all_dags(n):
            g = Digraph(nodes, edges)
            joints = [full_joint(nodes, edges, random_cpds(nodes, edges, rng)) for _ in range(2)]
            for k in (1, 2):
                for X in itertools.combinations(nodes, k):
                    rest = [v for v in nodes if v not in X]
                    for z in rest:
                        others = [v for v in rest if v != z]
                        for r in range(len(others) + 1):
                            for Y in itertools.combinations(others, r):
                                sep = d_separated(g, set(X), {z}, set(Y))
                                ind = all(independent(nodes, j, X, (z,), Y) for j in joints)
                                checked += 1
                                if sep != ind:
                                    bad.append((edges, X, z, Y, sep, ind))
    return checked, bad


def requisite_agrees_on_all_dags(max_nodes: int, seed: int = 0) -> tuple[int, list]:
    from causalgames.graph import Digraph, requisite_node

    rng = random.Random(seed)
    checked, bad = 0, []
    for n in range(2, max_nodes + 1):
        for nodes, edges in all_dags(n):
            g = Digraph(nodes, edges)
            queries = []
            for x in nodes:
                others = [v for v in nodes if v != x]
                for r in range(len(others) + 1):
                    for Y in itertools.combinations(others, r):
                        queries.append(((x,), Y))
            for v in nodes:
                oracle = requisite_queries(nodes, edges, v, queries, rng)
                for (X, Y), want in oracle.items():
                    checked += 1
                    if requisite_node(g, v, set(X), set(Y)) != want:
                        bad.append((edges, v, X, Y, want))
    return checked, bad
