"""Exact normal-form tools: bimatrix vertex enumeration and a small rational LP."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

Matrix = Sequence[Sequence[Fraction]]


def solve_linear(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Unique solution of a square system, or None when singular."""
    n = len(a)
    rows = [list(map(Fraction, r)) + [Fraction(v)] for r, v in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [x / p for x in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


def _vertices(constraints: list[tuple[list[Fraction], Fraction]], dim: int):
    """Vertices of {z : c.z <= r} with their tight-constraint labels."""
    seen = {}
    for tight in itertools.combinations(range(len(constraints)), dim):
        sol = solve_linear([constraints[i][0] for i in tight], [constraints[i][1] for i in tight])
        if sol is None:
            continue
        key = tuple(sol)
        if key in seen:
            continue
        if all(sum(c * z for c, z in zip(coef, sol)) <= rhs for coef, rhs in constraints):
            labels = frozenset(i for i, (coef, rhs) in enumerate(constraints)
                               if sum(c * z for c, z in zip(coef, sol)) == rhs)
            seen[key] = labels
    return seen


def extreme_equilibria(A: Matrix, B: Matrix) -> list[tuple[tuple[Fraction, ...], tuple[Fraction, ...]]]:
    """All extreme Nash equilibria of the bimatrix game (A, B), exactly.

    Row player payoffs ``A[i][j]``, column player ``B[i][j]``. Works for
    degenerate games by pairing vertices of the two best-response polytopes.
    """
    m, n = len(A), len(A[0])
    lo = min(min(min(r) for r in A), min(min(r) for r in B))
    shift = 1 - lo
    A = [[Fraction(x) + shift for x in r] for r in A]
    B = [[Fraction(x) + shift for x in r] for r in B]
    # P = {x >= 0, B^T x <= 1}: labels 0..m-1 for x_i = 0, m+j for (B^T x)_j = 1
    cons_p = [([-Fraction(int(i == k)) for k in range(m)], Fraction(0)) for i in range(m)]
    cons_p += [([B[i][j] for i in range(m)], Fraction(1)) for j in range(n)]
    # Q = {A y <= 1, y >= 0}: labels i for (A y)_i = 1, m+j for y_j = 0
    cons_q = [(list(A[i]), Fraction(1)) for i in range(m)]
    cons_q += [([-Fraction(int(j == k)) for k in range(n)], Fraction(0)) for j in range(n)]
    vp = {k: v for k, v in _vertices(cons_p, m).items() if any(k)}
    vq = {k: v for k, v in _vertices(cons_q, n).items() if any(k)}
    everything = frozenset(range(m + n))
    out = []
    for x, lx in vp.items():
        for y, ly in vq.items():
            if lx | ly == everything:
                sx, sy = sum(x), sum(y)
                out.append((tuple(v / sx for v in x), tuple(v / sy for v in y)))
    return sorted(set(out))


def lp_max(c: Sequence, A_ub: Sequence = (), b_ub: Sequence = (), A_eq: Sequence = (), b_eq: Sequence = ()):
    """Maximise c.x subject to A_ub x <= b_ub, A_eq x = b_eq, x >= 0.

    Two-phase tableau simplex with Bland's rule over Fractions. Returns
    ``(value, x)``, ``None`` when infeasible, and raises ``ValueError`` when
    unbounded.
    """
    n = len(c)
    specs = [(list(map(Fraction, a)), Fraction(b), "ub") for a, b in zip(A_ub, b_ub)]
    specs += [(list(map(Fraction, a)), Fraction(b), "eq") for a, b in zip(A_eq, b_eq)]
    n_slack = sum(1 for s in specs if s[2] == "ub")
    n_art = sum(1 for a, b, k in specs if k == "eq" or b < 0)
    width = n + n_slack + n_art
    tab, basis = [], []
    si, ai = n, n + n_slack
    for coef, rhs, kind in specs:
        row = coef + [Fraction(0)] * (n_slack + n_art) + [rhs]
        slack_col = None
        if kind == "ub":
            slack_col = si
            row[si] = Fraction(1)
            si += 1
        if rhs < 0:
            row = [-x for x in row]
        if kind == "eq" or rhs < 0:
            row[ai] = Fraction(1)
            basis.append(ai)
            ai += 1
        else:
            basis.append(slack_col)
        tab.append(row)
    arts = set(range(n + n_slack, width))
    if arts:
        obj = [Fraction(0)] * width
        for j in arts:
            obj[j] = Fraction(-1)
        val = _simplex(tab, basis, obj, width)
        if val < 0:
            return None
        for r, b in enumerate(list(basis)):
            if b in arts:
                col = next((j for j in range(width) if j not in arts and tab[r][j] != 0), None)
                if col is not None:
                    _pivot(tab, basis, r, col)
        keep = [r for r, b in enumerate(basis) if b not in arts]
        tab = [tab[r] for r in keep]
        basis = [basis[r] for r in keep]
        for r in tab:
            for j in arts:
                r[j] = Fraction(0)
    obj = [Fraction(x) for x in c] + [Fraction(0)] * (width - n)
    allowed = [j for j in range(width) if j not in arts]
    val = _simplex(tab, basis, obj, width, allowed)
    x = [Fraction(0)] * n
    for r, b in enumerate(basis):
        if b < n:
            x[b] = tab[r][-1]
    return val, x


def _pivot(tab, basis, r, col):
    p = tab[r][col]
    tab[r] = [x / p for x in tab[r]]
    for i in range(len(tab)):
        if i != r and tab[i][col] != 0:
            f = tab[i][col]
            tab[i] = [x - f * y for x, y in zip(tab[i], tab[r])]
    basis[r] = col


def _simplex(tab, basis, obj, width, allowed=None) -> Fraction:
    cols = list(range(width)) if allowed is None else allowed
    while True:
        enter = None
        for j in cols:
            if j in basis:
                continue
            red = obj[j] - sum(obj[b] * tab[i][j] for i, b in enumerate(basis))
            if red > 0:
                enter = j
                break
        if enter is None:
            return sum(obj[b] * tab[i][-1] for i, b in enumerate(basis))
        best = None
        for i, row in enumerate(tab):
            if row[enter] > 0:
                ratio = row[-1] / row[enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            raise ValueError("linear program is unbounded")
        _pivot(tab, basis, best[1], enter)


def weakly_dominated(payoffs: Matrix, target: Sequence[Fraction]) -> tuple[Fraction, ...] | None:
    """A mixture of rows of ``payoffs`` weakly dominating ``target``, if any.

    ``payoffs[k]`` is the payoff vector of pure strategy ``k`` against each
    opponent profile; ``target`` is the vector of the strategy under test.
    """
    k, cols = len(payoffs), len(target)
    # maximise sum_j (tau^T M)_j subject to (tau^T M)_j >= target_j, sum tau = 1
    c = [sum(payoffs[i][j] for j in range(cols)) for i in range(k)]
    A_ub = [[-payoffs[i][j] for i in range(k)] for j in range(cols)]
    b_ub = [-t for t in target]
    res = lp_max(c, A_ub, b_ub, [[1] * k], [1])
    if res is None:
        return None
    val, tau = res
    if val - sum(target) > 0:
        return tuple(tau)
    return None


# n-player support enumeration ---------------------------------------------------

class _Unresolved(Exception):
    pass


def _contract(axes, table, known):
    """Sum out axes whose mixtures are known."""
    keep = [k for k, j in enumerate(axes) if j not in known]
    if len(keep) == len(axes):
        return axes, table
    out: dict = {}
    for key, v in table.items():
        w = v
        for k, j in enumerate(axes):
            if j in known:
                w *= known[j][key[k]]
        if w:
            sub = tuple(key[k] for k in keep)
            out[sub] = out.get(sub, Fraction(0)) + w
    return [axes[k] for k in keep], out


def _drop_constant(axes, table, doms):
    """Remove axes along which the table never varies (mixtures there cancel)."""
    k = 0
    while k < len(axes):
        groups: dict = {}
        for key in itertools.product(*doms):
            groups.setdefault(key[:k] + key[k + 1:], set()).add(table.get(key, Fraction(0)))
        if all(len(vals) == 1 for vals in groups.values()):
            first = doms[k][0]
            table = {key[:k] + key[k + 1:]: v for key, v in table.items() if key[k] == first}
            axes = axes[:k] + axes[k + 1:]
            doms = doms[:k] + doms[k + 1:]
        else:
            k += 1
    return axes, table, doms


def _solve_support(payoffs, sizes, supp):
    n = len(sizes)
    known = {j: {supp[j][0]: Fraction(1)} for j in range(n) if len(supp[j]) == 1}
    pending = []
    for i in range(n):
        for a in supp[i][1:]:
            axes = [j for j in range(n) if j != i]
            table = {}
            for rest in itertools.product(*(supp[j] for j in axes)):
                prof = list(rest)
                prof.insert(i, a)
                hi = payoffs[tuple(prof)][i]
                prof[i] = supp[i][0]
                table[rest] = hi - payoffs[tuple(prof)][i]
            pending.append((axes, table))
    while True:
        single: dict = {}
        still = []
        for axes, table in pending:
            axes, table = _contract(axes, table, known)
            doms = [supp[j] for j in axes]
            axes, table, doms = _drop_constant(axes, table, doms)
            if not axes:
                if table.get((), Fraction(0)) != 0:
                    return None
            elif len(axes) == 1:
                single.setdefault(axes[0], []).append({key[0]: v for key, v in table.items()})
            else:
                still.append((axes, table))
        progress = False
        for j, eqs in single.items():
            acts = supp[j]
            sol = None
            for pick in itertools.combinations(eqs, len(acts) - 1):
                rows = [[e.get(a, Fraction(0)) for a in acts] for e in pick] + [[Fraction(1)] * len(acts)]
                sol = solve_linear(rows, [Fraction(0)] * (len(acts) - 1) + [Fraction(1)])
                if sol is not None:
                    break
            if sol is None:
                raise _Unresolved
            if any(x <= 0 for x in sol):
                return None
            vec = dict(zip(acts, sol))
            if any(sum(e.get(a, Fraction(0)) * vec[a] for a in acts) != 0 for e in eqs):
                return None
            known[j] = vec
            progress = True
        pending = still
        mixing = [j for j in range(n) if j not in known]
        if not mixing:
            return tuple(tuple(known[j].get(a, Fraction(0)) for a in range(sizes[j])) for j in range(n))
        if not progress:
            raise _Unresolved


def _is_equilibrium(payoffs, sizes, sigma) -> bool:
    n = len(sizes)
    supp = [[a for a in range(sizes[j]) if sigma[j][a]] for j in range(n)]
    for i in range(n):
        others = [j for j in range(n) if j != i]
        vals = []
        for a in range(sizes[i]):
            tot = Fraction(0)
            for rest in itertools.product(*(supp[j] for j in others)):
                w = Fraction(1)
                for j, x in zip(others, rest):
                    w *= sigma[j][x]
                prof = list(rest)
                prof.insert(i, a)
                tot += w * payoffs[tuple(prof)][i]
            vals.append(tot)
        best = max(vals)
        if any(vals[a] != best for a in supp[i]):
            return False
    return True


def support_work(sizes: Sequence[int]) -> int:
    """Support profiles times pure profiles: the size of the flat search."""
    work = 1
    for s in sizes:
        work *= ((1 << s) - 1) * s
    return work


def support_equilibria(payoffs, sizes: Sequence[int]):
    """Isolated mixed equilibria of an n-player game by support enumeration.

    ``payoffs`` maps each pure profile (a tuple of action indices) to a tuple
    of payoffs. Indifference equations are multilinear; they are solved one
    agent at a time once all other unknowns in an equation are fixed.
    Supports whose equations stay coupled, or whose solution is not unique,
    are counted as unresolved. Returns ``(equilibria, unresolved)``.
    """
    per = [[s for k in range(1, size + 1) for s in itertools.combinations(range(size), k)] for size in sizes]
    found, unresolved = set(), 0
    for supp in itertools.product(*per):
        try:
            sigma = _solve_support(payoffs, sizes, supp)
        except _Unresolved:
            unresolved += 1
            continue
        if sigma is not None and _is_equilibrium(payoffs, sizes, sigma):
            found.add(sigma)
    return sorted(found), unresolved
