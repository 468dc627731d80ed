"""Command-line front end: one command per process.

Exit codes: 0 ok, 1 other library error, 2 unreadable input, 3 enumeration
cap hit, 4 no subgame perfect equilibrium, 5 query syntax, 6 conversion
equivalence failure.
"""

from __future__ import annotations

import argparse
import json
import operator
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import gambit
from .analysis import blame, instrumental_control_incentive, intent, response_incentive
from .counterfactual import PRINCIPLES, counterfactual
from .dsl import parse_query
from .efg import efg2maid, maid2efg, subgame_roots, verify_equivalence
from .equilibrium import has_custom_relations, solve
from .errors import (
    CausalGameError, EfgParseError, ExplosionGuard, InvalidInterventionSets, MappingMismatch,
    ModelError, NoSpeFound, QuerySyntaxError,
)
from .graph import to_dot
from .inference import expected_utilities
from .io import dump_policy, jsonable, load_game, parse_game, save_game
from .mechanism import mechanise, recall, relevance_dot, relevance_graph
from .policy import PolicyProfile
from .query import AnswerSet, Intervention, conditional, interventional, quantify, resolve_rule
from .subgame import enumerate_subdiagrams, instantiate_subgames

EXIT = {
    MappingMismatch: 6, InvalidInterventionSets: 6, QuerySyntaxError: 5,
    NoSpeFound: 4, ExplosionGuard: 3, EfgParseError: 2,
}


class InputError(CausalGameError):
    pass


def fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return str(x)


def short(text: str, full: bool = False, width: int = 160) -> str:
    return text if full or len(text) <= width else text[:width - 4] + " ...)"


def emit(args, text: str, data) -> None:
    if getattr(args, "json", False):
        print(json.dumps(data, indent=1, default=jsonable))
    else:
        print(text)


# loading --------------------------------------------------------------------

def bundled(name: str) -> Path | None:
    stem = Path(name).stem
    ref = resources.files("causalgames") / "games" / f"{stem}.json"
    return Path(str(ref)) if ref.is_file() else None


def load(path: str):
    """Game model from a JSON file, an .efg file, or a bundled game name."""
    p = Path(path)
    if not p.exists():
        alt = bundled(path)
        if alt is None:
            raise InputError(f"{path}: no such file")
        p = alt
    if p.suffix == ".efg":
        return efg2maid(gambit.read(p))[0]
    try:
        return load_game(p)
    except ModelError as exc:
        raise InputError(str(exc)) from exc


def concept(args, m) -> str:
    under = args.under
    if has_custom_relations(m) and under not in (None, "relations") and not under.startswith("file:"):
        print(f"warning: declared relations override --under {under}", file=sys.stderr)
    return under or "ne"


def profile_from_arg(m, text: str) -> PolicyProfile:
    """``file:path`` or ``D1=ref,D2=ref``; missing decisions get uniform rules."""
    if text.startswith("file:"):
        from .io import load_policy
        return load_policy(m, text[5:])
    rules = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        d, _, ref = part.partition("=")
        rules[d] = resolve_rule(m, d, ref)
    for d in m.decisions:
        rules.setdefault(d, resolve_rule(m, d, "uniform"))
    return PolicyProfile(rules)


# commands -------------------------------------------------------------------

def cmd_solve(args) -> int:
    m = load(args.game)
    if not m.decisions:
        emit(args, "no decisions", {"profiles": [], "notes": ["no decisions"]})
        return 0
    under = concept(args, m)
    if under == "ne" and args.policies == "pure":
        under = "pure"
    eq = solve(m, under)
    lines = [f"{len(eq.profiles)} {eq.kind} profile(s)"]
    data = {"kind": eq.kind, "profiles": [], "notes": list(eq.notes), "stage_profiles": eq.stage_profiles}
    for i, prof in enumerate(eq.profiles):
        eus = expected_utilities(m, prof)
        ann = eq.annotations[i] if i < len(eq.annotations) else {}
        lines.append(f"[{i}] " + "  ".join(f"EU{a}={fmt(v)}" for a, v in eus.items())
                     + (f"  family={ann['family']}" if "family" in ann else ""))
        for d, r in prof.rules.items():
            lines.append(f"    {short(repr(r), args.full)}")
        for mp in prof.mixtures:
            lines.append(f"    mixed agent {mp.agent}: "
                         + " + ".join(f"{fmt(w)}*{{{', '.join(repr(r) for _, r in part)}}}" for part, w in mp.support))
        data["profiles"].append({"rules": dump_policy(prof), "utilities": {str(a): v for a, v in eus.items()},
                                 "annotations": ann})
    lines += [f"note: {n}" for n in eq.notes]
    emit(args, "\n".join(lines), data)
    return 0


_OPS = {">=": operator.ge, "<=": operator.le, ">": operator.gt, "<": operator.lt, "==": operator.eq, "=": operator.eq}


def _quantifier(spec: str | None):
    """``exists:>=4`` / ``forall:<0`` / ``min`` / ``max`` / ``mean``."""
    if spec is None:
        return None, None
    mode, _, cond = spec.partition(":")
    if mode in ("exists", "forall"):
        for sym in (">=", "<=", "==", ">", "<", "="):
            if cond.startswith(sym):
                bound = Fraction(cond[len(sym):])
                return mode, (lambda v, f=_OPS[sym], b=bound: f(v, b))
        raise InputError(f"quantifier {spec!r} needs a comparison such as exists:>=4")
    if mode in ("min", "max", "mean"):
        return mode, None
    raise InputError(f"unknown quantifier {spec!r}")


def _answer(m, q, I, under) -> AnswerSet:
    if I:
        return interventional(m, q.targets, I, q.evidence, under=under)
    return conditional(m, q.targets, q.evidence, q.policy_evidence, under=under)


def _intervention(m, q, args) -> Intervention:
    if args.intervene:
        I = Intervention.named(m, args.intervene)
        if args.timing:
            I.timing = args.timing
    else:
        I = Intervention()
    if q.has_intervention:
        timing = args.timing or ("pre" if q.rule_do else "post")
        rules = {d: resolve_rule(m, d, ref) for d, ref in q.rule_do.items()}
        I = Intervention(timing, {**I.do, **q.do}, {**I.rules, **rules}, I.cpds, I.constant_in, I.remove_edges)
    return I


def _report(args, ans: AnswerSet, base: AnswerSet | None = None) -> int:
    mode, pred = _quantifier(args.quantify)
    lines = ["{" + ", ".join(fmt(v) for v in ans.values) + "}"]
    data = {"values": ans.values, "trace": [{"outcome": dump_policy(p) if isinstance(p, PolicyProfile) else
                                             [dump_policy(x) for x in p], "value": v} for p, v in ans.trace],
            "notes": ans.notes}
    for p, v in ans.trace:
        if isinstance(p, PolicyProfile):
            lines.append(f"  {fmt(v)} <- {p!r}")
        else:
            lines.append(f"  {fmt(v)} <- actual {p[0]!r} / counterfactual {p[1]!r}")
    lines += [f"note: {n}" for n in ans.notes]
    if mode:
        res = quantify(ans, mode, pred)
        data["quantified"] = res
        lines.append(f"{mode}: {fmt(res)}")
        if base is not None and mode in ("min", "max", "mean"):
            ref = quantify(base, mode, pred)
            data["baseline"] = ref
            data["delta"] = res - ref
            lines.append(f"baseline {mode}: {fmt(ref)}")
            lines.append(f"delta: {fmt(res - ref)} ({float(res - ref):.3f})")
    emit(args, "\n".join(lines), data)
    return 0


def cmd_query(args) -> int:
    m = load(args.game)
    q = parse_query(args.query, m)
    under = concept(args, m)
    if q.cf:
        return _cf(args, m, q, under)
    I = _intervention(m, q, args)
    ans = _answer(m, q, I, under)
    base = _answer(m, q, Intervention(), under) if args.intervene else None
    return _report(args, ans, base)


def _cf(args, m, q, under) -> int:
    I = _intervention(m, q, args)
    ans = counterfactual(m, q.targets, I, q.evidence, q.policy_evidence, args.principle, under)
    return _report(args, ans)


def cmd_cf(args) -> int:
    m = load(args.game)
    text = args.query if args.query.lstrip().startswith("cf") else "cf " + args.query
    q = parse_query(text, m)
    return _cf(args, m, q, concept(args, m))


def cmd_convert(args) -> int:
    src, dst = Path(args.input), Path(args.output)
    if src.suffix == ".efg":
        e = gambit.read(src)
        m, mapping = efg2maid(e)
        rep = verify_equivalence(e, m, mapping)
        save_game(m, dst)
    else:
        m = load(str(src))
        order = args.order.split(",") if args.order else None
        e, mapping = maid2efg(m, args.split, order)
        rep = verify_equivalence(e, m, mapping)
        gambit.write(e, dst)
    msg = f"equivalence PASS ({rep.profiles} profiles, {rep.ne_checks} Nash checks)"
    print(msg, file=sys.stderr)
    emit(args, f"wrote {dst}", {"output": str(dst), "profiles": rep.profiles, "ne_checks": rep.ne_checks})
    return 0


def cmd_subgames(args) -> int:
    if Path(args.game).suffix == ".efg":
        e = gambit.read(args.game)
        roots = subgame_roots(e)
        emit(args, f"{len(roots)} proper subgame(s) rooted at {roots}", {"roots": roots})
        return 0
    m = load(args.game)
    lines, data = [], []
    for sd in enumerate_subdiagrams(m, args.criterion, full=not args.lattice):
        subs = instantiate_subgames(m, sd)
        feas = [s for s in subs if s.feasible]
        tag = "improper" if not sd.proper else ("minimal" if sd.minimal else "proper")
        lines.append(f"{{{', '.join(sd.sorted_nodes(m))}}} [{tag}] {len(feas)}/{len(subs)} feasible subgame(s)")
        for s in feas:
            lines.append("    " + (", ".join(f"{k}={fmt(v)}" for k, v in s.context.items()) or "(no context)"))
        data.append({"nodes": list(sd.sorted_nodes(m)), "proper": sd.proper, "minimal": sd.minimal,
                     "subgames": [{"context": s.context, "feasible": s.feasible} for s in subs]})
    emit(args, "\n".join(lines), data)
    return 0


def cmd_relevance(args) -> int:
    m = load(args.game)
    if args.dot:
        print(relevance_dot(m, args.criterion, decisions_only=not args.all))
        return 0
    g = relevance_graph(m, args.criterion, decisions_only=not args.all)
    edges = [list(e) for e in g.edges]
    emit(args, "\n".join(f"{a} -> {b}" for a, b in edges) or "(no edges)", {"edges": edges})
    return 0


def cmd_recall(args) -> int:
    m = load(args.game)
    r = recall(m)
    emit(args, "\n".join(f"agent {a}: {v}" for a, v in r.items()), {str(a): v for a, v in r.items()})
    return 0


def cmd_blame(args) -> int:
    m = load(args.game)
    prof = profile_from_arg(m, args.policy)
    v = blame(m, prof, args.decision, args.action, args.event, Fraction(args.S), args.alt)
    emit(args, fmt(v), {"blame": v})
    return 0


def cmd_intent(args) -> int:
    m = load(args.game)
    prof = profile_from_arg(m, args.policy)
    target = dict(part.split("=", 1) for part in args.target.split(","))
    alts = args.alt.split(",") if args.alt else None
    r = intent(m, prof, args.decision, args.action, target, alts)
    witness = sorted(r.witness) if r.witness is not None else None
    lines = [f"exists: {r.exists}", f"forall: {r.forall}", f"minimal Z: {witness}"]
    data = {"exists": r.exists, "forall": r.forall, "witness": witness, "possible": r.possible,
            "optimal": r.optimal,
            "settings": [{"weight": w, "values": vals, "minimal": [sorted(z) for z in mins], "intends": ok}
                         for w, vals, mins, ok in r.settings]}
    emit(args, "\n".join(lines), data)
    return 0


def cmd_ri(args) -> int:
    m = load(args.game)
    v = response_incentive(m, args.variable)
    emit(args, str(v).lower(), {"response_incentive": v})
    return 0


def cmd_ici(args) -> int:
    m = load(args.game)
    v = instrumental_control_incentive(m, args.variable)
    emit(args, str(v).lower(), {"instrumental_control_incentive": v})
    return 0


def cmd_dot(args) -> int:
    m = load(args.game)
    if args.mechanised:
        print(mechanise(m, args.criterion).dot())
    else:
        print(to_dot(m.graph, {v: m[v].kind for v in m.names}))
    return 0


# parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="causalgames", description="Exact solvers and queries for causal games.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("game", help="game JSON, .efg file, or bundled game name")
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.set_defaults(fn=fn)
        return sp

    s = add("solve", cmd_solve, "list equilibria")
    s.add_argument("--concept", dest="under", choices=["ne", "pure", "spe", "thpe", "flat"])
    s.add_argument("--under", dest="under", choices=["ne", "pure", "spe", "thpe", "flat"])
    s.add_argument("--policies", choices=["pure", "behavioural"], default="behavioural")
    s.add_argument("--full", action="store_true", help="print decision rules without truncation")

    for name, fn in (("query", cmd_query), ("cf", cmd_cf)):
        s = add(name, fn, "answer a query" if name == "query" else "answer a counterfactual query")
        s.add_argument("query")
        s.add_argument("--under", help="ne | pure | spe | thpe | file:<policy.json>")
        s.add_argument("--timing", choices=["pre", "post"])
        s.add_argument("--quantify", help="exists:<op><bound> | forall:<op><bound> | min | max | mean")
        s.add_argument("--intervene", help="named intervention declared in the game file")
        s.add_argument("--principle", choices=PRINCIPLES, default="simplicity")

    s = sub.add_parser("convert", help="convert between game JSON and Gambit .efg")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--split", choices=["full", "reduced"], default="full")
    s.add_argument("--order", help="comma-separated topological order")
    s.add_argument("--json", action="store_true")
    s.set_defaults(fn=cmd_convert)

    s = add("subgames", cmd_subgames, "enumerate subdiagrams and subgames")
    s.add_argument("--criterion", default="s", choices=["s", "br"])
    s.add_argument("--lattice", action="store_true", help="only unions of decision closures")

    s = add("relevance", cmd_relevance, "relevance graph")
    s.add_argument("--criterion", default="s", choices=["s", "br"])
    s.add_argument("--all", action="store_true", help="include non-decision mechanisms")
    s.add_argument("--dot", action="store_true")

    add("recall", cmd_recall, "perfect / sufficient recall per agent")

    s = add("blame", cmd_blame, "degree of blameworthiness")
    s.add_argument("--policy", required=True, help="D1=ref,D2=ref or file:<policy.json>")
    s.add_argument("--decision", required=True)
    s.add_argument("--action", required=True)
    s.add_argument("--alt")
    s.add_argument("--event", required=True, help="e.g. 'B=b & !D2=p'")
    s.add_argument("--S", required=True, help="cost sensitivity")

    s = add("intent", cmd_intent, "intention check")
    s.add_argument("--policy", required=True)
    s.add_argument("--decision", required=True)
    s.add_argument("--action", required=True)
    s.add_argument("--target", required=True, help="Y=y[,Y2=y2]")
    s.add_argument("--alt", help="comma-separated alternative actions")

    for name, fn in (("ri", cmd_ri), ("ici", cmd_ici)):
        s = add(name, fn, "response incentive" if name == "ri" else "instrumental control incentive")
        s.add_argument("variable")

    s = add("dot", cmd_dot, "Graphviz export")
    s.add_argument("--mechanised", action="store_true")
    s.add_argument("--criterion", default="s", choices=["s", "br"])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except QuerySyntaxError as exc:
        print(exc.caret(), file=sys.stderr)
        return 5
    except (InputError, EfgParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CausalGameError as exc:
        code = next((c for t, c in EXIT.items() if isinstance(exc, t)), 1)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
