"""Extensive-form game trees and the Gambit ``.efg`` text format (EFG 2 R).

Intervention sets have no slot in the Gambit format, so they travel in a
sidecar JSON file next to the ``.efg`` file.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import EfgError, EfgParseError


@dataclass
class EfgNode:
    kind: str  # "chance" | "decision" | "leaf"
    name: str = ""
    player: int = 0
    iset: int = 0
    actions: tuple = ()
    probs: tuple = ()
    children: list = field(default_factory=list)
    payoff: tuple = ()
    parent: int | None = None


@dataclass
class Efg:
    """Game tree with nodes stored in preorder; node 0 is the root."""

    players: tuple
    nodes: list
    title: str = ""
    # name -> node ids; all members of one set share a kind
    intervention_sets: dict = field(default_factory=dict)

    @property
    def root(self) -> EfgNode:
        return self.nodes[0]

    def infosets(self) -> dict[tuple[int, int], list[int]]:
        out: dict = {}
        for i, n in enumerate(self.nodes):
            if n.kind == "decision":
                out.setdefault((n.player, n.iset), []).append(i)
        return out

    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.kind == "leaf"]

    def path(self, i: int) -> list[tuple[int, str]]:
        """(node, outgoing label) pairs from the root down to node ``i``."""
        out = []
        while self.nodes[i].parent is not None:
            p = self.nodes[i].parent
            out.append((p, self.nodes[p].actions[self.nodes[p].children.index(i)]))
            i = p
        return out[::-1]

    def subtree(self, i: int) -> list[int]:
        out, todo = [], [i]
        while todo:
            k = todo.pop()
            out.append(k)
            todo.extend(self.nodes[k].children)
        return sorted(out)

    def check(self) -> None:
        for key, members in self.infosets().items():
            acts = {self.nodes[i].actions for i in members}
            if len(acts) != 1:
                raise EfgError(f"information set {key} mixes action sets {sorted(acts)}")
        for i, n in enumerate(self.nodes):
            if n.kind == "chance" and sum(n.probs, Fraction(0)) != 1:
                raise EfgError(f"chance node {i} probabilities do not sum to 1")
            if n.kind == "leaf" and len(n.payoff) != len(self.players):
                raise EfgError(f"leaf {i} has {len(n.payoff)} payoffs for {len(self.players)} players")
            if n.kind != "leaf" and len(n.children) != len(n.actions):
                raise EfgError(f"node {i} has {len(n.children)} children for {len(n.actions)} actions")


# writing -----------------------------------------------------------------

def _q(s) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _num(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def dumps(e: Efg) -> str:
    lines = [f"EFG 2 R {_q(e.title)} {{ " + " ".join(_q(f'Player {p}') for p in e.players) + " }", '""', ""]
    outcome = 0
    chance_iset = 0

    def emit(i):
        nonlocal outcome, chance_iset
        n = e.nodes[i]
        if n.kind == "chance":
            chance_iset += 1
            body = " ".join(f"{_q(a)} {_num(p)}" for a, p in zip(n.actions, n.probs))
            lines.append(f"c {_q(n.name)} {chance_iset} {_q(n.name)} {{ {body} }} 0")
        elif n.kind == "decision":
            acts = " ".join(_q(a) for a in n.actions)
            pl = e.players.index(n.player) + 1
            lines.append(f"p {_q(n.name)} {pl} {n.iset} {_q(n.name)} {{ {acts} }} 0")
        else:
            outcome += 1
            pay = ", ".join(_num(u) for u in n.payoff)
            lines.append(f"t {_q(n.name)} {outcome} \"\" {{ {pay} }}")
        for c in n.children:
            emit(c)

    emit(0)
    return "\n".join(lines) + "\n"


# reading -----------------------------------------------------------------

_TOKEN = re.compile(r'"((?:[^"\\]|\\.)*)"|([{}])|([^\s{}",]+)|,')


def _tokens(text: str):
    for m in _TOKEN.finditer(text):
        if m.group(1) is not None:
            yield ("str", re.sub(r"\\(.)", r"\1", m.group(1)))
        elif m.group(2) is not None:
            yield (m.group(2), m.group(2))
        elif m.group(3) is not None:
            yield ("atom", m.group(3))


def _fraction(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise EfgParseError(f"bad number {tok!r}") from None


class _Reader:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, kind=None):
        tok = self.peek()
        if tok[0] is None:
            raise EfgParseError("unexpected end of file")
        if kind is not None and tok[0] != kind:
            raise EfgParseError(f"expected {kind}, got {tok[1]!r}")
        self.i += 1
        return tok[1]

    def strings_in_braces(self) -> list[str]:
        self.take("{")
        out = []
        while self.peek()[0] != "}":
            out.append(self.take("str"))
        self.take("}")
        return out

    def numbers_in_braces(self) -> list[Fraction]:
        self.take("{")
        out = []
        while self.peek()[0] != "}":
            out.append(_fraction(self.take("atom")))
        self.take("}")
        return out


def loads(text: str) -> Efg:
    r = _Reader(text)
    if r.peek() != ("atom", "EFG") or len(r.toks) < 3:
        raise EfgParseError("missing 'EFG 2 R' header")
    r.take()
    if r.take("atom") != "2" or r.take("atom") not in ("R", "D"):
        raise EfgParseError("only 'EFG 2 R' / 'EFG 2 D' files are supported")
    title = r.take("str")
    names = r.strings_in_braces()
    if r.peek()[0] == "str":
        r.take()
    players = tuple(range(1, len(names) + 1))
    nodes: list[EfgNode] = []
    isets: dict = {}
    outcomes: dict[int, tuple] = {}
    stack: list[int] = []  # nodes still waiting for children

    def attach(idx):
        if stack:
            parent = stack[-1]
            nodes[idx].parent = parent
            nodes[parent].children.append(idx)
            if len(nodes[parent].children) == len(nodes[parent].actions):
                stack.pop()

    def outcome_payoff():
        num = int(r.take("atom"))
        pay = ()
        if r.peek()[0] == "str":
            r.take()
        if r.peek()[0] == "{":
            pay = tuple(r.numbers_in_braces())
            outcomes[num] = pay
        elif num:
            pay = outcomes.get(num, ())
        return num, pay

    while r.peek()[0] is not None:
        kind = r.take("atom")
        name = r.take("str")
        if kind == "c":
            r.take("atom")
            if r.peek()[0] == "str":
                r.take()
            r.take("{")
            acts, probs = [], []
            while r.peek()[0] != "}":
                acts.append(r.take("str"))
                probs.append(_fraction(r.take("atom")))
            r.take("}")
            outcome_payoff()
            node = EfgNode("chance", name, 0, 0, tuple(acts), tuple(probs))
        elif kind == "p":
            player = int(r.take("atom"))
            iset = int(r.take("atom"))
            if player not in players:
                raise EfgParseError(f"unknown player {player}")
            if r.peek()[0] == "str":
                r.take()
            if r.peek()[0] == "{":
                acts = tuple(r.strings_in_braces())
                isets[(player, iset)] = acts
            elif (player, iset) in isets:
                acts = isets[(player, iset)]
            else:
                raise EfgParseError(f"information set {(player, iset)} used before its actions")
            outcome_payoff()
            node = EfgNode("decision", name, player, iset, acts)
        elif kind == "t":
            _, pay = outcome_payoff()
            if len(pay) != len(players):
                raise EfgParseError("terminal node needs one payoff per player")
            node = EfgNode("leaf", name, payoff=pay)
        else:
            raise EfgParseError(f"unknown node type {kind!r}")
        nodes.append(node)
        attach(len(nodes) - 1)
        if node.kind != "leaf":
            if not node.actions:
                raise EfgParseError("non-terminal node without actions")
            stack.append(len(nodes) - 1)
    if not nodes:
        raise EfgParseError("no nodes")
    if stack:
        raise EfgParseError("tree ends before every branch is filled")
    e = Efg(players, nodes, title)
    try:
        e.check()
    except EfgError as exc:
        raise EfgParseError(str(exc)) from exc
    return e


# sidecar ---------------------------------------------------------------

def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.stem + ".sets.json")


def write(e: Efg, path) -> None:
    Path(path).write_text(dumps(e), encoding="utf-8")
    if e.intervention_sets:
        sidecar_path(path).write_text(json.dumps({"intervention_sets": e.intervention_sets}, indent=1) + "\n",
                                      encoding="utf-8")


def read(path) -> Efg:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise EfgParseError(str(exc)) from exc
    e = loads(text)
    side = sidecar_path(path)
    if side.exists():
        data = json.loads(side.read_text(encoding="utf-8"))
        e.intervention_sets = {k: list(v) for k, v in data.get("intervention_sets", {}).items()}
    return e


__all__ = ["Efg", "EfgNode", "dumps", "loads", "read", "write", "sidecar_path"]
