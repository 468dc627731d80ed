"""Text queries for the command line.

    P(X=x, Y=y | Z=z, do(D=d))
    E[U^1 | D1=g]                 utility of agent 1
    E[U1 | PI[D1]=always_g]        mechanism evidence
    E[U1 | do(PI[D1]=lottery)]     rule intervention
    cf E[U1 | do(D1=g); obs D1=ng] counterfactual
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ModelError, QuerySyntaxError
from .io import _value
from .model import GameModel
from .query import Target, expect_target, prob_target, utility_target

_TOKEN = re.compile(r"\s*(?:([()\[\]|,;=^])|([^\s()\[\]|,;=^]+))")


@dataclass
class ParsedQuery:
    text: str
    cf: bool = False
    targets: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)
    policy_evidence: dict = field(default_factory=dict)
    do: dict = field(default_factory=dict)
    rule_do: dict = field(default_factory=dict)

    @property
    def has_intervention(self) -> bool:
        return bool(self.do or self.rule_do)


def _tokenize(text: str) -> list[tuple[str, int]]:
    toks, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise QuerySyntaxError("unexpected character", text, pos)
        start = m.start(1) if m.group(1) else m.start(2)
        toks.append((m.group(1) or m.group(2), start))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text: str, m: GameModel | None):
        self.text = text
        self.m = m
        self.toks = _tokenize(text)
        self.i = 0

    def fail(self, msg, pos=None):
        if pos is None:
            pos = self.toks[self.i][1] if self.i < len(self.toks) else len(self.text)
        raise QuerySyntaxError(msg, self.text, pos)

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self, want=None):
        if self.i >= len(self.toks):
            self.fail(f"expected {want!r}" if want else "unexpected end of query")
        tok, pos = self.toks[self.i]
        if want is not None and tok != want:
            self.fail(f"expected {want!r}")
        self.i += 1
        return tok, pos

    def word(self, what="a name"):
        tok, pos = self.take()
        if tok in "()[]|,;=^":
            self.fail(f"expected {what}", pos)
        return tok, pos

    # semantic checks -------------------------------------------------
    def var(self, name, pos, kind=None):
        if self.m is None:
            return name
        if name not in self.m.variables:
            self.fail(f"unknown variable {name!r}", pos)
        if kind and self.m[name].kind != kind:
            self.fail(f"{name} is not a {kind} variable", pos)
        return name

    def value(self, var, raw, pos):
        if self.m is None:
            return raw
        try:
            return _value(self.m.domain(var), raw, self.m[var].kind)
        except ModelError:
            self.fail(f"{raw!r} is not a value of {var}", pos)

    # grammar -----------------------------------------------------------
    def assign(self):
        name, pos = self.word("a variable")
        self.var(name, pos)
        self.take("=")
        raw, vpos = self.word("a value")
        return name, self.value(name, raw, vpos)

    def policy_target(self):
        self.take("PI")
        self.take("[")
        name, pos = self.word("a decision")
        self.var(name, pos, "decision")
        self.take("]")
        self.take("=")
        ref, _ = self.word("a policy reference")
        return name, ref

    def cond(self, q: ParsedQuery):
        tok = self.peek()
        if tok == "do":
            self.take()
            self.take("(")
            if self.peek() == "PI":
                d, ref = self.policy_target()
                q.rule_do[d] = ref
            else:
                v, x = self.assign()
                q.do[v] = x
            self.take(")")
        elif tok == "obs":
            self.take()
            v, x = self.assign()
            q.evidence[v] = x
        elif tok == "PI":
            d, ref = self.policy_target()
            q.policy_evidence[d] = ref
        else:
            v, x = self.assign()
            q.evidence[v] = x

    def conds(self, q, close):
        if self.peek() != "|":
            return
        self.take("|")
        self.cond(q)
        while self.peek() in (",", ";"):
            self.take()
            self.cond(q)
        if self.peek() != close:
            self.fail(f"expected {close!r}")

    def target_var(self) -> Target:
        name, pos = self.word("a variable")
        if self.peek() == "^":
            self.take()
            agent, apos = self.word("an agent")
            try:
                agent = int(agent)
            except ValueError:
                pass
            if self.m is not None and agent not in self.m.agents:
                self.fail(f"unknown agent {agent!r}", apos)
            return utility_target(agent)
        self.var(name, pos)
        return expect_target(name)

    def parse(self) -> ParsedQuery:
        q = ParsedQuery(self.text)
        if not self.toks:
            self.fail("empty query")
        if self.peek() == "cf":
            self.take()
            q.cf = True
        head, pos = self.word("P or E")
        if head == "P":
            self.take("(")
            event = dict([self.assign()])
            while self.peek() == ",":
                self.take()
                v, x = self.assign()
                event[v] = x
            self.conds(q, ")")
            self.take(")")
            q.targets.append(prob_target(**event))
        elif head == "E":
            self.take("[")
            q.targets.append(self.target_var())
            self.conds(q, "]")
            self.take("]")
        else:
            self.fail("query must start with P( or E[", pos)
        if self.i != len(self.toks):
            self.fail("trailing input")
        return q


def parse_query(text: str, m: GameModel | None = None) -> ParsedQuery:
    """Parse ``text``; with a model, names and values are checked and typed."""
    return _Parser(text, m).parse()


__all__ = ["ParsedQuery", "parse_query"]
