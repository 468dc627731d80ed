from fractions import Fraction as F

import pytest

from causalgames.counterfactual import abduce, counterfactual, invariant_rules, predict
from causalgames.dsl import parse_query
from causalgames.errors import EmptyAnswerSet, ModelError, QuerySyntaxError
from causalgames.fixtures import GAMES, cpw_pair, job_market
from causalgames.inference import joint
from causalgames.policy import uniform_profile
from causalgames.query import (
    AnswerSet, Intervention, conditional, interventional, prob_target, quantify, resolve_rule, utility_target,
)

from builders import game, var


def answers(*vals) -> AnswerSet:
    return AnswerSet(trace=[(i, F(v)) for i, v in enumerate(vals)])


def test_quantifiers():
    a = answers(1, 3, 3, 5)
    assert quantify(a, "exists", lambda v: v >= 4)
    assert not quantify(a, "forall", lambda v: v >= 4)
    assert quantify(a, "min") == 1 and quantify(a, "max") == 5
    assert quantify(a, "mean") == 3
    assert quantify(a, "mean", prior=[F(1, 2), 0, 0, F(1, 2)]) == 3
    with pytest.raises(ModelError):
        quantify(a, "mean", prior=[1, 1, 0, 0])
    with pytest.raises(EmptyAnswerSet):
        quantify(AnswerSet(), "min")
    assert not quantify(AnswerSet(), "exists", bool)
    assert a.as_set() == {1, 3, 5}


def test_dsl_parses_every_query_kind():
    m = job_market()
    q = parse_query("E[U^1|PI[D1]=always_g]", m)
    assert q.policy_evidence == {"D1": "always_g"} and not q.has_intervention
    q = parse_query("cf E[U^1|do(PI[D1]=always_g);PI[D1]=never_g]", m)
    assert q.cf and q.rule_do == {"D1": "always_g"} and q.policy_evidence == {"D1": "never_g"}
    q = parse_query("cf E[U^1|do(D1=g);obs D1=ng]", m)
    assert q.do == {"D1": "g"} and q.evidence == {"D1": "ng"}


@pytest.mark.parametrize("text, pos", [
    ("E[U^1|D1=zz]", 9),
    ("E[U^1", 5),
    ("E[U^9]", 4),
    ("P(Q=1)", 2),
    ("E[U^1|do(D1=g)] junk", 16),
])
def test_dsl_errors_point_at_the_problem(text, pos):
    with pytest.raises(QuerySyntaxError) as info:
        parse_query(text, job_market())
    assert info.value.pos == pos
    assert info.value.caret().splitlines()[1].index("^") == pos


def test_conditional_and_interventional_answers():
    m = job_market()
    assert conditional(m, [utility_target(1)], {"D1": "g"}).as_set() == {F(7, 2), F(4)}
    ans = interventional(m, [utility_target(1)], Intervention("post", do={"D1": "g"}))
    assert ans.as_set() == {F(-3, 2), F(7, 2)}


def test_zero_probability_evidence_is_skipped():
    m = job_market()
    ans = conditional(m, [utility_target(1)], policy_evidence={"D1": "always_g"})
    for prof, _ in ans.trace:
        assert prof["D1"] == resolve_rule(m, "D1", "always_g")


@pytest.mark.parametrize("name", ["fig1_bn", "job_market", "b2_game1"])
def test_abduction_without_evidence_is_the_prior(name):
    m = GAMES[name]()
    prof = uniform_profile(m)
    post = abduce(m, prof)
    assert post.total() == 1
    assert predict(m, post, prof).marginal(m.names) == joint(m, prof).marginal(m.names)


def test_abduction_conditions_on_evidence():
    m = GAMES["fig1_bn"]()
    prof = uniform_profile(m)
    post = abduce(m, prof, {"B": 1})
    cf = predict(m, post, prof)
    assert cf.prob({"D": 1}) == joint(m, prof).prob({"D": 1}, {"B": 1})


def indifferent_follower():
    """E's utility ignores E, so every rule for E is optimal in every world."""
    return game([
        var("D", "decision", (0, 1), 1),
        var("E", "decision", (0, 1), 2),
        var("U1", "utility", agent=1, parents=["D", "E"]),
        var("U2", "utility", agent=2, parents=["D", "E"]),
    ], {"U1": lambda D, E: D + E, "U2": lambda D, E: D})


def test_principles_differ_when_invariance_matters():
    m = indifferent_follower()
    I = Intervention("pre", rules={"D": resolve_rule(m, "D", "uniform")})
    ev = {"E": "const:0"}
    assert invariant_rules(m, I, "cpw") == {"E"}
    assert invariant_rules(m, I, "simplicity") == set()
    cpw = counterfactual(m, [utility_target(1)], I, policy_evidence=ev, principle="cpw")
    simple = counterfactual(m, [utility_target(1)], I, policy_evidence=ev, principle="simplicity")
    assert cpw.as_set() == {F(1, 2)}
    assert simple.as_set() == {F(1, 2), F(3, 2)}


def test_cpw_pair_principles_agree():
    m = cpw_pair()
    I = Intervention("pre", rules={"D": resolve_rule(m, "D", "uniform_d")})
    for principle in ("simplicity", "cpw"):
        assert counterfactual(m, [utility_target(2)], I, principle=principle).as_set() == {F(5, 2)}
    with pytest.raises(ModelError):
        counterfactual(m, [utility_target(2)], I, principle="other")


def test_probability_target():
    m = job_market()
    ans = conditional(m, [prob_target(D1="g")])
    assert all(0 <= v <= 1 for v in ans)
