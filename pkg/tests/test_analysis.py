from fractions import Fraction as F

import pytest

from causalgames.analysis import (
    Event, blame, cost, instrumental_control_incentive, intent, requisite_observations, response_incentive,
    response_incentive_semantic,
)
from causalgames.errors import ModelError, MultiDecisionUnsupported, SensitivityTooLow
from causalgames.fixtures import job_market
from causalgames.policy import DecisionRule, PolicyProfile

from builders import game, var

B = (0, 1)


def switch():
    """One agent sets D; Y copies D and pays off, Z copies D and does not."""
    return game([
        var("D", "decision", B, 1),
        var("Y", "chance", B, parents=["D"]),
        var("Z", "chance", B, parents=["D"]),
        var("U", "utility", agent=1, parents=["Y"]),
    ], {"Y": lambda D: {D: 1}, "Z": lambda D: {D: 1}, "U": lambda Y: Y})


def chosen(m, a):
    return PolicyProfile({"D": DecisionRule.constant(m, "D", a)})


def test_event_parsing():
    m = switch()
    ev = Event.parse(m, "Y=1 & !(Z=0 | D=0)")
    assert ev({"Y": 1, "Z": 1, "D": 1})
    assert not ev({"Y": 1, "Z": 0, "D": 1})
    assert Event.of(m, {"Y": "1"})({"Y": 1})
    with pytest.raises(ModelError):
        Event.parse(m, "Y=1 &&& ")
    with pytest.raises(ModelError):
        Event.parse(m, "(Y=1")


def test_costs_and_blame():
    m = switch()
    prof = chosen(m, 1)
    assert cost(m, prof, "D", 0) == 1 and cost(m, prof, "D", 1) == 0
    assert blame(m, prof, "D", 0, {"Y": 0}, S=2, alternative=1) == 1
    assert blame(m, prof, "D", 1, {"Y": 1}, S=2, alternative=0) == F(1, 2)
    assert blame(m, prof, "D", 1, {"Y": 1}, S=2) == F(1, 2)
    assert blame(m, prof, "D", 1, {"Y": 0}, S=2) == 0
    with pytest.raises(SensitivityTooLow):
        blame(m, prof, "D", 0, {"Y": 0}, S=1)
    with pytest.raises(ModelError):
        blame(m, prof, "Y", 0, {"Y": 0}, S=2)


def test_intent_separates_goal_from_side_effect():
    m = switch()
    prof = chosen(m, 1)
    goal = intent(m, prof, "D", 1, {"Y": 1})
    assert goal.exists and goal.forall
    # Y or the utility it feeds: fixing either removes the reason to choose 1
    assert goal.settings[0][2] == [frozenset({"Y"}), frozenset({"U"})]
    side = intent(m, prof, "D", 1, {"Z": 1})
    assert not side.exists
    with pytest.raises(ModelError):
        intent(m, prof, "D", 1, {"D": 1})


def observed():
    """D sees X, which matters for U, and W, which does not."""
    return game([
        var("X", "chance", B),
        var("W", "chance", B),
        var("D", "decision", B, 1, ["X", "W"]),
        var("Y", "chance", B, parents=["D"]),
        var("U", "utility", agent=1, parents=["X", "Y"]),
    ], {"X": lambda: {0: F(1, 2), 1: F(1, 2)}, "W": lambda: {0: F(1, 3), 1: F(2, 3)},
        "Y": lambda D: {D: 1}, "U": lambda X, Y: int(X == Y)})


def test_incentives():
    m = observed()
    assert requisite_observations(m) == ("X",)
    assert response_incentive(m, "X") and not response_incentive(m, "W")
    assert not response_incentive(m, "D")
    assert instrumental_control_incentive(m, "Y") and instrumental_control_incentive(m, "U")
    assert not instrumental_control_incentive(m, "X")


def test_response_incentive_agrees_with_semantics():
    m = observed()
    for x in ("X", "W"):
        assert response_incentive(m, x) == response_incentive_semantic(m, x)


def test_single_decision_required():
    with pytest.raises(MultiDecisionUnsupported):
        response_incentive(job_market(), "T")
