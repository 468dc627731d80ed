import copy
import json
from fractions import Fraction as F
from importlib import resources

import pytest

from causalgames.errors import (
    MissingCpd, ModelError, RowNotNormalized, UnknownKey, UtilityHasChild,
)
from causalgames.fixtures import GAMES, fig1_bn, job_market
from causalgames.inference import joint, prob_ve
from causalgames.io import dump_game, dump_policy, load_game, load_policy, parse_game, save_game
from causalgames.model import restrict, to_structural
from causalgames.policy import PolicyProfile, uniform_profile

TINY = {
    "agents": [1],
    "variables": [
        {"name": "X", "kind": "chance", "domain": [0, 1]},
        {"name": "D", "kind": "decision", "domain": ["a", "b"], "agent": 1, "parents": ["X"]},
        {"name": "U", "kind": "utility", "agent": 1, "parents": ["X", "D"]},
    ],
    "cpds": [
        {"child": "X", "rows": [{"given": {}, "dist": {"0": "1/3", "1": "2/3"}}]},
        {"child": "U", "rows": [
            {"given": {"X": 0, "D": "a"}, "value": 1},
            {"given": {"X": 0, "D": "b"}, "value": 0},
            {"given": {"X": 1, "D": "a"}, "value": 0},
            {"given": {"X": 1, "D": "b"}, "value": "3/2"},
        ]},
    ],
}


def normalised(data) -> dict:
    return json.loads(json.dumps(data, default=str))


def test_tiny_game_parses():
    m = parse_game(TINY)
    assert m.decisions == ("D",)
    assert m.domain("U") == (F(0), F(1), F(3, 2))
    assert m.cpds["X"].dist(())[1] == F(2, 3)


@pytest.mark.parametrize("mutate, error", [
    (lambda d: d["cpds"][0]["rows"][0]["dist"].update({"1": "1/3"}), RowNotNormalized),
    (lambda d: d["cpds"].pop(0), MissingCpd),
    (lambda d: d["variables"][0].update({"parents": ["D"]}), ModelError),
    (lambda d: d["variables"][0].update({"colour": "red"}), UnknownKey),
    (lambda d: d["variables"].append(dict(d["variables"][0])), ModelError),
    (lambda d: d["cpds"][1]["rows"].pop(), MissingCpd),
    (lambda d: d["cpds"][0]["rows"][0]["dist"].update({"7": "0"}), ModelError),
])
def test_validation_errors(mutate, error):
    data = copy.deepcopy(TINY)
    mutate(data)
    with pytest.raises(error):
        parse_game(data)


def test_utility_with_child_rejected():
    data = copy.deepcopy(TINY)
    data["variables"].append({"name": "Y", "kind": "chance", "domain": [0], "parents": ["U"]})
    data["cpds"].append({"child": "Y", "rows": [{"given": {"U": u}, "value": 0} for u in ("0", "1", "3/2")]})
    with pytest.raises(UtilityHasChild):
        parse_game(data)


@pytest.mark.parametrize("name", sorted(GAMES))
def test_roundtrip_through_json(name, tmp_path):
    m = GAMES[name]()
    path = tmp_path / f"{name}.json"
    save_game(m, path)
    again = load_game(path)
    assert normalised(dump_game(again)) == normalised(dump_game(m))


@pytest.mark.parametrize("name", sorted(GAMES))
def test_bundled_files_match_builders(name):
    text = resources.files("causalgames").joinpath("games", f"{name}.json").read_text(encoding="utf-8")
    assert normalised(json.loads(text)) == normalised(dump_game(GAMES[name]()))


def test_invalid_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ModelError):
        load_game(path)


def test_policy_roundtrip(tmp_path):
    m = job_market()
    prof = uniform_profile(m)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(dump_policy(prof)))
    back = load_policy(m, path)
    assert back == prof


def test_fig1_marginals():
    m = fig1_bn()
    j = joint(m, PolicyProfile({}))
    # P(D=1) = 2/5 * 3/4 + 3/5 * 1/5
    assert j.prob({"D": 1}) == F(2, 5) * F(3, 4) + F(3, 5) * F(1, 5)
    assert j.prob({"C": 1}, {"D": 1}) == F(2, 5) * F(3, 4) / j.prob({"D": 1})


@pytest.mark.parametrize("name", ["fig1_bn", "job_market", "b2_game2", "warehouse"])
def test_variable_elimination_matches_enumeration(name):
    m = GAMES[name]()
    prof = uniform_profile(m)
    j = joint(m, prof)
    names = [n for n in m.names if m[n].kind != "utility"][:3]
    for event_name in names:
        for val in m.domain(event_name):
            ev = {event_name: val}
            assert prob_ve(m, prof, ev) == j.prob(ev)
            for other in names:
                if other == event_name:
                    continue
                for w in m.domain(other):
                    if j.prob({other: w}):
                        assert prob_ve(m, prof, ev, {other: w}) == j.prob(ev, {other: w})


@pytest.mark.parametrize("name", ["fig1_bn", "job_market", "b2_game1"])
def test_structural_lift_preserves_marginal(name):
    m = GAMES[name]()
    ms = to_structural(m)
    assert ms.level == "structural"
    prof = uniform_profile(m)
    a, b = joint(m, prof), joint(ms, prof)
    assert a.marginal(m.names) == b.marginal(m.names)


def test_restrict_plugs_in_context():
    m = fig1_bn()
    sub = restrict(m, ["A", "B"], {"C": 1, "D": 0})
    j = joint(sub, PolicyProfile({}))
    assert j.prob({"A": 1}) == F(2, 6)
    assert j.prob({"B": 1}) == F(1, 4)
