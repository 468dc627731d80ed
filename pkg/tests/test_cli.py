import json

import pytest

from causalgames.cli import main
from causalgames.fixtures import c2_family
from causalgames.io import save_game

from builders import game, var
from test_efg import TINY, SETS


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_bundled_game(capsys):
    code, out, _ = run(capsys, "solve", "job_market", "--under", "pure")
    assert code == 0 and "D1" in out


def test_solve_json_output(capsys):
    code, out, _ = run(capsys, "solve", "b2_game1", "--under", "spe", "--json")
    assert code == 0
    data = json.loads(out)
    assert data


def test_query_table_of_answers(capsys):
    code, out, _ = run(capsys, "query", "job_market", "E[U^1|do(D1=g)]")
    assert code == 0 and "-3/2" in out and "7/2" in out


def test_counterfactual_query(capsys):
    code, out, _ = run(capsys, "cf", "job_market", "cf E[U^1|do(PI[D1]=always_g);PI[D1]=never_g]")
    assert code == 0 and "7/2" in out


def test_query_quantifier(capsys):
    code, out, _ = run(capsys, "query", "job_market", "E[U^1|do(D1=g)]", "--quantify", "min")
    assert code == 0 and "-3/2" in out


def test_query_syntax_error_exit_code(capsys):
    code, _, err = run(capsys, "query", "job_market", "E[U^1|D1=zz]")
    assert code == 5 and "^" in err


def test_missing_file_exit_code(capsys, tmp_path):
    code, _, err = run(capsys, "solve", str(tmp_path / "absent.json"))
    assert code == 2 and err


def test_invalid_game_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"variables": [{"name": "X", "kind": "chance"}]}))
    code, _, _ = run(capsys, "solve", str(path))
    assert code == 2


def test_explosion_guard_exit_code(capsys, tmp_path):
    path = tmp_path / "c2_k4.json"
    save_game(c2_family(4), path)
    code, _, err = run(capsys, "solve", str(path), "--under", "flat")
    assert code == 3 and err


def test_no_spe_exit_code(capsys):
    code, _, _ = run(capsys, "solve", "b2_game2", "--under", "spe")
    assert code == 4


def test_convert_round_trip(capsys, tmp_path):
    efg = tmp_path / "jm.efg"
    back = tmp_path / "jm.json"
    code, _, err = run(capsys, "convert", "job_market", str(efg))
    assert code == 0 and "equivalence PASS" in err
    code, _, err = run(capsys, "convert", str(efg), str(back))
    assert code == 0 and back.exists()


def test_convert_invalid_sets_exit_code(capsys, tmp_path):
    efg = tmp_path / "tiny.efg"
    efg.write_text(TINY)
    code, _, _ = run(capsys, "convert", str(efg), str(tmp_path / "out.json"))
    assert code == 6
    (tmp_path / "tiny.sets.json").write_text(json.dumps({"intervention_sets": SETS}))
    code, _, _ = run(capsys, "convert", str(efg), str(tmp_path / "out.json"))
    assert code == 0


def test_bad_efg_exit_code(capsys, tmp_path):
    efg = tmp_path / "broken.efg"
    efg.write_text("EFG 2 R")
    code, _, _ = run(capsys, "convert", str(efg), str(tmp_path / "out.json"))
    assert code == 2


def test_graph_commands(capsys):
    for argv in (["subgames", "warehouse"], ["relevance", "job_market", "--dot"], ["recall", "b2_game1"],
                 ["dot", "job_market", "--mechanised"]):
        code, out, _ = run(capsys, *argv)
        assert code == 0 and out


def test_analysis_commands(capsys, tmp_path):
    m = game([
        var("X", "chance", (0, 1)),
        var("D", "decision", (0, 1), 1, ["X"]),
        var("U", "utility", agent=1, parents=["X", "D"]),
    ], {"X": lambda: {0: "1/2", 1: "1/2"}, "U": lambda X, D: int(X == D)})
    path = tmp_path / "single.json"
    save_game(m, path)
    code, out, _ = run(capsys, "ri", str(path), "X")
    assert code == 0 and out.strip() == "true"
    code, out, _ = run(capsys, "ici", str(path), "U")
    assert code == 0 and out.strip() == "true"
    code, out, _ = run(capsys, "ici", str(path), "X")
    assert code == 0 and out.strip() == "false"
    code, out, _ = run(capsys, "blame", "job_market", "--policy", "D1=always_g", "--decision", "D1",
                       "--action", "g", "--event", "D1=g", "--S", "100")
    assert code == 0 and out


def test_game_without_decisions(capsys):
    code, out, _ = run(capsys, "solve", "fig1_bn")
    assert code == 0


def test_usage_error():
    with pytest.raises(SystemExit):
        main(["nonsense"])
