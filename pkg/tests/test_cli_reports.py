import io
import json

import numpy as np
import pytest

from mdp_defense import init_q_table
from mdp_defense.cli import run
from mdp_defense.reports import (
    format_q,
    load_qtable,
    load_space,
    qtable_text,
    save_qtable,
    save_space,
)

from conftest import PAPER8, TINY1


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("value,text", [
    (0.0, "0.0"), (-0.0, "0.0"), (-4.3, "-4.3"), (-6.19, "-6.19"),
    (-2.0999999999, "-2.1"), (-10.6875, "-10.688"), (-0.0001, "0.0"), (3.0, "3.0"),
])
def test_format_q(value, text):
    assert format_q(value) == text


def test_secure_state_block(space8, oracle8):
    secure = space8.successors(0, space8.action_index("D3"))[0].target
    block = qtable_text(space8, oracle8).split("\n\n")[secure]
    lines = block.splitlines()
    assert lines[0] == f"State {secure}"
    assert lines[1] == "Compromised Hosts: [0]"
    assert "(0, 2)" not in lines[2] and "(0, 1)" in lines[2]
    assert lines[4] == "Q-Values: 0.0, -4.3, -6.0, 0.0, -8.8, -3.5, -5.0"


def test_fresh_table_dumps_zeros(space_tiny):
    text = qtable_text(space_tiny, init_q_table(space_tiny))
    assert text.count("Q-Values: 0.0, 0.0, 0.0") == space_tiny.n_states


def test_space_and_table_round_trip(tmp_path, space8_nopath):
    again = load_space(save_space(space8_nopath, tmp_path / "s.json"))
    assert again.packed == space8_nopath.packed
    assert sorted(again.iter_transitions()) == sorted(space8_nopath.iter_transitions())
    q = init_q_table(space8_nopath)
    q.values[3, 2] = -1.25
    q.update_counts[3, 2] = 7
    q2 = load_qtable(save_qtable(q, tmp_path / "q.npz"))
    assert np.array_equal(q2.values, q.values) and np.array_equal(q2.update_counts, q.update_counts)
    assert q2.actions == q.actions


def test_wrong_format_rejected(tmp_path):
    bad = tmp_path / "x.json"
    bad.write_text(json.dumps({"format": "something-else", "version": 1}))
    with pytest.raises(ValueError):
        load_space(bad)


def test_validate(tmp_path):
    assert cli("validate", PAPER8)[0] == 0
    broken = tmp_path / "b.scenario"
    doc = json.loads(PAPER8.read_text())
    doc["hosts"][0]["vulnerabilities"][0]["cvss"] = 12
    broken.write_text(json.dumps(doc))
    code, out, err = cli("validate", broken)
    assert code == 1
    assert "cvss out of [0,10]" in out
    assert err.startswith("error: validation:")


def test_exit_codes(tmp_path):
    assert cli("train", TINY1, "--epochs", 0, "--out", tmp_path)[0] == 1
    code, _, err = cli("generate", PAPER8, "--state-cap", 10, "--out", tmp_path)
    assert code == 2 and err.startswith("error: resource:")
    code, _, err = cli("solve", tmp_path / "missing.scenario", "--out", tmp_path)
    assert code == 3 and err.startswith("error: io:")


def test_solve_plans(tmp_path):
    code, out, _ = cli("solve", PAPER8, "--out", tmp_path)
    assert code == 0 and "Optimal defense sequence: D3\n" in out
    code, out, _ = cli("solve", PAPER8, "--ignore-attack-path", "--out", tmp_path)
    assert code == 0 and "Optimal defense sequence: D3-D1\n" in out
    code, out, _ = cli("solve", PAPER8, "--format", "csv", "--out", tmp_path)
    assert out.splitlines()[1].startswith("1,D3,")


def test_identical_seeds_identical_csv(tmp_path):
    for d in ("a", "b"):
        assert cli("train", PAPER8, "--epochs", 500, "--seed", 3, "--out", tmp_path / d)[0] == 0
    assert (tmp_path / "a" / "qtable.csv").read_bytes() == (tmp_path / "b" / "qtable.csv").read_bytes()


def test_staged_equals_fused(tmp_path):
    staged, fused = tmp_path / "staged", tmp_path / "fused"
    assert cli("generate", PAPER8, "--ignore-attack-path", "--out", staged)[0] == 0
    assert cli("train", PAPER8, "--ignore-attack-path", "--space", staged / "space.json",
               "--epochs", 800, "--out", staged)[0] == 0
    _, a, _ = cli("solve", PAPER8, "--ignore-attack-path", "--space", staged / "space.json",
                  "--qtable", staged / "qtable.npz", "--epochs", 800, "--out", staged)
    _, b, _ = cli("solve", PAPER8, "--ignore-attack-path", "--epochs", 800, "--out", fused)
    assert a == b
    assert (staged / "plan.csv").read_bytes() == (fused / "plan.csv").read_bytes()


def test_dump_and_sweep_and_bench(tmp_path):
    assert cli("train", TINY1, "--epochs", 100, "--out", tmp_path)[0] == 0
    code, out, _ = cli("dump", TINY1, "--qtable", tmp_path / "qtable.npz", "--out", tmp_path)
    assert code == 0 and out.startswith("State 0\nCompromised Hosts: [0]\n")
    code, out, _ = cli("sweep", PAPER8, "--param", "epochs", "--values", "10,100",
                       "--repetitions", 2, "--out", tmp_path)
    assert code == 0 and out.count("mean_improvement=") == 2
    assert len(list(tmp_path.glob("sweep_epochs_*.csv"))) == 1
    code, out, _ = cli("bench", "--hosts", "2,3", "--epochs", 50, "--out", tmp_path)
    assert code == 0 and (tmp_path / "scaling.csv").exists()
