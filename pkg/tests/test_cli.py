"""Command-line behavior: exit codes, emitted files, certificate output."""

from pathlib import Path

import numpy as np
import pytest

from ddiss.cli import main
from ddiss.signals import DataDictionary, Trajectory, save_dictionary

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SERVO_PLANT = str(CONFIGS / "servo_plant.toml")
SERVO_LOOP = str(CONFIGS / "servo_interconnection.toml")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def servo_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "servo.csv"
    code = run("simulate", "--model", SERVO_PLANT, "--L", 300, "--seed", 0,
               "--out", path)
    assert code == 0
    return str(path)


def test_simulate_then_diagnose(servo_csv, capsys):
    code = run("diagnose", "--data", servo_csv, "--L", 8, "--state-dim", 1)
    out = capsys.readouterr().out
    assert code == 0
    assert "persistently exciting at order 8: yes" in out
    assert "span rank reaches n_u*L + n_x = 9: yes" in out
    assert "leading singular values:" in out


def test_check_certifies_above_gain(servo_csv, tmp_path, capsys):
    cert_path = tmp_path / "cert.txt"
    code = run("check", "--data", servo_csv, "--model", SERVO_LOOP,
               "--gamma", 1.2, "--L", 20, "--nu", 3, "--lag-bound", 1,
               "--out", cert_path)
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("verdict: dissipative")
    assert cert_path.read_text() == out


def test_check_refuses_below_gain(servo_csv, capsys):
    code = run("check", "--data", servo_csv, "--model", SERVO_LOOP,
               "--gamma", 0.5, "--L", 20, "--nu", 3, "--lag-bound", 1)
    assert code == 1
    assert "not-certified" in capsys.readouterr().out


def test_check_nu_policy_exit_3(servo_csv, capsys):
    code = run("check", "--data", servo_csv, "--model", SERVO_LOOP,
               "--gamma", 1.2, "--L", 20, "--nu", 1, "--lag-bound", 1)
    assert code == 3
    err = capsys.readouterr().err
    assert "prefix 1 below max(plant lag bound 1, interconnection lag 1 + 1)" in err


def test_check_needs_supply(servo_csv):
    assert run("check", "--data", servo_csv, "--model", SERVO_LOOP,
               "--L", 20, "--nu", 3) == 3


def test_check_wrong_file_kind_exit_2(servo_csv):
    supply = str(CONFIGS / "supply_l2.toml")
    assert run("check", "--data", servo_csv, "--model", supply,
               "--gamma", 1.2, "--L", 20, "--nu", 3) == 2


def test_check_channel_mismatch_exit_4(tmp_path):
    rng = np.random.default_rng(0)
    wide = tmp_path / "wide.csv"
    save_dictionary(
        DataDictionary(
            Trajectory(rng.uniform(-1, 1, (40, 2))), Trajectory(rng.uniform(-1, 1, 40))
        ),
        wide,
    )
    assert run("check", "--data", wide, "--model", SERVO_LOOP,
               "--gamma", 1.2, "--L", 10, "--nu", 3, "--lag-bound", 1) == 4


def test_gain_with_oracle_column(servo_csv, tmp_path, capsys):
    out_csv = tmp_path / "gains.csv"
    code = run("gain", "--data", servo_csv, "--L-range", "4:8", "--nu", 2,
               "--lag-bound", 1, "--with-oracle", "--model", SERVO_PLANT,
               "--out", out_csv)
    assert code == 0
    text = out_csv.read_text()
    lines = text.splitlines()
    assert lines[0] == "L,gamma_dd,gamma_mb"
    assert len(lines) == 6
    for line in lines[1:]:
        _, dd, mb = line.split(",")
        assert abs(float(dd) - float(mb)) <= 1e-3 * float(mb)
    assert capsys.readouterr().out == text


def test_gain_interconnection_mode(servo_csv, capsys):
    code = run("gain", "--data", servo_csv, "--L", 20, "--nu", 3,
               "--lag-bound", 1, "--model", SERVO_LOOP)
    assert code == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "L,gamma_dd"
    gain = float(lines[1].split(",")[1])
    assert 0.9 < gain < 1.0428270433874327  # window gain below the peak


def test_gain_flag_conflicts(servo_csv):
    assert run("gain", "--data", servo_csv, "--L", 8, "--L-range", "4:8",
               "--nu", 2) == 2
    assert run("gain", "--data", servo_csv, "--nu", 2) == 2
    assert run("gain", "--data", servo_csv, "--L", 8, "--nu", 2,
               "--with-oracle") == 3
    assert run("gain", "--data", servo_csv, "--L", 8, "--nu", 2,
               "--with-oracle", "--model", SERVO_LOOP) == 3


def test_gain_unbounded_prints_inf(tmp_path, capsys):
    rng = np.random.default_rng(1)
    dead = tmp_path / "dead_input.csv"
    save_dictionary(
        DataDictionary(
            Trajectory(np.zeros(40)), Trajectory(rng.uniform(-1, 1, 40))
        ),
        dead,
    )
    code = run("gain", "--data", dead, "--L", 6, "--nu", 0)
    assert code == 1
    assert capsys.readouterr().out.splitlines()[1] == "6,inf"


def test_reproduce_fig1(tmp_path, capsys):
    out = tmp_path / "rep"
    assert run("reproduce", "fig1", "--out", out) == 0
    summary = (out / "fig1_summary.txt").read_text()
    assert "overall: pass" in summary
    csv = (out / "fig1.csv").read_text()
    assert csv.splitlines()[0] == "L,fundamental_ok,extended_ok"
    capsys.readouterr()
    assert run("reproduce", "fig1", "--out", tmp_path / "rep2") == 0
    assert (tmp_path / "rep2" / "fig1.csv").read_text() == csv


def test_reproduce_unknown_name():
    assert run("reproduce", "figure9") == 2


def test_reproduce_acceptance_failure_exit_5(tmp_path, capsys):
    cfg = tmp_path / "short.toml"
    cfg.write_text("[experiment]\nl_range = [3, 8]\n")
    out = tmp_path / "rep"
    code = run("reproduce", "example1", "--config", cfg, "--out", out)
    assert code == 5
    summary = capsys.readouterr().out
    assert "overall: FAIL" in summary
    assert "reproduced" not in summary


def test_unknown_flag_is_usage_error(servo_csv):
    with pytest.raises(SystemExit) as exc:
        run("gain", "--data", servo_csv, "--L", 8, "--nu", 2, "--frobnicate")
    assert exc.value.code == 2
