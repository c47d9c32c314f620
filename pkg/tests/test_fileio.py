"""TOML system/supply loaders and certificate rendering."""

import numpy as np
import pytest

from ddiss.dissipativity import Certificate, SupplyRate
from ddiss.errors import ParseError
from ddiss.fileio import (
    load_experiment_overrides,
    load_supply,
    load_system,
    render_certificate,
    write_certificate,
)
from ddiss.lti import StateSpace
from ddiss.polymat import IoRepresentation, Rational


def _write(tmp_path, text, name="f.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_load_tf(tmp_path):
    p = _write(tmp_path, '[system]\ntype = "tf"\nnum = [0.5, 1.0]\nden = [-0.5, 1.0]\n')
    r = load_system(p)
    assert isinstance(r, Rational)
    assert np.isclose(r(1.0), 3.0)  # (1 + 0.5) / (1 - 0.5)


def test_load_tf_rejects_improper(tmp_path):
    p = _write(tmp_path, '[system]\ntype = "tf"\nnum = [0.0, 0.0, 1.0]\nden = [1.0, 1.0]\n')
    with pytest.raises(ParseError):
        load_system(p)


def test_load_ss_ct_discretizes(tmp_path):
    p = _write(
        tmp_path,
        '[system]\ntype = "ss"\ntime = "ct"\nh = 0.5\n'
        "A = [[-1.0]]\nB = [[1.0]]\nC = [[1.0]]\nD = [[0.0]]\n",
    )
    ss = load_system(p)
    assert isinstance(ss, StateSpace) and ss.time == "dt"
    assert np.isclose(ss.A[0, 0], np.exp(-0.5))


def test_load_ss_ct_without_h_is_parse_error(tmp_path):
    p = _write(
        tmp_path,
        '[system]\ntype = "ss"\ntime = "ct"\n'
        "A = [[-1.0]]\nB = [[1.0]]\nC = [[1.0]]\nD = [[0.0]]\n",
    )
    with pytest.raises(ParseError):
        load_system(p)


def test_load_io_interconnection(tmp_path):
    p = _write(
        tmp_path,
        '[system]\ntype = "io"\n'
        'row_partition = [["u", 1], ["z", 1]]\n'
        'col_partition = [["y", 1], ["w", 1]]\n'
        "entries = [\n"
        "  [{ num = [-0.3, -1.0], den = [-1.0, 1.0] },"
        " { num = [0.3, 1.0], den = [-1.0, 1.0] }],\n"
        "  [-1.0, 1.0],\n"
        "]\n",
    )
    io = load_system(p)
    assert isinstance(io, IoRepresentation)
    assert io.channel_size("u", "out") == 1
    assert io.channel_size("w", "in") == 1
    # the z row is static: z = w - y
    resp = io.transfer_at(2.0)
    assert np.allclose(resp[1], [-1.0, 1.0])


def test_load_system_bad_type_and_missing_table(tmp_path):
    with pytest.raises(ParseError):
        load_system(_write(tmp_path, '[system]\ntype = "nope"\n'))
    with pytest.raises(ParseError):
        load_system(_write(tmp_path, "[other]\nx = 1\n", name="g.toml"))
    with pytest.raises(ParseError):
        load_system(tmp_path / "does_not_exist.toml")


def test_load_system_invalid_toml(tmp_path):
    with pytest.raises(ParseError):
        load_system(_write(tmp_path, "[system\ntype ="))


def test_load_supply_presets(tmp_path):
    s = load_supply(_write(tmp_path, '[supply]\ntype = "l2"\ngamma = 2.0\n'), 2, 3)
    assert s.n_w == 2 and s.n_z == 3
    assert np.allclose(s.Q, 4.0 * np.eye(2)) and np.allclose(s.R, -np.eye(3))

    s = load_supply(_write(tmp_path, '[supply]\ntype = "passivity"\n'), 2, 2)
    assert np.allclose(s.S, np.eye(2)) and not s.Q.any() and not s.R.any()

    s = load_supply(
        _write(tmp_path, '[supply]\ntype = "iff-passivity"\nnu_param = 0.4\n'), 1, 1
    )
    assert np.allclose(s.Q, [[-0.4]])

    s = load_supply(
        _write(tmp_path, '[supply]\ntype = "shortage"\nbeta = 0.2\n'), 1, 1
    )
    assert np.allclose(s.R, [[0.2]])

    s = load_supply(
        _write(
            tmp_path,
            '[supply]\ntype = "custom"\nn_w = 1\nn_z = 1\n'
            "Q = [[1.0]]\nS = [[0.5]]\nR = [[-2.0]]\n",
        )
    )
    assert np.allclose(s.S, [[0.5]]) and np.allclose(s.R, [[-2.0]])


def test_load_supply_errors(tmp_path):
    with pytest.raises(ParseError):
        load_supply(_write(tmp_path, '[supply]\ntype = "l2"\n'))  # no gamma
    with pytest.raises(ParseError):
        load_supply(_write(tmp_path, '[supply]\ntype = "passivity"\n'), 1, 2)
    with pytest.raises(ParseError):
        load_supply(_write(tmp_path, '[supply]\ntype = "custom"\nQ = [[1.0]]\n'))


def test_certificate_rendering(tmp_path):
    cert = Certificate(
        dissipative=True, min_eig=-1e-12, nullspace_dim=42, rank_tol=1e-9,
        psd_tol=1e-8, horizon=20, prefix=3, gamma=1.25,
    )
    text = render_certificate(cert)
    assert text.splitlines()[0] == "verdict: dissipative"
    assert "gamma: 1.25" in text
    assert "nullspace_dim: 42" in text
    assert "degenerate: false" in text

    plain = Certificate(
        dissipative=False, min_eig=-0.3, nullspace_dim=7, rank_tol=1e-9,
        psd_tol=1e-8, horizon=5, prefix=1,
    )
    text = render_certificate(plain)
    assert "gamma" not in text and "not-certified" in text

    out = tmp_path / "cert.txt"
    assert write_certificate(plain, out) == out.read_text()


def test_experiment_overrides(tmp_path):
    p = _write(
        tmp_path,
        "[experiment]\nseed = 4\nn_samples = 120\nl_range = [5, 9]\nprefix = 2\n",
    )
    got = load_experiment_overrides(p)
    assert got == {"seed": 4, "n_samples": 120, "l_range": (5, 9), "prefix": 2}
    assert load_experiment_overrides(_write(tmp_path, "x = 1\n", name="h.toml")) == {}
    with pytest.raises(ParseError):
        load_experiment_overrides(
            _write(tmp_path, "[experiment]\nl_range = [1, 2, 3]\n", name="i.toml")
        )


def test_shipped_configs_parse():
    from pathlib import Path

    base = Path(__file__).resolve().parents[1] / "configs"
    assert isinstance(load_system(f"{base}/servo_plant.toml"), Rational)
    assert isinstance(load_system(f"{base}/example2_controller.toml"), Rational)
    assert isinstance(load_system(f"{base}/servo_interconnection.toml"), IoRepresentation)
    two_mass = load_system(f"{base}/two_mass_plant.toml")
    assert isinstance(two_mass, StateSpace) and two_mass.time == "dt"
    assert isinstance(load_supply(f"{base}/supply_l2.toml"), SupplyRate)
    assert load_experiment_overrides(f"{base}/example1.toml")["n_samples"] == 300
