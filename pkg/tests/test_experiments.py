"""Sweep runners: report invariants, oracle agreement, determinism."""

import numpy as np
import pytest

from ddiss.errors import (
    CoprimenessWarning,
    DdissError,
    DimensionMismatch,
    UnstableClosedLoop,
)
from ddiss.experiments import (
    ExperimentConfig,
    GainReport,
    RankReport,
    TWO_MASS_SAMPLE_TIME,
    run_example1,
    run_example2,
    run_fig1,
    run_property_campaign,
    two_mass_plant,
)
from ddiss.lti import discretize_zoh, integrate_zoh_rk4, simulate
from ddiss.polymat import Poly, Rational, RationalMatrix
from ddiss.signals import Trajectory

ALL_PROPERTIES = (
    "span-roundtrip",
    "kernel-identity",
    "projected-psd",
    "gain-monotone",
    "data-only-verdict",
    "supply-scaling",
)

SMALL_COUNTS = {
    "span-roundtrip": 6,
    "kernel-identity": 6,
    "projected-psd": 10,
    "gain-monotone": 2,
    "data-only-verdict": 6,
    "supply-scaling": 4,
}


def test_config_rejects_noise_and_bad_range():
    with pytest.raises(DdissError):
        ExperimentConfig(noise=0.01)
    with pytest.raises(DimensionMismatch):
        ExperimentConfig(l_range=(2, 40), prefix=3)
    with pytest.raises(DimensionMismatch):
        ExperimentConfig(n_samples=30, l_range=(3, 30), prefix=3)


def test_gain_report_invariants():
    ok = GainReport(((4, 0.5, 0.5, 1.0), (5, 0.5 - 5e-7, 0.6, 1.0)))
    assert ok.rows[1][1] < ok.rows[0][1]  # sub-tolerance dip is accepted
    with pytest.raises(DdissError):
        GainReport(((4, 0.5, 0.5, 1.0), (5, 0.4, 0.6, 1.0)))
    with pytest.raises(DdissError):
        GainReport(((4, np.inf, 0.5, 1.0),))


def test_gain_report_csv_shape():
    rep = GainReport(((4, 0.5, 0.5, 1.0), (5, 0.625, 0.625, 1.0)))
    lines = rep.to_csv().splitlines()
    assert lines[0] == "L,gamma_dd,gamma_mb,hinf"
    assert lines[1] == "4,0.5,0.5,1.0"
    assert np.allclose(rep.column("gamma_mb"), [0.5, 0.625])


def test_rank_report_csv_uses_flags():
    rep = RankReport(((3, False, True), (4, True, False)), lag=4)
    assert rep.to_csv() == "L,fundamental_ok,extended_ok\n3,0,1\n4,1,0\n"


def test_example1_tracks_oracles():
    cfg = ExperimentConfig(seed=0, n_samples=300, l_range=(3, 14), prefix=3)
    rep = run_example1(cfg)
    dd = rep.column("gamma_dd")
    mb = rep.column("gamma_mb")
    # L = prefix gives the empty window; both gains are exactly zero there
    assert dd[0] == 0.0 and mb[0] == 0.0
    rel = np.abs(dd[1:] - mb[1:]) / mb[1:]
    assert rel.max() <= 1e-3
    assert abs(rep.column("hinf")[0] - 1.0428270433874327) <= 1e-7


def test_example1_deterministic_and_writes(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = ExperimentConfig(
        seed=3, n_samples=200, l_range=(4, 9), prefix=3, output_path=str(out)
    )
    first = run_example1(cfg).to_csv()
    assert out.read_text() == first
    assert run_example1(cfg).to_csv() == first


def test_example2_short_sweep_tracks_oracle():
    cfg = ExperimentConfig(seed=0, n_samples=400, l_range=(15, 24), prefix=15)
    with pytest.warns(CoprimenessWarning):
        rep = run_example2(cfg)
    dd = rep.column("gamma_dd")
    mb = rep.column("gamma_mb")
    peak = rep.column("hinf")[0]
    rel = np.abs(dd[1:] - mb[1:]) / mb[1:]
    assert rel.max() <= 1e-3
    assert np.all(dd <= peak + 1e-6)


def test_example2_rejects_destabilizing_controller():
    q = Poly.shift()
    with pytest.raises(UnstableClosedLoop):
        run_example2(controller=Rational(Poly([10.0]), q - 1.5))


def test_example2_controller_shape_guard():
    bad = RationalMatrix([[Rational.constant(1.0)], [Rational.constant(2.0)]])
    with pytest.raises(DimensionMismatch):
        run_example2(controller=bad)


def test_two_mass_discretization_matches_fine_integration():
    plant_ct = two_mass_plant()
    plant_dt = discretize_zoh(plant_ct, TWO_MASS_SAMPLE_TIME)
    rng = np.random.default_rng(11)
    u = Trajectory(rng.uniform(-1.0, 1.0, 30))
    y_exact = simulate(plant_dt, u)
    y_ref = integrate_zoh_rk4(plant_ct, u, TWO_MASS_SAMPLE_TIME, substeps=2000)
    err = np.linalg.norm(y_exact.samples - y_ref.samples)
    assert err <= 1e-6 * np.linalg.norm(y_ref.samples)


def test_fig1_rank_crossover_at_measured_lag():
    rep = run_fig1()
    assert rep.lag == 7
    for L, fund, ext in rep.rows:
        assert fund == (L >= rep.lag)
        assert ext == (L < rep.lag)


def test_fig1_deterministic_csv():
    cfg = ExperimentConfig(seed=5, n_samples=400, l_range=(3, 20), prefix=0)
    first = run_fig1(cfg).to_csv()
    assert first.splitlines()[0] == "L,fundamental_ok,extended_ok"
    assert run_fig1(cfg).to_csv() == first


def test_campaign_small_counts_all_pass():
    outcomes = run_property_campaign(counts=SMALL_COUNTS)
    assert [o.name for o in outcomes] == list(ALL_PROPERTIES)
    for o in outcomes:
        assert o.ok, f"{o.name}: {o.failed} failures"
        assert o.passed == SMALL_COUNTS[o.name]


def test_campaign_detects_corrupted_data():
    counts = {name: 0 for name in ALL_PROPERTIES}
    counts["span-roundtrip"] = 5
    outcomes = run_property_campaign(
        counts=counts, corrupt=frozenset({"span-roundtrip"})
    )
    assert len(outcomes) == 1
    assert outcomes[0].failed == 5


def test_campaign_zero_length_is_empty():
    counts = {name: 0 for name in ALL_PROPERTIES}
    assert run_property_campaign(counts=counts) == []
