import csv
import json

import numpy as np
import numpy.testing as npt
import pytest

from swipt_ifc.equilibrium import best_response_dynamics, existence_check, verify_ne
from swipt_ifc.experiments import (
    CSV_COLUMNS,
    TRACE_COLUMNS,
    SweepSpec,
    four_pair_scenario,
    eh_sweep_family,
    run_convergence_experiment,
    run_eh_sweep,
    run_existence_sweep,
    write_trace_csv,
)


def test_existence_far_apart():
    spec = SweepSpec("inter_distance", [1000.0], trials=200, n_pairs=2, sinr_threshold_db=0.0)
    assert run_existence_sweep(spec).rows[0]["existence_probability"] == 1.0


def test_existence_with_negligible_targets():
    # gamma -> 0 makes Omega vanish at any distance
    spec = SweepSpec("inter_distance", [1.0, 5.0], trials=100, n_pairs=4, sinr_threshold_db=-300.0)
    npt.assert_array_equal(run_existence_sweep(spec).column("existence_probability"), 1.0)


def test_existence_curve_rises_with_distance():
    spec = SweepSpec("inter_distance", [5.0, 20.0, 50.0], trials=300, n_pairs=4, sinr_threshold_db=10.0, seed=3)
    probs = run_existence_sweep(spec).column("existence_probability")
    assert np.all(np.diff(probs) >= 0)
    assert probs[0] < probs[-1]


def test_points_share_draws():
    spec = SweepSpec("inter_distance", [10.0, 20.0], trials=5, seed=9)
    a = spec.at(10.0).scenario(spec.fading(3))
    b = spec.at(20.0).scenario(spec.fading(3))
    # same fading, so direct links coincide and cross links scale by (20/10)^-3
    npt.assert_array_equal(np.diag(a.gains), np.diag(b.gains))
    npt.assert_allclose(b.gains[0, 1], a.gains[0, 1] / 8.0, rtol=1e-12)


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("noise", [1.0])
    with pytest.raises(ValueError):
        SweepSpec("inter_distance", [2.0, 1.0])
    with pytest.raises(ValueError):
        SweepSpec("inter_distance", [1.0], trials=0)


def test_csv_rerun_is_byte_identical(tmp_path):
    spec = SweepSpec("inter_distance", [5.0, 15.0], trials=50, n_pairs=3, seed=11)
    run_existence_sweep(spec).to_csv(tmp_path / "a.csv")
    run_existence_sweep(spec).to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    with open(tmp_path / "a.csv") as fh:
        assert tuple(next(csv.reader(fh))) == CSV_COLUMNS
    meta = json.loads((tmp_path / "a.json").read_text())
    assert meta["seed"] == 11
    assert meta["spec"]["trials"] == 50
    assert "library_version" in meta


def test_eh_sweep_small(tmp_path):
    spec = SweepSpec("eh_threshold_dbm", [-30.0, -10.0], trials=8, n_pairs=2, sinr_threshold_db=5.0, seed=1,
                     steps_per_decade=20, refine_rounds=2)
    res = run_eh_sweep(spec)
    for row in res.rows:
        assert row["trials_feasible"] == 8
        assert row["ne_total_w"] >= row["oracle_total_w"]
        assert row["gap_db"] >= 0.0
    assert res.rows[0]["ne_total_w"] <= res.rows[1]["ne_total_w"]
    res.to_csv(tmp_path / "eh.csv")
    res2 = run_eh_sweep(spec)
    res2.to_csv(tmp_path / "eh2.csv")
    assert (tmp_path / "eh.csv").read_bytes() == (tmp_path / "eh2.csv").read_bytes()


def test_eh_sweep_rejects_large_networks():
    with pytest.raises(ValueError):
        run_eh_sweep(SweepSpec("eh_threshold_dbm", [-20.0], trials=1, n_pairs=4))


def test_eh_sweep_family_share_admission():
    specs = eh_sweep_family(trials=10)
    assert [s.sinr_threshold_db for s in specs] == [5.0, 15.0]
    assert {s.admission_sinr_db for s in specs} == {15.0}


def test_four_pair_scenario_has_equilibrium():
    s = four_pair_scenario()
    assert s.n_pairs == 4
    assert existence_check(s).exists


def test_convergence_runs_agree():
    s = four_pair_scenario()
    runs = run_convergence_experiment(s, n_inits=4, seed=5)
    assert all(r.converged for r in runs)
    for r in runs[1:]:
        npt.assert_allclose(r.final.p, runs[0].final.p, rtol=1e-6)
    assert verify_ne(runs[0].final, s).ok


def test_convergence_from_equilibrium():
    s = four_pair_scenario()
    ne = best_response_dynamics(s, tol=1e-14, max_iter=20_000).final
    (r,) = run_convergence_experiment(s, inits=[ne])
    assert r.iterations == 0


def test_trace_csv(tmp_path):
    s = four_pair_scenario()
    runs = run_convergence_experiment(s, n_inits=2, seed=0)
    path = tmp_path / "t.csv"
    write_trace_csv(runs, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRACE_COLUMNS
    expected = sum(len(r.trace) for r in runs) * 4
    assert len(rows) - 1 == expected
    last = [r for r in rows[1:] if r[0] == "0"][-4:]
    npt.assert_allclose([float(r[3]) for r in last], 10 * np.log10(runs[0].final.p) + 30, rtol=1e-12)
