"""Acceptance criteria, one test each. A PASS/FAIL line per criterion is
printed in the terminal summary (see ``conftest.py``)."""

import itertools
import logging
import time

import numpy as np
import pytest

from conftest import perron_root_charpoly, random_existent_scenario, random_observation
from swipt_ifc.equilibrium import build_omega, contraction_gap, existence_check, verify_ne, z_factor
from swipt_ifc.experiments import (
    SweepSpec,
    four_pair_scenario,
    eh_sweep_family,
    run_convergence_experiment,
    run_eh_sweep,
    run_existence_sweep,
)
from swipt_ifc.game import best_response, harvested_energy, sinr
from swipt_ifc.oracle import GridConfig, brute_force_best_response
from swipt_ifc.scenario import ChannelConfig, db_to_linear, dbm_to_watt, generate_rayleigh_scenario, make_rng

log = logging.getLogger(__name__)

DISTANCE_GRID_M = tuple(float(d) for d in range(5, 55, 5))
EXISTENCE_TRIALS = 1000


def test_c1_brute_force_matches_closed_form(acceptance):
    rng = make_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        o = random_observation(rng)
        worst = max(worst, abs(brute_force_best_response(o, GridConfig()).p / best_response(o).p - 1))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-3 and elapsed < 60
    acceptance("C1 best-response oracle", ok, f"max rel err {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_c2_constraints_tight(acceptance):
    rng = make_rng(2)
    worst_sinr = worst_eh = 0.0
    for _ in range(10_000):
        o = random_observation(rng)
        br = best_response(o)
        worst_sinr = max(worst_sinr, abs(sinr(br, o) / o.sinr_threshold - 1))
        worst_eh = max(worst_eh, abs(harvested_energy(br, o) / o.eh_threshold - 1))
    ok = worst_sinr < 1e-10 and worst_eh < 1e-10
    acceptance("C2 constraint tightness", ok, f"max rel dev SINR {worst_sinr:.1e}, EH {worst_eh:.1e}")
    assert ok


def _c3_scenario(rng):
    n = int(rng.integers(1, 7))
    cfg = ChannelConfig(n_pairs=n, inter_distance=float(rng.uniform(2, 50)))
    return generate_rayleigh_scenario(
        cfg,
        sinr_threshold=db_to_linear(rng.uniform(-5, 15, n)),
        eh_threshold=dbm_to_watt(rng.uniform(-30, -10, n)),
        rng=rng,
    )


def test_c3_existence_methods_agree(acceptance):
    rng = make_rng(3)
    disagreements = bad = 0
    worst_oracle = 0.0
    counts = {"exists": 0, "not-exists": 0, "boundary": 0}
    for _ in range(10_000):
        s = _c3_scenario(rng)
        r = existence_check(s)
        counts[r.verdict] += 1
        if r.verdict == "boundary":
            disagreements += 1
            if abs(r.spectral_radius - 1) >= 1e-8:
                bad += 1
        if s.n_pairs <= 3:
            ref = perron_root_charpoly(build_omega(s))
            worst_oracle = max(worst_oracle, abs(r.spectral_radius - ref))
    ok = bad == 0 and worst_oracle <= 1e-8
    acceptance(
        "C3 existence cross-validation",
        ok,
        f"verdicts {counts}, disagreements {disagreements} ({bad} outside |rho-1|<1e-8), "
        f"max |rho - charpoly| {worst_oracle:.1e}",
    )
    assert ok


def test_c4_four_pair_convergence(acceptance):
    s = four_pair_scenario()
    rho = existence_check(s).spectral_radius
    runs = run_convergence_experiment(s, n_inits=10, seed=4, schedule="jacobi", tol=1e-8, max_iter=200)
    converged = all(r.converged and r.iterations <= 200 for r in runs)
    spread = max(
        float(np.max(np.abs(a.final.p - b.final.p) / b.final.p)) for a, b in itertools.combinations(runs, 2)
    )
    verified = all(verify_ne(r.final, s).ok for r in runs)
    ne = runs[0].final
    # pair 1: 0 dB SINR target, -10 dBm EH target
    alpha_eh = float(ne.alpha[1])
    min_dbm = float(10 * np.log10(ne.p.min()) + 30)
    ok = rho < 1 and converged and spread < 1e-6 and verified and alpha_eh > 0.99
    acceptance(
        "C4 uniqueness/convergence",
        ok,
        f"rho {rho:.4f}, iterations {[r.iterations for r in runs]}, max pairwise rel {spread:.1e}, "
        f"alpha[1] {alpha_eh:.6f}, min p {min_dbm:.1f} dBm",
    )
    assert ok


def test_c5_contraction(acceptance):
    rng = make_rng(5)
    violations = 0
    worst_z = 0.0
    for _ in range(20):
        s = random_existent_scenario(rng)
        for _ in range(50):
            p, q = 10 ** rng.uniform(-3, 2, (2, s.n_pairs))
            lhs, rhs = contraction_gap(s, p, q)
            violations += int(np.sum(~(lhs < rhs)))
            for n in range(s.n_pairs):
                z = abs(z_factor(s, n, p, q))
                worst_z = max(worst_z, z)
                violations += int(not z < 1)
    ok = violations == 0
    acceptance("C5 contraction", ok, f"violations {violations}, max |Z| {worst_z:.6f}")
    assert ok


@pytest.fixture(scope="module")
def existence_curves(tmp_path_factory):
    out = tmp_path_factory.mktemp("existence_curves")
    t0 = time.perf_counter()
    curves = {}
    for n, g in itertools.product((2, 4), (0.0, 10.0)):
        spec = SweepSpec("inter_distance", DISTANCE_GRID_M, trials=EXISTENCE_TRIALS, n_pairs=n, sinr_threshold_db=g, seed=6)
        res = run_existence_sweep(spec)
        res.to_csv(out / f"n{n}_g{int(g)}.csv")
        curves[n, g] = res.column("existence_probability")
    return curves, time.perf_counter() - t0, out


def _sigma(p, q, n):
    return np.sqrt(p * (1 - p) / n + q * (1 - q) / n)


def test_c6_existence_sweep(acceptance, existence_curves):
    curves, elapsed, _ = existence_curves
    n = EXISTENCE_TRIALS
    monotone = all(np.all(np.diff(c) >= -3 * _sigma(c[1:], c[:-1], n)) for c in curves.values())
    top = curves[2, 0.0][-1]
    fewer_links = all(np.all(curves[4, g] <= curves[2, g] + 3 * _sigma(curves[4, g], curves[2, g], n)) for g in (0.0, 10.0))
    lower_sinr = all(np.all(curves[k, 10.0] <= curves[k, 0.0] + 3 * _sigma(curves[k, 10.0], curves[k, 0.0], n)) for k in (2, 4))
    ok = monotone and top >= 0.99 and fewer_links and lower_sinr and elapsed < 300
    detail = ", ".join(f"N={k} {int(g)}dB {c[0]:.3f}->{c[-1]:.3f}" for (k, g), c in curves.items())
    acceptance("C6 existence-probability sweep", ok, f"{detail}; {elapsed:.0f} s")
    assert ok


@pytest.fixture(scope="module")
def eh_sweeps(tmp_path_factory):
    out = tmp_path_factory.mktemp("eh_sweeps")
    t0 = time.perf_counter()
    results = []
    for spec in eh_sweep_family(trials=200, seed=7):
        res = run_eh_sweep(spec)
        res.to_csv(out / f"g{int(spec.sinr_threshold_db)}.csv")
        results.append(res)
    return results, time.perf_counter() - t0, out


def test_c7_eh_power_sweep(acceptance, eh_sweeps):
    results, elapsed, _ = eh_sweeps
    ne = np.array([r.column("ne_total_w") for r in results])
    orc = np.array([r.column("oracle_total_w") for r in results])
    feasible = all(np.all(r.column("trials_feasible") == 200) for r in results)
    lower_bound = bool(np.all(ne >= orc))
    in_eh = bool(np.all(np.diff(ne, axis=1) >= 0) and np.all(np.diff(orc, axis=1) >= 0))
    in_gamma = bool(np.all(np.diff(ne, axis=0) >= 0) and np.all(np.diff(orc, axis=0) >= 0))
    gaps = [r.column("gap_db") for r in results]
    for r, gap in zip(results, gaps):
        log.info("gamma=%s dB gap per point (dB): %s", r.spec.sinr_threshold_db, np.round(gap, 6).tolist())
    ok = feasible and lower_bound and in_eh and in_gamma and elapsed < 900
    acceptance(
        "C7 power versus EH target",
        ok,
        "NE dBm " + str([np.round(r.column("ne_total_dbm"), 2).tolist() for r in results])
        + ", gap dB " + str([np.round(g, 4).tolist() for g in gaps])
        + f", {elapsed:.0f} s",
    )
    assert ok


def test_c8_determinism(acceptance, existence_curves, eh_sweeps, tmp_path):
    _, _, out1 = existence_curves
    _, _, out3 = eh_sweeps
    spec = SweepSpec("inter_distance", DISTANCE_GRID_M, trials=EXISTENCE_TRIALS, n_pairs=4, sinr_threshold_db=10.0, seed=6)
    run_existence_sweep(spec).to_csv(tmp_path / "existence_curves.csv")
    spec3 = eh_sweep_family(trials=200, seed=7)[0]
    run_eh_sweep(spec3).to_csv(tmp_path / "eh_sweeps.csv")
    same1 = (tmp_path / "existence_curves.csv").read_bytes() == (out1 / "n4_g10.csv").read_bytes()
    same3 = (tmp_path / "eh_sweeps.csv").read_bytes() == (out3 / "g5.csv").read_bytes()
    ok = same1 and same3
    acceptance("C8 determinism", ok, f"existence CSV identical {same1}, EH CSV identical {same3}")
    assert ok
