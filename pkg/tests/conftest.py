import numpy as np
import pytest
from scipy.optimize import brentq

from swipt_ifc.equilibrium import existence_check
from swipt_ifc.game import LocalObservation
from swipt_ifc.scenario import ChannelConfig, db_to_linear, dbm_to_watt, generate_rayleigh_scenario, make_rng

# Typical magnitudes of the reference two-to-four pair setup (watts / ratios).
OBS_CENTRES = {
    "own_gain": 8e-6,
    "interference": 1e-7,
    "id_noise": 1e-8,
    "sinr_threshold": 3.0,
    "eh_threshold": 1e-5,
}

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def random_observation(rng, decades=3.0, eh_zero=False):
    """Log-uniform observation within +/- ``decades`` of OBS_CENTRES."""
    kw = {k: v * 10 ** rng.uniform(-decades, decades) for k, v in OBS_CENTRES.items()}
    if eh_zero:
        kw["eh_threshold"] = 0.0
    return LocalObservation(efficiency=0.5, **kw)


def random_existent_scenario(rng, n_pairs=None, min_sinr_db=0.0, max_sinr_db=15.0, distance_m=(8.0, 40.0)):
    """Rayleigh scenario with rho(Omega) < 1, SINR targets >= 0 dB and EH targets > 0."""
    while True:
        n = n_pairs or int(rng.integers(2, 5))
        cfg = ChannelConfig(n_pairs=n, inter_distance=float(rng.uniform(*distance_m)))
        s = generate_rayleigh_scenario(
            cfg,
            sinr_threshold=db_to_linear(rng.uniform(min_sinr_db, max_sinr_db, n)),
            eh_threshold=dbm_to_watt(rng.uniform(-30, -10, n)),
            rng=rng,
        )
        if existence_check(s).exists:
            return s


def perron_root_charpoly(m):
    """Largest real root of the expanded characteristic polynomial (N <= 3).

    Scans down from the row-sum bound to the first sign change, then
    brackets the root with Brent's method.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return abs(m[0, 0])
    tr = np.trace(m)
    if n == 2:
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

        def f(x):
            return x * x - tr * x + det
    elif n == 3:
        minors = sum(m[i, i] * m[j, j] - m[i, j] * m[j, i] for i in range(3) for j in range(i + 1, 3))
        det = (
            m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
        )

        def f(x):
            return ((x - tr) * x + minors) * x - det
    else:
        raise ValueError("only N <= 3")

    xs = np.linspace(m.sum(axis=1).max() + 1.0, 0.0, 20001)
    vals = f(xs)
    k = int(np.argmax(vals <= 0))
    if vals[k] == 0:
        return float(xs[k])
    return brentq(f, xs[k], xs[k - 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)


@pytest.fixture
def rng():
    return make_rng(20240601)


@pytest.fixture(scope="session")
def acceptance():
    """Collects one pass/fail line per acceptance criterion for the summary."""

    def record(name, ok, detail=""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
