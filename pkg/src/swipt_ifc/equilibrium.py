"""Game-level analysis: coupling matrix, existence test, best-response dynamics.

The existence (and uniqueness) verdict is ``rho(Omega) < 1`` where
``Omega[n, m] = G[m, n] * gamma_n / G[n, n]`` off the diagonal. It is
decided twice, by certified power iteration and by an M-matrix linear
solve, and the two must agree.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components

from .game import StrategyProfile, best_response_arrays
from .scenario import Scenario

__all__ = [
    "ConvergenceError",
    "DynamicsResult",
    "ExistenceReport",
    "NECheck",
    "SpectralRadius",
    "best_response_dynamics",
    "best_response_map",
    "build_omega",
    "contraction_gap",
    "existence_check",
    "spectral_radius",
    "verify_ne",
    "z_factor",
]

log = logging.getLogger(__name__)

SCHEDULES = ("jacobi", "gauss-seidel")
# relative spread of the bounds that rounding alone can produce
_ROUNDING_FLOOR = 64 * np.finfo(float).eps


class ConvergenceError(RuntimeError):
    """Power iteration ran out of iterations; carries the last bounds."""

    def __init__(self, message, lower, upper, iterations):
        super().__init__(message)
        self.lower = lower
        self.upper = upper
        self.iterations = iterations


def build_omega(s: Scenario) -> np.ndarray:
    """Coupling matrix, rows indexed by destination, columns by source."""
    g = s.gains
    omega = (g.T / np.diag(g)[:, None]) * s.sinr_threshold[:, None]
    np.fill_diagonal(omega, 0.0)
    return omega


# ---------------------------------------------------------------------------
# spectral radius
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SpectralRadius:
    """Perron root estimate with Collatz-Wielandt bounds ``lower <= rho <= upper``."""

    value: float
    lower: float
    upper: float
    iterations: int

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def _perron_irreducible(b: np.ndarray, tol: float, max_iter: int):
    # Every shift b + s*I keeps the Perron vector, so the shift can follow the
    # running estimate; s ~ rho damps the -rho and complex boundary modes.
    v = np.ones(b.shape[0])
    lower = upper = 0.0
    for it in range(1, max_iter + 1):
        w = b @ v
        ratios = w / v
        lower, upper = float(ratios.min()), float(ratios.max())
        if upper - lower <= max(tol, _ROUNDING_FLOOR * upper):
            return 0.5 * (lower + upper), lower, upper, it
        shift = 0.5 * (lower + upper)
        v = w + shift * v
        v /= v.max()
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(bounds [{lower:.12g}, {upper:.12g}])",
        lower,
        upper,
        max_iter,
    )


def spectral_radius(m, tol: float = 1e-10, max_iter: int = 100_000) -> SpectralRadius:
    """Spectral radius of a nonnegative square matrix.

    The matrix is split into strongly connected blocks (the radius of a
    reducible matrix is the largest radius among its irreducible diagonal
    blocks) and each block is handled by shifted power iteration from the
    all-ones vector. Stops once the Collatz-Wielandt bounds are within
    ``tol`` of each other, or within rounding (``64 eps * upper``) for very
    large radii.

    Raises
    ------
    ConvergenceError
        If a block has not converged after ``max_iter`` iterations.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)) or np.any(m < 0):
        raise ValueError("matrix must be finite and nonnegative")
    if not np.any(m):
        return SpectralRadius(0.0, 0.0, 0.0, 0)

    n_comp, labels = connected_components(m != 0, directed=True, connection="strong")
    best = SpectralRadius(0.0, 0.0, 0.0, 0)
    total_iter = 0
    for c in range(n_comp):
        idx = np.flatnonzero(labels == c)
        block = m[np.ix_(idx, idx)]
        if idx.size == 1:
            value = lower = upper = float(block[0, 0])
            it = 0
        else:
            value, lower, upper, it = _perron_irreducible(block, tol, max_iter)
        total_iter += it
        if value > best.value:
            best = SpectralRadius(value, lower, upper, 0)
    return SpectralRadius(best.value, best.lower, best.upper, total_iter)


# ---------------------------------------------------------------------------
# existence
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ExistenceReport:
    """Outcome of :func:`existence_check`.

    ``verdict`` is ``"exists"``, ``"not-exists"`` or ``"boundary"`` (the two
    methods disagree or the certified bounds straddle one).
    """

    spectral_radius: float
    exists: bool
    verdict: str
    method: str
    iterations_used: int
    bound_gap: float
    lower: float
    upper: float
    m_matrix_positive: bool
    m_matrix_solution: np.ndarray | None = field(default=None, repr=False)

    @property
    def methods_agree(self) -> bool:
        return self.verdict != "boundary"


def m_matrix_test(omega: np.ndarray):
    """Solve ``(I - Omega) x = 1``; positive ``x`` exists iff ``rho(Omega) < 1``.

    Returns ``(positive, x)``; ``x`` is ``None`` when the system is singular.
    """
    n = omega.shape[0]
    try:
        x = np.linalg.solve(np.eye(n) - omega, np.ones(n))
    except np.linalg.LinAlgError:
        return False, None
    return bool(np.all(np.isfinite(x)) and np.all(x > 0)), x


def existence_check(s: Scenario, tol: float = 1e-10, max_iter: int = 100_000) -> ExistenceReport:
    """Decide whether the game has a (unique) Nash equilibrium."""
    omega = build_omega(s)
    positive, x = m_matrix_test(omega)
    try:
        sr = spectral_radius(omega, tol=tol, max_iter=max_iter)
        lower, upper, value, iters = sr.lower, sr.upper, sr.value, sr.iterations
    except ConvergenceError as exc:
        lower, upper, iters = exc.lower, exc.upper, exc.iterations
        value = 0.5 * (lower + upper)

    if upper < 1.0:
        power_says = "exists"
    elif lower >= 1.0:
        power_says = "not-exists"
    else:
        power_says = "boundary"
    matrix_says = "exists" if positive else "not-exists"
    verdict = power_says if power_says == matrix_says else "boundary"
    if verdict == "boundary":
        log.info("existence verdict at boundary: rho in [%.12g, %.12g], m-matrix positive=%s", lower, upper, positive)
    return ExistenceReport(
        spectral_radius=value,
        exists=verdict == "exists",
        verdict=verdict,
        method="shifted-power-iteration",
        iterations_used=iters,
        bound_gap=upper - lower,
        lower=lower,
        upper=upper,
        m_matrix_positive=positive,
        m_matrix_solution=x,
    )


# ---------------------------------------------------------------------------
# best-response mapping and dynamics
# ---------------------------------------------------------------------------
def _eh_targets(s: Scenario) -> np.ndarray:
    return s.eh_threshold / s.efficiency


def best_response_map(s: Scenario, p):
    """Simultaneous best responses to the power vector ``p``.

    Returns ``(p_new, alpha, one_minus_alpha)``; entry ``n`` ignores ``p[n]``.
    """
    x = s.interference(p)
    return best_response_arrays(np.diag(s.gains), x, _eh_targets(s), s.sinr_threshold, s.id_noise)


def _gauss_seidel_sweep(s: Scenario, p: np.ndarray):
    p = p.copy()
    alpha = np.empty_like(p)
    comp = np.empty_like(p)
    g = s.gains
    y = _eh_targets(s)
    for n in range(p.size):
        x = float(np.dot(np.delete(p, n), np.delete(g[:, n], n)) + s.antenna_noise[n])
        pn, an, cn = best_response_arrays(g[n, n], x, y[n], s.sinr_threshold[n], s.id_noise[n])
        p[n], alpha[n], comp[n] = pn, an, cn
    return p, alpha, comp


@dataclass(frozen=True)
class DynamicsResult:
    """Trace and outcome of a best-response dynamics run.

    ``trace[0]`` is the initial profile and ``trace[t]`` the profile after
    round ``t``. ``iterations`` counts the rounds that moved the profile by
    at least ``tol`` before the fixed point was confirmed.
    """

    trace: list
    converged: bool
    iterations: int
    final: StrategyProfile
    residual: float
    residuals: list = field(repr=False, default_factory=list)


def default_init(s: Scenario) -> StrategyProfile:
    """Every source at 0 dBm (1 mW) with no power splitting."""
    return StrategyProfile(np.full(s.n_pairs, 1e-3), np.zeros(s.n_pairs))


def best_response_dynamics(
    s: Scenario,
    init: StrategyProfile | None = None,
    schedule: str = "jacobi",
    tol: float = 1e-8,
    max_iter: int = 1000,
    keep_trace: bool = True,
) -> DynamicsResult:
    """Iterate best responses until the relative power change drops below ``tol``.

    ``schedule="jacobi"`` updates all pairs simultaneously from the previous
    round's powers; ``"gauss-seidel"`` updates them in index order using the
    freshest powers. Non-convergence (including blow-up when
    ``rho(Omega) >= 1``) is reported through ``converged=False``, not raised.
    """
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")
    if init is None:
        init = default_init(s)
    p = np.array(init.p, dtype=float)
    if p.shape != (s.n_pairs,):
        raise ValueError(f"initial profile has {p.size} pairs, scenario has {s.n_pairs}")
    if np.any(p <= 0):
        raise ValueError("initial powers must be strictly positive")

    step = best_response_map if schedule == "jacobi" else _gauss_seidel_sweep
    trace = [init] if keep_trace else []
    residuals = []
    current = init
    moved = 0
    converged = False
    residual = np.inf
    for _ in range(max_iter):
        with np.errstate(over="ignore", invalid="ignore"):
            p_new, alpha, comp = step(s, p)
            residual = float(np.max(np.abs(p_new - p) / p))
        if not np.all(np.isfinite(p_new)) or not np.isfinite(residual):
            residual = np.inf
            residuals.append(residual)
            break
        current = StrategyProfile(p_new, alpha, comp)
        if keep_trace:
            trace.append(current)
        residuals.append(residual)
        p = p_new
        if residual < tol:
            converged = True
            break
        moved += 1

    if not keep_trace:
        trace = [current]
    return DynamicsResult(
        trace=trace,
        converged=converged,
        iterations=moved,
        final=current,
        residual=residual,
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# NE verification
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class NECheck:
    """Per-pair residuals of the fixed-point conditions.

    ``power_residual`` is relative, ``alpha_residual`` absolute,
    ``sinr_residual`` and ``eh_residual`` are relative deviations of the
    SINR and harvested power from their targets (negative means violated).
    """

    ok: bool
    power_residual: np.ndarray
    alpha_residual: np.ndarray
    sinr_residual: np.ndarray
    eh_residual: np.ndarray

    def worst_pair(self) -> int:
        score = np.maximum.reduce(
            [self.power_residual, self.alpha_residual, np.abs(self.sinr_residual), np.abs(self.eh_residual)]
        )
        return int(np.argmax(score))


def verify_ne(profile: StrategyProfile, s: Scenario, tol: float = 1e-6) -> NECheck:
    """Check that ``profile`` is a Nash equilibrium of ``s`` to within ``tol``."""
    p = np.asarray(profile.p, dtype=float)
    alpha = np.asarray(profile.alpha, dtype=float)
    keep = np.asarray(profile.one_minus_alpha, dtype=float)
    if p.shape != (s.n_pairs,):
        raise ValueError("profile size does not match scenario")

    br_p, br_alpha, _ = best_response_map(s, p)
    x = s.interference(p)
    g = np.diag(s.gains)
    with np.errstate(divide="ignore", invalid="ignore"):
        power_res = np.abs(p - br_p) / p
        alpha_res = np.abs(alpha - br_alpha)
        achieved = keep * p * g / (keep * x + s.id_noise)
        sinr_res = achieved / s.sinr_threshold - 1.0
        harvested = s.efficiency * alpha * (p * g + x)
        eh_res = np.where(s.eh_threshold > 0, harvested / np.where(s.eh_threshold > 0, s.eh_threshold, 1.0) - 1.0, 0.0)
    power_res = np.where(np.isfinite(power_res), power_res, np.inf)

    ok = bool(
        np.all(p > 0)
        and np.all((alpha >= 0) & (alpha < 1))
        and np.all(power_res < tol)
        and np.all(alpha_res < tol)
        and np.all(np.abs(sinr_res) < tol)
        and np.all(np.abs(eh_res) < tol)
    )
    return NECheck(ok, power_res, alpha_res, sinr_res, eh_res)


# ---------------------------------------------------------------------------
# contraction diagnostics
# ---------------------------------------------------------------------------
def contraction_gap(s: Scenario, p, q):
    """Componentwise contraction check of the best-response map.

    Returns ``(lhs, rhs)`` with ``lhs = |T(p) - T(q)|`` and
    ``rhs = Omega @ |p - q|``. ``lhs < rhs`` holds whenever the SINR targets
    are at least one (0 dB) and the EH targets and ID noise are positive;
    below 0 dB an EH-dominated pair can respond with slope ``-1/G_nn``,
    which exceeds the ``gamma_n / G_nn`` bound.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("power vectors must be strictly positive")
    tp, _, _ = best_response_map(s, p)
    tq, _, _ = best_response_map(s, q)
    return np.abs(tp - tq), build_omega(s) @ np.abs(p - q)


def z_factor(s: Scenario, pair: int, p, q) -> float:
    """Mixing factor ``Z_n`` of the best-response difference between ``p`` and ``q``.

    ``T_n(p) - T_n(q) = (X_n - X_n') / (2 G_nn) * (gamma - 1 + Z_n (gamma + 1))``
    with ``Z_n = (b + b') / (sqrt(D) + sqrt(D'))`` and
    ``b = X - Y + gamma X + gamma sigma^2``. ``|Z_n| < 1`` whenever
    ``gamma, E, sigma^2 > 0``.
    """
    x = s.interference(np.asarray(p, dtype=float))[pair]
    xq = s.interference(np.asarray(q, dtype=float))[pair]
    y = s.eh_threshold[pair] / s.efficiency
    g = s.sinr_threshold[pair]
    s2 = s.id_noise[pair]
    extra = 4.0 * g * y * s2
    b = x - y + g * x + g * s2
    bq = xq - y + g * xq + g * s2
    return float((b + bq) / (np.sqrt(b * b + extra) + np.sqrt(bq * bq + extra)))
