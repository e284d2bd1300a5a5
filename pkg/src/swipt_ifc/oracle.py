"""Brute-force references: cooperative minimum total power and a grid-search best response.

Neither routine uses the closed-form best response. For a fixed power
vector the feasible splitting ratios of a pair form an interval available
in closed form (:func:`feasible_alpha_interval`), so only powers are
gridded.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .game import InfeasibleError, LocalObservation, PairStrategy
from .scenario import Scenario

__all__ = [
    "GridConfig",
    "OracleResult",
    "alpha_bounds",
    "brute_force_best_response",
    "feasible_alpha_interval",
    "oracle_min_total_power",
]

log = logging.getLogger(__name__)

# Feasibility tolerance on lo <= hi (alpha units). Profiles with both
# constraints tight, such as an equilibrium computed to ~1e-11, must pass.
ALPHA_SLACK = 1e-9
MAX_PAIRS = 3
_CHUNK = 1 << 16


@dataclass(frozen=True)
class GridConfig:
    """Log-spaced power grid with successive zoom-in refinement.

    ``p_min``/``p_max`` (watts, scalar or per pair) bound the search box;
    ``None`` lets the caller derive the box (``NE * 1e-3`` to ``NE * 10`` for
    the cooperative search). Each refinement round divides the step by
    ``zoom`` and searches ``refine_halfwidth`` old steps around the incumbent.
    """

    p_min: object = None
    p_max: object = None
    steps_per_decade: int = 50
    refine_rounds: int = 3
    zoom: int = 10
    refine_halfwidth: int = 2

    def __post_init__(self):
        if self.steps_per_decade < 10:
            raise ValueError("steps_per_decade must be at least 10")
        if self.refine_rounds < 0 or self.zoom < 2 or self.refine_halfwidth < 1:
            raise ValueError("invalid refinement settings")
        if (self.p_min is None) != (self.p_max is None):
            raise ValueError("give both p_min and p_max or neither")
        if self.p_min is not None:
            lo = np.asarray(self.p_min, dtype=float)
            hi = np.asarray(self.p_max, dtype=float)
            if np.any(~(lo > 0)) or np.any(~(hi > lo)):
                raise ValueError("need 0 < p_min < p_max")

    @property
    def final_step_decades(self) -> float:
        return 1.0 / self.steps_per_decade / self.zoom**self.refine_rounds


# ---------------------------------------------------------------------------
# feasibility in alpha
# ---------------------------------------------------------------------------
def alpha_bounds(powers, s: Scenario):
    """Vectorised splitting-ratio bounds for a batch of power vectors.

    Parameters
    ----------
    powers : (K, N) array

    Returns
    -------
    lo, hi : (K, N) arrays
        EH lower bound and SINR upper bound on ``alpha``; ``hi`` is ``-inf``
        where the SINR target is unreachable for any ratio.
    """
    P = np.atleast_2d(np.asarray(powers, dtype=float))
    g = s.gains
    signal = P * np.diag(g)
    # cross links summed directly: received - signal cancels when gamma is large
    x = P @ (g - np.diag(np.diag(g))) + s.antenna_noise
    received = signal + x
    margin = signal - s.sinr_threshold * x
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = np.where(s.eh_threshold > 0, (s.eh_threshold / s.efficiency) / received, 0.0)
        hi = np.where(margin > 0, 1.0 - s.sinr_threshold * s.id_noise / margin, -np.inf)
    return lo, hi


def _feasible(lo, hi):
    return (lo <= hi + ALPHA_SLACK) & (lo < 1.0) & (hi >= -ALPHA_SLACK)


def feasible_alpha_interval(p, pair: int, s: Scenario):
    """Splitting ratios meeting both constraints of ``pair`` at powers ``p``.

    Returns ``(lo, hi)`` clipped to ``[0, 1)``, or ``None`` when empty.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("powers must be strictly positive")
    lo, hi = alpha_bounds(p[None, :], s)
    lo, hi = float(lo[0, pair]), float(hi[0, pair])
    if not _feasible(lo, hi):
        return None
    lo = max(lo, 0.0)
    return lo, max(lo, min(hi, np.nextafter(1.0, 0.0)))


# ---------------------------------------------------------------------------
# cooperative optimum
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class OracleResult:
    """Cooperative minimum-total-power profile found by grid search."""

    p: np.ndarray
    alpha: np.ndarray
    total: float
    round_totals: list = field(default_factory=list)
    evaluated: int = 0


class OracleInfeasibleError(InfeasibleError):
    """No grid point in the search box satisfies every pair's constraints."""


def _axes(lo_log, hi_log, step):
    out = []
    for a, b in zip(lo_log, hi_log):
        k = int(np.ceil((b - a) / step - 1e-9))
        out.append(a + step * np.arange(k + 1))
    return out


def _search(axes, s: Scenario):
    """Best feasible point of the Cartesian grid over ``axes`` (log10 powers)."""
    powers = [10.0 ** ax for ax in axes]
    best_total, best_p, count = np.inf, None, 0
    lead, rest = powers[0], powers[1:]
    rest_grid = np.array(list(itertools.product(*rest))) if rest else np.empty((1, 0))
    step = max(1, _CHUNK // max(1, rest_grid.shape[0]))
    for start in range(0, lead.size, step):
        head = lead[start : start + step]
        batch = np.column_stack(
            [np.repeat(head, rest_grid.shape[0]), np.tile(rest_grid, (head.size, 1))]
        )
        count += batch.shape[0]
        lo, hi = alpha_bounds(batch, s)
        ok = np.all(_feasible(lo, hi), axis=1)
        if not np.any(ok):
            continue
        cand = batch[ok]
        totals = cand.sum(axis=1)
        m = totals.min()
        if m <= best_total:
            tied = cand[totals == m]
            if m == best_total and best_p is not None:
                tied = np.vstack([tied, best_p])
            order = np.lexsort(tied.T[::-1])
            best_total, best_p = float(m), tied[order[0]]
    return best_total, best_p, count


def _profile_feasible(p, s):
    lo, hi = alpha_bounds(p[None, :], s)
    return bool(np.all(_feasible(lo, hi)))


def oracle_min_total_power(s: Scenario, grid: GridConfig | None = None, warm_start=None) -> OracleResult:
    """Minimise the total transmit power over a log grid (N <= 3).

    Parameters
    ----------
    s : Scenario
    grid : GridConfig, optional
        Search settings. A box left as ``None`` is set to
        ``[warm_start * 1e-3, warm_start * 10]``.
    warm_start : array, optional
        A known feasible power vector (typically the Nash equilibrium). It
        is evaluated as a candidate, so the result never exceeds its total.

    Raises
    ------
    OracleInfeasibleError
        If neither the grid nor the warm start is feasible.
    """
    grid = grid or GridConfig()
    n = s.n_pairs
    if n > MAX_PAIRS:
        raise ValueError(f"exhaustive search is limited to {MAX_PAIRS} pairs, got {n}")
    if grid.p_min is None:
        if warm_start is None:
            raise ValueError("no search box: give GridConfig.p_min/p_max or a warm start")
        ws = np.asarray(warm_start, dtype=float)
        if ws.shape != (n,) or not np.all(np.isfinite(ws)) or np.any(ws <= 0):
            raise ValueError("warm start must be a finite, strictly positive power vector")
        p_min, p_max = ws * 1e-3, ws * 10.0
    else:
        p_min = np.broadcast_to(np.asarray(grid.p_min, dtype=float), (n,))
        p_max = np.broadcast_to(np.asarray(grid.p_max, dtype=float), (n,))

    step = 1.0 / grid.steps_per_decade
    total, best, count = _search(_axes(np.log10(p_min), np.log10(p_max), step), s)
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=float)
        if _profile_feasible(ws, s) and ws.sum() < total:
            total, best = float(ws.sum()), ws.copy()
    if best is None:
        raise OracleInfeasibleError(
            f"no feasible power vector in the box p_min={np.asarray(p_min).tolist()} W, "
            f"p_max={np.asarray(p_max).tolist()} W"
        )
    round_totals = [total]

    for _ in range(grid.refine_rounds):
        half = grid.refine_halfwidth * step
        step /= grid.zoom
        centre = np.log10(best)
        t, p, c = _search(_axes(centre - half, centre + half, step), s)
        count += c
        if p is not None and t < total:
            total, best = t, p
        round_totals.append(total)

    lo, _ = alpha_bounds(best[None, :], s)
    alpha = np.clip(lo[0], 0.0, None)
    return OracleResult(p=best, alpha=alpha, total=total, round_totals=round_totals, evaluated=count)


# ---------------------------------------------------------------------------
# single-pair brute force
# ---------------------------------------------------------------------------
def _pair_bounds(p, obs: LocalObservation):
    signal = p * obs.own_gain
    received = signal + obs.interference
    margin = signal - obs.sinr_threshold * obs.interference
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = obs.eh_power_target / received
        hi = np.where(margin > 0, 1.0 - obs.sinr_threshold * obs.id_noise / margin, -np.inf)
    return lo, hi


def brute_force_best_response(obs: LocalObservation, grid: GridConfig | None = None) -> PairStrategy:
    """Smallest feasible power of one pair found by log-grid search.

    The default box spans six decades around
    ``(gamma (X + sigma^2) + E/eta) / G``. Feasibility is monotone in the
    power, so each refinement round brackets the first feasible grid point.
    Returns the power and the smallest EH-feasible splitting ratio.
    """
    grid = grid or GridConfig()
    if grid.p_min is None:
        scale = (obs.sinr_threshold * (obs.interference + obs.id_noise) + obs.eh_power_target) / obs.own_gain
        lo_log, hi_log = np.log10(scale) - 3.0, np.log10(scale) + 3.0
    else:
        lo_log, hi_log = float(np.log10(grid.p_min)), float(np.log10(grid.p_max))

    step = 1.0 / grid.steps_per_decade
    axis = _axes([lo_log], [hi_log], step)[0]
    p = 10.0 ** axis
    ok = _feasible(*_pair_bounds(p, obs))
    if not np.any(ok):
        raise InfeasibleError(f"no feasible power in [{p[0]:.6g}, {p[-1]:.6g}] W")
    i = int(np.argmax(ok))
    best = axis[i]
    if i == 0:
        log.warning("lowest grid power %.6g W is already feasible; minimum may lie below the box", p[0])
    else:
        below = axis[i - 1]  # infeasible; the minimum lies in (below, best]
        for _ in range(grid.refine_rounds):
            step /= grid.zoom
            axis = below + step * np.arange(1, grid.zoom + 1)
            axis[-1] = best  # feasible incumbent closes the bracket
            ok = _feasible(*_pair_bounds(10.0**axis, obs))
            i = int(np.argmax(ok))
            best = axis[i]
            if i > 0:
                below = axis[i - 1]

    p_best = float(10.0**best)
    lo, _ = _pair_bounds(p_best, obs)
    return PairStrategy(p_best, float(min(max(lo, 0.0), np.nextafter(1.0, 0.0))))
