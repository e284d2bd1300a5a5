"""Per-pair physics and the closed-form best response.

Every function here works from what a single destination can measure:
its direct gain ``G_nn`` and the aggregate interference-plus-antenna-noise
power ``X_n``. No other pair's strategy is needed.

Harvesting convention
---------------------
The received power used for energy harvesting is ``p G_nn + X_n``, i.e. the
antenna noise inside ``X_n`` is counted. This is the algebra under which the
closed-form best response makes both constraints tight. Passing
``include_antenna_noise=False`` to :func:`harvested_energy` drops the noise
term instead; :func:`antenna_noise_gap` reports the difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

__all__ = [
    "InfeasibleError",
    "LocalObservation",
    "PairStrategy",
    "StrategyProfile",
    "antenna_noise_gap",
    "best_response",
    "best_response_arrays",
    "harvested_energy",
    "observe",
    "sinr",
    "splitting_ratio",
]

ALPHA_CEILING = 1.0 - 1e-15
_ALPHA_SLACK = 1e-9


class InfeasibleError(ValueError):
    """No splitting ratio satisfies both the SINR and EH constraints."""


@dataclass(frozen=True)
class PairStrategy:
    """Transmit power ``p`` (watts) and power-splitting ratio ``alpha``.

    ``alpha_complement`` optionally carries ``1 - alpha`` at full relative
    precision; when ``alpha`` is within ~1e-8 of one the subtraction would
    otherwise lose most of its digits.
    """

    p: float
    alpha: float
    alpha_complement: float | None = None

    def __post_init__(self):
        if not self.p >= 0:
            raise ValueError(f"transmit power must be nonnegative, got {self.p}")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"splitting ratio must lie in [0, 1), got {self.alpha}")

    @property
    def one_minus_alpha(self) -> float:
        if self.alpha_complement is not None:
            return self.alpha_complement
        return 1.0 - self.alpha


@dataclass(frozen=True, eq=False)
class StrategyProfile:
    """Powers and splitting ratios of all N pairs."""

    p: np.ndarray
    alpha: np.ndarray
    alpha_complement: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        if p.ndim != 1 or alpha.shape != p.shape:
            raise ValueError("p and alpha must be 1-D arrays of equal length")
        if np.any(~(p >= 0)):
            raise ValueError("transmit powers must be nonnegative")
        if np.any(~((alpha >= 0) & (alpha < 1))):
            raise ValueError("splitting ratios must lie in [0, 1)")
        p.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "alpha", alpha)
        if self.alpha_complement is not None:
            comp = np.array(self.alpha_complement, dtype=float)
            comp.setflags(write=False)
            object.__setattr__(self, "alpha_complement", comp)

    @property
    def n_pairs(self) -> int:
        return self.p.shape[0]

    @property
    def one_minus_alpha(self) -> np.ndarray:
        if self.alpha_complement is not None:
            return self.alpha_complement
        return 1.0 - self.alpha

    def pair(self, n: int) -> PairStrategy:
        comp = None if self.alpha_complement is None else float(self.alpha_complement[n])
        return PairStrategy(float(self.p[n]), float(self.alpha[n]), comp)


@dataclass(frozen=True)
class LocalObservation:
    """What destination ``n`` measures locally.

    ``interference`` is ``X_n``: received power from all other sources plus
    the antenna noise. ``antenna_noise`` is only needed for the
    noise-excluded harvesting variant and its diagnostics.
    """

    own_gain: float
    interference: float
    id_noise: float
    sinr_threshold: float
    eh_threshold: float
    efficiency: float
    antenna_noise: float | None = None

    def __post_init__(self):
        if not self.own_gain > 0:
            raise ValueError("own_gain must be positive")
        if not self.interference > 0:
            raise ValueError("interference-plus-noise must be positive")
        if not self.id_noise > 0:
            raise ValueError("id_noise must be positive")
        if not self.sinr_threshold > 0:
            raise ValueError("sinr_threshold must be positive")
        if not self.eh_threshold >= 0:
            raise ValueError("eh_threshold must be nonnegative")
        if not 0 < self.efficiency < 1:
            raise ValueError("efficiency must lie in (0, 1)")
        if self.antenna_noise is not None and not 0 < self.antenna_noise <= self.interference * (1 + 1e-12):
            raise ValueError("antenna_noise must be positive and not exceed the interference term")

    @property
    def eh_power_target(self) -> float:
        """Required received power at the harvester input, ``E_n / eta``."""
        return self.eh_threshold / self.efficiency


def observe(s: Scenario, p, n: int) -> LocalObservation:
    """Local observation of pair ``n`` under the power vector ``p``."""
    p = np.asarray(p, dtype=float)
    x = float(np.dot(np.delete(p, n), np.delete(s.gains[:, n], n)) + s.antenna_noise[n])
    return LocalObservation(
        own_gain=float(s.gains[n, n]),
        interference=x,
        id_noise=float(s.id_noise[n]),
        sinr_threshold=float(s.sinr_threshold[n]),
        eh_threshold=float(s.eh_threshold[n]),
        efficiency=s.efficiency,
        antenna_noise=float(s.antenna_noise[n]),
    )


def sinr(strategy: PairStrategy, obs: LocalObservation) -> float:
    """SINR at the information decoder."""
    keep = strategy.one_minus_alpha
    return keep * strategy.p * obs.own_gain / (keep * obs.interference + obs.id_noise)


def harvested_energy(strategy: PairStrategy, obs: LocalObservation, *, include_antenna_noise: bool = True) -> float:
    """Power delivered by the energy harvester, watts."""
    received = strategy.p * obs.own_gain + obs.interference
    if not include_antenna_noise:
        if obs.antenna_noise is None:
            raise ValueError("observation carries no antenna_noise; cannot exclude it")
        received -= obs.antenna_noise
    return obs.efficiency * strategy.alpha * received


def antenna_noise_gap(strategy: PairStrategy, obs: LocalObservation) -> float:
    """Harvested power attributable to antenna noise, ``eta * alpha * delta^2``.

    This is the difference between the two harvesting conventions of
    :func:`harvested_energy`.
    """
    if obs.antenna_noise is None:
        raise ValueError("observation carries no antenna_noise")
    return obs.efficiency * strategy.alpha * obs.antenna_noise


def best_response_arrays(own_gain, interference, eh_target, sinr_threshold, id_noise):
    """Vectorised best response.

    Parameters are broadcastable arrays of ``G_nn``, ``X_n``, ``Y_n = E_n/eta``,
    ``gamma_n`` and ``sigma_n^2``.

    Returns
    -------
    p, alpha, one_minus_alpha : ndarray
        Optimal power, splitting ratio and its complement.

    Notes
    -----
    The closed form ``p = (c + sqrt(D)) / 2G`` and ``alpha = (a - sqrt(D)) / 2X(1+g)``
    cancel catastrophically when the EH constraint dominates. The
    rationalised forms used here are algebraically identical:
    ``alpha = 2Y / (a + sqrt(D))``, ``1 - alpha = (b + sqrt(D)) / (a + sqrt(D))``
    and, for ``c < 0``, ``c + sqrt(D) = 4 g X (X + s2 - Y) / (sqrt(D) - c)``.
    """
    G = np.asarray(own_gain, dtype=float)
    X = np.asarray(interference, dtype=float)
    Y = np.asarray(eh_target, dtype=float)
    g = np.asarray(sinr_threshold, dtype=float)
    s2 = np.asarray(id_noise, dtype=float)

    b = X - Y + g * X + g * s2  # X - Y + gX + g s2
    a = b + 2.0 * Y  # X + Y + gX + g s2
    c = b - 2.0 * X + 2.0 * Y  # -X + Y + gX + g s2
    root = np.hypot(b, 2.0 * np.sqrt(g * Y * s2))

    with np.errstate(divide="ignore", invalid="ignore"):
        c_plus = np.where(c >= 0, c + root, 4.0 * g * X * (X + s2 - Y) / (root - c))
        b_plus = np.where(b >= 0, b + root, 4.0 * g * Y * s2 / (root - b))
    # Y = 0 makes sqrt(D) = |b| = b exactly; the forms above already give alpha = 0.
    p = c_plus / (2.0 * G)
    denom = a + root
    alpha = 2.0 * Y / denom
    comp = b_plus / denom

    if np.any(alpha < -_ALPHA_SLACK) or np.any(alpha > 1.0 + _ALPHA_SLACK):
        raise ArithmeticError(f"best-response splitting ratio out of range: {alpha}")
    alpha = np.clip(alpha, 0.0, ALPHA_CEILING)
    comp = np.maximum(comp, 1.0 - ALPHA_CEILING)
    return p, alpha, comp


def best_response(obs: LocalObservation) -> PairStrategy:
    """Minimum-power strategy meeting the SINR and EH targets with equality."""
    p, alpha, comp = best_response_arrays(
        obs.own_gain, obs.interference, obs.eh_power_target, obs.sinr_threshold, obs.id_noise
    )
    return PairStrategy(float(p), float(alpha), float(comp))


def splitting_ratio(p: float, obs: LocalObservation, *, rtol: float = 1e-9) -> float:
    """Splitting ratio paired with transmit power ``p`` under ``obs``.

    The optimal ratio depends on the others' powers only (through ``X_n``).
    It is feasible for every ``p`` at or above the best-response power and
    no ratio is feasible below it, so smaller ``p`` raises
    :class:`InfeasibleError`.
    """
    best = best_response(obs)
    if p < best.p * (1.0 - rtol):
        raise InfeasibleError(
            f"p={p:.6g} W is below the minimum feasible power {best.p:.6g} W; "
            "no splitting ratio meets both constraints"
        )
    return best.alpha
