"""Network instances, unit conversions and seeded Rayleigh channel draws.

All quantities held by :class:`Scenario` are linear (watts, W/W). dB and
dBm only show up at the file boundary (:func:`load_scenario`,
:func:`scenario_to_dict`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Any, Mapping

import numpy as np

__all__ = [
    "ChannelConfig",
    "RNG_ALGORITHM",
    "Scenario",
    "ScenarioError",
    "db_to_linear",
    "dbm_to_watt",
    "draw_fading",
    "generate_rayleigh_scenario",
    "linear_to_db",
    "load_scenario",
    "make_rng",
    "mean_gains",
    "scenario_from_dict",
    "scenario_to_dict",
    "watt_to_dbm",
]

RNG_ALGORITHM = "numpy PCG64 seeded via SeedSequence(seed, spawn_key)"

# Default network parameters of the reference numerical setup.
DEFAULT_EFFICIENCY = 0.5
DEFAULT_PATH_LOSS_EXPONENT = 3.0
DEFAULT_ANTENNA_NOISE_DBM = -60.0
DEFAULT_ID_NOISE_DBM = -50.0
DEFAULT_INNER_DISTANCE = 5.0
DEFAULT_INTER_DISTANCE = 10.0
DEFAULT_ATTENUATION_AT_1M = 1e-3


class ScenarioError(ValueError):
    """Invalid scenario data. ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------
def dbm_to_watt(x):
    """Convert a power in dBm to watts (works elementwise on arrays)."""
    out = 10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0)
    return out if np.ndim(x) else float(out)


def watt_to_dbm(x):
    """Convert a power in watts to dBm. Non-positive powers are rejected."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"power must be positive to convert to dBm, got {x!r}")
    out = 10.0 * np.log10(arr) + 30.0
    return out if np.ndim(x) else float(out)


def db_to_linear(x):
    arr = np.asarray(x, dtype=float)
    out = 10.0 ** (arr / 10.0)
    return out if np.ndim(x) else float(out)


def linear_to_db(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"ratio must be positive to convert to dB, got {x!r}")
    out = 10.0 * np.log10(arr)
    return out if np.ndim(x) else float(out)


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------
def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _per_pair(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ScenarioError(name, f"expected a scalar or {n} values, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """A full N-pair network instance.

    Parameters
    ----------
    gains : (N, N) array
        Linear power gains, ``gains[m, n]`` is the gain from source ``m`` to
        destination ``n``. The diagonal holds the direct links.
    antenna_noise : (N,) array
        Antenna noise power at each destination, watts.
    id_noise : (N,) array
        Baseband noise added by each information-decoding circuit, watts.
    sinr_threshold : (N,) array
        Linear SINR targets.
    eh_threshold : (N,) array
        Harvested-energy targets, watts. Zero disables the EH requirement.
    efficiency : float
        Energy conversion efficiency in (0, 1).

    Scalars are broadcast to all pairs. Arrays are copied and made
    read-only, so instances can be shared freely.
    """

    gains: np.ndarray
    antenna_noise: np.ndarray
    id_noise: np.ndarray
    sinr_threshold: np.ndarray
    eh_threshold: np.ndarray
    efficiency: float
    n_pairs: int = field(init=False)

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=float)
        if gains.ndim != 2 or gains.shape[0] != gains.shape[1] or gains.shape[0] < 1:
            raise ScenarioError("gains", f"expected a non-empty square matrix, got shape {gains.shape}")
        n = gains.shape[0]
        if not np.all(np.isfinite(gains)) or np.any(gains < 0):
            raise ScenarioError("gains", "entries must be finite and nonnegative")
        if np.any(np.diag(gains) <= 0):
            raise ScenarioError("gains", "direct-link (diagonal) gains must be positive")

        checks = {
            "antenna_noise": (lambda a: a > 0, "must be positive"),
            "id_noise": (lambda a: a > 0, "must be positive"),
            "sinr_threshold": (lambda a: a > 0, "must be positive"),
            "eh_threshold": (lambda a: a >= 0, "must be nonnegative"),
        }
        for name, (ok, msg) in checks.items():
            arr = _per_pair(getattr(self, name), n, name)
            if not np.all(np.isfinite(arr)) or not np.all(ok(arr)):
                raise ScenarioError(name, msg)
            object.__setattr__(self, name, _frozen(arr))

        eff = float(self.efficiency)
        if not 0.0 < eff < 1.0:
            raise ScenarioError("efficiency", f"must lie in (0, 1), got {eff}")
        object.__setattr__(self, "efficiency", eff)
        object.__setattr__(self, "gains", _frozen(gains))
        object.__setattr__(self, "n_pairs", n)

    @property
    def direct_gains(self) -> np.ndarray:
        return np.diag(self.gains).copy()

    def interference(self, p) -> np.ndarray:
        """Interference plus antenna noise seen at every destination.

        ``X_n = sum_{m != n} p_m G[m, n] + antenna_noise[n]``.
        """
        p = np.asarray(p, dtype=float)
        off = self.gains - np.diag(np.diag(self.gains))
        return p @ off + self.antenna_noise

    def replace(self, **changes) -> "Scenario":
        kwargs = {
            "gains": self.gains,
            "antenna_noise": self.antenna_noise,
            "id_noise": self.id_noise,
            "sinr_threshold": self.sinr_threshold,
            "eh_threshold": self.eh_threshold,
            "efficiency": self.efficiency,
        }
        kwargs.update(changes)
        return Scenario(**kwargs)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.efficiency == other.efficiency
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("gains", "antenna_noise", "id_noise", "sinr_threshold", "eh_threshold")
            )
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# channel generation
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ChannelConfig:
    """Geometry of a Rayleigh-faded network.

    ``inter_distance`` is either one distance shared by every cross link or
    a full ``(N, N)`` matrix indexed ``[source, destination]`` (its diagonal
    is ignored). ``inner_distance`` may be a scalar or one value per pair.
    """

    n_pairs: int
    inner_distance: Any = DEFAULT_INNER_DISTANCE
    inter_distance: Any = DEFAULT_INTER_DISTANCE
    path_loss_exponent: float = DEFAULT_PATH_LOSS_EXPONENT
    attenuation_at_1m: float = DEFAULT_ATTENUATION_AT_1M
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.n_pairs) < 1:
            raise ScenarioError("n_pairs", "must be a positive integer")
        if not 2.0 <= float(self.path_loss_exponent) <= 5.0:
            raise ScenarioError("zeta", f"path-loss exponent must lie in [2, 5], got {self.path_loss_exponent}")
        if not float(self.attenuation_at_1m) > 0:
            raise ScenarioError("attenuation_at_1m", "must be positive")
        self.distances()  # validates shapes and signs

    def distances(self) -> np.ndarray:
        """Full ``(N, N)`` distance matrix, ``[source, destination]``."""
        n = int(self.n_pairs)
        inner = _per_pair(self.inner_distance, n, "inner_distance")
        inter = np.asarray(self.inter_distance, dtype=float)
        if inter.ndim == 0:
            d = np.full((n, n), float(inter))
        elif inter.shape == (n, n):
            d = inter.copy()
        else:
            raise ScenarioError("inter_distance", f"expected a scalar or ({n}, {n}) matrix, got shape {inter.shape}")
        np.fill_diagonal(d, inner)
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ScenarioError("distances", "all link distances must be positive")
        return d


def mean_gains(cfg: ChannelConfig) -> np.ndarray:
    """Average power gain of every link, ``attenuation * d ** -zeta``."""
    return cfg.attenuation_at_1m * cfg.distances() ** (-float(cfg.path_loss_exponent))


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``; see :data:`RNG_ALGORITHM`."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def draw_fading(n_pairs: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-mean exponential power fading for every link (Rayleigh amplitude)."""
    return rng.standard_exponential((n_pairs, n_pairs))


def generate_rayleigh_scenario(
    cfg: ChannelConfig,
    *,
    sinr_threshold,
    eh_threshold,
    antenna_noise=None,
    id_noise=None,
    efficiency: float = DEFAULT_EFFICIENCY,
    rng: np.random.Generator | None = None,
) -> Scenario:
    """Draw one quasi-static Rayleigh realisation of the network in ``cfg``.

    Every gain is exponential with mean ``attenuation * d ** -zeta``. All
    constraint values are linear (watts / ratios); ``None`` noise values
    fall back to -60 dBm (antenna) and -50 dBm (ID circuit). When ``rng``
    is omitted a generator seeded from ``cfg.rng_seed`` is used, so equal
    configs give identical scenarios.
    """
    if rng is None:
        rng = make_rng(cfg.rng_seed)
    if antenna_noise is None:
        antenna_noise = dbm_to_watt(DEFAULT_ANTENNA_NOISE_DBM)
    if id_noise is None:
        id_noise = dbm_to_watt(DEFAULT_ID_NOISE_DBM)
    gains = mean_gains(cfg) * draw_fading(cfg.n_pairs, rng)
    return Scenario(
        gains=gains,
        antenna_noise=antenna_noise,
        id_noise=id_noise,
        sinr_threshold=sinr_threshold,
        eh_threshold=eh_threshold,
        efficiency=efficiency,
    )


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------
def _eh_dbm_to_watt(value, n):
    # null (or -inf) in the file means "no EH requirement"
    if value is None:
        return np.zeros(n)
    items = value if isinstance(value, (list, tuple)) else [value] * n
    if len(items) != n:
        raise ScenarioError("eh_threshold_dbm", f"expected {n} values, got {len(items)}")
    out = []
    for v in items:
        if v is None:
            out.append(0.0)
            continue
        v = _number(v, "eh_threshold_dbm")
        out.append(0.0 if v == -math.inf else dbm_to_watt(v))
    return np.array(out)


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(name, f"expected a number, got {v!r}")
    return float(v)


def _numeric_array(v, name):
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ScenarioError(name, f"expected numbers, got {v!r}") from None
    if np.any(np.isnan(arr)):
        raise ScenarioError(name, "contains NaN")
    return arr


def scenario_from_dict(doc: Mapping[str, Any]) -> Scenario:
    """Build a scenario from the JSON document layout.

    Explicit form::

        {"n_pairs": 2, "gains": [[...], [...]],
         "antenna_noise_dbm": -60, "id_noise_dbm": -50,
         "sinr_threshold_db": 5, "eh_threshold_dbm": -20, "efficiency": 0.5}

    ``gains`` is row-major with rows indexed by source. Per-pair fields
    accept a scalar or a list. Replacing ``gains`` with ``inter_distance``
    (scalar or matrix) or ``distances`` (full matrix, diagonal = direct
    links), plus optional ``inner_distance``, ``zeta`` and ``seed``, draws
    the gains from the Rayleigh model instead.
    """
    if not isinstance(doc, Mapping):
        raise ScenarioError("<document>", "expected a JSON object")
    n = doc.get("n_pairs")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ScenarioError("n_pairs", f"expected a positive integer, got {n!r}")

    def per_pair_db(name, default=None, convert=dbm_to_watt):
        if name not in doc:
            if default is None:
                raise ScenarioError(name, "missing required field")
            return convert(np.full(n, default))
        arr = _numeric_array(doc[name], name)
        if not np.all(np.isfinite(arr)):
            raise ScenarioError(name, "values must be finite")
        return convert(_per_pair(arr, n, name))

    antenna = per_pair_db("antenna_noise_dbm", DEFAULT_ANTENNA_NOISE_DBM)
    idn = per_pair_db("id_noise_dbm", DEFAULT_ID_NOISE_DBM)
    gamma = per_pair_db("sinr_threshold_db", convert=db_to_linear)
    if "eh_threshold_dbm" not in doc:
        raise ScenarioError("eh_threshold_dbm", "missing required field")
    eh = _eh_dbm_to_watt(doc["eh_threshold_dbm"], n)
    eff = _number(doc.get("efficiency", DEFAULT_EFFICIENCY), "efficiency")

    if "gains" in doc:
        gains = _numeric_array(doc["gains"], "gains")
        if gains.shape != (n, n):
            raise ScenarioError("gains", f"expected a {n}x{n} matrix, got shape {gains.shape}")
    else:
        if "distances" in doc:
            d = _numeric_array(doc["distances"], "distances")
            if d.shape != (n, n):
                raise ScenarioError("distances", f"expected a {n}x{n} matrix, got shape {d.shape}")
            inner, inter = np.diag(d).copy(), d
        elif "inter_distance" in doc:
            inter = _numeric_array(doc["inter_distance"], "inter_distance")
            inner = _numeric_array(doc.get("inner_distance", DEFAULT_INNER_DISTANCE), "inner_distance")
        else:
            raise ScenarioError("gains", "missing: give 'gains' or a distance description")
        seed = doc.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ScenarioError("seed", f"expected a nonnegative integer, got {seed!r}")
        cfg = ChannelConfig(
            n_pairs=n,
            inner_distance=inner,
            inter_distance=inter,
            path_loss_exponent=_number(doc.get("zeta", DEFAULT_PATH_LOSS_EXPONENT), "zeta"),
            attenuation_at_1m=_number(doc.get("attenuation_at_1m", DEFAULT_ATTENUATION_AT_1M), "attenuation_at_1m"),
            rng_seed=seed,
        )
        gains = mean_gains(cfg) * draw_fading(n, make_rng(seed))

    return Scenario(
        gains=gains,
        antenna_noise=antenna,
        id_noise=idn,
        sinr_threshold=gamma,
        eh_threshold=eh,
        efficiency=eff,
    )


def load_scenario(path: str | PathLike) -> Scenario:
    """Read a scenario JSON file (see :func:`scenario_from_dict`)."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError("<document>", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)


def scenario_to_dict(s: Scenario) -> dict:
    """Explicit-form JSON document for ``s`` (inverse of :func:`scenario_from_dict`)."""
    eh = [None if e == 0 else watt_to_dbm(e) for e in s.eh_threshold]
    return {
        "n_pairs": s.n_pairs,
        "gains": s.gains.tolist(),
        "antenna_noise_dbm": watt_to_dbm(s.antenna_noise).tolist(),
        "id_noise_dbm": watt_to_dbm(s.id_noise).tolist(),
        "sinr_threshold_db": linear_to_db(s.sinr_threshold).tolist(),
        "eh_threshold_dbm": eh,
        "efficiency": s.efficiency,
    }
