"""Distributed power control game for SWIPT interference channels.

Pairs choose a transmit power and a power-splitting ratio to meet SINR and
energy-harvesting targets at minimum power. The package provides the
closed-form best response, the existence/uniqueness test, best-response
dynamics, brute-force reference solvers and Monte Carlo sweeps.
"""

from .equilibrium import (
    DynamicsResult,
    ExistenceReport,
    best_response_dynamics,
    build_omega,
    contraction_gap,
    existence_check,
    spectral_radius,
    verify_ne,
    z_factor,
)
from .game import (
    InfeasibleError,
    LocalObservation,
    PairStrategy,
    StrategyProfile,
    best_response,
    harvested_energy,
    observe,
    sinr,
    splitting_ratio,
)
from .oracle import GridConfig, brute_force_best_response, feasible_alpha_interval, oracle_min_total_power
from .scenario import (
    ChannelConfig,
    Scenario,
    ScenarioError,
    dbm_to_watt,
    generate_rayleigh_scenario,
    load_scenario,
    watt_to_dbm,
)

__all__ = [
    "ChannelConfig",
    "DynamicsResult",
    "ExistenceReport",
    "GridConfig",
    "InfeasibleError",
    "LocalObservation",
    "PairStrategy",
    "Scenario",
    "ScenarioError",
    "StrategyProfile",
    "best_response",
    "best_response_dynamics",
    "brute_force_best_response",
    "build_omega",
    "contraction_gap",
    "dbm_to_watt",
    "existence_check",
    "feasible_alpha_interval",
    "generate_rayleigh_scenario",
    "harvested_energy",
    "load_scenario",
    "observe",
    "oracle_min_total_power",
    "sinr",
    "spectral_radius",
    "splitting_ratio",
    "verify_ne",
    "watt_to_dbm",
    "z_factor",
]
