"""Dual relative degree control barrier functions."""

from ._core import (
    ConfigError,
    RankError,
    SimulationError,
    audit,
    bundled_scenario,
    check_parameter_condition,
    ellipse_h0,
    geofence_h,
    lemma_bound,
    obstacle_h,
    qp_filter,
    run_cli,
    simulate,
    simulate_csv,
    verify,
)

__all__ = [
    "ConfigError",
    "RankError",
    "SimulationError",
    "audit",
    "bundled_scenario",
    "check_parameter_condition",
    "ellipse_h0",
    "geofence_h",
    "lemma_bound",
    "obstacle_h",
    "qp_filter",
    "run_cli",
    "simulate",
    "simulate_csv",
    "verify",
]
