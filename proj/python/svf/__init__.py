"""Similarity-based volatility forecast correction."""

from ._svf import (
    Error,
    GarchParams,
    FitResult,
    WeightSolution,
    simulate_path,
    unconditional_variance,
    variance_step,
    forecast,
    fit_garch,
    fit_shock_fixed_effect,
    solve_weights,
    aggregate_shock,
    realized_volatility,
    ql_loss,
    mse_loss,
    ape_loss,
    ql_advantage,
    build_delta,
    run_replication,
    enumerate_configs,
)

__all__ = [
    "Error",
    "GarchParams",
    "FitResult",
    "WeightSolution",
    "simulate_path",
    "unconditional_variance",
    "variance_step",
    "forecast",
    "fit_garch",
    "fit_shock_fixed_effect",
    "solve_weights",
    "aggregate_shock",
    "realized_volatility",
    "ql_loss",
    "mse_loss",
    "ape_loss",
    "ql_advantage",
    "build_delta",
    "run_replication",
    "enumerate_configs",
]
