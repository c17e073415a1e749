"""Simulation and large-deviation analysis of Brownian motion with
Poissonian resetting to the origin.

The package simulates the diffusively scaled process, evaluates the
associated large-deviation rate functionals in closed form on
piecewise-linear paths, tabulates the supremum rate with its optimal paths,
and verifies the predicted decay against crude and multilevel-splitting
Monte Carlo.
"""

__version__ = "0.1.0"

from .montecarlo import (
    ConvergenceTable,
    EstimatorBudget,
    ExtinctionError,
    McEstimate,
    default_levels,
    estimate_crude,
    estimate_splitting,
    ldp_convergence_table,
    sample_sup_abs,
    tube_probability,
    wiener_sup_one_sided,
    wiener_sup_oracle,
    wilson_interval,
    write_convergence_csv,
)
from .paths import (
    PathSchemaError,
    PiecewiseLinearPath,
    flat_then_ramp,
    load_path_json,
    path_from_json_dict,
    ramp,
    zero_path,
)
from .process import (
    ModelParams,
    TrajectorySample,
    derive_rng,
    grid_sup_abs,
    simulate_reset_epochs,
    simulate_trajectory,
    sup_abs_of,
    write_trajectory_csv,
    write_trajectory_sidecar,
)
from .rates import (
    RateResult,
    Violation,
    classify_tilde_ac0,
    nonzero_measure,
    rate_poisson,
    rate_reset,
    rate_wiener,
)
from .suprate import (
    Regime,
    SupRatePoint,
    optimal_path,
    reduced_objective,
    sup_rate,
    variational_minimize,
    write_sup_curve_csv,
)

__all__ = [
    "__version__",
    "ConvergenceTable",
    "EstimatorBudget",
    "ExtinctionError",
    "McEstimate",
    "ModelParams",
    "PathSchemaError",
    "PiecewiseLinearPath",
    "RateResult",
    "Regime",
    "SupRatePoint",
    "TrajectorySample",
    "Violation",
    "classify_tilde_ac0",
    "default_levels",
    "derive_rng",
    "estimate_crude",
    "estimate_splitting",
    "flat_then_ramp",
    "grid_sup_abs",
    "ldp_convergence_table",
    "load_path_json",
    "nonzero_measure",
    "optimal_path",
    "path_from_json_dict",
    "ramp",
    "rate_poisson",
    "rate_reset",
    "rate_wiener",
    "reduced_objective",
    "sample_sup_abs",
    "simulate_reset_epochs",
    "simulate_trajectory",
    "sup_abs_of",
    "sup_rate",
    "tube_probability",
    "variational_minimize",
    "wiener_sup_one_sided",
    "wiener_sup_oracle",
    "wilson_interval",
    "write_convergence_csv",
    "write_sup_curve_csv",
    "write_trajectory_csv",
    "write_trajectory_sidecar",
    "zero_path",
]
