"""Python bindings for the lsainfer C++ core."""

from ._core import (
    ConfigError,
    DivergenceError,
    Instance,
    LsaError,
    StepSchedule,
    Trajectory,
    __version__,
    bootstrap,
    clt_rates,
    confidence_sets,
    coverage,
    covariance_gap,
    halfspace_distance,
    kolmogorov_normal_vs_normal_1d,
    lower_bound_sigma_n_1d,
    lyapunov_solve,
    rate_fit,
    run,
    sigma_inf,
    sigma_n,
    stability_constants,
)

__all__ = [
    "ConfigError",
    "DivergenceError",
    "Instance",
    "LsaError",
    "StepSchedule",
    "Trajectory",
    "__version__",
    "bootstrap",
    "clt_rates",
    "confidence_sets",
    "coverage",
    "covariance_gap",
    "halfspace_distance",
    "kolmogorov_normal_vs_normal_1d",
    "lower_bound_sigma_n_1d",
    "lyapunov_solve",
    "rate_fit",
    "run",
    "sigma_inf",
    "sigma_n",
    "stability_constants",
]
