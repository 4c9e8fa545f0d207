"""Probabilistic error cancellation for non-Markovian noise."""

from ._core import (
    BathSpec,
    ConfigError,
    ExperimentConfig,
    SystemModel,
    __version__,
    coeff_matrix,
    compile_plans,
    ensemble_density,
    env_params,
    estimate,
    gamma_spectrum,
    load_config,
    parse_config,
    pauli,
    pauli_expression,
    propagate_ideal,
    propagate_noisy,
    single_pole_cutoff,
)

__all__ = [
    "BathSpec",
    "ConfigError",
    "ExperimentConfig",
    "SystemModel",
    "__version__",
    "coeff_matrix",
    "compile_plans",
    "ensemble_density",
    "env_params",
    "estimate",
    "gamma_spectrum",
    "load_config",
    "parse_config",
    "pauli",
    "pauli_expression",
    "propagate_ideal",
    "propagate_noisy",
    "single_pole_cutoff",
]
