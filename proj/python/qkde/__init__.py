"""Quantum-kernel solver for regression and differential equations."""

from ._qkde import (
    ConfigError,
    DataError,
    Error,
    IoError,
    Kernel,
    NumericalError,
    UsageError,
    canonical_config,
    estimate_kernel,
    fit_regression,
    gram,
    kernel_derivative,
    kernel_value,
    predict,
    problem_names,
    product_kernel,
    product_map_closed_form,
    quantum_kernel,
    rbf_kernel,
    reference_solution,
    run_config_file,
    run_config_text,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "IoError",
    "Kernel",
    "NumericalError",
    "UsageError",
    "canonical_config",
    "estimate_kernel",
    "fit_regression",
    "gram",
    "kernel_derivative",
    "kernel_value",
    "predict",
    "problem_names",
    "product_kernel",
    "product_map_closed_form",
    "quantum_kernel",
    "rbf_kernel",
    "reference_solution",
    "run_config_file",
    "run_config_text",
]
