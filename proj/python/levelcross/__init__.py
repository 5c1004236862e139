"""Mean, variance and Fano factor of level-crossing counts for stationary Gaussian processes."""

from ._core import (
    ConvergenceError,
    DomainError,
    Kernel,
    KernelDerivatives,
    LevelcrossError,
    ParameterError,
    SimulationError,
    ValidityError,
    abg_params,
    bruteforce_integrand,
    canonical_integrals,
    count_crossings,
    dimensionless_fano,
    erf,
    erfc,
    fano,
    integrand,
    mean_count,
    mean_rate,
    ou_mean_revert,
    ou_to_sdho,
    owens_t,
    rational_quadratic,
    sample_path,
    sdho,
    simulate,
    squared_exponential,
    variance_count,
    variance_rate,
    zero_level_stats,
)

__all__ = [name for name in dir() if not name.startswith("_")]
