"""VARX models with per-link Granger significance tests.

Estimation is closed-form (ridge-regularized least squares on a lagged
design), each link is scored by a chi-square deviance test with optional
de-biasing under regularization, long input filters can be compressed with
Gaussian basis windows, and simulators plus a Monte Carlo harness support
calibration studies. The :class:`VARX` estimator is the main entry point;
the functional layer underneath is exported for direct use.
"""

from .design import (
    BasisMatrix,
    CorrelationBundle,
    LagSpec,
    PredictorColumn,
    TimeSeries,
    as_time_series,
    build_correlations,
    demean,
    gaussian_basis,
)
from .dynamics import (
    GeneratorSpec,
    ImpulseResponse,
    companion_matrix,
    impulse_response,
    simulate,
    spectral_radius,
)
from .estimator import VARX
from .exceptions import (
    AllMissingChannelError,
    DebiasUnavailableError,
    InsufficientDataError,
    NoConvergenceError,
    NotPositiveDefiniteError,
    NoValidSamplesError,
    SimulationDivergedError,
    VarxError,
)
from .inference import (
    PermutationResult,
    RegularizationSpec,
    VarxFit,
    debias_term,
    effect_size_matrix,
    granger_test,
    permutation_null,
    residual_stats,
    ridge_solve,
)
from .numkernel import SpdSolveResult, chi2_cdf, chi2_sf, spd_solve

__version__ = "0.1.0"

__all__ = [
    "VARX",
    "AllMissingChannelError",
    "BasisMatrix",
    "CorrelationBundle",
    "DebiasUnavailableError",
    "GeneratorSpec",
    "ImpulseResponse",
    "InsufficientDataError",
    "LagSpec",
    "NoConvergenceError",
    "NotPositiveDefiniteError",
    "NoValidSamplesError",
    "PermutationResult",
    "PredictorColumn",
    "RegularizationSpec",
    "SimulationDivergedError",
    "SpdSolveResult",
    "TimeSeries",
    "VarxError",
    "VarxFit",
    "as_time_series",
    "build_correlations",
    "chi2_cdf",
    "chi2_sf",
    "companion_matrix",
    "debias_term",
    "demean",
    "effect_size_matrix",
    "gaussian_basis",
    "granger_test",
    "impulse_response",
    "permutation_null",
    "residual_stats",
    "ridge_solve",
    "simulate",
    "spd_solve",
    "spectral_radius",
]
