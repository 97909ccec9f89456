"""Calibrated sequence sets for cheap finite-sample bias and variance estimates."""

from ._version import __version__
from .calib import (
    CalibratedSet,
    CalibrationProblem,
    SetPool,
    WeightSolution,
    bar_search,
    build_system,
    calibrate_designed,
    multi_dist_pool,
    solve_weights,
)
from .correct import FiniteSampleCorrector
from .dist import DistributionSpec, MomentVector, parse_dist
from .estimate import (
    BiasCurve,
    EstimatorSpec,
    RMSEReport,
    SSEReport,
    bias_curve,
    mc_baseline,
    parse_estimator,
    rmse,
    scaled_standard_error,
    standard_error,
    weighted_expectation,
    weighted_variance,
)
from .exceptions import (
    DegenerateScaleError,
    DimensionError,
    DomainError,
    ParameterError,
    SearchExhausted,
    SeqcalError,
    UnsupportedError,
)

__all__ = [
    "__version__",
    "CalibratedSet",
    "CalibrationProblem",
    "SetPool",
    "WeightSolution",
    "bar_search",
    "build_system",
    "calibrate_designed",
    "multi_dist_pool",
    "solve_weights",
    "FiniteSampleCorrector",
    "BiasCurve",
    "EstimatorSpec",
    "RMSEReport",
    "SSEReport",
    "bias_curve",
    "mc_baseline",
    "parse_estimator",
    "rmse",
    "scaled_standard_error",
    "standard_error",
    "weighted_expectation",
    "weighted_variance",
    "DistributionSpec",
    "MomentVector",
    "parse_dist",
    "DegenerateScaleError",
    "DimensionError",
    "DomainError",
    "ParameterError",
    "SearchExhausted",
    "SeqcalError",
    "UnsupportedError",
]
