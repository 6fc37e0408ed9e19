"""Robust M-estimation, weighted bootstrap and diagnostics for GARCH(p, q) models."""

__version__ = "0.1.0"

from .bootstrap import BootstrapRun, WeightScheme, bootstrap_ci, bootstrap_fit  # noqa: E402
from .errors import MGarchError  # noqa: E402
from .garch import GarchOrder, ParameterVector, SeriesData, simulate_path, variance_filter  # noqa: E402
from .inference import estimate_covariance, normal_ci  # noqa: E402
from .mest import FitConfig, FitResult, fit  # noqa: E402
from .score import ErrorDistribution, ScoreFunction, solve_cH  # noqa: E402

__all__ = [
    "BootstrapRun", "ErrorDistribution", "FitConfig", "FitResult", "GarchOrder", "MGarchError",
    "ParameterVector", "ScoreFunction", "SeriesData", "WeightScheme", "bootstrap_ci",
    "bootstrap_fit", "estimate_covariance", "fit", "normal_ci", "simulate_path", "solve_cH",
    "variance_filter",
]
