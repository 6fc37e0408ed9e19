"""Post-fit diagnostics: normalized volatility and QQ data against Student t references."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidParameter
from .garch import ParameterVector, SeriesData, variance_filter
from .mest import FitResult

UPPER_TAIL = 0.9
CENTRAL = (0.25, 0.75)


def t_quantile(p, d: float):
    """Inverse CDF of Student's t with ``d > 0`` (possibly fractional) degrees of freedom."""
    if not d > 0:
        raise InvalidParameter("degrees of freedom must be positive")
    return special.stdtrit(d, np.asarray(p, dtype=float))


def t_cdf(x, d: float):
    if not d > 0:
        raise InvalidParameter("degrees of freedom must be positive")
    return special.stdtr(d, np.asarray(x, dtype=float))


@dataclass(frozen=True)
class VolatilitySeries:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 1 or u.size == 0 or not np.all(u > 0):
            raise InvalidParameter("normalized volatility must be a non-empty positive vector")
        object.__setattr__(self, "u", u)


def normalized_volatility_at(theta: ParameterVector, data: SeriesData) -> VolatilitySeries:
    v = variance_filter(theta, data).v
    return VolatilitySeries(v / v.sum())


def normalized_volatility(fit: FitResult, data: SeriesData) -> VolatilitySeries:
    """``v_t / sum_i v_i`` at the fitted parameter, free of the ``c_H`` scale."""
    if not fit.converged:
        raise InvalidParameter("normalized volatility requires a converged fit")
    return normalized_volatility_at(fit.theta_hat, data)


@dataclass(frozen=True)
class QQData:
    sorted_residuals: np.ndarray
    reference_quantiles: np.ndarray
    d: float

    @property
    def positions(self) -> np.ndarray:
        n = self.sorted_residuals.size
        return (np.arange(1, n + 1) - 0.5) / n

    @property
    def tail_slope(self) -> float:
        return tail_slope(self)

    def max_cdf_deviation(self) -> float:
        """``max_i |F_d(r_(i)) - (i - 0.5)/n|``, comparable with a Kolmogorov band."""
        return float(np.max(np.abs(t_cdf(self.sorted_residuals, self.d) - self.positions)))


def qq_against_t(residuals, d: float) -> QQData:
    """Sorted residuals against ``t(d)`` quantiles at positions ``(i - 0.5)/n``."""
    r = np.sort(np.asarray(residuals, dtype=float).ravel())
    if r.size == 0:
        raise InvalidParameter("residuals must be non-empty")
    n = r.size
    q = t_quantile((np.arange(1, n + 1) - 0.5) / n, d)
    return QQData(r, q, float(d))


def _slope(x, y):
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


def tail_slope(qq: QQData) -> float:
    """Signed heavy-tail statistic.

    Least-squares slope of the upper-decile QQ points divided by the slope of
    the interquartile points, minus one.  The ratio removes the residual
    scale, so zero means the tail matches the reference, positive values
    mean the residuals have the heavier tail and negative values the lighter.
    """
    p = qq.positions
    up = p > UPPER_TAIL
    mid = (p > CENTRAL[0]) & (p < CENTRAL[1])
    if up.sum() < 2 or mid.sum() < 2:
        raise InvalidParameter("too few residuals for a tail slope")
    x, y = qq.reference_quantiles, qq.sorted_residuals
    return _slope(x[up], y[up]) / _slope(x[mid], y[mid]) - 1.0


def ks_critical(n: int, level: float = 0.99) -> float:
    """Asymptotic one-sample Kolmogorov critical value ``c / sqrt(n)``."""
    from scipy.stats import kstwobign

    return float(kstwobign.ppf(level) / np.sqrt(n))
