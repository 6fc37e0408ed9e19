"""Plug-in asymptotic covariance and normal confidence intervals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import InvalidParameter, SingularG
from .garch import SeriesData, variance_filter
from .mest import FitResult
from .score import ScoreFunction

G_COND_MAX = 1e12


@dataclass(frozen=True)
class AsymptoticCovariance:
    sigma2_H: float
    G_hat: np.ndarray
    cov: np.ndarray

    def std_errors(self, n: int) -> np.ndarray:
        """Standard errors of the estimate itself, ``sqrt(diag(cov) / n)``."""
        return np.sqrt(np.diag(self.cov) / n)


def normal_quantile(p):
    """Standard normal inverse CDF."""
    return special.ndtri(p)


def score_factor_hat(residuals: np.ndarray, score: ScoreFunction) -> float:
    """``4 Var H(r) / (mean r H_dot(r))^2`` over the residuals."""
    r = np.asarray(residuals, dtype=float)
    h = score.H(r)
    var = float(np.var(h, ddof=1)) if r.size > 1 else 0.0
    if var == 0.0:
        return 0.0
    d = float(np.mean(r * score.H_dot(r)))
    return 4.0 * var / d**2


def estimate_G(fit: FitResult, data: SeriesData) -> np.ndarray:
    out = variance_filter(fit.theta_hat, data)
    z = out.grad / out.v[:, None]
    G = z.T @ z / data.n
    return 0.5 * (G + G.T)


def estimate_covariance(data: SeriesData, fit: FitResult, score: ScoreFunction) -> AsymptoticCovariance:
    """``sigma2_H * G^{-1}`` with both factors estimated at the fitted point."""
    if not fit.converged:
        raise InvalidParameter("covariance requires a converged fit")
    G = estimate_G(fit, data)
    d = np.sqrt(np.diag(G))
    if not np.all(d > 0):
        raise SingularG("G has a zero diagonal entry")
    scaled = G / np.outer(d, d)
    cond = np.linalg.cond(scaled)
    if not cond < G_COND_MAX:
        raise SingularG(f"G condition number {cond:.3g} exceeds {G_COND_MAX:g}")
    try:
        cf = linalg.cho_factor(scaled)
    except linalg.LinAlgError as exc:
        raise SingularG(str(exc)) from exc
    Ginv = linalg.cho_solve(cf, np.eye(len(d))) / np.outer(d, d)
    Ginv = 0.5 * (Ginv + Ginv.T)
    s2 = score_factor_hat(fit.residuals, score)
    return AsymptoticCovariance(s2, G, s2 * Ginv)


def normal_ci(fit: FitResult, cov: AsymptoticCovariance, level: float) -> np.ndarray:
    """``theta_hat -/+ n^{-1/2} d z_{1-a/2}`` per coordinate, shape ``(k, 2)``."""
    if not 0 < level < 1:
        raise InvalidParameter("level must lie in (0, 1)")
    z = normal_quantile(1.0 - (1.0 - level) / 2.0)
    half = np.sqrt(np.diag(cov.cov)) * z / np.sqrt(fit.n)
    center = fit.theta_hat.array
    return np.column_stack((center - half, center + half))
