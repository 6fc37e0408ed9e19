"""Weighted bootstrap of GARCH M-estimators."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParameter, MGarchError, TooFewReplicates
from .garch import ParameterVector, SeriesData
from .mest import FitConfig, FitResult, Terms, estimating_function, solve

log = logging.getLogger(__name__)

BOOT_MAX_ITER = 200
MIN_CI_REPLICATES = 50
DROP_FLAG_FRACTION = 0.05


class WeightScheme(str, enum.Enum):
    """Multinomial (M), normalised exponential (E), normalised uniform(0.5, 1.5) (U)."""

    M = "M"
    E = "E"
    U = "U"


def generate_weights(scheme: WeightScheme, n: int, seed=0) -> np.ndarray:
    """Exchangeable weights with mean one that sum to ``n``."""
    if n < 2:
        raise InvalidParameter("need n >= 2 for bootstrap weights")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    scheme = WeightScheme(scheme)
    if scheme is WeightScheme.M:
        return rng.multinomial(n, np.full(n, 1.0 / n)).astype(float)
    raw = rng.exponential(1.0, n) if scheme is WeightScheme.E else rng.uniform(0.5, 1.5, n)
    return n * raw / raw.sum()


def weighted_estimating_function(theta: ParameterVector, data: SeriesData, score,
                                 weights: np.ndarray) -> np.ndarray:
    return estimating_function(theta, data, score, weights=np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class BootstrapRun:
    """Replicates of the weighted M-estimator centred at ``theta_hat``.

    ``replicates`` has one row per replicate; rows for replicates that did not
    converge are NaN and are excluded by ``valid``.
    """

    theta_hat: ParameterVector
    replicates: np.ndarray
    converged: np.ndarray
    sigma_n: float
    scheme: WeightScheme
    n: int
    seed: int

    @property
    def B(self) -> int:
        return self.replicates.shape[0]

    @property
    def b_converged(self) -> int:
        return int(self.converged.sum())

    @property
    def flagged(self) -> bool:
        return self.B - self.b_converged > DROP_FLAG_FRACTION * self.B

    @property
    def valid(self) -> np.ndarray:
        return self.replicates[self.converged]

    def scaled(self) -> np.ndarray:
        """``sigma_n^{-1} n^{1/2} (theta*_b - theta_hat)`` for the converged replicates."""
        return np.sqrt(self.n) * (self.valid - self.theta_hat.array) / self.sigma_n


def _replicate_seeds(seed: int, B: int):
    return np.random.SeedSequence(seed).spawn(B)


def _run_chunk(args):
    (data, score, order, center, factor, max_iter, rel_tol, alpha_floor, scheme, seeds,
     terms, weight_hook) = args
    rows, ok, wvars = [], [], []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        w = weight_hook(data.n) if weight_hook is not None else generate_weights(scheme, data.n, rng)
        wvars.append(np.var(w, ddof=1))
        try:
            theta, _, _, _, _, conv, _, _ = solve(
                data, score, order, center, factor, max_iter, rel_tol,
                weights=w, start_terms=terms, keep_trace=False, alpha_floor=alpha_floor)
        except MGarchError:
            theta, conv = np.full(order.k, np.nan), False
        rows.append(theta if conv else np.full(order.k, np.nan))
        ok.append(conv)
    return rows, ok, wvars


def bootstrap_fit(data: SeriesData, fit: FitResult, config: FitConfig,
                  scheme: WeightScheme, B: int, seed: int = 0, *,
                  max_iter: int = BOOT_MAX_ITER, cache: bool = True, n_jobs: int = 1,
                  weight_hook: Optional[Callable[[int], np.ndarray]] = None) -> BootstrapRun:
    """Re-solve the weighted estimating equation ``B`` times starting from ``fit.theta_hat``.

    With ``cache`` the per-observation terms at ``theta_hat`` are computed once
    and shared by every replicate's first iteration.  ``weight_hook`` replaces
    the weight generator (used for testing).
    """
    if not fit.converged:
        raise InvalidParameter("bootstrap requires a converged fit")
    if B < 1:
        raise InvalidParameter("B must be >= 1")
    scheme = WeightScheme(scheme)
    order = config.order
    center = fit.theta_hat.array
    terms = Terms.at(fit.theta_hat, data, config.score) if cache else None
    seeds = _replicate_seeds(seed, B)
    common = (data, config.score, order, center, config.step_factor, max_iter,
              config.rel_tol, config.alpha_floor, scheme)
    if n_jobs > 1 and B > 1:
        chunks = [seeds[i::n_jobs] for i in range(n_jobs)]
        with ProcessPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(_run_chunk, [common + (c, terms, weight_hook) for c in chunks]))
        rows = np.empty((B, order.k))
        ok = np.empty(B, dtype=bool)
        wv = np.empty(B)
        for i, (r, o, v) in enumerate(parts):
            rows[i::n_jobs], ok[i::n_jobs], wv[i::n_jobs] = r, o, v
    else:
        r, o, v = _run_chunk(common + (seeds, terms, weight_hook))
        rows, ok, wv = np.array(r), np.array(o, dtype=bool), np.array(v)
    sigma_n = float(np.sqrt(np.mean(wv)))
    run = BootstrapRun(fit.theta_hat, rows, ok, sigma_n, scheme, data.n, seed)
    if run.flagged:
        log.warning("bootstrap: %d of %d replicates did not converge", B - run.b_converged, B)
    return run


def bootstrap_ci(run: BootstrapRun, level: float, method: str = "basic") -> np.ndarray:
    """Per-coordinate bootstrap intervals, shape ``(k, 2)``.

    The scaled replicate cloud ``sigma_n^{-1} (theta* - theta_hat)`` stands in for
    ``theta_hat - theta_0H``; ``basic`` inverts that pivot, ``percentile``
    shifts ``theta_hat`` by the cloud's quantiles directly.
    """
    if not 0 < level < 1:
        raise InvalidParameter("level must lie in (0, 1)")
    if run.b_converged < MIN_CI_REPLICATES:
        raise TooFewReplicates(f"{run.b_converged} converged replicates; "
                               f"need {MIN_CI_REPLICATES}")
    a = 1.0 - level
    center = run.theta_hat.array
    dev = (run.valid - center) / run.sigma_n
    lo_q = np.quantile(dev, a / 2, axis=0)
    hi_q = np.quantile(dev, 1 - a / 2, axis=0)
    if method == "basic":
        ci = np.column_stack((center - hi_q, center - lo_q))
    elif method == "percentile":
        ci = np.column_stack((center + lo_q, center + hi_q))
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.sort(ci, axis=1)


def bootstrap_bias_mse(run: BootstrapRun) -> tuple[np.ndarray, np.ndarray]:
    """Mean and mean square of the scaled replicates."""
    if run.b_converged < 1:
        raise TooFewReplicates("no converged replicates")
    z = run.scaled()
    return z.mean(axis=0), (z * z).mean(axis=0)
