"""Monte Carlo harness: bias/MSE tables, coverage of confidence intervals, over-fitted orders.

Every replication ``r`` draws its randomness from ``SeedSequence(seed).spawn(R)[r]``
(see :func:`replication_seeds`), so a study is reproducible whatever the
worker count and results are aggregated in replication order.  Within a
replication, child 0 of that sequence drives the simulated path shared by
all estimators and child ``1 + j`` seeds the bootstraps of estimator ``j``,
one grandchild per weight scheme (see :func:`child_seed`).
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .bootstrap import WeightScheme, bootstrap_ci, bootstrap_fit
from .errors import InvalidParameter, MGarchError, TooFewReplicates
from .garch import DEFAULT_BURN_IN, GarchOrder, ParameterVector, SeriesData, scale_by_cH, simulate_path
from .inference import estimate_covariance, normal_ci
from .mest import ALPHA_MIN, FitConfig, fit
from .score import ErrorDistribution, ScoreFunction, solve_cH

log = logging.getLogger(__name__)

MIN_CELL_CONVERGENCE = 0.5
MIN_BOOTSTRAP_B = 100
ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class DGP:
    theta: ParameterVector
    dist: ErrorDistribution
    n: int
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if self.n < 1 or self.burn_in < 0:
            raise InvalidParameter("n must be >= 1 and burn_in >= 0")


@dataclass(frozen=True)
class ExperimentSpec:
    dgp: DGP
    estimators: tuple
    R: int
    B: int = 0
    schemes: tuple = ()
    fit_order: Optional[GarchOrder] = None
    seed: int = 0
    n_jobs: int = 1
    # lower bound for the fitted ARCH coefficients (see FitConfig.alpha_floor)
    alpha_floor: float = ALPHA_MIN

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "schemes", tuple(WeightScheme(s) for s in self.schemes))
        if self.fit_order is None:
            object.__setattr__(self, "fit_order", self.dgp.theta.order)
        if self.R < 1:
            raise InvalidParameter("R must be >= 1")
        if self.B < 0:
            raise InvalidParameter("B must be >= 0")
        if not self.estimators:
            raise InvalidParameter("at least one estimator is required")
        dgp_order = self.dgp.theta.order
        if self.fit_order.p < dgp_order.p or self.fit_order.q < dgp_order.q:
            raise InvalidParameter(f"fit order GARCH({self.fit_order}) is smaller than "
                                   f"the data-generating GARCH({dgp_order})")

    @property
    def theta0(self) -> ParameterVector:
        """Data-generating parameter written in the fitted order."""
        return self.dgp.theta.embed(self.fit_order)


@dataclass
class ReplicateTable:
    """Estimates of one estimator over ``R`` replications (NaN rows where not converged)."""

    score: ScoreFunction
    order: GarchOrder
    estimates: np.ndarray
    converged: np.ndarray
    cH: float
    iterations: np.ndarray = field(default=None)

    @property
    def R(self) -> int:
        return self.estimates.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return self.estimates[self.converged]

    @property
    def convergence_rate(self) -> float:
        return float(self.converged.mean())

    @property
    def dropped(self) -> int:
        return int(self.R - self.converged.sum())


def replication_seeds(seed: int, R: int) -> list:
    """One independent ``SeedSequence`` per replication."""
    return np.random.SeedSequence(seed).spawn(R)


def child_seed(ss: np.random.SeedSequence, i: int) -> np.random.SeedSequence:
    """The ``i``-th child of ``ss`` without touching its spawn counter.

    ``SeedSequence.spawn`` numbers children by how many were spawned before,
    so repeated calls on one sequence hand out different streams; addressing
    the child by its key keeps every stream a function of ``(seed, r, i)``.
    """
    return np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,),
                                  pool_size=ss.pool_size)


def _child_int(ss: np.random.SeedSequence) -> int:
    return int(ss.generate_state(1, np.uint32)[0])


def simulate_replicate(spec: ExperimentSpec, ss: np.random.SeedSequence) -> SeriesData:
    sim_ss = child_seed(ss, 0)
    d = spec.dgp
    return simulate_path(d.theta, d.dist, d.n, d.burn_in, seed=np.random.default_rng(sim_ss))


def cH_values(spec: ExperimentSpec, method: str = "quad") -> dict:
    """``c_H`` of every estimator under the data-generating innovation law."""
    return {s.label: solve_cH(s, spec.dgp.dist, method=method) for s in spec.estimators}


def _pool_map(fn, items, n_jobs):
    if n_jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(n_jobs) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * n_jobs))))
    return [fn(it) for it in items]


def _fit_one(args):
    spec, ss = args
    data = simulate_replicate(spec, ss)
    k = spec.fit_order.k
    out = []
    for score in spec.estimators:
        try:
            res = fit(data, FitConfig(score, order=spec.fit_order, alpha_floor=spec.alpha_floor))
            out.append((res.theta_hat.array if res.converged else np.full(k, np.nan),
                        res.converged, res.iterations))
        except MGarchError as exc:
            log.debug("fit failed: %s", exc)
            out.append((np.full(k, np.nan), False, 0))
    return out


def run_replicates(spec: ExperimentSpec, cH: Optional[dict] = None) -> dict:
    """Simulate and fit every estimator ``R`` times; returns ``{label: ReplicateTable}``."""
    cH = cH_values(spec) if cH is None else cH
    seeds = replication_seeds(spec.seed, spec.R)
    rows = _pool_map(_fit_one, [(spec, ss) for ss in seeds], spec.n_jobs)
    tables = {}
    for j, score in enumerate(spec.estimators):
        est = np.array([r[j][0] for r in rows])
        conv = np.array([r[j][1] for r in rows], dtype=bool)
        its = np.array([r[j][2] for r in rows])
        tables[score.label] = ReplicateTable(score, spec.fit_order, est, conv, cH[score.label], its)
        if conv.mean() < 1.0:
            log.info("%s: %d of %d fits did not converge", score.label, (~conv).sum(), spec.R)
    return tables


def _coordinate_split(order: GarchOrder) -> np.ndarray:
    """Mask of the (omega, alpha) coordinates that scale with ``c_H``."""
    mask = np.zeros(order.k, dtype=bool)
    mask[: 1 + order.p] = True
    return mask


def standardized_bias_mse(table: ReplicateTable, theta0: ParameterVector, cH: float):
    """Bias and MSE after dividing the omega/alpha estimates by ``c_H``."""
    if not cH > 0:
        raise InvalidParameter("cH must be positive")
    est = table.valid
    if est.shape[0] == 0:
        raise TooFewReplicates("no converged replications")
    scaled = est.copy()
    scaled[:, _coordinate_split(table.order)] /= cH
    err = scaled - theta0.embed(table.order).array
    return err.mean(axis=0), (err * err).mean(axis=0)


def normalized_bias_mse(table: ReplicateTable, theta0H: ParameterVector, n: int):
    """Bias and MSE of ``sqrt(n) (theta_hat - theta_0H)``."""
    if n < 1:
        raise InvalidParameter("n must be positive")
    est = table.valid
    if est.shape[0] == 0:
        raise TooFewReplicates("no converged replications")
    err = np.sqrt(n) * (est - theta0H.embed(table.order).array)
    return err.mean(axis=0), (err * err).mean(axis=0)


@dataclass(frozen=True)
class CellSummary:
    """One table row; ``bias``/``mse`` are ``None`` when the cell is absent."""

    estimator: str
    cH: float
    bias: Optional[np.ndarray]
    mse: Optional[np.ndarray]
    converged: int
    R: int

    @property
    def absent(self) -> bool:
        return self.bias is None


@dataclass(frozen=True)
class StudyResult:
    spec: ExperimentSpec
    kind: str
    names: list
    cells: dict
    tables: dict


def bias_mse_study(spec: ExperimentSpec, kind: str = "standardized",
                   cH: Optional[dict] = None) -> StudyResult:
    """Replicate, fit and summarise with standardized or normalized bias/MSE.

    Cells whose convergence rate is below one half are reported as absent.
    """
    if kind not in ("standardized", "normalized"):
        raise ValueError(f"unknown kind {kind!r}")
    cH = cH_values(spec) if cH is None else cH
    tables = run_replicates(spec, cH)
    theta0 = spec.theta0
    cells = {}
    for label, t in tables.items():
        bias = mse = None
        if t.convergence_rate >= MIN_CELL_CONVERGENCE:
            if kind == "standardized":
                bias, mse = standardized_bias_mse(t, theta0, t.cH)
            else:
                bias, mse = normalized_bias_mse(t, scale_by_cH(theta0, t.cH), spec.dgp.n)
        cells[label] = CellSummary(label, t.cH, bias, mse, int(t.converged.sum()), t.R)
    return StudyResult(spec, kind, spec.fit_order.names(), cells, tables)


def misspecification_study(spec: ExperimentSpec, cH: Optional[dict] = None,
                           constrained: bool = False) -> StudyResult:
    """Fit an over-specified order; the extra ARCH coefficients have truth zero.

    With a true value on the boundary, clamping the ARCH coefficients at zero
    biases their estimates upward by roughly the half-normal mean of the
    unconstrained estimator.  By default the fits therefore let the ARCH
    coefficients take negative values, subject to every filtered variance
    staying positive.  ``constrained=True`` keeps the box of ``spec``.
    """
    dgp_order = spec.dgp.theta.order
    if spec.fit_order == dgp_order:
        raise InvalidParameter("misspecification study needs a fit order larger than the DGP order")
    if not constrained:
        spec = replace(spec, alpha_floor=-np.inf)
    return bias_mse_study(spec, "standardized", cH)


IntervalHook = Callable[[str, str, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CoverageResult:
    """Coverage in percent per ``(estimator, arm)``; arms are schemes and ``asymptotic``."""

    spec: ExperimentSpec
    level: float
    names: list
    rates: dict
    used: dict
    dropped: dict
    cH: dict
    # per replication: {(estimator, arm): coverage flags or None when dropped}
    records: list = field(default_factory=list, repr=False)


def _coverage_one(args):
    spec, ss, level, cH, hook = args
    data = simulate_replicate(spec, ss)
    theta0 = spec.theta0
    boot_seeds = [child_seed(ss, 1 + j) for j in range(len(spec.estimators))]
    out = {}
    for score, bss in zip(spec.estimators, boot_seeds):
        target = scale_by_cH(theta0, cH[score.label]).array
        cfg = FitConfig(score, order=spec.fit_order, alpha_floor=spec.alpha_floor)
        try:
            res = fit(data, cfg)
        except MGarchError:
            res = None
        if res is None or not res.converged:
            for arm in _arms(spec):
                out[(score.label, arm)] = None
            continue
        arm_seeds = [child_seed(bss, i) for i in range(len(spec.schemes))]
        for scheme, a_ss in zip(spec.schemes, arm_seeds):
            try:
                run = bootstrap_fit(data, res, cfg, scheme, spec.B, seed=_child_int(a_ss))
                ci = bootstrap_ci(run, level)
            except MGarchError:
                ci = None
            out[(score.label, scheme.value)] = _covers(hook, score.label, scheme.value, ci, target)
        try:
            ci = normal_ci(res, estimate_covariance(data, res, score), level)
        except MGarchError:
            ci = None
        out[(score.label, ASYMPTOTIC)] = _covers(hook, score.label, ASYMPTOTIC, ci, target)
    return out


def _arms(spec):
    return [s.value for s in spec.schemes] + [ASYMPTOTIC]


def _covers(hook, label, arm, ci, target):
    if hook is not None:
        ci = hook(label, arm, ci)
    if ci is None:
        return None
    return (ci[:, 0] <= target) & (target <= ci[:, 1])


def coverage_study(spec: ExperimentSpec, level: float, cH: Optional[dict] = None,
                   interval_hook: Optional[IntervalHook] = None) -> CoverageResult:
    """Empirical coverage of bootstrap and normal intervals for ``theta_0H``.

    ``interval_hook(estimator, arm, ci)`` may replace each interval before it
    is scored; it must be picklable when ``spec.n_jobs > 1``.
    """
    if not 0 < level < 1:
        raise InvalidParameter("level must lie in (0, 1)")
    if spec.schemes and spec.B < MIN_BOOTSTRAP_B:
        raise InvalidParameter(f"bootstrap arms need B >= {MIN_BOOTSTRAP_B}")
    cH = cH_values(spec) if cH is None else cH
    seeds = replication_seeds(spec.seed, spec.R)
    results = _pool_map(_coverage_one, [(spec, ss, level, cH, interval_hook) for ss in seeds],
                        spec.n_jobs)
    rates, used, dropped = {}, {}, {}
    for score in spec.estimators:
        for arm in _arms(spec):
            key = (score.label, arm)
            hits = [r[key] for r in results if r[key] is not None]
            used[key] = len(hits)
            dropped[key] = spec.R - len(hits)
            if len(hits) >= MIN_CELL_CONVERGENCE * spec.R and hits:
                rates[key] = 100.0 * np.mean(hits, axis=0)
            else:
                rates[key] = None
    return CoverageResult(spec, level, spec.fit_order.names(), rates, used, dropped, cH, results)


def parse_score(text: str) -> ScoreFunction:
    """``qmle``, ``lad``, ``cauchy``, ``huber``, ``mu`` or with a tuning constant, ``huber:2.5``."""
    name, _, tuning = str(text).strip().partition(":")
    return ScoreFunction.from_name(name, float(tuning) if tuning else None)


def scores_from_names(names: Sequence[str]) -> tuple:
    return tuple(parse_score(n) for n in names)
