"""M-estimation of GARCH parameters by iteratively re-weighted least squares.

The estimating function is

    M(theta) = sum_t w_t {1 - H(X_t / v_t^{1/2})} vdot_t / v_t

(``w_t = 1`` for the plain estimator) and one update is

    theta + (alpha_dot/2)^{-1} (sum_t w_t x_t x_t' / v_t^2)^{-1} sum_t w_t x_t y_t / v_t^2

with ``x_t = vdot_t`` and the score-specific working response ``y_t``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidParameter, SingularGram
from .garch import GarchOrder, ParameterVector, SeriesData, variance_filter
from .score import ErrorDistribution, ScoreFunction, ScoreKind, estimate_alpha_dot

OMEGA_MIN = 1e-12
ALPHA_MIN = 1e-12
ALPHA_MAX = 1.0 - 1e-12
BETA_MIN = 1e-12
BETA_MAX = 1.0 - 1e-6
GRAM_COND_MAX = 1e12
MAX_HALVINGS = 10
MERIT_DECREASE = 0.9
MERIT_FLOOR = 1e-18


@functools.lru_cache(maxsize=None)
def default_alpha_dot(score: ScoreFunction) -> float:
    """``alpha_dot(1)`` simulated under a standard normal proxy."""
    return estimate_alpha_dot(score, ErrorDistribution("normal"), seed=20240101)


@dataclass(frozen=True)
class FitConfig:
    score: ScoreFunction
    order: GarchOrder = GarchOrder(1, 1)
    alpha_dot: Optional[float] = None
    max_iter: int = 200
    rel_tol: float = 1e-8
    initial: Optional[ParameterVector] = None
    # lower bound of the ARCH coefficients; -inf lets them go negative while v_t > 0
    alpha_floor: float = ALPHA_MIN

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise InvalidParameter("rel_tol must be positive")
        if self.max_iter < 1:
            raise InvalidParameter("max_iter must be >= 1")
        if self.alpha_dot is not None and not self.alpha_dot > 0:
            raise InvalidParameter("alpha_dot must be positive")
        if not self.alpha_floor <= ALPHA_MIN:
            raise InvalidParameter(f"alpha_floor must be <= {ALPHA_MIN:g}")

    @property
    def step_factor(self) -> float:
        a = default_alpha_dot(self.score) if self.alpha_dot is None else self.alpha_dot
        return 2.0 / a

    def initial_point(self, data: SeriesData) -> ParameterVector:
        if self.initial is not None:
            if self.initial.order != self.order:
                raise InvalidParameter("initial point order differs from fit order")
            return self.initial
        p, q = self.order.p, self.order.q
        return ParameterVector(0.1 * float(np.var(data.x)), (0.05,) * p, (0.8 / q,) * q)


@dataclass(frozen=True)
class FitResult:
    theta_hat: ParameterVector
    iterations: int
    converged: bool
    m_norm: float
    residuals: np.ndarray
    v: np.ndarray
    trace: tuple = field(repr=False, default=())
    score: Optional[ScoreFunction] = None
    # coordinates held on a bound of the parameter box at the solution
    at_bound: tuple = ()

    @property
    def n(self) -> int:
        return self.residuals.size


@dataclass
class Terms:
    """Per-observation pieces of the estimating function at one ``theta``.

    ``z`` holds ``vdot_t / v_t`` and ``h`` holds ``H(X_t / v_t^{1/2})``; these do
    not depend on the bootstrap weights, so they can be cached.
    """

    theta: np.ndarray
    v: np.ndarray
    z: np.ndarray
    r: np.ndarray
    h: np.ndarray

    @classmethod
    def at(cls, theta: ParameterVector, data: SeriesData, score: ScoreFunction) -> "Terms":
        out = variance_filter(theta, data)
        z = out.grad / out.v[:, None]
        r = data.x / np.sqrt(out.v)
        return cls(theta.array, out.v, z, r, score.H(r))


@dataclass
class _Eval:
    terms: Terms
    m: np.ndarray
    gram: np.ndarray
    merit: float


def _weighted(terms: Terms, weights: Optional[np.ndarray], free: Optional[np.ndarray] = None) -> _Eval:
    wz = terms.z if weights is None else terms.z * weights[:, None]
    m = (1.0 - terms.h) @ wz
    gram = wz.T @ terms.z
    return _Eval(terms, m, gram, _merit(m, gram, free))


def _merit(m: np.ndarray, gram: np.ndarray, free: Optional[np.ndarray] = None) -> float:
    """Newton decrement ``m' gram^{-1} m`` over the free coordinates."""
    if free is not None and not free.all():
        m, gram = m[free], gram[np.ix_(free, free)]
    d = np.sqrt(np.diag(gram))
    if not (np.all(np.isfinite(m)) and np.all(d > 0)):
        return np.inf
    md = m / d
    try:
        sol = np.linalg.solve(gram / np.outer(d, d), md)
    except np.linalg.LinAlgError:
        return np.inf
    return float(abs(md @ sol))


def _newton_direction(ev: _Eval, factor: float, free: Optional[np.ndarray] = None) -> np.ndarray:
    """``factor * gram^{-1} (-m)`` solved on the diagonally scaled Gram matrix.

    The scaled matrix is diagonalised once, which gives both the condition
    number guard and the solve.  With ``free`` the system is restricted to
    those coordinates and the step is zero elsewhere.
    """
    gram, m = ev.gram, ev.m
    sub = free is not None and not free.all()
    if sub:
        gram, m = gram[np.ix_(free, free)], m[free]
    diag = np.diag(gram)
    if not (np.all(np.isfinite(gram)) and np.all(diag > 0)):
        raise SingularGram("Gram matrix has non-positive or non-finite diagonal")
    d = np.sqrt(diag)
    w, V = np.linalg.eigh(gram / np.outer(d, d))
    if not (w[0] > 0 and w[-1] < GRAM_COND_MAX * w[0]):
        cond = w[-1] / w[0] if w[0] > 0 else np.inf
        raise SingularGram(f"Gram matrix condition number {cond:.3g} exceeds {GRAM_COND_MAX:g}")
    step = factor * (V @ ((V.T @ (-m / d)) / w)) / d
    if not sub:
        return step
    full = np.zeros(ev.m.size)
    full[free] = step
    return full


def _bounds(order: GarchOrder, alpha_floor: float = ALPHA_MIN):
    p = order.p
    lo = np.array([OMEGA_MIN] + [alpha_floor] * p + [BETA_MIN] * order.q)
    hi = np.array([np.inf] + [ALPHA_MAX] * p + [BETA_MAX] * order.q)
    return lo, hi


def free_coordinates(theta: np.ndarray, step: np.ndarray, order: GarchOrder,
                     alpha_floor: float = ALPHA_MIN) -> np.ndarray:
    """Coordinates not held at a bound that the step would push them through."""
    lo, hi = _bounds(order, alpha_floor)
    at_lo = np.isfinite(lo) & (theta <= lo * (1.0 + 1e-9)) & (step < 0)
    at_hi = (theta >= hi * (1.0 - 1e-12)) & (step > 0)
    return ~(at_lo | at_hi)


def in_box(values: np.ndarray, order: GarchOrder, alpha_floor: float = ALPHA_MIN) -> bool:
    p = order.p
    beta = values[1 + p:]
    return bool(values[0] >= OMEGA_MIN
                and np.all(values[1:1 + p] >= alpha_floor) and np.all(values[1:1 + p] <= ALPHA_MAX)
                and np.all(beta >= BETA_MIN) and np.all(beta <= BETA_MAX)
                and beta.sum() <= BETA_MAX)


def clamp(values: np.ndarray, order: GarchOrder, alpha_floor: float = ALPHA_MIN) -> np.ndarray:
    """Project onto the compact parameter box used by the solver."""
    p = order.p
    out = np.array(values, dtype=float)
    out[0] = max(out[0], OMEGA_MIN)
    out[1:1 + p] = np.clip(out[1:1 + p], alpha_floor, ALPHA_MAX)
    beta = np.clip(out[1 + p:], BETA_MIN, BETA_MAX)
    total = beta.sum()
    if total > BETA_MAX:
        beta *= BETA_MAX / total
    out[1 + p:] = beta
    return out


def estimating_function(theta: ParameterVector, data: SeriesData, score: ScoreFunction,
                        weights: Optional[np.ndarray] = None) -> np.ndarray:
    """``sum_t w_t {1 - H(X_t / v_t^{1/2})} vdot_t / v_t`` (``w = 1`` by default)."""
    return _weighted(Terms.at(theta, data, score), _check_weights(weights, data.n)).m


def _check_weights(weights, n):
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise InvalidParameter(f"weights must have length {n}, got shape {w.shape}")
    return w


def working_response(score: ScoreFunction, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Score-specific ``y_t`` of the weighted least-squares form of the update."""
    ax = np.abs(x)
    sv = np.sqrt(v)
    kind = score.kind
    if kind is ScoreKind.QMLE:
        return x * x - v
    if kind is ScoreKind.LAD:
        return sv * (ax - sv)
    if kind is ScoreKind.HUBER:
        k = score.tuning
        inner = ax / sv <= k
        return np.where(inner, x * x, k * ax * sv) - v
    if kind is ScoreKind.MU:
        return score.tuning * ax * v / (sv + ax) - v
    return 2.0 * x * x * v / (v + x * x) - v


def irls_step(theta: ParameterVector, data: SeriesData, config: FitConfig,
              weights: Optional[np.ndarray] = None) -> ParameterVector:
    """One undamped update, clamped to the parameter box."""
    w = _check_weights(weights, data.n)
    out = variance_filter(theta, data)
    W = 1.0 / out.v**2
    if w is not None:
        W = W * w
    xs = out.grad
    y = working_response(config.score, data.x, out.v)
    gram = (xs * W[:, None]).T @ xs
    rhs = xs.T @ (W * y)
    ev = _Eval(None, -rhs, gram, np.nan)
    step = _newton_direction(ev, config.step_factor)
    return ParameterVector.from_array(clamp(theta.array + step, theta.order), theta.order)


def m_norm(m: np.ndarray, gram: np.ndarray, n: int) -> float:
    """``max_i |M_i| / sqrt(n G_ii)``: per-coordinate residual scaled by the Gram diagonal.

    ``gram`` is the summed (not averaged) matrix, so this equals
    ``max_i |M_i / n| / sqrt(G_ii / n)``.
    """
    return float(np.max(np.abs(m) / np.sqrt(n * np.diag(gram))))


def _candidate(values, order, data, score, weights, free, relaxed) -> Optional[_Eval]:
    """Evaluate a trial point; ``None`` when some filtered variance is not positive."""
    terms = Terms.at(ParameterVector.from_array(values, order, relaxed), data, score)
    if not terms.v.min() > 0:
        return None
    return _weighted(terms, weights, free)


def solve(data: SeriesData, score: ScoreFunction, order: GarchOrder, start: np.ndarray,
          factor: float, max_iter: int, rel_tol: float,
          weights: Optional[np.ndarray] = None, start_terms: Optional[Terms] = None,
          keep_trace: bool = True, alpha_floor: float = ALPHA_MIN):
    """Iterate the damped update from ``start``.

    Coordinates sitting on a bound of the parameter box whose update points
    outward are held fixed and the update is solved for the rest, so a
    boundary solution satisfies ``M_i = 0`` on the free coordinates only.
    ``alpha_floor`` is the lower bound of the ARCH coefficients; below zero
    the trial points are additionally required to keep every ``v_t > 0``.
    Returns ``(theta, terms, gram, m, iterations, converged, trace, free)``.
    ``start_terms`` lets the bootstrap reuse the per-observation pieces
    computed once at the full-sample estimate.
    """
    relaxed = alpha_floor < 0
    theta = clamp(np.asarray(start, dtype=float), order, alpha_floor)
    terms = start_terms if start_terms is not None else Terms.at(
        ParameterVector.from_array(theta, order, relaxed), data, score)
    ev = _weighted(terms, weights)
    free = np.ones(order.k, dtype=bool)
    trace = [theta.copy()] if keep_trace else []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        step = _newton_direction(ev, factor)
        free = free_coordinates(theta, step, order, alpha_floor)
        if not free.all():
            step = _newton_direction(ev, factor, free)
        ev.merit = _merit(ev.m, ev.gram, free)
        lam = 1.0
        new_ev = None
        for _ in range(MAX_HALVINGS + 1):
            cand = theta + lam * step
            if in_box(cand, order, alpha_floor):
                cand_ev = _candidate(cand, order, data, score, weights, free, relaxed)
                if cand_ev is not None:
                    if (cand_ev.merit <= MERIT_DECREASE * ev.merit or cand_ev.merit <= MERIT_FLOOR
                            or not np.isfinite(ev.merit)):
                        new_ev, best = cand_ev, cand
                        break
                    if new_ev is None or cand_ev.merit < new_ev.merit:
                        # remember the best candidate in case no halving satisfies the test
                        new_ev, best = cand_ev, cand
            lam *= 0.5
        if new_ev is None:
            # every halving left the box: project the shortest step onto it
            best = clamp(theta + lam * step, order, alpha_floor)
            new_ev = _candidate(best, order, data, score, weights, free, relaxed)
            if new_ev is None:
                break  # no admissible point along the step; report non-convergence
        cand = best
        change = np.max(np.abs(cand - theta) / np.maximum(np.abs(theta), 1e-300))
        theta, ev = cand, new_ev
        if keep_trace:
            trace.append(theta.copy())
        if change < rel_tol:
            converged = True
            break
    return theta, ev.terms, ev.gram, ev.m, it, converged, tuple(trace), free


def fit(data: SeriesData, config: FitConfig) -> FitResult:
    """Solve ``M(theta) = 0`` for the configured score and order."""
    order = config.order
    if data.n < 10 * order.k:
        raise InvalidParameter(f"need at least {10 * order.k} observations, got {data.n}")
    start = config.initial_point(data)
    theta, terms, gram, m, it, converged, trace, free = solve(
        data, config.score, order, start.array, config.step_factor,
        config.max_iter, config.rel_tol, alpha_floor=config.alpha_floor)
    names = order.names()
    return FitResult(
        theta_hat=ParameterVector.from_array(theta, order, config.alpha_floor < 0),
        iterations=it,
        converged=converged,
        m_norm=m_norm(m[free], gram[np.ix_(free, free)], data.n),
        at_bound=tuple(nm for nm, f in zip(names, free) if not f),
        residuals=terms.r,
        v=terms.v,
        trace=trace,
        score=config.score,
    )
