"""Score functions for scale M-estimation and the innovation laws they are paired with.

A score is described by an odd function ``psi``; the estimating equation uses
``H(x) = x * psi(x)``.  For a score/innovation pair the M-estimator of a GARCH
model targets ``(c_H * omega, c_H * alpha, beta)`` where ``c_H`` solves
``E[H(eps / sqrt(c_H))] = 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import InvalidParameter, NoRoot

CH_BRACKET = (1e-8, 1e4)
CH_XTOL = 1e-10
CH_MAX_ITER = 200
DEFAULT_MC_SAMPLES = 10**6
MIN_MC_SAMPLES = 10**5


class ScoreKind(str, enum.Enum):
    QMLE = "qmle"
    LAD = "lad"
    HUBER = "huber"
    MU = "mu"
    CAUCHY = "cauchy"


DEFAULT_TUNING = {ScoreKind.HUBER: 1.5, ScoreKind.MU: 3.0}


@dataclass(frozen=True)
class ScoreFunction:
    """Score descriptor exposing ``H``, ``psi`` and ``H_dot``.

    ``tuning`` is Huber's ``k`` or the mu-estimator's ``mu``; it is ignored
    (and normalised to ``None``) for the other kinds.
    """

    kind: ScoreKind
    tuning: Optional[float] = None

    def __post_init__(self):
        kind = ScoreKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in DEFAULT_TUNING:
            tuning = DEFAULT_TUNING[kind] if self.tuning is None else float(self.tuning)
            if kind is ScoreKind.HUBER and not tuning > 0:
                raise InvalidParameter(f"Huber score needs k > 0, got {tuning}")
            if kind is ScoreKind.MU and not tuning > 1:
                raise InvalidParameter(f"mu score needs mu > 1, got {tuning}")
            object.__setattr__(self, "tuning", tuning)
        else:
            object.__setattr__(self, "tuning", None)

    @classmethod
    def from_name(cls, name: str, tuning: Optional[float] = None) -> "ScoreFunction":
        return cls(ScoreKind(name.lower()), tuning)

    @property
    def label(self) -> str:
        if self.tuning is None:
            return self.kind.value
        return f"{self.kind.value}({self.tuning:g})"

    @property
    def bounded(self) -> bool:
        return self.kind in (ScoreKind.MU, ScoreKind.CAUCHY)

    def psi(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.kind
        if kind is ScoreKind.QMLE:
            return x.copy()
        if kind is ScoreKind.LAD:
            return np.sign(x)
        if kind is ScoreKind.HUBER:
            return np.clip(x, -self.tuning, self.tuning)
        if kind is ScoreKind.MU:
            return self.tuning * np.sign(x) / (1.0 + np.abs(x))
        return 2.0 * x / (1.0 + x * x)

    def H(self, x):
        x = np.asarray(x, dtype=float)
        kind = self.kind
        if kind is ScoreKind.QMLE:
            return x * x
        ax = np.abs(x)
        if kind is ScoreKind.LAD:
            return ax
        if kind is ScoreKind.HUBER:
            k = self.tuning
            return np.where(ax <= k, x * x, k * ax)
        if kind is ScoreKind.MU:
            return self.tuning * ax / (1.0 + ax)
        x2 = x * x
        return 2.0 * x2 / (1.0 + x2)

    def H_dot(self, x):
        """Derivative of ``H``.

        At the kinks ``H_dot(0) = 0`` (LAD, mu) and Huber uses the inner
        branch ``2x`` at ``|x| == k``.
        """
        x = np.asarray(x, dtype=float)
        kind = self.kind
        if kind is ScoreKind.QMLE:
            return 2.0 * x
        if kind is ScoreKind.LAD:
            return np.sign(x)
        if kind is ScoreKind.HUBER:
            k = self.tuning
            return np.where(np.abs(x) <= k, 2.0 * x, k * np.sign(x))
        if kind is ScoreKind.MU:
            return self.tuning * np.sign(x) / (1.0 + np.abs(x)) ** 2
        return 4.0 * x / (1.0 + x * x) ** 2


def evaluate_H(score: ScoreFunction, x: float) -> float:
    return float(score.H(x))


def evaluate_H_dot(score: ScoreFunction, x: float) -> float:
    return float(score.H_dot(x))


class DistKind(str, enum.Enum):
    NORMAL = "normal"
    DE = "de"
    LOGISTIC = "logistic"
    STUDENT_T = "t"
    # point mass at zero; only useful as a test hook for the simulator
    ZERO = "zero"


@dataclass(frozen=True)
class ErrorDistribution:
    """Innovation law; ``standardized`` rescales to unit variance when it exists."""

    kind: DistKind
    df: Optional[float] = None
    standardized: bool = False

    def __post_init__(self):
        kind = DistKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is DistKind.STUDENT_T:
            if self.df is None or not self.df > 0:
                raise InvalidParameter("Student t needs positive degrees of freedom")
            object.__setattr__(self, "df", float(self.df))
        else:
            object.__setattr__(self, "df", None)

    @classmethod
    def parse(cls, text: str, standardized: bool = False) -> "ErrorDistribution":
        """Parse ``normal``, ``de``, ``logistic`` or ``t,3`` / ``t3``."""
        text = text.strip().lower()
        if text.startswith("t") and text not in ("t",):
            df = text[1:].lstrip(",:( ").rstrip(")")
            return cls(DistKind.STUDENT_T, float(df), standardized)
        aliases = {"double-exponential": "de", "laplace": "de", "gaussian": "normal"}
        return cls(DistKind(aliases.get(text, text)), None, standardized)

    @property
    def label(self) -> str:
        base = f"t({self.df:g})" if self.kind is DistKind.STUDENT_T else self.kind.value
        return f"{base}-std" if self.standardized else base

    @property
    def raw_variance(self) -> float:
        kind = self.kind
        if kind is DistKind.NORMAL:
            return 1.0
        if kind is DistKind.DE:
            return 2.0
        if kind is DistKind.LOGISTIC:
            return math.pi**2 / 3.0
        if kind is DistKind.ZERO:
            return 0.0
        return self.df / (self.df - 2.0) if self.df > 2 else math.inf

    @property
    def scale(self) -> float:
        """Multiplier applied to the raw variate."""
        if self.standardized and 0.0 < self.raw_variance < math.inf:
            return 1.0 / math.sqrt(self.raw_variance)
        return 1.0

    @property
    def variance(self) -> float:
        return self.raw_variance * self.scale**2

    @property
    def abs_mean(self) -> float:
        """``E|eps|``."""
        kind = self.kind
        if kind is DistKind.NORMAL:
            m = math.sqrt(2.0 / math.pi)
        elif kind is DistKind.DE:
            m = 1.0
        elif kind is DistKind.LOGISTIC:
            m = 2.0 * math.log(2.0)
        elif kind is DistKind.ZERO:
            m = 0.0
        else:
            d = self.df
            if d <= 1:
                return math.inf
            m = (2.0 * math.sqrt(d) / (math.sqrt(math.pi) * (d - 1.0))
                 * math.exp(special.gammaln((d + 1) / 2) - special.gammaln(d / 2)))
        return m * self.scale

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        kind = self.kind
        if kind is DistKind.NORMAL:
            x = rng.standard_normal(size)
        elif kind is DistKind.DE:
            x = rng.laplace(0.0, 1.0, size)
        elif kind is DistKind.LOGISTIC:
            x = rng.logistic(0.0, 1.0, size)
        elif kind is DistKind.ZERO:
            return np.zeros(size)
        else:
            x = rng.standard_t(self.df, size)
        s = self.scale
        return x * s if s != 1.0 else x

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        s = self.scale
        z = x / s
        kind = self.kind
        if kind is DistKind.NORMAL:
            f = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        elif kind is DistKind.DE:
            f = 0.5 * np.exp(-np.abs(z))
        elif kind is DistKind.LOGISTIC:
            e = np.exp(-np.abs(z))
            f = e / (1.0 + e) ** 2
        elif kind is DistKind.ZERO:
            raise InvalidParameter("point mass has no density")
        else:
            d = self.df
            logc = (special.gammaln((d + 1) / 2) - special.gammaln(d / 2)
                    - 0.5 * math.log(d * math.pi))
            f = np.exp(logc - (d + 1) / 2 * np.log1p(z * z / d))
        return f / s


def _draws(dist: ErrorDistribution, samples: int, seed: int) -> np.ndarray:
    if samples < MIN_MC_SAMPLES:
        raise InvalidParameter(f"need at least {MIN_MC_SAMPLES} Monte Carlo draws")
    return dist.sample(np.random.default_rng(seed), samples)


def _expect(dist: ErrorDistribution, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """``E[g(eps)]`` by adaptive quadrature over the (symmetric) density."""
    f = lambda e: g(np.array(e)) * dist.pdf(e)  # noqa: E731
    # split at the kinks that the scores can have; density is symmetric
    pts = [0.0, 0.5, 1.0, 2.0, 5.0]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(f, a, b, limit=200, epsabs=1e-13, epsrel=1e-12)[0]
    total += integrate.quad(f, pts[-1], np.inf, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    return 2.0 * total


def bisect_decreasing(fun: Callable[[float], float], lo: float, hi: float,
                      xtol: float = CH_XTOL, max_iter: int = CH_MAX_ITER) -> float:
    """Root of a non-increasing function on ``[lo, hi]`` by plain bisection."""
    flo, fhi = fun(lo), fun(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if not (flo > 0.0 > fhi):
        raise NoRoot(f"objective does not change sign on [{lo:g}, {hi:g}] "
                     f"(values {flo:g}, {fhi:g})")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if fm > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol * max(1.0, mid):
            break
    return 0.5 * (lo + hi)


def solve_cH(score: ScoreFunction, dist: ErrorDistribution,
             samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
             method: str = "mc", bracket=CH_BRACKET) -> float:
    """Identifiability constant ``c_H`` with ``E[H(eps/sqrt(c_H))] = 1``.

    QMLE and LAD use their closed forms ``E eps^2`` and ``(E|eps|)^2``.  The
    other scores bisect either the Monte Carlo average over ``samples`` draws
    (``method="mc"``) or the quadrature expectation (``method="quad"``).
    """
    if score.kind is ScoreKind.QMLE:
        return dist.variance
    if score.kind is ScoreKind.LAD:
        return dist.abs_mean**2
    if method == "mc":
        eps = _draws(dist, samples, seed)
        objective = lambda c: float(np.mean(score.H(eps / math.sqrt(c)))) - 1.0  # noqa: E731
    elif method == "quad":
        objective = lambda c: _expect(dist, lambda e: score.H(e / math.sqrt(c))) - 1.0  # noqa: E731
    else:
        raise ValueError(f"unknown method {method!r}")
    return bisect_decreasing(objective, *bracket)


def estimate_alpha_dot(score: ScoreFunction, dist: ErrorDistribution,
                       samples: int = DEFAULT_MC_SAMPLES, seed: int = 0,
                       method: str = "mc") -> float:
    """``alpha_dot(1) = E[eps * H_dot(eps)]`` under a proxy innovation law."""
    if score.kind is ScoreKind.QMLE:
        return 2.0 * dist.variance
    if score.kind is ScoreKind.LAD:
        return dist.abs_mean
    g = lambda e: e * score.H_dot(e)  # noqa: E731
    if method == "quad":
        return _expect(dist, g)
    return float(np.mean(g(_draws(dist, samples, seed))))


def score_factor(score: ScoreFunction, dist: ErrorDistribution, c_H: Optional[float] = None) -> float:
    """Population ``sigma^2(H) = 4 Var H(r) / (E r H_dot(r))^2`` with ``r = eps/sqrt(c_H)``."""
    if c_H is None:
        c_H = solve_cH(score, dist, method="quad")
    s = math.sqrt(c_H)
    m1 = _expect(dist, lambda e: score.H(e / s))
    m2 = _expect(dist, lambda e: score.H(e / s) ** 2)
    d = _expect(dist, lambda e: (e / s) * score.H_dot(e / s))
    return 4.0 * (m2 - m1 * m1) / d**2
