"""GARCH(p, q) parameterisation, ARCH(inf) coefficients, variance filter and simulation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidParameter, NonStationary
from .score import ErrorDistribution

SUPPORTED_ORDERS = frozenset({(1, 1), (2, 1), (1, 2), (2, 2)})
DEFAULT_BURN_IN = 500


@dataclass(frozen=True)
class GarchOrder:
    p: int
    q: int

    def __post_init__(self):
        if (self.p, self.q) not in SUPPORTED_ORDERS:
            raise InvalidParameter(f"GARCH({self.p},{self.q}) is not supported; "
                                   f"use one of {sorted(SUPPORTED_ORDERS)}")

    @classmethod
    def parse(cls, text: str) -> "GarchOrder":
        p, q = (int(s) for s in str(text).replace("(", "").replace(")", "").split(","))
        return cls(p, q)

    @property
    def k(self) -> int:
        """Number of free parameters ``1 + p + q``."""
        return 1 + self.p + self.q

    def names(self) -> list[str]:
        a = ["alpha"] if self.p == 1 else [f"alpha{i + 1}" for i in range(self.p)]
        b = ["beta"] if self.q == 1 else [f"beta{j + 1}" for j in range(self.q)]
        return ["omega", *a, *b]

    def __str__(self):
        return f"{self.p},{self.q}"


@dataclass(frozen=True)
class ParameterVector:
    """``theta = (omega, alpha_1..alpha_p, beta_1..beta_q)``.

    ``alpha_i = 0`` is accepted so that a lower-order model can be embedded in
    a larger one.  ``relaxed`` additionally admits negative ``alpha_i``; it is
    used only for estimates from a solver run without the non-negativity
    floor, where positivity of the variances is checked along the path.
    """

    omega: float
    alpha: tuple
    beta: tuple
    relaxed: bool = field(default=False, compare=False, repr=False)
    order: GarchOrder = field(init=False, compare=False)

    def __post_init__(self):
        alpha = tuple(float(a) for a in np.atleast_1d(self.alpha))
        beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "order", GarchOrder(len(alpha), len(beta)))
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise InvalidParameter(f"omega must be positive, got {self.omega!r}")
        if not all(math.isfinite(a) and (a >= 0 or self.relaxed) for a in alpha):
            raise InvalidParameter(f"alpha must be non-negative, got {alpha}")
        if not all(0 < b < 1 for b in beta):
            raise InvalidParameter(f"beta must lie in (0, 1), got {beta}")
        if sum(beta) >= 1:
            raise InvalidParameter(f"sum(beta) must be < 1, got {sum(beta)}")

    @classmethod
    def from_array(cls, values: Sequence[float], order: GarchOrder,
                   relaxed: bool = False) -> "ParameterVector":
        v = np.asarray(values, dtype=float)
        if v.shape != (order.k,):
            raise InvalidParameter(f"expected {order.k} values for GARCH({order}), got {v.shape}")
        return cls(v[0], tuple(v[1:1 + order.p]), tuple(v[1 + order.p:]), relaxed)

    @classmethod
    def parse(cls, text: str, order: GarchOrder) -> "ParameterVector":
        return cls.from_array([float(s) for s in str(text).split(",")], order)

    @property
    def array(self) -> np.ndarray:
        return np.array((self.omega, *self.alpha, *self.beta))

    def embed(self, order: GarchOrder) -> "ParameterVector":
        """Same model written in a larger order with zero padding."""
        if order.p < self.order.p or order.q < self.order.q:
            raise InvalidParameter(f"cannot embed GARCH({self.order}) into GARCH({order})")
        alpha = self.alpha + (0.0,) * (order.p - self.order.p)
        if order.q > self.order.q:
            # a zero beta is outside (0, 1); only alpha padding is meaningful
            raise InvalidParameter("embedding into a larger q is not supported")
        return ParameterVector(self.omega, alpha, self.beta, self.relaxed)

    def as_dict(self) -> dict:
        return dict(zip(self.order.names(), self.array.tolist()))


@dataclass(frozen=True)
class SeriesData:
    x: np.ndarray
    meta: str = ""

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        if x.size == 0:
            raise InvalidParameter("series must be non-empty")
        if not np.all(np.isfinite(x)):
            raise InvalidParameter("series contains non-finite values")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size

    def scaled(self, s: float) -> "SeriesData":
        return SeriesData(self.x * s, self.meta)


@dataclass(frozen=True)
class VarianceFilterOutput:
    v: np.ndarray
    grad: np.ndarray


def intercept(theta: ParameterVector) -> float:
    """``c_0(theta) = omega / (1 - sum beta)``."""
    return theta.omega / (1.0 - sum(theta.beta))


def coefficients(theta: ParameterVector, count: int) -> np.ndarray:
    """``c_0 .. c_count`` of the ARCH(inf) representation.

    ``c_j = alpha_j 1(j <= p) + sum_k beta_k c_{j-k}`` for ``j >= 1`` where the
    sum runs over ``j - k >= 1``; this is the recursion of all four supported
    orders.
    """
    p, q = theta.order.p, theta.order.q
    c = np.zeros(count + 1)
    c[0] = intercept(theta)
    for j in range(1, count + 1):
        cj = theta.alpha[j - 1] if j <= p else 0.0
        for k in range(1, q + 1):
            if j - k >= 1:
                cj += theta.beta[k - 1] * c[j - k]
        c[j] = cj
    return c


def coefficient_gradients(theta: ParameterVector, count: int) -> np.ndarray:
    """``(count + 1) x (1 + p + q)`` matrix of ``d c_j / d theta``."""
    p, q = theta.order.p, theta.order.q
    c = coefficients(theta, count)
    d = np.zeros((count + 1, 1 + p + q))
    one_minus = 1.0 - sum(theta.beta)
    d[0, 0] = 1.0 / one_minus
    d[0, 1 + p:] = theta.omega / one_minus**2
    for j in range(1, count + 1):
        if j <= p:
            d[j, j] = 1.0
        for k in range(1, q + 1):
            if j - k >= 1:
                d[j] += theta.beta[k - 1] * d[j - k]
                d[j, p + k] += c[j - k]
    return d


def variance_filter(theta: ParameterVector, data: SeriesData) -> VarianceFilterOutput:
    """Observable variances ``v_t = c_0 + sum_{j<t} c_j X_{t-j}^2`` and their gradients.

    The truncated ARCH(inf) sum equals the output of the rational filter
    ``A(L) / (1 - B(L))`` applied to ``X^2`` with zero pre-sample values, so it
    is evaluated in O(n) by ``lfilter``; ``variance_filter_direct`` is the
    literal O(n^2) form.
    """
    p, q = theta.order.p, theta.order.q
    x2 = data.x * data.x
    den = np.concatenate(([1.0], -np.asarray(theta.beta)))
    s = lfilter(np.concatenate(([0.0], theta.alpha)), den, x2)
    one_minus = 1.0 - sum(theta.beta)
    c0 = theta.omega / one_minus
    grad = np.empty((data.n, 1 + p + q))
    grad[:, 0] = 1.0 / one_minus
    for i in range(1, p + 1):
        grad[:, i] = lfilter(_lag(i), den, x2)
    for j in range(1, q + 1):
        grad[:, p + j] = theta.omega / one_minus**2 + lfilter(_lag(j), den, s)
    return VarianceFilterOutput(c0 + s, grad)


def _lag(i: int) -> np.ndarray:
    b = np.zeros(i + 1)
    b[i] = 1.0
    return b


def variance_filter_direct(theta: ParameterVector, data: SeriesData) -> VarianceFilterOutput:
    """Reference implementation summing ``c_j`` and ``dc_j`` explicitly."""
    n = data.n
    c = coefficients(theta, max(n - 1, 1))
    dc = coefficient_gradients(theta, max(n - 1, 1))
    x2 = data.x * data.x
    v = np.full(n, c[0])
    grad = np.tile(dc[0], (n, 1))
    for t in range(1, n):
        lagged = x2[t - 1::-1]  # X_{t-1}^2 .. X_0^2 in 0-based time
        v[t] += c[1:t + 1] @ lagged
        grad[t] += lagged @ dc[1:t + 1]
    return VarianceFilterOutput(v, grad)


def scale_by_cH(theta: ParameterVector, cH: float) -> ParameterVector:
    """``(c_H omega, c_H alpha, beta)``, the target of an M-estimator."""
    if not cH > 0:
        raise InvalidParameter(f"c_H must be positive, got {cH}")
    return ParameterVector(cH * theta.omega, tuple(cH * a for a in theta.alpha), theta.beta,
                           theta.relaxed)


def persistence(theta: ParameterVector, dist: ErrorDistribution) -> float:
    return dist.variance * sum(theta.alpha) + sum(theta.beta)


def simulate_path(theta: ParameterVector, dist: ErrorDistribution, n: int,
                  burn_in: int = DEFAULT_BURN_IN, seed=0) -> SeriesData:
    """Simulate ``X_t = sigma_t eps_t`` with the GARCH recursion.

    Pre-sample variances start at the unconditional variance and pre-sample
    returns at zero; the first ``burn_in`` draws are discarded.  ``seed`` may
    be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if n < 1 or burn_in < 0:
        raise InvalidParameter("n must be >= 1 and burn_in >= 0")
    rho = persistence(theta, dist)
    if not rho < 1:
        raise NonStationary(f"E(eps^2) sum(alpha) + sum(beta) = {rho:.4g} >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eps = dist.sample(rng, n + burn_in)
    p, q = theta.order.p, theta.order.q
    omega = theta.omega
    alpha, beta = theta.alpha, theta.beta
    sig2_hist = [omega / (1.0 - rho)] * q  # most recent first
    x2_hist = [0.0] * p
    out = np.empty(n + burn_in)
    for t in range(n + burn_in):
        s2 = omega
        for i in range(p):
            s2 += alpha[i] * x2_hist[i]
        for j in range(q):
            s2 += beta[j] * sig2_hist[j]
        x = math.sqrt(s2) * eps[t]
        out[t] = x
        if p:
            x2_hist = [x * x] + x2_hist[:-1]
        sig2_hist = [s2] + sig2_hist[:-1]
    return SeriesData(out[burn_in:], meta=f"simulated GARCH({theta.order}) {dist.label}")
