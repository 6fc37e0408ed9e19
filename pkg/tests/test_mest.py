import math

import numpy as np
import pytest

from mgarch.bootstrap import weighted_estimating_function
from mgarch.errors import InvalidParameter
from mgarch.garch import (GarchOrder, ParameterVector, SeriesData, coefficients, scale_by_cH, simulate_path,
                          variance_filter)
from mgarch.inference import estimate_covariance
from mgarch.mest import FitConfig, estimating_function, fit, irls_step
from mgarch.score import ErrorDistribution, ScoreFunction

QMLE = ScoreFunction.from_name("qmle")
LAD = ScoreFunction.from_name("lad")
SSE = ParameterVector(1.65e-5, (0.0701,), (0.901,))
NORMAL = ErrorDistribution.parse("normal")


@pytest.fixture(scope="module")
def sse5000():
    return simulate_path(SSE, NORMAL, 5000, seed=21)


@pytest.fixture(scope="module")
def qmle_fit(sse5000):
    return fit(sse5000, FitConfig(QMLE))


def exact_root_series(theta, n, seed=0):
    """Series with X_t^2 = v_t(theta) for every t, so the QMLE equation is solved at theta."""
    c = coefficients(theta, n)
    rng = np.random.default_rng(seed)
    x2 = np.empty(n)
    for t in range(n):
        x2[t] = c[0] + c[1:t + 1] @ x2[t - 1::-1] if t else c[0]
    return SeriesData(np.sqrt(x2) * rng.choice([-1.0, 1.0], n))


def test_estimating_function_vanishes_on_constructed_root():
    theta = ParameterVector(1.0, (0.3,), (0.4,))
    data = exact_root_series(theta, 40)
    np.testing.assert_allclose(estimating_function(theta, data, QMLE), 0.0, atol=1e-12)


def test_single_observation_closed_form():
    theta = ParameterVector(1.0, (0.1,), (0.5,))
    x = 1.7
    c0 = 2.0
    grad_c0 = np.array([2.0, 0.0, 4.0])  # d c_0 / d(omega, alpha, beta)
    huber = ScoreFunction.from_name("huber")
    expected = (1 - huber.H(np.array([x / math.sqrt(c0)]))[0]) * grad_c0 / c0
    np.testing.assert_allclose(estimating_function(theta, SeriesData([x]), huber), expected, rtol=1e-14)


def test_unit_weights_reduce_to_unweighted(series11, theta11):
    for score in (QMLE, ScoreFunction.from_name("cauchy")):
        a = estimating_function(theta11, series11, score)
        b = weighted_estimating_function(theta11, series11, score, np.ones(series11.n))
        np.testing.assert_array_equal(a, b)


def test_irls_step_fixed_point():
    theta = ParameterVector(1.0, (0.3,), (0.4,))
    data = exact_root_series(theta, 40, seed=3)
    out = irls_step(theta, data, FitConfig(QMLE, alpha_dot=2.0))
    np.testing.assert_allclose(out.array, theta.array, rtol=1e-10)


def test_qmle_step_is_weighted_least_squares(series11):
    theta = ParameterVector(0.12, (0.08,), (0.78,))
    out = variance_filter(theta, series11)
    W = 1.0 / out.v**2
    x = out.grad
    y = series11.x**2 - out.v
    direct = theta.array + np.linalg.solve((x * W[:, None]).T @ x, x.T @ (W * y))
    got = irls_step(theta, series11, FitConfig(QMLE, alpha_dot=2.0)).array
    np.testing.assert_allclose(got, direct, rtol=1e-10)


def test_one_step_contracts_towards_solution(sse5000, qmle_fit):
    target = qmle_fit.theta_hat.array
    start = ParameterVector.from_array(target * 1.01, GarchOrder(1, 1))
    after = irls_step(start, sse5000, FitConfig(QMLE))
    # distance measured in standard-error units so that omega does not dominate or vanish
    se = estimate_covariance(sse5000, qmle_fit, QMLE).std_errors(sse5000.n)
    assert np.linalg.norm((after.array - target) / se) < np.linalg.norm((start.array - target) / se)


def test_qmle_recovers_truth_within_three_standard_errors(sse5000, qmle_fit):
    assert qmle_fit.converged
    se = estimate_covariance(sse5000, qmle_fit, QMLE).std_errors(sse5000.n)
    assert np.all(np.abs(qmle_fit.theta_hat.array - SSE.array) < 3 * se)


def test_lad_targets_scaled_parameter(sse5000):
    res = fit(sse5000, FitConfig(LAD))
    assert res.converged
    target = scale_by_cH(SSE, 2 / math.pi).array
    se = estimate_covariance(sse5000, res, LAD).std_errors(sse5000.n)
    assert np.all(np.abs(res.theta_hat.array - target) < 3 * se)
    # and is clearly away from the unscaled truth in the alpha coordinate
    assert abs(res.theta_hat.alpha[0] - target[1]) < abs(res.theta_hat.alpha[0] - SSE.alpha[0])


@pytest.mark.parametrize("score", ["qmle", "lad", "huber", "mu", "cauchy"])
def test_fixed_point_residual(series11, score):
    res = fit(series11, FitConfig(ScoreFunction.from_name(score)))
    assert res.converged
    assert res.m_norm <= 1e-6
    assert res.residuals.shape == (series11.n,)


@pytest.mark.parametrize("score", ["qmle", "huber", "cauchy"])
def test_alpha_dot_does_not_change_the_solution(series11, score):
    sf = ScoreFunction.from_name(score)
    a = FitConfig(sf).step_factor
    fits = [fit(series11, FitConfig(sf, alpha_dot=m * 2.0 / a)).theta_hat.array for m in (0.5, 1.0, 2.0)]
    for other in fits[1:]:
        np.testing.assert_allclose(other, fits[0], rtol=1e-6)


@pytest.mark.parametrize("s", [0.1, 2.0, 10.0])
def test_scale_equivariance(series11, s):
    base = fit(series11, FitConfig(QMLE)).theta_hat.array
    got = fit(series11.scaled(s), FitConfig(QMLE)).theta_hat.array
    np.testing.assert_allclose(got, base * np.array([s * s, 1.0, 1.0]), rtol=1e-6)


def test_mean_H_of_residuals_is_near_one(sse5000, qmle_fit):
    assert abs(np.mean(QMLE.H(qmle_fit.residuals)) - 1.0) < 3 / math.sqrt(sse5000.n)


def test_boundary_solution_satisfies_free_equations():
    data = simulate_path(SSE, NORMAL, 1500, seed=101)
    res = fit(data, FitConfig(QMLE, order=GarchOrder(2, 1)))
    assert res.converged
    assert res.at_bound == ("alpha2",)
    assert res.theta_hat.alpha[1] == pytest.approx(1e-12)
    assert res.m_norm <= 1e-6
    # the held coordinate's equation pushes outward: relaxing the floor moves alpha2 below zero
    free = fit(data, FitConfig(QMLE, order=GarchOrder(2, 1), alpha_floor=-np.inf))
    assert free.converged and free.at_bound == ()
    assert free.theta_hat.alpha[1] < 0
    assert np.all(free.v > 0)


def test_minimum_sample_size():
    with pytest.raises(InvalidParameter):
        fit(SeriesData(np.ones(29)), FitConfig(QMLE))


def test_config_validation():
    with pytest.raises(InvalidParameter):
        FitConfig(QMLE, alpha_dot=0.0)
    with pytest.raises(InvalidParameter):
        FitConfig(QMLE, alpha_floor=0.5)


def test_trace_starts_at_initial_point(series11):
    res = fit(series11, FitConfig(QMLE))
    start = FitConfig(QMLE).initial_point(series11).array
    np.testing.assert_allclose(res.trace[0], start)
    np.testing.assert_allclose(res.trace[-1], res.theta_hat.array)
    assert len(res.trace) == res.iterations + 1
