from dataclasses import replace

import numpy as np
import pytest

from mgarch.errors import InvalidParameter
from mgarch.garch import ParameterVector, simulate_path
from mgarch.inference import (AsymptoticCovariance, estimate_covariance, estimate_G, normal_ci, normal_quantile,
                              score_factor_hat)
from mgarch.mest import FitConfig, fit
from mgarch.score import ScoreFunction

QMLE = ScoreFunction.from_name("qmle")


@pytest.fixture(scope="module")
def fitted(series11):
    return fit(series11, FitConfig(QMLE))


def test_normal_quantile():
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054, rel=1e-14)
    assert normal_quantile(0.5) == 0.0


def test_G_is_symmetric_positive_semidefinite(fitted, series11):
    G = estimate_G(fitted, series11)
    np.testing.assert_array_equal(G, G.T)
    assert np.linalg.eigvalsh(G).min() >= 0


def test_zero_variance_residuals_give_zero_covariance():
    assert score_factor_hat(np.ones(50), QMLE) == 0.0


def test_qmle_score_factor_near_two_for_normal(fitted):
    assert score_factor_hat(fitted.residuals, QMLE) == pytest.approx(2.0, rel=0.15)


def test_normal_ci_examples(fitted):
    res = replace(fitted, residuals=np.zeros(100))
    k = res.theta_hat.order.k
    zero = AsymptoticCovariance(0.0, np.eye(k), np.zeros((k, k)))
    ci = normal_ci(res, zero, 0.9)
    np.testing.assert_array_equal(ci[:, 0], ci[:, 1])
    unit = AsymptoticCovariance(1.0, np.eye(k), np.eye(k))
    ci = normal_ci(res, unit, 0.95)
    np.testing.assert_allclose((ci[:, 1] - ci[:, 0]) / 2, 1.959964 / 10, rtol=1e-6)
    with pytest.raises(InvalidParameter):
        normal_ci(res, unit, 1.0)


def test_beta_variance_invariant_to_scaling(fitted, series11):
    base = estimate_covariance(series11, fitted, QMLE).cov
    scaled_data = series11.scaled(3.0)
    scaled = estimate_covariance(scaled_data, fit(scaled_data, FitConfig(QMLE)), QMLE).cov
    assert scaled[2, 2] == pytest.approx(base[2, 2], rel=1e-5)
    assert scaled[0, 0] == pytest.approx(81 * base[0, 0], rel=1e-5)


def test_requires_converged_fit(fitted, series11):
    with pytest.raises(InvalidParameter):
        estimate_covariance(series11, replace(fitted, converged=False), QMLE)


@pytest.mark.slow
def test_plug_in_variance_matches_monte_carlo_spread():
    theta = ParameterVector(0.1, (0.1,), (0.8,))
    from mgarch.score import ErrorDistribution

    normal = ErrorDistribution.parse("normal")
    est, var = [], []
    for s in range(500):
        data = simulate_path(theta, normal, 5000, seed=900 + s)
        res = fit(data, FitConfig(QMLE))
        if res.converged:
            est.append(res.theta_hat.array)
            var.append(np.diag(estimate_covariance(data, res, QMLE).cov) / data.n)
    ratio = np.mean(var, axis=0) / np.var(est, axis=0, ddof=1)
    assert np.all(np.abs(ratio - 1) < 0.3)
