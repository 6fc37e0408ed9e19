import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgarch.diagnostics import (VolatilitySeries, ks_critical, normalized_volatility, normalized_volatility_at,
                                qq_against_t, t_cdf, t_quantile)
from mgarch.errors import InvalidParameter
from mgarch.garch import ParameterVector, SeriesData, scale_by_cH, simulate_path
from mgarch.mest import FitConfig, fit
from mgarch.plotting import qq_plot_svg, volatility_overlay_svg
from mgarch.score import ErrorDistribution, ScoreFunction

THETA = ParameterVector(0.5, (0.1,), (0.5,))  # c_0 = 1


def test_constant_variance_gives_uniform_weights():
    u = normalized_volatility_at(THETA, SeriesData(np.zeros(3))).u
    np.testing.assert_allclose(u, [1 / 3] * 3, rtol=1e-15)


def test_two_point_example():
    # v_1 = c_0 = 1 and v_2 = 1 + 0.1 X_1^2 = 3
    u = normalized_volatility_at(THETA, SeriesData([math.sqrt(20.0), 0.0])).u
    np.testing.assert_allclose(u, [0.25, 0.75], rtol=1e-14)


def test_volatility_sums_to_one_and_ignores_scale(series11, theta11):
    u = normalized_volatility_at(theta11, series11).u
    assert abs(u.sum() - 1.0) < 1e-12
    for c in (0.3, 2.0 / math.pi, 7.0):
        np.testing.assert_allclose(normalized_volatility_at(scale_by_cH(theta11, c), series11).u, u,
                                   rtol=1e-12, atol=0)


def test_volatility_series_validation():
    with pytest.raises(InvalidParameter):
        VolatilitySeries(np.array([0.5, 0.0, 0.5]))


def test_qmle_and_lad_volatility_nearly_overlap(series11):
    fits = [fit(series11, FitConfig(ScoreFunction.from_name(s))) for s in ("qmle", "lad")]
    a, b = (normalized_volatility(f, series11).u for f in fits)
    assert np.max(np.abs(a - b)) < 0.1 * max(a.max(), b.max())


def test_requires_converged_fit(series11):
    from dataclasses import replace

    res = fit(series11, FitConfig(ScoreFunction.from_name("qmle")))
    with pytest.raises(InvalidParameter):
        normalized_volatility(replace(res, converged=False), series11)


def test_middle_position_maps_to_t_median():
    qq = qq_against_t(np.arange(7.0), 3.01)
    assert qq.positions[3] == 0.5
    assert abs(qq.reference_quantiles[3]) < 1e-12
    assert np.all(np.diff(qq.reference_quantiles) > 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), d=st.floats(0.5, 40))
def test_qq_is_permutation_invariant(seed, d):
    rng = np.random.default_rng(seed)
    r = rng.standard_t(4, 101)
    a, b = qq_against_t(r, d), qq_against_t(rng.permutation(r), d)
    np.testing.assert_array_equal(a.sorted_residuals, b.sorted_residuals)
    np.testing.assert_array_equal(a.reference_quantiles, b.reference_quantiles)


@pytest.mark.parametrize("d", [1.0, 2.2, 3.01, 4.01, 12.01, 60.0])
def test_quantile_round_trip(d):
    p = np.concatenate(([1e-6, 1e-3], np.linspace(0.01, 0.99, 99), [0.999, 1 - 1e-6]))
    np.testing.assert_allclose(t_cdf(t_quantile(p, d), d), p, rtol=0, atol=1e-9)


def test_known_quantiles():
    assert t_quantile(0.975, 1.0) == pytest.approx(math.tan(math.pi * 0.475), rel=1e-9)
    assert t_quantile(0.975, 5.0) == pytest.approx(2.570581835636314, rel=1e-9)
    with pytest.raises(InvalidParameter):
        t_quantile(0.5, 0.0)


def test_matching_reference_stays_inside_kolmogorov_band():
    r = np.random.default_rng(13).standard_t(5, 10_000)
    qq = qq_against_t(r, 5.0)
    assert qq.max_cdf_deviation() < ks_critical(r.size, 0.99)
    assert abs(qq.tail_slope) < 0.15


def test_heavier_tail_is_flagged():
    r = np.random.default_rng(14).standard_t(2.2, 5_000)
    heavy = qq_against_t(r, 12.01)
    assert heavy.tail_slope > 0
    assert heavy.sorted_residuals[-1] > heavy.reference_quantiles[-1]
    light = qq_against_t(np.random.default_rng(15).standard_normal(5_000), 3.01)
    assert light.tail_slope < 0


def test_svg_output_is_byte_stable(tmp_path):
    normal = ErrorDistribution.parse("normal")
    data = simulate_path(ParameterVector(0.1, (0.1,), (0.8,)), normal, 400, seed=2)
    res = fit(data, FitConfig(ScoreFunction.from_name("qmle")))
    qq = qq_against_t(res.residuals, 4.01)
    u = normalized_volatility(res, data).u
    for name in ("a", "b"):
        qq_plot_svg(qq, tmp_path / f"qq_{name}.svg")
        volatility_overlay_svg({"qmle": u}, tmp_path / f"vol_{name}.svg", squared_returns=data.x**2)
    assert (tmp_path / "qq_a.svg").read_bytes() == (tmp_path / "qq_b.svg").read_bytes()
    assert (tmp_path / "vol_a.svg").read_bytes() == (tmp_path / "vol_b.svg").read_bytes()
    assert b"<svg" in (tmp_path / "qq_a.svg").read_bytes()
