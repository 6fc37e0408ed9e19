import numpy as np
import pytest

import mgarch.experiments as ex
from mgarch.errors import InvalidParameter
from mgarch.experiments import (DGP, ExperimentSpec, ReplicateTable, bias_mse_study, coverage_study,
                                misspecification_study, normalized_bias_mse, parse_score, replication_seeds,
                                scores_from_names, simulate_replicate, standardized_bias_mse)
from mgarch.garch import GarchOrder, ParameterVector, scale_by_cH, simulate_path, variance_filter
from mgarch.score import ErrorDistribution, ScoreFunction

NORMAL = ErrorDistribution.parse("normal", standardized=True)
THETA = ParameterVector(0.1, (0.1,), (0.8,))


def table(rows, cH=1.0, order=GarchOrder(1, 1)):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return ReplicateTable(ScoreFunction.from_name("qmle"), order, rows, np.ones(len(rows), dtype=bool), cH)


def test_standardized_bias_mse_examples():
    target = scale_by_cH(THETA, 0.6).array
    bias, mse = standardized_bias_mse(table([target] * 4, 0.6), THETA, 0.6)
    np.testing.assert_allclose(bias, 0, atol=1e-16)
    np.testing.assert_allclose(mse, 0, atol=1e-30)
    d = np.array([0, 0, 0.02])
    bias, mse = standardized_bias_mse(table([THETA.array + d, THETA.array - d]), THETA, 1.0)
    np.testing.assert_allclose(bias, 0, atol=1e-16)
    assert mse[2] == pytest.approx(0.02**2)
    with pytest.raises(InvalidParameter):
        standardized_bias_mse(table([THETA.array]), THETA, 0.0)


def test_normalized_relates_to_standardized():
    rng = np.random.default_rng(1)
    cH, n = 0.7, 400
    rows = scale_by_cH(THETA, cH).array * (1 + 0.05 * rng.standard_normal((30, 3)))
    t = table(rows, cH)
    _, s_mse = standardized_bias_mse(t, THETA, cH)
    n_bias, n_mse = normalized_bias_mse(t, scale_by_cH(THETA, cH), n)
    np.testing.assert_allclose(n_mse[:2], n * cH**2 * s_mse[:2], rtol=1e-12)
    np.testing.assert_allclose(n_mse[2], n * s_mse[2], rtol=1e-12)
    zero_b, zero_m = normalized_bias_mse(table([scale_by_cH(THETA, cH).array] * 3, cH), scale_by_cH(THETA, cH), n)
    np.testing.assert_allclose(zero_b, 0, atol=1e-14)
    np.testing.assert_allclose(zero_m, 0, atol=1e-26)


def test_spec_validation():
    est = scores_from_names(["qmle"])
    dgp = DGP(ParameterVector(0.1, (0.1, 0.05), (0.7,)), NORMAL, 500)
    with pytest.raises(InvalidParameter):
        ExperimentSpec(dgp, est, R=0)
    with pytest.raises(InvalidParameter):
        ExperimentSpec(dgp, est, R=5, fit_order=GarchOrder(1, 1))
    with pytest.raises(InvalidParameter):
        misspecification_study(ExperimentSpec(DGP(THETA, NORMAL, 500), est, R=2))


def test_embedding_identity():
    big = THETA.embed(GarchOrder(2, 1))
    spec = ExperimentSpec(DGP(THETA, NORMAL, 400), scores_from_names(["qmle"]), R=1,
                          fit_order=GarchOrder(2, 1))
    assert spec.theta0 == big
    a = simulate_path(THETA, NORMAL, 300, seed=5)
    b = simulate_path(big, NORMAL, 300, seed=5)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(variance_filter(THETA, a).v, variance_filter(big, a).v)


def test_replication_streams_are_independent_of_worker_count():
    spec = ExperimentSpec(DGP(THETA, NORMAL, 500), scores_from_names(["qmle", "lad"]), R=6, seed=3)
    a = bias_mse_study(spec)
    b = bias_mse_study(spec)
    from dataclasses import replace

    c = bias_mse_study(replace(spec, n_jobs=2))
    for label in a.tables:
        np.testing.assert_array_equal(a.tables[label].estimates, b.tables[label].estimates)
        np.testing.assert_array_equal(a.tables[label].estimates, c.tables[label].estimates)
    ss = replication_seeds(3, 6)[4]
    np.testing.assert_array_equal(simulate_replicate(spec, ss).x, simulate_replicate(spec, ss).x)


def test_unbounded_interval_hook_gives_full_coverage():
    spec = ExperimentSpec(DGP(THETA, NORMAL, 500), scores_from_names(["qmle"]), R=4, seed=2)

    def everything(label, arm, ci):
        return np.tile([-np.inf, np.inf], (3, 1))

    res = coverage_study(spec, 0.9, interval_hook=everything)
    np.testing.assert_array_equal(res.rates[("qmle", "asymptotic")], 100.0)
    assert res.dropped[("qmle", "asymptotic")] == 0


def test_coverage_needs_enough_bootstrap_replicates():
    spec = ExperimentSpec(DGP(THETA, NORMAL, 500), scores_from_names(["qmle"]), R=2, B=50, schemes=("M",))
    with pytest.raises(InvalidParameter):
        coverage_study(spec, 0.9)


def test_cells_with_low_convergence_are_absent(monkeypatch):
    real_fit = ex.fit
    calls = {"n": 0}

    def flaky(data, config):
        res = real_fit(data, config)
        if config.score.label == "lad":
            calls["n"] += 1
            if calls["n"] % 3:  # two in three LAD fits fail
                from dataclasses import replace
                return replace(res, converged=False)
        return res

    monkeypatch.setattr(ex, "fit", flaky)
    spec = ExperimentSpec(DGP(THETA, NORMAL, 500), scores_from_names(["qmle", "lad"]), R=6, seed=8)
    out = bias_mse_study(spec)
    assert not out.cells["qmle"].absent
    assert out.cells["lad"].absent and out.cells["lad"].converged == 2
    assert np.isnan(out.tables["lad"].estimates).any()


def test_score_parsing():
    assert parse_score("huber:2.5").tuning == 2.5
    assert parse_score("mu").label == "mu(3)"
    assert [s.label for s in scores_from_names(["qmle", "cauchy"])] == ["qmle", "cauchy"]


@pytest.mark.slow
def test_mse_shrinks_like_one_over_n():
    theta = ParameterVector(0.5, (0.2,), (0.5,))
    mse = []
    for n in (500, 1000, 2000):
        spec = ExperimentSpec(DGP(theta, NORMAL, n), scores_from_names(["qmle"]), R=500, seed=41)
        mse.append(bias_mse_study(spec).cells["qmle"].mse)
    mse = np.array(mse)
    ratios = mse[:-1] / mse[1:]
    assert np.all((ratios >= 1.5) & (ratios <= 2.7)), ratios
