"""Smoke tests for the python bindings: a thin pass over each exposed surface."""

import math

import numpy as np
import pytest

import tpsurv


def small_two_phase(seed=5, n=120):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n, 3))
    v = (rng.random((n, 1)) < 0.45).astype(float)
    lp = 0.8 * u[:, 0] + 1.1 * v[:, 0]
    time = rng.exponential(1.0 / np.exp(lp))
    event = (rng.random(n) < 0.6).astype(int)
    event[0] = 1
    observed = (rng.random(n) < 0.6).astype(int)
    observed[:10] = 1
    return tpsurv.TwoPhaseDataset(
        u=u, v=v, v_observed=[int(x) for x in observed], v_kinds=["binary"],
        time=time, event=[int(x) for x in event],
    )


def test_kaplan_meier_and_log_rank():
    data = tpsurv.Dataset(
        time=np.array([1.0, 2.0, 3.0]), event=[1, 1, 1],
        covariates=np.zeros((3, 0)),
    )
    km = tpsurv.kaplan_meier(data)
    assert km.survival == pytest.approx([2 / 3, 1 / 3, 0.0])
    chi2, p, df = tpsurv.log_rank_test([data, data])
    assert p == pytest.approx(1.0)
    assert df == 1


def test_fit_cox_and_metrics():
    rng = np.random.default_rng(11)
    n = 150
    x = rng.standard_normal((n, 2))
    time = rng.exponential(1.0 / np.exp(0.9 * x[:, 0]))
    data = tpsurv.Dataset(time=time, event=[1] * n, covariates=x)
    fit = tpsurv.fit_cox(data)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(0.9, abs=0.3)

    lp = x @ np.asarray(fit.coefficients)
    assert tpsurv.c_index(data, lp) > 0.6
    assert tpsurv.calibration_slope(data, lp) == pytest.approx(1.0, abs=1e-4)
    ibs = tpsurv.integrated_brier_score(
        data, lambda t, i: fit.baseline.survival(t, lp[i])
    )
    assert 0.0 < ibs < 0.5


def test_expert_guided_identity():
    data = small_two_phase()
    dk = tpsurv.DomainKnowledge()
    dk.retained_u_indices = [0]
    config = tpsurv.MethodConfig()
    config.lambda_grid_size = 10
    config.delta_grid = [1.0]
    fit = tpsurv.fit_expert_guided(data, dk, config, 7)
    lp = fit.linear_predictors(data.u, data.v)
    manual = data.u @ np.asarray(fit.beta_u) + data.v @ np.asarray(fit.beta_v)
    assert np.allclose(lp, manual + fit.lp_offset, atol=1e-12)
    assert len(fit.selected_mask) == data.u.shape[1] + data.v.shape[1]


def test_mcc_and_stratify():
    assert tpsurv.mcc([True, False], [True, False]) == 1.0
    labels = tpsurv.risk_stratify(np.arange(1.0, 10.0), 3)
    assert labels == [0, 0, 0, 1, 1, 1, 2, 2, 2]


def test_scenario_roundtrip():
    spec = tpsurv.ScenarioSpec()
    spec.n = 120
    spec.p = 10
    spec.scenario = "II"
    spec.mechanism = "mcar"
    spec.methods = ["eg"]
    spec.replications = 1
    spec.method_config.lambda_grid_size = 8
    spec.method_config.delta_grid = [1.0]
    spec.domain_knowledge.retained_u_indices = [0, 1]

    gen = tpsurv.generate(spec, 1)
    assert gen.train.n == 120
    assert gen.test.n == 36
    assert 0.0 < gen.realized_missing_rate < 1.0

    result = tpsurv.run_scenario(spec, 2)
    summary = result.summaries[0]
    assert summary.method == "eg"
    assert summary.failures == 0
    assert 0.0 <= summary.c_index.mean <= 1.0

    rep = tpsurv.run_replication(spec, 1)
    again = tpsurv.run_replication(spec, 1)
    assert rep.outcomes[0].report.c_index == again.outcomes[0].report.c_index
