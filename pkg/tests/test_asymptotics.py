import json

import numpy as np
import pytest

from flexseason.asymptotics import (
    ExperimentConfig,
    HRule,
    bias_halving_factor,
    run_bias_study,
    run_clt_study,
    run_lemma6_study,
    run_rate_study,
    sigma_theta,
)
from flexseason.errors import ConfigError
from flexseason.kernel import KernelSpec
from flexseason.presets import linear_curves, polynomial_curves, trig_curves
from flexseason.weakdep import ErrorProcessSpec

EPA = KernelSpec("epanechnikov")
IID = ErrorProcessSpec.iid(np.eye(2))
QUAD = polynomial_curves([1.0, 0.5, 2.0], [[0.0, 1.0, -1.0]])


def make(curves=QUAD, errors=IID, n=(600,), h=(0.2,), t=(0.5,), reps=200, seed=1, rule=None, threads=1):
    rule = rule or HRule("fixed", tuple(h))
    return ExperimentConfig(curves, errors, EPA, n, rule, t, reps, seed, threads)


def test_config_rejects_few_replications():
    with pytest.raises(ConfigError, match="replications"):
        make(reps=50)


def test_config_rejects_boundary_eval_point():
    with pytest.raises(ConfigError, match="interior"):
        make(t=(0.15,))


def test_config_rejects_dimension_mismatch():
    with pytest.raises(ConfigError):
        make(errors=ErrorProcessSpec.iid(np.eye(3)))


def test_config_from_dict_strict():
    base = {
        "curves": {"preset": "linear", "d": 2},
        "errors": {"variant": "iid", "sigma_eps": 1.0},
        "n_list": [500],
        "h_rule": {"type": "fixed", "h": 0.2},
        "eval_points": [0.5],
        "replications": 100,
    }
    cfg = ExperimentConfig.from_dict(base, seed_override=9)
    assert cfg.base_seed == 9 and cfg.error_spec.d == 2
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "replicates": 3})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**base, "h_rule": {"type": "fixed", "h": 0.2, "x": 1}})


def test_sigma_theta_iid_d2():
    np.testing.assert_allclose(sigma_theta(EPA, IID), 0.6 * 0.5 * np.eye(2), atol=1e-15)
    ar = ErrorProcessSpec.var1(0.5 * np.eye(2), np.eye(2))
    np.testing.assert_allclose(sigma_theta(EPA, ar), 1.2 * np.eye(2), atol=1e-10)


def test_linear_curves_unbiased():
    rep = run_bias_study(make(curves=linear_curves(2), t=(0.3, 0.5, 0.7)))
    for row in rep.rows:
        assert np.all(np.abs(row["mean_error"]) < 3 * row["se"])
        np.testing.assert_array_equal(row["theoretical_bias"], 0.0)


def test_split_half_self_consistency():
    rep = run_bias_study(make(reps=400))
    for row in rep.rows:
        assert np.all(row["split_half_z"] < 3)


def test_bias_report_halving_lookup():
    rep = run_bias_study(make(curves=trig_curves(2), n=(2000, 2000), h=(0.2, 0.1), reps=200))
    f = bias_halving_factor(rep, 2000, 0.5)
    assert f == pytest.approx(rep.summary["halving_factors"][0]["factor"])
    with pytest.raises(KeyError):
        bias_halving_factor(rep, 999, 0.5)


def test_report_is_deterministic_and_thread_independent():
    a = run_clt_study(make(reps=600, threads=1)).to_json()
    b = run_clt_study(make(reps=600, threads=1)).to_json()
    c = run_clt_study(make(reps=600, threads=4)).to_json()
    assert a == b == c
    assert json.loads(a)["study"] == "clt"


def test_seed_changes_report():
    a = run_bias_study(make(seed=1)).to_json()
    b = run_bias_study(make(seed=2)).to_json()
    assert a != b


def test_covariances_symmetric_psd_and_coverage_range():
    rep = run_clt_study(make(reps=300))
    for row in rep.rows:
        cov = row["empirical_cov"]
        assert np.abs(cov - cov.T).max() <= 1e-12
        assert np.linalg.eigvalsh(cov).min() >= -1e-10
        assert np.all((row["coverage_95"] >= 0) & (row["coverage_95"] <= 1))
    lem = run_lemma6_study(make(reps=300))
    for row in lem.rows:
        for key in ("cov_b0", "b1_cov"):
            m = row[key]
            assert np.abs(m - m.T).max() <= 1e-12
            assert np.linalg.eigvalsh(m).min() >= -1e-10


def test_clt_needs_errors():
    with pytest.raises(ConfigError):
        run_clt_study(make(errors=None))


def test_lemma6_vma_target():
    ma = ErrorProcessSpec.vma([0.8 * np.eye(2)], np.eye(2))
    rep = run_lemma6_study(make(errors=ma, n=(4000,), h=(0.1,), reps=2000, curves=linear_curves(2)))
    row = rep.rows[0]
    np.testing.assert_allclose(row["target"], 0.6 * 3.24 * np.eye(2), atol=1e-13)
    assert row["rel_frobenius_error"] < 0.15


def test_rate_study_preconditions():
    with pytest.raises(ConfigError):
        run_rate_study(make(n=(500, 8000), rule=HRule("rate", (), 1.0)))
    with pytest.raises(ConfigError):
        run_rate_study(make(n=(500, 1000, 2000), rule=HRule("rate", (), 1.0)))
    with pytest.raises(ConfigError):
        run_rate_study(make(n=(500, 2000, 8000), h=(0.2,)))


def test_rate_study_noiseless_flag():
    rep = run_rate_study(make(errors=None, n=(500, 2000, 8000), rule=HRule("rate", (), 1.0), reps=100))
    assert rep.summary["noiseless"] is True
    assert rep.summary["slope"] is None
    # RMSE is the deterministic residual of the bias expansion, identical across replications
    for row in rep.rows:
        assert row["rmse"] < 1e-4


def test_rate_slope_stable_under_doubling():
    rule = HRule("rate", (), 1.0)
    small = run_rate_study(make(n=(500, 2000, 8000), rule=rule, reps=300))
    big = run_rate_study(make(n=(500, 2000, 8000), rule=rule, reps=600))
    assert abs(small.summary["slope"] - big.summary["slope"]) < small.summary["slope_se"]


def test_csv_summary_has_component_rows():
    rep = run_clt_study(make(reps=150))
    lines = rep.to_csv().strip().split("\n")
    assert lines[0].startswith("study,n,h,t,component")
    assert len(lines) == 1 + 2
    assert lines[1].split(",")[4] == "alpha"
