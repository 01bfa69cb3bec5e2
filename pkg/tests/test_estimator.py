import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexseason.errors import BandwidthError, ConfigError, DegenerateWindow, DomainError
from flexseason.estimator import (
    FitConfig,
    fit_at,
    fit_grid,
    rule_of_thumb_bandwidth,
    s_moment,
    t_moment,
    theoretical_bias,
    weights,
)
from flexseason.kernel import KernelSpec, evaluate, moment
from flexseason.model import CurveSet, SeasonalPanel, build_design, curves_to_theta, synthesize_panel
from flexseason.presets import linear_curves, polynomial_curves, trig_curves

from oracles import dense_wls, epanechnikov, loop_moment

EPA = KernelSpec("epanechnikov")


def zero_panel(n, d=2):
    return SeasonalPanel(np.zeros((n, d)))


def test_s_moment_limits_interior():
    p, cfg = zero_panel(1000), FitConfig(EPA, 0.1)
    assert s_moment(p, cfg, 0.5, 0) == pytest.approx(1.0, abs=0.02)
    assert abs(s_moment(p, cfg, 0.5, 1)) < 1e-3
    assert s_moment(p, cfg, 0.5, 2) == pytest.approx(0.1**2 * 0.2, rel=0.1)


@pytest.mark.parametrize("k", range(4))
def test_s_moment_matches_loop(k):
    p, cfg = zero_panel(300), FitConfig(EPA, 0.17)
    assert s_moment(p, cfg, 0.41, k) == pytest.approx(
        loop_moment(np.ones(300), 0.41, 0.17, k, epanechnikov), abs=1e-14
    )


@pytest.mark.parametrize("k", range(4))
def test_eq6_limit_improves_with_n(k):
    cfg = FitConfig(EPA, 0.1)
    target = 0.1**k * moment(EPA, k)
    errs = [abs(s_moment(zero_panel(n), cfg, 0.5, k) - target) for n in (100, 1000, 10000)]
    if k % 2:
        assert max(errs) < 1e-12
    else:
        assert errs[0] > errs[1] > errs[2]


def test_t_moment_constant_panel():
    c = np.array([1.5, -2.0, 0.25])
    p = SeasonalPanel(np.tile(c, (50, 1)))
    cfg = FitConfig(EPA, 0.2)
    for k in range(4):
        np.testing.assert_allclose(t_moment(p, cfg, 0.3, k), c * s_moment(p, cfg, 0.3, k), rtol=1e-14, atol=1e-16)


def test_t_moment_zero_panel():
    assert not t_moment(zero_panel(20), FitConfig(EPA, 0.3), 0.5, 1).any()


@pytest.mark.parametrize("k", range(4))
def test_t_moment_random_matches_loop(rng, k):
    y = rng.normal(size=(7, 2))
    got = t_moment(SeasonalPanel(y), FitConfig(EPA, 0.4), 0.5, k)
    np.testing.assert_allclose(got, loop_moment(y, 0.5, 0.4, k, epanechnikov), atol=1e-14, rtol=0)


LATTICE = [(n, h, t) for n in (50, 200, 1000) for h in (0.05, 0.1, 0.3) for t in (0.1, 0.5, 0.9)]


@pytest.mark.parametrize("n,h,t", LATTICE)
def test_weight_identities_lattice(n, h, t):
    w = weights(zero_panel(n), FitConfig(EPA, h), t)
    tt = np.arange(1, n + 1) / n
    assert abs(w.sum() - 1.0) < 1e-12
    assert abs(np.sum(w * (tt - t))) < 1e-12


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(10, 600),
    h=st.floats(0.02, 1.0),
    t=st.floats(0.0, 1.0),
    family=st.sampled_from(["epanechnikov", "quartic", "triweight", "truncated-gaussian"]),
)
def test_weight_identities_property(n, h, t, family):
    cfg = FitConfig(KernelSpec.from_name(family), h)
    try:
        w = weights(zero_panel(n), cfg, t)
    except DegenerateWindow:
        return
    tt = np.arange(1, n + 1) / n
    assert abs(w.sum() - 1.0) < 1e-12
    assert abs(np.sum(w * (tt - t))) < 1e-12
    reach = h * cfg.kernel.support
    assert np.all(w[np.abs(tt - t) > reach] == 0.0)


def test_degenerate_window():
    with pytest.raises(DegenerateWindow) as info:
        weights(zero_panel(10), FitConfig(EPA, 0.01), 0.55)
    assert info.value.t == 0.55


def test_fit_config_validation():
    with pytest.raises(BandwidthError):
        FitConfig(EPA, 0.0)
    with pytest.raises(BandwidthError):
        FitConfig(EPA, 1.5)


def test_linear_reproduction_example():
    c = polynomial_curves([2, 3], [[-0.5, 1]])
    p = synthesize_panel(c, np.zeros((200, 2)))
    cfg = FitConfig(EPA, 0.2)
    for t in (0.25, 0.5, 0.7):
        fit = fit_at(p, cfg, t)
        np.testing.assert_allclose(fit.theta_hat, [2 + 3 * t, t - 0.5], atol=1e-9)
        np.testing.assert_allclose(fit.theta_prime_hat, [3, 1], atol=1e-9)


@pytest.mark.parametrize("d", [2, 4, 12])
@pytest.mark.parametrize("family", ["epanechnikov", "quartic", "triweight", "truncated-gaussian"])
def test_linear_reproduction_all_t(d, family):
    c = linear_curves(d, intercept=-1, slope=0.7, seasonal_slope=2.0)
    p = synthesize_panel(c, np.zeros((150, d)))
    cfg = FitConfig(KernelSpec.from_name(family), 0.08)
    for t in np.linspace(0.1, 0.9, 9):
        fit = fit_at(p, cfg, t)
        np.testing.assert_allclose(fit.theta_hat, curves_to_theta(c, t), atol=1e-9)
        slope = np.array([0.7] + [2.0 * (j - (d + 1) / 2) for j in range(1, d)])
        np.testing.assert_allclose(fit.theta_prime_hat, slope, atol=1e-9)


def test_matches_dense_normal_equations_example(rng):
    y = rng.uniform(-1, 1, size=(7, 2))
    fit = fit_at(SeasonalPanel(y), FitConfig(EPA, 0.4), 0.5)
    a, b = dense_wls(y, build_design(2).A, 0.5, 0.4, epanechnikov)
    np.testing.assert_allclose(fit.theta_hat, a, atol=1e-10)
    np.testing.assert_allclose(fit.theta_prime_hat, b, atol=1e-10)


def test_constant_panel():
    fit = fit_at(SeasonalPanel(np.full((30, 2), 5.0)), FitConfig(EPA, 0.3), 0.4)
    np.testing.assert_allclose(fit.theta_hat, [5, 0], atol=1e-13)
    np.testing.assert_allclose(fit.betas_hat, [0, 0], atol=1e-13)


def test_fit_result_completion(rng):
    y = rng.normal(size=(40, 4))
    fit = fit_at(SeasonalPanel(y), FitConfig(EPA, 0.3), 0.5)
    assert fit.betas_hat.shape == (4,)
    assert abs(fit.betas_hat.sum()) < 1e-14
    seasons = build_design(4).A @ fit.theta_hat
    np.testing.assert_allclose(seasons, fit.alpha_hat + fit.betas_hat, atol=1e-13)
    assert fit.denominator > 1e-12
    assert len(fit.s_moments) == 4


def test_fit_at_domain():
    with pytest.raises(DomainError):
        fit_at(zero_panel(20), FitConfig(EPA, 0.3), 1.2)


def test_fit_grid_basic(rng):
    p = SeasonalPanel(rng.normal(size=(60, 3)))
    cfg = FitConfig(EPA, 0.25)
    assert fit_grid(p, cfg, []) == []
    [single] = fit_grid(p, cfg, [0.3])
    np.testing.assert_array_equal(single.theta_hat, fit_at(p, cfg, 0.3).theta_hat)
    grid = np.linspace(0, 1, 7)
    for r, t in zip(fit_grid(p, cfg, grid), grid):
        np.testing.assert_array_equal(r.theta_hat, fit_at(p, cfg, t).theta_hat)


def test_fit_grid_attaches_failing_point():
    with pytest.raises(DegenerateWindow) as info:
        # at h=0.12 the point 0.5 sees three grid points, 0.55 only two
        fit_grid(zero_panel(10), FitConfig(EPA, 0.12), [0.5, 0.55])
    assert info.value.t == 0.55


def test_quadratic_bias_bound():
    # noiseless alpha(t) = t^2: interior error is bounded by h^2 mu_2 max|alpha''| / 2 (+10%)
    h = 0.1
    c = polynomial_curves([0, 0, 1], [[0.2]])
    p = synthesize_panel(c, np.zeros((1000, 2)))
    cfg = FitConfig(EPA, h)
    grid = [t for t in np.linspace(0, 1, 101) if h <= t <= 1 - h]
    bound = h**2 * 0.2 * 2 / 2 * 1.1
    for fit in fit_grid(p, cfg, grid):
        err = abs(fit.theta_hat[0] - fit.t**2)
        assert err <= bound


def test_theoretical_bias_examples():
    cfg = FitConfig(EPA, 0.1)
    np.testing.assert_array_equal(theoretical_bias(linear_curves(3), cfg, 0.5), np.zeros(3))
    quad = polynomial_curves([0, 0, 1], [[0.0, 1.0]])
    np.testing.assert_allclose(theoretical_bias(quad, cfg, 0.5), [0.002, 0.0], atol=1e-15)
    doubled = theoretical_bias(quad, FitConfig(EPA, 0.2), 0.5)
    np.testing.assert_allclose(doubled, 4 * theoretical_bias(quad, cfg, 0.5), rtol=1e-15)


def test_theoretical_bias_needs_derivatives():
    c = CurveSet(lambda t: t, [lambda t: 0 * t, lambda t: 0 * t])
    with pytest.raises(ConfigError):
        theoretical_bias(c, FitConfig(EPA, 0.1), 0.5)


def test_theoretical_bias_interior_only():
    with pytest.raises(DomainError):
        theoretical_bias(trig_curves(2), FitConfig(EPA, 0.2), 0.1)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**32 - 1))
def test_linearity_in_panel(a, b, seed):
    r = np.random.default_rng(seed)
    y1, y2 = r.normal(size=(40, 3)), r.normal(size=(40, 3))
    cfg = FitConfig(EPA, 0.2)
    lhs = fit_at(SeasonalPanel(a * y1 + b * y2), cfg, 0.45).theta_hat
    rhs = a * fit_at(SeasonalPanel(y1), cfg, 0.45).theta_hat + b * fit_at(SeasonalPanel(y2), cfg, 0.45).theta_hat
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * max(1, abs(a) + abs(b)))


def test_evaluation_order_independence(rng):
    p = SeasonalPanel(rng.normal(size=(80, 2)))
    cfg = FitConfig(EPA, 0.2)
    grid = [0.2, 0.5, 0.8]
    fwd = [r.theta_hat for r in fit_grid(p, cfg, grid)]
    rev = [r.theta_hat for r in fit_grid(p, cfg, grid[::-1])][::-1]
    for x, y in zip(fwd, rev):
        assert np.array_equal(x, y)


def test_rule_of_thumb():
    assert rule_of_thumb_bandwidth(32) == pytest.approx(0.5)
    assert rule_of_thumb_bandwidth(32, c=0.5) == pytest.approx(0.25)
