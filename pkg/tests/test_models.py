"""State-space models, the Kalman oracle, CSV ingestion, and the ABC limit."""

import math

import numpy as np
import pytest

from mlabc.abc_core import AbcTarget, make_schedule
from mlabc.models import (
    CompactToy1D,
    LinearGaussianSsm,
    StochasticVolatilityModel,
    default_svm_series,
    kalman_posterior_mean,
    load_returns_csv,
    simulate_lgssm,
    simulate_svm,
)
from mlabc.rng import RngStream
from mlabc.smc import init_level0


def test_lgssm_degenerate_dynamics():
    w, v = simulate_lgssm(50, 1.0, 1e-12, RngStream(1))
    assert np.max(np.abs(w)) < 1e-4
    assert abs(v.std() - 1.0) < 0.25


def test_lgssm_marginal_variance_accumulates():
    # covariance recursion oracle: Var(v_n) = (n+1) s2w + s2v
    n, s2v, s2w = 8, 1.3, 0.7
    model = LinearGaussianSsm(n, s2v, s2w)
    stream = RngStream(2)
    finals = model.sample_observations(
        model.sample_latent_paths(10**4, stream), stream
    )[:, -1]
    expected = (n + 1) * s2w + s2v
    assert finals.var() == pytest.approx(expected, rel=0.10)


def test_lgssm_reproducible():
    a = simulate_lgssm(10, 1.0, 1.0, RngStream(3, 5))
    b = simulate_lgssm(10, 1.0, 1.0, RngStream(3, 5))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_lgssm_validation():
    with pytest.raises(ValueError):
        LinearGaussianSsm(3, -1.0, 1.0)
    with pytest.raises(ValueError):
        LinearGaussianSsm(3, 1.0, 1.0, np.zeros(3))  # needs n+1 points


# -- Kalman oracle ---------------------------------------------------------


def test_kalman_one_step_closed_form():
    model = LinearGaussianSsm(2, 2.0, 3.0, np.array([1.5, 0.0, 0.0]))
    assert kalman_posterior_mean(model, 0) == pytest.approx(1.5 * 3.0 / (3.0 + 2.0))


def _gh_posterior_means(model, upto):
    """Tensor Gauss-Hermite quadrature of the joint Gaussian posterior."""
    nodes, weights = np.polynomial.hermite.hermgauss(32)
    sites = model.n + 1
    grids = np.meshgrid(*([math.sqrt(2.0) * nodes] * sites), indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=1)
    wt = np.prod(
        np.meshgrid(*([weights] * sites), indexing="ij"), axis=0
    ).ravel()
    w = math.sqrt(model.sigma2_w) * np.cumsum(z, axis=1)
    log_lik = np.zeros(len(z))
    for i in range(upto + 1):
        log_lik += -0.5 * (model.data[i] - w[:, i]) ** 2 / model.sigma2_v
    lik = np.exp(log_lik - log_lik.max())
    mass = np.sum(wt * lik)
    return np.array([np.sum(wt * lik * w[:, i]) / mass for i in range(sites)])


def test_kalman_matches_tensor_quadrature_20_instances():
    gen = np.random.default_rng(77)
    for _ in range(20):
        s2v = float(gen.uniform(0.5, 2.0))
        s2w = float(gen.uniform(0.5, 2.0))
        data = gen.normal(0.0, 1.5, size=4)
        model = LinearGaussianSsm(3, s2v, s2w, data)
        oracle = _gh_posterior_means(model, upto=3)
        assert kalman_posterior_mean(model, 3) == pytest.approx(
            float(oracle[3]), abs=1e-6
        )


def test_kalman_filtered_prefix_matches_quadrature():
    model = LinearGaussianSsm(3, 1.0, 1.0, np.array([0.4, -1.0, 2.0, 0.3]))
    for i in range(4):
        oracle = _gh_posterior_means(model, upto=i)
        assert kalman_posterior_mean(model, i) == pytest.approx(
            float(oracle[i]), abs=1e-6
        )


def test_kalman_smoother_matches_quadrature():
    model = LinearGaussianSsm(3, 1.0, 1.0, np.array([0.4, -1.0, 2.0, 0.3]))
    oracle = _gh_posterior_means(model, upto=3)
    np.testing.assert_allclose(model.kalman_smoothed_means(), oracle, atol=1e-6)


def test_kalman_uninformative_observations():
    model = LinearGaussianSsm(4, 1e12, 1.0, np.array([5.0, -3.0, 2.0, 1.0, 4.0]))
    assert abs(kalman_posterior_mean(model, 4)) < 1e-6 * 5.0


def test_kalman_index_bounds():
    model = LinearGaussianSsm(2, 1.0, 1.0, np.zeros(3))
    with pytest.raises(IndexError):
        kalman_posterior_mean(model, 3)


# -- stochastic volatility ---------------------------------------------------


def test_svm_no_persistence_at_zero_beta():
    w, _ = simulate_svm(10**4, 0.5, 0.0, 0.09, RngStream(4))
    lag1 = np.corrcoef(w[:-1], w[1:])[0, 1]
    assert abs(lag1) < 3.0 / math.sqrt(10**4)
    assert w.mean() == pytest.approx(0.5, abs=4 * 0.3 / math.sqrt(10**4))


def test_svm_stationary_variance():
    beta, s2w = 0.9, 0.04
    w, _ = simulate_svm(10**5, 0.0, beta, s2w, RngStream(5))
    assert w.var() == pytest.approx(s2w / (1 - beta**2), rel=0.10)


def test_svm_latent_marginal_mean_is_alpha():
    alpha = -0.7
    paths = np.stack(
        [simulate_svm(20, alpha, 0.8, 0.04, RngStream(6, k))[0] for k in range(400)]
    )
    se = paths.std(axis=0) / math.sqrt(400)
    assert np.all(np.abs(paths.mean(axis=0) - alpha) < 4 * se + 1e-9)


def test_svm_reproducible():
    a = simulate_svm(50, 0.0, 0.9, 0.02, RngStream(7, 3))
    b = simulate_svm(50, 0.0, 0.9, 0.02, RngStream(7, 3))
    np.testing.assert_array_equal(a[1], b[1])


def test_svm_stationarity_error():
    with pytest.raises(ValueError, match="beta"):
        simulate_svm(10, 0.0, 1.0, 0.02, RngStream(8))
    with pytest.raises(ValueError):
        simulate_svm(10, 0.0, 0.5, -0.02, RngStream(8))


def test_svm_cost_counters_tick():
    from mlabc.costs import CostCounters

    model = StochasticVolatilityModel(25)
    counters = CostCounters()
    model.draw_initial(10, RngStream(9), counters)
    # params (3 per particle) + latent path + observation record
    assert counters.model_simulations == 10 * 3 + 10 * 25 + 10 * 25


def test_default_series_shape_and_determinism():
    series = default_svm_series()
    assert series.shape == (533,)
    assert series.mean() == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_array_equal(series, default_svm_series())


# -- returns ingestion --------------------------------------------------------


def test_returns_constant_prices(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("Close\n" + "\n".join(["100.0"] * 5) + "\n")
    returns = load_returns_csv(path)
    np.testing.assert_allclose(returns, 0.0, atol=1e-12)


def test_returns_two_prices(tmp_path):
    path = tmp_path / "prices.csv"
    p0 = 50.0
    path.write_text(f"Close\n{p0}\n{p0 * math.exp(0.01)}\n")
    returns = load_returns_csv(path)
    assert returns.shape == (1,)
    assert returns[0] == pytest.approx(0.0, abs=1e-12)  # mean-corrected


def test_returns_mean_corrected(tmp_path):
    path = tmp_path / "prices.csv"
    gen = np.random.default_rng(11)
    prices = 100.0 * np.exp(np.cumsum(gen.normal(0, 0.01, 200)))
    path.write_text("Close\n" + "\n".join(str(p) for p in prices) + "\n")
    assert load_returns_csv(path).mean() == pytest.approx(0.0, abs=1e-12)


def test_returns_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_returns_csv(tmp_path / "missing.csv")
    bad_col = tmp_path / "bad_col.csv"
    bad_col.write_text("Open\n1\n2\n")
    with pytest.raises(ValueError, match="column"):
        load_returns_csv(bad_col)
    bad_cell = tmp_path / "bad_cell.csv"
    bad_cell.write_text("Close\n1.0\noops\n")
    with pytest.raises(ValueError, match="non-numeric"):
        load_returns_csv(bad_cell)
    short = tmp_path / "short.csv"
    short.write_text("Close\n1.0\n")
    with pytest.raises(ValueError, match="at least 2"):
        load_returns_csv(short)


def test_returns_custom_column(tmp_path):
    path = tmp_path / "prices.csv"
    path.write_text("Adj,Close\n1.0,100\n2.0,110\n")
    returns = load_returns_csv(path, column_name="Adj")
    assert returns.shape == (1,)


# -- the ABC approximation approaches the exact posterior ----------------------


def test_abc_rejection_approaches_kalman_limit():
    # small-tolerance rejection sample of the extended target vs the exact
    # filtered mean; variances scaled so the rejection stays feasible
    s2 = 0.04
    _, data = simulate_lgssm(2, s2, s2, RngStream(21))
    model = LinearGaussianSsm(2, s2, s2, data)
    schedule = make_schedule(0.01, 2, 1)
    target = AbcTarget(data, model, schedule)
    system = init_level0(target, 1500, RngStream(22), patience=10**9)
    draws = system.theta[:, -1]
    se = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - kalman_posterior_mean(model, 2)) < 3 * se
