"""Mutation kernels: exactness, invariance, boundary sites, parameter blocks."""

import math

import numpy as np
import pytest
from scipy import integrate

from mlabc.abc_core import AbcTarget, UnsupportedModelError, make_schedule
from mlabc.costs import CostCounters
from mlabc.kernels import (
    MutationKernel,
    apply_sweeps,
    gibbs_site_update,
    gibbs_sweep,
    mh_single_site,
    svm_param_update,
)
from mlabc.models import (
    CompactToy1D,
    LinearGaussianSsm,
    SsmState,
    StochasticVolatilityModel,
    simulate_lgssm,
)
from mlabc.rng import RngStream
from mlabc.smc import init_level0


def _single_site_model(y0=0.4, s2v=1.0, s2w=1.0):
    return LinearGaussianSsm(0, s2v, s2w, np.array([y0]))


def _fresh_state(model, stream):
    w, params, u = model.draw_initial(1, stream)
    return SsmState(pseudo_data_u=u[0], latent_theta=w[0],
                    params=None if params is None else params[0])


def test_gibbs_saturates_at_huge_tolerance():
    # at the last site with a huge tolerance every factor is ~1, so the very
    # first proposal is accepted
    model = _single_site_model()
    stream = RngStream(1)
    counts = []
    for k in range(200):
        state = _fresh_state(model, stream)
        _, attempts = gibbs_site_update(model, 0, state, 1e9, stream)
        counts.append(attempts)
    assert np.mean(counts) < 1.01


def test_gibbs_mutates_state_in_place():
    model = _single_site_model()
    state = _fresh_state(model, RngStream(2))
    before = (float(state.pseudo_v[0]), float(state.latent_w[0]))
    (v_new, w_new), attempts = gibbs_site_update(model, 0, state, 0.5, RngStream(3))
    assert attempts >= 1
    assert (float(state.pseudo_v[0]), float(state.latent_w[0])) == (v_new, w_new)
    assert (v_new, w_new) != before


def test_gibbs_distribution_matches_quadrature_cdf():
    # a single-site model's full conditional is the whole target: 1e5 exact
    # rejection draws vs the quadrature marginal CDFs
    y0, s2 = 0.4, 1.0
    model = _single_site_model(y0, s2, s2)
    eps = 0.5
    grid = np.linspace(-6, 6, 801)
    vv, ww = np.meshgrid(grid, grid, indexing="ij")
    dens = (
        1.0 / (1.0 + ((y0 - vv) / eps) ** 2)
        * np.exp(-0.5 * (vv - ww) ** 2 / s2)
        * np.exp(-0.5 * ww**2 / s2)
    )
    pdf_v = integrate.trapezoid(dens, grid, axis=1)
    pdf_w = integrate.trapezoid(dens, grid, axis=0)

    stream = RngStream(5)
    count = 10**5
    w0 = np.zeros((count, 1))
    u0 = np.zeros((count, 1))
    from mlabc.kernels import _gibbs_site

    _gibbs_site(model, model.data, u0, w0, None, 0, eps, stream, CostCounters())
    for draws, pdf in ((u0[:, 0], pdf_v), (w0[:, 0], pdf_w)):
        cdf = np.cumsum(pdf)
        cdf /= cdf[-1]
        emp = np.searchsorted(np.sort(draws), grid, side="right") / count
        assert np.max(np.abs(emp - cdf)) < 0.01


def test_gibbs_sweep_single_site_reduces_to_site_update():
    model = _single_site_model()
    state_a = _fresh_state(model, RngStream(6, 1))
    state_b = _fresh_state(model, RngStream(6, 1))
    _, total = gibbs_sweep(model, state_a, 0.5, RngStream(7))
    (_, attempts) = gibbs_site_update(model, 0, state_b, 0.5, RngStream(7))[1], 0
    assert total >= 1
    assert float(state_a.latent_w[0]) == float(state_b.latent_w[0])


def test_gibbs_sweep_counts_every_site():
    _, data = simulate_lgssm(6, 1.0, 1.0, RngStream(8))
    model = LinearGaussianSsm(6, 1.0, 1.0, data)
    state = _fresh_state(model, RngStream(9))
    _, total = gibbs_sweep(model, state, 2.0, RngStream(10))
    assert total >= model.num_sites


def test_gibbs_sweep_cost_linear_in_horizon():
    # warm states, fixed tolerance: doubling the horizon roughly doubles the
    # mean sweep cost
    _, data21 = simulate_lgssm(20, 1.0, 1.0, RngStream(11))
    eps = 0.25
    means = {}
    for n in (10, 20):
        model = LinearGaussianSsm(n, 1.0, 1.0, data21[: n + 1])
        w = np.tile(model.kalman_smoothed_means(), (300, 1))
        u = np.tile(model.data, (300, 1))
        from mlabc.kernels import _gibbs_site

        stream = RngStream(12)
        total = np.zeros(300, dtype=np.int64)
        for i in range(model.num_sites):
            total += _gibbs_site(model, model.data, u, w, None, i, eps, stream, CostCounters())
        means[n] = total.mean()
    assert means[20] / means[10] == pytest.approx(2.0, rel=0.25)


class _NoSupremumModel:
    # two sites but no finite transition-density supremum exposed
    num_sites = 2
    data = np.array([0.0, 0.0])

    def sample_site_latent(self, i, w_prev, params, stream, shape):
        return stream.gen.standard_normal(shape)

    def sample_site_obs(self, w_i, params, stream, counters=None):
        return np.asarray(w_i) + stream.gen.standard_normal(np.shape(w_i))


def test_gibbs_needs_transition_supremum_for_interior_sites():
    model = _NoSupremumModel()
    state = SsmState(pseudo_data_u=np.zeros(2), latent_theta=np.zeros(2))
    with pytest.raises(UnsupportedModelError):
        gibbs_site_update(model, 0, state, 0.5, RngStream(13))


def test_gibbs_on_single_site_compact_toy():
    # the toy's only site has no forward factor, so rejection needs no
    # supremum and draws the target exactly
    toy = CompactToy1D()
    state = SsmState(pseudo_data_u=np.array([0.5]), latent_theta=np.array([0.0]))
    (v_new, w_new), attempts = gibbs_site_update(toy, 0, state, 0.5, RngStream(13))
    assert attempts >= 1
    assert -1.0 <= v_new <= 1.0 and -1.0 <= w_new <= 1.0


# -- Metropolis single-site -----------------------------------------------------


def test_mh_accepts_everything_when_factors_saturate():
    # last site + huge tolerance: kernel ratio and forward factor are both 1
    model = _single_site_model()
    stream = RngStream(14)
    state = _fresh_state(model, stream)
    accepted = [mh_single_site(model, 0, state, 1e12, stream)[1] for _ in range(200)]
    assert all(accepted)


def test_mh_identity_proposal_ratio_is_one():
    # the acceptance exponent at an unchanged site is exactly zero
    _, data = simulate_lgssm(3, 1.0, 1.0, RngStream(15))
    model = LinearGaussianSsm(3, 1.0, 1.0, data)
    state = _fresh_state(model, RngStream(16))
    from mlabc.kernels import _site_log_kernel

    i = 1
    log_acc = (
        _site_log_kernel(data[i], state.pseudo_v[i], 0.5)
        - _site_log_kernel(data[i], state.pseudo_v[i], 0.5)
        + model.log_trans(state.latent_w[i + 1], state.latent_w[i], None)
        - model.log_trans(state.latent_w[i + 1], state.latent_w[i], None)
    )
    assert log_acc == 0.0


def test_mh_stationary_mean_matches_quadrature():
    # eta_l-distributed start (exact rejection), many kernel applications,
    # population mean of the latent stays at the quadrature value
    y0, s2, eps = 0.4, 1.0, 0.5
    model = _single_site_model(y0, s2, s2)
    target = AbcTarget(model.data, model, make_schedule(eps, 2, 1))
    system = init_level0(target, 2 * 10**4, RngStream(17))
    grid = np.linspace(-7, 7, 1201)
    vv, ww = np.meshgrid(grid, grid, indexing="ij")
    dens = (
        1.0 / (1.0 + ((y0 - vv) / eps) ** 2)
        * np.exp(-0.5 * (vv - ww) ** 2 / s2)
        * np.exp(-0.5 * ww**2 / s2)
    )
    mean_w = float(
        integrate.trapezoid(integrate.trapezoid(dens * ww, grid, axis=1), grid)
        / integrate.trapezoid(integrate.trapezoid(dens, grid, axis=1), grid)
    )
    stream = RngStream(18)
    counters = CostCounters()
    for _ in range(25):
        apply_sweeps(
            MutationKernel(), model, eps, system.u, system.theta, None,
            stream, counters, sweeps=1,
        )
    draws = system.theta[:, 0]
    se = draws.std() / math.sqrt(len(draws))
    assert abs(draws.mean() - mean_w) < 3 * se


def test_acceptance_log_space_finite_for_tiny_tolerances():
    _, data = simulate_lgssm(99, 1.0, 1.0, RngStream(19))
    model = LinearGaussianSsm(99, 1.0, 1.0, data)
    w = np.tile(model.kalman_smoothed_means(), (16, 1))
    u = np.tile(model.data, (16, 1))
    from mlabc.kernels import _site_log_kernel

    eps = 2.0**-20
    logk = _site_log_kernel(data[3], u[:, 3] + 100.0, eps)
    assert np.all(np.isfinite(logk))
    counters = CostCounters()
    apply_sweeps(
        MutationKernel(), model, eps, u, w, None, RngStream(20), counters, sweeps=1
    )
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(w))


# -- parameter blocks ------------------------------------------------------------


def _svm_state(model, stream):
    w, params, u = model.draw_initial(1, stream)
    return SsmState(pseudo_data_u=u[0], latent_theta=w[0], params=params[0])


def test_param_update_zero_steps_is_identity():
    model = StochasticVolatilityModel(8, np.zeros(8))
    state = _svm_state(model, RngStream(21))
    before = state.params.copy()
    kernel = MutationKernel(param_update="random_walk", step_alpha=0.0,
                            step_beta=0.0, step_log_sigma2w=0.0)
    svm_param_update(model, state, 0.5, RngStream(22), kernel=kernel)
    np.testing.assert_array_equal(state.params, before)


def test_param_update_beta_stays_in_open_interval():
    model = StochasticVolatilityModel(5, np.zeros(5))
    state = _svm_state(model, RngStream(23))
    state.params[1] = 0.995
    kernel = MutationKernel(param_update="random_walk", step_beta=0.5)
    stream = RngStream(24)
    for _ in range(500):
        svm_param_update(model, state, 0.5, stream, kernel=kernel)
        assert abs(state.params[1]) < 1.0


def test_param_update_recovers_alpha_prior():
    # one latent site, huge tolerance: the alpha-marginal of the target is its
    # prior; wide steps keep the walk mixing across the prior scale
    model = StochasticVolatilityModel(1, np.zeros(1))
    count = 3000
    stream = RngStream(25)
    w, params, u = model.draw_initial(count, stream)
    kernel = MutationKernel(param_update="random_walk", step_alpha=8.0,
                            step_beta=0.3, step_log_sigma2w=1.0)
    counters = CostCounters()
    from mlabc.kernels import _param_blocks

    for _ in range(40):
        _param_blocks(model, w, params, kernel, stream, counters)
        # refresh the latent site so the path factor cannot pin alpha
        from mlabc.kernels import _gibbs_site

        _gibbs_site(model, model.data, u, w, params, 0, 1e9, stream, counters)
    alphas = params[:, 0]
    se = alphas.std() / math.sqrt(count)
    assert abs(alphas.mean()) < 3 * se
    assert alphas.std() == pytest.approx(10.0, rel=0.15)


def test_param_update_requires_params():
    _, data = simulate_lgssm(3, 1.0, 1.0, RngStream(26))
    model = LinearGaussianSsm(3, 1.0, 1.0, data)
    state = _fresh_state(model, RngStream(27))
    with pytest.raises(ValueError, match="param"):
        svm_param_update(model, state, 0.5, RngStream(28))


def test_kernel_spec_validation():
    with pytest.raises(ValueError):
        MutationKernel(kind="other")
    with pytest.raises(ValueError):
        MutationKernel(param_update="other")


def test_gibbs_kernel_drives_volatility_model():
    # the rejection kernel needs only the transition supremum, which the
    # volatility model has per particle; observation densities never appear
    model = StochasticVolatilityModel(6, np.zeros(6))
    stream = RngStream(30)
    w, params, u = model.draw_initial(50, stream)
    counters = CostCounters()
    total = apply_sweeps(
        MutationKernel(kind="gibbs_rejection", param_update="random_walk"),
        model, 8.0, u, w, params, stream, counters, sweeps=2,
    )
    assert total >= 2 * 6 * 50
    assert np.all(np.isfinite(w)) and np.all(np.isfinite(u))
    assert np.all(np.abs(params[:, 1]) < 1.0)
