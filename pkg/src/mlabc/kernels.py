"""Mutation kernels that leave each tolerance level's target invariant.

Two kinds are provided.  ``mh_single_site`` proposes a fresh (observation,
latent) pair at one site from the model dynamics and accepts with the product
of the kernel-factor ratio and the forward-transition ratio; everything else
cancels, so the observation density is never evaluated -- which is what lets
the same kernel drive the intractable volatility model.  ``gibbs_rejection``
draws the site's full conditional exactly by rejection against the transition
density's supremum and is available whenever that supremum is finite.

Static-parameter blocks for the volatility model are random-walk moves whose
acceptance involves only the priors and the latent-path transition densities.
All acceptance arithmetic is in log space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mlabc.abc_core import UnsupportedModelError
from mlabc.costs import CostCounters

# A single full-conditional draw stalling past this many rejection rounds
# indicates a misconfigured tolerance, not bad luck.
_MAX_REJECTION_ROUNDS = 10**7


@dataclass
class MutationKernel:
    """Kernel configuration: kind, optional parameter block, step scales."""

    kind: str = "mh_single_site"
    param_update: str = "none"
    step_alpha: float = 0.1
    step_beta: float = 0.1
    step_log_sigma2w: float = 0.5

    def __post_init__(self):
        if self.kind not in ("mh_single_site", "gibbs_rejection"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.param_update not in ("none", "random_walk"):
            raise ValueError(f"unknown param_update {self.param_update!r}")


def _site_log_kernel(y_i, v, eps):
    z = (y_i - v) / eps
    return -np.log1p(z * z)


def _require_site_dynamics(model):
    if not hasattr(model, "sample_site_latent"):
        raise UnsupportedModelError(
            f"{type(model).__name__} exposes no per-site dynamics to mutate"
        )


def _accept_mask(gen, log_prob):
    # P(E > -log_prob) = min(1, exp(log_prob)) for E ~ Exp(1); avoids log(0).
    return gen.exponential(size=np.shape(log_prob)) > -log_prob


def _mh_site(model, y, u, w, params, i, eps, stream, counters):
    """One Metropolis step at site ``i`` for every row; mutates in place."""
    count, sites = u.shape
    w_prev = w[:, i - 1] if i > 0 else None
    w_new = model.sample_site_latent(i, w_prev, params, stream, (count,))
    counters.model_simulations += count
    v_new = model.sample_site_obs(w_new, params, stream, counters)
    log_acc = _site_log_kernel(y[i], v_new, eps) - _site_log_kernel(y[i], u[:, i], eps)
    counters.kernel_evals += 2 * count
    if i < sites - 1:
        log_acc = (
            log_acc
            + model.log_trans(w[:, i + 1], w_new, params)
            - model.log_trans(w[:, i + 1], w[:, i], params)
        )
        counters.kernel_evals += 2 * count
    counters.mcmc_proposals += count
    accept = _accept_mask(stream.gen, log_acc)
    w[accept, i] = w_new[accept]
    u[accept, i] = v_new[accept]
    return accept


def _gibbs_site(model, y, u, w, params, i, eps, stream, counters):
    """Exact full-conditional draw at site ``i`` by rejection; mutates in place.

    Proposes from the model dynamics and accepts with the kernel factor times
    the forward-transition factor over its supremum (absent at the last site).
    Stubborn rows get geometrically widening proposal batches per round; only
    draws up to and including each row's first acceptance are examined, so the
    result and the accounting match the one-at-a-time rejection sampler
    exactly.  Returns per-row proposal counts.
    """
    count, sites = u.shape
    last_site = i == sites - 1
    if not last_site and not hasattr(model, "log_trans_sup"):
        raise UnsupportedModelError(
            f"{type(model).__name__} has no finite transition-density supremum; "
            "rejection sampling of the full conditional is unavailable"
        )
    active = np.ones(count, dtype=bool)
    proposals = np.zeros(count, dtype=np.int64)
    width = 1
    rounds = 0
    while active.any():
        rounds += 1
        if rounds > _MAX_REJECTION_ROUNDS:
            raise RuntimeError(
                f"full-conditional rejection at site {i} stalled after "
                f"{rounds - 1} rounds; the tolerance is likely far too small"
            )
        idx = np.flatnonzero(active)
        sub = params[idx] if params is not None else None
        sub_wide = None if sub is None else sub[:, None, :]
        w_prev = w[idx, i - 1] if i > 0 else None
        w_new = model.sample_site_latent(i, w_prev, sub, stream, (len(idx), width))
        v_new = model.sample_site_obs(w_new, sub_wide, stream, None)
        log_p = _site_log_kernel(y[i], v_new, eps)
        if not last_site:
            sup = model.log_trans_sup(sub)
            sup = np.broadcast_to(np.asarray(sup, dtype=float), idx.shape)[:, None]
            log_p = log_p + model.log_trans(
                w[idx, i + 1][:, None], w_new, sub_wide
            ) - sup
        accept = _accept_mask(stream.gen, log_p)
        hit = accept.any(axis=1)
        first = np.argmax(accept, axis=1)
        examined = int(np.where(hit, first + 1, width).sum())
        proposals[idx] += np.where(hit, first + 1, width)
        counters.model_simulations += 2 * examined
        counters.kernel_evals += (1 if last_site else 2) * examined
        counters.mcmc_proposals += examined
        rows = np.flatnonzero(hit)
        got = idx[rows]
        w[got, i] = w_new[rows, first[rows]]
        u[got, i] = v_new[rows, first[rows]]
        active[got] = False
        width = min(2 * width, 4096)
    return proposals


def _param_blocks(model, w, params, kernel: MutationKernel, stream, counters):
    """Random-walk moves on (alpha, beta, log sigma2_w); mutates ``params``.

    Acceptance uses the priors and the latent-path transition densities only:
    the pseudo-data sites do not involve the static parameters, so neither the
    discrepancy kernel nor the observation law enters.
    """
    count, sites = w.shape

    def log_target(p):
        counters.kernel_evals += count * (sites + 3)
        return model.log_path_prior(w, p) + model.log_param_prior(p)

    current = log_target(params)

    # alpha: symmetric Gaussian step
    prop = params.copy()
    prop[:, 0] += kernel.step_alpha * stream.gen.standard_normal(count)
    cand = log_target(prop)
    counters.mcmc_proposals += count
    accept = _accept_mask(stream.gen, cand - current)
    params[accept] = prop[accept]
    current[accept] = cand[accept]

    # beta: symmetric Gaussian step, hard-rejected outside (-1, 1)
    prop = params.copy()
    prop[:, 1] += kernel.step_beta * stream.gen.standard_normal(count)
    valid = np.abs(prop[:, 1]) < 1.0
    cand = np.full(count, -np.inf)
    if valid.any():
        cand[valid] = (
            model.log_path_prior(w[valid], prop[valid])
            + model.log_param_prior(prop[valid])
        )
        counters.kernel_evals += int(valid.sum()) * (sites + 3)
    counters.mcmc_proposals += count
    accept = _accept_mask(stream.gen, cand - current)
    params[accept] = prop[accept]
    current[accept] = cand[accept]

    # sigma2_w: Gaussian step in log space, with the change-of-variable term
    prop = params.copy()
    prop[:, 2] = params[:, 2] * np.exp(
        kernel.step_log_sigma2w * stream.gen.standard_normal(count)
    )
    cand = log_target(prop)
    counters.mcmc_proposals += count
    jacobian = np.log(prop[:, 2]) - np.log(params[:, 2])
    accept = _accept_mask(stream.gen, cand - current + jacobian)
    params[accept] = prop[accept]


def apply_sweeps(
    kernel: MutationKernel,
    model,
    eps: float,
    u: np.ndarray,
    w: np.ndarray,
    params,
    stream,
    counters: CostCounters,
    sweeps: int = 1,
) -> int:
    """Run ``sweeps`` full passes over all sites (plus any parameter blocks).

    Mutates the population arrays in place and returns the total number of
    site proposals made.
    """
    _require_site_dynamics(model)
    y = model.data
    total = 0
    for _ in range(sweeps):
        if kernel.param_update == "random_walk":
            if params is None:
                raise ValueError("param_update requested but the state has no params")
            _param_blocks(model, w, params, kernel, stream, counters)
        for i in range(u.shape[1]):
            if kernel.kind == "gibbs_rejection":
                total += int(_gibbs_site(model, y, u, w, params, i, eps, stream, counters).sum())
            else:
                _mh_site(model, y, u, w, params, i, eps, stream, counters)
                total += u.shape[0]
    return total


# -- single-state surface ------------------------------------------------------


def _state_arrays(state):
    u = np.atleast_2d(state.pseudo_data_u)
    w = np.atleast_2d(state.latent_theta)
    params = getattr(state, "params", None)
    if params is not None:
        params = np.atleast_2d(params)
    return u, w, params


def mh_single_site(model, i, state, eps_l, stream, counters=None):
    """Metropolis move of (v_i, w_i) on one state; returns (state, accepted)."""
    u, w, params = _state_arrays(state)
    counters = counters if counters is not None else CostCounters()
    accept = _mh_site(model, model.data, u, w, params, i, eps_l, stream, counters)
    return state, bool(accept[0])


def gibbs_site_update(model, i, state, eps_l, stream, counters=None):
    """Exact full-conditional draw of (v_i, w_i); returns ((v_i, w_i), attempts)."""
    u, w, params = _state_arrays(state)
    counters = counters if counters is not None else CostCounters()
    attempts = _gibbs_site(model, model.data, u, w, params, i, eps_l, stream, counters)
    return (float(u[0, i]), float(w[0, i])), int(attempts[0])


def gibbs_sweep(model, state, eps_l, stream, counters=None):
    """Sequential full-conditional updates over every site; returns (state, attempts)."""
    u, w, params = _state_arrays(state)
    counters = counters if counters is not None else CostCounters()
    total = 0
    for i in range(u.shape[1]):
        total += int(
            _gibbs_site(model, model.data, u, w, params, i, eps_l, stream, counters)[0]
        )
    return state, total


def svm_param_update(model, state, eps_l, stream, kernel=None, counters=None):
    """Random-walk block update of (alpha, beta, sigma2_w) on one state.

    ``eps_l`` is accepted for signature uniformity but never enters: kernel
    factors cancel exactly for parameter moves.
    """
    del eps_l
    if getattr(state, "params", None) is None:
        raise ValueError("state carries no static parameters")
    kernel = kernel if kernel is not None else MutationKernel(param_update="random_walk")
    counters = counters if counters is not None else CostCounters()
    w = np.atleast_2d(state.latent_theta)
    params = np.atleast_2d(state.params)
    _param_blocks(model, w, params, kernel, stream, counters)
    return state
