"""The multilevel SMC sampler and its cost-matched plain-SMC baseline.

A run initializes an i.i.d. population at the coarsest tolerance by rejection,
then repeatedly reweights with the consecutive-level kernel ratio, resamples
down to the planned size, and mutates with a level-invariant kernel.  The
returned estimate telescopes the per-level self-normalized increments, each
evaluated on the pre-resampling population of its level.  The baseline runs
the same recursion at constant population size through one extra level and
keeps only the finest-level average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mlabc.abc_core import AbcTarget, log_kernel, log_weight_G_many
from mlabc.allocation import AllocationPlan
from mlabc.costs import CostCounters
from mlabc.kernels import MutationKernel, apply_sweeps
from mlabc.models import SsmState
from mlabc.rng import RngStream


class DegenerateWeightsError(RuntimeError):
    """Every particle carries zero weight; the population cannot be resampled."""


class InitializationInfeasibleError(RuntimeError):
    """Rejection initialization is accepting too rarely to ever fill the population."""


# Candidate batches are sized so one batch never exceeds ~4M floats per array.
_BATCH_FLOAT_BUDGET = 2**22


class ParticleSystem:
    """An equally-weighted particle population at one ladder level.

    Storage is array-of-rows (``u``: pseudo-data, ``theta``: latent block,
    ``params``: optional static parameters); ``particles`` materializes
    row-view states for per-particle access.  Cost counters accumulate over
    the whole run the system belongs to and never decrease.
    """

    def __init__(self, level, u, theta, params=None, counters=None):
        if len(u) == 0:
            raise ValueError("a particle system must be non-empty")
        if len(u) != len(theta):
            raise ValueError("pseudo-data and latent blocks disagree in length")
        self.level = level
        self.u = u
        self.theta = theta
        self.params = params
        self.counters = counters if counters is not None else CostCounters()

    def __len__(self) -> int:
        return len(self.u)

    @property
    def particles(self) -> list:
        par = self.params
        return [
            SsmState(
                pseudo_data_u=self.u[i],
                latent_theta=self.theta[i],
                params=None if par is None else par[i],
            )
            for i in range(len(self.u))
        ]

    def phi_values(self, phi) -> np.ndarray:
        return np.array([phi(p) for p in self.particles], dtype=float)


@dataclass
class MlsmcEstimate:
    """A telescoped estimate: its value is exactly the sum of its increments.

    ``level_increments`` holds the coarsest-level self-normalized term followed
    by one bracket per ladder step; ``level_cost_units`` the matching per-stage
    cost breakdown (index 0 covers initialization plus the first reweighting).
    Baseline runs reuse the shape with a single increment and no plan.
    """

    value: float
    level_increments: list[float]
    plan: AllocationPlan | None
    total_cost_units: float
    seed: int
    level_cost_units: list[float] = field(default_factory=list)
    counters: CostCounters = field(default_factory=CostCounters)


def init_level0(
    target: AbcTarget,
    n0: int,
    stream: RngStream,
    acceptance_floor: float = 1e-6,
    patience: int = 10**7,
) -> ParticleSystem:
    """Exact i.i.d. population from the coarsest target by rejection.

    Candidates are prior/likelihood simulations accepted with probability equal
    to the kernel value at the coarsest tolerance (valid because the kernel is
    bounded by 1).  Counters record every attempt.  If after ``patience``
    attempts the acceptance rate sits below ``acceptance_floor`` the run is
    abandoned: no realistic budget would fill the population.
    """
    if n0 < 1:
        raise ValueError(f"population size must be >= 1, got {n0}")
    model = target.model
    eps0 = target.schedule.values[0]
    counters = CostCounters()
    cap = max(1024, _BATCH_FLOAT_BUDGET // max(1, model.num_sites))
    theta_rows, u_rows, param_rows = [], [], []
    accepted = 0
    attempts = 0
    while accepted < n0:
        if attempts == 0:
            batch = math.ceil(1.005 * n0) + 8  # near-exact when everything accepts
        else:
            rate = max(accepted / attempts, acceptance_floor)
            batch = math.ceil(1.2 * (n0 - accepted) / rate)
        batch = min(max(batch, 64), cap)
        theta, params, u = model.draw_initial(batch, stream, counters)
        logk = log_kernel(target.data_y, u, eps0)
        counters.kernel_evals += batch
        attempts += batch
        keep = stream.gen.exponential(size=batch) > -logk
        take = min(int(keep.sum()), n0 - accepted)
        if take > 0:
            idx = np.flatnonzero(keep)[:take]
            theta_rows.append(theta[idx])
            u_rows.append(u[idx])
            if params is not None:
                param_rows.append(params[idx])
            accepted += take
        if accepted < n0 and attempts >= patience:
            rate = accepted / attempts
            if rate < acceptance_floor:
                raise InitializationInfeasibleError(
                    f"level-0 acceptance rate {rate:.3e} is below the floor "
                    f"{acceptance_floor:.0e} after {attempts} attempts; "
                    f"increase the coarsest tolerance (eps_0 = {eps0!r})"
                )
    return ParticleSystem(
        level=0,
        u=np.concatenate(u_rows),
        theta=np.concatenate(theta_rows),
        params=np.concatenate(param_rows) if param_rows else None,
        counters=counters,
    )


def resample_to(
    system: ParticleSystem,
    log_weights,
    target_count: int,
    stream: RngStream,
    method: str = "multinomial",
) -> ParticleSystem:
    """Draw ``target_count`` particles with probabilities proportional to the weights.

    Multinomial by default (the scheme the error analysis assumes); systematic
    available behind the flag for practical variance reduction.  The returned
    system owns fresh copies, so later in-place mutation cannot alias siblings.
    """
    log_weights = np.asarray(log_weights, dtype=float)
    if len(log_weights) != len(system):
        raise ValueError(
            f"got {len(log_weights)} weights for {len(system)} particles"
        )
    if target_count < 1:
        raise ValueError(f"target_count must be >= 1, got {target_count}")
    top = log_weights.max()
    if top == -np.inf:
        raise DegenerateWeightsError("all resampling weights are zero")
    probs = np.exp(log_weights - top)
    probs /= probs.sum()
    if method == "multinomial":
        idx = stream.gen.choice(len(system), size=target_count, p=probs)
    elif method == "systematic":
        positions = (stream.gen.uniform() + np.arange(target_count)) / target_count
        idx = np.searchsorted(np.cumsum(probs), positions)
        idx = np.minimum(idx, len(system) - 1)
    else:
        raise ValueError(f"unknown resampling method {method!r}")
    return ParticleSystem(
        level=system.level,
        u=system.u[idx].copy(),
        theta=system.theta[idx].copy(),
        params=None if system.params is None else system.params[idx].copy(),
        counters=system.counters,
    )


def _self_normalized(phi_vals, log_g):
    top = log_g.max()
    if top == -np.inf:
        raise DegenerateWeightsError("all level weights are zero")
    wts = np.exp(log_g - top)
    return float(np.sum(wts * phi_vals) / np.sum(wts))


def _sweeps_at(sweeps_per_level: int, sweep_mode: str, eps: float) -> int:
    if sweep_mode == "fixed":
        return sweeps_per_level
    if sweep_mode == "inverse_eps":
        return sweeps_per_level * max(1, math.ceil(1.0 / eps))
    raise ValueError(f"unknown sweep_mode {sweep_mode!r}")


def _plan_sizes(plan: AllocationPlan) -> list[int]:
    top = plan.schedule.top_level
    if len(plan.sizes) == top:
        return plan.sizes
    if len(plan.sizes) == top + 1:
        # Coupled-allocation plan: the sampler only simulates levels 0..L-1.
        return plan.sizes[:top]
    raise ValueError(
        f"plan covers {len(plan.sizes)} levels but the schedule has top level {top}"
    )


def run_mlsmc(
    target: AbcTarget,
    phi,
    plan: AllocationPlan,
    kernel_suite: MutationKernel,
    sweeps_per_level: int,
    stream: RngStream,
    resampling: str = "multinomial",
    sweep_mode: str = "fixed",
) -> MlsmcEstimate:
    """One multilevel run: returns the telescoped estimate and its cost.

    Every increment is computed on the pre-resampling population of its level:
    the coarsest term is the self-normalized reweighted average, and each
    later bracket is the difference between the reweighted and plain averages
    on the mutated population of the previous level.  With a constant
    tolerance ladder all weights are 1 and every bracket vanishes exactly.
    """
    sizes = _plan_sizes(plan)
    top = plan.schedule.top_level
    system = init_level0(target, sizes[0], stream)
    counters = system.counters

    log_g = log_weight_G_many(target, 0, system.u)
    counters.kernel_evals += 2 * len(system)
    phi_vals = system.phi_values(phi)
    increments = [_self_normalized(phi_vals, log_g)]
    cost_marks = [counters.total()]

    for level in range(1, top):
        system = resample_to(system, log_g, sizes[level], stream, method=resampling)
        system.level = level
        eps = target.schedule.values[level]
        apply_sweeps(
            kernel_suite,
            target.model,
            eps,
            system.u,
            system.theta,
            system.params,
            stream,
            counters,
            sweeps=_sweeps_at(sweeps_per_level, sweep_mode, eps),
        )
        log_g = log_weight_G_many(target, level, system.u)
        counters.kernel_evals += 2 * len(system)
        phi_vals = system.phi_values(phi)
        increments.append(
            _self_normalized(phi_vals, log_g) - float(phi_vals.mean())
        )
        cost_marks.append(counters.total())

    level_costs = [cost_marks[0]] + [
        b - a for a, b in zip(cost_marks, cost_marks[1:])
    ]
    return MlsmcEstimate(
        value=float(sum(increments)),
        level_increments=increments,
        plan=plan,
        total_cost_units=float(counters.total()),
        seed=stream.seed,
        level_cost_units=[float(c) for c in level_costs],
        counters=counters,
    )


def run_smc_baseline(
    target: AbcTarget,
    phi,
    schedule,
    n_fixed: int,
    kernel_suite: MutationKernel,
    sweeps_per_level: int,
    stream: RngStream,
    resampling: str = "multinomial",
) -> MlsmcEstimate:
    """Plain SMC at constant population size through the full ladder.

    Runs one reweight-resample-mutate step past the multilevel sampler's last
    level, so the final population sits at the finest tolerance; the estimate
    is that population's plain average and every earlier population is
    discarded.  Costs are counted identically to the multilevel run.
    """
    if n_fixed < 1:
        raise ValueError(f"n_fixed must be >= 1, got {n_fixed}")
    top = schedule.top_level
    system = init_level0(target, n_fixed, stream)
    counters = system.counters
    cost_marks = [counters.total()]
    for level in range(1, top + 1):
        log_g = log_weight_G_many(target, level - 1, system.u)
        counters.kernel_evals += 2 * len(system)
        system = resample_to(system, log_g, n_fixed, stream, method=resampling)
        system.level = level
        eps = schedule.values[level]
        apply_sweeps(
            kernel_suite,
            target.model,
            eps,
            system.u,
            system.theta,
            system.params,
            stream,
            counters,
            sweeps=_sweeps_at(sweeps_per_level, sweep_mode="fixed", eps=eps),
        )
        cost_marks.append(counters.total())
    estimate = float(system.phi_values(phi).mean())
    level_costs = [cost_marks[0]] + [b - a for a, b in zip(cost_marks, cost_marks[1:])]
    return MlsmcEstimate(
        value=estimate,
        level_increments=[estimate],
        plan=None,
        total_cost_units=float(counters.total()),
        seed=stream.seed,
        level_cost_units=[float(c) for c in level_costs],
        counters=counters,
    )


def match_baseline_size(
    mlsmc_cost_units: float,
    schedule,
    zeta: float,
    sweeps_per_level: int = 1,
    level_unit_costs=None,
) -> int:
    """Largest constant population whose predicted ladder cost fits the budget.

    The default per-particle cost model charges ``t_l**-zeta`` units at each
    level of the normalized ladder (times the sweep count above level 0);
    callers holding realized per-particle costs can pass them directly to
    match measured counters instead of the rate model.
    """
    if mlsmc_cost_units <= 0:
        raise ValueError(f"mlsmc_cost_units must be > 0, got {mlsmc_cost_units}")
    if level_unit_costs is None:
        t = schedule.values / schedule.values[0]
        level_unit_costs = [t[0] ** -zeta] + [
            sweeps_per_level * t[l] ** -zeta for l in range(1, schedule.top_level + 1)
        ]
    per_particle = float(sum(level_unit_costs))
    return max(1, int(mlsmc_cost_units / per_particle))
