"""Multilevel sequential Monte Carlo for ABC posteriors.

The package builds a ladder of ABC targets indexed by a decreasing tolerance
schedule, estimates expectations with a telescoped multilevel estimator whose
per-level sample sizes come from a cost-optimal allocation, and ships a
benchmark harness that compares the multilevel sampler against a cost-matched
plain SMC sampler on two state-space models.
"""

from mlabc.abc_core import (
    AbcTarget,
    ParticleState,
    ToleranceSchedule,
    kernel_eval,
    log_weight_G,
    make_schedule,
)
from mlabc.allocation import (
    AllocationPlan,
    RateTriple,
    allocate_samples,
    choose_top_level,
    mse_decompose,
    worst_case_plan,
)
from mlabc.kernels import MutationKernel
from mlabc.rng import DistSpec, RngStream, log_density, sample, sample_stable
from mlabc.smc import (
    MlsmcEstimate,
    ParticleSystem,
    init_level0,
    match_baseline_size,
    resample_to,
    run_mlsmc,
    run_smc_baseline,
)

__all__ = [
    "AbcTarget",
    "AllocationPlan",
    "DistSpec",
    "MlsmcEstimate",
    "MutationKernel",
    "ParticleState",
    "ParticleSystem",
    "RateTriple",
    "RngStream",
    "ToleranceSchedule",
    "allocate_samples",
    "choose_top_level",
    "init_level0",
    "kernel_eval",
    "log_density",
    "log_weight_G",
    "make_schedule",
    "match_baseline_size",
    "mse_decompose",
    "resample_to",
    "run_mlsmc",
    "run_smc_baseline",
    "sample",
    "sample_stable",
    "worst_case_plan",
]

__version__ = "0.1.0"
