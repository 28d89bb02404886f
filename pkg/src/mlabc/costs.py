"""Cost accounting shared by samplers and kernels.

One cost unit is one model transition/observation simulation or one
kernel/density evaluation, whichever the operation performs; wall-clock time
is recorded separately by the harness.  Counters only ever increase.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class CostCounters:
    model_simulations: int = 0
    kernel_evals: int = 0
    mcmc_proposals: int = 0

    def total(self) -> int:
        return self.model_simulations + self.kernel_evals + self.mcmc_proposals

    def copy(self) -> "CostCounters":
        return CostCounters(
            self.model_simulations, self.kernel_evals, self.mcmc_proposals
        )

    def merge(self, other: "CostCounters") -> None:
        self.model_simulations += other.model_simulations
        self.kernel_evals += other.kernel_evals
        self.mcmc_proposals += other.mcmc_proposals
