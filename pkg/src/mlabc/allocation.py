"""Cost-optimal multilevel planning: level count, per-level sample sizes, MSE.

Given bias/variance/cost exponents (alpha, beta, zeta) in the tolerance, the
planner picks the top level so the squared bias meets the accuracy target and
splits the variance budget across levels so total cost is minimized (the
classic Lagrange-multiplier allocation).  Sizes depend only on the level
structure and the rates: tolerances are normalized by the coarsest value, so a
schedule's absolute scale never inflates the sample sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mlabc.abc_core import ToleranceSchedule


class WrongRegimeError(ValueError):
    """Rate triple does not lie in the regime the requested plan covers."""


@dataclass(frozen=True)
class RateTriple:
    """Bias, increment-variance and per-sample-cost exponents in the tolerance."""

    alpha: float
    beta: float
    zeta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0 or self.zeta <= 0:
            raise ValueError(f"rates must all be > 0, got {self}")


@dataclass
class AllocationPlan:
    """Per-level sample sizes with the variance/cost the rate model predicts.

    ``sizes`` covers levels ``0..L-1`` by default: the multilevel sampler never
    simulates level L, the finest correction reuses the level L-1 population.
    The standalone coupled allocation over ``0..L`` (used by the planner's
    self-tests and the worst-case analysis) is produced by the
    ``include_top_level`` flag and visible through ``levels_covered``.
    """

    schedule: ToleranceSchedule
    sizes: list[int]
    k_l_constant: float
    predicted_variance: float
    predicted_cost_units: float
    regime: str = "standard"
    level_cost_units: list[float] = field(default_factory=list)
    cost_exponent: float | None = None

    def __post_init__(self):
        if any(s < 1 for s in self.sizes):
            raise ValueError("every level size must be >= 1")
        if any(a < b for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError("sizes must be non-increasing in the level")

    @property
    def levels_covered(self) -> int:
        return len(self.sizes)

    def to_csv(self) -> str:
        """Plan as a CSV table: level, eps, N, level_cost_units."""
        lines = ["level,eps,N,level_cost_units"]
        for lvl, (n, cost) in enumerate(zip(self.sizes, self.level_cost_units)):
            eps = float(self.schedule.values[lvl])
            lines.append(f"{lvl},{eps!r},{n},{float(cost)!r}")
        return "\n".join(lines) + "\n"


def _normalized(schedule: ToleranceSchedule) -> np.ndarray:
    # Scale-free tolerances: the rate model's constants are unknown, so the
    # coarsest tolerance serves as the unit.
    return schedule.values / schedule.values[0]


def choose_top_level(accuracy: float, schedule_generator: tuple, alpha: float) -> int:
    """Smallest L >= 1 with ``(C * M**-L)**alpha <= accuracy``."""
    if accuracy <= 0:
        raise ValueError(f"accuracy must be > 0, got {accuracy}")
    base_c, ratio_m = schedule_generator
    level = 1
    while (base_c * float(ratio_m) ** -level) ** alpha > accuracy:
        level += 1
    return level


def _build_plan(accuracy, schedule, rates, k_const, covered, regime):
    t = _normalized(schedule)[:covered]
    raw = accuracy**-2 * t ** ((rates.beta + rates.zeta) / 2.0) * k_const
    sizes = [max(1, math.ceil(x - 1e-12)) for x in raw]
    per_level = [float(n * tl**-rates.zeta) for n, tl in zip(sizes, t)]
    variance = float(np.sum(t**rates.beta / np.array(sizes)))
    return AllocationPlan(
        schedule=schedule,
        sizes=sizes,
        k_l_constant=float(k_const),
        predicted_variance=variance,
        predicted_cost_units=float(sum(per_level)),
        regime=regime,
        level_cost_units=per_level,
    )


def allocate_samples(
    accuracy: float,
    schedule: ToleranceSchedule,
    rates: RateTriple,
    include_top_level: bool = False,
) -> AllocationPlan:
    """Lagrange-optimal sizes ``N_l = ceil(accuracy**-2 * t_l**((beta+zeta)/2) * K)``.

    ``K`` sums ``t_l**((beta-zeta)/2)`` over the covered levels and ``t_l`` is
    the tolerance normalized by the coarsest value.  Ceil-then-floor-at-1
    rounding guarantees the variance target at bounded cost overshoot.
    """
    if accuracy <= 0:
        raise ValueError(f"accuracy must be > 0, got {accuracy}")
    covered = schedule.top_level + (1 if include_top_level else 0)
    t = _normalized(schedule)[:covered]
    k_const = float(np.sum(t ** ((rates.beta - rates.zeta) / 2.0)))
    return _build_plan(accuracy, schedule, rates, k_const, covered, "standard")


def worst_case_plan(
    accuracy: float,
    schedule: ToleranceSchedule,
    rates: RateTriple,
    include_top_level: bool = True,
) -> AllocationPlan:
    """Allocation for the unfavourable ``beta < zeta`` regime.

    The level-sum constant is replaced by the finest level's contribution
    alone, which keeps the variance on target while conceding a total-cost
    exponent of ``zeta/alpha + max(0, 2 - beta/alpha)``.  When the bias
    exponent is pushed to ``alpha = beta/2`` and the top level is chosen for
    the accuracy target, the finest level receives a single sample.  Covers
    levels ``0..L`` by default (the standalone coupled construction).
    """
    if rates.beta >= rates.zeta:
        raise WrongRegimeError(
            f"worst-case plan needs beta < zeta, got beta={rates.beta}, zeta={rates.zeta}"
        )
    if accuracy <= 0:
        raise ValueError(f"accuracy must be > 0, got {accuracy}")
    covered = schedule.top_level + (1 if include_top_level else 0)
    t = _normalized(schedule)[:covered]
    k_const = float(t[-1] ** ((rates.beta - rates.zeta) / 2.0))
    plan = _build_plan(accuracy, schedule, rates, k_const, covered, "worst_case")
    delta = max(0.0, 2.0 - rates.beta / rates.alpha)
    plan.cost_exponent = rates.zeta / rates.alpha + delta
    return plan


def mse_decompose(bias: float, level_variances, sizes) -> float:
    """Squared bias plus the per-level variance-over-size sum."""
    level_variances = list(level_variances)
    sizes = list(sizes)
    if len(level_variances) != len(sizes):
        raise ValueError("level_variances and sizes must have equal length")
    if any(s <= 0 for s in sizes):
        raise ValueError("sizes must all be >= 1")
    return float(bias**2 + sum(v / n for v, n in zip(level_variances, sizes)))
