"""The ABC target ladder: discrepancy kernel, level weights and tolerance schedules.

A level-``l`` target is proportional to ``K_eps_l(y, u) * f(u | theta) * pi(theta)``
on the extended space of (pseudo-data, latents).  The kernel is the product of
per-coordinate inverse-quadratic factors, so consecutive-level weight ratios
reduce to kernel ratios and never require evaluating ``f`` or ``pi`` -- which is
what makes the ladder usable for models with intractable likelihoods.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate


class UnsupportedModelError(TypeError):
    """The model does not expose the pointwise densities an operation needs."""


def log_kernel(y, u, eps: float):
    """Log of the product discrepancy kernel at tolerance ``eps``.

    ``y`` and ``u`` must share their trailing dimension; the product runs over
    that axis, so a matrix ``u`` of stacked pseudo-data rows yields one value
    per row.  Computed in log space: with 25+ coordinates the linear-space
    product underflows.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    if y.shape[-1] != u.shape[-1]:
        raise ValueError(
            f"dimension mismatch: data has {y.shape[-1]} coordinates, "
            f"pseudo-data has {u.shape[-1]}"
        )
    if eps <= 0:
        raise ValueError(f"tolerance must be > 0, got {eps}")
    z = (y - u) / eps
    return -np.log1p(z * z).sum(axis=-1)


def kernel_eval(y, u, eps: float) -> float:
    """Kernel value in (0, 1]; equals 1 exactly when ``u == y``."""
    return float(np.exp(log_kernel(y, u, eps)))


@dataclass(frozen=True)
class ToleranceSchedule:
    """Decreasing tolerances ``eps_0 > ... > eps_L > 0``.

    ``base_c`` and ``ratio_m`` record the geometric generator
    ``eps_l = base_c * ratio_m**(-l)`` when the schedule was built that way;
    directly constructed schedules carry ``ratio_m = 0``.
    """

    base_c: float
    ratio_m: int
    top_level: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) != self.top_level + 1:
            raise ValueError("schedule needs top_level + 1 tolerance values")
        if np.any(values <= 0):
            raise ValueError("tolerances must be strictly positive")
        if np.any(np.diff(values) > 0):
            raise ValueError("tolerances must be non-increasing")

    @staticmethod
    def from_values(values) -> "ToleranceSchedule":
        """Wrap an explicit tolerance list (non-increasing; equal values allowed)."""
        values = np.asarray(values, dtype=float)
        return ToleranceSchedule(float(values[0]), 0, len(values) - 1, values)

    def __len__(self) -> int:
        return len(self.values)


def make_schedule(base_c: float, ratio_m: int, top_level: int) -> ToleranceSchedule:
    """Geometric schedule ``eps_l = base_c * ratio_m**(-l)`` for ``l = 0..top_level``."""
    if base_c <= 0:
        raise ValueError(f"base_c must be > 0, got {base_c}")
    if int(ratio_m) != ratio_m or ratio_m < 2:
        raise ValueError(f"ratio_m must be an integer >= 2, got {ratio_m}")
    if top_level < 1:
        raise ValueError(f"top_level must be >= 1, got {top_level}")
    values = base_c * float(ratio_m) ** -np.arange(top_level + 1)
    return ToleranceSchedule(float(base_c), int(ratio_m), int(top_level), values)


@dataclass
class ParticleState:
    """One point of the extended space: pseudo-data plus the latent block.

    ``latent_theta`` is laid out by the owning model (latent states, plus any
    static parameters riding along).
    """

    pseudo_data_u: np.ndarray
    latent_theta: np.ndarray


@dataclass
class AbcTarget:
    """Observed data, the generative model handle and the tolerance ladder.

    The model supplies prior/likelihood simulation (and pointwise factor
    evaluation where tractable); the target owns the schedule defining the
    per-level kernels.
    """

    data_y: np.ndarray
    model: object
    schedule: ToleranceSchedule

    def __post_init__(self):
        self.data_y = np.asarray(self.data_y, dtype=float)
        if self.data_y.ndim != 1:
            raise ValueError("data_y must be a flat vector")

    @property
    def n_coords(self) -> int:
        return len(self.data_y)

    def log_kernel_at(self, level: int, u) -> np.ndarray:
        if not 0 <= level <= self.schedule.top_level:
            raise IndexError(f"level {level} outside 0..{self.schedule.top_level}")
        return log_kernel(self.data_y, u, self.schedule.values[level])


def log_weight_G(target: AbcTarget, level: int, state) -> float:
    """Log level weight: kernel at ``eps_{level+1}`` minus kernel at ``eps_level``.

    The prior and likelihood factors of consecutive levels cancel exactly, so
    they are never evaluated.  ``state`` may be a ParticleState or a bare
    pseudo-data vector.
    """
    u = state.pseudo_data_u if hasattr(state, "pseudo_data_u") else state
    return float(log_weight_G_many(target, level, np.atleast_2d(u))[0])


def log_weight_G_many(target: AbcTarget, level: int, u: np.ndarray) -> np.ndarray:
    """Vectorized ``log_weight_G`` over rows of stacked pseudo-data."""
    top = target.schedule.top_level
    if not 0 <= level <= top - 1:
        raise IndexError(f"level weight G_{level} needs level in 0..{top - 1}")
    eps_now = target.schedule.values[level]
    eps_next = target.schedule.values[level + 1]
    return log_kernel(target.data_y, u, eps_next) - log_kernel(target.data_y, u, eps_now)


# -- quadrature over small tractable targets ---------------------------------
#
# Confined to one pseudo-data coordinate and one latent coordinate: the grid
# cost grows exponentially in dimension, and the verification studies that
# need normalizing-constant ratios are all one-dimensional.


def _require_quadrature_model(model):
    if not (hasattr(model, "quad_rect") and hasattr(model, "log_joint_factors")):
        raise UnsupportedModelError(
            f"{type(model).__name__} exposes no pointwise densities; "
            "quadrature needs quad_rect() and log_joint_factors()"
        )


def _grid_log_joint(target: AbcTarget, grid: int):
    _require_quadrature_model(target.model)
    u_lo, u_hi, th_lo, th_hi = target.model.quad_rect()
    u = np.linspace(u_lo, u_hi, grid)
    th = np.linspace(th_lo, th_hi, grid)
    uu, tt = np.meshgrid(u, th, indexing="ij")
    return u, th, uu, target.model.log_joint_factors(uu, tt)


def z_value_quadrature(target: AbcTarget, level: int, grid: int = 2048) -> float:
    """Normalizing constant of level ``level`` by trapezoid tensor quadrature."""
    if not 0 <= level <= target.schedule.top_level:
        raise IndexError(f"level {level} outside 0..{target.schedule.top_level}")
    u, th, uu, log_fp = _grid_log_joint(target, grid)
    eps = target.schedule.values[level]
    y = float(target.data_y[0])
    vals = np.exp(log_fp - np.log1p(((y - uu) / eps) ** 2))
    return float(integrate.trapezoid(integrate.trapezoid(vals, th, axis=1), u))


def z_ratio_quadrature(target: AbcTarget, level: int, grid: int = 2048) -> float:
    """Ratio of consecutive normalizing constants ``Z_{l-1} / Z_l`` for ``l >= 1``."""
    if not 1 <= level <= target.schedule.top_level:
        raise IndexError(f"z-ratio needs level in 1..{target.schedule.top_level}")
    return z_value_quadrature(target, level - 1, grid) / z_value_quadrature(
        target, level, grid
    )


def posterior_expectation_quadrature(
    target: AbcTarget, level: int, phi_grid, grid: int = 2048
) -> float:
    """Level-``level`` expectation of ``phi_grid(u, theta)`` by tensor quadrature."""
    if not 0 <= level <= target.schedule.top_level:
        raise IndexError(f"level {level} outside 0..{target.schedule.top_level}")
    u, th, uu, log_fp = _grid_log_joint(target, grid)
    tt = np.meshgrid(u, th, indexing="ij")[1]
    eps = target.schedule.values[level]
    y = float(target.data_y[0])
    dens = np.exp(log_fp - np.log1p(((y - uu) / eps) ** 2))
    num = integrate.trapezoid(
        integrate.trapezoid(phi_grid(uu, tt) * dens, th, axis=1), u
    )
    den = integrate.trapezoid(integrate.trapezoid(dens, th, axis=1), u)
    return float(num / den)
