"""Benchmark state-space models, their exact oracles, and a tractable 1-D toy.

Both state-space models expose the same duck-typed surface the samplers drive:

- ``num_sites`` and ``data`` define the pseudo-data layout,
- ``draw_initial(count, stream, counters)`` simulates prior latents (plus any
  static parameters) and pseudo-data,
- ``sample_site_latent`` / ``sample_site_obs`` / ``log_trans`` / ``log_trans_sup``
  supply the per-site dynamics the mutation kernels need.

The linear Gaussian model keeps its sites indexed ``0..n`` and the volatility
model ``1..n`` exactly as written; internally both map onto site slots
``0..num_sites-1`` so the kernels never re-index.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from mlabc.abc_core import ParticleState
from mlabc.rng import (
    DistSpec,
    RngStream,
    invgamma_logpdf,
    normal_logpdf,
    sample_many,
    sample_stable_standard,
    truncnorm_logpdf,
)


@dataclass
class SsmState(ParticleState):
    """A state-space particle: latent path, pseudo-observations, static params.

    ``latent_w`` / ``pseudo_v`` alias the generic (theta, u) blocks under the
    state-space models' naming; ``params`` carries (alpha, beta, sigma2_w) for
    the volatility model and stays ``None`` for the linear Gaussian one.
    """

    params: np.ndarray | None = None

    @property
    def latent_w(self) -> np.ndarray:
        return self.latent_theta

    @property
    def pseudo_v(self) -> np.ndarray:
        return self.pseudo_data_u


@dataclass
class LinearGaussianSsm:
    """Random-walk latents observed in Gaussian noise, data indexed 0..n.

    ``n = 0`` (a single site) is accepted so the kernel test-rigs can exercise
    degenerate horizons; the benchmark paths use ``n >= 1``.
    """

    n: int
    sigma2_v: float = 1.0
    sigma2_w: float = 1.0
    data_v: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"horizon n must be >= 0, got {self.n}")
        if self.sigma2_v <= 0 or self.sigma2_w <= 0:
            raise ValueError("observation and state variances must be > 0")
        if self.data_v is not None:
            self.data_v = np.asarray(self.data_v, dtype=float)
            if self.data_v.shape != (self.n + 1,):
                raise ValueError(
                    f"data_v must have length n+1 = {self.n + 1}, got {self.data_v.shape}"
                )
            if not np.all(np.isfinite(self.data_v)):
                raise ValueError("data_v must be finite")

    # -- simulation ----------------------------------------------------------

    @property
    def num_sites(self) -> int:
        return self.n + 1

    @property
    def data(self) -> np.ndarray:
        if self.data_v is None:
            raise ValueError("model carries no observation record")
        return self.data_v

    def sample_latent_paths(self, count, stream, counters=None):
        z = stream.gen.standard_normal((count, self.num_sites))
        if counters is not None:
            counters.model_simulations += count * self.num_sites
        return math.sqrt(self.sigma2_w) * np.cumsum(z, axis=1)

    def sample_observations(self, w, stream, counters=None):
        z = stream.gen.standard_normal(w.shape)
        if counters is not None:
            counters.model_simulations += w.size
        return w + math.sqrt(self.sigma2_v) * z

    def draw_initial(self, count, stream, counters=None):
        w = self.sample_latent_paths(count, stream, counters)
        v = self.sample_observations(w, stream, counters)
        return w, None, v

    # -- per-site dynamics (kernel interface) --------------------------------

    def site_conditional(self, i, w_prev, params=None):
        """Mean and sd of site ``i`` of the latent chain given its predecessor."""
        sd = math.sqrt(self.sigma2_w)
        if i == 0:
            return 0.0, sd
        return w_prev, sd

    def sample_site_latent(self, i, w_prev, params, stream, shape):
        mean, sd = self.site_conditional(i, w_prev, params)
        draws = stream.gen.standard_normal(shape)
        if np.ndim(mean) == 1 and len(shape) == 2:
            return np.asarray(mean)[:, None] + sd * draws
        return mean + sd * draws

    def sample_site_obs(self, w_i, params, stream, counters=None):
        z = stream.gen.standard_normal(np.shape(w_i))
        if counters is not None:
            counters.model_simulations += np.size(w_i)
        return w_i + math.sqrt(self.sigma2_v) * z

    def log_trans(self, w_to, w_from, params=None):
        return normal_logpdf(w_to, w_from, self.sigma2_w)

    def log_trans_sup(self, params=None):
        """Log of the transition density's supremum (the rejection bound)."""
        return -0.5 * math.log(2.0 * math.pi * self.sigma2_w)

    def log_obs(self, v, w):
        return normal_logpdf(v, w, self.sigma2_v)

    def log_init(self, w0, params=None):
        return normal_logpdf(w0, 0.0, self.sigma2_w)

    # -- exact oracle ---------------------------------------------------------

    def kalman_filter(self):
        """Filtered means and variances of w_i given v_{0:i}, i = 0..n."""
        v = self.data
        means = np.empty(self.num_sites)
        variances = np.empty(self.num_sites)
        m, p = 0.0, self.sigma2_w
        for i in range(self.num_sites):
            if i > 0:
                p = p + self.sigma2_w
            gain = p / (p + self.sigma2_v)
            m = m + gain * (v[i] - m)
            p = (1.0 - gain) * p
            means[i] = m
            variances[i] = p
        return means, variances

    def kalman_smoothed_means(self):
        """Smoothed means of w_i given the full record v_{0:n} (RTS recursion)."""
        means, variances = self.kalman_filter()
        smoothed = np.empty_like(means)
        smoothed[-1] = means[-1]
        for i in range(self.num_sites - 2, -1, -1):
            gain = variances[i] / (variances[i] + self.sigma2_w)
            smoothed[i] = means[i] + gain * (smoothed[i + 1] - means[i])
        return smoothed


def simulate_lgssm(n, sigma2_v, sigma2_w, stream):
    """Simulate one latent path and observation record of horizon ``n``."""
    model = LinearGaussianSsm(n, sigma2_v, sigma2_w)
    w = model.sample_latent_paths(1, stream)[0]
    v = model.sample_observations(w[None, :], stream)[0]
    return w, v


def kalman_posterior_mean(model: LinearGaussianSsm, i: int) -> float:
    """Exact filtered mean of w_i given v_{0:i}."""
    if not 0 <= i <= model.n:
        raise IndexError(f"site {i} outside 0..{model.n}")
    return float(model.kalman_filter()[0][i])


# -- stochastic volatility -----------------------------------------------------


@dataclass
class StochasticVolatilityModel:
    """Heavy-tailed returns driven by a latent AR(1) log-volatility, data 1..n.

    Observations are alpha-stable with stability 1.75 and full positive
    skewness; the latent chain is mean-reverting with ``|beta| < 1`` enforced
    everywhere.  Static parameters (alpha, beta, sigma2_w) ride along with each
    particle as a 3-column block under independent priors: alpha ~ N(0, 100),
    beta ~ N(0, 10) truncated to (-1, 1), sigma2_w ~ inverse-gamma(2, 1/100).
    The observation density is never evaluated anywhere -- only sampled.
    """

    n: int
    data_v: np.ndarray | None = None
    stability: float = 1.75
    stable_skewness: float = 1.0

    PRIOR_ALPHA = DistSpec.normal(0.0, 100.0)
    PRIOR_BETA = DistSpec.truncated_normal(0.0, 10.0, -1.0, 1.0)
    PRIOR_SIGMA2W = DistSpec.inverse_gamma(2.0, 0.01)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"horizon n must be >= 1, got {self.n}")
        if self.data_v is not None:
            self.data_v = np.asarray(self.data_v, dtype=float)
            if self.data_v.shape != (self.n,):
                raise ValueError(
                    f"data_v must have length n = {self.n}, got {self.data_v.shape}"
                )

    @property
    def num_sites(self) -> int:
        return self.n

    @property
    def data(self) -> np.ndarray:
        if self.data_v is None:
            raise ValueError("model carries no observation record")
        return self.data_v

    def sample_prior_params(self, count, stream, counters=None):
        alpha = sample_many(self.PRIOR_ALPHA, count, stream)
        beta = sample_many(self.PRIOR_BETA, count, stream)
        beta = np.clip(beta, -1.0 + 1e-12, 1.0 - 1e-12)
        s2w = sample_many(self.PRIOR_SIGMA2W, count, stream)
        if counters is not None:
            counters.model_simulations += 3 * count
        return np.column_stack([alpha, beta, s2w])

    def sample_latent_paths(self, params, stream, counters=None):
        alpha, beta, s2w = params[:, 0], params[:, 1], params[:, 2]
        count = len(params)
        w = np.empty((count, self.n))
        z = stream.gen.standard_normal((count, self.n))
        w[:, 0] = alpha + np.sqrt(s2w / (1.0 - beta**2)) * z[:, 0]
        sd = np.sqrt(s2w)
        for i in range(1, self.n):
            w[:, i] = alpha + beta * (w[:, i - 1] - alpha) + sd * z[:, i]
        if counters is not None:
            counters.model_simulations += count * self.n
        return w

    def sample_observations(self, w, params, stream, counters=None):
        z = sample_stable_standard(
            self.stability, self.stable_skewness, stream, size=w.shape
        )
        if counters is not None:
            counters.model_simulations += w.size
        return np.exp(w / 2.0) * z

    def draw_initial(self, count, stream, counters=None):
        params = self.sample_prior_params(count, stream, counters)
        w = self.sample_latent_paths(params, stream, counters)
        v = self.sample_observations(w, params, stream, counters)
        return w, params, v

    # -- per-site dynamics (kernel interface) --------------------------------

    def site_conditional(self, i, w_prev, params):
        alpha, beta, s2w = params[..., 0], params[..., 1], params[..., 2]
        if i == 0:
            return alpha, np.sqrt(s2w / (1.0 - beta**2))
        return alpha + beta * (w_prev - alpha), np.sqrt(s2w)

    def sample_site_latent(self, i, w_prev, params, stream, shape):
        mean, sd = self.site_conditional(i, w_prev, params)
        draws = stream.gen.standard_normal(shape)
        if np.ndim(mean) == 1 and len(shape) == 2:
            return np.asarray(mean)[:, None] + np.asarray(sd)[:, None] * draws
        return mean + sd * draws

    def sample_site_obs(self, w_i, params, stream, counters=None):
        z = sample_stable_standard(
            self.stability, self.stable_skewness, stream, size=np.shape(w_i)
        )
        if counters is not None:
            counters.model_simulations += np.size(w_i)
        return np.exp(np.asarray(w_i) / 2.0) * z

    def log_trans(self, w_to, w_from, params):
        alpha, beta, s2w = params[..., 0], params[..., 1], params[..., 2]
        return normal_logpdf(w_to, alpha + beta * (w_from - alpha), s2w)

    def log_trans_sup(self, params):
        return -0.5 * np.log(2.0 * math.pi * params[..., 2])

    def log_init(self, w0, params):
        alpha, beta, s2w = params[..., 0], params[..., 1], params[..., 2]
        return normal_logpdf(w0, alpha, s2w / (1.0 - beta**2))

    def log_path_prior(self, w, params):
        """Log density of the latent path given the static parameters."""
        out = self.log_init(w[:, 0], params)
        for i in range(1, self.n):
            out = out + self.log_trans(w[:, i], w[:, i - 1], params)
        return out

    def log_param_prior(self, params):
        alpha, beta, s2w = params[..., 0], params[..., 1], params[..., 2]
        return (
            normal_logpdf(alpha, 0.0, 100.0)
            + truncnorm_logpdf(beta, 0.0, 10.0, -1.0, 1.0)
            + invgamma_logpdf(s2w, 2.0, 0.01)
        )


def simulate_svm(n, alpha, beta, sigma2_w, stream):
    """Simulate one latent log-volatility path and return record of length ``n``."""
    if abs(beta) >= 1.0:
        raise ValueError(f"|beta| < 1 required for stationarity, got beta={beta}")
    if sigma2_w <= 0:
        raise ValueError(f"sigma2_w must be > 0, got {sigma2_w}")
    model = StochasticVolatilityModel(n)
    params = np.array([[alpha, beta, sigma2_w]], dtype=float)
    w = model.sample_latent_paths(params, stream)
    v = model.sample_observations(w, params, stream)
    return w[0], v[0]


# Parameters behind the bundled synthetic return series: a calm log-volatility
# regime producing percent-return scales comparable to a daily equity index.
_SERIES_SEED = 5331
_SERIES_PARAMS = (0.0, 0.95, 0.02)


def default_svm_series(n: int = 533) -> np.ndarray:
    """The bundled synthetic mean-corrected return series (deterministic)."""
    _, v = simulate_svm(n, *_SERIES_PARAMS, RngStream(_SERIES_SEED))
    return v - v.mean()


def load_returns_csv(path, column_name: str = "Close") -> np.ndarray:
    """Mean-corrected percent log-returns from a CSV price series.

    Computes ``100 * (log p_i - log p_{i-1})`` down the named column and
    subtracts the sample mean.  The file needs a header row and at least two
    numeric prices.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column_name not in reader.fieldnames:
            raise ValueError(f"column {column_name!r} not found in {path}")
        prices = []
        for row in reader:
            cell = row[column_name]
            try:
                prices.append(float(cell))
            except (TypeError, ValueError):
                raise ValueError(
                    f"non-numeric cell {cell!r} in column {column_name!r}"
                ) from None
    if len(prices) < 2:
        raise ValueError(f"need at least 2 prices, found {len(prices)}")
    returns = 100.0 * np.diff(np.log(np.asarray(prices)))
    return returns - returns.mean()


# -- compact tractable toy ----------------------------------------------------


@dataclass
class CompactToy1D:
    """A 1-D compact-support target with tractable factors for quadrature studies.

    The latent sits uniformly on ``support``; pseudo-data is a truncated normal
    around it on the same interval.  The observation lies outside the support,
    keeping the squared discrepancy bounded away from zero over the whole
    domain (the regime in which the level-weight deviation shrinks
    quadratically in the tolerance).
    """

    obs_y: float = 2.0
    spread: float = 0.5
    support: tuple = (-1.0, 1.0)

    @property
    def num_sites(self) -> int:
        return 1

    @property
    def data(self) -> np.ndarray:
        return np.array([self.obs_y])

    def draw_initial(self, count, stream, counters=None):
        lo, hi = self.support
        th = stream.gen.uniform(lo, hi, size=count)
        if counters is not None:
            counters.model_simulations += count
        u = self.sample_site_obs(th, None, stream, counters)
        return th[:, None], None, u[:, None]

    def quad_rect(self):
        lo, hi = self.support
        return lo, hi, lo, hi

    def log_joint_factors(self, u, th):
        lo, hi = self.support
        return truncnorm_logpdf(u, th, self.spread**2, lo, hi) - math.log(hi - lo)

    # single-site mutation support: fresh prior proposals; all latent/pseudo
    # factors cancel in the acceptance, leaving the kernel ratio alone
    def sample_site_latent(self, i, w_prev, params, stream, shape):
        lo, hi = self.support
        return stream.gen.uniform(lo, hi, size=shape)

    def sample_site_obs(self, th, params, stream, counters=None):
        lo, hi = self.support
        flat = np.ravel(np.asarray(th, dtype=float))
        out = np.empty(flat.shape)
        filled = np.zeros(flat.shape, dtype=bool)
        while not filled.all():
            idx = np.flatnonzero(~filled)
            draws = flat[idx] + self.spread * stream.gen.standard_normal(len(idx))
            ok = (draws >= lo) & (draws <= hi)
            out[idx[ok]] = draws[ok]
            filled[idx[ok]] = True
        if counters is not None:
            counters.model_simulations += flat.size
        return out.reshape(np.shape(th))
