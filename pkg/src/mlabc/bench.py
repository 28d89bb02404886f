"""Benchmark orchestration: experiment configs, cost-matched comparison runs, CSV I/O.

A benchmark sweeps accuracy targets; at each target it runs the multilevel
sampler over the configured replicates, sizes the constant-population baseline
so its predicted cost matches the realized multilevel mean cost, runs the
baseline, and emits one CSV row per run.  The CSV body is deterministic for a
fixed config and seed: wall-clock timings go to a sidecar file so the main
file stays byte-stable.
"""

from __future__ import annotations

import configparser
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from mlabc.abc_core import AbcTarget, ToleranceSchedule, make_schedule
from mlabc.allocation import AllocationPlan, RateTriple, allocate_samples
from mlabc.kernels import MutationKernel
from mlabc.models import (
    LinearGaussianSsm,
    StochasticVolatilityModel,
    default_svm_series,
    load_returns_csv,
    simulate_lgssm,
)
from mlabc.rng import PARTICLE_BLOCK, RngStream
from mlabc.smc import match_baseline_size, run_mlsmc, run_smc_baseline

# Stream-id layout under the experiment seed: low ids are reserved singletons,
# run streams use slot * 2**32 + replicate (the particle-block convention).
_DATA_STREAM = 1
_REFERENCE_STREAM = 2
_FIRST_RUN_SLOT = 4

DEFAULT_EPS_TARGETS = (0.4, 0.2, 0.1, 0.05, 0.025, 0.0125)

BENCHMARK_COLUMNS = (
    "method",
    "model",
    "n",
    "epsilon_target",
    "replicate_index",
    "seed",
    "estimate",
    "exact_reference",
    "squared_error",
    "cost_units",
)


@dataclass
class ExperimentConfig:
    """Everything one benchmark needs; field names double as config-file keys.

    ``n`` and ``eps_base`` default per model when left unset: horizon 10 with
    coarsest tolerance 2 for the Gaussian model, the bundled 533-point series
    with coarsest tolerance 64 for the volatility model (whose 533-coordinate
    kernel product needs a far looser entry level to initialize).
    """

    model: str = "lgssm"
    n: int | None = None
    eps_base: float | None = None
    eps_ratio: int = 2
    levels: int = 5
    epsilon_targets: tuple = DEFAULT_EPS_TARGETS
    replicates: int = 10
    alpha: float = 1.0
    beta: float = 4.0
    zeta: float = 1.0
    kernel_kind: str = "mh_single_site"
    param_update: str = "none"
    step_alpha: float = 0.1
    step_beta: float = 0.1
    step_log_sigma2w: float = 0.5
    sweeps_per_level: int = 1
    sweep_mode: str = "fixed"
    resampling: str = "multinomial"
    sigma2_v: float = 1.0
    sigma2_w: float = 1.0
    seed: int = 20170
    data_path: str | None = None
    data_column: str = "Close"
    output_dir: str = "results"
    workers: int = 0
    reference_levels: int = 7

    def __post_init__(self):
        if self.model not in ("lgssm", "svm"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.n is None:
            self.n = 10 if self.model == "lgssm" else 533
        if self.eps_base is None:
            self.eps_base = 2.0 if self.model == "lgssm" else 64.0
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        self.epsilon_targets = tuple(float(e) for e in self.epsilon_targets)
        if any(e <= 0 for e in self.epsilon_targets):
            raise ValueError("epsilon targets must all be > 0")
        if self.model == "svm" and self.param_update == "none":
            self.param_update = "random_walk"

    @property
    def rates(self) -> RateTriple:
        return RateTriple(self.alpha, self.beta, self.zeta)

    def kernel(self) -> MutationKernel:
        return MutationKernel(
            kind=self.kernel_kind,
            param_update=self.param_update,
            step_alpha=self.step_alpha,
            step_beta=self.step_beta,
            step_log_sigma2w=self.step_log_sigma2w,
        )

    def schedule(self, levels: int | None = None) -> ToleranceSchedule:
        return make_schedule(self.eps_base, self.eps_ratio, levels or self.levels)


def config_from_file(path: str, **overrides) -> ExperimentConfig:
    """Read the INI-style experiment manifest; keyword overrides win.

    Sections group related keys ([experiment], [schedule], [rates], [kernel],
    [data]); key names are exactly the ExperimentConfig field names, so any
    key may live in any section.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path!r} not found or unreadable")
    raw: dict = {}
    for section in parser.sections():
        raw.update(parser.items(section))
    kwargs = {}
    for key, value in raw.items():
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ValueError(f"unknown config key {key!r} in {path}")
        kwargs[key] = _parse_config_value(key, value)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kwargs)


def _parse_config_value(key: str, value: str):
    if key == "epsilon_targets":
        return tuple(float(tok) for tok in value.replace(",", " ").split())
    if key in ("data_path", "data_column", "output_dir", "model", "kernel_kind",
               "param_update", "sweep_mode", "resampling"):
        return value
    if key in ("n", "eps_ratio", "levels", "replicates", "sweeps_per_level",
               "seed", "workers", "reference_levels"):
        return int(value)
    return float(value)


@dataclass
class BenchmarkRecord:
    """One run's outcome; squared_error is exactly (estimate - reference)^2."""

    method: str
    model: str
    n: int
    epsilon_target: float
    replicate_index: int
    seed: int
    estimate: float
    exact_reference: float
    squared_error: float
    cost_units: float
    wall_ms: float = 0.0

    @staticmethod
    def build(method, model, n, eps, replicate, seed, estimate, reference,
              cost_units, wall_ms=0.0) -> "BenchmarkRecord":
        return BenchmarkRecord(
            method=method,
            model=model,
            n=n,
            epsilon_target=eps,
            replicate_index=replicate,
            seed=seed,
            estimate=estimate,
            exact_reference=reference,
            squared_error=(estimate - reference) ** 2,
            cost_units=cost_units,
            wall_ms=wall_ms,
        )


def phi_last_latent(state) -> float:
    """The benchmark functional: the final latent coordinate."""
    return float(state.latent_theta[-1])


def build_model_and_data(config: ExperimentConfig):
    """Instantiate the configured model with its observation record."""
    if config.model == "lgssm":
        if config.data_path:
            data = _load_series_csv(config.data_path)
            n = len(data) - 1
        else:
            n = config.n
            _, data = simulate_lgssm(
                n, config.sigma2_v, config.sigma2_w,
                RngStream(config.seed, _DATA_STREAM),
            )
        return LinearGaussianSsm(n, config.sigma2_v, config.sigma2_w, data)
    if config.data_path:
        data = load_returns_csv(config.data_path, config.data_column)
    else:
        data = default_svm_series(config.n)
    return StochasticVolatilityModel(len(data), data)


def _load_series_csv(path: str) -> np.ndarray:
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "v" not in reader.fieldnames:
            raise ValueError(f"series file {path!r} needs a 'v' column")
        return np.array([float(row["v"]) for row in reader])


def exact_reference_value(config: ExperimentConfig, model) -> tuple[float, dict]:
    """Ground truth for the benchmark functional, plus provenance metadata.

    The linear Gaussian model has an exact filter; the volatility model's
    reference reruns the multilevel sampler on a deeper ladder with a tighter
    accuracy target, and the metadata records that run's stream so the
    protocol is reproducible.
    """
    if config.model == "lgssm":
        from mlabc.models import kalman_posterior_mean

        return kalman_posterior_mean(model, model.n), {"reference": "kalman_filter"}
    schedule = config.schedule(config.reference_levels)
    eps_ref = min(config.epsilon_targets) / 2.0
    plan = allocate_samples(eps_ref, schedule, config.rates)
    stream = RngStream(config.seed, _REFERENCE_STREAM)
    est = run_mlsmc(
        AbcTarget(model.data, model, schedule),
        phi_last_latent,
        plan,
        config.kernel(),
        config.sweeps_per_level,
        stream,
        resampling=config.resampling,
        sweep_mode=config.sweep_mode,
    )
    meta = {
        "reference": "mlsmc",
        "reference_levels": str(config.reference_levels),
        "reference_accuracy": repr(eps_ref),
        "reference_seed": f"{stream.seed}:{stream.stream_id}",
        "reference_cost_units": repr(est.total_cost_units),
    }
    return est.value, meta


def _run_slot(eps_idx: int, method_idx: int) -> int:
    return _FIRST_RUN_SLOT + eps_idx * 2 + method_idx


def _mlsmc_job(payload):
    cfg_dict, eps_idx, replicate = payload
    config = ExperimentConfig(**cfg_dict)
    model = build_model_and_data(config)
    schedule = config.schedule()
    target = AbcTarget(model.data, model, schedule)
    plan = allocate_samples(config.epsilon_targets[eps_idx], schedule, config.rates)
    stream = RngStream(config.seed, _run_slot(eps_idx, 0) * PARTICLE_BLOCK + replicate)
    start = time.perf_counter()
    est = run_mlsmc(
        target, phi_last_latent, plan, config.kernel(),
        config.sweeps_per_level, stream,
        resampling=config.resampling, sweep_mode=config.sweep_mode,
    )
    wall_ms = 1000.0 * (time.perf_counter() - start)
    return (eps_idx, replicate, est.value, est.total_cost_units,
            est.level_cost_units, stream.stream_id, wall_ms)


def _baseline_job(payload):
    cfg_dict, eps_idx, replicate, n_fixed = payload
    config = ExperimentConfig(**cfg_dict)
    model = build_model_and_data(config)
    schedule = config.schedule()
    target = AbcTarget(model.data, model, schedule)
    stream = RngStream(config.seed, _run_slot(eps_idx, 1) * PARTICLE_BLOCK + replicate)
    start = time.perf_counter()
    est = run_smc_baseline(
        target, phi_last_latent, schedule, n_fixed, config.kernel(),
        config.sweeps_per_level, stream, resampling=config.resampling,
    )
    wall_ms = 1000.0 * (time.perf_counter() - start)
    return (eps_idx, replicate, est.value, est.total_cost_units,
            stream.stream_id, wall_ms)


def baseline_unit_costs(plan: AllocationPlan, realized_level_costs, config) -> list:
    """Per-particle ladder cost for the baseline, calibrated on realized counters.

    Entry 0 is the realized initialization cost per particle; entries 1..L-1
    the realized per-particle stage costs of the multilevel run; the final
    level (which only the baseline executes) extrapolates the last stage by
    the kernel's tolerance-growth factor.
    """
    sizes = plan.sizes
    units = [realized_level_costs[0] / sizes[0]]
    units += [realized_level_costs[l] / sizes[l] for l in range(1, len(sizes))]
    values = plan.schedule.values
    eps_last, eps_top = values[-2], values[-1]
    if config.kernel_kind == "gibbs_rejection":
        growth = eps_last / eps_top
    elif config.sweep_mode == "inverse_eps":
        growth = math.ceil(1.0 / eps_top) / math.ceil(1.0 / eps_last)
    else:
        growth = 1.0
    units.append(units[-1] * growth)
    return units


def run_benchmark(config: ExperimentConfig):
    """Execute the full sweep; returns (records, metadata) in deterministic order."""
    model = build_model_and_data(config)
    config = replace(config, n=model.n)
    reference, meta = exact_reference_value(config, model)
    meta = {
        "model": config.model,
        "n": str(model.n),
        "seed": str(config.seed),
        "schedule": f"C={config.eps_base!r} M={config.eps_ratio} L={config.levels}",
        "kernel": f"{config.kernel_kind}/{config.param_update}",
        "sweeps": f"{config.sweeps_per_level}/{config.sweep_mode}",
        **meta,
    }
    cfg_dict = asdict(config)
    schedule = config.schedule()

    ml_jobs = [
        (cfg_dict, e, r)
        for e in range(len(config.epsilon_targets))
        for r in range(config.replicates)
    ]
    ml_results = _dispatch(_mlsmc_job, ml_jobs, config.workers)

    n_fixed_by_eps = {}
    for eps_idx in range(len(config.epsilon_targets)):
        rows = [res for res in ml_results if res[0] == eps_idx]
        mean_cost = float(np.mean([res[3] for res in rows]))
        level_costs = np.mean([res[4] for res in rows], axis=0)
        plan = allocate_samples(
            config.epsilon_targets[eps_idx], schedule, config.rates
        )
        units = baseline_unit_costs(plan, level_costs, config)
        n_fixed_by_eps[eps_idx] = match_baseline_size(
            mean_cost, schedule, config.zeta, config.sweeps_per_level,
            level_unit_costs=units,
        )

    smc_jobs = [
        (cfg_dict, e, r, n_fixed_by_eps[e])
        for e in range(len(config.epsilon_targets))
        for r in range(config.replicates)
    ]
    smc_results = _dispatch(_baseline_job, smc_jobs, config.workers)

    records = []
    for eps_idx, eps in enumerate(config.epsilon_targets):
        for replicate in range(config.replicates):
            for method, results in (("mlsmc", ml_results), ("smc", smc_results)):
                row = next(
                    res for res in results
                    if res[0] == eps_idx and res[1] == replicate
                )
                records.append(
                    BenchmarkRecord.build(
                        method=method,
                        model=config.model,
                        n=model.n,
                        eps=eps,
                        replicate=replicate,
                        seed=row[-2],
                        estimate=row[2],
                        reference=reference,
                        cost_units=row[3],
                        wall_ms=row[-1],
                    )
                )
    meta["n_fixed"] = " ".join(
        str(n_fixed_by_eps[e]) for e in range(len(config.epsilon_targets))
    )
    return records, meta


def _dispatch(fn, jobs, workers: int):
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers == 1 or len(jobs) == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def write_benchmark_csv(records, path, metadata=None) -> None:
    """Deterministic CSV: '#' metadata comments, fixed header, repr'd floats.

    Wall-clock timings are not part of the body; they land in a sidecar
    ``<name>_timing.csv`` next to the main file.
    """
    lines = [f"# {k} = {v}" for k, v in (metadata or {}).items()]
    lines.append(",".join(BENCHMARK_COLUMNS))
    for rec in records:
        lines.append(
            f"{rec.method},{rec.model},{rec.n},{rec.epsilon_target!r},"
            f"{rec.replicate_index},{rec.seed},{rec.estimate!r},"
            f"{rec.exact_reference!r},{rec.squared_error!r},{rec.cost_units!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    timing_path = _timing_path(path)
    with open(timing_path, "w", encoding="utf-8") as fh:
        fh.write("method,model,n,epsilon_target,replicate_index,wall_ms\n")
        for rec in records:
            fh.write(
                f"{rec.method},{rec.model},{rec.n},{rec.epsilon_target!r},"
                f"{rec.replicate_index},{rec.wall_ms!r}\n"
            )


def _timing_path(path: str) -> str:
    root, ext = os.path.splitext(path)
    return f"{root}_timing{ext or '.csv'}"


def load_benchmark_csv(path) -> list[BenchmarkRecord]:
    """Inverse of write_benchmark_csv for the main (deterministic) file."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                if tuple(header) != BENCHMARK_COLUMNS:
                    raise ValueError(f"unexpected header in {path}: {header}")
                continue
            tok = line.split(",")
            records.append(
                BenchmarkRecord(
                    method=tok[0],
                    model=tok[1],
                    n=int(tok[2]),
                    epsilon_target=float(tok[3]),
                    replicate_index=int(tok[4]),
                    seed=int(tok[5]),
                    estimate=float(tok[6]),
                    exact_reference=float(tok[7]),
                    squared_error=float(tok[8]),
                    cost_units=float(tok[9]),
                )
            )
    return records


def simulate_data_csv(config: ExperimentConfig, out_path: str) -> int:
    """Write a simulated observation record as (index, v) rows; returns length."""
    if config.model == "lgssm":
        _, data = simulate_lgssm(
            config.n, config.sigma2_v, config.sigma2_w,
            RngStream(config.seed, _DATA_STREAM),
        )
    else:
        data = default_svm_series(config.n)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("index,v\n")
        for i, v in enumerate(data):
            fh.write(f"{i},{float(v)!r}\n")
    return len(data)
