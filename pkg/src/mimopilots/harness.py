"""Experiment runner: sweeps, CDF tables, oracle comparison, CSV output.

A drop is one set of user locations; within a drop every allocator is
evaluated on identical channel realizations (common random numbers), so
allocator comparisons are paired. Drop d of a run derives all its randomness
from SeedSequence([seed, d, purpose]), which makes runs reproducible and
thread-count independent.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .allocators import ALLOCATORS, allocate_loc_aware, exhaustive_search
from .detection import estimate_sinr, spectral_efficiency
from .model import ConfigError, NetworkConfig, sample_users

CSV_HEADER = ("experiment", "allocator", "sweep_name", "sweep_value", "cell",
              "sum_se_bits_hz", "stderr", "drops", "trials", "seed", "wall_ms")

CDF_HEADER = ("allocator", "value_bits_hz", "cum_prob")

# purpose tags for per-drop substreams
_STREAM_USERS = 0
_STREAM_SINR = 1
_STREAM_ALLOC = 2  # + allocator position


@dataclass
class ExperimentSpec:
    """One experiment: a config, an optional sweep, and run sizes."""

    cfg: NetworkConfig = field(default_factory=NetworkConfig)
    name: str = "experiment"
    sweep: str | None = None               # "M" | "loc_err_var" | None
    values: tuple = ()
    allocators: tuple[str, ...] = ("loc_aware", "random")
    drops: int = 200
    trials: int = 100
    seed: int | None = None                # defaults to cfg.seed
    out: str | None = None
    threads: int = 1
    n_worst: int = 5

    def __post_init__(self):
        if self.sweep not in (None, "M", "loc_err_var"):
            raise ConfigError(f"unknown sweep axis {self.sweep!r}")
        if self.sweep is not None and not self.values:
            raise ConfigError("sweep requested but no sweep values given")
        unknown = [a for a in self.allocators if a not in ALLOCATORS]
        if unknown:
            raise ConfigError(f"unknown allocators {unknown}; "
                              f"valid: {sorted(ALLOCATORS)}")
        if not self.allocators:
            raise ConfigError("need at least one allocator")
        if self.drops < 1:
            raise ConfigError("drops must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.n_worst < 1:
            raise ConfigError("n_worst must be >= 1")

    @property
    def master_seed(self) -> int:
        return self.cfg.seed if self.seed is None else self.seed


@dataclass
class ResultRow:
    """One CSV row: an allocator's mean sum SE in one cell at one sweep point."""

    experiment: str
    allocator: str
    sweep_name: str
    sweep_value: float
    cell: int
    sum_se: float
    stderr: float
    drops: int
    trials: int
    seed: int
    wall_ms: int
    per_user_se: np.ndarray | None = None  # (N,) mean per-user SE, not serialized


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def _one_drop(cfg: NetworkConfig, allocators: tuple[str, ...], trials: int,
              seed: int, drop: int) -> dict[str, np.ndarray]:
    """Per-user SE of every allocator on one location drop (paired channels)."""
    users = sample_users(cfg, _rng(seed, drop, _STREAM_USERS))
    out = {}
    for pos, name in enumerate(allocators):
        plan = ALLOCATORS[name](cfg, users, _rng(seed, drop, _STREAM_ALLOC + pos))
        sinr = estimate_sinr(cfg, users, plan, trials, _rng(seed, drop, _STREAM_SINR))
        out[name] = spectral_efficiency(sinr, cfg.pilot_len, cfg.coherence_len)
    return out


def evaluate_drops(cfg: NetworkConfig, allocators: tuple[str, ...], drops: int,
                   trials: int, seed: int, threads: int = 1) -> dict[str, np.ndarray]:
    """Per-user SE arrays of shape (drops, L, N) for each allocator.

    Drops are independent work units; results land in preallocated slots,
    so the output is identical for any thread count.
    """
    results = {name: np.empty((drops, cfg.L, cfg.N)) for name in allocators}

    def work(d: int) -> None:
        drop_se = _one_drop(cfg, allocators, trials, seed, d)
        for name, se in drop_se.items():
            results[name][d] = se

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(drops)))
    else:
        for d in range(drops):
            work(d)
    return results


def bootstrap_stderr(values: np.ndarray, n_boot: int = 1000,
                     seed: int = 0) -> float:
    """Bootstrap standard error of the mean of `values` (resampled drops)."""
    values = np.asarray(values, dtype=float)
    rng = _rng(seed, 0xB00)
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    return float(np.std(values[idx].mean(axis=1)))


def _sweep_cfg(cfg: NetworkConfig, sweep: str | None, value) -> NetworkConfig:
    if sweep is None:
        return cfg
    if sweep == "M":
        return replace(cfg, M=int(value))
    return replace(cfg, loc_err_var=float(value))


def run_sweep(spec: ExperimentSpec, clock=time.perf_counter) -> list[ResultRow]:
    """Evaluate every (sweep value, allocator, cell) combination.

    Mean sum SE over drops with a 1000-resample bootstrap standard error;
    one row per cell, |values| * |allocators| * L rows in total.
    """
    seed = spec.master_seed
    values = spec.values if spec.sweep is not None else (None,)
    sweep_name = spec.sweep or "none"
    rows: list[ResultRow] = []
    for value in values:
        cfg_v = _sweep_cfg(spec.cfg, spec.sweep, value)
        t0 = clock()
        per_user = evaluate_drops(cfg_v, spec.allocators, spec.drops,
                                  spec.trials, seed, spec.threads)
        wall_ms = int(round((clock() - t0) * 1000.0))
        for name in spec.allocators:
            se = per_user[name]                      # (D, L, N)
            sums = se.sum(axis=2)                    # (D, L)
            for cell in range(cfg_v.L):
                rows.append(ResultRow(
                    experiment=spec.name, allocator=name, sweep_name=sweep_name,
                    sweep_value=(0.0 if value is None else float(value)),
                    cell=cell, sum_se=float(sums[:, cell].mean()),
                    stderr=bootstrap_stderr(sums[:, cell], seed=seed),
                    drops=spec.drops, trials=spec.trials, seed=seed,
                    wall_ms=wall_ms, per_user_se=se[:, cell, :].mean(axis=0)))
    return rows


def run_sum_se_sweep(spec: ExperimentSpec, clock=time.perf_counter) -> list[ResultRow]:
    """Sum-SE versus antenna count for each allocator."""
    if spec.sweep is None:
        spec = replace(spec, sweep="M", values=(spec.cfg.M,))
    if spec.sweep != "M":
        raise ConfigError("run_sum_se_sweep sweeps the antenna count")
    return run_sweep(spec, clock)


def run_locerr_sweep(spec: ExperimentSpec, clock=time.perf_counter) -> list[ResultRow]:
    """Sum-SE versus localization error variance.

    Requires the distance-dependent K model and the linear LOS-probability
    model, which the degradation story depends on.
    """
    if spec.sweep != "loc_err_var":
        raise ConfigError("run_locerr_sweep sweeps loc_err_var")
    if spec.cfg.k_model != "distance" or spec.cfg.los_model != "linear_prob":
        raise ConfigError(
            "localization-error sweep requires k_model='distance' and "
            "los_model='linear_prob'")
    return run_sweep(spec, clock)


def worst_user_sums(per_user_se: np.ndarray, n_worst: int, cell: int = 0) -> np.ndarray:
    """Per drop, the summed SE of the n weakest users in one cell."""
    se = per_user_se[:, cell, :]
    return np.sort(se, axis=1)[:, :n_worst].sum(axis=1)


def empirical_cdf(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sorted sample values with cumulative probabilities (1..n)/n."""
    v = np.sort(np.asarray(values, dtype=float))
    return v, np.arange(1, len(v) + 1) / len(v)


def run_worst_user_cdf(spec: ExperimentSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Empirical CDF of the worst-n-user sum SE in the center cell."""
    per_user = evaluate_drops(spec.cfg, spec.allocators, spec.drops,
                              spec.trials, spec.master_seed, spec.threads)
    out = {}
    for name in spec.allocators:
        sums = worst_user_sums(per_user[name], spec.n_worst)
        out[name] = empirical_cdf(sums)
    return out


@dataclass
class OracleCompareReport:
    """Sum-SE ratio of the location-aware plan to the exhaustive argmax."""

    ratios: np.ndarray
    mean: float
    min: float
    max: float
    drops: int
    searched_plans: int


def run_oracle_compare(spec: ExperimentSpec,
                       max_plans: int = 10 ** 6) -> OracleCompareReport:
    """Per drop: location-aware sum SE over the exhaustive-search optimum.

    Both sides are scored by the same fixed-seed evaluator (common random
    numbers), so the ratio is <= 1 by construction.
    """
    cfg = spec.cfg
    seed = spec.master_seed
    n_plans = (cfg.pilot_len ** cfg.N) ** cfg.L
    ratios = np.empty(spec.drops)

    def work(d: int) -> None:
        users = sample_users(cfg, _rng(seed, d, _STREAM_USERS))

        def evaluator(plan) -> float:
            sinr = estimate_sinr(cfg, users, plan, spec.trials,
                                 _rng(seed, d, _STREAM_SINR))
            se = spectral_efficiency(sinr, cfg.pilot_len, cfg.coherence_len)
            return float(se[0].sum())

        own = evaluator(allocate_loc_aware(cfg, users))
        _, best = exhaustive_search(cfg, users, evaluator, max_plans=max_plans)
        ratios[d] = own / best

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            list(pool.map(work, range(spec.drops)))
    else:
        for d in range(spec.drops):
            work(d)
    return OracleCompareReport(ratios=ratios, mean=float(ratios.mean()),
                               min=float(ratios.min()), max=float(ratios.max()),
                               drops=spec.drops, searched_plans=n_plans)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: list[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([_fmt(v) for v in (
                r.experiment, r.allocator, r.sweep_name, r.sweep_value, r.cell,
                r.sum_se, r.stderr, r.drops, r.trials, r.seed, r.wall_ms)])


def write_cdf_csv(tables: dict[str, tuple[np.ndarray, np.ndarray]], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CDF_HEADER)
        for name, (values, probs) in tables.items():
            for v, p in zip(values, probs):
                writer.writerow([name, _fmt(float(v)), _fmt(float(p))])


def load_spec(path, overrides: dict | None = None) -> ExperimentSpec:
    """Build an ExperimentSpec from a JSON file.

    The document holds NetworkConfig keys at the top level plus an optional
    "experiment" object with ExperimentSpec fields (sweep, values,
    allocators, drops, trials, seed, out, threads, n_worst, name).
    """
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid config JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config JSON must be an object")
    exp = data.pop("experiment", {})
    if not isinstance(exp, dict):
        raise ConfigError("'experiment' must be an object")
    cfg = NetworkConfig.from_dict(data)
    allowed = {"name", "sweep", "values", "allocators", "drops", "trials",
               "seed", "out", "threads", "n_worst"}
    unknown = sorted(set(exp) - allowed)
    if unknown:
        raise ConfigError(f"unknown experiment keys: {unknown}")
    if overrides:
        exp.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("values", "allocators"):
        if key in exp:
            exp[key] = tuple(exp[key])
    return ExperimentSpec(cfg=cfg, **exp)
