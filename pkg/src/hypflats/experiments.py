"""Monte Carlo campaigns comparing simulated skeleton functionals with the analytic formulas."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .hgeom import ball_slice_volume, ball_volume
from .moments import asymptotic_covariance, covariance_matrix, covariance_scale, expectation, variance
from .sampler import ProcessParams, sample_distances, sample_realization, stream_rng
from .secondorder import KParams, empirical_k0, k_function, pair_correlation
from .skeleton import skeleton_functional

KINDS = ("moments", "clt-window", "clt-intensity", "multivariate", "kfunction", "ustat")
STATISTICAL = ("moments", "clt-window", "clt-intensity", "multivariate", "kfunction")
BOOTSTRAP_RESAMPLES = 200
BOOTSTRAP_STREAM = 2**40


@dataclass
class ExperimentConfig:
    kind: str
    d: int
    i: int | None = None
    t_grid: list = field(default_factory=lambda: [1.0])
    r_grid: list = field(default_factory=lambda: [2.0])
    replications: int = 1000
    seed: int = 0
    out: str | None = None
    threads: int | None = None
    r_window: float = 2.0
    r_values: list = field(default_factory=lambda: [0.5, 1.0, 1.5])
    ell: int = 2
    n_mc: int = 100_000

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.t_grid or not self.r_grid:
            raise ValueError("t_grid and r_grid must be non-empty")
        if self.replications <= 0:
            raise ValueError("replications must be positive")
        if self.kind in STATISTICAL and self.replications < 100:
            raise ValueError("statistical campaigns need at least 100 replications")
        if self.i is not None and not 0 <= self.i <= self.d - 1:
            raise ValueError("i must lie in [0, d-1]")
        self.t_grid = [float(t) for t in self.t_grid]
        self.r_grid = [float(r) for r in self.r_grid]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ResultRecord:
    config: dict
    cells: list
    wall_clock: float
    version: str = __version__


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("HYPFLATS_THREADS", "1"))
    return max(1, threads)


def _functional_rows(params: ProcessParams, which: tuple, stream_ids) -> np.ndarray:
    out = np.empty((len(stream_ids), len(which)))
    for row, sid in enumerate(stream_ids):
        if which == (params.d - 1,):
            # single-hyperplane terms only need the distances
            s = sample_distances(params, sid)
            out[row, 0] = math.fsum(np.atleast_1d(ball_slice_volume(params.d - 1, s, params.r)))
            continue
        real = sample_realization(params, sid)
        out[row] = [skeleton_functional(real, i) for i in which]
    return out


def simulate_functionals(params: ProcessParams, which, replications: int, threads: int | None = None) -> np.ndarray:
    """Matrix of F^{(i)} values, one row per stream id 0..replications-1, one column per i."""
    which = tuple(which)
    threads = resolve_threads(threads)
    ids = np.arange(replications)
    if threads == 1:
        return _functional_rows(params, which, ids)
    chunks = np.array_split(ids, threads * 4)
    with ProcessPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_functional_rows, [params] * len(chunks), [which] * len(chunks), chunks))
    return np.concatenate(parts)


def bootstrap(values: np.ndarray, statistic, seed: int, resamples: int = BOOTSTRAP_RESAMPLES) -> np.ndarray:
    """Bootstrap replicates of statistic(values) over rows."""
    rng = stream_rng(seed, BOOTSTRAP_STREAM)
    n = len(values)
    return np.array([statistic(values[rng.integers(0, n, n)]) for _ in range(resamples)])


def plugin_cumulants(x: np.ndarray) -> tuple[float, float]:
    """Sample skewness and excess kurtosis (the standardised third and fourth cumulants)."""
    z = x - x.mean()
    m2 = np.mean(z**2)
    return float(np.mean(z**3) / m2**1.5), float(np.mean(z**4) / m2**2 - 3.0)


def _cells(cfg: ExperimentConfig):
    for t in cfg.t_grid:
        for r in cfg.r_grid:
            yield t, r


def run_moment_campaign(cfg: ExperimentConfig) -> ResultRecord:
    """Sample means and covariances of all functionals against the closed forms."""
    start = time.perf_counter()
    which = tuple(range(cfg.d)) if cfg.i is None else (cfg.i,)
    cells = []
    for k, (t, r) in enumerate(_cells(cfg)):
        params = ProcessParams(cfg.d, r, t, cfg.seed)
        values = simulate_functionals(params, which, cfg.replications, cfg.threads)
        mean = values.mean(axis=0)
        se = values.std(axis=0, ddof=1) / math.sqrt(len(values))
        exact_mean = np.array([expectation(cfg.d, i, t, ball_volume(cfg.d, r)) for i in which])
        cov = np.atleast_2d(np.cov(values.T))
        boot = bootstrap(values, lambda v: np.atleast_2d(np.cov(v.T)), cfg.seed + k)
        cov_se = boot.std(axis=0, ddof=1)
        exact_cov = covariance_matrix(cfg.d, t, r)[np.ix_(which, which)]
        cells.append(
            {
                "t": t,
                "r": r,
                "i": list(which),
                "mean": mean.tolist(),
                "mean_se": se.tolist(),
                "mean_exact": exact_mean.tolist(),
                "mean_z": ((mean - exact_mean) / se).tolist(),
                "cov": cov.tolist(),
                "cov_se": cov_se.tolist(),
                "cov_exact": exact_cov.tolist(),
                "cov_z": ((cov - exact_cov) / cov_se).tolist(),
            }
        )
    return ResultRecord(asdict(cfg), cells, time.perf_counter() - start)


def clt_cell(d: int, i: int, t: float, r: float, replications: int, seed: int, threads=None, cell=0) -> dict:
    params = ProcessParams(d, r, t, seed)
    values = simulate_functionals(params, (i,), replications, threads)[:, 0]
    mean = expectation(d, i, t, ball_volume(d, r))
    var = variance(d, i, t, r)
    z = (values - mean) / math.sqrt(var)
    ks = stats.kstest(z, "norm")
    skew, cum4 = plugin_cumulants(z)
    boot = bootstrap(z, plugin_cumulants, seed + cell)
    return {
        "d": d,
        "i": i,
        "t": t,
        "r": r,
        "replications": replications,
        "ks": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "skewness": skew,
        "skewness_se": float(boot[:, 0].std(ddof=1)),
        "cum4": cum4,
        "cum4_se": float(boot[:, 1].std(ddof=1)),
        "z_mean": float(z.mean()),
        "z_var": float(z.var(ddof=1)),
    }


def run_clt_campaign(cfg: ExperimentConfig) -> ResultRecord:
    """Standardise F^{(i)} with the exact mean and variance, then test normality per cell."""
    if cfg.i is None:
        raise ValueError("a CLT campaign needs a single i")
    start = time.perf_counter()
    cells = [
        clt_cell(cfg.d, cfg.i, t, r, cfg.replications, cfg.seed, cfg.threads, k)
        for k, (t, r) in enumerate(_cells(cfg))
    ]
    return ResultRecord(asdict(cfg), cells, time.perf_counter() - start)


def run_multivariate_campaign(cfg: ExperimentConfig) -> ResultRecord:
    """Covariance of the scaled functional vector against its large-ball limit."""
    if cfg.d not in (2, 3, 4):
        raise ValueError("multivariate campaigns support d in {2, 3, 4}")
    if cfg.i is not None:
        raise ValueError("a multivariate campaign needs all components")
    start = time.perf_counter()
    cells = []
    for k, (t, r) in enumerate(_cells(cfg)):
        params = ProcessParams(cfg.d, r, t, cfg.seed)
        values = simulate_functionals(params, tuple(range(cfg.d)), cfg.replications, cfg.threads)
        scaled = values / covariance_scale(cfg.d, r)
        limit = asymptotic_covariance(cfg.d, t)
        cov = np.cov(scaled.T)
        frob = float(np.linalg.norm(cov - limit))
        boot = bootstrap(scaled, lambda v: np.linalg.norm(np.cov(v.T) - limit), cfg.seed + k)
        corr = np.corrcoef(values.T)
        exact = covariance_matrix(cfg.d, t, r) / covariance_scale(cfg.d, r) ** 2
        means = np.array([expectation(cfg.d, i, t, ball_volume(cfg.d, r)) for i in range(cfg.d)])
        ks = [
            float(stats.kstest((values[:, i] - means[i]) / math.sqrt(exact[i, i] * covariance_scale(cfg.d, r) ** 2), "norm").statistic)
            for i in range(cfg.d)
        ]
        cells.append(
            {
                "t": t,
                "r": r,
                "cov_scaled": cov.tolist(),
                "cov_scaled_exact": exact.tolist(),
                "limit": limit.tolist(),
                "frobenius_error": frob,
                "frobenius_se": float(boot.std(ddof=1)),
                "exact_bias": float(np.linalg.norm(exact - limit)),
                "min_correlation": float(corr[np.triu_indices(cfg.d, 1)].min()),
                "marginal_ks": ks,
            }
        )
    return ResultRecord(asdict(cfg), cells, time.perf_counter() - start)


def run_kfunction_campaign(cfg: ExperimentConfig) -> ResultRecord:
    """Empirical vertex K-function against the closed form (d = 2 or 3, i = j = 0)."""
    start = time.perf_counter()
    cells = []
    for t, r in _cells(cfg):
        params = ProcessParams(cfg.d, r, t, cfg.seed)
        reals = (sample_realization(params, sid) for sid in range(cfg.replications))
        est = empirical_k0(reals, cfg.r_values, cfg.r_window)
        kp = KParams(cfg.d, 0, 0, t)
        for rho, value, se in est:
            exact = k_function(kp, rho)
            cells.append(
                {
                    "t": t,
                    "sim_radius": r,
                    "r": rho,
                    "k_exact": exact,
                    "g_exact": pair_correlation(kp, rho),
                    "k_empirical": value,
                    "k_se": se,
                    "z": (value - exact) / se,
                }
            )
    return ResultRecord(asdict(cfg), cells, time.perf_counter() - start)
