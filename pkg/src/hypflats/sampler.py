"""Poisson hyperplane process restricted to hyperplanes hitting a centred ball.

A hyperplane is parameterised by its distance s to the origin and a unit
direction u. Under the invariant measure the direction is uniform and s has
density proportional to cosh^{d-1}(s), so the hitting mass of B_r is
omega(1) * int_0^r cosh^{d-1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hgeom import Hyperplane, normals_from

MAX_DIM = 8
MAX_RADIUS = 15.0
CDF_TOL = 1e-12


def cosh_power_integral(n: int, s):
    """int_0^s cosh^n via the reduction A_n = sinh cosh^{n-1}/n + (n-1)/n A_{n-2}."""
    s = np.asarray(s, dtype=float)
    sh, ch = np.sinh(s), np.cosh(s)
    low = [s, sh]
    if n < 2:
        return low[n]
    prev2, prev1 = low
    for k in range(2, n + 1):
        cur = sh * ch ** (k - 1) / k + (k - 1) / k * prev2
        prev2, prev1 = prev1, cur
    return prev1


def hitting_mass(d: int, r: float) -> float:
    """mu_{d-1}-measure of the hyperplanes meeting B_r."""
    if r < 0:
        raise ValueError("r must be non-negative")
    return float(2.0 * cosh_power_integral(d - 1, r))


def sample_distance(d: int, r: float, u):
    """Inverse CDF of the hyperplane distance on [0, r]; vectorised over u."""
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("u must lie in [0, 1]")
    if r == 0:
        out = np.zeros_like(u_arr)
    elif d == 2:
        out = np.arcsinh(u_arr * math.sinh(r))
    elif d == 4:
        # x = sinh s solves x + x^3/3 = target, i.e. 2 sinh(3y) = 3 target with x = 2 sinh y
        target = u_arr * float(cosh_power_integral(3, r))
        out = np.arcsinh(2.0 * np.sinh(np.arcsinh(1.5 * target) / 3.0))
        out = np.clip(out, 0.0, r)
    else:
        out = _newton_inverse(d - 1, r, u_arr)
    return out if out.ndim else float(out)


def _newton_inverse(n: int, r: float, u: np.ndarray) -> np.ndarray:
    """Safeguarded Newton on A_n(s) = u A_n(r), bracketed in [0, r]."""
    total = float(cosh_power_integral(n, r))
    target = u * total
    lo = np.zeros_like(u)
    hi = np.full_like(u, r)
    s = u * r
    for _ in range(100):
        f = cosh_power_integral(n, s) - target
        lo = np.where(f < 0, s, lo)
        hi = np.where(f > 0, s, hi)
        if np.all(np.abs(f) <= CDF_TOL * total):
            break
        step = s - f / np.cosh(s) ** n
        bad = (step <= lo) | (step >= hi) | ~np.isfinite(step)
        s = np.where(bad, 0.5 * (lo + hi), step)
    return s


@dataclass(frozen=True)
class ProcessParams:
    d: int
    r: float
    t: float
    seed: int = 0

    def __post_init__(self):
        if not 2 <= self.d <= MAX_DIM:
            raise ValueError(f"d must lie in [2, {MAX_DIM}]")
        if not 0 < self.r <= MAX_RADIUS:
            raise ValueError(f"r must lie in (0, {MAX_RADIUS}]")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def mean_count(self) -> float:
        return self.t * hitting_mass(self.d, self.r)


@dataclass(frozen=True)
class Realization:
    """Hyperplanes of one replication, stored column-wise."""

    params: ProcessParams
    s: np.ndarray
    dirs: np.ndarray
    stream_id: int = 0

    def __len__(self) -> int:
        return len(self.s)

    @property
    def hyperplanes(self) -> list[Hyperplane]:
        return [Hyperplane(dir=u, s=float(s)) for s, u in zip(self.s, self.dirs)]

    @property
    def normals(self) -> np.ndarray:
        return normals_from(self.s, self.dirs)

    @classmethod
    def from_hyperplanes(cls, params: ProcessParams, hs, stream_id: int = 0) -> "Realization":
        hs = list(hs)
        s = np.array([h.s for h in hs], dtype=float)
        dirs = np.array([h.dir for h in hs], dtype=float).reshape(len(hs), params.d)
        return cls(params, s, dirs, stream_id)


def stream_rng(seed: int, stream_id: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream_id)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


def _draw_count_and_uniforms(params: ProcessParams, rng: np.random.Generator):
    n = rng.poisson(params.mean_count) if params.t > 0 else 0
    return n, rng.random(n)


def sample_distances(params: ProcessParams, stream_id: int) -> np.ndarray:
    """Distances of one replication only; identical to sample_realization(...).s."""
    rng = stream_rng(params.seed, stream_id)
    _, u = _draw_count_and_uniforms(params, rng)
    return np.asarray(sample_distance(params.d, params.r, u), dtype=float).reshape(-1)


def sample_realization(params: ProcessParams, stream_id: int) -> Realization:
    rng = stream_rng(params.seed, stream_id)
    n, u = _draw_count_and_uniforms(params, rng)
    s = np.asarray(sample_distance(params.d, params.r, u), dtype=float).reshape(-1)
    g = rng.standard_normal((n, params.d))
    dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    return Realization(params, s, dirs, stream_id)


def sample_hyperplanes(d: int, r: float, n, rng: np.random.Generator):
    """n iid hyperplanes from the normalised hitting measure of B_r; returns normals."""
    shape = (n,) if np.isscalar(n) else tuple(n)
    s = sample_distance(d, r, rng.random(shape))
    g = rng.standard_normal(shape + (d,))
    dirs = g / np.linalg.norm(g, axis=-1, keepdims=True)
    return np.asarray(s), dirs
