"""Exact skeleton volume functionals of a sampled hyperplane realization.

F^{(i)} sums the i-volume inside B_r of every intersection flat of d - i
distinct hyperplanes. Subsets are swept in lexicographic order in fixed-size
chunks so that sums are reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .hgeom import ball_slice_volume, flat_geometry
from .sampler import Realization

MAX_SUBSETS = 10**8
CHUNK = 100_000


class WorkGuardError(RuntimeError):
    """Raised when a subset sweep would exceed the work budget."""


@dataclass(frozen=True)
class Sweep:
    value: float
    subsets: int
    degenerate: int


def _subset_chunks(n: int, j: int):
    if j == 1:
        yield np.arange(n)[:, None]
        return
    if j == 2:
        a, b = np.triu_indices(n, k=1)
        idx = np.stack([a, b], axis=1)
        for start in range(0, len(idx), CHUNK):
            yield idx[start:start + CHUNK]
        return
    combos = itertools.combinations(range(n), j)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, CHUNK)), dtype=np.int64)
        if block.size == 0:
            return
        yield block.reshape(-1, j)


def check_work(n: int, j: int) -> int:
    count = math.comb(n, j)
    if count > MAX_SUBSETS:
        raise WorkGuardError(
            f"{count} subsets of size {j} exceed the budget of {MAX_SUBSETS}; reduce t or r"
        )
    return count


def flat_distances(real: Realization, j: int):
    """Yield (distance, ok, index block) for every j-subset, chunk by chunk."""
    if j == 1:
        yield real.s, np.ones(len(real.s), dtype=bool), np.arange(len(real.s))[:, None]
        return
    normals = real.normals
    for idx in _subset_chunks(len(real), j):
        cosh_dist, _, ok = flat_geometry(normals[idx])
        dist = np.where(ok, np.arccosh(np.maximum(np.nan_to_num(cosh_dist, nan=1.0), 1.0)), np.inf)
        yield dist, ok, idx


def skeleton_sweep(real: Realization, i: int) -> Sweep:
    d, r = real.params.d, real.params.r
    if not 0 <= i <= d - 1:
        raise ValueError(f"i must lie in [0, {d - 1}]")
    j = d - i
    count = check_work(len(real), j)
    if count == 0:
        return Sweep(0.0, 0, 0)
    partial = []
    degenerate = 0
    for dist, ok, _ in flat_distances(real, j):
        degenerate += int(np.count_nonzero(~ok))
        vol = ball_slice_volume(i, np.where(ok, dist, r + 1.0), r)
        partial.append(float(np.sum(vol)))
    return Sweep(math.fsum(partial), count, degenerate)


def skeleton_functional(real: Realization, i: int) -> float:
    """F^{(i)}: total i-volume of the i-skeleton inside the ball."""
    return skeleton_sweep(real, i).value


def all_functionals(real: Realization) -> np.ndarray:
    """(F^{(0)}, ..., F^{(d-1)}) for one realization."""
    return np.array([skeleton_functional(real, i) for i in range(real.params.d)])


def skeleton_vertices(real: Realization) -> np.ndarray:
    """Vertices of the tessellation inside B_r as an array of hyperboloid points."""
    d, r = real.params.d, real.params.r
    check_work(len(real), d)
    normals = real.normals
    found = [np.empty((0, d + 1))]
    if len(real) < d:
        return found[0]
    for idx in _subset_chunks(len(real), d):
        cosh_dist, foot, ok = flat_geometry(normals[idx])
        dist = np.arccosh(np.maximum(np.nan_to_num(cosh_dist, nan=np.inf), 1.0))
        keep = ok & (dist <= r)
        found.append(foot[keep])
    return np.concatenate(found)
