"""Diagram calculus for Poisson U-statistics built from skeleton kernels.

A diagram is a family of disjoint blocks over the cells (row, col) of an array
with row lengths n_1..n_l, each block meeting every row at most once. Each
block (and each uncovered cell) becomes one integration variable; a diagram
integral multiplies the row kernels evaluated at their variables.

Monte Carlo integration draws every variable from the normalised hitting
measure of B_r and reweights by hitting_mass^{#variables}. Kernels vanish
unless all their hyperplanes meet B_r, so nothing is lost.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .hgeom import ball_slice_volume, flat_geometry, normals_from
from .moments import c_ind, flat_integral, variance
from .sampler import hitting_mass, sample_hyperplanes, stream_rng

MAX_CELLS = 20
N_BATCHES = 100


class DiagramClass(enum.Enum):
    STAR = "star"  # sub-partitions, at most one cell per row in each block
    STAR_GE2 = "star_ge2"  # ... with blocks of size >= 2
    STAR_STAR_GE2 = "star_star_ge2"  # ... additionally touching every row
    GE2 = "ge2"  # full partitions with blocks of size >= 2
    CON_GE2 = "con_ge2"  # ... whose rows are connected through blocks


@dataclass(frozen=True)
class Diagram:
    row_sizes: tuple
    blocks: tuple  # tuple of tuples of (row, col), each sorted

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_covered(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def n_variables(self) -> int:
        return self.n_blocks + sum(self.row_sizes) - self.n_covered

    def row_sets(self) -> list[tuple]:
        return [tuple(sorted(row for row, _ in b)) for b in self.blocks]

    def is_valid(self) -> bool:
        seen = set()
        for b in self.blocks:
            rows = [row for row, _ in b]
            if len(set(rows)) != len(rows):
                return False
            for row, col in b:
                if not (0 <= row < len(self.row_sizes) and 0 <= col < self.row_sizes[row]):
                    return False
                if (row, col) in seen:
                    return False
                seen.add((row, col))
        return True

    def touched_rows(self) -> set:
        return {row for b in self.blocks for row, _ in b}

    def is_connected(self) -> bool:
        parent = list(range(len(self.row_sizes)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b in self.blocks:
            rows = [row for row, _ in b]
            for other in rows[1:]:
                parent[find(other)] = find(rows[0])
        return len({find(x) for x in range(len(self.row_sizes))}) == 1

    def variables(self) -> list[list[int]]:
        """Variable index of every cell, row by row; uncovered cells get fresh variables."""
        index = {}
        for v, b in enumerate(self.blocks):
            for cell in b:
                index[cell] = v
        nxt = len(self.blocks)
        rows = []
        for row, size in enumerate(self.row_sizes):
            out = []
            for col in range(size):
                if (row, col) not in index:
                    index[(row, col)] = nxt
                    nxt += 1
                out.append(index[(row, col)])
            rows.append(out)
        return rows


def _accepts(cls: DiagramClass, diagram: Diagram) -> bool:
    if cls is DiagramClass.STAR:
        return True
    if any(len(b) < 2 for b in diagram.blocks):
        return False
    if cls is DiagramClass.STAR_GE2:
        return True
    if cls is DiagramClass.STAR_STAR_GE2:
        return len(diagram.touched_rows()) == len(diagram.row_sizes)
    full = diagram.n_covered == sum(diagram.row_sizes)
    if cls is DiagramClass.GE2:
        return full
    return full and diagram.is_connected()


def enumerate_diagrams(cls: DiagramClass, row_sizes) -> list[Diagram]:
    """All labelled diagrams of the given class."""
    row_sizes = tuple(int(n) for n in row_sizes)
    if any(n < 0 for n in row_sizes) or not row_sizes:
        raise ValueError("row sizes must be a non-empty list of non-negative integers")
    if sum(row_sizes) > MAX_CELLS:
        raise ValueError(f"at most {MAX_CELLS} cells can be enumerated")
    cells = [(row, col) for row, size in enumerate(row_sizes) for col in range(size)]
    allow_uncovered = cls in (DiagramClass.STAR, DiagramClass.STAR_GE2, DiagramClass.STAR_STAR_GE2)
    need_pairs = cls is not DiagramClass.STAR
    out = []
    blocks: list[list] = []

    def rec(pos):
        if pos == len(cells):
            diagram = Diagram(row_sizes, tuple(tuple(b) for b in blocks))
            if _accepts(cls, diagram):
                out.append(diagram)
            return
        row, col = cells[pos]
        if need_pairs and sum(len(b) == 1 for b in blocks) > len(cells) - pos:
            # every singleton still needs its own later cell
            return
        if allow_uncovered:
            rec(pos + 1)
        for b in blocks:
            if b[-1][0] != row:
                b.append((row, col))
                rec(pos + 1)
                b.pop()
        blocks.append([(row, col)])
        rec(pos + 1)
        blocks.pop()

    rec(0)
    return out


@lru_cache(maxsize=None)
def _row_groups(row_sizes: tuple, pairs: bool) -> list[tuple]:
    """Allowed row permutations.

    With pairs=True rows 0,1 may be swapped and rows 2,3 may be swapped, each
    only when the two rows have equal size. Otherwise every size-preserving
    permutation is allowed, which for (u, u, v, v) adds the exchange of the two
    pairs when u = v.
    """
    n = len(row_sizes)
    if pairs:
        choices = []
        swap01 = n >= 2 and row_sizes[0] == row_sizes[1]
        swap23 = n >= 4 and row_sizes[2] == row_sizes[3]
        for a in ([False, True] if swap01 else [False]):
            for b in ([False, True] if swap23 else [False]):
                perm = list(range(n))
                if a:
                    perm[0], perm[1] = 1, 0
                if b:
                    perm[2], perm[3] = 3, 2
                choices.append(tuple(perm))
        return choices
    return [p for p in itertools.permutations(range(n)) if all(row_sizes[p[k]] == row_sizes[k] for k in range(n))]


def _orbit_key(diagram: Diagram) -> tuple:
    """Multiset of block row-sets plus uncovered counts; invariant under column permutations."""
    uncovered = list(diagram.row_sizes)
    for b in diagram.blocks:
        for row, _ in b:
            uncovered[row] -= 1
    return tuple(sorted(diagram.row_sets())), tuple(uncovered)


@lru_cache(maxsize=None)
def _canonical_key(key: tuple, row_sizes: tuple, pairs: bool) -> tuple:
    row_sets, uncovered = key
    best = None
    for perm in _row_groups(row_sizes, pairs):
        inv = {old: new for new, old in enumerate(perm)}
        cand = (
            tuple(sorted(tuple(sorted(inv[row] for row in rs)) for rs in row_sets)),
            tuple(uncovered[perm[k]] for k in range(len(perm))),
        )
        if best is None or cand < best:
            best = cand
    return best


def canonical_form(diagram: Diagram, pairs: bool = False) -> tuple:
    """Lexicographically minimal multiset of block row-sets under the allowed row group.

    Column permutations within rows act transitively on diagrams with the same
    multiset of block row-sets, so that multiset identifies the orbit.
    """
    return _canonical_key(_orbit_key(diagram), diagram.row_sizes, pairs)


def equivalence_classes(diagrams, pairs: bool = False) -> int:
    """Number of orbits under column permutations within rows and row permutations."""
    diagrams = list(diagrams)
    if not diagrams:
        return 0
    sizes = {dg.row_sizes for dg in diagrams}
    if len(sizes) > 1:
        raise ValueError("diagrams must share row sizes")
    return len({canonical_form(dg, pairs) for dg in diagrams})


def orbit_representatives(diagrams, pairs: bool = False) -> list[tuple[Diagram, int]]:
    """One diagram per orbit together with the orbit size among the given diagrams."""
    counts = Counter()
    reps = {}
    for dg in diagrams:
        key = canonical_form(dg, pairs)
        counts[key] += 1
        reps.setdefault(key, dg)
    return [(reps[key], counts[key]) for key in sorted(counts)]


@dataclass(frozen=True)
class Kernel:
    """u hyperplanes -> coef * slice(dim, flat, r)."""

    d: int
    arity: int
    dim: int
    coef: float


def raw_kernel(d: int, i: int) -> Kernel:
    """The symmetric kernel of F^{(i)} over ordered tuples."""
    m = d - i
    return Kernel(d, m, i, 1.0 / math.factorial(m))


def reduced_kernel(d: int, i: int, u: int) -> Kernel:
    """u-th reduced kernel f_u^{(i)} = c(i, u, d) slice(d - u, .)."""
    if not 1 <= u <= d - i:
        raise ValueError("u must lie in [1, d-i]")
    return Kernel(d, u, d - u, c_ind(i, u, d))


def evaluate_kernel(kernel: Kernel, s: np.ndarray, dirs: np.ndarray, r: float) -> np.ndarray:
    """Evaluate on batches: s has shape (N, arity), dirs (N, arity, d)."""
    if kernel.arity == 1:
        return kernel.coef * ball_slice_volume(kernel.dim, s[:, 0], r)
    cosh_dist, _, ok = flat_geometry(normals_from(s, dirs))
    dist = np.where(ok, np.arccosh(np.maximum(np.nan_to_num(cosh_dist, nan=1.0), 1.0)), r + 1.0)
    return kernel.coef * ball_slice_volume(kernel.dim, dist, r)


def diagram_integral(diagram: Diagram, kernels, r: float, n_mc: int, rng) -> tuple[float, float]:
    """Monte Carlo integral of the kernel product over the identified variables, wrt mu^{#vars}.

    kernels[k] is applied to row k. Returns (estimate, stderr) from N_BATCHES batches.
    """
    d = kernels[0].d
    rows = diagram.variables()
    n_vars = diagram.n_variables
    mass = hitting_mass(d, r)
    batches = min(N_BATCHES, n_mc)
    per = max(1, n_mc // batches)
    means = np.empty(batches)
    for b in range(batches):
        s, dirs = sample_hyperplanes(d, r, (per, n_vars), rng)
        prod = np.ones(per)
        for kernel, vars_ in zip(kernels, rows):
            prod *= evaluate_kernel(kernel, s[:, vars_], dirs[:, vars_], r)
        means[b] = prod.mean()
    scale = mass**n_vars
    est = means.mean() * scale
    err = means.std(ddof=1) / math.sqrt(batches) * scale if batches > 1 else math.nan
    return float(est), float(err)


@dataclass(frozen=True)
class Contribution:
    representative: Diagram
    multiplicity: int
    t_exponent: float
    value: float
    stderr: float


@dataclass(frozen=True)
class MCResult:
    value: float
    stderr: float
    contributions: tuple


def _combine(contribs) -> MCResult:
    value = math.fsum(c.value for c in contribs)
    stderr = math.sqrt(math.fsum(c.stderr**2 for c in contribs))
    return MCResult(value, stderr, tuple(contribs))


def centered_moment_report(d: int, i: int, t: float, r: float, ell: int, n_mc: int, seed: int) -> MCResult:
    """E(F - E F)^ell by summing identified-diagram integrals over Pi**_{>=2}(m, ..., m)."""
    if ell not in (2, 3, 4, 5):
        raise ValueError("ell must lie in {2, 3, 4, 5}")
    if not 0 <= i <= d - 1:
        raise ValueError("i must lie in [0, d-1]")
    m = d - i
    diagrams = enumerate_diagrams(DiagramClass.STAR_STAR_GE2, [m] * ell)
    kernel = raw_kernel(d, i)
    contribs = []
    for k, (rep, mult) in enumerate(orbit_representatives(diagrams)):
        expo = m * ell + rep.n_blocks - rep.n_covered
        if t == 0:
            contribs.append(Contribution(rep, mult, expo, 0.0, 0.0))
            continue
        est, err = diagram_integral(rep, [kernel] * ell, r, n_mc, stream_rng(seed, k))
        w = mult * t**expo
        contribs.append(Contribution(rep, mult, expo, w * est, w * err))
    return _combine(contribs)


def centered_moment(d: int, i: int, t: float, r: float, ell: int, n_mc: int, seed: int) -> tuple[float, float]:
    res = centered_moment_report(d, i, t, r, ell, n_mc, seed)
    return res.value, res.stderr


def m_uv_report(d: int, i: int, u: int, v: int, t: float, r: float, n_mc: int, seed: int) -> MCResult:
    """M_{u,v}: connected-diagram integrals of the reduced kernels h_u, h_u, h_v, h_v."""
    m = d - i
    if not (1 <= u <= m and 1 <= v <= m):
        raise ValueError("need 1 <= u, v <= d - i")
    diagrams = enumerate_diagrams(DiagramClass.CON_GE2, [u, u, v, v])
    ku, kv = reduced_kernel(d, i, u), reduced_kernel(d, i, v)
    contribs = []
    # permuting rows that carry the same kernel leaves the integral unchanged
    for k, (rep, mult) in enumerate(orbit_representatives(diagrams)):
        expo = 4 * m - 2 * (u + v) + rep.n_blocks
        if r == 0:
            contribs.append(Contribution(rep, mult, expo, 0.0, 0.0))
            continue
        est, err = diagram_integral(rep, [ku, ku, kv, kv], r, n_mc, stream_rng(seed, k))
        w = mult * t**expo
        contribs.append(Contribution(rep, mult, expo, w * est, w * err))
    return _combine(contribs)


def m_uv(d: int, i: int, u: int, v: int, t: float, r: float, n_mc: int, seed: int) -> tuple[float, float]:
    res = m_uv_report(d, i, u, v, t, r, n_mc, seed)
    return res.value, res.stderr


def m11_exact(d: int, i: int, t: float, r: float) -> float:
    """M_{1,1} in closed form: t^{4(d-i-1)+1} c(i,1,d)^4 int slice(d-1)^4 d mu_{d-1}."""
    m = d - i
    return t ** (4 * (m - 1) + 1) * c_ind(i, 1, d) ** 4 * flat_integral(d - 1, 4, d, r)


def cum4_lower_bound(d: int, i: int, t: float, r: float) -> float:
    """M_{1,1}/Var^2, the quantity bounding the fourth cumulant from below."""
    if r < 0.5:
        raise ValueError("r must be at least 0.5")
    return m11_exact(d, i, t, r) / variance(d, i, t, r) ** 2


NORMAL_CONSTANTS = {
    "wasserstein": lambda m: 2 * m**3.5,
    "kolmogorov": lambda m: 19 * m**5,
}


def normal_bound(d: int, i: int, t: float, r: float, n_mc: int, seed: int, metric: str = "kolmogorov") -> float:
    """c_m sum_{u,v} sqrt(M_{u,v}) / Var for the standardised F^{(i)}."""
    if metric not in NORMAL_CONSTANTS:
        raise ValueError(f"metric must be one of {sorted(NORMAL_CONSTANTS)}")
    m = d - i
    total = []
    for u in range(1, m + 1):
        for v in range(1, m + 1):
            val, _ = m_uv(d, i, u, v, t, r, n_mc, seed + 1000 * u + v)
            total.append(math.sqrt(max(val, 0.0)))
    return NORMAL_CONSTANTS[metric](m) * math.fsum(total) / variance(d, i, t, r)
