"""Lorentzian linear algebra and exact volume formulas in the hyperboloid model.

Points of H^d live on the upper sheet of <x, x>_L = -1 in R^{d+1}, with
coordinate 0 the timelike axis. The origin is p = (1, 0, ..., 0).
A hyperplane at distance s from p with unit direction u has the spacelike
unit normal n = (sinh s, cosh s * u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GRAM_TOL = 1e-10
UNIT_TOL = 1e-10


def omega(k: int) -> float:
    """Surface area of the unit sphere S^{k-1} in R^k, with omega(0) = 0."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k == 0:
        return 0.0
    return 2.0 * math.pi ** (k / 2) / math.gamma(k / 2)


def lorentz_inner(u, v):
    """Minkowski form -u0 v0 + sum u_i v_i, broadcast over leading axes."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    prod = u * v
    return prod[..., 1:].sum(axis=-1) - prod[..., 0]


def origin(d: int) -> np.ndarray:
    p = np.zeros(d + 1)
    p[0] = 1.0
    return p


def dist(x, y):
    """Hyperbolic distance between points of the hyperboloid."""
    return np.arccosh(np.maximum(1.0, -lorentz_inner(x, y)))


def is_hpoint(x, tol: float = UNIT_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(np.isfinite(x)) and abs(lorentz_inner(x, x) + 1.0) <= tol and x[0] > 0)


def point_at(direction, distance: float) -> np.ndarray:
    """The point at the given distance from the origin along a unit direction."""
    u = np.asarray(direction, dtype=float)
    return np.concatenate(([math.cosh(distance)], math.sinh(distance) * u))


@dataclass(frozen=True)
class Hyperplane:
    """A totally geodesic hyperplane given by its direction and distance to the origin."""

    dir: np.ndarray
    s: float

    @property
    def d(self) -> int:
        return len(self.dir)

    @property
    def normal(self) -> np.ndarray:
        return np.concatenate(([math.sinh(self.s)], math.cosh(self.s) * self.dir))


def hyperplane_at(direction, s: float) -> Hyperplane:
    u = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > UNIT_TOL:
        raise ValueError("direction must be a unit vector")
    if s < 0:
        raise ValueError("distance must be non-negative")
    return Hyperplane(dir=u, s=float(s))


def normals_from(s, dirs) -> np.ndarray:
    """Stack unit normals (sinh s, cosh s * dir) for arrays of distances and directions."""
    s = np.asarray(s, dtype=float)
    dirs = np.asarray(dirs, dtype=float)
    return np.concatenate([np.sinh(s)[..., None], np.cosh(s)[..., None] * dirs], axis=-1)


def gram_batch(normals: np.ndarray) -> np.ndarray:
    """Lorentz Gram matrices for an array of shape (..., j, d+1)."""
    flipped = normals.copy()
    flipped[..., 0] *= -1.0
    return flipped @ np.swapaxes(normals, -1, -2)


def positive_definite(gram: np.ndarray, tol: float = GRAM_TOL) -> np.ndarray:
    """Sylvester test with leading minors scaled by the product of diagonals."""
    j = gram.shape[-1]
    ok = np.ones(gram.shape[:-2], dtype=bool)
    diag = np.diagonal(gram, axis1=-2, axis2=-1)
    for k in range(1, j + 1):
        minor = np.linalg.det(gram[..., :k, :k]) if k > 1 else gram[..., 0, 0]
        scale = np.prod(diag[..., :k], axis=-1)
        ok &= (scale > 0) & (minor > tol * np.abs(scale))
    return ok


def flat_geometry(normals: np.ndarray):
    """Distance to the origin and nearest point for the flats cut out by batches of normals.

    normals has shape (..., j, d+1). Returns (cosh_dist, foot, ok) where ok marks
    non-degenerate intersections; cosh_dist and foot are NaN where ok is False.
    foot is the point of the flat closest to the origin.
    """
    normals = np.asarray(normals, dtype=float)
    gram = gram_batch(normals)
    c = -normals[..., 0]
    ok = positive_definite(gram)
    batch = gram.shape[:-2]
    cosh_dist = np.full(batch, np.nan)
    foot = np.full(batch + (normals.shape[-1],), np.nan)
    if np.any(ok):
        g = gram[ok]
        cc = c[ok]
        alpha = np.linalg.solve(g, cc[..., None])[..., 0]
        q = np.einsum("...a,...a->...", cc, alpha)
        q = np.maximum(q, 0.0)
        cosh_dist[ok] = np.sqrt(1.0 + q)
        perp = -np.einsum("...a,...ak->...k", alpha, normals[ok])
        perp[..., 0] += 1.0
        foot[ok] = perp / np.sqrt(1.0 + q)[..., None]
    return cosh_dist, foot, ok


@dataclass(frozen=True)
class Flat:
    normals: np.ndarray
    dim: int
    dist_origin: float
    gram: np.ndarray = field(repr=False)
    degenerate: bool
    foot: np.ndarray | None = field(default=None, repr=False)


def flat_from_normals(hs) -> Flat:
    """Intersect hyperplanes; degenerate when the Gram matrix is not positive definite."""
    hs = list(hs)
    if not hs:
        raise ValueError("need at least one hyperplane")
    d = hs[0].d
    if len(hs) > d:
        raise ValueError(f"cannot intersect {len(hs)} hyperplanes in dimension {d}")
    normals = np.stack([h.normal for h in hs])
    cosh_dist, foot, ok = flat_geometry(normals)
    gram = gram_batch(normals)
    if not ok:
        return Flat(normals, d - len(hs), math.nan, gram, True, None)
    return Flat(normals, d - len(hs), float(np.arccosh(max(1.0, cosh_dist))), gram, False, foot)


def cosh_ratio(s, r):
    """cosh(r) / cosh(s) evaluated without overflow."""
    s = np.asarray(s, dtype=float)
    if r < 300.0:
        return math.cosh(r) / np.cosh(s)
    return np.exp(r - s) * (1.0 + np.exp(-2.0 * r)) / (1.0 + np.exp(-2.0 * s))


def sinh_power_integral(n: int, rho=None, *, cosh_rho=None):
    """int_0^rho sinh^n(u) du by the downward reduction formula.

    Either rho or cosh_rho may be supplied; the closed forms for n = 0, 1 only
    need one of them.
    """
    if cosh_rho is None:
        rho = np.asarray(rho, dtype=float)
        cosh_rho = np.cosh(rho)
    else:
        cosh_rho = np.maximum(np.asarray(cosh_rho, dtype=float), 1.0)
        if rho is None:
            rho = np.arccosh(cosh_rho)
    sinh_rho = np.sqrt((cosh_rho - 1.0) * (cosh_rho + 1.0))
    low = [rho, cosh_rho - 1.0]
    if n < 2:
        return low[n]
    prev2, prev1 = low
    for k in range(2, n + 1):
        cur = sinh_rho ** (k - 1) * cosh_rho / k - (k - 1) / k * prev2
        prev2, prev1 = prev1, cur
    return prev1


def ball_slice_volume(i: int, s, r: float):
    """i-volume of L_i(s) cap B_r, where L_i(s) is an i-plane at distance s from the centre.

    The section is an i-ball of radius arcosh(cosh r / cosh s). Vectorised over s.
    """
    if i < 0 or r < 0:
        raise ValueError("i and r must be non-negative")
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("s must be non-negative")
    inside = s_arr <= r
    if i == 0:
        out = inside.astype(float)
    else:
        ratio = np.maximum(cosh_ratio(np.minimum(s_arr, r), r), 1.0)
        if i == 2:
            val = ratio - 1.0
        else:
            val = sinh_power_integral(i - 1, cosh_rho=ratio)
        out = np.where(inside, omega(i) * np.maximum(val, 0.0), 0.0)
    return out if out.ndim else float(out)


def ball_volume(d: int, r: float) -> float:
    """Volume of a geodesic ball of radius r in H^d."""
    if d < 1:
        raise ValueError("d must be positive")
    if r < 0:
        raise ValueError("r must be non-negative")
    return float(omega(d) * sinh_power_integral(d - 1, r))


def to_poincare(x):
    """Project hyperboloid points to the Poincare ball."""
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / (1.0 + x[..., :1])


def ideal_endpoints(direction, s: float):
    """Boundary points in the Poincare disc of the line at distance s with direction u (d = 2).

    The line passes through (cosh s, sinh s u) perpendicular to u, so its ideal
    points are the limits along +/- the rotated direction.
    """
    u = np.asarray(direction, dtype=float)
    w = np.array([-u[1], u[0]])
    ends = []
    for sign in (1.0, -1.0):
        # limit of x(a)[1:] / (1 + x0(a)) as a -> infinity along the line
        v = math.tanh(s) * u + sign * w / math.cosh(s)
        ends.append(v / np.linalg.norm(v))
    return ends[0], ends[1]
