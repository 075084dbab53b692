"""K-functions and pair-correlation functions of skeleton random measures.

The closed forms hold for constant curvature kappa in {-1, 0, 1} once sinh is
replaced by the generalised sine sn_kappa. An empirical estimator for the
vertex process (i = j = 0) uses minus-sampling on a centred window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hgeom import ball_volume, lorentz_inner, omega
from .moments import expectation
from .skeleton import skeleton_vertices


@dataclass(frozen=True)
class KParams:
    d: int
    i: int
    j: int
    t: float
    kappa: int = -1

    def __post_init__(self):
        if not (0 <= self.i <= self.d - 1 and 0 <= self.j <= self.d - 1):
            raise ValueError("i, j must lie in [0, d-1]")
        if self.t <= 0:
            raise ValueError("t must be positive")
        if self.kappa not in (-1, 0, 1):
            raise ValueError("kappa must be -1, 0 or 1")

    @property
    def m(self) -> int:
        return min(self.d - self.i, self.d - self.j, self.d - 1)


def sn(kappa: int, r):
    if kappa == -1:
        return np.sinh(r)
    if kappa == 0:
        return np.asarray(r, dtype=float)
    return np.sin(r)


def sn_power_integral(kappa: int, p: int, r: float) -> float:
    """int_0^r sn_kappa^p(s) ds in closed form."""
    if kappa == 0:
        return r ** (p + 1) / (p + 1)
    if kappa == -1:
        f, c = math.sinh(r), math.cosh(r)
        low, sign = [r, c - 1.0], 1.0
    else:
        f, c = math.sin(r), math.cos(r)
        low, sign = [r, 1.0 - c], -1.0
    if p < 2:
        return low[p]
    prev2, prev1 = low
    for k in range(2, p + 1):
        # sinh: I_k = f^{k-1} c / k - (k-1)/k I_{k-2}; sin: J_k = -f^{k-1} c / k + (k-1)/k J_{k-2}
        cur = sign * (f ** (k - 1) * c / k - (k - 1) / k * prev2)
        prev2, prev1 = prev1, cur
    return prev1


def intensity_lambda(d: int, i: int, t: float) -> float:
    """Intensity of the i-skeleton, i.e. its mean i-volume per unit volume."""
    return expectation(d, i, t, 1.0)


def _check_r(p: KParams, r: float):
    if r <= 0:
        raise ValueError("r must be positive")
    if p.kappa == 1 and r >= math.pi:
        raise ValueError("r must be below pi for kappa = 1")


def k_function(p: KParams, r: float) -> float:
    _check_r(p, r)
    d, t = p.d, p.t
    total = []
    for n in range(p.m + 1):
        coef = (
            math.factorial(n)
            * math.comb(d - p.i, n)
            * math.comb(d - p.j, n)
            * omega(d + 1)
            * omega(d - n)
            / omega(d - n + 1)
            * (omega(d) / (omega(d + 1) * t)) ** n
        )
        total.append(coef * sn_power_integral(p.kappa, d - n - 1, r))
    return math.fsum(total)


def pair_correlation(p: KParams, r: float) -> float:
    _check_r(p, r)
    d = p.d
    base = p.t * float(sn(p.kappa, r))
    total = [1.0]
    for n in range(1, p.m + 1):
        coef = (
            math.factorial(n)
            * math.comb(d - p.i, n)
            * math.comb(d - p.j, n)
            * omega(d - n)
            / omega(d - n + 1)
            * (omega(d) / omega(d + 1)) ** (n - 1)
        )
        total.append(coef / base**n)
    return math.fsum(total)


def k_derivative_ratio(p: KParams, r: float, h: float = 1e-5) -> float:
    """Central difference of K divided by omega(d) sn^{d-1}(r); should equal g."""
    dk = (k_function(p, r + h) - k_function(p, r - h)) / (2 * h)
    return dk / (omega(p.d) * float(sn(p.kappa, r)) ** (p.d - 1))


def pair_counts(vertices: np.ndarray, r_values, r_window: float) -> np.ndarray:
    """Ordered pairs (x, y), x within r_window of the origin, 0 < dist(x, y) <= r."""
    r_values = np.asarray(r_values, dtype=float)
    if len(vertices) < 2:
        return np.zeros(len(r_values))
    in_window = np.arccosh(np.maximum(vertices[:, 0], 1.0)) <= r_window
    centres = vertices[in_window]
    if len(centres) == 0:
        return np.zeros(len(r_values))
    gram = -lorentz_inner(centres[:, None, :], vertices[None, :, :])
    dists = np.arccosh(np.maximum(gram, 1.0))
    # drop self pairs by identity, not by distance
    rows = np.flatnonzero(in_window)
    dists[np.arange(len(rows)), rows] = np.inf
    dists = np.sort(dists[dists > 0])
    return np.searchsorted(dists, r_values, side="right").astype(float)


def empirical_k0(realizations, r_values, r_window: float):
    """Minus-sampling estimate of the vertex K-function with replication stderr."""
    realizations = list(realizations)
    if not realizations:
        raise ValueError("need at least one realization")
    params = realizations[0].params
    r_values = np.asarray(r_values, dtype=float)
    if r_window + r_values.max() > params.r:
        raise ValueError("window plus largest r exceeds the realization radius")
    lam = intensity_lambda(params.d, 0, params.t)
    norm = lam**2 * ball_volume(params.d, r_window)
    est = np.array([pair_counts(skeleton_vertices(real), r_values, r_window) for real in realizations]) / norm
    mean = est.mean(axis=0)
    err = est.std(axis=0, ddof=1) / math.sqrt(len(est)) if len(est) > 1 else np.full(len(r_values), np.nan)
    return [(float(r), float(m), float(e)) for r, m, e in zip(r_values, mean, err)]
