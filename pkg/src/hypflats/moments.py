"""Closed-form and quadrature evaluation of first and second order quantities.

Conventions: omega(k) is the area of S^{k-1}; slice(k, s, r) is the k-volume
of a k-plane at distance s meeting B_r. All integrals over [0, r] are taken in
the variable w with s = r - w^2, which removes the square-root behaviour of
slice(k, s, r) at s = r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .hgeom import ball_slice_volume, ball_volume, omega

QUAD_EPSREL = 1e-11
CATALAN_REF = 0.915965594177219015054603514932384110774


class QuadratureError(RuntimeError):
    pass


def c_dk(d: int, k: int) -> float:
    """Constant of the flat-measure representation."""
    return omega(k + 1) / omega(d + 1) * (omega(d + 1) / omega(d)) ** (d - k)


def c_ind(i: int, n: int, d: int) -> float:
    """Constant of the n-th reduced kernel of F^{(i)}."""
    return (
        math.comb(d - i, n)
        / math.factorial(d - i)
        * omega(i + 1)
        / omega(d - n + 1)
        * (omega(d + 1) / omega(d)) ** (d - n - i)
    )


def c_dnij(d: int, n: int, i: int, j: int) -> float:
    return c_dk(d, d - n) * c_ind(i, n, d) * c_ind(j, n, d)


@dataclass(frozen=True)
class MomentConstants:
    d: int
    omegas: tuple = field(init=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be at least 2")
        object.__setattr__(self, "omegas", tuple(omega(k) for k in range(self.d + 2)))

    def c(self, k: int) -> float:
        return c_dk(self.d, k)

    def c_kernel(self, i: int, n: int) -> float:
        return c_ind(i, n, self.d)

    def c_cov(self, n: int, i: int, j: int) -> float:
        return c_dnij(self.d, n, i, j)


def constants(d: int) -> MomentConstants:
    return MomentConstants(d)


def expectation(d: int, i: int, t: float, vol_w: float) -> float:
    """Mean of F^{(i)} over a window of volume vol_w."""
    if not 0 <= i <= d - 1:
        raise ValueError("i must lie in [0, d-1]")
    if t < 0 or vol_w < 0:
        raise ValueError("t and vol_w must be non-negative")
    m = d - i
    return omega(i + 1) / omega(d + 1) * (omega(d + 1) / omega(d)) ** m * t**m / math.factorial(m) * vol_w


def _quad(func, a: float, b: float, epsrel: float = QUAD_EPSREL):
    val, err = integrate.quad(func, a, b, epsabs=0.0, epsrel=epsrel, limit=500)
    if not np.isfinite(val) or err > max(1e-9 * abs(val), 1e-300):
        raise QuadratureError(f"quadrature did not converge: value {val}, error {err}")
    return val, err


def flat_integral_with_error(k: int, l: float, d: int, r: float, log_scale: float = 0.0):
    """omega(d-k) int_0^r cosh^k sinh^{d-1-k} slice(k, s, r)^l ds, times exp(-log_scale)."""
    if not 0 <= k <= d - 1:
        raise ValueError("k must lie in [0, d-1]")
    if l < 0 or r < 0:
        raise ValueError("l and r must be non-negative")
    if r == 0:
        return 0.0, 0.0

    def integrand(w):
        s = max(r - w * w, 0.0)
        base = k * math.log(math.cosh(s)) - log_scale
        if d - 1 - k:
            if s == 0:
                return 0.0
            base += (d - 1 - k) * math.log(math.sinh(s))
        sl = ball_slice_volume(k, s, r) if l else 1.0
        if sl <= 0:
            return 0.0
        return 2.0 * w * math.exp(base + l * math.log(sl))

    val, err = _quad(integrand, 0.0, math.sqrt(r))
    return omega(d - k) * val, omega(d - k) * err


def flat_integral(k: int, l: float, d: int, r: float, log_scale: float = 0.0) -> float:
    return flat_integral_with_error(k, l, d, r, log_scale)[0]


@dataclass(frozen=True)
class CovarianceReport:
    d: int
    i: int
    j: int
    t: float
    r: float
    terms: tuple
    errors: tuple

    @property
    def total(self) -> float:
        return math.fsum(self.terms)


def covariance(d: int, i: int, j: int, t: float, r: float, log_scale: float = 0.0) -> CovarianceReport:
    """Cov(F^{(i)}, F^{(j)}) for W = B_r, split into its chaos terms n = 1..min(d-i, d-j)."""
    if not (0 <= i <= d - 1 and 0 <= j <= d - 1):
        raise ValueError("i, j must lie in [0, d-1]")
    if t <= 0 or r < 0:
        raise ValueError("t must be positive and r non-negative")
    terms, errors = [], []
    for n in range(1, min(d - i, d - j) + 1):
        coef = math.factorial(n) * t ** (2 * d - i - j - n) * c_dnij(d, n, i, j)
        val, err = flat_integral_with_error(d - n, 2, d, r, log_scale)
        terms.append(coef * val)
        errors.append(coef * err)
    return CovarianceReport(d, i, j, t, r, tuple(terms), tuple(errors))


def variance(d: int, i: int, t: float, r: float) -> float:
    return covariance(d, i, i, t, r).total


def covariance_matrix(d: int, t: float, r: float, log_scale: float = 0.0) -> np.ndarray:
    out = np.empty((d, d))
    for i in range(d):
        for j in range(i, d):
            out[i, j] = out[j, i] = covariance(d, i, j, t, r, log_scale).total
    return out


def growth_g(k: int, l: float, d: int, r: float) -> float:
    """Order of growth of flat_integral(k, l, d, r) as r grows."""
    a, b = l * (k - 1), d - 1
    if a < b:
        return math.exp(r * b)
    if a == b:
        return r * math.exp(r * b)
    return math.exp(r * a)


def _arcosh_exp(s: float) -> float:
    # arcosh(e^s) without overflow
    return s + math.log1p(math.sqrt(-math.expm1(-2.0 * s)))


CATALAN_CUTOFF = 40.0


def catalan_a(form: str = "exp") -> float:
    """int_0^inf e^{-s} arcosh^2(e^s) ds, which equals four times Catalan's constant.

    form="exp" integrates the defining expression on [0, 40] (the tail beyond 40
    is below 1e-13); form="log" integrates the form obtained from
    e^s = (1/x + x)/2, namely 2 int_0^1 (1 - x^2)/(1 + x^2)^2 ln^2 x dx.
    """
    if form == "exp":
        # split at 1 so the sqrt(2s) behaviour near 0 is resolved separately
        head, _ = _quad(lambda s: math.exp(-s) * _arcosh_exp(s) ** 2, 0.0, 1.0)
        body, _ = _quad(lambda s: math.exp(-s) * _arcosh_exp(s) ** 2, 1.0, CATALAN_CUTOFF)
        return head + body
    if form == "log":
        val, _ = _quad(lambda x: (1 - x * x) / (1 + x * x) ** 2 * math.log(x) ** 2 if x > 0 else 0.0, 0.0, 1.0)
        return 2.0 * val
    raise ValueError("form must be 'exp' or 'log'")


def catalan_tail_bound(cutoff: float = CATALAN_CUTOFF) -> float:
    """Upper bound for int_cutoff^inf e^{-s}(s + log 2)^2 ds."""
    b = cutoff + math.log(2.0)
    return math.exp(-cutoff) * (b * b + 2 * b + 2)


def sech_power_integral(alpha: float) -> float:
    """int_0^inf cosh^{-alpha}(x) dx by quadrature with a truncated tail."""
    # cosh^{-alpha} <= 2^alpha e^{-alpha x}; cut where that tail is below 1e-15
    cutoff = (alpha * math.log(2.0) + 15 * math.log(10.0) - math.log(alpha)) / alpha
    val, _ = _quad(lambda x: math.cosh(x) ** -alpha, 0.0, cutoff, epsrel=1e-13)
    return val


def sech_power_closed(alpha: float) -> float:
    return math.sqrt(math.pi) / 2 * math.gamma(alpha / 2) / math.gamma((alpha + 1) / 2)


def covariance_scale(d: int, r: float) -> float:
    """Normalisation of F^{(i)} - E F^{(i)} in the multivariate limit."""
    if d == 2:
        return math.exp(r / 2)
    if d == 3:
        return math.sqrt(r) * math.exp(r)
    return math.exp(r * (d - 2))


def scaled_covariance(d: int, t: float, r: float) -> np.ndarray:
    """Covariance matrix of the normalised vector, i.e. covariance / covariance_scale^2."""
    log_scale = 2 * math.log(covariance_scale(d, r))
    return covariance_matrix(d, t, r, log_scale)


def asymptotic_covariance(d: int, t: float) -> np.ndarray:
    """Limit of scaled_covariance(d, t, r) as r grows."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if d == 2:
        a = catalan_a()
        c1 = [c_ind(0, 1, 2), c_ind(1, 1, 2)]
        out = np.empty((2, 2))
        for i in range(2):
            for j in range(2):
                out[i, j] = 4 * c1[i] * c1[j] * t ** (3 - i - j) * a
        # second chaos of the vertex count: 2 t^2 <f_2, f_2> e^{-r} -> 2 t^2 c(2,2,0,0) omega(2) / 2
        out[0, 0] += 2 * t**2 * c_dnij(2, 2, 0, 0) * omega(2) / 2
        return out
    if d == 3:
        coef = 2 * math.pi**2
        vec = np.array([c_ind(i, 1, 3) * t ** ((5 - 2 * i) / 2) for i in range(3)])
        return coef * np.outer(vec, vec)
    coef = omega(d - 1) * omega(d) / (4 ** (d - 2) * (d - 3) * (d - 2))
    vec = np.array([c_ind(i, 1, d) * t ** ((2 * d - 1 - 2 * i) / 2) for i in range(d)])
    return coef * np.outer(vec, vec)


def tau_w(d: int, r: float) -> np.ndarray:
    """Large-intensity limit of Cov(F^{(i)}/t^{d-i-1/2}, F^{(j)}/t^{d-j-1/2}) on B_r."""
    base = flat_integral(d - 1, 2, d, r) if r > 0 else 0.0
    out = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            out[i, j] = c_dnij(d, 1, i, j) * base
    return out


def numerical_rank(mat, rel_tol: float = 1e-8) -> int:
    eig = np.sort(np.abs(np.linalg.eigvalsh(np.asarray(mat, dtype=float))))[::-1]
    if eig[0] == 0:
        return 0
    return int(np.count_nonzero(eig > rel_tol * eig[0]))


@lru_cache(maxsize=None)
def cached_variance(d: int, i: int, t: float, r: float) -> float:
    return variance(d, i, t, r)


def crofton_residual(k: int, d: int, r: float) -> float:
    """Relative gap between flat_integral(k, 1, d, r) and the ball volume."""
    vol = ball_volume(d, r)
    return abs(flat_integral(k, 1, d, r) - vol) / vol
