import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from hypflats.hgeom import (
    ball_slice_volume,
    ball_volume,
    dist,
    flat_from_normals,
    hyperplane_at,
    ideal_endpoints,
    lorentz_inner,
    omega,
    origin,
    point_at,
    to_poincare,
)

unit_dirs = st.integers(2, 6).flatmap(
    lambda d: st.lists(st.floats(-1, 1), min_size=d, max_size=d).filter(lambda v: np.linalg.norm(v) > 0.1)
)


def unit(v):
    v = np.asarray(v, float)
    return v / np.linalg.norm(v)


def test_omega_values():
    assert omega(0) == 0.0
    assert omega(1) == pytest.approx(2.0)
    assert omega(2) == pytest.approx(2 * math.pi)
    assert omega(3) == pytest.approx(4 * math.pi)
    assert omega(4) == pytest.approx(2 * math.pi**2)


def test_inner_products():
    p = origin(3)
    assert lorentz_inner(p, p) == -1.0
    n = hyperplane_at(unit([1, 2, 2]), 0.7).normal
    assert lorentz_inner(n, n) == pytest.approx(1.0, abs=1e-12)
    assert lorentz_inner(p, n) == pytest.approx(-0.7585837018, abs=1e-9)


def test_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        lorentz_inner(np.zeros(3), np.zeros(4))


def test_distance_examples():
    p = origin(2)
    assert dist(p, p) == 0.0
    x = np.array([math.cosh(2), math.sinh(2), 0.0])
    assert dist(p, x) == pytest.approx(2.0, abs=1e-12)


@given(unit_dirs, st.floats(0, 5), st.floats(0, 5))
def test_distance_symmetric(u, a, b):
    u = unit(u)
    w = np.roll(u, 1)
    x, y = point_at(u, a), point_at(unit(w), b)
    assert dist(x, y) == pytest.approx(dist(y, x), abs=1e-12)
    assert dist(x, y) >= 0
    assert lorentz_inner(x, x) == pytest.approx(-1.0, abs=1e-10)


def test_hyperplane_at_examples():
    h = hyperplane_at([1.0, 0.0], 0.0)
    np.testing.assert_allclose(h.normal, [0.0, 1.0, 0.0])
    h = hyperplane_at([1.0, 0.0], 1.0)
    np.testing.assert_allclose(h.normal, [1.1752011936, 1.5430806348, 0.0], atol=1e-9)
    assert math.asinh(h.normal[0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        hyperplane_at([1.0, 1.0], 1.0)
    with pytest.raises(ValueError):
        hyperplane_at([1.0, 0.0], -1.0)


@given(unit_dirs, st.floats(0, 8))
def test_single_hyperplane_flat_distance(u, s):
    flat = flat_from_normals([hyperplane_at(unit(u), s)])
    assert not flat.degenerate
    assert flat.dist_origin == pytest.approx(s, abs=1e-9)
    n = hyperplane_at(unit(u), s).normal
    assert math.asinh(abs(lorentz_inner(origin(len(u)), n))) == pytest.approx(s, abs=1e-10)


def test_orthogonal_lines_meet_at_origin():
    flat = flat_from_normals([hyperplane_at([1, 0], 0), hyperplane_at([0, 1], 0)])
    assert flat.dim == 0 and not flat.degenerate
    assert flat.dist_origin == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(flat.foot, origin(2), atol=1e-12)


def test_repeated_hyperplane_is_degenerate():
    h = hyperplane_at([0.6, 0.8], 0.3)
    assert flat_from_normals([h, h]).degenerate


def test_ultraparallel_lines_are_degenerate():
    # two lines at distance 1 on opposite sides of the origin never meet
    flat = flat_from_normals([hyperplane_at([1, 0], 1.0), hyperplane_at([-1, 0], 1.0)])
    assert flat.degenerate


def test_too_many_hyperplanes():
    hs = [hyperplane_at([1, 0], 0.1)] * 3
    with pytest.raises(ValueError):
        flat_from_normals(hs)


def test_flat_distance_against_nearest_point_search():
    rng = np.random.default_rng(3)
    for _ in range(20):
        hs = [hyperplane_at(unit(rng.normal(size=3)), rng.uniform(0, 1)) for _ in range(2)]
        flat = flat_from_normals(hs)
        if flat.degenerate:
            continue
        # the foot lies on both planes, and no other point of the line is closer
        for h in hs:
            assert abs(lorentz_inner(flat.foot, h.normal)) < 1e-9
        # tangent of the line at the foot: Lorentz-orthogonal to both normals and the foot
        flip = np.array([-1.0, 1, 1, 1])
        tangent = np.linalg.svd(np.stack([hs[0].normal * flip, hs[1].normal * flip, flat.foot * flip]))[2][-1]
        tangent /= math.sqrt(lorentz_inner(tangent, tangent))
        for a in np.linspace(-1, 1, 9):
            x = math.cosh(a) * flat.foot + math.sinh(a) * tangent
            for h in hs:
                assert abs(lorentz_inner(x, h.normal)) < 1e-9
            assert dist(origin(3), x) >= flat.dist_origin - 1e-9


def test_slice_examples():
    assert ball_slice_volume(1, 1.0, 1.0) == 0.0
    assert ball_slice_volume(3, 2.0, 2.0) == 0.0
    assert ball_slice_volume(0, 0.4, 1.0) == 1.0
    assert ball_slice_volume(0, 1.4, 1.0) == 0.0
    assert ball_slice_volume(1, 0.5, 1.0) == pytest.approx(1.66805, abs=1e-5)
    for s, r in [(0.3, 1.0), (1.0, 4.0)]:
        assert ball_slice_volume(2, s, r) == pytest.approx(2 * math.pi * (math.cosh(r) / math.cosh(s) - 1))


@pytest.mark.parametrize("i", [1, 2, 3, 4, 5, 6])
def test_slice_matches_quadrature(i):
    for s, r in [(0.2, 1.0), (1.5, 3.0), (0.0, 2.0)]:
        rho = math.acosh(math.cosh(r) / math.cosh(s))
        ref = omega(i) * integrate.quad(lambda u: math.sinh(u) ** (i - 1), 0, rho, epsabs=0, epsrel=1e-13)[0]
        assert ball_slice_volume(i, s, r) == pytest.approx(ref, rel=1e-10)


def test_slice_monotone():
    s = np.linspace(0, 3, 61)
    for i in range(4):
        v = ball_slice_volume(i, s, 2.5)
        assert np.all(np.diff(v) <= 1e-12)
        grid = [ball_slice_volume(i, 0.7, r) for r in np.linspace(0.7, 4, 30)]
        assert np.all(np.diff(grid) >= -1e-12)


def test_slice_errors():
    with pytest.raises(ValueError):
        ball_slice_volume(1, -0.1, 1.0)
    with pytest.raises(ValueError):
        ball_slice_volume(1, 0.1, -1.0)


def test_ball_volume():
    for r in (0.5, 2.0, 7.0):
        assert ball_volume(2, r) == pytest.approx(2 * math.pi * (math.cosh(r) - 1))
    assert ball_volume(3, 0.0) == 0.0
    assert ball_volume(3, 1.0) == pytest.approx(math.pi * (math.sinh(2) - 2))
    assert ball_volume(3, 1.0) == pytest.approx(5.11093, abs=1e-5)


def test_section_radius_bound():
    for r in np.linspace(0, 10, 21):
        for s in np.linspace(0, r, 21):
            gap = math.acosh(math.cosh(r) / math.cosh(s)) - (r - s)
            assert -1e-12 <= gap <= math.log(2) + 1e-12


def test_sinh_lower_bounds():
    x = np.linspace(0, 30, 3001)
    assert np.all(np.sinh(x) >= x)
    x = x[x >= 0.1]
    assert np.all(np.sinh(x) >= np.exp(x - 3))


def test_poincare_projection():
    np.testing.assert_allclose(to_poincare(origin(3)), 0.0)
    np.testing.assert_allclose(to_poincare([math.cosh(1), math.sinh(1), 0]), [math.tanh(0.5), 0.0])


@settings(max_examples=50)
@given(unit_dirs, st.floats(0, 15))
def test_poincare_inside_disc(u, a):
    x = point_at(unit(u), a)
    assert np.linalg.norm(to_poincare(x)) < 1


@given(st.floats(0, 2 * math.pi), st.floats(0, 6))
def test_ideal_endpoints_unit_norm(theta, s):
    u = np.array([math.cos(theta), math.sin(theta)])
    a, b = ideal_endpoints(u, s)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-10)
    assert np.linalg.norm(b) == pytest.approx(1.0, abs=1e-10)


def test_ideal_endpoints_through_origin():
    u = np.array([0.6, 0.8])
    a, b = ideal_endpoints(u, 0.0)
    w = np.array([-0.8, 0.6])
    np.testing.assert_allclose(a, w, atol=1e-12)
    np.testing.assert_allclose(b, -w, atol=1e-12)
