import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from yoccoz.dynamics import (airplane_parameter, alpha_ray_cycle, critical_orbit, doubling_period,
                             escape_counts, escape_radius, fixed_points, green_grid, green_potential,
                             iterate, rotation_cycle, trace_external_ray)
from yoccoz.errors import AlphaNotRepelling, DegenerateFixedPoint


def test_iterate_by_hand():
    assert iterate(0, 2, 3) == 256
    assert iterate(-2, 0, 2) == 2
    assert iterate(1j, 0, 4) == -1 + 1j
    assert iterate(1j, 0.3 + 0.1j, 0) == 0.3 + 0.1j


def test_iterate_rejects_bad_input():
    with pytest.raises(ValueError):
        iterate(0, 1, -1)
    with pytest.raises(ValueError):
        iterate(0, complex(math.nan, 0), 1)
    with pytest.raises(ValueError):
        iterate(math.inf, 0, 1)


def test_iterate_overflow_reported_as_escape():
    z = iterate(0, 10.0, 40)
    assert math.isinf(abs(z))


def test_escape_radius():
    assert escape_radius(0) == 3
    assert escape_radius(-2) == 3
    assert escape_radius(5j) == 6


def _green_oracle(c, z, n=60):
    # plain 2^-n log|z_n| at a large n, in extended precision via logs
    for k in range(n):
        if abs(z) > 1e100:
            return math.log(abs(z)) / 2 ** k
        z = z * z + c
    return 0.0


def test_green_potential_examples():
    assert green_potential(0, 2) == pytest.approx(math.log(2), abs=1e-12)
    assert green_potential(0, 0.5) == 0
    g = green_potential(-2, 3)
    assert g == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-12)
    assert g == pytest.approx(_green_oracle(-2, 3), abs=1e-10)
    assert round(g, 4) == 0.9624


def test_green_budget_flag():
    g, bounded = green_potential(1j, 0, full_output=True)
    assert g == 0 and bounded
    g, bounded = green_potential(1j, 3, full_output=True)
    assert g > 0 and not bounded


def test_green_grid_matches_scalar():
    z = np.array([[2.0, 0.5 + 0.5j], [-1.9 + 0.2j, 3j]])
    G = green_grid(1j, z)
    for idx in np.ndindex(z.shape):
        assert G[idx] == pytest.approx(green_potential(1j, z[idx]), abs=1e-14)


cs = st.sampled_from([0j, 1j, -2 + 0j, -1 + 0j, -0.12 + 0.75j, 0.3 + 0j])
angles = st.floats(0, 2 * math.pi)


@settings(max_examples=60, deadline=None)
@given(c=cs, phi=angles, h=st.floats(0.1, 2.0))
def test_functional_equation(c, phi, h):
    # pick z with G(z) close to h by following the equipotential out along a radius
    r = math.exp(h) + abs(c)
    z = cmath.rect(r, phi)
    G = green_potential(c, z)
    if not 0.1 <= G <= 2.0:
        return
    assert abs(green_potential(c, z * z + c) - 2 * G) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(c=cs, re=st.floats(-2, 2), im=st.floats(-2, 2), n=st.integers(1, 20))
def test_iterate_even(c, re, im, n):
    z = complex(re, im)
    a, b = iterate(c, z, n), iterate(c, -z, n)
    assert a == b or (math.isinf(abs(a)) and math.isinf(abs(b)))


@settings(max_examples=80, deadline=None)
@given(re=st.floats(-2, 2), im=st.floats(-2, 2))
def test_fixed_point_residuals(re, im):
    c = complex(re, im)
    if abs(1 - 4 * c) < 1e-6:
        return
    P = fixed_points(c)
    for z in (P.alpha, P.beta):
        assert abs(z * z + c - z) <= 1e-12 * max(1, abs(z))
    assert P.alpha_multiplier == 2 * P.alpha
    assert P.alpha_repelling == (abs(P.alpha_multiplier) > 1)


def test_fixed_points_examples():
    P = fixed_points(-1)
    assert P.alpha == pytest.approx((1 - math.sqrt(5)) / 2, abs=1e-12)
    assert P.beta == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)
    P0 = fixed_points(0)
    assert P0.alpha == 0 and P0.beta == 1 and not P0.alpha_repelling
    # root-finder oracle
    roots = np.roots([1, -1, 1j])
    Pi = fixed_points(1j)
    assert min(abs(roots - Pi.alpha)) < 1e-12
    assert Pi.alpha == pytest.approx(-0.300243 + 0.624810j, abs=1e-6)
    with pytest.raises(DegenerateFixedPoint):
        fixed_points(0.25)


def test_doubling_period():
    assert doubling_period(Fraction(1, 7)) == (0, 3)
    assert doubling_period(Fraction(1, 6)) == (1, 2)
    assert doubling_period(Fraction(0)) == (0, 1)
    assert doubling_period(Fraction(1, 4)) == (2, 1)


def test_rotation_cycles():
    assert rotation_cycle(1, 2) == (Fraction(1, 3), Fraction(2, 3))
    assert rotation_cycle(1, 3) == (Fraction(1, 7), Fraction(2, 7), Fraction(4, 7))
    for p, q in [(1, 4), (2, 5), (3, 7)]:
        cyc = rotation_cycle(p, q)
        assert len(cyc) == q
        assert {Fraction((2 * a).numerator % (2 * a).denominator, (2 * a).denominator) for a in cyc} == set(cyc)


def test_rays_of_z_squared_are_radial():
    P = fixed_points(0.0)
    for angle, arg in [(Fraction(0), 0.0), (Fraction(1, 3), 2 * math.pi / 3)]:
        ray = trace_external_ray(P, angle, 1.0, 0.1)
        assert np.all(np.diff(ray.potentials) < 0)
        for h, z in ray.samples:
            assert abs(z) == pytest.approx(math.exp(h), rel=1e-9)
            assert abs(cmath.phase(z * cmath.exp(-1j * arg))) < 1e-9


def test_ray_samples_on_equipotentials():
    P = fixed_points(1j)
    ray = trace_external_ray(P, Fraction(1, 7), 1.0, 0.05)
    for h, z in ray.samples:
        assert abs(green_potential(1j, z) - h) <= 1e-9


def test_ray_equivariance():
    P = fixed_points(1j)
    r1 = trace_external_ray(P, Fraction(1, 7), 0.5, 0.05)
    r2 = trace_external_ray(P, Fraction(2, 7), 1.0, 0.1)
    targets = dict((round(h, 12), z) for h, z in r2.samples)
    hits = 0
    for h, z in r1.samples:
        key = round(2 * h, 12)
        if key in targets:
            assert abs(z * z + 1j - targets[key]) < 1e-7
            hits += 1
    assert hits >= 10


def test_ray_landing_at_alpha():
    P = fixed_points(1j)
    ray = trace_external_ray(P, Fraction(1, 7), 1.0, 0.0)
    assert ray.landed
    assert abs(ray.landing_estimate - P.alpha) < 1e-6


def test_alpha_ray_cycles(airplane):
    assert alpha_ray_cycle(fixed_points(-1)) == (Fraction(1, 3), Fraction(2, 3))
    assert alpha_ray_cycle(fixed_points(1j)) == (Fraction(1, 7), Fraction(2, 7), Fraction(4, 7))
    assert alpha_ray_cycle(fixed_points(-2)) == (Fraction(1, 3), Fraction(2, 3))
    assert alpha_ray_cycle(fixed_points(airplane)) == (Fraction(1, 3), Fraction(2, 3))
    with pytest.raises(AlphaNotRepelling):
        alpha_ray_cycle(fixed_points(0))


def test_critical_orbits():
    o = critical_orbit(-2, 10)
    assert list(o.points[:4]) == [0, -2, 2, 2]
    assert o.preperiod == 2 and o.period == 1 and o.numeric_only
    o = critical_orbit(1j, 10)
    assert o.preperiod == 2 and o.period == 2
    o = critical_orbit(0.3, 100)
    assert o.escaped_at is not None and o.escaped_at <= 15
    # direct-iteration oracle
    z, k = 0j, 0
    while abs(z) <= escape_radius(0.3):
        z, k = z * z + 0.3, k + 1
    assert o.escaped_at == k


def test_orbit_recurrence():
    o = critical_orbit(1j, 12)
    for a, b in zip(o.points[:-1], o.points[1:]):
        assert abs(a * a + 1j - b) <= 1e-15


def test_airplane_parameter(airplane):
    c = airplane
    assert abs(iterate(c, 0, 3)) < 1e-14
    assert c == pytest.approx(-1.754877666246693, abs=1e-14)
    o = critical_orbit(c, 12)
    assert o.preperiod == 0 and o.period == 3


def test_escape_counts():
    z = np.array([0, 3, 1.5])
    n = escape_counts(0, z, 50)
    assert list(n) == [50, 1, 2]
