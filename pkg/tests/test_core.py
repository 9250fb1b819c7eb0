import math

import numpy as np
import pytest

from irfmc.core import (DomainError, DomainSet, Potential, check_gradient, make_rng, restrict_to_line,
                        sample_unit_sphere)
from irfmc.distributions import get_target


def quadratic(dim, domain=None):
    domain = domain or DomainSet.full(dim)
    return Potential(dim, domain, lambda x: 0.5 * (np.asarray(x) ** 2).sum(-1), lambda x: np.asarray(x, float))


def test_gaussian_line_section(gaussian):
    line = restrict_to_line(gaussian.potential, [-1.0], [1.0])
    for t in (0.0, 0.5, 2.0, 3.7):
        assert line.value(t) == pytest.approx((t - 1) ** 2 / 2 - 0.5 + 0.5, abs=1e-15)
    assert line.slope(0.0) == -1.0
    assert line.t_range == (0.0, math.inf)


def test_uniform_ray_leaves_box():
    line = restrict_to_line(get_target("uniform:0:1").potential, [0.5], [1.0])
    assert line.t_range == (0.0, 0.5)


def test_orthant_cube_ray():
    D = DomainSet.orthant_cube([1.0], 1.4, 1)
    assert D.ray_bounds(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == (0.0, 1.0)


def test_ray_bounds_match_per_coordinate_closed_form():
    rng = make_rng(3)
    D = DomainSet([-1.0, 0.0, -np.inf], [2.0, np.inf, 5.0])
    for _ in range(50):
        x = np.array([rng.uniform(-1, 2), rng.uniform(0, 3), rng.uniform(-3, 5)])
        v = sample_unit_sphere(rng, 3)
        hits = []
        for i in range(3):
            if v[i] > 0 and np.isfinite(D.upper[i]):
                hits.append((D.upper[i] - x[i]) / v[i])
            if v[i] < 0 and np.isfinite(D.lower[i]):
                hits.append((D.lower[i] - x[i]) / v[i])
        assert D.ray_bounds(x, v)[1] == pytest.approx(min(hits, default=np.inf), rel=1e-14)


def test_restriction_agrees_with_potential():
    rng = make_rng(5)
    p = Potential(3, DomainSet.full(3), lambda x: np.cosh(np.asarray(x)).sum(-1), lambda x: np.sinh(x))
    x = rng.standard_normal(3)
    v = sample_unit_sphere(rng, 3)
    line = restrict_to_line(p, x, v)
    for t in rng.uniform(0, 2, 10):
        assert line.value(t) == pytest.approx(p.value(x + v * t), rel=1e-12)
        assert line.slope(t) == pytest.approx(p.gradient(x + v * t) @ v, rel=1e-12)


def test_restrict_rejects_outside_point_and_non_unit_direction():
    p = get_target("beta:2:2").potential
    with pytest.raises(DomainError):
        restrict_to_line(p, [1.0], [1.0])
    with pytest.raises(ValueError):
        restrict_to_line(p, [0.5], [0.5])


def test_value_outside_domain_is_an_error():
    p = get_target("truncnorm:0:1:1:3").potential
    with pytest.raises(DomainError):
        p.value([0.5])
    with pytest.raises(DomainError):
        p.value([3.0])


def test_unit_sphere_one_dimension_uses_a_fair_sign():
    class Fixed:
        def __init__(self, u):
            self.u = u

        def random(self):
            return self.u

    assert sample_unit_sphere(Fixed(0.3), 1)[0] == -1.0
    assert sample_unit_sphere(Fixed(0.7), 1)[0] == 1.0


def test_unit_sphere_norm_and_centering():
    rng = make_rng(11)
    draws = np.array([sample_unit_sphere(rng, 2) for _ in range(100_000)])
    assert np.all(np.abs(np.linalg.norm(draws, axis=1) - 1) < 1e-12)
    assert np.all(np.abs(draws.mean(0)) < 0.02)
    for d in (1, 3, 17):
        assert abs(np.linalg.norm(sample_unit_sphere(rng, d)) - 1) < 1e-12


def test_check_gradient_examples(gaussian, beta22):
    assert check_gradient(gaussian.potential, [0.3]) < 1e-5
    assert check_gradient(beta22.potential, [0.5]) < 1e-5
    with pytest.raises(DomainError):
        check_gradient(beta22.potential, [1.0])


def test_check_gradient_catches_wrong_gradient():
    p = Potential(2, DomainSet.full(2), lambda x: (np.asarray(x) ** 2).sum(-1), lambda x: np.asarray(x, float))
    assert check_gradient(p, [1.0, -2.0]) > 0.1


def test_make_rng_is_reproducible():
    assert make_rng(42).random() == make_rng(42).random()
    ss = np.random.SeedSequence(1).spawn(2)
    assert make_rng(ss[0]).random() != make_rng(ss[1]).random()


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSet([1.0], [1.0])
    D = DomainSet.interval(1.0, 3.0)
    assert not D.contains([1.0]) and D.contains([2.0])
    assert D.project(np.array([5.0]))[0] == 3.0 - 1e-12
    assert D.project(np.array([-5.0]))[0] == 1.0 + 1e-12
