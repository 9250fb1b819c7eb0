import math

import numpy as np
import pytest

from irfmc.arrival import solve_arrival
from irfmc.core import DomainError, DomainSet, make_rng, restrict_to_line
from irfmc.distributions import get_target, make_truncated_gaussian
from irfmc.truncated import argmin_on_segment, line_domain_bounds, solve_truncated_arrival
from oracles import bisect


def test_line_domain_bounds():
    D = DomainSet.interval(1.0, 3.0)
    assert line_domain_bounds(D, [1.5], [1.0]) == (0.0, 1.5)
    assert line_domain_bounds(D, [1.5], [-1.0]) == (0.0, 0.5)
    D3 = DomainSet.orthant_cube([1.0, 1.0], 1.4, 1)
    assert line_domain_bounds(D3, [0.2, 0.3, 0.0], [-1.0, 0.0, 0.0])[1] == pytest.approx(0.2)
    with pytest.raises(DomainError):
        line_domain_bounds(D, [3.0], [1.0])


def test_argmin_examples(beta22):
    t = get_target("truncnorm:0:1:1:3")
    line = restrict_to_line(t.potential, [1.5], [1.0])
    assert argmin_on_segment(line, *line.t_range) == 0.0

    wide = make_truncated_gaussian(0.0, 1.0, -3.0, 3.0)
    line = restrict_to_line(wide.potential, [-1.0], [1.0])
    assert argmin_on_segment(line, *line.t_range) == pytest.approx(1.0, abs=1e-10)

    line = restrict_to_line(beta22.potential, [0.2], [1.0])
    assert argmin_on_segment(line, *line.t_range) == pytest.approx(0.3, abs=1e-10)


def test_truncated_gaussian_examples():
    t = get_target("truncnorm:0:1:1:3")
    line = restrict_to_line(t.potential, [1.5], [1.0])
    res = solve_truncated_arrival(line, *line.t_range, 0.9)
    expected = math.sqrt(2 * (1.125 - math.log(0.9))) - 1.5
    assert res.tau == pytest.approx(expected, abs=1e-12)
    assert 1.5 + res.tau / 2 == pytest.approx(1.5 + expected / 2, abs=1e-12)
    oracle = bisect(lambda s: (1.5 + s) ** 2 / 2 - 1.125 + math.log(0.9), 0.0, 1.5)
    assert res.tau == pytest.approx(oracle, abs=1e-12)

    res = solve_truncated_arrival(line, *line.t_range, math.exp(-4))
    assert res.clamped and res.tau == 1.5 and 1.5 + res.tau / 2 == 2.25


def test_v_close_to_one_stops_near_minimiser():
    wide = make_truncated_gaussian(0.0, 1.0, -3.0, 3.0)
    line = restrict_to_line(wide.potential, [-1.0], [1.0])
    assert solve_truncated_arrival(line, *line.t_range, 1 - 1e-12).tau == pytest.approx(1.0, abs=1e-5)
    assert solve_truncated_arrival(line, *line.t_range, 1.0).tau == 0.0
    with pytest.raises(ValueError):
        solve_truncated_arrival(line, *line.t_range, 0.0)


def test_agrees_with_general_solver_on_bounded_domains():
    rng = make_rng(4)
    names = ["truncnorm:0:1:1:3", "beta:2:2", "beta:3:2", "truncnorm:0.5:2:-1:1", "uniform:0:1"]
    for _ in range(100):
        t = get_target(names[rng.integers(len(names))])
        x = rng.uniform(t.lower, t.upper)
        v = -1.0 if rng.random() < 0.5 else 1.0
        V = 1 - rng.random()
        a = solve_truncated_arrival(restrict_to_line(t.potential, [x], [v]), 0.0,
                                    restrict_to_line(t.potential, [x], [v]).t_range[1], V)
        b = solve_arrival(restrict_to_line(t.potential, [x], [v]), -math.log(V))
        assert a.tau == pytest.approx(b.tau, abs=1e-9)


def test_convexity_spot_check_flags_concave_line():
    concave = get_target("beta:0.5:0.5")
    line = restrict_to_line(concave.potential, [0.3], [1.0])
    with pytest.raises(ValueError):
        solve_truncated_arrival(line, *line.t_range, 0.5, check_convexity=True)
    ok = restrict_to_line(get_target("beta:2:2").potential, [0.3], [1.0])
    solve_truncated_arrival(ok, *ok.t_range, 0.5, check_convexity=True)


def test_unbounded_ray_bracket_expansion(gaussian):
    line = restrict_to_line(gaussian.potential, [-40.0], [1.0])
    res = solve_truncated_arrival(line, 0.0, math.inf, math.exp(-3))
    assert res.tau == pytest.approx(40 + math.sqrt(6), abs=1e-9)
    assert np.isfinite(res.tau)
