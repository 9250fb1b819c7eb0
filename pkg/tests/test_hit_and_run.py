import math

import numpy as np
import pytest

from irfmc.core import ChainState, DomainSet, Potential, make_rng
from irfmc.diagnostics import ks_distance
from irfmc.distributions import get_target
from irfmc.hit_and_run import SamplerConfig, default_start, run, step, transition, transition_function_surface
from scipy.special import ndtr


def test_uniform_moves_to_wall_midpoints():
    t = get_target("uniform:0:1")
    x = 0.3
    assert transition(t.potential, [x], [1.0], 0.42)[0] == pytest.approx((x + 1) / 2)
    assert transition(t.potential, [x], [-1.0], 0.42)[0] == pytest.approx(x / 2)
    rng = make_rng(9)
    nxt = [step(t.potential, ChainState(np.array([x]), rng)).position[0] for _ in range(4000)]
    right = np.isclose(nxt, (x + 1) / 2)
    assert np.all(right | np.isclose(nxt, x / 2))
    assert abs(right.mean() - 0.5) < 4 * 0.5 / math.sqrt(4000)


def test_gaussian_transition_examples(gaussian):
    p = gaussian.potential
    assert transition(p, [-1.0], [1.0], math.exp(-0.5))[0] == pytest.approx(0.0, abs=1e-10)
    surf = transition_function_surface(p, -1.0, [1.0, math.exp(-0.5)])
    assert surf[0, 0] == -1.0 and surf[1, 0] == -1.0
    assert surf[1, 1] == pytest.approx(0.0, abs=1e-10)
    assert surf[0, 1] == pytest.approx(-1 - (math.sqrt(2) - 1) / 2, abs=1e-10)


def test_run_is_deterministic_and_handles_zero_steps(beta22):
    a = run(beta22.potential, SamplerConfig(500, seed=3))
    b = run(beta22.potential, SamplerConfig(500, seed=3))
    assert np.array_equal(a.positions, b.positions)
    assert len(run(beta22.potential, SamplerConfig(0))) == 0
    c = run(beta22.potential, SamplerConfig(500, seed=4))
    assert not np.array_equal(a.positions, c.positions)


def test_samples_stay_strictly_inside():
    for name in ("beta:0.5:0.5", "beta:2:0.5", "truncnorm:0:1:1:3", "uniform:0:1"):
        t = get_target(name)
        x = run(t.potential, SamplerConfig(3000, seed=1)).positions[:, 0]
        assert np.all((x > t.lower) & (x < t.upper))


def test_two_dimensional_gaussian():
    p = Potential(2, DomainSet.full(2), lambda x: 0.5 * (np.asarray(x) ** 2).sum(-1), lambda x: np.asarray(x, float),
                  convex=True)
    batch = run(p, SamplerConfig(50_000, seed=5))
    for j in range(2):
        assert ks_distance(batch.positions[:, j], ndtr) < 0.02


def test_beta32_marginal():
    t = get_target("beta:3:2")
    batch = run(t.potential, SamplerConfig(50_000, seed=8), x0=[0.5])
    assert ks_distance(batch.positions, t.cdf) < 0.02


def test_axis_hold_keeps_the_target():
    p = Potential(2, DomainSet.full(2), lambda x: 0.5 * (np.asarray(x) ** 2).sum(-1), lambda x: np.asarray(x, float),
                  convex=True)
    for k in (1, 5):
        batch = run(p, SamplerConfig(30_000, seed=6, axis_hold=k))
        assert ks_distance(batch.positions[:, 0], ndtr) < 0.03


def test_chain_is_not_reversible(gaussian):
    x = run(gaussian.potential, SamplerConfig(200_000, seed=12)).positions[:, 0]
    a = (x[:-1] >= 0) & (x[:-1] <= 0.5) & (x[1:] >= 1) & (x[1:] <= 1.5)
    b = (x[:-1] >= 1) & (x[:-1] <= 1.5) & (x[1:] >= 0) & (x[1:] <= 0.5)
    diff = a.astype(float) - b.astype(float)
    se = diff.std() / math.sqrt(diff.size)
    assert abs(diff.mean()) > 3 * se


def test_default_start_and_config_validation(gaussian):
    assert default_start(get_target("beta:2:2").potential)[0] == 0.5
    assert abs(default_start(get_target("gaussian:3:1").potential)[0] - 3) < 0.1
    with pytest.raises(ValueError):
        SamplerConfig(10, axis_hold=0)
    with pytest.raises(ValueError):
        run(get_target("beta:2:2").potential, SamplerConfig(10), x0=[1.5])
