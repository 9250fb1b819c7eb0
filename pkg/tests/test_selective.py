import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from irfmc.core import SampleBatch, check_gradient, make_rng, restrict_to_line
from irfmc.diagnostics import ks_distance
from irfmc.selective import (OptVariables, Randomization, ReliabilityWarning, ReplicateConfig, SelectiveProblem,
                             default_scales, kkt_reconstruct, kkt_residual, naive_inference, pvalues_and_intervals,
                             run_replicate, sample_opt_variables, selective_potential, simulate_equicorrelated,
                             solve_randomized_lasso)


def _problem(kind="gaussian", seed=0, n=100, p=40, lam=1.4):
    X, y = simulate_equicorrelated(n, p, 0.3, seed)
    eps, s = default_scales(y)
    g = Randomization(kind, s)
    omega = g.sample(make_rng(seed + 1000), p)
    return SelectiveProblem(X, y, lam, eps, g, omega)


def _selected(kind="gaussian"):
    for seed in range(50):
        prob = _problem(kind, seed)
        beta, ev = solve_randomized_lasso(prob)
        if ev is not None and ev.size >= 2:
            return prob, beta, ev
    raise AssertionError("no replicate selected two variables")


def _scalar_problem(y, omega, lam=0.5, eps=0.1, s=0.5):
    x = np.ones((y.size, 1)) / math.sqrt(y.size)
    return SelectiveProblem(x, y, lam, eps, Randomization("gaussian", s), np.array([omega]))


def test_huge_penalty_selects_nothing():
    X, y = simulate_equicorrelated(50, 10, 0.3, 1)
    prob = SelectiveProblem(X, y, 1e6, 0.1, Randomization("gaussian", 0.5), np.zeros(10))
    beta, ev = solve_randomized_lasso(prob)
    assert ev is None and np.all(beta == 0)


def test_scalar_solution_matches_closed_form():
    rng = make_rng(2)
    for _ in range(20):
        y = rng.normal(0.5, 1, 30)
        omega = rng.normal(0, 0.5)
        prob = _scalar_problem(y, omega)
        z = float(prob.X[:, 0] @ y) + omega
        exact = math.copysign(max(abs(z) - 0.5, 0.0), z) / 1.1
        beta, _ = solve_randomized_lasso(prob)
        assert beta[0] == pytest.approx(exact, abs=1e-10)


def test_scalar_kkt_reduction():
    y = make_rng(3).normal(1.0, 1, 30)
    prob = _scalar_problem(y, 0.3)
    beta, ev = solve_randomized_lasso(prob)
    assert ev is not None
    b = float(beta[0])
    s = math.copysign(1.0, b)
    o = OptVariables(np.array([b + 0.2 * s]), np.array([]))
    expected = -float(prob.X[:, 0] @ y) + 1.1 * (b + 0.2 * s) + 0.5 * s
    assert kkt_reconstruct(ev, o)[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("kind", ["gaussian", "laplace"])
def test_kkt_round_trip(kind):
    for seed in range(10):
        prob = _problem(kind, seed)
        beta, ev = solve_randomized_lasso(prob)
        assert kkt_residual(prob, beta) < 1e-8
        if ev is None:
            continue
        assert np.array_equal(np.sign(beta[ev.E]), ev.signs)
        assert ev.D.size == prob.X.shape[1]
        assert np.abs(kkt_reconstruct(ev, ev.observed, prob.X) - prob.omega).max() < 1e-8


def test_reconstruct_rejects_mismatched_dimensions():
    prob, _, ev = _selected()
    with pytest.raises(ValueError):
        kkt_reconstruct(ev, OptVariables(ev.observed.beta_E[:-1], ev.observed.u_minus_E))
    with pytest.raises(ValueError):
        kkt_reconstruct(ev, ev.observed, prob.X[:, :-1])


def test_majority_of_null_replicates_select():
    hits = sum(solve_randomized_lasso(_problem("gaussian", seed))[1] is not None for seed in range(20))
    assert hits > 10


@pytest.mark.parametrize("kind", ["gaussian", "laplace"])
def test_potential_gradient_and_convexity(kind):
    prob, _, ev = _selected(kind)
    pot = selective_potential(ev, prob=prob)
    rng = make_rng(5)
    x0 = ev.observed.stacked()
    for _ in range(10):
        x = x0 + rng.normal(0, 1e-3, x0.size)
        assert pot.domain.contains(x)
        assert check_gradient(pot, x) < 1e-5
    for _ in range(20):
        v = rng.standard_normal(x0.size)
        v /= np.linalg.norm(v)
        a, b = pot.domain.ray_bounds(x0, v)
        t = np.sort(rng.uniform(max(a, -1), min(b, 1), 2))
        line = restrict_to_line(pot, x0, v)
        mid = float(line.value(t.mean()))
        assert mid <= 0.5 * (float(line.value(t[0])) + float(line.value(t[1]))) + 1e-9
        # fast line closure agrees with the full potential
        assert float(line.value(t[0])) == pytest.approx(float(pot.u(x0 + t[0] * v)), rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("kind", ["gaussian", "laplace"])
def test_samples_obey_strict_constraints_and_are_seeded(kind):
    prob, _, ev = _selected(kind)
    a = sample_opt_variables(ev, prob, 500, seed=3).positions
    k = ev.size
    assert np.all(np.sign(a[:, :k]) == ev.signs)
    assert np.all(np.abs(a[:, k:]) < prob.lasso_penalty)
    assert np.array_equal(a, sample_opt_variables(ev, prob, 500, seed=3).positions)


def test_scalar_marginal_matches_quadrature():
    y = make_rng(6).normal(0.3, 1, 30)
    prob = _scalar_problem(y, 0.2)
    _, ev = solve_randomized_lasso(prob)
    pot = selective_potential(ev, prob=prob)
    sgn = float(ev.signs[0])

    def dens(b):
        return math.exp(-float(pot.u(np.array([b]))))

    # dense quadrature of exp(-U) over the orthant, truncated where the mass is negligible
    far = quad(dens, 0.0, sgn * np.inf)[0] if sgn > 0 else quad(dens, -np.inf, 0.0)[0]
    grid = np.linspace(0.0, sgn * 20.0, 400_001)
    if sgn < 0:
        grid = grid[::-1]
    mass = np.concatenate([[0.0], np.cumsum(0.5 * (np.exp(-pot.u(grid[1:, None])) +
                                                   np.exp(-pot.u(grid[:-1, None]))) * np.diff(grid))])
    assert mass[-1] == pytest.approx(far, rel=1e-6)

    def cdf(q):
        return np.interp(q, grid, mass / mass[-1])

    x = sample_opt_variables(ev, prob, 20_000, seed=4).positions[:, 0]
    assert ks_distance(x, cdf) < 0.03


def test_pvalues_intervals_properties():
    prob, _, ev = _selected()
    batch = sample_opt_variables(ev, prob, 1000, seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReliabilityWarning)
        r80 = pvalues_and_intervals(batch, ev, prob.X, prob, level=0.8)
        r95 = pvalues_and_intervals(batch, ev, prob.X, prob, level=0.95)
    for a, b in zip(r80, r95):
        assert 0 <= a.pvalue <= 1 and a.pvalue == b.pvalue
        assert math.isfinite(a.lower) and math.isfinite(a.upper)
        assert b.lower <= a.lower <= a.upper <= b.upper
    with pytest.raises(ValueError):
        pvalues_and_intervals(SampleBatch(np.empty((0, batch.positions.shape[1]))), ev, prob.X, prob)


def test_degenerate_weights_raise_reliability_warning():
    prob, _, ev = _selected()
    batch = sample_opt_variables(ev, prob, 10, seed=1)
    with pytest.warns(ReliabilityWarning):
        res = pvalues_and_intervals(batch, ev, prob.X, prob)
    assert not all(r.reliable for r in res)


def test_naive_intervals_are_normal_quantiles():
    _, _, ev = _selected()
    for r in naive_inference(ev, level=0.9):
        assert r.upper - r.estimate == pytest.approx(1.6448536269514722 * r.std_error)


def test_equicorrelated_design():
    X, y = simulate_equicorrelated(100, 40, 0.3, 0)
    assert np.allclose(np.linalg.norm(X, axis=0), 1, atol=1e-12)
    off = (X.T @ X)[~np.eye(40, dtype=bool)]
    assert 0.15 < off.mean() < 0.45
    X0, _ = simulate_equicorrelated(100, 40, 0.0, 0)
    assert abs((X0.T @ X0)[~np.eye(40, dtype=bool)].mean()) < 0.05
    with pytest.raises(ValueError):
        simulate_equicorrelated(10, 3, 1.0)


def test_default_scales_formulas():
    y = np.array([1.0, -1.0] * 50)
    y *= 1 / np.std(y, ddof=1)
    assert default_scales(y) == pytest.approx((0.1, 0.5))
    y = np.array([2.0, -2.0] * 200)
    y *= 2 / np.std(y, ddof=1)
    assert default_scales(y) == pytest.approx((0.2, 1.0))
    with pytest.raises(ValueError):
        default_scales(np.full(10, 3.0))


def test_problem_validation():
    with pytest.raises(ValueError):
        SelectiveProblem(np.ones((4, 2)), np.zeros(4), 1.0, 0.1, Randomization("gaussian", 1), np.zeros(2))
    with pytest.raises(ValueError):
        Randomization("cauchy", 1.0)


def test_replicate_is_deterministic():
    cfg = ReplicateConfig(steps=200, langevin_steps=200)
    seq = np.random.SeedSequence(11).spawn(1)[0]
    a = run_replicate(seq, cfg)
    b = run_replicate(np.random.SeedSequence(11).spawn(1)[0], cfg)
    a.pop("timings"), b.pop("timings")
    assert a == b
