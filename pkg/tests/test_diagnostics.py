import numpy as np
import pytest
from scipy.special import ndtr, ndtri

from irfmc.core import make_rng
from irfmc.diagnostics import (ecdf, ess, histogram, ks_distance, ks_two_sample, stationarity_residual_decomposed,
                               stationarity_residual_main)
from irfmc.distributions import ZOO, get_target


def test_ks_inverse_transform_sample():
    u = make_rng(0).random(100_000)
    assert ks_distance(ndtri(u), ndtr) < 0.006


def test_ks_degenerate_and_empty():
    assert ks_distance(np.zeros(100), ndtr) >= 0.5
    with pytest.raises(ValueError):
        ks_distance([], ndtr)


def test_two_sample_ks_matches_brute_force():
    rng = make_rng(1)
    a, b = rng.normal(size=300), rng.normal(0.2, 1, size=200)
    grid = np.sort(np.concatenate([a, b]))
    brute = np.max(np.abs(ecdf(a)(grid) - ecdf(b)(grid)))
    assert ks_two_sample(a, b) == pytest.approx(brute)


def test_ecdf_steps():
    f = ecdf([3.0, 1.0, 2.0, 4.0])
    assert list(f(np.array([0.5, 1.0, 2.5, 4.0]))) == [0.0, 0.25, 0.5, 1.0]


def test_histogram_uniform_counts():
    counts, _ = histogram(make_rng(2).random(100_000), bins=20, range=(0, 1))
    expected = 100_000 / 20
    sd = np.sqrt(expected * (1 - 1 / 20))
    assert np.all(np.abs(counts - expected) < 4 * sd)


def test_ess_iid_and_ar1():
    x = make_rng(3).standard_normal(20_000)
    assert 0.8 < ess(x) / x.size < 1.2
    rng = make_rng(4)
    phi, n = 0.9, 50_000
    y = np.empty(n)
    y[0] = 0.0
    e = rng.standard_normal(n)
    for i in range(1, n):
        y[i] = phi * y[i - 1] + e[i]
    # exact integrated autocorrelation time (1 + phi) / (1 - phi) = 19
    assert ess(y) / n == pytest.approx(1 / 19, rel=0.25)
    assert ess(np.column_stack([x[:1000], x[1000:2000]])).shape == (2,)


def test_stationarity_gaussian_and_beta():
    for name in ("gaussian:0:1", "beta:2:2"):
        t = get_target(name)
        assert stationarity_residual_main(t).residual < 1e-4
        assert stationarity_residual_decomposed(t).residual < 1e-4


def test_negative_controls_fail():
    t = get_target("gaussian:0:1")
    assert stationarity_residual_main(t, positive_part=False).residual > 1e-2
    assert stationarity_residual_decomposed(t, full_step=True).residual > 1e-2


def test_mixture_split_residual():
    assert stationarity_residual_decomposed(get_target("mixture:0.5:0:4:1")).residual < 1e-3


@pytest.mark.parametrize("name", ZOO)
def test_every_target_both_kernels(name):
    t = get_target(name)
    main = stationarity_residual_main(t)
    split = stationarity_residual_decomposed(t)
    assert main.residual < 1e-3 and not main.flagged
    assert split.residual < 1e-3 and not split.flagged


def test_coarse_grid_is_flagged():
    res = stationarity_residual_main(get_target("beta:0.5:2"), grid=60)
    assert res.flagged
