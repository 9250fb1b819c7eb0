"""Empirical checks (KS, ECDF, histogram, ESS) and quadrature checks that a
kernel leaves ``e^{-U}`` invariant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import ks_2samp

from .arrival import positive_variation
from .core import LineSection

QUAD_FLAG_TOL = 1e-3


def ks_distance(samples, cdf) -> float:
    """Sup distance between the ECDF of ``samples`` and a continuous ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ks_two_sample(a, b) -> float:
    return float(ks_2samp(np.ravel(a), np.ravel(b)).statistic)


def ecdf(samples):
    """Right-continuous step function ``t -> #{x_i <= t} / n``."""
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if x.size == 0:
        raise ValueError("no samples")
    return lambda t: np.searchsorted(x, t, side="right") / x.size


def histogram(samples, bins=50, range=None):
    return np.histogram(np.ravel(samples), bins=bins, range=range)


def _autocorr(x):
    n = x.size
    x = x - x.mean()
    f = np.fft.rfft(x, 2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n] / n
    return acov / acov[0]


def ess(samples):
    """Effective sample size by Geyer's initial monotone sequence.

    A ``(n, d)`` array gives one value per column.
    """
    a = np.asarray(samples, dtype=float)
    if a.ndim == 2:
        return np.array([ess(a[:, j]) for j in range(a.shape[1])])
    n = a.size
    if n < 4:
        raise ValueError("need at least 4 samples")
    if np.all(a == a[0]):
        return 1.0
    rho = _autocorr(a)
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(1)
    stop = np.flatnonzero(pairs <= 0)
    pairs = pairs[: stop[0] if stop.size else pairs.size]
    pairs = np.minimum.accumulate(pairs)
    tau = -1.0 + 2.0 * pairs.sum()
    return float(n / max(tau, 1.0 / n))


# ---------------------------------------------------------------- stationarity


@dataclass(frozen=True)
class StationarityResult:
    residual: float
    quadrature_error: float
    flagged: bool

    def __float__(self):
        return self.residual


def _nodes(a, b, n):
    """Midpoint nodes and weights on ``[a, b]`` after the map
    ``s -> (1 - cos(pi s)) / 2``, which squeezes nodes quadratically toward
    both ends and tames integrable endpoint singularities."""
    s = (np.arange(n) + 0.5) / n
    w = b - a
    x = a + w * (1 - np.cos(np.pi * s)) / 2
    return x, w * np.pi / 2 * np.sin(np.pi * s) / n


def _window(target):
    lo, hi = target.window
    return float(lo), float(hi)


def _test_points(target, m):
    a, b = target.test_window
    w = b - a
    # keep clear of the centre, where uniform-type targets have a kink
    return np.linspace(a, b, m) + 0.1234 * w / m


class _Kernel:
    """Density and atom parts of a one-step kernel on a 1-D target."""

    def __init__(self, target, lo, hi):
        self.lo_dom, self.hi_dom = target.lower, target.upper
        self.lo, self.hi = lo, hi
        self.f = target.f
        fmin = np.min(self.f(np.linspace(lo, hi, 4001)[1:-1]))
        self.fmin = float(fmin)

    def log_pi(self, x):
        return -(self.f(x) - self.fmin)


class _MainKernel(_Kernel):
    def __init__(self, target, lo, hi, z_lo, z_hi, positive_part=True):
        super().__init__(target, lo, hi)
        self.df = target.df
        self.pos = positive_part
        self.z0 = z_lo
        f, df = target.f, target.df
        self.line = LineSection(np.array([z_lo]), np.array([1.0]), lambda t: f(z_lo + t),
                                lambda t: df(z_lo + t), (0.0, z_hi - z_lo))
        self.z_hi = z_hi

    def P(self, z):
        z = np.asarray(z, dtype=float)
        if self.pos:
            return positive_variation(self.line, np.clip(z - self.z0, 0.0, self.z_hi - self.z0))
        return self.f(z) - self.f(self.z0)

    def N(self, z):
        # integral of the negative part of U' from z_lo to z
        return self.P(z) - (self.f(z) - self.f(self.z0))

    def right(self, x, y):
        z = 2 * y - x
        ok = z < self.hi_dom
        zc = np.where(ok, z, x)
        rate = self.df(zc)
        rate = np.maximum(rate, 0.0) if self.pos else rate
        return np.where(ok, rate * np.exp(-(self.P(zc) - self.P(x))), 0.0)

    def left(self, x, y):
        z = 2 * y - x
        ok = z > self.lo_dom
        zc = np.where(ok, z, x)
        rate = -self.df(zc)
        rate = np.maximum(rate, 0.0) if self.pos else rate
        return np.where(ok, rate * np.exp(-(self.N(x) - self.N(zc))), 0.0)

    def atoms(self, y):
        out = 0.0
        if math.isfinite(self.hi_dom):
            xa = 2 * y - self.hi_dom
            if self.lo_dom < xa < self.hi_dom:
                out += math.exp(self.log_pi(xa) - float(self.P(self.hi_dom) - self.P(xa)))
        if math.isfinite(self.lo_dom):
            xb = 2 * y - self.lo_dom
            if self.lo_dom < xb < self.hi_dom:
                out += math.exp(self.log_pi(xb) - float(self.N(xb) - self.N(self.lo_dom)))
        return out


class _SplitKernel(_Kernel):
    def __init__(self, target, dec, lo, hi, full_step=False):
        super().__init__(target, lo, hi)
        self.dec = dec
        self.full = full_step

    def _landing(self, x, y):
        return y if self.full else 2 * y - x

    def right(self, x, y):
        d = self.dec
        z = self._landing(x, y)
        ok = z < self.hi_dom
        zc = np.where(ok, z, x)
        dens = d.d1(zc) * np.exp(-(d.u1(zc) - d.u1(x)))
        # a full step has no factor-2 Jacobian; halve to keep direction weight
        return np.where(ok, dens / 2 if self.full else dens, 0.0)

    def left(self, x, y):
        d = self.dec
        z = self._landing(x, y)
        ok = z > self.lo_dom
        zc = np.where(ok, z, x)
        dens = -d.d2(zc) * np.exp(-(d.u2(zc) - d.u2(x)))
        return np.where(ok, dens / 2 if self.full else dens, 0.0)

    def atoms(self, y):
        if self.full:
            return 0.0
        d = self.dec
        out = 0.0
        if math.isfinite(self.hi_dom):
            xa = 2 * y - self.hi_dom
            if self.lo_dom < xa < self.hi_dom:
                out += math.exp(self.log_pi(xa) - float(d.u1(self.hi_dom) - d.u1(xa)))
        if math.isfinite(self.lo_dom):
            xb = 2 * y - self.lo_dom
            if self.lo_dom < xb < self.hi_dom:
                out += math.exp(self.log_pi(xb) - float(d.u2(self.lo_dom) - d.u2(xb)))
        return out


def _pieces(lo, hi, cuts):
    pts = sorted({lo, hi, *(c for c in cuts if lo < c < hi)})
    return list(zip(pts[:-1], pts[1:]))


def _integrate(fn, lo, hi, cuts, grid, span):
    total = 0.0
    for a, b in _pieces(lo, hi, cuts):
        x, w = _nodes(a, b, max(8, int(round(grid * (b - a) / span))))
        total += float(np.sum(fn(x) * w))
    return total


def _invariance_gap(kernel, ys, grid):
    """``int pi(x) K(x, y) dx - pi(y)`` at each ``y``, with ``pi`` normalized.

    The x-range is split at ``y`` and where ``2y - x`` crosses a domain wall,
    the two places the integrand jumps.
    """
    lo, hi = kernel.lo, kernel.hi
    span = hi - lo
    pi = lambda x: np.exp(kernel.log_pi(x))  # noqa: E731
    Z = _integrate(pi, lo, hi, (), grid, span)
    gaps = []
    for y in ys:
        cuts = (2 * y - kernel.hi_dom, 2 * y - kernel.lo_dom)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            mass = _integrate(lambda x: pi(x) * kernel.right(x, y), lo, y, cuts, grid, span)
            mass += _integrate(lambda x: pi(x) * kernel.left(x, y), y, hi, cuts, grid, span)
        mass += kernel.atoms(y)
        gaps.append((mass - math.exp(float(kernel.log_pi(y)))) / Z)
    return np.array(gaps)


def _certify(make_kernel, ys, grid) -> StationarityResult:
    k = make_kernel()
    full = _invariance_gap(k, ys, grid)
    half = _invariance_gap(k, ys, grid // 2)
    qerr = float(np.max(np.abs(full - half)))
    return StationarityResult(float(np.max(np.abs(full))), qerr, qerr > QUAD_FLAG_TOL)


def stationarity_residual_main(target, grid: int = 2001, test_points: int = 21,
                               positive_part: bool = True) -> StationarityResult:
    """Invariance defect of the half-step kernel for a 1-D target.

    ``positive_part=False`` swaps the integrated positive rate for the plain
    potential difference, which breaks invariance (negative control).
    """
    lo, hi = _window(target)
    ys = _test_points(target, test_points)
    z_lo = max(target.lower, min(lo, 2 * ys.min() - hi))
    z_hi = min(target.upper, max(hi, 2 * ys.max() - lo))
    if math.isfinite(target.lower):
        z_lo = target.lower
    if math.isfinite(target.upper):
        z_hi = target.upper
    return _certify(lambda: _MainKernel(target, lo, hi, z_lo, z_hi, positive_part), ys, grid)


def stationarity_residual_decomposed(target, grid: int = 2001, test_points: int = 21,
                                     full_step: bool = False) -> StationarityResult:
    """Same check for the split ``U = U1 + U2`` sampler of ``target``.

    ``full_step=True`` moves the whole arrival time instead of half of it
    (negative control).
    """
    if target.decomposition is None:
        raise ValueError(f"{target.name} has no registered decomposition")
    lo, hi = _window(target)
    ys = _test_points(target, test_points)
    return _certify(lambda: _SplitKernel(target, target.decomposition, lo, hi, full_step), ys, grid)
