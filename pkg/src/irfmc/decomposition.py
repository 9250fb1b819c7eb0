"""Univariate sampler for ``U = U1 + U2`` with ``U1`` increasing, ``U2`` decreasing.

Moving right, the arrival rate is ``U1'`` and the arrival time is
``U1^{-1}(U1(x) - log V) - x``; moving left it is ``x - U2^{-1}(U2(x) - log V)``.
No stationary points need to be located. Where the inverse target exceeds
the range of ``U1`` (``U2``) on a bounded domain, the move is clamped at the
wall.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import SampleBatch, make_rng

FD_STEP = 1e-7
MAX_BISECT = 200
MAX_DOUBLINGS = 60


@dataclass(frozen=True)
class MonotoneDecomposition:
    """Registered split of a 1-D potential on the open interval ``(lower, upper)``.

    ``inv1(y)`` must return ``inf{z : u1(z) >= y}`` (``-inf`` if ``u1`` already
    reaches ``y`` everywhere, ``>= upper`` if it never does); ``inv2(y)``
    returns ``sup{z : u2(z) >= y}``. Missing inverses are computed by
    bisection.
    """

    u1: Callable
    u2: Callable
    lower: float = -math.inf
    upper: float = math.inf
    inv1: Optional[Callable] = None
    inv2: Optional[Callable] = None
    du1: Optional[Callable] = None
    du2: Optional[Callable] = None
    name: str = ""

    def d1(self, z):
        if self.du1 is not None:
            return self.du1(z)
        return (self.u1(z + FD_STEP) - self.u1(z - FD_STEP)) / (2 * FD_STEP)

    def d2(self, z):
        if self.du2 is not None:
            return self.du2(z)
        return (self.u2(z + FD_STEP) - self.u2(z - FD_STEP)) / (2 * FD_STEP)

    def potential(self, z):
        return self.u1(z) + self.u2(z)


def invert_monotone(f: Callable, y: float, bracket, increasing: bool = True,
                    tol: float = 1e-12) -> tuple[float, bool]:
    """Generalised inverse of a monotone ``f`` on ``[a, b]`` by bisection.

    Increasing ``f``: the smallest ``z`` with ``f(z) >= y``. Decreasing
    ``f``: the largest such ``z``. If ``y`` is not bracketed the nearer
    endpoint comes back with ``clamped=True``.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if not a < b:
        raise ValueError("bracket must satisfy a < b")
    if increasing:
        fa = f(a)
        if fa >= y:
            return a, fa > y
        if f(b) < y:
            return b, True
        lo, hi = a, b  # f(lo) < y <= f(hi)
        for _ in range(MAX_BISECT):
            if hi - lo <= tol * (1 + abs(hi)):
                break
            mid = 0.5 * (lo + hi)
            if f(mid) >= y:
                hi = mid
            else:
                lo = mid
        return hi, False
    fb = f(b)
    if fb >= y:
        return b, fb > y
    if f(a) < y:
        return a, True
    lo, hi = a, b  # f(lo) >= y > f(hi)
    for _ in range(MAX_BISECT):
        if hi - lo <= tol * (1 + abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        if f(mid) >= y:
            lo = mid
        else:
            hi = mid
    return lo, False


def _reach_right(f, y, x, upper):
    """``inf{z >= x : f(z) >= y}`` for increasing ``f``; ``None`` if never reached."""
    if math.isfinite(upper):
        z, clamped = invert_monotone(f, y, (x, upper), increasing=True)
        return None if clamped and z == upper else z
    w = 1.0
    for _ in range(MAX_DOUBLINGS):
        if f(x + w) >= y:
            return invert_monotone(f, y, (x, x + w), increasing=True)[0]
        w *= 2
    return None


def _reach_left(f, y, x, lower):
    if math.isfinite(lower):
        z, clamped = invert_monotone(f, y, (lower, x), increasing=False)
        return None if clamped and z == lower else z
    w = 1.0
    for _ in range(MAX_DOUBLINGS):
        if f(x - w) >= y:
            return invert_monotone(f, y, (x - w, x), increasing=False)[0]
        w *= 2
    return None


def decomposed_tau(dec: MonotoneDecomposition, x: float, v: int, V: float) -> float:
    """Arrival time for direction ``v = +-1`` and uniform ``V``."""
    threshold = -math.log(V)
    if v > 0:
        y = float(dec.u1(x)) + threshold
        if dec.inv1 is not None:
            z = float(dec.inv1(y))
            z = None if not z < dec.upper else z
        else:
            z = _reach_right(dec.u1, y, x, dec.upper)
        if z is None:
            if not math.isfinite(dec.upper):
                raise OverflowError("U1 never reaches the arrival level on an unbounded domain")
            return dec.upper - x
        return max(z, x) - x
    y = float(dec.u2(x)) + threshold
    if dec.inv2 is not None:
        z = float(dec.inv2(y))
        z = None if not z > dec.lower else z
    else:
        z = _reach_left(dec.u2, y, x, dec.lower)
    if z is None:
        if not math.isfinite(dec.lower):
            raise OverflowError("U2 never reaches the arrival level on an unbounded domain")
        return x - dec.lower
    return x - min(z, x)


def decomposed_move(dec: MonotoneDecomposition, x: float, v: int, V: float) -> float:
    return x + v * decomposed_tau(dec, x, v, V) / 2


def step_decomposed(dec: MonotoneDecomposition, x: float, rng: np.random.Generator) -> float:
    v = -1 if rng.random() < 0.5 else 1
    V = 1.0 - rng.random()
    return decomposed_move(dec, x, v, V)


def run_decomposed(dec: MonotoneDecomposition, steps: int, seed=0, x0: float = None,
                   burn_in: int = 0) -> SampleBatch:
    rng = make_rng(seed)
    if x0 is None:
        if math.isfinite(dec.lower) and math.isfinite(dec.upper):
            x0 = 0.5 * (dec.lower + dec.upper)
        else:
            x0 = 0.0 if not math.isfinite(dec.lower) else dec.lower + 1.0
    x = float(x0)
    out = np.empty((steps, 1))
    start = time.perf_counter()
    for n in range(burn_in + steps):
        x = step_decomposed(dec, x, rng)
        if n >= burn_in:
            out[n - burn_in, 0] = x
    return SampleBatch(out, seed, dec.name, "decomposed", time.perf_counter() - start)


def kernel_density_decomposed(dec: MonotoneDecomposition, x, y):
    """Density part of the one-step kernel at ``y != x`` (broadcasts)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x == y):
        raise ValueError("kernel density is undefined on the diagonal y == x")
    z = 2 * y - x
    inside = (z > dec.lower) & (z < dec.upper)
    zc = np.where(inside, z, x)
    with np.errstate(over="ignore", invalid="ignore"):
        right = dec.d1(zc) * np.exp(-dec.u1(zc) + dec.u1(x))
        left = -dec.d2(zc) * np.exp(-dec.u2(zc) + dec.u2(x))
    return np.where(inside, np.where(y > x, right, left), 0.0)
