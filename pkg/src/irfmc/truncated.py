"""Arrival times for convex potentials restricted to a box-shaped set.

Convexity along the line means one descending stretch followed by one
ascending stretch, so the rate integral is ``U(t) - U(t*)`` past the
minimiser ``t*`` and the arrival time needs a single bracketed inversion.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .arrival import MAX_DOUBLINGS, ArrivalDivergenceError, ArrivalResult, root_xtol
from .core import DomainError, DomainSet, LineSection


def line_domain_bounds(D: DomainSet, x, v) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if not D.contains(x):
        raise DomainError(f"{x} is not inside the truncation set")
    return D.ray_bounds(x, np.asarray(v, dtype=float))


def argmin_on_segment(line: LineSection, t_min: float, t_max: float) -> float:
    """Minimiser of a convex ``value`` on ``[t_min, t_max]`` by slope-sign bisection."""
    slope = line.slope
    if slope(t_min) >= 0:
        return t_min
    if math.isfinite(t_max):
        if slope(t_max) <= 0:
            return t_max
        lo, hi = t_min, t_max
    else:
        lo, hi = t_min, t_min + 1.0
        for _ in range(MAX_DOUBLINGS):
            if slope(hi) > 0:
                break
            lo, hi = hi, t_min + 2 * (hi - t_min)
        else:
            raise ArrivalDivergenceError("potential keeps decreasing along the ray")
    return float(brentq(slope, lo, hi, xtol=root_xtol(hi)))


def solve_truncated_arrival(line: LineSection, t_min: float, t_max: float, V: float,
                            check_convexity: bool = False) -> ArrivalResult:
    """Arrival time for uniform ``V``: invert ``U(t) - U(t*) = -log V`` past
    the minimiser, or clamp to ``t_max`` when the wall comes first."""
    if not 0 < V <= 1:
        raise ValueError("V must lie in (0, 1]")
    threshold = -math.log(V)
    if threshold == 0:
        return ArrivalResult(0.0, 0.0, False)
    if check_convexity:
        _midpoint_chord(line, t_min, t_max)
    t_star = argmin_on_segment(line, t_min, t_max)
    u_star = float(line.value(t_star))

    def excess(t):
        return line.value(t) - u_star - threshold

    if math.isfinite(t_max):
        rise = float(line.value(t_max)) - u_star
        if rise - threshold > 0:
            tau = brentq(excess, t_star, t_max, xtol=root_xtol(t_max))
            return ArrivalResult(float(tau), threshold, False)
        return ArrivalResult(float(t_max), max(rise, 0.0), True)

    lo = t_star
    hi = t_star + max(1.0, t_star)
    for _ in range(MAX_DOUBLINGS):
        if excess(hi) >= 0:
            break
        lo, hi = hi, t_star + 2 * (hi - t_star)
    else:
        raise ArrivalDivergenceError("potential bounded along an unbounded ray")
    return ArrivalResult(float(brentq(excess, lo, hi, xtol=root_xtol(hi))), threshold, False)


def _midpoint_chord(line: LineSection, t_min: float, t_max: float, n: int = 16) -> None:
    hi = t_max if math.isfinite(t_max) else t_min + 10.0
    t = np.linspace(t_min, hi, n + 1)
    f = np.asarray(line.value(t), dtype=float)
    mid = np.asarray(line.value((t[:-1] + t[1:]) / 2), dtype=float)
    if np.any(mid > (f[:-1] + f[1:]) / 2 + 1e-9 * (1 + np.abs(mid))):
        raise ValueError("potential fails the midpoint-chord convexity check on this line")
