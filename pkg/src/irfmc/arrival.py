"""First arrival of the Poisson process with rate ``(slope)_+`` along a line.

The integrated rate is never computed by quadrature. The line is cut into
pieces on which ``value`` is monotone; the integral of the positive part of
``slope`` is then the sum of the value increments over ascending pieces, and
the arrival time is an inversion of ``value`` on a single piece.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .core import LineSection

N_PROBES = 64
MAX_DOUBLINGS = 60
ROOT_TOL = 1e-12


class ArrivalDivergenceError(RuntimeError):
    """The integrated rate stays below the threshold on an unbounded ray."""


class ResolutionWarning(UserWarning):
    """The slope changes sign between probes more often than they resolve."""


@dataclass(frozen=True)
class MonotoneSegmentation:
    breakpoints: tuple
    signs: tuple

    def pieces(self):
        bp = self.breakpoints
        return zip(bp[:-1], bp[1:], self.signs)


@dataclass(frozen=True)
class ArrivalResult:
    tau: float
    total_mass_consumed: float
    clamped: bool = False


def root_xtol(t: float) -> float:
    return ROOT_TOL * (1.0 + abs(t))


@lru_cache(maxsize=8)
def _unit_probes(n: int) -> np.ndarray:
    k = n // 4
    geo = 2.0 ** -np.arange(1, k + 1)
    g = np.unique(np.concatenate([np.linspace(0.0, 1.0, n - 2 * k), geo, 1.0 - geo]))
    g.flags.writeable = False
    return g


def probe_grid(lo: float, hi: float, n: int = N_PROBES) -> np.ndarray:
    """Uniform probes plus geometric clusters toward both ends."""
    return lo + (hi - lo) * _unit_probes(n)


def _split(line: LineSection, lo: float, hi: float, n: int = N_PROBES):
    """Breakpoints and per-piece slope signs on ``[lo, hi]``."""
    t = probe_grid(lo, hi, n)
    s = np.sign(line.slope(t))
    nz = np.flatnonzero(s)
    flips = np.flatnonzero(s[nz[1:]] != s[nz[:-1]])
    bps = [lo]
    for c in flips:
        i, j = nz[c], nz[c + 1]
        if j == i + 1:
            root = brentq(line.slope, float(t[i]), float(t[j]), xtol=root_xtol(t[j]))
        else:
            # zero-slope probes between opposite signs
            root = float(t[i + 1])
        if root > bps[-1]:
            bps.append(root)
    if hi > bps[-1]:
        bps.append(hi)
    bps = np.asarray(bps)
    signs = np.sign(line.slope((bps[:-1] + bps[1:]) / 2)).astype(int)
    return bps, signs


def find_segmentation(line: LineSection, search_limit: float, start: float = 0.0,
                      validate: bool = True) -> MonotoneSegmentation:
    """Split ``[start, search_limit]`` into pieces of constant slope sign.

    With ``validate`` each piece is re-probed at 32 interior points and a
    :class:`ResolutionWarning` is emitted if a sign change was missed.
    """
    if not search_limit <= line.t_range[1]:
        raise ValueError("search_limit exceeds the ray's extent")
    if not math.isfinite(search_limit):
        raise ValueError("search_limit must be finite")
    bps, signs = _split(line, start, search_limit)
    if validate:
        for a, b, sgn in zip(bps[:-1], bps[1:], signs):
            inner = np.linspace(a, b, 34)[1:-1]
            s = np.sign(line.slope(inner))
            if np.any(s == -sgn) and sgn != 0 or (sgn == 0 and np.any(s != 0)):
                warnings.warn(
                    f"slope sign varies inside piece [{a:.6g}, {b:.6g}]; probe grid too coarse",
                    ResolutionWarning,
                    stacklevel=2,
                )
                break
    return MonotoneSegmentation(tuple(float(b) for b in bps), tuple(int(s) for s in signs))


def _piece_table(line: LineSection, k: int):
    """The k-th cached bracket of pieces: ``(lo, hi, bps, signs, values)``.

    Brackets cover ``[0, t_max]`` for bounded rays, and ``[0,1], [1,2],
    [2,4], ...`` for unbounded ones.
    """
    cache = line._pieces
    while len(cache) <= k:
        t_max = line.t_range[1]
        if not cache:
            lo, hi = 0.0, (t_max if math.isfinite(t_max) else 1.0)
        else:
            if math.isfinite(t_max):
                return None
            lo = cache[-1][1]
            hi = 2 * lo
        bps, signs = _split(line, lo, hi)
        cache.append((lo, hi, bps, signs, np.asarray(line.value(bps), dtype=float)))
    return cache[k]


def integrated_rate(line: LineSection, seg: MonotoneSegmentation, t: float) -> float:
    """Integral of ``(slope)_+`` over ``[0, t]`` from value increments."""
    lo, hi = seg.breakpoints[0], seg.breakpoints[-1]
    if not lo <= t <= hi:
        raise ValueError(f"t={t} outside segmentation range [{lo}, {hi}]")
    lam = 0.0
    for a, b, sgn in seg.pieces():
        if a >= t:
            break
        if sgn > 0:
            lam += max(float(line.value(min(t, b))) - float(line.value(a)), 0.0)
    return lam


def positive_variation(line: LineSection, t) -> np.ndarray:
    """Vectorised integrated rate ``Lambda(t)`` for ``t`` within cached range.

    Extends the piece cache as needed (unbounded rays double their horizon).
    """
    t = np.asarray(t, dtype=float)
    tmax = float(t.max()) if t.size else 0.0
    k = 0
    starts, ends, signs, vstart, cum = [], [], [], [], []
    acc = 0.0
    while True:
        tab = _piece_table(line, k)
        if tab is None:
            break
        lo, hi, bps, sg, vals = tab
        for j in range(len(sg)):
            starts.append(bps[j])
            ends.append(bps[j + 1])
            signs.append(sg[j])
            vstart.append(vals[j])
            cum.append(acc)
            if sg[j] > 0:
                acc += max(vals[j + 1] - vals[j], 0.0)
        if hi >= tmax:
            break
        k += 1
        if k > MAX_DOUBLINGS:
            raise ArrivalDivergenceError("horizon cap reached")
    if tmax > ends[-1]:
        raise ValueError("t beyond the ray's extent")
    starts = np.asarray(starts)
    idx = np.clip(np.searchsorted(starts, t, side="right") - 1, 0, len(starts) - 1)
    inc = np.where(np.asarray(signs)[idx] > 0,
                   np.maximum(line.value(t) - np.asarray(vstart)[idx], 0.0), 0.0)
    return np.asarray(cum)[idx] + inc


def solve_arrival(line: LineSection, threshold: float) -> ArrivalResult:
    """Smallest ``t`` with integrated rate ``>= threshold`` (``= -log V``).

    On a bounded ray whose total rate falls short, ``tau`` is clamped to the
    wall. On an unbounded ray the horizon doubles up to 60 times before
    :class:`ArrivalDivergenceError`.
    """
    if threshold < 0 or math.isnan(threshold):
        raise ValueError("threshold must be nonnegative")
    if threshold == 0:
        return ArrivalResult(0.0, 0.0, False)
    lam = 0.0
    for k in range(MAX_DOUBLINGS + 1):
        tab = _piece_table(line, k)
        if tab is None:
            break
        _, hi, bps, signs, vals = tab
        for j, sgn in enumerate(signs):
            if sgn <= 0:
                continue
            inc = max(vals[j + 1] - vals[j], 0.0)
            if lam + inc >= threshold:
                base, need = vals[j], threshold - lam
                a, b = bps[j], bps[j + 1]
                tau = brentq(lambda t: line.value(t) - base - need, a, b, xtol=root_xtol(b))
                return ArrivalResult(float(tau), threshold, False)
            lam += inc
    else:
        raise ArrivalDivergenceError(
            f"integrated rate {lam:.6g} < threshold {threshold:.6g} after {MAX_DOUBLINGS} doublings"
        )
    return ArrivalResult(float(line.t_range[1]), lam, True)
