"""Worked 1-D targets: potentials, decompositions, reference CDFs, closed-form tau.

Names for the CLI registry: ``uniform:a:b``, ``gaussian:mu:var``,
``beta:alpha:beta``, ``mixture:w1:mu1:mu2:var``, ``truncnorm:mu:var:lo:hi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq
from scipy.special import betainc, betaln, expit, ndtr

from .core import DomainSet, Potential, potential_1d
from .decomposition import MonotoneDecomposition

BETA_EPS = 1e-12


@dataclass(frozen=True)
class TargetSpec:
    name: str
    potential: Potential
    f: Callable
    df: Callable
    cdf: Callable
    pdf: Callable
    decomposition: Optional[MonotoneDecomposition] = None
    tau_rule: Optional[Callable] = None
    mean: Optional[float] = None
    window: tuple = (-math.inf, math.inf)
    test_window: tuple = (-math.inf, math.inf)
    ks_tol: float = 0.02

    @property
    def lower(self) -> float:
        return float(self.potential.domain.lower[0])

    @property
    def upper(self) -> float:
        return float(self.potential.domain.upper[0])


def _zero(z):
    return np.zeros_like(np.asarray(z, dtype=float))


def _never_above(lo_val):
    """Generalised inverse of a constant ``c`` for an increasing piece."""
    return lambda y: -math.inf if y <= lo_val else math.inf


def _never_below(lo_val):
    return lambda y: math.inf if y <= lo_val else -math.inf


# ---------------------------------------------------------------- uniform


def make_uniform(a: float = 0.0, b: float = 1.0) -> TargetSpec:
    if not a < b:
        raise ValueError("need a < b")
    dec = MonotoneDecomposition(_zero, _zero, a, b, _never_above(0.0), _never_below(0.0), _zero, _zero,
                                name=f"uniform:{a:g}:{b:g}")

    def tau(x, v, V):
        return b - x if v > 0 else x - a

    w = b - a
    return TargetSpec(
        name=f"uniform:{a:g}:{b:g}",
        potential=potential_1d(_zero, _zero, DomainSet.interval(a, b), convex=True, name=f"uniform:{a:g}:{b:g}"),
        f=_zero,
        df=_zero,
        cdf=lambda x: np.clip((np.asarray(x, dtype=float) - a) / w, 0.0, 1.0),
        pdf=lambda x: np.where((np.asarray(x) > a) & (np.asarray(x) < b), 1.0 / w, 0.0),
        decomposition=dec,
        tau_rule=tau,
        mean=(a + b) / 2,
        window=(a, b),
        test_window=(a + 0.02 * w, b - 0.02 * w),
    )


# ---------------------------------------------------------------- gaussian


def gaussian_tau(mu: float, var: float, x: float, v: float, V: float) -> float:
    """Closed-form arrival time for ``N(mu, var)`` (both sign cases)."""
    thr = -math.log(V)
    r = (mu - x) / v
    if r >= 0:
        return r + math.sqrt(2 * var * thr) / abs(v)
    return r + math.sqrt((x - mu) ** 2 / v**2 + 2 * var * thr / v**2)


def _gaussian_split(mu, var, lower, upper, name):
    sd = math.sqrt(var)

    def u1(z):
        z = np.asarray(z, dtype=float)
        return np.where(z >= mu, (z - mu) ** 2 / (2 * var), 0.0)

    def u2(z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= mu, (z - mu) ** 2 / (2 * var), 0.0)

    def inv1(y):
        return mu + sd * math.sqrt(2 * y) if y > 0 else -math.inf

    def inv2(y):
        return mu - sd * math.sqrt(2 * y) if y > 0 else math.inf

    def du1(z):
        z = np.asarray(z, dtype=float)
        return np.where(z > mu, (z - mu) / var, 0.0)

    def du2(z):
        z = np.asarray(z, dtype=float)
        return np.where(z < mu, (z - mu) / var, 0.0)

    return MonotoneDecomposition(u1, u2, lower, upper, inv1, inv2, du1, du2, name=name)


def make_gaussian(mu: float = 0.0, var: float = 1.0) -> TargetSpec:
    if not var > 0:
        raise ValueError("variance must be positive")
    sd = math.sqrt(var)
    name = f"gaussian:{mu:g}:{var:g}"

    def f(z):
        return (z - mu) ** 2 / (2 * var)

    def df(z):
        return (z - mu) / var

    return TargetSpec(
        name=name,
        potential=potential_1d(f, df, DomainSet.full(1), convex=True, name=name),
        f=f,
        df=df,
        cdf=lambda x: ndtr((np.asarray(x, dtype=float) - mu) / sd),
        pdf=lambda x: np.exp(-f(np.asarray(x, dtype=float))) / (sd * math.sqrt(2 * math.pi)),
        decomposition=_gaussian_split(mu, var, -math.inf, math.inf, name),
        tau_rule=lambda x, v, V: gaussian_tau(mu, var, x, v, V),
        mean=mu,
        window=(mu - 8 * sd, mu + 8 * sd),
        test_window=(mu - 3 * sd, mu + 3 * sd),
    )


def make_truncated_gaussian(mu: float = 0.0, var: float = 1.0, lo: float = 1.0, hi: float = 3.0) -> TargetSpec:
    if not var > 0 or not lo < hi:
        raise ValueError("need var > 0 and lo < hi")
    sd = math.sqrt(var)
    name = f"truncnorm:{mu:g}:{var:g}:{lo:g}:{hi:g}"
    a, b = (lo - mu) / sd, (hi - mu) / sd
    Z = float(ndtr(b) - ndtr(a))
    phi = lambda s: math.exp(-s * s / 2) / math.sqrt(2 * math.pi)  # noqa: E731
    mean = mu + sd * (phi(a) - phi(b)) / Z

    def f(z):
        return (z - mu) ** 2 / (2 * var)

    def df(z):
        return (z - mu) / var

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return np.where((x > lo) & (x < hi), np.exp(-f(x)) / (sd * math.sqrt(2 * math.pi) * Z), 0.0)

    return TargetSpec(
        name=name,
        potential=potential_1d(f, df, DomainSet.interval(lo, hi), convex=True, name=name),
        f=f,
        df=df,
        cdf=lambda x: np.clip((ndtr((np.asarray(x, dtype=float) - mu) / sd) - ndtr(a)) / Z, 0.0, 1.0),
        pdf=pdf,
        decomposition=_gaussian_split(mu, var, lo, hi, name),
        mean=mean,
        window=(lo, hi),
        test_window=(lo + 0.02 * (hi - lo), hi - 0.02 * (hi - lo)),
    )


# ---------------------------------------------------------------- mixture


def make_mixture(w1: float = 0.5, mu1: float = 0.0, mu2: float = 4.0, var: float = 1.0) -> TargetSpec:
    """``w1 N(mu1, var) + (1 - w1) N(mu2, var)`` with ``mu2 > mu1``."""
    if not (0 < w1 < 1 and var > 0 and mu2 > mu1):
        raise ValueError("need 0 < w1 < 1, var > 0, mu2 > mu1")
    w2 = 1 - w1
    sd = math.sqrt(var)
    lw1, lw2 = math.log(w1), math.log(w2)
    slope_c = (mu2 - mu1) / var
    name = f"mixture:{w1:g}:{mu1:g}:{mu2:g}:{var:g}"

    def c(z):
        return (2 * z * (mu2 - mu1) + mu1**2 - mu2**2) / (2 * var)

    def mix_log(z):
        # log(w1 + w2 e^{c(z)})
        return np.logaddexp(lw1, lw2 + c(z))

    def f(z):
        return (z - mu1) ** 2 / (2 * var) - mix_log(z)

    def df(z):
        return (z - mu1) / var - slope_c * expit(lw2 - lw1 + c(z))

    def mix_log_scalar(z):
        cz = lw2 - lw1 + c(z)
        return lw1 + (cz + math.log1p(math.exp(-cz)) if cz > 0 else math.log1p(math.exp(cz)))

    def f_scalar(z):
        return (z - mu1) ** 2 / (2 * var) - mix_log_scalar(z)

    def df_scalar(z):
        cz = lw2 - lw1 + c(z)
        sig = 1 / (1 + math.exp(-cz)) if cz > -700 else 0.0
        return (z - mu1) / var - slope_c * sig

    def u1(z):
        if type(z) is float:
            return (z - mu1) ** 2 / (2 * var) if z > mu1 else 0.0
        z = np.asarray(z, dtype=float)
        return np.where(z > mu1, (z - mu1) ** 2 / (2 * var), 0.0)

    def u2(z):
        if type(z) is float:
            return ((z - mu1) ** 2 / (2 * var) if z < mu1 else 0.0) - mix_log_scalar(z)
        z = np.asarray(z, dtype=float)
        return np.where(z < mu1, (z - mu1) ** 2 / (2 * var), 0.0) - mix_log(z)

    def du1(z):
        z = np.asarray(z, dtype=float)
        return np.where(z > mu1, (z - mu1) / var, 0.0)

    def du2(z):
        z = np.asarray(z, dtype=float)
        return np.where(z < mu1, (z - mu1) / var, 0.0) - slope_c * expit(lw2 - lw1 + c(z))

    dec = MonotoneDecomposition(
        u1, u2, -math.inf, math.inf,
        inv1=lambda y: mu1 + sd * math.sqrt(2 * y) if y > 0 else -math.inf,
        inv2=None,
        du1=du1, du2=du2, name=name,
    )
    return TargetSpec(
        name=name,
        potential=potential_1d(f, df, DomainSet.full(1), convex=False, name=name, scalar=(f_scalar, df_scalar)),
        f=f,
        df=df,
        cdf=lambda x: w1 * ndtr((np.asarray(x, dtype=float) - mu1) / sd) + w2 * ndtr((np.asarray(x, dtype=float) - mu2) / sd),
        pdf=lambda x: (w1 * np.exp(-(np.asarray(x, dtype=float) - mu1) ** 2 / (2 * var))
                       + w2 * np.exp(-(np.asarray(x, dtype=float) - mu2) ** 2 / (2 * var))) / (sd * math.sqrt(2 * math.pi)),
        decomposition=dec,
        mean=w1 * mu1 + w2 * mu2,
        window=(mu1 - 8 * sd, mu2 + 8 * sd),
        test_window=(mu1 - 3 * sd, mu2 + 3 * sd),
    )


# ---------------------------------------------------------------- beta


def _clip01(z):
    return np.minimum(np.maximum(z, BETA_EPS), 1 - BETA_EPS)


def beta_regime(alpha: float, beta: float) -> str:
    """Shape of ``U``: convex, concave, increasing, decreasing or flat."""
    if alpha == 1 and beta == 1:
        return "flat"
    if alpha > 1 and beta > 1:
        return "convex"
    if alpha < 1 and beta < 1:
        return "concave"
    if alpha <= 1 and beta >= 1:
        return "increasing"
    return "decreasing"


def _beta_pieces(alpha, beta):
    # U = A + B, A = -(alpha-1) log z, B = -(beta-1) log(1-z); plain floats
    # take the math-module path since the numeric inverses call these a lot
    def A(z):
        if type(z) is float:
            return -(alpha - 1) * math.log(min(max(z, BETA_EPS), 1 - BETA_EPS))
        return -(alpha - 1) * np.log(_clip01(z))

    def dA(z):
        return -(alpha - 1) / _clip01(z)

    def B(z):
        if type(z) is float:
            return -(beta - 1) * math.log1p(-min(max(z, BETA_EPS), 1 - BETA_EPS))
        return -(beta - 1) * np.log1p(-_clip01(z))

    def dB(z):
        return (beta - 1) / (1 - _clip01(z))

    return A, dA, B, dB


def _beta_decomposition(alpha, beta, name):
    A, dA, B, dB = _beta_pieces(alpha, beta)
    inc = [(A, dA, "A")] if alpha < 1 else []
    inc += [(B, dB, "B")] if beta > 1 else []
    dec = [(A, dA, "A")] if alpha > 1 else []
    dec += [(B, dB, "B")] if beta < 1 else []

    def total(pieces):
        if not pieces:
            return _zero, _zero
        if len(pieces) == 1:
            return pieces[0][0], pieces[0][1]
        return (lambda z: pieces[0][0](z) + pieces[1][0](z)), (lambda z: pieces[0][1](z) + pieces[1][1](z))

    u1, du1 = total(inc)
    u2, du2 = total(dec)

    if not inc:
        inv1 = _never_above(0.0)
    elif len(inc) == 2:
        inv1 = None
    elif inc[0][2] == "A":  # (1-alpha) log z, range (-inf, 0)
        inv1 = lambda y: math.exp(min(y / (1 - alpha), 1.0))  # noqa: E731
    else:  # -(beta-1) log(1-z), range (0, inf)
        inv1 = lambda y: 1 - math.exp(-y / (beta - 1)) if y > 0 else -math.inf  # noqa: E731

    if not dec:
        inv2 = _never_below(0.0)
    elif len(dec) == 2:
        inv2 = None
    elif dec[0][2] == "A":  # -(alpha-1) log z, range (0, inf)
        inv2 = lambda y: math.exp(-y / (alpha - 1)) if y > 0 else math.inf  # noqa: E731
    else:  # (1-beta) log(1-z), range (-inf, 0)
        inv2 = lambda y: 1 - math.exp(min(y / (1 - beta), 1.0))  # noqa: E731

    return MonotoneDecomposition(u1, u2, 0.0, 1.0, inv1, inv2, du1, du2, name=name)


def _rise_time(f, x, v, t0, t1, ref, thr):
    """``tau`` in ``[t0, t1]`` with ``f(x + v tau) - ref = thr`` on a rising
    stretch; ``t1`` if the rise is too short."""
    g = lambda t: float(f(x + v * t)) - ref - thr  # noqa: E731
    if g(t1) < 0:
        return t1
    if g(t0) >= 0:
        return t0
    return brentq(g, t0, t1, xtol=1e-14)


def beta_tau_regime(alpha: float, beta: float, x: float, v: int, V: float) -> float:
    """Arrival time for ``Beta(alpha, beta)`` by regime dispatch."""
    A, _, B, _ = _beta_pieces(alpha, beta)
    f = lambda z: A(z) + B(z)  # noqa: E731
    thr = -math.log(V)
    wall = 1 - x if v > 0 else x
    regime = beta_regime(alpha, beta)
    if thr == 0:
        return 0.0
    if regime == "flat":
        return wall
    if regime == "convex":
        mode = (alpha - 1) / (alpha + beta - 2)
        t_star = max(mode - x, 0.0) if v > 0 else max(x - mode, 0.0)
        return _rise_time(f, x, v, t_star, wall, float(f(x + v * t_star)), thr)
    if regime == "concave":
        anti = (alpha - 1) / (alpha + beta - 2)
        t_star = max(anti - x, 0.0) if v > 0 else max(x - anti, 0.0)
        fx = float(f(x))
        if float(f(x + v * t_star)) - fx >= thr:
            return _rise_time(f, x, v, 0.0, t_star, fx, thr)
        return wall
    rising = (regime == "increasing") == (v > 0)
    if not rising:
        return wall
    return _rise_time(f, x, v, 0.0, wall, float(f(x)), thr)


def make_beta(alpha: float = 2.0, beta: float = 2.0) -> TargetSpec:
    if not (alpha > 0 and beta > 0):
        raise ValueError("Beta parameters must be positive")
    name = f"beta:{alpha:g}:{beta:g}"
    A, dA, B, dB = _beta_pieces(alpha, beta)
    lb = betaln(alpha, beta)

    def f(z):
        return A(z) + B(z)

    def df(z):
        return dA(z) + dB(z)

    def f_scalar(z):
        z = min(max(z, BETA_EPS), 1 - BETA_EPS)
        return -(alpha - 1) * math.log(z) - (beta - 1) * math.log1p(-z)

    def df_scalar(z):
        z = min(max(z, BETA_EPS), 1 - BETA_EPS)
        return -(alpha - 1) / z + (beta - 1) / (1 - z)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x < 1)
        xc = np.where(inside, x, 0.5)
        return np.where(inside, np.exp((alpha - 1) * np.log(xc) + (beta - 1) * np.log1p(-xc) - lb), 0.0)

    regime = beta_regime(alpha, beta)
    return TargetSpec(
        name=name,
        potential=potential_1d(f, df, DomainSet.interval(0.0, 1.0), convex=regime in ("convex", "flat"),
                               name=name, scalar=(f_scalar, df_scalar)),
        f=f,
        df=df,
        cdf=lambda x: betainc(alpha, beta, np.clip(np.asarray(x, dtype=float), 0.0, 1.0)),
        pdf=pdf,
        decomposition=_beta_decomposition(alpha, beta, name),
        tau_rule=lambda x, v, V: beta_tau_regime(alpha, beta, x, v, V),
        mean=alpha / (alpha + beta),
        window=(0.0, 1.0),
        test_window=(0.05, 0.95),
        ks_tol=0.02 if regime == "convex" else 0.03,
    )


# ---------------------------------------------------------------- registry

_MAKERS = {
    "uniform": (make_uniform, 2),
    "gaussian": (make_gaussian, 2),
    "beta": (make_beta, 2),
    "mixture": (make_mixture, 4),
    "truncnorm": (make_truncated_gaussian, 4),
}

ZOO = (
    "gaussian:0:1",
    "uniform:0:1",
    "beta:2:2",
    "beta:3:2",
    "beta:0.5:0.5",
    "beta:0.5:2",
    "beta:2:0.5",
    "mixture:0.5:0:4:1",
    "truncnorm:0:1:1:3",
)


def get_target(name: str) -> TargetSpec:
    """Build a target from ``family:param:...``; raises ``KeyError`` for an
    unknown family and ``ValueError`` for bad parameters."""
    family, *params = name.strip().split(":")
    if family not in _MAKERS:
        raise KeyError(f"unknown target family {family!r}; known: {', '.join(sorted(_MAKERS))}")
    maker, arity = _MAKERS[family]
    if params and len(params) != arity:
        raise ValueError(f"{family} takes {arity} parameters, got {len(params)}")
    return maker(*(float(p) for p in params))
