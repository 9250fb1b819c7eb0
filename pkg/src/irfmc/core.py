"""Shared domain types: potentials, domains, line restrictions, chain state."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

UNIT_TOL = 1e-12


class DomainError(ValueError):
    """A point lies outside (or on the boundary of) a target's domain."""


def make_rng(seed) -> np.random.Generator:
    """One independent PCG64 stream per chain.

    ``seed`` may be an int or a ``np.random.SeedSequence`` (for spawned
    replicate streams).
    """
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class DomainSet:
    """Product of open intervals ``(lower_i, upper_i)``; bounds may be infinite.

    Orthants and cubes are special cases, tagged through ``kind`` only for
    reporting. Membership is strict.
    """

    lower: np.ndarray
    upper: np.ndarray
    kind: str = "interval-product"

    def __post_init__(self):
        lo = np.array(self.lower, dtype=float).reshape(-1)
        hi = np.array(self.upper, dtype=float).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("lower and upper bounds differ in length")
        if not np.all(lo < hi):
            raise ValueError("every coordinate needs lower < upper")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def full(cls, dim: int) -> DomainSet:
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf), "full-space")

    @classmethod
    def interval(cls, a: float, b: float) -> DomainSet:
        return cls([a], [b])

    @classmethod
    def orthant_cube(cls, signs, half_width: float, n_cube: int) -> DomainSet:
        """Sign-orthant on the first ``len(signs)`` coordinates, then an open
        cube ``(-half_width, half_width)`` on the remaining ``n_cube``."""
        signs = np.asarray(signs, dtype=float)
        lo = np.concatenate([np.where(signs > 0, 0.0, -np.inf), np.full(n_cube, -half_width)])
        hi = np.concatenate([np.where(signs > 0, np.inf, 0.0), np.full(n_cube, half_width)])
        return cls(lo, hi, "orthant-cube-product")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def bounded(self) -> bool:
        return bool(np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper)))

    def center(self) -> np.ndarray:
        if not self.bounded:
            raise ValueError("unbounded domain has no center")
        return (self.lower + self.upper) / 2

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        if x.size == 1 and self.lower.size == 1:
            return bool(self.lower[0] < x.flat[0] < self.upper[0])
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def ray_bounds(self, x, v) -> tuple[float, float]:
        """``(t_min, t_max)`` of the ray ``x + v t, t >= 0`` inside the domain.

        ``x`` must be interior, so ``t_min`` is 0. ``t_max`` is the first wall
        hit, ``inf`` if the ray never leaves.
        """
        if self.lower.size == 1:
            xs, vs = float(np.asarray(x).flat[0]), float(np.asarray(v).flat[0])
            if vs > 0:
                return 0.0, (float(self.upper[0]) - xs) / vs
            if vs < 0:
                return 0.0, (float(self.lower[0]) - xs) / vs
            return 0.0, math.inf
        with np.errstate(divide="ignore", invalid="ignore"):
            hit = np.where(v > 0, (self.upper - x) / v, np.where(v < 0, (self.lower - x) / v, np.inf))
        return 0.0, float(hit.min())

    def project(self, x, nudge: float = 1e-12) -> np.ndarray:
        """Clamp onto the domain, then push walls inward by ``nudge``."""
        lo = np.where(np.isfinite(self.lower), self.lower + nudge, self.lower)
        hi = np.where(np.isfinite(self.upper), self.upper - nudge, self.upper)
        return np.minimum(np.maximum(x, lo), hi)


@dataclass(frozen=True)
class Potential:
    """Negative log-density ``u`` (up to a constant) and its gradient.

    ``u`` and ``grad`` broadcast over leading axes: a ``(..., dim)`` array
    maps to ``(...)`` and ``(..., dim)`` respectively. ``line`` optionally
    builds fast closed-form restrictions ``(value, slope)`` for
    :func:`restrict_to_line`; it must agree with ``u``/``grad``.
    """

    dim: int
    domain: DomainSet
    u: Callable
    grad: Callable
    convex: bool = False
    name: str = ""
    line: Optional[Callable] = None

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(self.dim)
        if not self.domain.contains(x):
            raise DomainError(f"{x} is not in the open domain of {self.name or 'potential'}")
        return x

    def value(self, x) -> float:
        return float(self.u(self._check(x)))

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.grad(self._check(x)), dtype=float)


def potential_1d(f, df, domain: DomainSet, convex: bool = False, name: str = "",
                 scalar: Optional[tuple] = None) -> Potential:
    """Wrap ``f``/``df`` (numpy-broadcasting in ``z``) as a 1-D potential.

    ``scalar`` optionally gives plain-float versions ``(f, df)``; line
    restrictions use them for float arguments, which is what root finders
    pass.
    """
    fs, dfs = scalar if scalar is not None else (f, df)

    def line(x, v):
        x0, v0 = float(x[0]), float(v[0])

        def value(t):
            return fs(x0 + v0 * t) if type(t) is float else f(x0 + v0 * t)

        def slope(t):
            return dfs(x0 + v0 * t) * v0 if type(t) is float else df(x0 + v0 * t) * v0

        return value, slope

    return Potential(
        dim=1,
        domain=domain,
        u=lambda x: f(np.asarray(x)[..., 0]),
        grad=lambda x: np.asarray(df(np.asarray(x)[..., 0]))[..., None],
        convex=convex,
        name=name,
        line=line,
    )


@dataclass
class LineSection:
    """The 1-D restriction ``t -> U(base + direction t)`` on ``t_range``.

    ``value`` and ``slope`` accept scalars or arrays of ``t``. The arrival
    solver caches monotone pieces on the instance.
    """

    base: np.ndarray
    direction: np.ndarray
    value: Callable
    slope: Callable
    t_range: tuple[float, float]
    _pieces: list = field(default_factory=list, repr=False, compare=False)

    def point(self, t: float) -> np.ndarray:
        return self.base + self.direction * t


def restrict_to_line(p: Potential, x, v) -> LineSection:
    x = np.asarray(x, dtype=float).reshape(p.dim)
    v = np.asarray(v, dtype=float).reshape(p.dim)
    if abs(math.sqrt(float(v @ v)) - 1.0) > UNIT_TOL:
        raise ValueError("direction must be a unit vector")
    if not p.domain.contains(x):
        raise DomainError(f"{x} is not in the open domain of {p.name or 'potential'}")
    t_range = p.domain.ray_bounds(x, v)
    if p.line is not None:
        value, slope = p.line(x, v)
    else:
        u, grad = p.u, p.grad

        def value(t):
            return u(x + np.multiply.outer(t, v))

        def slope(t):
            return grad(x + np.multiply.outer(t, v)) @ v

    return LineSection(x, v, value, slope, t_range)


def sample_unit_sphere(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform direction on S^{d-1}; in one dimension a fair sign."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if d == 1:
        return np.array([-1.0 if rng.random() < 0.5 else 1.0])
    while True:
        z = rng.standard_normal(d)
        nrm = math.sqrt(float(z @ z))
        if nrm > 0:
            return z / nrm


def check_gradient(p: Potential, x) -> float:
    """Max over coordinates of ``|central difference - grad| / (1 + |grad|)``.

    Steps are ``1e-6 (1 + |x_i|)``. Raises :class:`DomainError` when ``x`` or
    a stencil point leaves the open domain, ``FloatingPointError`` when ``u``
    is not finite there.
    """
    x = np.asarray(x, dtype=float).reshape(p.dim)
    g = p.gradient(x)
    worst = 0.0
    for i in range(p.dim):
        h = 1e-6 * (1 + abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        up, um = p.value(xp), p.value(xm)
        if not (math.isfinite(up) and math.isfinite(um)):
            raise FloatingPointError(f"non-finite potential near {x}")
        fd = (up - um) / (2 * h)
        worst = max(worst, abs(fd - g[i]) / (1 + abs(g[i])))
    return worst


@dataclass
class ChainState:
    position: np.ndarray
    rng: np.random.Generator
    step_count: int = 0


@dataclass
class SampleBatch:
    positions: np.ndarray
    seed: object = None
    target: str = ""
    sampler: str = ""
    wall_time: float = 0.0

    def __len__(self) -> int:
        return self.positions.shape[0]
