"""The iterated-random-function sampler: ``x <- x + v tau / 2``.

Each step draws a direction ``v`` and ``V ~ Unif(0, 1)``, restricts the
potential to the line through the current point, and moves half the first
arrival time of the rate ``(dU/dt)_+`` along it. No proposal is ever
rejected and there is nothing to tune.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .arrival import ArrivalResult, solve_arrival
from .core import ChainState, Potential, SampleBatch, make_rng, restrict_to_line, sample_unit_sphere
from .truncated import solve_truncated_arrival


@dataclass(frozen=True)
class SamplerConfig:
    steps: int
    seed: int = 0
    axis_hold: int = 1
    burn_in: int = 0

    def __post_init__(self):
        if self.steps < 0 or self.burn_in < 0:
            raise ValueError("steps and burn_in must be nonnegative")
        if self.axis_hold < 1:
            raise ValueError("axis_hold must be at least 1")


def arrival(p: Potential, x, v, V: float) -> ArrivalResult:
    """Arrival time on the line through ``x``; convex potentials take the
    minimiser-then-invert route, everything else the piecewise solver."""
    line = restrict_to_line(p, x, v)
    if p.convex:
        return solve_truncated_arrival(line, *line.t_range, V)
    return solve_arrival(line, -math.log(V))


def transition(p: Potential, x, v, V: float) -> np.ndarray:
    """The deterministic map ``f_{V,v}(x)``."""
    x = np.asarray(x, dtype=float).reshape(p.dim)
    v = np.asarray(v, dtype=float).reshape(p.dim)
    return x + v * (arrival(p, x, v, V).tau / 2)


def _uniform_open(rng) -> float:
    # (0, 1]: V = 0 would make -log V infinite
    return 1.0 - rng.random()


def step(p: Potential, state: ChainState) -> ChainState:
    v = sample_unit_sphere(state.rng, p.dim)
    V = _uniform_open(state.rng)
    x = transition(p, state.position, v, V)
    return ChainState(x, state.rng, state.step_count + 1)


def default_start(p: Potential, n_iter: int = 50, lr: float = 0.1) -> np.ndarray:
    """Domain center when bounded, else a short projected gradient descent."""
    D = p.domain
    if D.bounded:
        return D.center()
    lo, hi = D.lower, D.upper
    with np.errstate(invalid="ignore"):
        x = np.where(np.isfinite(lo) & np.isfinite(hi), (lo + hi) / 2,
                     np.where(np.isfinite(lo), lo + 1.0, np.where(np.isfinite(hi), hi - 1.0, 0.0)))
    for _ in range(n_iter):
        x = D.project(x - lr * np.asarray(p.grad(x)), nudge=1e-6)
    return x


def run(p: Potential, cfg: SamplerConfig, x0=None) -> SampleBatch:
    """Collect ``cfg.steps`` positions (after ``cfg.burn_in`` discarded ones).

    With ``axis_hold = k`` a fresh direction is drawn every ``k`` steps and
    in between only its sign is re-drawn.
    """
    rng = make_rng(cfg.seed)
    x = default_start(p) if x0 is None else np.asarray(x0, dtype=float).reshape(p.dim)
    if not p.domain.contains(x):
        raise ValueError(f"start {x} is outside the domain")
    out = np.empty((cfg.steps, p.dim))
    start = time.perf_counter()
    axis = None
    for n in range(cfg.burn_in + cfg.steps):
        if n % cfg.axis_hold == 0:
            axis = sample_unit_sphere(rng, p.dim)
            v = axis
        else:
            v = -axis if rng.random() < 0.5 else axis
        x = transition(p, x, v, _uniform_open(rng))
        if n >= cfg.burn_in:
            out[n - cfg.burn_in] = x
    return SampleBatch(out, cfg.seed, p.name, "irf", time.perf_counter() - start)


def transition_function_surface(p: Potential, x: float, V_grid, directions=(-1.0, 1.0)) -> np.ndarray:
    """``f_{V,v}(x)`` for a 1-D target, shape ``(len(directions), len(V_grid))``."""
    if p.dim != 1:
        raise ValueError("the transition surface is defined for 1-D targets")
    V_grid = np.asarray(V_grid, dtype=float)
    out = np.empty((len(directions), V_grid.size))
    for i, d in enumerate(directions):
        for j, V in enumerate(V_grid):
            out[i, j] = transition(p, [x], [d], V)[0]
    return out
