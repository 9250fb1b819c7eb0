"""Projected (unadjusted) Langevin chain, the comparison baseline."""

from __future__ import annotations

import math
import time

import numpy as np

from .core import DomainSet, Potential, SampleBatch, make_rng

GAUSSIAN_STEPS = 3000
LAPLACE_STEPS = 4000


def default_step_size(dim: int) -> float:
    return 1.0 / dim**2


def projected_langevin_step(p: Potential, D: DomainSet, x, eta: float, rng: np.random.Generator) -> np.ndarray:
    """``Proj_D(x - eta grad U(x) + sqrt(2 eta) xi)``."""
    if not eta > 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    xi = rng.standard_normal(x.shape)
    return D.project(x - eta * np.asarray(p.grad(x), dtype=float) + math.sqrt(2 * eta) * xi)


def run_langevin(p: Potential, steps: int, seed=0, x0=None, eta: float = None, burn_in: int = 0) -> SampleBatch:
    rng = make_rng(seed)
    D = p.domain
    eta = default_step_size(p.dim) if eta is None else eta
    if x0 is None:
        from .hit_and_run import default_start

        x0 = default_start(p)
    x = np.asarray(x0, dtype=float).reshape(p.dim)
    out = np.empty((steps, p.dim))
    start = time.perf_counter()
    for n in range(burn_in + steps):
        x = projected_langevin_step(p, D, x, eta, rng)
        if n >= burn_in:
            out[n - burn_in] = x
    return SampleBatch(out, seed, p.name, "langevin", time.perf_counter() - start)
