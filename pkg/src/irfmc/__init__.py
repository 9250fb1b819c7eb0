"""Rejection-free MCMC by iterated random functions along random lines."""

from .arrival import ArrivalDivergenceError, ArrivalResult, positive_variation, solve_arrival
from .core import DomainError, DomainSet, LineSection, Potential, SampleBatch, check_gradient, make_rng, restrict_to_line
from .decomposition import MonotoneDecomposition, decomposed_tau, run_decomposed
from .distributions import ZOO, TargetSpec, get_target
from .hit_and_run import SamplerConfig, run, transition
from .langevin import projected_langevin_step, run_langevin
from .truncated import solve_truncated_arrival

__all__ = [
    "ArrivalDivergenceError", "ArrivalResult", "DomainError", "DomainSet", "LineSection",
    "MonotoneDecomposition", "Potential", "SampleBatch", "SamplerConfig", "TargetSpec", "ZOO",
    "check_gradient", "decomposed_tau", "get_target", "make_rng", "positive_variation",
    "projected_langevin_step", "restrict_to_line", "run", "run_decomposed", "run_langevin",
    "solve_arrival", "solve_truncated_arrival", "transition",
]
