"""Selective inference after the randomized LASSO.

Pipeline per data set: solve the randomized LASSO, read off the selection
event ``(E, s_E)``, express the randomization ``omega`` as an affine function
of the optimization variables ``o = (beta_E, u_{-E})`` with the data vector
``D`` held fixed, sample ``o`` from ``g(omega(o))`` on the orthant-times-cube
constraint set, and turn the samples into p-values and intervals by
reweighting along the direction of the coordinate under test.

Coordinates are handled in ``(E, -E)`` order throughout; ``perm`` maps back.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import logsumexp, ndtr, ndtri

from .core import DomainSet, Potential, SampleBatch, make_rng
from .diagnostics import ks_distance
from .hit_and_run import SamplerConfig, run
from .langevin import GAUSSIAN_STEPS, LAPLACE_STEPS, run_langevin

ACTIVE_TOL = 1e-10
CD_TOL = 1e-10
MAX_PASSES = 50_000
GRID_POINTS = 201
GRID_HALF_WIDTH = 6.0
MIN_WEIGHT_ESS = 50.0


class ReliabilityWarning(UserWarning):
    """Importance weights too degenerate for a trustworthy p-value."""


@dataclass(frozen=True)
class Randomization:
    """Centered Gaussian (``scale`` = sd) or Laplace (``scale`` = b) noise."""

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in ("gaussian", "laplace"):
            raise ValueError(f"unknown randomization {self.kind!r}")
        if not self.scale > 0:
            raise ValueError("randomization scale must be positive")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, size)
        return rng.laplace(0.0, self.scale, size)

    def neg_log_density(self, w):
        """``-log g(w)`` up to a constant, summed over the last axis."""
        w = np.asarray(w, dtype=float)
        if self.kind == "gaussian":
            return (w * w).sum(-1) / (2 * self.scale**2)
        return np.abs(w).sum(-1) / self.scale

    def grad_neg_log_density(self, w):
        w = np.asarray(w, dtype=float)
        if self.kind == "gaussian":
            return w / self.scale**2
        return np.sign(w) / self.scale


@dataclass
class SelectiveProblem:
    X: np.ndarray
    y: np.ndarray
    lasso_penalty: float
    ridge: float
    randomization: Randomization
    omega: np.ndarray

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        self.omega = np.asarray(self.omega, dtype=float).reshape(-1)
        n, p = self.X.shape
        if n < 1 or p < 1 or self.y.size != n or self.omega.size != p:
            raise ValueError("inconsistent problem dimensions")
        if not (self.lasso_penalty > 0 and self.ridge > 0):
            raise ValueError("lasso_penalty and ridge must be positive")
        norms = np.linalg.norm(self.X, axis=0)
        if np.any(np.abs(norms - 1) > 1e-10):
            raise ValueError("design columns must have unit norm")


@dataclass(frozen=True)
class OptVariables:
    beta_E: np.ndarray
    u_minus_E: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.beta_E, self.u_minus_E])


@dataclass
class SelectionEvent:
    """Active set and the fixed matrices of the affine map ``o -> omega``."""

    E: np.ndarray
    signs: np.ndarray
    perm: np.ndarray
    D: np.ndarray
    beta_bar: np.ndarray
    Sigma_D: np.ndarray
    A: np.ndarray
    B: np.ndarray
    lasso_penalty: float
    observed: OptVariables
    M: np.ndarray = field(init=False)
    omega0: np.ndarray = field(init=False)

    def __post_init__(self):
        k = self.E.size
        p = self.A.shape[0]
        self.M = np.hstack([self.B, np.vstack([np.zeros((k, p - k)), np.eye(p - k)])])
        offset = np.concatenate([self.lasso_penalty * self.signs, np.zeros(p - k)])
        self.omega0 = -self.A @ self.D + offset

    @property
    def size(self) -> int:
        return int(self.E.size)

    def omega(self, o) -> np.ndarray:
        """Randomization in ``(E, -E)`` order for stacked ``o`` (broadcasts)."""
        return self.omega0 + np.asarray(o, dtype=float) @ self.M.T


def soft_threshold(z: float, t: float) -> float:
    return math.copysign(max(abs(z) - t, 0.0), z)


def solve_randomized_lasso(prob: SelectiveProblem, tol: float = CD_TOL, max_passes: int = MAX_PASSES):
    """Cyclic coordinate descent for
    ``1/2 |y - X b|^2 + lam |b|_1 + eps/2 |b|^2 - omega' b``.

    Returns ``(beta, event)``; ``event`` is ``None`` when nothing is selected.
    """
    X, lam, eps = prob.X, prob.lasso_penalty, prob.ridge
    G = X.T @ X
    c = X.T @ prob.y + prob.omega
    p = G.shape[0]
    beta = np.zeros(p)
    Gb = np.zeros(p)
    diag = np.diag(G) + eps
    for _ in range(max_passes):
        biggest = 0.0
        for j in range(p):
            old = beta[j]
            r = c[j] - Gb[j] + G[j, j] * old
            new = soft_threshold(r, lam) / diag[j]
            if new != old:
                Gb += G[:, j] * (new - old)
                beta[j] = new
                biggest = max(biggest, abs(new - old))
        if biggest < tol:
            break
    else:
        raise RuntimeError(f"coordinate descent did not converge in {max_passes} passes")
    beta[np.abs(beta) <= ACTIVE_TOL] = 0.0
    sub = c - G @ beta - eps * beta
    E = np.flatnonzero(beta)
    if E.size == 0:
        return beta, None
    return beta, _selection_event(prob, beta, sub, E)


def kkt_residual(prob: SelectiveProblem, beta) -> float:
    """Sup-norm violation of the subgradient condition."""
    X, lam = prob.X, prob.lasso_penalty
    sub = X.T @ (prob.y - X @ beta) - prob.ridge * beta + prob.omega
    active = beta != 0
    r_act = np.abs(sub[active] - lam * np.sign(beta[active]))
    r_in = np.maximum(np.abs(sub[~active]) - lam, 0.0)
    return float(max(r_act.max(initial=0.0), r_in.max(initial=0.0)))


def _selection_event(prob: SelectiveProblem, beta, sub, E) -> SelectionEvent:
    X, y = prob.X, prob.y
    p = X.shape[1]
    notE = np.setdiff1d(np.arange(p), E)
    XE, XN = X[:, E], X[:, notE]
    GEE = XE.T @ XE
    GNE = XN.T @ XE
    k = E.size
    beta_bar = np.linalg.solve(GEE, XE.T @ y)
    resid = y - XE @ beta_bar
    D = np.concatenate([beta_bar, XN.T @ resid])
    A = np.block([[GEE, np.zeros((k, p - k))], [GNE, np.eye(p - k)]])
    B = np.vstack([GEE + prob.ridge * np.eye(k), GNE])

    sigma2 = float(np.var(y, ddof=1))
    GEE_inv = np.linalg.inv(GEE)
    PN = XN - XE @ (GEE_inv @ (XE.T @ XN))
    Sigma_D = np.zeros((p, p))
    Sigma_D[:k, :k] = sigma2 * GEE_inv
    Sigma_D[k:, k:] = sigma2 * (XN.T @ PN)

    obs = OptVariables(beta[E].copy(), sub[notE].copy())
    return SelectionEvent(
        E=E, signs=np.sign(beta[E]), perm=np.concatenate([E, notE]), D=D, beta_bar=beta_bar,
        Sigma_D=Sigma_D, A=A, B=B, lasso_penalty=prob.lasso_penalty, observed=obs,
    )


def kkt_reconstruct(ev: SelectionEvent, opt: OptVariables, X=None) -> np.ndarray:
    """``omega`` in the original coordinate order from ``(beta_E, u_{-E})``."""
    o = opt.stacked()
    if o.size != ev.A.shape[0] or opt.beta_E.size != ev.size:
        raise ValueError("optimization variables do not match the selection event")
    if X is not None and np.shape(X)[1] != o.size:
        raise ValueError("design does not match the selection event")
    out = np.empty(o.size)
    out[ev.perm] = ev.omega(o)
    return out


def selective_potential(ev: SelectionEvent, X=None, prob: SelectiveProblem = None,
                        randomization: Randomization = None) -> Potential:
    """``-log g(omega(o))`` on the ``s_E`` orthant times the ``(-lam, lam)`` cube."""
    g = randomization if randomization is not None else prob.randomization
    M, w0 = ev.M, ev.omega0
    p = M.shape[0]
    domain = DomainSet.orthant_cube(ev.signs, ev.lasso_penalty, p - ev.size)
    s = g.scale

    def u(o):
        return g.neg_log_density(w0 + np.asarray(o) @ M.T)

    def grad(o):
        return g.grad_neg_log_density(w0 + np.asarray(o) @ M.T) @ M

    if g.kind == "gaussian":
        def line(x, v):
            wx = w0 + M @ x
            dw = M @ v
            a, b, c = dw @ dw / (2 * s * s), wx @ dw / (s * s), wx @ wx / (2 * s * s)
            return (lambda t: c + t * (b + a * t)), (lambda t: b + 2 * a * t)
    else:
        def line(x, v):
            wx = w0 + M @ x
            dw = M @ v

            def value(t):
                return np.abs(wx + np.multiply.outer(t, dw)).sum(-1) / s

            def slope(t):
                return (np.sign(wx + np.multiply.outer(t, dw)) * dw).sum(-1) / s

            return value, slope

    return Potential(p, domain, u, grad, convex=True, name=f"selective-{g.kind}", line=line)


def sample_opt_variables(ev: SelectionEvent, prob: SelectiveProblem, steps: int, seed=0) -> SampleBatch:
    """Hit-and-run from the observed optimization variables."""
    pot = selective_potential(ev, prob=prob)
    return run(pot, SamplerConfig(steps=steps, seed=seed), x0=ev.observed.stacked())


@dataclass(frozen=True)
class CoordinateInference:
    index: int
    estimate: float
    std_error: float
    pvalue: float
    lower: float
    upper: float
    weight_ess: float
    reliable: bool


def _log_weight_curve(W, ev: SelectionEvent, g: Randomization, a, deltas):
    """``log W(t_obs + delta) - log W(t_obs)`` from samples of ``omega``."""
    if g.kind == "gaussian":
        wa = W @ a
        logr = (np.multiply.outer(wa, deltas) * 2 - (a @ a) * deltas**2) / (2 * g.scale**2)
    else:
        base = np.abs(W).sum(-1)
        logr = np.empty((W.shape[0], deltas.size))
        for k, dl in enumerate(deltas):
            logr[:, k] = -(np.abs(W - a * dl).sum(-1) - base) / g.scale
    lw = logsumexp(logr, axis=0) - math.log(W.shape[0])
    ess = np.exp(2 * logsumexp(logr, axis=0) - logsumexp(2 * logr, axis=0))
    return lw, ess


def pvalues_and_intervals(batch: SampleBatch, ev: SelectionEvent, X, prob: SelectiveProblem,
                          level: float = 0.9, null: float = 0.0) -> list[CoordinateInference]:
    """Selective p-value for ``beta_E,j = null`` and interval at ``level``.

    For coordinate ``j`` the data vector moves along its regression on
    ``beta_bar_j``, ``D(t) = D_obs + c (t - t_obs)``; the sampled ``o`` are
    reweighted by ``g(omega - A c (t - t_obs)) / g(omega)`` to get the
    selective density of ``beta_bar_j`` on a grid, which is then tilted by
    the Gaussian likelihood at each candidate value.
    """
    if len(batch) == 0:
        raise ValueError("empty sample batch")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")
    g = prob.randomization
    W = ev.omega(batch.positions)
    alpha = 1 - level
    out = []
    for j in range(ev.size):
        sd = math.sqrt(ev.Sigma_D[j, j])
        t_obs = float(ev.D[j])
        c = ev.Sigma_D[:, j] / sd**2
        a = ev.A @ c
        t = t_obs + sd * np.linspace(-GRID_HALF_WIDTH, GRID_HALF_WIDTH, GRID_POINTS)
        lw, ess = _log_weight_curve(W, ev, g, a, t - t_obs)
        centre = GRID_POINTS // 2
        thetas = t
        F_theta = _cdf_at_obs(t, lw, thetas[:, None], sd, centre)
        F_null = float(_cdf_at_obs(t, lw, np.array([[null]]), sd, centre)[0])
        pval = float(min(1.0, 2 * min(F_null, 1 - F_null)))
        lo, hi = _invert(thetas, F_theta, alpha)
        near = np.abs(t - t_obs) <= 2 * sd
        w_ess = float(ess[near].min())
        reliable = w_ess >= MIN_WEIGHT_ESS
        if not reliable:
            warnings.warn(f"importance weights for coordinate {ev.E[j]} have ESS {w_ess:.1f}", ReliabilityWarning,
                          stacklevel=2)
        out.append(CoordinateInference(int(ev.E[j]), t_obs, sd, pval, lo, hi, w_ess, reliable))
    return out


def _cdf_at_obs(t, lw, theta, sd, centre):
    """``P_theta(T <= t_obs)`` for each row of ``theta`` (shape ``(m, 1)``)."""
    logh = -((t[None, :] - theta) ** 2) / (2 * sd * sd) + lw[None, :]
    h = np.exp(logh - logh.max(axis=1, keepdims=True))
    cum = cumulative_trapezoid(h, t, axis=1, initial=0.0)
    return np.clip(cum[:, centre] / cum[:, -1], 0.0, 1.0)


def _invert(thetas, F, alpha):
    """Endpoints of ``{theta : alpha/2 <= F_theta(t_obs) <= 1 - alpha/2}``.

    ``F`` decreases in ``theta``; endpoints are linearly interpolated and
    clamped to the grid.
    """
    Fd = np.maximum.accumulate(-F)  # increasing
    lo = float(np.interp(-(1 - alpha / 2), Fd, thetas))
    hi = float(np.interp(-(alpha / 2), Fd, thetas))
    return lo, hi


def naive_inference(ev: SelectionEvent, level: float = 0.9, null: float = 0.0) -> list[CoordinateInference]:
    """Normal-quantile p-values and intervals that ignore selection."""
    z = float(ndtri(1 - (1 - level) / 2))
    out = []
    for j in range(ev.size):
        sd = math.sqrt(ev.Sigma_D[j, j])
        t = float(ev.D[j])
        pval = float(2 * (1 - ndtr(abs(t - null) / sd)))
        out.append(CoordinateInference(int(ev.E[j]), t, sd, pval, t - z * sd, t + z * sd, math.inf, True))
    return out


def simulate_equicorrelated(n: int, p: int, rho: float, seed=0):
    """Rows ``N(0, (1 - rho) I + rho 11')``, unit-norm columns; ``y ~ N(0, I)``."""
    if not 0 <= rho < 1:
        raise ValueError("rho must lie in [0, 1)")
    rng = make_rng(seed)
    Z = rng.standard_normal((n, p))
    common = rng.standard_normal((n, 1))
    X = math.sqrt(1 - rho) * Z + math.sqrt(rho) * common
    X /= np.linalg.norm(X, axis=0)
    y = rng.standard_normal(n)
    return X, y


def default_scales(y) -> tuple[float, float]:
    """Ridge ``sigma^2 / sqrt(n)`` and randomization scale ``sigma / 2``."""
    y = np.asarray(y, dtype=float)
    sigma = float(np.std(y, ddof=1)) if y.size > 1 else 0.0
    if not sigma > 0:
        raise ValueError("response has zero spread; scales are degenerate")
    return sigma**2 / math.sqrt(y.size), sigma / 2


@dataclass(frozen=True)
class ReplicateConfig:
    n: int = 100
    p: int = 40
    rho: float = 0.3
    lasso_penalty: float = 1.4
    randomization: str = "gaussian"
    steps: int = 1000
    langevin_steps: int = None
    langevin_eta: float = None
    level: float = 0.9

    def langevin_budget(self) -> int:
        if self.langevin_steps is not None:
            return self.langevin_steps
        return GAUSSIAN_STEPS if self.randomization == "gaussian" else LAPLACE_STEPS


def _method_rows(infos, truth=0.0):
    return [
        {"index": r.index, "estimate": r.estimate, "pvalue": r.pvalue, "lower": r.lower, "upper": r.upper,
         "covered": bool(r.lower <= truth <= r.upper), "weight_ess": r.weight_ess if math.isfinite(r.weight_ess) else None}
        for r in infos
    ]


def run_replicate(seed: np.random.SeedSequence, cfg: ReplicateConfig) -> dict:
    """One data set through selection, both samplers, and inference.

    Under the global null every selected coefficient has target 0.
    """
    s_data, s_omega, s_irf, s_lang = seed.spawn(4)
    X, y = simulate_equicorrelated(cfg.n, cfg.p, cfg.rho, s_data)
    eps, scale = default_scales(y)
    g = Randomization(cfg.randomization, scale)
    omega = g.sample(make_rng(s_omega), cfg.p)
    prob = SelectiveProblem(X, y, cfg.lasso_penalty, eps, g, omega)
    beta, ev = solve_randomized_lasso(prob)
    record = {"seed_entropy": str(seed.entropy), "spawn_key": list(seed.spawn_key), "active": [],
              "signs": [], "kkt_residual": kkt_residual(prob, beta)}
    if ev is None:
        record.update(irf=[], langevin=[], naive=[], timings={"irf": 0.0, "langevin": 0.0})
        return record
    record["active"] = [int(i) for i in ev.E]
    record["signs"] = [int(s) for s in ev.signs]
    record["kkt_roundtrip"] = float(np.abs(kkt_reconstruct(ev, ev.observed, X) - omega).max())

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ReliabilityWarning)
        t0 = time.perf_counter()
        irf_batch = sample_opt_variables(ev, prob, cfg.steps, seed=s_irf)
        irf = pvalues_and_intervals(irf_batch, ev, X, prob, cfg.level)
        t1 = time.perf_counter()
        pot = selective_potential(ev, prob=prob)
        lang_batch = run_langevin(pot, cfg.langevin_budget(), seed=s_lang, x0=ev.observed.stacked(),
                                  eta=cfg.langevin_eta)
        lang = pvalues_and_intervals(lang_batch, ev, X, prob, cfg.level)
        t2 = time.perf_counter()
    record.update(
        irf=_method_rows(irf),
        langevin=_method_rows(lang),
        naive=_method_rows(naive_inference(ev, cfg.level)),
        timings={"irf": t1 - t0, "langevin": t2 - t1},
    )
    return record


def summarize(records: list[dict]) -> dict:
    """Pooled coverage (%) and p-value KS-to-uniform per method."""
    out = {}
    for method in ("irf", "langevin", "naive"):
        rows = [r for rec in records for r in rec[method]]
        pv = np.array([r["pvalue"] for r in rows])
        cov = 100.0 * float(np.mean([r["covered"] for r in rows])) if rows else float("nan")
        ks = ks_distance(pv, lambda q: np.clip(q, 0.0, 1.0)) if rows else float("nan")
        wall = sum(rec["timings"].get(method, 0.0) for rec in records)
        out[method] = {"coverage": cov, "pvalue_ks": ks, "n_intervals": len(rows), "wall_time": wall}
    return out
