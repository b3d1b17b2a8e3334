"""One-sided lower confidence limit for the odds via a Kolmogorov band.

The odds functional has no honest two-sided interval, but it is lower
semicontinuous in Kolmogorov distance, so minimizing it over all mixtures
whose distribution function stays within an eps-band of the empirical one
gives a conservative lower limit.  On a grid of candidate atoms that
minimization is a linear program; eps is the finite-sample 1-alpha
quantile of the Kolmogorov statistic of n uniforms, estimated once by
Monte Carlo with a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import simplex
from .backend import ks_statistics
from .ingest import FrequencyData
from .npmle import _log_pmf_matrix

__all__ = [
    "EnvelopeConfig",
    "EnvelopeProblem",
    "EnvelopeSolution",
    "EnvelopeResult",
    "kolmogorov_distance",
    "kolmogorov_quantile",
    "default_grid",
    "build_lp",
    "solve_lp",
    "lower_confidence_limit",
]

DEFAULT_SEED = 20070917
_KS_CHUNK_BYTES = 64 << 20  # ~64 MiB of uniforms per batch


def kolmogorov_distance(f_values, g_values) -> float:
    """Max absolute difference of two distribution functions on 1..T.

    Both arguments are cdf values on the same integer grid; since count
    cdfs are step functions jumping only at integers, the sup over the
    whole line is attained on the grid provided the grid extends until
    both functions have reached 1 (checked to 1e-6).
    """
    f = np.asarray(f_values, dtype=np.float64)
    g = np.asarray(g_values, dtype=np.float64)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError("cdf arrays must be 1-d with a common domain")
    for name, arr in (("F", f), ("G", g)):
        if np.any(np.diff(arr) < -1e-12) or arr.min() < -1e-12 or arr.max() > 1 + 1e-12:
            raise ValueError(f"{name} is not a distribution function")
    if abs(f[-1] - 1.0) > 1e-6 or abs(g[-1] - 1.0) > 1e-6:
        raise ValueError("cdf arrays must reach 1 at the truncation point")
    return float(np.abs(f - g).max())


@lru_cache(maxsize=64)
def kolmogorov_quantile(
    n: int, alpha: float = 0.05, reps: int = 100_000, seed: int = DEFAULT_SEED
) -> float:
    """Monte Carlo 1-alpha quantile of the n-sample Kolmogorov statistic.

    Exact finite-sample law (no asymptotics): each replicate realizes the
    order statistics of n uniforms as normalized partial sums of n+1
    standard exponentials and records sup_t |empirical cdf - t|.
    Deterministic for a given seed; replicates are consumed in a fixed
    order regardless of chunking.
    """
    if n < 1 or reps < 1:
        raise ValueError("n and reps must be >= 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    rng = np.random.default_rng(seed)
    chunk = max(1, min(reps, _KS_CHUNK_BYTES // (8 * (n + 1))))
    stats = np.empty(reps)
    done = 0
    while done < reps:
        m = min(chunk, reps - done)
        e = rng.standard_exponential((m, n + 1))
        stats[done : done + m] = ks_statistics(e)
        done += m
    return float(np.quantile(stats, 1.0 - alpha))


@dataclass(frozen=True)
class EnvelopeConfig:
    """Grid and Monte Carlo knobs for the envelope limit."""

    grid_size: int = 400
    grid_lo: float = 1e-4
    grid_hi: float | None = None  # default x_max + 10 sqrt(x_max)
    reps: int = 100_000
    seed: int = DEFAULT_SEED

    def resolve_grid(self, x_max: int) -> np.ndarray:
        hi = self.grid_hi if self.grid_hi is not None else x_max + 10.0 * math.sqrt(x_max)
        return np.geomspace(self.grid_lo, hi, self.grid_size)


@dataclass(frozen=True)
class EnvelopeProblem:
    """Discretized band minimization: data for one LP instance."""

    grid: np.ndarray
    epsilon: float
    target_cdf: np.ndarray  # empirical cdf on 1..x_max
    objective: np.ndarray  # 1 / (e^atom - 1) per grid atom
    atom_cdfs: np.ndarray  # (x_max, J): F_atom(x) per grid atom

    def __post_init__(self) -> None:
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if np.any(self.grid <= 0.0) or np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("grid must be positive and strictly increasing")

    @property
    def n_constraints(self) -> int:
        # one simplex equality plus a two-sided band per integer point
        return 2 * self.target_cdf.size + 1


@dataclass(frozen=True)
class EnvelopeSolution:
    status: str  # "feasible" | "infeasible"
    theta_lower: float | None
    weights: np.ndarray | None
    active_constraints: tuple[int, ...]


@dataclass(frozen=True)
class EnvelopeResult:
    theta_lower: float
    epsilon: float
    c_lower: int
    n: int
    alpha: float
    solution: EnvelopeSolution
    config: EnvelopeConfig


def build_lp(
    d: FrequencyData, epsilon: float, grid: np.ndarray | None = None
) -> EnvelopeProblem:
    """Assemble the band LP for observed data at a given band width.

    Constraints cover x = 1..x_max only: the empirical cdf is 1 beyond
    x_max, and any mixture cdf is nondecreasing toward 1, so the band at
    x_max already enforces the sup over the tail.
    """
    if grid is None:
        grid = EnvelopeConfig().resolve_grid(d.x_max)
    grid = np.asarray(grid, dtype=np.float64)
    xs = np.arange(1, d.x_max + 1)
    pmf = np.exp(_log_pmf_matrix(grid, xs))  # (x_max, J)
    atom_cdfs = np.cumsum(pmf, axis=0)
    return EnvelopeProblem(
        grid=grid,
        epsilon=float(epsilon),
        target_cdf=np.asarray(d.cdf_values(), dtype=np.float64),
        objective=1.0 / np.expm1(grid),
        atom_cdfs=atom_cdfs,
    )


def solve_lp(problem: EnvelopeProblem) -> EnvelopeSolution:
    """Minimize the odds over the band by the dense two-phase simplex."""
    f_mat = problem.atom_cdfs
    eps = problem.epsilon
    target = problem.target_cdf
    a_ub = np.vstack([f_mat, -f_mat])
    b_ub = np.concatenate([target + eps, -(target - eps)])
    a_eq = np.ones((1, problem.grid.size))
    result = simplex.solve(problem.objective, a_ub, b_ub, a_eq, np.array([1.0]))
    if result.status != "optimal":
        return EnvelopeSolution(
            status="infeasible", theta_lower=None, weights=None, active_constraints=()
        )
    slack = b_ub - a_ub @ result.x
    active = tuple(int(i) for i in np.flatnonzero(slack <= 1e-9))
    return EnvelopeSolution(
        status="feasible",
        theta_lower=result.objective,
        weights=result.x,
        active_constraints=active,
    )


def lower_confidence_limit(
    d: FrequencyData, alpha: float = 0.05, config: EnvelopeConfig | None = None
) -> EnvelopeResult:
    """Conservative 1-alpha lower limit for the odds and the class count.

    Composes the Kolmogorov quantile, the band LP construction and the
    simplex solve; the class-count lower limit is the integer part of
    n * (1 + theta_lower).
    """
    cfg = config or EnvelopeConfig()
    eps = kolmogorov_quantile(d.n, alpha, cfg.reps, cfg.seed)
    problem = build_lp(d, eps, cfg.resolve_grid(d.x_max))
    solution = solve_lp(problem)
    if solution.status != "feasible":
        return EnvelopeResult(
            theta_lower=math.nan,
            epsilon=eps,
            c_lower=d.n,
            n=d.n,
            alpha=alpha,
            solution=solution,
            config=cfg,
        )
    theta = float(solution.theta_lower)
    return EnvelopeResult(
        theta_lower=theta,
        epsilon=eps,
        c_lower=math.floor(d.n * (1.0 + theta)),
        n=d.n,
        alpha=alpha,
        solution=solution,
        config=cfg,
    )
