"""Zero-truncated Poisson mixtures and the nonparametric MLE.

A class observed a positive number of times follows a zero-truncated
Poisson law with rate lambda, and rates vary across classes according to
a mixing distribution.  This module provides the truncated densities, the
detected/undetected odds functional, the population-side/conditional-side
mapping between mixing distributions, and a certified nonparametric
maximum likelihood fit of the mixing distribution:  the returned mixture
comes with the directional-derivative optimality certificate
``sup_lambda D(lambda) <= tol * n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from ._kernels_py import _ztp_mean_root
from .ingest import FrequencyData

__all__ = [
    "MixingDistribution",
    "PopulationModel",
    "NpmleConfig",
    "NpmleFit",
    "truncated_poisson_pmf",
    "mixture_pmf",
    "mixture_cdf",
    "odds",
    "kappa",
    "kappa_inverse",
    "log_likelihood",
    "gradient_fn",
    "fit_npmle",
    "fit_weighted",
    "single_atom_mle",
]

_PRUNE_EPS = 1e-12
# sweeps between consolidation passes during a base (non-refit) fit
_BASE_EM_BLOCK = 1000


@dataclass(frozen=True)
class MixingDistribution:
    """Finite discrete measure on (0, inf): atoms with nonnegative weights.

    ``mass`` is 1 for probability distributions but may differ for raw
    measures (quadrature representations are returned unnormalized).
    """

    atoms: np.ndarray
    weights: np.ndarray
    mass: float = field(init=False)

    def __post_init__(self) -> None:
        atoms = np.asarray(self.atoms, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if atoms.shape != weights.shape or atoms.ndim != 1:
            raise ValueError("atoms and weights must be 1-d arrays of equal length")
        if np.any(atoms <= 0.0):
            raise ValueError("atoms must be strictly positive")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        keep = weights >= _PRUNE_EPS
        if not np.any(keep):
            raise ValueError("all weights below pruning threshold")
        atoms, weights = atoms[keep], weights[keep]
        order = np.argsort(atoms)
        atoms, weights = atoms[order], weights[order]
        if np.any(np.diff(atoms) <= 0.0):
            raise ValueError("atoms must be distinct")
        atoms.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "mass", float(weights.sum()))

    @property
    def n_atoms(self) -> int:
        return int(self.atoms.size)

    def normalized(self) -> "MixingDistribution":
        return MixingDistribution(self.atoms, self.weights / self.mass)

    def is_normalized(self, tol: float = 1e-9) -> bool:
        return abs(self.mass - 1.0) <= tol


def single_atom(lam: float) -> MixingDistribution:
    """Degenerate mixing distribution at a single rate."""
    return MixingDistribution(np.array([lam]), np.array([1.0]))


@dataclass(frozen=True)
class PopulationModel:
    """Population of ``c`` classes with rates drawn from ``P``."""

    c: int
    P: MixingDistribution

    def __post_init__(self) -> None:
        if self.c < 1:
            raise ValueError("c must be >= 1")
        if not self.P.is_normalized():
            raise ValueError("P must be a probability distribution")

    def detection_probability(self) -> float:
        """1 - g_P(0): chance a single class is detected."""
        return float(np.sum(self.P.weights * -np.expm1(-self.P.atoms)))

    def undetected_odds(self) -> float:
        rho = self.detection_probability()
        return (1.0 - rho) / rho


def _log_norm(lams: np.ndarray) -> np.ndarray:
    # log(e^lam - 1), stable for small lam
    lams = np.asarray(lams, dtype=np.float64)
    with np.errstate(divide="ignore"):
        small = np.log(np.expm1(np.minimum(lams, 1.0)))
    return np.where(lams > 1e-6, lams + np.log1p(-np.exp(-lams)), small)


def _log_pmf_matrix(lams: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Matrix of log zero-truncated Poisson pmfs, shape (len(xs), len(lams))."""
    lams = np.atleast_1d(np.asarray(lams, dtype=np.float64))
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    lgx = np.array([math.lgamma(x + 1.0) for x in xs])
    return np.outer(xs, np.log(lams)) - lgx[:, None] - _log_norm(lams)[None, :]


def truncated_poisson_pmf(lam: float, x: int) -> float:
    """Zero-truncated Poisson probability lam^x / (x! (e^lam - 1))."""
    if lam <= 0.0:
        raise ValueError("lam must be > 0")
    if x < 1:
        raise ValueError("x must be >= 1")
    return float(np.exp(_log_pmf_matrix(np.array([lam]), np.array([x]))[0, 0]))


def mixture_pmf(q: MixingDistribution, x) -> float | np.ndarray:
    """Mixture probability at x (scalar or array of positive integers)."""
    xs = np.atleast_1d(np.asarray(x))
    p = np.exp(_log_pmf_matrix(q.atoms, xs)) @ q.weights
    return float(p[0]) if np.isscalar(x) else p


def mixture_cdf(q: MixingDistribution, x_hi: int) -> np.ndarray:
    """Mixture distribution function on 1..x_hi."""
    xs = np.arange(1, x_hi + 1)
    return np.cumsum(mixture_pmf(q, xs))


def odds(q: MixingDistribution) -> float:
    """Undetected odds of the mixture: sum of w_j / (e^atom_j - 1)."""
    return float(np.sum(q.weights / np.expm1(q.atoms)))


def kappa(p: MixingDistribution) -> MixingDistribution:
    """Population-side P to conditional-side Q: reweight by detection."""
    w = p.weights * -np.expm1(-p.atoms)
    return MixingDistribution(p.atoms, w / w.sum())


def kappa_inverse(q: MixingDistribution) -> MixingDistribution:
    """Conditional-side Q back to population-side P."""
    w = q.weights / -np.expm1(-q.atoms)
    return MixingDistribution(q.atoms, w / w.sum())


def log_likelihood(q: MixingDistribution, d: FrequencyData) -> float:
    """Sum of n_x * log f_Q(x) over the observed support."""
    xs = np.array(sorted(d.counts))
    nx = np.array([d.counts[x] for x in xs], dtype=np.float64)
    fq = np.exp(_log_pmf_matrix(q.atoms, xs)) @ q.weights
    return float(nx @ np.log(fq))


def gradient_fn(lam, q: MixingDistribution, d: FrequencyData) -> float | np.ndarray:
    """Directional derivative of the log-likelihood toward a point mass.

    ``D(lam) = sum_x n_x f_lam(x) / f_Q(x) - n``; at the NPMLE the
    supremum over lam is zero.
    """
    xs = np.array(sorted(d.counts))
    nx = np.array([d.counts[x] for x in xs], dtype=np.float64)
    fq = np.exp(_log_pmf_matrix(q.atoms, xs)) @ q.weights
    lams = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    dvals = (nx / fq) @ np.exp(_log_pmf_matrix(lams, xs)) - d.n
    return float(dvals[0]) if np.isscalar(lam) else dvals


@dataclass(frozen=True)
class NpmleConfig:
    """Knobs for the NPMLE fit; defaults reproduce the documented runs.

    ``initial_atoms`` warm-starts the support (used when refitting
    resamples from an already-fitted mixture); the default is a log-spaced
    grid of ``initial_grid_size`` points.
    """

    initial_grid_size: int = 50
    scan_grid_size: int = 400
    grid_lo: float = 1e-3
    scan_lo: float = 1e-4
    grid_hi: float | None = None  # default x_max + 10 sqrt(x_max)
    tolerance: float = 1e-6  # certificate: sup D <= tolerance * n
    max_outer: int = 500
    max_em_sweeps: int = 50_000
    em_param_tol: float = 1e-13
    prune_weight: float = _PRUNE_EPS
    merge_rel: float = 1e-6
    insert_weight: float = 1e-3
    golden_iters: int = 80
    initial_atoms: tuple[float, ...] | None = None
    # stop as soon as the certificate passes, checking it every
    # certificate_interval EM sweeps, instead of waiting for parameter
    # stationarity; used for resample refits where three decimals suffice
    stop_on_certificate: bool = False
    certificate_interval: int = 200


@dataclass(frozen=True)
class NpmleFit:
    """Fitted mixing distribution plus convergence diagnostics."""

    mixture: MixingDistribution
    converged: bool
    outer_iterations: int
    em_sweeps: int
    sup_gradient: float
    log_lik: float
    log_lik_trace: tuple[float, ...]
    config: NpmleConfig

    @property
    def n_atoms(self) -> int:
        return self.mixture.n_atoms


def _golden_max(fn, lo: float, hi: float, iters: int) -> float:
    """Argmax of a unimodal function on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def fit_npmle(d: FrequencyData, config: NpmleConfig | None = None) -> NpmleFit:
    """Nonparametric MLE of the mixing distribution for observed counts."""
    xs = np.array(sorted(d.counts))
    nx = np.array([d.counts[x] for x in xs], dtype=np.float64)
    return fit_weighted(xs, nx, config)


def fit_weighted(
    xs: np.ndarray, nx: np.ndarray, config: NpmleConfig | None = None
) -> NpmleFit:
    """NPMLE for weighted support points (weights need not be integers).

    ``xs`` are the distinct observed counts and ``nx`` their (possibly
    fractional) multiplicities; ``fit_npmle`` is the integer-count wrapper.

    Strategy: support refinement.  Start from a log-spaced grid, run EM to
    stationarity (closed-form weight and rate updates, pruning tiny weights
    and merging twin atoms), then certify by scanning the directional
    derivative D on a finer grid with a golden-section polish at the
    argmax.  While the certificate fails, insert the best candidate atom
    and repeat.  The log-likelihood is monotone across EM sweeps and is
    recorded in the trace.
    """
    cfg = config or NpmleConfig()
    xs = np.asarray(xs, dtype=np.float64)
    nx = np.asarray(nx, dtype=np.float64)
    if xs.size == 0 or np.any(xs < 1) or np.any(nx <= 0):
        raise ValueError("need nonempty support with positive weights")
    n = float(nx.sum())
    x_max = float(xs.max())
    hi = cfg.grid_hi if cfg.grid_hi is not None else x_max + 10.0 * math.sqrt(x_max)

    if cfg.initial_atoms is not None:
        atoms = np.asarray(cfg.initial_atoms, dtype=np.float64)
    else:
        atoms = np.geomspace(cfg.grid_lo, hi, cfg.initial_grid_size)
    w = np.full(atoms.size, 1.0 / atoms.size)
    scan = np.geomspace(cfg.scan_lo, hi, cfg.scan_grid_size)

    trace: list[float] = []
    total_sweeps = 0
    lgx = np.array([math.lgamma(x + 1.0) for x in xs])

    def pmf_matrix(lams: np.ndarray) -> np.ndarray:
        lams = np.atleast_1d(lams)
        return np.exp(np.outer(xs, np.log(lams)) - lgx[:, None] - _log_norm(lams)[None, :])

    def mixture_density(atoms: np.ndarray, w: np.ndarray) -> np.ndarray:
        return pmf_matrix(atoms) @ w

    def gradient(lams: np.ndarray, fq: np.ndarray) -> np.ndarray:
        return (nx / fq) @ pmf_matrix(lams) - n

    def prune_and_merge(atoms: np.ndarray, w: np.ndarray):
        keep = w > cfg.prune_weight
        if not np.any(keep):
            keep = w == w.max()
        atoms, w = atoms[keep], w[keep]
        order = np.argsort(atoms)
        atoms, w = atoms[order], w[order]
        out_a = [atoms[0]]
        out_w = [w[0]]
        for a, wt in zip(atoms[1:], w[1:]):
            if a - out_a[-1] <= cfg.merge_rel * a:
                # weighted-average location keeps the merge mass-preserving
                tot = out_w[-1] + wt
                out_a[-1] = (out_a[-1] * out_w[-1] + a * wt) / tot
                out_w[-1] = tot
            else:
                out_a.append(a)
                out_w.append(wt)
        return np.array(out_a), np.array(out_w)

    def em_block(atoms: np.ndarray, w: np.ndarray, limit: int):
        """Up to ``limit`` EM sweeps; True when parameters went stationary.

        Certificate-gated fits (resample refits) run through the backend
        kernel, which skips the likelihood trace; the traced NumPy loop
        below is the reference path used for base fits.
        """
        nonlocal total_sweeps
        if cfg.stop_on_certificate:
            atoms, w, sweeps, stationary = backend.em_refit(
                xs, nx, lgx, atoms, w, limit,
                cfg.em_param_tol, cfg.prune_weight, cfg.merge_rel,
            )
            total_sweeps += sweeps
            return atoms, w, stationary
        stationary = False
        for _ in range(limit):
            P = pmf_matrix(atoms)
            fq = P @ w
            trace.append(float(nx @ np.log(fq)))
            resp = (nx / fq)[:, None] * P * w[None, :]
            mass = resp.sum(axis=0)
            xbar = (xs[:, None] * resp).sum(axis=0) / mass
            new_atoms = _ztp_mean_root(xbar, atoms)
            new_w = mass / n
            total_sweeps += 1
            if new_atoms.size == atoms.size:
                change = max(
                    float(np.abs(new_atoms - atoms).max()),
                    float(np.abs(new_w - w).max()),
                )
            else:
                change = math.inf
            atoms, w = prune_and_merge(new_atoms, new_w)
            if change < cfg.em_param_tol:
                stationary = True
                break
        return atoms, w / w.sum(), stationary

    def consolidate(atoms: np.ndarray, w: np.ndarray):
        """Merge adjacent atoms whenever the likelihood is indifferent.

        EM collapses redundant atoms onto each other ever more slowly as
        they approach, so parameter stationarity can fire while a cluster
        is still spread out.  Merging a pair is accepted when it costs at
        most 1e-10 * n log-likelihood, which leaves genuinely distinct
        atoms untouched.
        """
        merged_any = False
        while atoms.size > 1:
            ll0 = float(nx @ np.log(mixture_density(atoms, w)))
            gaps = np.argsort(np.diff(atoms) / atoms[1:])
            for i in gaps:
                tot = w[i] + w[i + 1]
                trial_atoms = np.delete(atoms, i + 1)
                trial_w = np.delete(w, i + 1)
                trial_atoms[i] = (atoms[i] * w[i] + atoms[i + 1] * w[i + 1]) / tot
                trial_w[i] = tot
                ll1 = float(nx @ np.log(mixture_density(trial_atoms, trial_w)))
                if ll1 >= ll0 - 1e-10 * n:
                    atoms, w = trial_atoms, trial_w
                    merged_any = True
                    break
            else:
                break
        return atoms, w, merged_any

    def certificate(atoms: np.ndarray, w: np.ndarray):
        """Sup of the gradient over the scan grid plus a polished argmax.

        The golden-section polish around the grid argmax only matters when
        the grid values are already at or below tolerance (a between-grid
        peak could hide there); while the grid max is clearly positive the
        polish is skipped and the grid argmax serves as the insertion
        candidate.
        """
        fq = mixture_density(atoms, w)
        candidates = np.unique(np.concatenate([scan, atoms]))
        dvals = gradient(candidates, fq)
        j = int(np.argmax(dvals))
        if dvals[j] > cfg.tolerance * n:
            return float(dvals[j]), float(candidates[j])
        lo_b = candidates[max(0, j - 1)]
        hi_b = candidates[min(candidates.size - 1, j + 1)]
        polished = _golden_max(
            lambda lam: float(gradient(np.array([lam]), fq)[0]),
            lo_b,
            hi_b,
            cfg.golden_iters,
        )
        d_pol = float(gradient(np.array([polished]), fq)[0])
        if d_pol >= dvals[j]:
            return d_pol, polished
        return float(dvals[j]), float(candidates[j])

    limit = cfg.certificate_interval if cfg.stop_on_certificate else _BASE_EM_BLOCK
    sweep_budget = cfg.max_em_sweeps
    sup_d = math.inf
    outer = 0
    for outer in range(1, cfg.max_outer + 1):
        atoms, w, stationary = em_block(atoms, w, min(limit, max(sweep_budget, 1)))
        sweep_budget = cfg.max_em_sweeps - total_sweeps
        if not cfg.stop_on_certificate:
            atoms, w, merged_any = consolidate(atoms, w)
            if merged_any:
                stationary = False
            if not stationary and sweep_budget > 0:
                continue  # keep polishing before certifying
        sup_d, candidate = certificate(atoms, w)
        if sup_d <= cfg.tolerance * n and (stationary or cfg.stop_on_certificate):
            break
        if sweep_budget <= 0:
            break
        if stationary:
            # EM is done at this support but the certificate failed:
            # bring in the best candidate atom and keep going
            if np.abs(atoms - candidate).min() > cfg.merge_rel * candidate:
                atoms = np.append(atoms, candidate)
                w = np.append(w * (1.0 - cfg.insert_weight), cfg.insert_weight)

    mixture = MixingDistribution(atoms, w / w.sum())
    return NpmleFit(
        mixture=mixture,
        converged=sup_d <= cfg.tolerance * n,
        outer_iterations=outer,
        em_sweeps=total_sweeps,
        sup_gradient=sup_d,
        log_lik=trace[-1] if trace else math.nan,
        log_lik_trace=tuple(trace),
        config=cfg,
    )


def single_atom_mle(d: FrequencyData) -> float:
    """Rate of the best single-atom fit: root of lam/(1-e^-lam) = S/n."""
    root = _ztp_mean_root(np.array([d.S / d.n]), np.array([max(d.S / d.n - 1.0, 0.5)]))
    return float(root[0])
