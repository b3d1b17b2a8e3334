"""Testing affinity between a binomial and its Poisson approximation.

For a population of c classes each detected with probability rho, the
detected-class count is binomial(c, rho), nearly indistinguishable from
Poisson(c * rho).  The affinity — the summed pointwise minimum of the two
pmfs — lower-bounds (minus alpha) the probability that any honest upper
confidence limit for c is infinite, which is why class-count inference is
one-sided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AffinityResult",
    "affinity",
    "affinity_floor",
    "infinite_ucl_probability_bound",
    "affinity_table",
]

_C_CAP = 1_000_000


def _log_binom_pmf(c: int, rho: float, xs: np.ndarray) -> np.ndarray:
    lg = math.lgamma
    out = np.full(xs.size, -np.inf)
    for i, x in enumerate(xs):
        x = int(x)
        base = lg(c + 1) - lg(x + 1) - lg(c - x + 1)
        if rho == 0.0:
            out[i] = 0.0 if x == 0 else -np.inf
        elif rho == 1.0:
            out[i] = 0.0 if x == c else -np.inf
        else:
            out[i] = base + x * math.log(rho) + (c - x) * math.log1p(-rho)
    return out


def _log_poisson_pmf(mean: float, xs: np.ndarray) -> np.ndarray:
    if mean == 0.0:
        return np.where(xs == 0, 0.0, -np.inf)
    lgx = np.array([math.lgamma(x + 1.0) for x in xs])
    return -mean + xs * math.log(mean) - lgx


def affinity(c: int, rho: float) -> float:
    """Sum over x = 0..c of min(binomial(c, rho), Poisson(c rho)) pmfs.

    The sum runs exactly over 0..c; the Poisson tail beyond c is excluded
    by construction.  Probabilities are computed in log space.
    """
    if c < 1:
        raise ValueError("c must be >= 1")
    if c > _C_CAP:
        raise ValueError(f"c capped at {_C_CAP} for the direct sum")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    xs = np.arange(0, c + 1, dtype=np.float64)
    log_b = _log_binom_pmf(c, rho, xs)
    log_p = _log_poisson_pmf(c * rho, xs)
    return float(np.exp(np.minimum(log_b, log_p)).sum())


def affinity_floor(rho: float) -> float:
    """Distribution-free lower bound 1 - rho / (2 sqrt(1 - rho)).

    Valid for rho < 1; the bound depends on the detection probability
    only, not on the class count.
    """
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must be in [0, 1)")
    return 1.0 - rho / (2.0 * math.sqrt(1.0 - rho))


def infinite_ucl_probability_bound(c: int, rho: float, alpha: float) -> float:
    """Lower bound affinity(c, rho) - alpha for Pr(upper limit = infinity).

    May be negative, in which case the bound carries no information.
    """
    return affinity(c, rho) - alpha


@dataclass(frozen=True)
class AffinityResult:
    c: int
    rho: float
    affinity: float
    floor_bound: float | None
    infinite_ucl_lower_bound: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.affinity <= 1.0 + 1e-12:
            raise ValueError("affinity outside [0, 1]")
        if self.floor_bound is not None and self.floor_bound >= 0.0:
            if self.affinity < self.floor_bound - 1e-9:
                raise ValueError("affinity below its distribution-free floor")


def affinity_table(
    cs: list[int], rhos: list[float], alpha: float = 0.05
) -> list[AffinityResult]:
    """Affinity and bound values over a (c, rho) grid."""
    out = []
    for c in cs:
        for rho in rhos:
            a = affinity(c, rho)
            out.append(
                AffinityResult(
                    c=c,
                    rho=rho,
                    affinity=a,
                    floor_bound=affinity_floor(rho) if rho < 1.0 else None,
                    infinite_ucl_lower_bound=a - alpha,
                )
            )
    return out
