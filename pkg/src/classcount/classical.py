"""Closed-form odds functionals and the plug-in class-count estimate.

The three functionals below predate the moment-matrix bounds; each maps
the singleton probability f(1) and the first two power sums s1, s2 of the
count distribution to an estimate of the undetected odds.  All three
agree with the true odds when the mixing distribution is a single atom.
The class count itself is recovered by ``pseudo_mle``: the integer part
of n * (1 + odds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .hankel import DEFAULT_K_CAP, LadderTruncationError, ladder, ladder_from_moments, model_moments
from .ingest import FrequencyData
from .npmle import MixingDistribution, mixture_pmf

__all__ = [
    "UndefinedEstimateError",
    "EstimateSet",
    "odds_darroch_ratcliff",
    "odds_chao_lee",
    "odds_chao_bunge",
    "pseudo_mle",
    "chao1",
    "estimate_set",
    "estimate_set_from_mixture",
]


class UndefinedEstimateError(ValueError):
    """The functional's denominator vanishes for these inputs."""


def odds_darroch_ratcliff(f1: float, s1: float) -> float:
    """1 / (1 - f(1)/s1) - 1."""
    if s1 <= f1:
        raise UndefinedEstimateError("requires s1 > f(1)")
    return 1.0 / (1.0 - f1 / s1) - 1.0


def odds_chao_lee(f1: float, s1: float, s2: float) -> float:
    """Sample-coverage functional of f(1), s1 and s2."""
    denom = (s1 - f1) ** 2
    if denom == 0.0:
        raise UndefinedEstimateError("requires s1 != f(1)")
    return (f1 * (s2 - s1) + s1 * (1.0 - f1) * (s1 - f1)) / denom - 1.0


def odds_chao_bunge(f1: float, s1: float, s2: float) -> float:
    """(1 - f(1)) / (1 - f(1) s2 / s1^2) - 1; may be negative.

    A negative value is a diagnostic of the functional failing on
    heterogeneous data and is reported verbatim, never clamped.
    """
    denom = 1.0 - f1 * s2 / s1**2
    if denom == 0.0:
        raise UndefinedEstimateError("requires f(1) s2 != s1^2")
    return (1.0 - f1) / denom - 1.0


def pseudo_mle(n: int, theta: float) -> int:
    """Integer part of n * (1 + theta), the plug-in class count."""
    if not math.isfinite(theta) or theta < 0.0:
        raise ValueError(f"theta must be finite and >= 0, got {theta!r}")
    return math.floor(n * (1.0 + theta))


def chao1(d: FrequencyData) -> int:
    """Abundance lower-bound estimate n + n_1^2 / (2 n_2).

    Identical to the plug-in count at the order-1 moment bound.
    """
    n2 = d.counts.get(2, 0)
    if n2 == 0:
        raise UndefinedEstimateError("chao1 needs n_2 > 0")
    n1 = d.counts.get(1, 0)
    return math.floor(d.n + n1 * n1 / (2.0 * n2))


@dataclass(frozen=True)
class EstimateSet:
    """All odds estimates on one basis (empirical or fitted model).

    ``c_hats`` maps estimator names to plug-in class counts; estimators
    with a negative odds value get no count and are listed in ``notes``.
    """

    theta_dr: float | None
    theta_cl: float | None
    theta_cb: float | None
    theta_ladder: tuple[float, ...]
    c_hats: dict[str, int]
    n: int
    notes: tuple[str, ...] = field(default_factory=tuple)

    def named_odds(self) -> dict[str, float]:
        out: dict[str, float] = {}
        if self.theta_dr is not None:
            out["odds_dr"] = self.theta_dr
        if self.theta_cl is not None:
            out["odds_cl"] = self.theta_cl
        if self.theta_cb is not None:
            out["odds_cb"] = self.theta_cb
        for i, t in enumerate(self.theta_ladder, start=1):
            out[f"odds_{i}"] = t
        return out


def _assemble(
    n: int,
    f1: float,
    s1: float,
    s2: float,
    theta_ladder: tuple[float, ...],
) -> EstimateSet:
    notes: list[str] = []
    values: dict[str, float | None] = {}
    for name, fn, args in (
        ("theta_dr", odds_darroch_ratcliff, (f1, s1)),
        ("theta_cl", odds_chao_lee, (f1, s1, s2)),
        ("theta_cb", odds_chao_bunge, (f1, s1, s2)),
    ):
        try:
            values[name] = fn(*args)
        except UndefinedEstimateError as exc:
            values[name] = None
            notes.append(f"{name} undefined: {exc}")
    c_hats: dict[str, int] = {}
    for key, theta in (
        ("dr", values["theta_dr"]),
        ("cl", values["theta_cl"]),
        ("cb", values["theta_cb"]),
    ):
        if theta is None:
            continue
        if theta < 0.0:
            notes.append(f"odds_{key} negative ({theta:.3f}); no class count")
            continue
        c_hats[f"odds_{key}"] = pseudo_mle(n, theta)
    for i, theta in enumerate(theta_ladder, start=1):
        c_hats[f"odds_{i}"] = pseudo_mle(n, theta)
    return EstimateSet(
        theta_dr=values["theta_dr"],
        theta_cl=values["theta_cl"],
        theta_cb=values["theta_cb"],
        theta_ladder=theta_ladder,
        c_hats=c_hats,
        n=n,
        notes=tuple(notes),
    )


def estimate_set(d: FrequencyData, k_cap: int = DEFAULT_K_CAP) -> EstimateSet:
    """Empirical-basis estimates for observed count data."""
    pmf = d.pmf_map()
    f1 = d.pmf(1)
    s1 = math.fsum(x * p for x, p in pmf.items())
    s2 = math.fsum(x * x * p for x, p in pmf.items())
    lad = ladder(d, k_cap)
    return _assemble(d.n, f1, s1, s2, lad.theta)


def estimate_set_from_mixture(
    q: MixingDistribution, n: int, k_cap: int = DEFAULT_K_CAP
) -> EstimateSet:
    """Model-basis estimates: functionals of a fitted mixture's density.

    f(1), s1 and s2 are evaluated in closed form (power sums of the
    zero-truncated mixture); the ladder uses the exact model moments and
    is padded with its saturated value when it ends before ``k_cap``.
    """
    import numpy as np

    f1 = float(mixture_pmf(q, 1))
    scale = q.weights / -np.expm1(-q.atoms)
    s1 = float(np.sum(scale * q.atoms))
    s2 = float(np.sum(scale * (q.atoms + q.atoms**2)))
    try:
        lad = ladder_from_moments(model_moments(q, k_cap), k_cap)
        theta_ladder = lad.theta
    except LadderTruncationError:
        theta_ladder = ()
    return _assemble(n, f1, s1, s2, theta_ladder)
