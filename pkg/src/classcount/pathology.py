"""Why the odds cannot be estimated two-sidedly: a contamination demo.

Moving a vanishing fraction of mixing mass onto a vanishing rate barely
changes the observable count density but blows the undetected odds up to
infinity.  ``blowup_trace`` walks that contamination path and records the
odds together with certified total-variation and Hellinger distances, so
the discontinuity can be inspected numerically row by row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .npmle import MixingDistribution, mixture_pmf, odds

__all__ = [
    "CertifiedDistance",
    "ContaminationRow",
    "ContaminationTrace",
    "contaminate",
    "choose_truncation",
    "total_variation",
    "hellinger",
    "blowup_trace",
]

_TAIL_TARGET = 1e-10


def contaminate(q: MixingDistribution, pi: float, eta: float) -> MixingDistribution:
    """Mix (1 - pi) of q with a point mass pi at rate eta."""
    if not 0.0 <= pi <= 1.0:
        raise ValueError("pi must be in [0, 1]")
    if eta <= 0.0:
        raise ValueError("eta must be > 0")
    if pi == 0.0:
        return q
    if pi == 1.0:
        return MixingDistribution(np.array([eta]), np.array([1.0]))
    atoms = list(q.atoms)
    weights = list(q.weights * (1.0 - pi))
    hit = [i for i, a in enumerate(atoms) if a == eta]
    if hit:
        weights[hit[0]] += pi
    else:
        atoms.append(eta)
        weights.append(pi)
    return MixingDistribution(np.array(atoms), np.array(weights))


def choose_truncation(q: MixingDistribution, g: MixingDistribution) -> int:
    """Smallest cap T with both mixture tails below the 1e-10 target.

    Starts from a Chernoff-style guess past every atom and doubles until
    the exact remaining mass (1 minus the summed pmf) certifies the tail.
    """
    biggest = max(float(q.atoms.max()), float(g.atoms.max()))
    t = int(max(50.0, math.ceil(biggest + 12.0 * math.sqrt(biggest) + 30.0)))
    for _ in range(20):
        xs = np.arange(1, t + 1)
        tail_q = 1.0 - float(np.sum(mixture_pmf(q, xs)))
        tail_g = 1.0 - float(np.sum(mixture_pmf(g, xs)))
        if tail_q < _TAIL_TARGET and tail_g < _TAIL_TARGET:
            return t
        t *= 2
    raise RuntimeError("could not certify tails; atoms too large?")


@dataclass(frozen=True)
class CertifiedDistance:
    """Truncated distance plus the certified bound on what the tail adds."""

    value: float  # sum over 1..truncation
    tail: float  # certified remainder bound
    truncation: int

    @property
    def upper(self) -> float:
        return self.value + self.tail


def total_variation(
    q: MixingDistribution, g: MixingDistribution, truncation: int | None = None
) -> CertifiedDistance:
    """Certified interval for the L1 distance of the two mixture pmfs."""
    t = choose_truncation(q, g) if truncation is None else truncation
    xs = np.arange(1, t + 1)
    fq = mixture_pmf(q, xs)
    fg = mixture_pmf(g, xs)
    value = float(np.abs(fq - fg).sum())
    tail = (1.0 - float(fq.sum())) + (1.0 - float(fg.sum()))
    return CertifiedDistance(value=value, tail=max(tail, 0.0), truncation=t)


def hellinger(
    q: MixingDistribution, g: MixingDistribution, truncation: int | None = None
) -> float:
    """Hellinger distance of the two mixture pmfs (tails < 1e-10 each)."""
    t = choose_truncation(q, g) if truncation is None else truncation
    xs = np.arange(1, t + 1)
    fq = mixture_pmf(q, xs)
    fg = mixture_pmf(g, xs)
    return math.sqrt(float(((np.sqrt(fq) - np.sqrt(fg)) ** 2).sum()))


@dataclass(frozen=True)
class ContaminationRow:
    s: float
    pi_s: float
    eta_s: float
    theta_mixed: float
    tv_value: float
    tv_tail: float
    tv_bound: float  # 2 * pi_s
    hellinger: float


@dataclass(frozen=True)
class ContaminationTrace:
    base_odds: float
    rows: tuple[ContaminationRow, ...]


def blowup_trace(q: MixingDistribution, s_values) -> ContaminationTrace:
    """Contamination path pi(s) = s, eta(s) = s^2 for decreasing s.

    As s -> 0 the odds column diverges while both distance columns vanish:
    the odds is discontinuous in any metric the data can see.  Each row
    cross-checks the mixed odds against its closed form
    ``(1 - s) odds(q) + s / (e^(s^2) - 1)`` to 1e-12.
    """
    base = odds(q)
    rows = []
    for s in s_values:
        if not 0.0 < s < 1.0:
            raise ValueError("s values must lie in (0, 1)")
        pi_s, eta_s = s, s * s
        mixed = contaminate(q, pi_s, eta_s)
        theta_mixed = odds(mixed)
        closed_form = (1.0 - pi_s) * base + pi_s / math.expm1(eta_s)
        if not math.isclose(theta_mixed, closed_form, rel_tol=1e-12, abs_tol=1e-12):
            raise RuntimeError(
                f"mixed odds {theta_mixed!r} disagrees with closed form {closed_form!r}"
            )
        tv = total_variation(q, mixed)
        rows.append(
            ContaminationRow(
                s=s,
                pi_s=pi_s,
                eta_s=eta_s,
                theta_mixed=theta_mixed,
                tv_value=tv.value,
                tv_tail=tv.tail,
                tv_bound=2.0 * pi_s,
                hellinger=hellinger(q, mixed, tv.truncation),
            )
        )
    return ContaminationTrace(base_odds=base, rows=tuple(rows))
