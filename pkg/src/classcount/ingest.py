"""Frequency-of-frequencies count data: parsing, validation, summaries.

The basic object is a sparse map ``x -> n_x`` where ``n_x`` is the number
of classes observed exactly ``x`` times.  ``n`` is the number of detected
classes and ``S`` the number of sampled individuals; both are always
derived from the counts, never taken on faith from a file header.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping

__all__ = [
    "DataFormatError",
    "FrequencyData",
    "parse_frequencies",
    "parse_raw_counts",
    "from_raw_counts",
    "power_moment",
    "load_bundled",
]

# largest x for which x! is exactly representable as a float64
_FACTORIAL_CAP = 170


class DataFormatError(ValueError):
    """Malformed count-data input; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class FrequencyData:
    """Immutable frequency counts with derived totals.

    Attributes:
        counts: sparse map from observed count x (>= 1) to the number of
            classes n_x (> 0) seen exactly x times.
        n: number of detected classes, sum of n_x.
        S: number of sampled individuals, sum of x * n_x.
        x_max: largest observed x.
    """

    counts: dict[int, int]
    n: int = field(init=False)
    S: int = field(init=False)
    x_max: int = field(init=False)

    def __post_init__(self) -> None:
        clean: dict[int, int] = {}
        for x, nx in sorted(self.counts.items()):
            if x < 1:
                raise ValueError(f"count value x={x} must be >= 1")
            if nx < 0:
                raise ValueError(f"n_x for x={x} must be >= 0")
            if nx > 0:
                clean[int(x)] = int(nx)
        if not clean:
            raise ValueError("empty input: no classes observed")
        object.__setattr__(self, "counts", clean)
        object.__setattr__(self, "n", sum(clean.values()))
        object.__setattr__(self, "S", sum(x * nx for x, nx in clean.items()))
        object.__setattr__(self, "x_max", max(clean))

    def pmf(self, x: int) -> float:
        """Empirical probability n_x / n (0 when x is unobserved)."""
        if x < 1:
            raise ValueError("x must be >= 1")
        return self.counts.get(x, 0) / self.n

    def pmf_map(self) -> dict[int, float]:
        """Empirical probabilities as a sparse map."""
        return {x: nx / self.n for x, nx in self.counts.items()}

    def moment(self, x: int) -> float:
        """Empirical rate-measure moment x! * n_x / n.

        These are the raw moments of the latent measure whose zeroth
        moment is the undetected odds; x is capped so x! stays exactly
        representable in float64.
        """
        if x < 1:
            raise ValueError("x must be >= 1")
        if x > _FACTORIAL_CAP:
            raise OverflowError(f"x={x} exceeds exact factorial range")
        return math.factorial(x) * self.counts.get(x, 0) / self.n

    def cdf_values(self, x_hi: int | None = None) -> list[float]:
        """Empirical distribution function on 1..x_hi (default x_max)."""
        hi = self.x_max if x_hi is None else x_hi
        acc = 0.0
        out = []
        for x in range(1, hi + 1):
            acc += self.counts.get(x, 0)
            out.append(acc / self.n)
        return out

    def to_values(self) -> list[int]:
        """Expand back to the sorted multiset of per-class counts."""
        out: list[int] = []
        for x, nx in sorted(self.counts.items()):
            out.extend([x] * nx)
        return out


def parse_frequencies(text: str) -> FrequencyData:
    """Parse "x n_x" pairs, one per line; '#' starts a comment line.

    Zero-count entries are dropped; duplicate x values are rejected.
    """
    counts: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(f"expected 'x n_x', got {line!r}", lineno)
        try:
            x, nx = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError(f"non-integer field in {line!r}", lineno) from None
        if x < 1:
            raise DataFormatError(f"x must be >= 1, got {x}", lineno)
        if nx < 0:
            raise DataFormatError(f"n_x must be >= 0, got {nx}", lineno)
        if x in counts:
            raise DataFormatError(f"duplicate x value {x}", lineno)
        counts[x] = nx
    if not any(counts.values()):
        raise DataFormatError("empty input (n = 0)")
    return FrequencyData(counts)


def parse_raw_counts(text: str) -> FrequencyData:
    """Parse one positive per-class count per line ('#' comments allowed)."""
    values: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            v = int(line)
        except ValueError:
            raise DataFormatError(f"non-integer value {line!r}", lineno) from None
        if v < 1:
            raise DataFormatError(f"count must be >= 1, got {v}", lineno)
        values.append(v)
    if not values:
        raise DataFormatError("empty input (n = 0)")
    return from_raw_counts(values)


def from_raw_counts(values: Iterable[int]) -> FrequencyData:
    """Tabulate per-class observed counts into FrequencyData."""
    counts: dict[int, int] = {}
    empty = True
    for v in values:
        empty = False
        v = int(v)
        if v < 1:
            raise ValueError(f"count must be >= 1, got {v}")
        counts[v] = counts.get(v, 0) + 1
    if empty:
        raise ValueError("empty input (n = 0)")
    return FrequencyData(counts)


def power_moment(pmf: Mapping[int, float], order: int) -> float:
    """Sum of x**order * pmf(x) over the support; order 0 returns 1.

    The pmf must sum to 1 (checked to 1e-12 on the finite support).
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    total = math.fsum(pmf.values())
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"pmf sums to {total!r}, not 1")
    if order == 0:
        return 1.0
    return math.fsum(x**order * p for x, p in pmf.items())


def load_bundled(name: str) -> FrequencyData:
    """Load a dataset shipped with the package ("cholera" or "est")."""
    path = resources.files("classcount.data").joinpath(f"{name}.freq")
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(f"no bundled dataset named {name!r}") from None
    return parse_frequencies(text)
