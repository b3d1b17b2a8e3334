"""Synthetic sampling, model-based bootstrap and coverage experiments.

Reproducibility contract: every replicate b derives its own generator
from ``SeedSequence(seed, spawn_key=(b,))`` (NumPy PCG64), and replicate
results are aggregated by index, so a run is bit-for-bit reproducible for
a given (seed, config) regardless of chunking or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .backend import zt_mixture_counts
from .classical import (
    UndefinedEstimateError,
    estimate_set_from_mixture,
    odds_chao_bunge,
    odds_chao_lee,
    odds_darroch_ratcliff,
)
from .hankel import ladder
from .ingest import FrequencyData, from_raw_counts
from .npmle import (
    MixingDistribution,
    NpmleConfig,
    PopulationModel,
    _log_pmf_matrix,
    fit_weighted,
)

__all__ = [
    "ResampleSummary",
    "CoverageResult",
    "RNG_DESCRIPTION",
    "sample_population",
    "sample_truncated",
    "default_estimators",
    "bootstrap_quantiles",
    "coverage_experiment",
    "replicate_rng",
]

RNG_DESCRIPTION = "numpy PCG64 via SeedSequence(seed, spawn_key=(replicate,))"

_CDF_TAIL = 1e-15


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Independent generator for replicate b of a seeded experiment."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def sample_population(
    model: PopulationModel, rng: np.random.Generator
) -> tuple[FrequencyData | None, int]:
    """Draw per-class counts for all c classes; untruncated Poisson.

    Returns the frequency data of detected classes and the true number of
    undetected classes.  Returns (None, c) when no class is detected.
    """
    atoms = model.P.atoms
    weights = model.P.weights / model.P.mass
    idx = rng.choice(atoms.size, size=model.c, p=weights)
    counts = rng.poisson(atoms[idx])
    detected = counts[counts > 0]
    if detected.size == 0:
        return None, model.c
    return from_raw_counts(detected.tolist()), model.c - detected.size


def _mixture_tables(q: MixingDistribution):
    """Per-atom zero-truncated inverse-cdf tables for the sampler kernel.

    Tables extend until the per-atom cdf exceeds 1 - 1e-15, so inverse
    sampling is exact to beyond-double resolution; draws past the table
    clamp to its last entry.
    """
    weights = q.weights / q.mass
    weight_cdf = np.cumsum(weights)
    weight_cdf[-1] = 1.0
    tables = []
    offsets = [0]
    for lam in q.atoms:
        cap = int(math.ceil(lam + 12.0 * math.sqrt(lam) + 45.0))
        xs = np.arange(1, cap + 1)
        cdf = np.cumsum(np.exp(_log_pmf_matrix(np.array([lam]), xs))[:, 0])
        stop = int(np.searchsorted(cdf, 1.0 - _CDF_TAIL, side="left")) + 1
        cdf = cdf[:stop]
        tables.append(cdf)
        offsets.append(offsets[-1] + cdf.size)
    return weight_cdf, np.concatenate(tables), np.array(offsets, dtype=np.int64)


def sample_truncated(
    q: MixingDistribution, n: int, rng: np.random.Generator
) -> FrequencyData:
    """n class counts from the zero-truncated mixture, by inverse cdf."""
    if n < 1:
        raise ValueError("n must be >= 1")
    weight_cdf, count_cdf, offsets = _mixture_tables(q)
    u_atom = rng.random(n)
    u_count = rng.random(n)
    values = zt_mixture_counts(u_atom, u_count, weight_cdf, count_cdf, offsets)
    return from_raw_counts(values.tolist())


def default_estimators(k_cap: int) -> tuple[str, ...]:
    """Estimator names for the bootstrap: functionals plus bounds 1..k_cap."""
    return ("odds_dr", "odds_cl", "odds_cb") + tuple(
        f"odds_{k}" for k in range(1, k_cap + 1)
    )


def _wanted_orders(names: tuple[str, ...]) -> list[int]:
    return [int(n.split("_")[1]) for n in names if n.split("_")[1].isdigit()]


def _evaluate_empirical(d: FrequencyData, names: tuple[str, ...]) -> dict[str, float]:
    """Plug-in estimates on a replicate's empirical pmf.

    Bound estimates past the replicate's own support rank use the
    saturated (largest computed) value, mirroring how the bound sequence
    is reported; they count as defined as long as the rank is >= 1.
    """
    out: dict[str, float] = {}
    pmf = d.pmf_map()
    f1 = d.pmf(1)
    s1 = math.fsum(x * p for x, p in pmf.items())
    s2 = math.fsum(x * x * p for x, p in pmf.items())
    for name, fn, args in (
        ("odds_dr", odds_darroch_ratcliff, (f1, s1)),
        ("odds_cl", odds_chao_lee, (f1, s1, s2)),
        ("odds_cb", odds_chao_bunge, (f1, s1, s2)),
    ):
        if name in names:
            try:
                out[name] = fn(*args)
            except UndefinedEstimateError:
                pass
    wanted_k = _wanted_orders(names)
    if wanted_k:
        lad = ladder(d, max(wanted_k))
        padded = lad.padded(max(wanted_k))
        for k in wanted_k:
            if lad.chi_hat >= 1:
                out[f"odds_{k}"] = padded[k - 1]
    return out


def _evaluate_refit(
    d: FrequencyData, names: tuple[str, ...], refit_config: NpmleConfig
) -> dict[str, float]:
    """Refit the mixing distribution to a replicate, evaluate on the fit.

    This mirrors the production workflow, where every reported estimate is
    a functional of the fitted mixture's density; the bound sequence is
    saturated past the fit's own support size.
    """
    xs = np.array(sorted(d.counts), dtype=np.float64)
    nx = np.array([d.counts[x] for x in sorted(d.counts)], dtype=np.float64)
    try:
        fit = fit_weighted(xs, nx, refit_config)
        wanted_k = _wanted_orders(names)
        est = estimate_set_from_mixture(fit.mixture, d.n, k_cap=max(wanted_k, default=1))
    except (ValueError, np.linalg.LinAlgError):
        # a degenerate replicate (e.g. every class seen once): all its
        # estimators count as missing
        return {}
    out: dict[str, float] = {}
    for name, value in (
        ("odds_dr", est.theta_dr),
        ("odds_cl", est.theta_cl),
        ("odds_cb", est.theta_cb),
    ):
        if name in names and value is not None:
            out[name] = value
    if wanted_k and est.theta_ladder:
        padded = est.theta_ladder + (est.theta_ladder[-1],) * (
            max(wanted_k) - len(est.theta_ladder)
        )
        for k in wanted_k:
            out[f"odds_{k}"] = padded[k - 1]
    return out


def resample_fit_config(q_hat: MixingDistribution) -> NpmleConfig:
    """Refit knobs for resampled data: warm start at the base support.

    Stationarity is relaxed relative to the base fit (resample quantiles
    need three decimals, not twelve); the optimality certificate still
    gates convergence, inserting atoms where the warm support falls short.
    """
    return NpmleConfig(
        initial_atoms=tuple(q_hat.atoms),
        em_param_tol=1e-10,
        max_em_sweeps=20_000,
        max_outer=200,
        stop_on_certificate=True,
        scan_grid_size=200,
        golden_iters=32,
    )


@dataclass(frozen=True)
class ResampleSummary:
    """Bootstrap quantiles per estimator, with missing-replicate counts."""

    estimators: tuple[str, ...]
    quantiles: dict[str, float]
    missing: dict[str, int]
    B: int
    n: int
    alpha_q: float
    seed: int
    basis: str = "npmle"
    rng: str = RNG_DESCRIPTION
    replicates: dict[str, np.ndarray] | None = None


def bootstrap_quantiles(
    q_hat: MixingDistribution,
    n: int,
    B: int,
    alpha_q: float = 0.05,
    estimators: tuple[str, ...] | None = None,
    seed: int = 0,
    basis: str = "npmle",
    keep_replicates: bool = False,
    threads: int = 1,
    unconditional_c: int | None = None,
) -> ResampleSummary:
    """Lower alpha_q quantiles of estimator values over B model resamples.

    Each replicate resamples n counts from the fitted mixture (or, when
    ``unconditional_c`` is given, first redraws the detected-class count
    as binomial(c, 1/(1+odds))) and re-evaluates every estimator.  With
    the default basis "npmle" the mixing distribution is refitted to each
    replicate and the estimators are functionals of the refit; basis
    "empirical" evaluates the plug-in estimators on the replicate's pmf.
    Estimators undefined in a replicate are excluded from that
    estimator's quantile and counted in ``missing``; an estimator
    undefined in more than half the replicates is reported as NaN.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if basis not in ("npmle", "empirical"):
        raise ValueError("basis must be 'npmle' or 'empirical'")
    names = estimators or default_estimators(1)
    weight_cdf, count_cdf, offsets = _mixture_tables(q_hat)
    refit_config = resample_fit_config(q_hat) if basis == "npmle" else None
    if unconditional_c is not None:
        from .npmle import odds as _odds

        detect_p = 1.0 / (1.0 + _odds(q_hat.normalized()))

    def one(b: int) -> dict[str, float]:
        rng = replicate_rng(seed, b)
        size = n
        if unconditional_c is not None:
            size = int(rng.binomial(unconditional_c, detect_p))
            if size < 1:
                return {}
        u_atom = rng.random(size)
        u_count = rng.random(size)
        values = zt_mixture_counts(u_atom, u_count, weight_cdf, count_cdf, offsets)
        data = from_raw_counts(values.tolist())
        if basis == "npmle":
            return _evaluate_refit(data, names, refit_config)
        return _evaluate_empirical(data, names)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(B)))
    else:
        results = [one(b) for b in range(B)]

    quantiles: dict[str, float] = {}
    missing: dict[str, int] = {}
    reps: dict[str, np.ndarray] = {}
    for name in names:
        vals = np.array([r[name] for r in results if name in r])
        missing[name] = B - vals.size
        if vals.size == 0 or missing[name] > B // 2:
            quantiles[name] = math.nan
        else:
            quantiles[name] = float(np.quantile(vals, alpha_q))
        if keep_replicates:
            reps[name] = vals
    return ResampleSummary(
        estimators=tuple(names),
        quantiles=quantiles,
        missing=missing,
        B=B,
        n=n,
        alpha_q=alpha_q,
        seed=seed,
        basis=basis,
        replicates=reps if keep_replicates else None,
    )


@dataclass(frozen=True)
class CoverageResult:
    rate: float
    wilson_low: float
    wilson_high: float
    runs: int
    skipped: int = 0


def _wilson(hits: int, total: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if total == 0:
        return 0.0, 1.0
    p = hits / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2 * total)) / denom
    half = z * math.sqrt(p * (1.0 - p) / total + z * z / (4 * total * total)) / denom
    return center - half, center + half


def coverage_experiment(
    truth,
    limit_fn,
    runs: int,
    seed: int = 0,
    n: int | None = None,
) -> CoverageResult:
    """Fraction of synthetic runs where a lower limit stays below truth.

    ``truth`` is either a normalized mixing distribution (odds-level
    check, requires ``n``) or a PopulationModel (count-level check:
    floor(n (1 + limit)) <= c).  ``limit_fn`` maps a FrequencyData to the
    lower limit; runs where it raises, or where nothing is detected, are
    skipped and counted.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    hits = 0
    used = 0
    skipped = 0
    if isinstance(truth, PopulationModel):
        for b in range(runs):
            rng = replicate_rng(seed, b)
            data, _ = sample_population(truth, rng)
            if data is None:
                skipped += 1
                continue
            try:
                limit = limit_fn(data)
            except Exception:
                skipped += 1
                continue
            used += 1
            if math.floor(data.n * (1.0 + limit)) <= truth.c:
                hits += 1
    else:
        from .npmle import odds as _odds

        if n is None:
            raise ValueError("odds-level experiment needs the sample size n")
        true_theta = _odds(truth)
        for b in range(runs):
            rng = replicate_rng(seed, b)
            data = sample_truncated(truth, n, rng)
            try:
                limit = limit_fn(data)
            except Exception:
                skipped += 1
                continue
            used += 1
            if limit <= true_theta:
                hits += 1
    rate = hits / used if used else 0.0
    low, high = _wilson(hits, used)
    return CoverageResult(rate=rate, wilson_low=low, wilson_high=high, runs=used, skipped=skipped)
