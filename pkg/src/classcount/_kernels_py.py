"""NumPy implementations of the Monte Carlo hot kernels.

These are the fallback twins of the compiled kernels in ``_kernels_cy``.
Both backends must return bit-identical results for identical inputs: the
random numbers are always drawn by the caller, so a kernel is a pure
function of its array arguments.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def ks_statistics(e: np.ndarray) -> np.ndarray:
    """Kolmogorov statistics of uniform samples, one per row.

    Each row of ``e`` holds n+1 standard-exponential variates; their
    normalized partial sums are exactly the order statistics of n
    uniforms, so no sorting is needed.  Returns, per row,
    ``sup_t |G_n(t) - t|`` for the empirical distribution function G_n of
    that uniform sample.
    """
    e = np.ascontiguousarray(e, dtype=np.float64)
    if e.ndim != 2 or e.shape[1] < 2:
        raise ValueError("expected a 2-d array with n+1 >= 2 columns")
    n = e.shape[1] - 1
    s = np.cumsum(e, axis=1)
    u = s[:, :n] / s[:, [n]]
    i = np.arange(1, n + 1, dtype=np.float64)
    d_plus = (i / n - u).max(axis=1)
    d_minus = (u - (i - 1.0) / n).max(axis=1)
    return np.maximum(d_plus, d_minus)


def em_refit(
    xs: np.ndarray,
    nx: np.ndarray,
    lgx: np.ndarray,
    atoms: np.ndarray,
    weights: np.ndarray,
    max_sweeps: int,
    param_tol: float,
    prune_eps: float,
    merge_rel: float,
) -> tuple[np.ndarray, np.ndarray, int, bool]:
    """EM sweeps for a zero-truncated Poisson mixture, without tracing.

    Weight and closed-form rate updates, pruning weights below
    ``prune_eps`` and merging atoms within relative distance ``merge_rel``,
    until the largest parameter change drops below ``param_tol`` or
    ``max_sweeps`` is reached.  Returns (atoms, weights, sweeps done,
    stationary flag); weights are renormalized on return.

    This is the refit hot loop; the compiled twin runs the same algorithm
    with scalar arithmetic, so across backends results agree to floating-
    point noise rather than bit-for-bit.
    """
    xs = np.asarray(xs, dtype=np.float64)
    nx = np.asarray(nx, dtype=np.float64)
    atoms = np.asarray(atoms, dtype=np.float64).copy()
    weights = np.asarray(weights, dtype=np.float64).copy()
    n = float(nx.sum())
    stationary = False
    sweeps = 0
    for _ in range(max_sweeps):
        with np.errstate(divide="ignore"):
            small = np.log(np.expm1(np.minimum(atoms, 1.0)))
        log_norm = np.where(atoms > 1e-6, atoms + np.log1p(-np.exp(-atoms)), small)
        p = np.exp(np.outer(xs, np.log(atoms)) - lgx[:, None] - log_norm[None, :])
        fq = p @ weights
        resp = (nx / fq)[:, None] * p * weights[None, :]
        mass = resp.sum(axis=0)
        xbar = (xs[:, None] * resp).sum(axis=0) / mass
        new_atoms = _ztp_mean_root(xbar, atoms)
        new_w = mass / n
        sweeps += 1
        change = max(
            float(np.abs(new_atoms - atoms).max()),
            float(np.abs(new_w - weights).max()),
        )
        keep = new_w > prune_eps
        if not np.any(keep):
            keep = new_w == new_w.max()
        atoms, weights = new_atoms[keep], new_w[keep]
        order = np.argsort(atoms)
        atoms, weights = atoms[order], weights[order]
        out_a = [atoms[0]]
        out_w = [weights[0]]
        for a, wt in zip(atoms[1:], weights[1:]):
            if a - out_a[-1] <= merge_rel * a:
                tot = out_w[-1] + wt
                out_a[-1] = (out_a[-1] * out_w[-1] + a * wt) / tot
                out_w[-1] = tot
            else:
                out_a.append(a)
                out_w.append(wt)
        atoms = np.array(out_a)
        weights = np.array(out_w)
        if change < param_tol:
            stationary = True
            break
    return atoms, weights / weights.sum(), sweeps, stationary


def _ztp_mean_root(target: np.ndarray, start: np.ndarray) -> np.ndarray:
    """Solve lam / (1 - e^-lam) = target coordinatewise (Newton)."""
    target = np.asarray(target, dtype=np.float64)
    lam = np.maximum(np.asarray(start, dtype=np.float64).copy(), 1e-12)
    lam = np.where(target <= 1.0 + 1e-12, 1e-10, lam)
    active = target > 1.0 + 1e-12
    for _ in range(100):
        if not np.any(active):
            break
        em1 = -np.expm1(-lam)
        f = lam / em1 - target
        deriv = (em1 - lam * np.exp(-lam)) / em1**2
        step = np.where(active, f / deriv, 0.0)
        lam = np.maximum(lam - step, 1e-12)
        active = active & (np.abs(step) > 1e-15 * np.maximum(1.0, lam))
    return lam


def zt_mixture_counts(
    u_atom: np.ndarray,
    u_count: np.ndarray,
    weight_cdf: np.ndarray,
    count_cdf: np.ndarray,
    offsets: np.ndarray,
) -> np.ndarray:
    """Inverse-cdf draws from a finite mixture of count distributions.

    ``weight_cdf`` is the cumulative mixing-weight vector (length J, last
    entry 1).  ``count_cdf`` concatenates the per-component cdf tables over
    counts 1, 2, ...; component j occupies ``count_cdf[offsets[j]:offsets[j+1]]``.
    Draw b selects component ``j`` with the first ``weight_cdf[j] > u_atom[b]``
    and then the first count whose table entry exceeds ``u_count[b]``.
    """
    u_atom = np.asarray(u_atom, dtype=np.float64)
    u_count = np.asarray(u_count, dtype=np.float64)
    weight_cdf = np.asarray(weight_cdf, dtype=np.float64)
    count_cdf = np.asarray(count_cdf, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)

    comp = np.searchsorted(weight_cdf, u_atom, side="right")
    np.clip(comp, 0, weight_cdf.size - 1, out=comp)
    out = np.empty(u_atom.shape[0], dtype=np.int64)
    for j in np.unique(comp):
        lo, hi = offsets[j], offsets[j + 1]
        table = count_cdf[lo:hi]
        mask = comp == j
        idx = np.searchsorted(table, u_count[mask], side="right")
        np.clip(idx, 0, table.size - 1, out=idx)
        out[mask] = idx + 1
    return out
