"""Moment matrices and the lower-bound ladder for the undetected odds.

The odds that a class goes undetected equals the zeroth moment of a
latent measure whose higher moments are identifiable: moment x is
``x! f(x)``.  Truncating the moment problem at order k yields the lower
bound ``theta_k = a_k' Gamma_k^{-1} a_k`` where ``a_k`` collects moments
1..k and ``Gamma_k`` is the Hankel matrix of moments 2..2k.  The bounds
increase strictly in k and reach the odds exactly at k equal to the
number of support points of the mixing distribution.

All matrix work happens on a preconditioned scale (moment x divided by
r**x), which leaves every ``theta_k`` algebraically unchanged while
keeping condition numbers tractable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ingest import FrequencyData
from .npmle import MixingDistribution

__all__ = [
    "LadderTruncationError",
    "MomentVector",
    "HankelLadder",
    "empirical_moments",
    "model_moments",
    "odds_bound",
    "support_rank",
    "ladder",
    "ladder_from_moments",
    "quadrature_representation",
    "delta_se",
]

DEFAULT_K_CAP = 8
# relative pivot floor declaring a moment matrix positive definite
PIVOT_FLOOR = 1e-10
# direct evaluation and the determinant recurrence must agree this well
RECURRENCE_RTOL = 1e-8


class LadderTruncationError(RuntimeError):
    """The moment matrix is not positive definite at the requested order."""

    def __init__(self, k: int, max_k: int):
        self.k = k
        self.max_k = max_k
        super().__init__(
            f"ladder ends before k={k}: largest valid order is {max_k}"
        )


@dataclass(frozen=True)
class MomentVector:
    """Raw moments mu(1..2K) of the latent rate measure.

    The zeroth moment is the unknown odds and is never stored.  ``source``
    tags whether the moments are empirical or derived from a fitted model.
    """

    mu: np.ndarray
    source: str = "empirical"

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size < 2 or mu.size % 2 != 0:
            raise ValueError("need an even number (>= 2) of moments")
        if np.any(mu < 0.0):
            raise ValueError("moments must be nonnegative")
        mu.flags.writeable = False
        object.__setattr__(self, "mu", mu)

    @property
    def k_max(self) -> int:
        return self.mu.size // 2

    def precondition_scale(self) -> float:
        """Scale r = max(1, mu(2)/mu(1)) used for all matrix work."""
        if self.mu[0] > 0.0:
            return max(1.0, float(self.mu[1] / self.mu[0]))
        return 1.0

    def scaled(self, r: float | None = None) -> np.ndarray:
        r = self.precondition_scale() if r is None else r
        powers = r ** np.arange(1, self.mu.size + 1, dtype=np.float64)
        return self.mu / powers


@dataclass(frozen=True)
class HankelLadder:
    """The bound sequence with its determinant diagnostics.

    ``theta`` holds the bounds up to the estimated support rank,
    ``gamma_dets`` the determinants of the Hankel matrices defining them,
    and ``hbar_dets`` the shifted-Hankel determinants entering the
    recurrence ``theta_{k+1} - theta_k = hbar_k^2 / (gamma_k gamma_{k+1})``.
    Determinants are reported on the preconditioned scale ``scale``.
    """

    theta: tuple[float, ...]
    gamma_dets: tuple[float, ...]
    hbar_dets: tuple[float, ...]
    chi_hat: int
    scale: float
    theta_from_recurrence: tuple[float, ...]
    source: str = "empirical"

    def last(self) -> float:
        if not self.theta:
            raise ValueError("empty ladder")
        return self.theta[-1]

    def padded(self, k_cap: int) -> tuple[float, ...]:
        """Bounds extended beyond the rank by their saturated value.

        Past the support rank the true bound sequence is constant, so
        reports carry the last computed value forward.
        """
        if not self.theta:
            return ()
        return self.theta + (self.theta[-1],) * (k_cap - len(self.theta))


def empirical_moments(d: FrequencyData, k_max: int = DEFAULT_K_CAP) -> MomentVector:
    """Empirical moments x! n_x / n for x = 1..2*k_max."""
    mu = np.array([d.moment(x) for x in range(1, 2 * k_max + 1)])
    return MomentVector(mu, source="empirical")


def model_moments(q: MixingDistribution, k_max: int = DEFAULT_K_CAP) -> MomentVector:
    """Exact moments of the rate measure under a fitted mixture.

    Moment x is ``sum_j w_j atom_j**x / (e**atom_j - 1)`` in closed form.
    """
    xs = np.arange(1, 2 * k_max + 1, dtype=np.float64)
    mu = (q.atoms[:, None] ** xs[None, :] * (q.weights / np.expm1(q.atoms))[:, None]).sum(
        axis=0
    )
    return MomentVector(mu, source="model")


def _pivoted_cholesky(g: np.ndarray, floor_rel: float = PIVOT_FLOOR):
    """Diagonal-pivoted Cholesky with a relative pivot floor.

    Returns (is_positive_definite, determinant).  The matrix counts as
    positive definite iff every pivot exceeds ``floor_rel`` times the
    largest diagonal entry of the input; the determinant is the product
    of pivots (symmetric permutations do not change it).
    """
    a = np.array(g, dtype=np.float64)
    k = a.shape[0]
    threshold = floor_rel * float(np.max(np.diag(a)))
    if threshold <= 0.0:
        return False, 0.0
    det = 1.0
    for step in range(k):
        diag = np.diag(a)[step:]
        j = step + int(np.argmax(diag))
        a[[step, j], :] = a[[j, step], :]
        a[:, [step, j]] = a[:, [j, step]]
        pivot = a[step, step]
        if pivot <= threshold:
            return False, 0.0
        det *= pivot
        rest = slice(step + 1, k)
        row = a[rest, step] / pivot
        a[rest, rest] = a[rest, rest] - np.outer(row, a[rest, step])
        a[rest, step] = 0.0
        a[step, rest] = 0.0
    return True, det


def _gamma_matrix(ms: np.ndarray, k: int) -> np.ndarray:
    # Hankel of scaled moments 2..2k: entry (i, j) is ms[i + j + 1] (0-based)
    return np.array([[ms[i + j + 1] for j in range(k)] for i in range(k)])


def _hbar_matrix(ms: np.ndarray, k: int) -> np.ndarray:
    # shifted Hankel of scaled moments 1..2k+1
    return np.array([[ms[i + j] for j in range(k + 1)] for i in range(k + 1)])


def odds_bound(m: MomentVector, k: int) -> float:
    """The order-k lower bound a_k' Gamma_k^{-1} a_k for the odds.

    Raises LadderTruncationError when the Hankel matrix fails the pivoted
    positive-definiteness check before order k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if 2 * k > m.mu.size:
        raise LadderTruncationError(k, support_rank(m, m.k_max))
    ms = m.scaled()
    for j in range(1, k + 1):
        ok, _ = _pivoted_cholesky(_gamma_matrix(ms, j))
        if not ok:
            raise LadderTruncationError(k, j - 1)
    a = ms[0:k]
    gamma = _gamma_matrix(ms, k)
    return float(a @ np.linalg.solve(gamma, a))


def support_rank(m: MomentVector, k_cap: int = DEFAULT_K_CAP) -> int:
    """Largest k with all leading Hankel matrices positive definite.

    Estimates the number of support points of the mixing distribution;
    returns 0 when even the first moment matrix fails.
    """
    if k_cap < 1:
        raise ValueError("k_cap must be >= 1")
    ms = m.scaled()
    rank = 0
    for k in range(1, min(k_cap, m.k_max) + 1):
        ok, _ = _pivoted_cholesky(_gamma_matrix(ms, k))
        if not ok:
            break
        rank = k
    return rank


def ladder_from_moments(m: MomentVector, k_cap: int = DEFAULT_K_CAP) -> HankelLadder:
    """Bound sequence theta_1..theta_chi from a moment vector.

    Each bound is computed directly and re-derived through the
    determinant recurrence; the two must agree to RECURRENCE_RTOL on the
    preconditioned scale.  A disagreement means the matrices have gone
    numerically unreliable at that order, so the ladder is truncated at
    the last consistent bound rather than crashing.
    """
    r = m.precondition_scale()
    ms = m.scaled(r)
    chi = support_rank(m, k_cap)
    theta: list[float] = []
    gdets: list[float] = []
    hdets: list[float] = []
    recur: list[float] = []
    for k in range(1, chi + 1):
        a = ms[0:k]
        gamma = _gamma_matrix(ms, k)
        _, det = _pivoted_cholesky(gamma)
        theta_k = float(a @ np.linalg.solve(gamma, a))
        if k == 1:
            recur.append(theta_k)
        else:
            hdet = hdets[-1]
            step = hdet * hdet / (gdets[-1] * det)
            recur.append(recur[-1] + step)
            if not math.isclose(theta_k, recur[-1], rel_tol=RECURRENCE_RTOL):
                chi = k - 1
                recur.pop()
                break
        theta.append(theta_k)
        gdets.append(det)
        if 2 * k + 1 <= ms.size:
            hdets.append(float(np.linalg.det(_hbar_matrix(ms, k))))
    return HankelLadder(
        theta=tuple(theta),
        gamma_dets=tuple(gdets),
        hbar_dets=tuple(hdets[: max(len(theta) - 1, 0)]),
        chi_hat=chi,
        scale=r,
        theta_from_recurrence=tuple(recur),
        source=m.source,
    )


def ladder(d: FrequencyData, k_cap: int = DEFAULT_K_CAP) -> HankelLadder:
    """Empirical bound sequence for observed count data."""
    return ladder_from_moments(empirical_moments(d, k_cap), k_cap)


def quadrature_representation(
    m: MomentVector, k: int, theta_k: float | None = None
) -> MixingDistribution:
    """k-atom mixing measure matching the truncated moment sequence.

    Builds the Gauss quadrature rule of the measure with moment sequence
    ``(theta_k, mu(1), ..., mu(2k-1))``: a Jacobi matrix is assembled from
    the partially factorized Hankel matrix (three-term recurrence
    coefficients), its eigenvalues are the atoms and the squared first
    eigenvector components carry the masses.  The returned mixing measure
    reweights each mass by ``e**atom - 1`` and is left unnormalized; its
    total mass is a diagnostic (1 exactly when the input moments come from
    a mixture).
    """
    if theta_k is None:
        theta_k = odds_bound(m, k)
    r = m.precondition_scale()
    ms = m.scaled(r)
    if 2 * k > ms.size:
        raise ValueError(f"need moments up to order {2 * k}")
    # support on (0, inf) requires the shifted Hankel (moments 1..2k-1)
    # to be positive definite as well; otherwise nodes can escape below 0
    hbar = np.array([[ms[i + j] for j in range(k)] for i in range(k)])
    ok, _ = _pivoted_cholesky(hbar)
    if not ok:
        raise ValueError(
            f"moments 1..{2 * k - 1} admit no {k}-point measure on (0, inf)"
        )
    # moment sequence of the target measure on the preconditioned scale
    seq = np.concatenate([[theta_k], ms[0 : 2 * k - 1]])

    # partial Cholesky of the (k+1)x(k+1) Hankel; the last pivot is never
    # needed (the final entry of the sequence is unknown)
    size = k + 1
    rmat = np.zeros((size, size))
    for i in range(k):
        for j in range(i, size):
            if i + j >= seq.size:
                continue
            acc = seq[i + j] - float(rmat[:i, i] @ rmat[:i, j])
            if j == i:
                if acc <= 0.0:
                    raise np.linalg.LinAlgError(
                        "moment sequence is not strictly positive definite"
                    )
                rmat[i, i] = math.sqrt(acc)
            else:
                rmat[i, j] = acc / rmat[i, i]

    alpha = np.empty(k)
    beta = np.empty(max(k - 1, 0))
    for j in range(k):
        alpha[j] = rmat[j, j + 1] / rmat[j, j]
        if j > 0:
            alpha[j] -= rmat[j - 1, j] / rmat[j - 1, j - 1]
            beta[j - 1] = rmat[j, j] / rmat[j - 1, j - 1]

    jac = np.diag(alpha)
    if k > 1:
        jac += np.diag(beta, 1) + np.diag(beta, -1)
    nodes, vectors = np.linalg.eigh(jac)
    masses = theta_k * vectors[0, :] ** 2
    nodes = nodes * r  # undo preconditioning
    if np.any(nodes <= 0.0) or not np.all(np.isfinite(nodes)):
        raise ValueError(f"quadrature produced a node outside (0, inf): {nodes}")
    return MixingDistribution(nodes, masses * np.expm1(nodes))


def delta_se(d: FrequencyData, k: int) -> float:
    """Delta-method standard error of the order-k empirical bound.

    Chains the analytic gradient of ``a' Gamma^{-1} a`` with respect to the
    empirical pmf values f(1)..f(2k) through the moment map ``mu(x) =
    x! f(x)`` and the multinomial covariance (diag(f) - f f') / n.
    """
    m = empirical_moments(d, k)
    r = m.precondition_scale()
    ms = m.scaled(r)
    for j in range(1, k + 1):
        ok, _ = _pivoted_cholesky(_gamma_matrix(ms, j))
        if not ok:
            raise LadderTruncationError(k, j - 1)
    a = ms[0:k]
    gamma = _gamma_matrix(ms, k)
    y = np.linalg.solve(gamma, a)

    # d theta / d m_x = 2 y_x [x <= k] - sum_{i+j=x} y_i y_j  (1-based i, j)
    grad_f = np.zeros(2 * k)
    for x in range(1, 2 * k + 1):
        g = 2.0 * y[x - 1] if x <= k else 0.0
        for i in range(max(1, x - k), min(k, x - 1) + 1):
            g -= y[i - 1] * y[x - i - 1]
        grad_f[x - 1] = g * math.factorial(x) / r**x

    f = np.array([d.pmf(x) for x in range(1, 2 * k + 1)])
    cov = (np.diag(f) - np.outer(f, f)) / d.n
    var = float(grad_f @ cov @ grad_f)
    return math.sqrt(max(var, 0.0))
