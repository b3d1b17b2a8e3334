import math

import numpy as np
import pytest

from classcount.hankel import (
    LadderTruncationError,
    MomentVector,
    delta_se,
    empirical_moments,
    ladder,
    ladder_from_moments,
    model_moments,
    odds_bound,
    quadrature_representation,
    support_rank,
)
from classcount.ingest import FrequencyData
from classcount.npmle import MixingDistribution

from conftest import exact_mixture_moments, exact_mixture_odds


def two_atom_q():
    return MixingDistribution(np.array([0.5, 2.0]), np.array([0.5, 0.5]))


def test_theta1_cholera(cholera):
    m = empirical_moments(cholera, 2)
    # mu(1)^2 / mu(2) closed form: both moments equal 32/55 here
    assert odds_bound(m, 1) == pytest.approx(32 / 55, rel=1e-12)
    assert round(odds_bound(m, 1), 3) == 0.582


def test_theta_est_values(est):
    m = empirical_moments(est, 5)
    assert odds_bound(m, 1) == pytest.approx(2.227, abs=1e-3)
    assert odds_bound(m, 5) == pytest.approx(3.404, abs=1e-3)


def test_chi_hat_cholera_via_determinant_oracle(cholera):
    mu = [cholera.moment(x) for x in range(1, 5)]
    # 2x2 Hankel determinant oracle: mu(2) mu(4) - mu(3)^2
    assert mu[1] * mu[3] - mu[2] ** 2 < 0
    assert support_rank(empirical_moments(cholera, 4), 4) == 1


def test_chi_hat_single_atom_exact():
    mu = exact_mixture_moments([1.0], [1.0], 8)
    assert support_rank(MomentVector(mu, source="model"), 4) == 1


def test_chi_hat_est(est):
    assert support_rank(empirical_moments(est, 5), 5) == 5


def test_ladder_cholera(cholera):
    lad = ladder(cholera)
    assert lad.chi_hat == 1
    assert lad.theta == pytest.approx([0.5818], abs=1e-4)


def test_ladder_est(est):
    lad = ladder(est, 5)
    assert [round(t, 3) for t in lad.theta] == [2.227, 2.849, 3.000, 3.071, 3.404]
    assert lad.chi_hat == 5


def test_ladder_two_atom_closed_form():
    q = two_atom_q()
    theta_true = exact_mixture_odds(q.atoms, q.weights)
    m = MomentVector(exact_mixture_moments(q.atoms, q.weights, 8), source="model")
    lad = ladder_from_moments(m, 4)
    assert lad.chi_hat == 2
    assert lad.theta[-1] == pytest.approx(theta_true, rel=1e-10)
    assert lad.theta[0] < lad.theta[1]


def test_ladder_monotone(cholera, est):
    for d in (cholera, est):
        lad = ladder(d)
        assert all(a < b for a, b in zip(lad.theta, lad.theta[1:]))


def test_recurrence_identity(est, cholera):
    for d in (est, cholera):
        lad = ladder(d)
        for direct, recur in zip(lad.theta, lad.theta_from_recurrence):
            assert direct == pytest.approx(recur, rel=1e-8)


def test_scaling_invariance(est):
    base = empirical_moments(est, 5)
    reference = [odds_bound(base, k) for k in range(1, 6)]
    for r in (0.5, 3.0, 10.0):
        scaled = MomentVector(base.mu * r ** np.arange(1, 11), source="empirical")
        for k, ref in enumerate(reference, start=1):
            assert odds_bound(scaled, k) == pytest.approx(ref, rel=1e-10)


def test_fisher_consistency_on_exact_mixtures():
    rng = np.random.default_rng(7)
    for j in range(1, 5):
        atoms = np.sort(rng.uniform(0.3, 6.0, size=j))
        atoms += np.arange(j) * 0.5  # keep the atoms separated
        weights = rng.dirichlet(np.ones(j))
        weights = np.maximum(weights, 0.05)
        weights /= weights.sum()
        theta_true = exact_mixture_odds(atoms, weights)
        m = MomentVector(exact_mixture_moments(atoms, weights, 12), source="model")
        assert odds_bound(m, j) == pytest.approx(theta_true, rel=1e-7)
        for k in range(1, j):
            assert odds_bound(m, k) < theta_true


def test_hankel_positivity_screen():
    # for a j-atom measure: full Hankel and shifted Hankel determinants
    # stay positive below j, and the moment matrix degenerates past j
    rng = np.random.default_rng(11)
    for j in (2, 3):
        atoms = np.sort(rng.uniform(0.5, 5.0, size=j)) + np.arange(j)
        weights = rng.dirichlet(np.ones(j))
        weights = np.maximum(weights, 0.1)
        weights /= weights.sum()
        theta = exact_mixture_odds(atoms, weights)
        mu = exact_mixture_moments(atoms, weights, 2 * j + 2)
        seq = np.concatenate([[theta], mu])  # mu(0), mu(1), ...
        for k in range(j):
            h = np.array([[seq[i + l] for l in range(k + 1)] for i in range(k + 1)])
            hbar = np.array(
                [[seq[i + l + 1] for l in range(k + 1)] for i in range(k + 1)]
            )
            assert np.linalg.det(h) > 0
            assert np.linalg.det(hbar) > 0
        m = MomentVector(mu, source="model")
        assert support_rank(m, j + 1) == j


def test_truncation_error_reports_max_k(cholera):
    with pytest.raises(LadderTruncationError) as exc:
        odds_bound(empirical_moments(cholera, 4), 2)
    assert exc.value.max_k == 1


def test_quadrature_cholera_single_point(cholera):
    m = empirical_moments(cholera, 1)
    theta1 = odds_bound(m, 1)
    q = quadrature_representation(m, 1, theta1)
    # one-point rule in closed form: node mu(2)/mu(1), mass theta_1
    assert q.atoms[0] == pytest.approx(cholera.moment(2) / cholera.moment(1), rel=1e-10)
    assert q.atoms[0] == pytest.approx(1.0, rel=1e-12)
    assert q.mass == pytest.approx(theta1 * (math.e - 1.0), rel=1e-10)
    assert q.mass == pytest.approx(0.9998, abs=2e-4)


def test_quadrature_recovers_single_atom():
    mu = exact_mixture_moments([2.0], [1.0], 4)
    m = MomentVector(mu, source="model")
    q = quadrature_representation(m, 1)
    assert q.atoms[0] == pytest.approx(2.0, abs=1e-12)
    assert q.mass == pytest.approx(1.0, rel=1e-12)


def test_quadrature_recovers_two_atoms():
    base = two_atom_q()
    m = MomentVector(exact_mixture_moments(base.atoms, base.weights, 4), source="model")
    q = quadrature_representation(m, 2)
    assert q.atoms == pytest.approx([0.5, 2.0], rel=1e-9)
    assert q.weights == pytest.approx([0.5, 0.5], rel=1e-9)
    assert q.mass == pytest.approx(1.0, abs=1e-10)


def test_quadrature_moment_match(est):
    # the k-point measure reproduces moments 1..2k-1 and carries mass theta_k
    rng = np.random.default_rng(3)
    cases = [(empirical_moments(est, 2), 2)]
    for j in (3, 4):
        atoms = np.sort(rng.uniform(0.4, 7.0, size=j)) + np.arange(j)
        weights = rng.dirichlet(np.ones(j))
        weights = np.maximum(weights, 0.08)
        weights /= weights.sum()
        m = MomentVector(exact_mixture_moments(atoms, weights, 2 * j), source="model")
        cases.append((m, j))
    for m, k in cases:
        theta_k = odds_bound(m, k)
        q = quadrature_representation(m, k, theta_k)
        phi_weights = q.weights / np.expm1(q.atoms)
        for x in range(1, 2 * k):
            recovered = float(np.sum(phi_weights * q.atoms**x))
            assert recovered == pytest.approx(m.mu[x - 1], rel=1e-8)
        assert float(phi_weights.sum()) == pytest.approx(theta_k, rel=1e-10)


def test_quadrature_requires_valid_moments(est):
    # the empirical moments here are not a one-sided moment sequence past
    # order 2, so the 3-point construction must refuse cleanly
    m = empirical_moments(est, 4)
    with pytest.raises(ValueError, match="no 3-point measure"):
        quadrature_representation(m, 3)


def _theta_from_pmf(fvals: np.ndarray, k: int) -> float:
    # independent oracle: theta_k as an explicit function of f(1..2k)
    mu = np.array([math.factorial(x) * fvals[x - 1] for x in range(1, 2 * k + 1)])
    a = mu[:k]
    gamma = np.array([[mu[i + j + 1] for j in range(k)] for i in range(k)])
    return float(a @ np.linalg.solve(gamma, a))


def test_delta_se_gradient_matches_finite_differences(est):
    k = 2
    f = np.array([est.pmf(x) for x in range(1, 2 * k + 1)])
    # analytic gradient extracted by re-deriving the covariance sandwich
    se = delta_se(est, k)
    grad = np.empty(2 * k)
    step = 1e-6
    for i in range(2 * k):
        up, down = f.copy(), f.copy()
        up[i] += step
        down[i] -= step
        grad[i] = (_theta_from_pmf(up, k) - _theta_from_pmf(down, k)) / (2 * step)
    cov = (np.diag(f) - np.outer(f, f)) / est.n
    se_fd = math.sqrt(grad @ cov @ grad)
    assert se == pytest.approx(se_fd, rel=1e-5)


def test_delta_se_scales_as_inverse_sqrt_n(cholera):
    doubled = FrequencyData({x: 2 * nx for x, nx in cholera.counts.items()})
    assert delta_se(cholera, 1) / delta_se(doubled, 1) == pytest.approx(
        math.sqrt(2.0), rel=1e-12
    )


def _multinomial_bootstrap_se(d: FrequencyData, reps: int, seed: int) -> float:
    # oracle: order-1 bound recomputed on multinomial resamples of the pmf
    xs = np.array(sorted(d.counts))
    p = np.array([d.counts[x] / d.n for x in xs])
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(reps):
        counts = rng.multinomial(d.n, p)
        by_x = dict(zip(xs.tolist(), counts.tolist()))
        n1, n2 = by_x.get(1, 0), by_x.get(2, 0)
        if n2 == 0:
            continue
        vals.append(n1 * n1 / (2.0 * n2 * d.n))
    return float(np.std(vals, ddof=1))


def test_delta_se_matches_bootstrap_at_large_n(cholera):
    big = FrequencyData({x: 100 * nx for x, nx in cholera.counts.items()})
    boot = _multinomial_bootstrap_se(big, 3000, seed=1)
    assert delta_se(big, 1) == pytest.approx(boot, rel=0.05)


def test_delta_se_vs_bootstrap_small_n(cholera):
    # at n=55 the order-1 bound is visibly nonlinear in the pmf, so the
    # linearized SE sits ~20% below the resampling SE
    boot = _multinomial_bootstrap_se(cholera, 4000, seed=1)
    assert delta_se(cholera, 1) == pytest.approx(boot, rel=0.25)
    assert delta_se(cholera, 1) < boot
