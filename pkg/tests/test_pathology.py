import math

import numpy as np
import pytest

from classcount.npmle import MixingDistribution, mixture_pmf, odds
from classcount.pathology import (
    blowup_trace,
    contaminate,
    hellinger,
    total_variation,
)

from conftest import exact_mixture_odds


def delta(lam):
    return MixingDistribution(np.array([lam]), np.array([1.0]))


def test_contaminate_edges():
    q = delta(math.log(2.0))
    assert contaminate(q, 0.0, 1.0) is q
    full = contaminate(q, 1.0, 0.7)
    assert full.atoms == pytest.approx([0.7])
    mixed = contaminate(q, 0.5, math.log(1.5))
    assert odds(mixed) == pytest.approx(1.5, rel=1e-12)


def test_contaminate_merges_existing_atom():
    q = delta(1.0)
    same = contaminate(q, 0.25, 1.0)
    assert same.n_atoms == 1
    assert same.weights == pytest.approx([1.0])


def test_contamination_odds_identity_random():
    # odds of the contaminated mixture equals the two-term closed form
    rng = np.random.default_rng(12)
    for _ in range(40):
        k = int(rng.integers(1, 4))
        atoms = np.sort(rng.uniform(0.2, 5.0, size=k)) + np.arange(k) * 0.1
        weights = rng.dirichlet(np.ones(k))
        q = MixingDistribution(atoms, weights)
        pi = float(rng.uniform(0.0, 1.0))
        eta = float(rng.uniform(0.01, 6.0))
        mixed = contaminate(q, pi, eta)
        expected = (1.0 - pi) * exact_mixture_odds(atoms, weights) + pi / math.expm1(eta)
        assert odds(mixed) == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_total_variation_zero_for_identical():
    q = delta(1.0)
    tv = total_variation(q, q)
    assert tv.value == 0.0
    assert tv.tail < 1e-10 * 2


def test_total_variation_point_masses():
    # oracle: direct summation over 1..100
    tv = total_variation(delta(1.0), delta(2.0), truncation=100)
    direct = sum(
        abs(
            1.0**x / (math.factorial(x) * (math.e - 1.0))
            - 2.0**x / (math.factorial(x) * (math.e**2 - 1.0))
        )
        for x in range(1, 101)
    )
    assert tv.value == pytest.approx(direct, rel=1e-10)
    assert tv.value == pytest.approx(0.5379, abs=1e-3)


def test_contamination_tv_bound_random():
    rng = np.random.default_rng(21)
    for _ in range(20):
        atoms = np.sort(rng.uniform(0.3, 4.0, size=2)) + np.array([0.0, 0.5])
        weights = rng.dirichlet(np.ones(2))
        q = MixingDistribution(atoms, weights)
        s = float(rng.uniform(0.01, 0.5))
        mixed = contaminate(q, s, s * s)
        tv = total_variation(q, mixed)
        assert tv.upper <= 2.0 * s + 1e-9


def test_hellinger_zero_and_sandwich():
    assert hellinger(delta(1.3), delta(1.3)) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(31)
    for _ in range(100):
        k1, k2 = rng.integers(1, 4, size=2)
        q1 = MixingDistribution(
            np.sort(rng.uniform(0.2, 6.0, size=k1)) + np.arange(k1) * 0.2,
            rng.dirichlet(np.ones(k1)),
        )
        q2 = MixingDistribution(
            np.sort(rng.uniform(0.2, 6.0, size=k2)) + np.arange(k2) * 0.2,
            rng.dirichlet(np.ones(k2)),
        )
        tv = total_variation(q1, q2)
        h = hellinger(q1, q2, tv.truncation)
        assert h * h <= tv.upper + 1e-9
        assert tv.value <= 2.0 * h + 1e-9


def test_hellinger_point_masses_interval():
    tv = total_variation(delta(1.0), delta(2.0))
    h = hellinger(delta(1.0), delta(2.0), tv.truncation)
    assert tv.value / 2.0 - 1e-9 <= h <= math.sqrt(tv.upper) + 1e-9


def test_blowup_trace():
    q = delta(math.log(2.0))
    s_values = [0.1, 0.01, 0.001, 0.0001]
    trace = blowup_trace(q, s_values)
    assert trace.base_odds == pytest.approx(1.0, rel=1e-12)
    first = trace.rows[0]
    assert first.theta_mixed == pytest.approx(10.850083, abs=1e-4)
    thetas = [row.theta_mixed for row in trace.rows]
    assert all(a < b for a, b in zip(thetas, thetas[1:]))
    for row in trace.rows:
        assert row.tv_value <= row.tv_bound + 1e-12
        assert row.tv_value + row.tv_tail <= row.tv_bound + 1e-9
        assert row.hellinger**2 <= row.tv_value + row.tv_tail + 1e-9
    # distances vanish while the odds explodes
    assert trace.rows[-1].tv_value < 1e-3
    assert trace.rows[-1].theta_mixed > 1e3


def test_blowup_trace_validates_s():
    with pytest.raises(ValueError):
        blowup_trace(delta(1.0), [1.5])
