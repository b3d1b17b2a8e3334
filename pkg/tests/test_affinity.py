import math

import numpy as np
import pytest

from classcount.affinity import (
    affinity,
    affinity_floor,
    affinity_table,
    infinite_ucl_probability_bound,
)


def test_affinity_is_one_at_rho_zero():
    for c in (1, 7, 64, 500):
        assert affinity(c, 0.0) == 1.0


def test_affinity_at_rho_one_closed_form():
    # only x = c contributes: min(1, e^-c c^c / c!)
    for c in (3, 10, 64):
        expected = math.exp(-c + c * math.log(c) - math.lgamma(c + 1))
        assert affinity(c, 1.0) == pytest.approx(expected, rel=1e-12)


def test_crossover_at_64():
    assert affinity(63, 1.0) > 0.05
    assert affinity(64, 1.0) < 0.05


def test_stirling_approximation():
    assert affinity(100, 1.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi * 100), rel=5e-3)
    for c in range(30, 201, 10):
        a = affinity(c, 1.0)
        approx = 1.0 / math.sqrt(2 * math.pi * c)
        assert abs(a - approx) / a <= 0.01


def test_floor_values():
    assert affinity_floor(0.0) == 1.0
    assert affinity_floor(0.5) == pytest.approx(1.0 - 0.25 / math.sqrt(0.5), rel=1e-12)
    assert affinity_floor(0.5) == pytest.approx(0.64645, abs=1e-5)
    with pytest.raises(ValueError):
        affinity_floor(1.0)


def test_floor_holds_on_grid():
    for c in range(1, 201, 7):
        for rho in np.arange(0.05, 0.96, 0.05):
            assert affinity(c, float(rho)) >= affinity_floor(float(rho)) - 1e-9


def test_affinity_in_unit_interval_and_decreasing_in_rho():
    c = 40
    values = [affinity(c, float(r)) for r in np.arange(0.0, 1.0001, 0.01)]
    assert all(0.0 <= v <= 1.0 + 1e-12 for v in values)
    assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))


def test_bound_values():
    assert infinite_ucl_probability_bound(10, 0.0, 0.05) == pytest.approx(0.95)
    bound = infinite_ucl_probability_bound(64, 1.0, 0.05)
    assert bound == pytest.approx(-0.0002, abs=1e-4)
    assert bound < 0.0


def test_bound_flat_in_c():
    values = [infinite_ucl_probability_bound(c, 0.3, 0.05) for c in range(50, 201, 10)]
    assert all(0.0 < v < 1.0 for v in values)
    assert max(values) - min(values) <= 0.02


def test_affinity_table_rows():
    rows = affinity_table([64], [0.0, 0.5, 1.0], alpha=0.05)
    assert len(rows) == 3
    assert rows[0].affinity == 1.0
    assert rows[0].infinite_ucl_lower_bound == pytest.approx(0.95)
    assert rows[2].floor_bound is None
    for row in rows:
        if row.floor_bound is not None:
            assert row.affinity >= row.floor_bound - 1e-9


def test_input_validation():
    with pytest.raises(ValueError):
        affinity(0, 0.5)
    with pytest.raises(ValueError):
        affinity(10, 1.5)
    with pytest.raises(ValueError):
        affinity(2_000_000, 0.5)
