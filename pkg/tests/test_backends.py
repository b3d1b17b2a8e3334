import math
import os
import subprocess
import sys

import numpy as np
import pytest

from classcount import _kernels_py
from classcount.backend import backend_name

compiled = pytest.importorskip("classcount._kernels_cy")


def test_backend_name_valid():
    assert backend_name() in ("compiled", "python")


def test_ks_statistics_bit_identical():
    rng = np.random.default_rng(0)
    for m, n in ((1, 1), (7, 3), (200, 55), (50, 400)):
        e = rng.standard_exponential((m, n + 1))
        a = _kernels_py.ks_statistics(e)
        b = compiled.ks_statistics(e)
        assert np.array_equal(a, b)


def test_ks_statistics_values_sane():
    rng = np.random.default_rng(1)
    e = rng.standard_exponential((500, 31))
    d = compiled.ks_statistics(e)
    assert np.all(d > 0.0)
    assert np.all(d <= 1.0)


def test_zt_mixture_counts_bit_identical():
    rng = np.random.default_rng(2)
    weight_cdf = np.array([0.2, 0.75, 1.0])
    tables = [
        np.cumsum(np.full(6, 1 / 6)),
        np.cumsum(np.full(11, 1 / 11)),
        np.cumsum(np.full(4, 0.25)),
    ]
    count_cdf = np.concatenate(tables)
    offsets = np.array([0, 6, 17, 21], dtype=np.int64)
    u1, u2 = rng.random(50_000), rng.random(50_000)
    a = _kernels_py.zt_mixture_counts(u1, u2, weight_cdf, count_cdf, offsets)
    b = compiled.zt_mixture_counts(u1, u2, weight_cdf, count_cdf, offsets)
    assert np.array_equal(a, b)
    assert a.min() >= 1


def test_zt_mixture_counts_clamps_table_end():
    weight_cdf = np.array([1.0])
    count_cdf = np.cumsum([0.5, 0.5])
    offsets = np.array([0, 2], dtype=np.int64)
    u1 = np.array([0.999999])
    u2 = np.array([1.0 - 1e-16])
    for impl in (_kernels_py, compiled):
        out = impl.zt_mixture_counts(u1, u2, weight_cdf, count_cdf, offsets)
        assert out[0] == 2


def test_em_refit_backends_agree():
    # scalar vs vectorized arithmetic: same algorithm, agreement to
    # floating-point noise rather than bit-for-bit
    xs = np.array([1.0, 2.0, 3.0, 4.0, 6.0])
    nx = np.array([30.0, 14.0, 6.0, 2.0, 1.0])
    lgx = np.array([math.lgamma(x + 1.0) for x in xs])
    atoms = np.array([0.5, 2.5])
    weights = np.array([0.6, 0.4])
    res_py = _kernels_py.em_refit(xs, nx, lgx, atoms, weights, 5000, 1e-12, 1e-12, 1e-6)
    res_cy = compiled.em_refit(xs, nx, lgx, atoms, weights, 5000, 1e-12, 1e-12, 1e-6)
    assert res_py[0].size == res_cy[0].size
    assert res_py[0] == pytest.approx(res_cy[0], rel=1e-9)
    assert res_py[1] == pytest.approx(res_cy[1], rel=1e-9)
    assert res_py[3] == res_cy[3]


def test_em_refit_prunes_and_merges():
    xs = np.array([1.0, 2.0, 3.0])
    nx = np.array([50.0, 25.0, 8.0])
    lgx = np.array([math.lgamma(x + 1.0) for x in xs])
    # twin atoms collapse onto one; the spurious far atom loses its weight
    atoms = np.array([1.0, 1.0 + 1e-9, 40.0])
    weights = np.array([0.5, 0.5, 1e-13])
    for impl in (_kernels_py, compiled):
        out_atoms, out_w, _, stationary = impl.em_refit(
            xs, nx, lgx, atoms, weights, 10_000, 1e-12, 1e-12, 1e-6
        )
        assert stationary
        assert out_atoms.size == 1
        assert out_w[0] == pytest.approx(1.0)


def test_pure_python_env_var_forces_fallback():
    code = (
        "from classcount.backend import backend_name; print(backend_name())"
    )
    env = dict(os.environ, CLASSCOUNT_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "python"
