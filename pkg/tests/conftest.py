import numpy as np
import pytest

from classcount.ingest import load_bundled


@pytest.fixture(scope="session")
def cholera():
    return load_bundled("cholera")


@pytest.fixture(scope="session")
def est():
    return load_bundled("est")


@pytest.fixture(scope="session")
def cholera_fit(cholera):
    from classcount.npmle import fit_npmle

    return fit_npmle(cholera)


@pytest.fixture(scope="session")
def est_fit(est):
    from classcount.npmle import fit_npmle

    return fit_npmle(est)


def exact_mixture_moments(atoms, weights, count: int) -> np.ndarray:
    """Oracle: moments sum_j w_j a_j^x / (e^a_j - 1) for x = 1..count.

    Deliberately independent of the package's model_moments.
    """
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return np.array(
        [np.sum(weights * atoms**x / (np.exp(atoms) - 1.0)) for x in range(1, count + 1)]
    )


def exact_mixture_odds(atoms, weights) -> float:
    """Oracle: sum_j w_j / (e^a_j - 1)."""
    atoms = np.asarray(atoms, dtype=float)
    weights = np.asarray(weights, dtype=float)
    return float(np.sum(weights / (np.exp(atoms) - 1.0)))


def exact_ztp_pmf(lam: float, x: int) -> float:
    """Oracle: lam^x / (x! (e^lam - 1)) by direct evaluation."""
    import math

    return lam**x / (math.factorial(x) * (math.exp(lam) - 1.0))
