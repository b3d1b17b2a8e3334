"""Dense two-phase simplex solver with Bland's anti-cycling rule.

Solves  min c'x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Problem sizes here are a few hundred variables by a few dozen rows, so a
dense tableau is plenty; Bland's rule (always the lowest-index candidate)
makes the pivot sequence deterministic and cycle-free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SimplexResult", "solve"]

_TOL = 1e-9


@dataclass(frozen=True)
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray | None
    objective: float | None
    iterations: int


def _pivot(tableau: np.ndarray, basis, row: int, col: int) -> None:
    tableau[row, :] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row, :])
    basis[row] = col


def _run_simplex(tableau: np.ndarray, basis: list[int], max_iter: int) -> tuple[str, int]:
    m = tableau.shape[0] - 1
    basis_arr = np.asarray(basis, dtype=np.int64)
    for it in range(max_iter):
        cost = tableau[-1, :-1]
        negative = np.flatnonzero(cost < -_TOL)
        if negative.size == 0:
            basis[:] = basis_arr.tolist()
            return "optimal", it
        entering = int(negative[0])  # Bland: lowest-index negative reduced cost
        col = tableau[:m, entering]
        positive = col > _TOL
        if not positive.any():
            basis[:] = basis_arr.tolist()
            return "unbounded", it
        ratio = np.full(m, np.inf)
        ratio[positive] = tableau[:m, -1][positive] / col[positive]
        best = ratio.min()
        ties = np.flatnonzero(ratio == best)
        # min ratio; ties broken by lowest basis index (Bland)
        row = int(ties[np.argmin(basis_arr[ties])])
        _pivot(tableau, basis_arr, row, entering)
    basis[:] = basis_arr.tolist()
    return "iteration_limit", max_iter


def solve(
    c: np.ndarray,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    max_iter: int | None = None,
) -> SimplexResult:
    """Two-phase simplex for the canonical nonnegative-variable LP."""
    c = np.asarray(c, dtype=np.float64)
    n = c.size
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    kinds: list[str] = []
    if a_ub is not None:
        a_ub = np.atleast_2d(np.asarray(a_ub, dtype=np.float64))
        for row, b in zip(a_ub, np.atleast_1d(b_ub)):
            rows.append(row)
            rhs.append(float(b))
            kinds.append("ub")
    if a_eq is not None:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=np.float64))
        for row, b in zip(a_eq, np.atleast_1d(b_eq)):
            rows.append(row)
            rhs.append(float(b))
            kinds.append("eq")
    m = len(rows)
    if m == 0:
        raise ValueError("no constraints")

    n_slack = sum(1 for k in kinds if k == "ub")
    # flip rows to make the rhs nonnegative, then count artificials
    amat = np.zeros((m, n + n_slack))
    bvec = np.zeros(m)
    slack_of_row = [-1] * m
    si = 0
    for i, (row, b, kind) in enumerate(zip(rows, rhs, kinds)):
        sign = 1.0
        if b < 0.0:
            sign = -1.0
        amat[i, :n] = sign * row
        bvec[i] = sign * b
        if kind == "ub":
            amat[i, n + si] = sign
            slack_of_row[i] = n + si
            si += 1

    needs_artificial = [
        not (slack_of_row[i] >= 0 and amat[i, slack_of_row[i]] > 0.0) for i in range(m)
    ]
    n_art = sum(needs_artificial)
    total = n + n_slack + n_art
    tableau = np.zeros((m + 1, total + 1))
    tableau[:m, : n + n_slack] = amat
    tableau[:m, -1] = bvec
    basis: list[int] = []
    ai = 0
    for i in range(m):
        if needs_artificial[i]:
            col = n + n_slack + ai
            tableau[i, col] = 1.0
            basis.append(col)
            ai += 1
        else:
            basis.append(slack_of_row[i])

    if max_iter is None:
        max_iter = 300 * (m + total)

    iterations = 0
    if n_art > 0:
        # phase 1: minimize the sum of artificials
        tableau[-1, :] = 0.0
        tableau[-1, n + n_slack : total] = 1.0
        for i in range(m):
            if basis[i] >= n + n_slack:
                tableau[-1, :] -= tableau[i, :]
        status, its = _run_simplex(tableau, basis, max_iter)
        iterations += its
        if status != "optimal":
            return SimplexResult(status, None, None, iterations)
        if tableau[-1, -1] < -1e-7:
            return SimplexResult("infeasible", None, None, iterations)
        # drive remaining artificials out of the basis
        for i in range(m):
            if basis[i] >= n + n_slack:
                for j in range(n + n_slack):
                    if abs(tableau[i, j]) > _TOL:
                        _pivot(tableau, basis, i, j)
                        break
        keep = list(range(n + n_slack)) + [total]
        tableau = tableau[:, keep]

    # phase 2
    tableau[-1, :] = 0.0
    tableau[-1, :n] = c
    for i in range(m):
        if basis[i] < n and c[basis[i]] != 0.0:
            tableau[-1, :] -= c[basis[i]] * tableau[i, :]
    status, its = _run_simplex(tableau, basis, max_iter)
    iterations += its
    if status != "optimal":
        return SimplexResult(status, None, None, iterations)

    x = np.zeros(n + n_slack)
    for i, col in enumerate(basis):
        if col < x.size:
            x[col] = tableau[i, -1]
    x = np.maximum(x[:n], 0.0)
    return SimplexResult("optimal", x, float(c @ x), iterations)
