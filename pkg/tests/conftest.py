"""Shared fixtures and the exhaustive projection oracle.

The oracle solves the same weighted least-squares-over-concave-vectors
problem as concreg.cone.project, but by enumerating every subset of the
second-difference constraints that could be active at the optimum and
solving each equality-constrained problem through its KKT system.  It is
exponential in the grid size and deliberately shares no code with the
package, so agreement is evidence, not tautology.
"""

from __future__ import annotations

import itertools

import numpy as np
import pytest


def second_difference_rows(grid: np.ndarray) -> np.ndarray:
    """Rows D with D r = slope(i, i+1) - slope(i-1, i) for interior i.

    Concavity of r over grid is exactly D r <= 0.
    """
    m = grid.size
    D = np.zeros((m - 2, m))
    for i in range(1, m - 1):
        hl = grid[i] - grid[i - 1]
        hr = grid[i + 1] - grid[i]
        D[i - 1, i - 1] = 1.0 / hl
        D[i - 1, i] = -1.0 / hl - 1.0 / hr
        D[i - 1, i + 1] = 1.0 / hr
    return D


def cone_project_bruteforce(grid, weights, targets, k0=None, feas_tol=1e-9):
    """Exhaustive minimizer of 0.5 * sum(w * (r - t)^2) over concave r.

    If k0 is given, additionally requires r[k0] == 0.  Only usable for
    small grids (2^(m-2) subsets).  Returns the fitted vector.
    """
    grid = np.asarray(grid, dtype=float)
    w = np.asarray(weights, dtype=float)
    t = np.asarray(targets, dtype=float)
    m = grid.size
    D = second_difference_rows(grid)
    scale = max(1.0, float(np.max(np.abs(t))))
    best_obj = np.inf
    best_r = None
    for active in itertools.chain.from_iterable(
        itertools.combinations(range(m - 2), k) for k in range(m - 1)
    ):
        rows = [D[list(active)]] if active else []
        if k0 is not None:
            pin = np.zeros((1, m))
            pin[0, k0] = 1.0
            rows.append(pin)
        A = np.vstack(rows) if rows else np.zeros((0, m))
        # KKT system of the equality-constrained weighted LS
        na = A.shape[0]
        K = np.zeros((m + na, m + na))
        K[:m, :m] = np.diag(w)
        K[:m, m:] = A.T
        K[m:, :m] = A
        rhs = np.concatenate([w * t, np.zeros(na)])
        sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
        r = sol[:m]
        if np.any(D @ r > feas_tol * scale):
            continue
        if k0 is not None and abs(r[k0]) > feas_tol * scale:
            continue
        obj = 0.5 * float(np.sum(w * (r - t) ** 2))
        if obj < best_obj - 1e-12 * scale**2:
            best_obj = obj
            best_r = r
    assert best_r is not None, "no feasible candidate found"
    return best_r


@pytest.fixture
def rng():
    return np.random.default_rng(20260818)
