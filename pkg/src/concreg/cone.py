"""Weighted least-squares projection onto cones of concave vectors.

The feasible set is {r : r concave over grid}, optionally intersected with
{r[k0] = 0}.  Both are finitely generated convex cones: the unconstrained
cone by +/-1, +/-x and one downward hinge per interior grid point; the
constrained cone by +/-(x - x0) and hinges vanishing at k0 (left hinges at
or left of k0, right hinges right of it).  project() runs a Lawson-Hanson
style active-set iteration in generator coordinates: the affine generators
enter as free columns, hinge coefficients are kept nonnegative, and the
most negative gradient inner product prices the next hinge in.  On exit
the Fenchel conditions (every generator inner product with the gradient
nonnegative, zero for generators carrying positive weight) certify the
minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConeProblem",
    "ConeSolution",
    "FenchelReport",
    "generators",
    "project",
    "fenchel_check",
]


def _as_finite_1d(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class ConeProblem:
    """Inputs of one cone projection.

    Parameters
    ----------
    grid : array-like of shape (m,)
        Strictly increasing abscissas.
    weights : array-like of shape (m,)
        Nonnegative; at least two strictly positive.  A zero entry removes
        that coordinate from the objective (used for the inserted
        constraint point).
    targets : array-like of shape (m,)
        The vector being projected.
    constraint : int or None
        If given, index k0 whose fitted value is pinned to 0.
    """

    grid: np.ndarray
    weights: np.ndarray
    targets: np.ndarray
    constraint: int | None = None

    def __init__(self, grid, weights, targets, constraint=None):
        grid = _as_finite_1d(grid, "grid")
        weights = _as_finite_1d(weights, "weights")
        targets = _as_finite_1d(targets, "targets")
        m = grid.size
        if m < 2:
            raise ValueError("grid needs at least 2 points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if weights.shape != grid.shape or targets.shape != grid.shape:
            raise ValueError("weights and targets must match grid length")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if np.count_nonzero(weights > 0) < 2:
            raise ValueError("need at least two strictly positive weights")
        if constraint is not None:
            constraint = int(constraint)
            if not 0 <= constraint < m:
                raise ValueError(f"constraint index {constraint} out of range")
        for a in (grid, weights, targets):
            a.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "constraint", constraint)

    @property
    def m(self) -> int:
        return self.grid.size


@dataclass(frozen=True)
class ConeSolution:
    """Output of project: the fitted vector with its optimality data.

    multipliers is aligned with generators(problem.grid,
    problem.constraint); every entry is nonnegative and the fitted vector
    equals the multiplier-weighted sum of generators.
    """

    fitted: np.ndarray
    objective: float
    multipliers: np.ndarray
    iterations: int


@dataclass(frozen=True)
class FenchelReport:
    """Generator-wise optimality audit of a candidate solution.

    passed requires every inner product ⟨a_i, grad⟩ ≥ -tol·scale and
    |⟨a_i, grad⟩| ≤ tol·scale whenever multiplier i exceeds tol.
    """

    passed: bool
    inequality_min: float
    equality_max: float
    inner_products: np.ndarray
    tol: float
    scale: float


def _hinge_indices(m: int, constraint: int | None) -> np.ndarray:
    # one hinge per interior point; a rightmost k0 adds the (affine)
    # hinge anchored at the last point, following the generating-set
    # formula with i running up to k0
    qs = list(range(1, m - 1))
    if constraint is not None and constraint == m - 1:
        qs.append(m - 1)
    return np.array(qs, dtype=int)


def _hinge_vector(grid: np.ndarray, q: int, constraint: int | None) -> np.ndarray:
    m = grid.size
    a = np.zeros(m)
    if constraint is not None and q <= constraint:
        a[: q + 1] = grid[: q + 1] - grid[q]  # left hinge, vanishes for j >= q
    else:
        a[q:] = grid[q] - grid[q:]  # right/unconstrained hinge
    return a


def generators(grid, constraint: int | None = None) -> np.ndarray:
    """All cone generators evaluated on the grid, one per row.

    Row order, unconstrained: +1, -1, +x, -x, then hinges at interior
    points left to right.  Constrained: +(x-x0), -(x-x0), then hinges in
    the same knot order (left-type at or before k0, right-type after).

    Returns
    -------
    ndarray of shape (n_generators, m)
    """
    grid = _as_finite_1d(grid, "grid")
    m = grid.size
    if m < 2:
        raise ValueError("grid needs at least 2 points")
    rows = []
    if constraint is None:
        one = np.ones(m)
        rows += [one, -one, grid.copy(), -grid.copy()]
    else:
        pinned = grid - grid[constraint]
        rows += [pinned, -pinned]
    for q in _hinge_indices(m, constraint):
        rows.append(_hinge_vector(grid, q, constraint))
    return np.array(rows)


def _all_hinge_ips(grid, g, constraint):
    """⟨hinge_q, g⟩ for every hinge, via prefix/suffix sums, O(m)."""
    m = grid.size
    zg = grid * g
    pre_g = np.cumsum(g)
    pre_zg = np.cumsum(zg)
    suf_g = np.cumsum(g[::-1])[::-1]
    suf_zg = np.cumsum(zg[::-1])[::-1]
    qs = _hinge_indices(m, constraint)
    ips = np.empty(qs.size)
    for k, q in enumerate(qs):
        if constraint is not None and q <= constraint:
            ips[k] = pre_zg[q] - grid[q] * pre_g[q]
        else:
            ips[k] = grid[q] * suf_g[q] - suf_zg[q]
    return qs, ips


def _is_concave_exact(grid, r) -> bool:
    # cross-multiplied slope comparison, no tolerance
    dv = np.diff(r)
    dz = np.diff(grid)
    return bool(np.all(dv[1:] * dz[:-1] <= dv[:-1] * dz[1:]))


def _multipliers_from_vector(grid, r, constraint):
    """Generator coefficients reproducing a concave vector r exactly."""
    m = grid.size
    s = np.diff(r) / np.diff(grid)
    drops = np.maximum(s[:-1] - s[1:], 0.0)  # one per interior point
    qs = _hinge_indices(m, constraint)
    hinge = np.zeros(qs.size)
    hinge[: m - 2] = drops
    if constraint is None:
        b = s[0]
        a = r[0] - b * grid[0]
        head = [max(a, 0.0), max(-a, 0.0), max(b, 0.0), max(-b, 0.0)]
    else:
        beta = s[constraint] if constraint <= m - 2 else s[m - 2]
        head = [max(beta, 0.0), max(-beta, 0.0)]
    return np.concatenate([head, hinge])


def project(problem: ConeProblem, warm_start=None) -> ConeSolution:
    """Minimize 0.5 * sum(weights * (targets - r)**2) over the cone.

    Returns the unique minimizer on the positively weighted coordinates
    (zero-weight coordinates are determined by the active constraints).
    The returned multipliers satisfy the Fenchel complementarity
    conditions; fenchel_check on the result passes by construction.

    Parameters
    ----------
    problem : ConeProblem
    warm_start : iterable of int, optional
        Hinge kink indices to seed the active set with (a performance
        hint, e.g. the knots of a related solved problem).  Invalid
        indices are ignored; the result is the same minimizer either way.

    Raises
    ------
    RuntimeError
        If the active-set iteration exceeds 50*m solves, which signals a
        numerical failure rather than silent inexactness.
    """
    grid, w, t, K = problem.grid, problem.weights, problem.targets, problem.constraint
    m = problem.m

    # Feasible targets project to themselves; skipping the iteration also
    # keeps the degenerate noise-free case exact.
    cand = t.copy()
    eligible = True
    if K is not None:
        if w[K] == 0.0:
            cand[K] = 0.0
        elif t[K] != 0.0:
            eligible = False
    if eligible and _is_concave_exact(grid, cand):
        return ConeSolution(
            fitted=cand,
            objective=0.5 * float(np.sum(w * (cand - t) ** 2)),
            multipliers=_multipliers_from_vector(grid, cand, K),
            iterations=0,
        )

    sw = np.sqrt(w)
    b_wls = sw * t
    if K is None:
        affine = [np.ones(m), grid.copy()]
    else:
        affine = [grid - grid[K]]
    n_aff = len(affine)
    qs_all = _hinge_indices(m, K)
    pos_of_q = {int(q): k for k, q in enumerate(qs_all)}

    active: list[int] = []  # hinge kink indices, insertion order
    if warm_start is not None:
        seen: set[int] = set()
        for q in warm_start:
            qi = int(q)
            if qi in pos_of_q and qi not in seen:
                seen.add(qi)
                active.append(qi)
    cap = 50 * m
    solves = 0

    def solve_ls(active_list):
        cols = affine + [_hinge_vector(grid, q, K) for q in active_list]
        A = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(A * sw[:, None], b_wls, rcond=None)
        return coef, A

    coef, A = solve_ls(active)
    solves += 1
    # A warm-started basis may be infeasible; drop the worst coefficient
    # until the remaining ones are strictly positive.
    while active:
        hng0 = coef[n_aff:]
        worst = int(np.argmin(hng0))
        if hng0[worst] > 0.0:
            break
        del active[worst]
        coef, A = solve_ls(active)
        solves += 1
        if solves > cap:
            raise RuntimeError(
                f"cone projection exceeded {cap} active-set solves; "
                f"numerical failure"
            )
    r = A @ coef
    g = w * (r - t)
    # Entry threshold uses the gradient at the zero vector, matching the
    # fenchel_check normalization and independent of the starting basis.
    _, ips0 = _all_hinge_ips(grid, -(w * t), K)
    scale0 = max(1.0, float(np.max(np.abs(ips0))) if ips0.size else 0.0)
    entry_tol = 1e-11 * scale0

    blocked: set[int] = set()
    while True:
        if solves > cap:
            raise RuntimeError(
                f"cone projection exceeded {cap} active-set solves; "
                f"numerical failure"
            )
        _, ips = _all_hinge_ips(grid, g, K)
        ips_masked = ips.copy()
        for k, q in enumerate(qs_all):
            if int(q) in blocked or int(q) in active:
                ips_masked[k] = np.inf
        if ips_masked.size == 0 or np.min(ips_masked) >= -entry_tol:
            break
        q_new = int(qs_all[int(np.argmin(ips_masked))])  # lowest index on ties
        active.append(q_new)
        cur = np.concatenate([coef, [0.0]])
        while True:
            coef_ls, A = solve_ls(active)
            solves += 1
            if solves > cap:
                raise RuntimeError(
                    f"cone projection exceeded {cap} active-set solves; "
                    f"numerical failure"
                )
            hng = coef_ls[n_aff:]
            if hng.size == 0 or np.min(hng) > 0.0:
                coef = coef_ls
                break
            # step back along the segment toward the infeasible solution
            theta = 1.0
            for i in range(n_aff, cur.size):
                if coef_ls[i] <= 0.0 and cur[i] > coef_ls[i]:
                    theta = min(theta, cur[i] / (cur[i] - coef_ls[i]))
            cur = cur + theta * (coef_ls - cur)
            keep = [
                i
                for i in range(len(active))
                if cur[n_aff + i] > 1e-14 * max(1.0, np.max(np.abs(cur)))
            ]
            if len(keep) == len(active):
                # numerically stalled entry: drop the newcomer and bar it
                keep = [i for i in range(len(active)) if active[i] != q_new]
            dropped_new = q_new not in [active[i] for i in keep]
            active = [active[i] for i in keep]
            cur = np.concatenate([cur[:n_aff], cur[n_aff:][keep]])
            if dropped_new:
                blocked.add(q_new)
                coef, A = solve_ls(active)
                solves += 1
                coef_ls = coef
                break
        coef = coef_ls
        if q_new in active:
            blocked.clear()
        r = A @ coef
        g = w * (r - t)

    multipliers = np.zeros(n_aff * 2 + qs_all.size)
    if K is None:
        a_c, b_c = coef[0], coef[1]
        multipliers[0], multipliers[1] = max(a_c, 0.0), max(-a_c, 0.0)
        multipliers[2], multipliers[3] = max(b_c, 0.0), max(-b_c, 0.0)
        base = 4
    else:
        multipliers[0], multipliers[1] = max(coef[0], 0.0), max(-coef[0], 0.0)
        base = 2
    for i, q in enumerate(active):
        multipliers[base + pos_of_q[q]] = max(coef[n_aff + i], 0.0)

    objective = 0.5 * float(np.sum(w * (r - t) ** 2))
    return ConeSolution(
        fitted=r, objective=objective, multipliers=multipliers, iterations=solves
    )


def fenchel_check(
    problem: ConeProblem, solution: ConeSolution, tol: float = 1e-8
) -> FenchelReport:
    """Audit a solution against the generator inner-product conditions.

    The gradient is grad_j = weights[j] * (fitted[j] - targets[j]).  The
    check passes iff ⟨a_i, grad⟩ ≥ -tol·scale for every generator and
    |⟨a_i, grad⟩| ≤ tol·scale for every generator whose multiplier exceeds
    tol, where scale normalizes by the inner products of the gradient at
    the zero vector (so tol acts relatively on badly scaled problems and
    absolutely on O(1) ones).

    Inner products here are explicit dot products with materialized
    generators, a different summation path from the prefix-sum pricing
    inside project.
    """
    gens = generators(problem.grid, problem.constraint)
    g = problem.weights * (solution.fitted - problem.targets)
    ips = gens @ g
    g0 = problem.weights * problem.targets
    scale = max(1.0, float(np.max(np.abs(gens @ g0))))
    mult = solution.multipliers
    if mult.shape != (gens.shape[0],):
        raise ValueError("multipliers do not align with the generator set")
    ineq_min = float(np.min(ips))
    active = mult > tol
    eq_max = float(np.max(np.abs(ips[active]))) if np.any(active) else 0.0
    passed = ineq_min >= -tol * scale and eq_max <= tol * scale
    return FenchelReport(
        passed=passed,
        inequality_min=ineq_min,
        equality_max=eq_max,
        inner_products=ips,
        tol=tol,
        scale=scale,
    )
