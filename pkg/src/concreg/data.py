"""Datasets, the augmented/translated dataset, and piecewise-linear concave fits.

The estimators in this package are projections onto cones of concave
vectors.  Constraining the fitted value at a point x0 only yields a convex
cone after translating the responses so the constrained value is 0; the
:func:`augment` operation performs that translation and, when x0 is not a
design point, inserts it into the grid with a zero-weight placeholder
response.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

__all__ = [
    "Design",
    "AugmentedDesign",
    "PiecewiseLinearConcave",
    "augment",
    "evaluate",
    "active_knots",
    "read_design",
]


def _as_finite_1d(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class Design:
    """A univariate regression dataset.

    Rows are sorted by abscissa at construction, so two designs containing
    the same points in different orders are identical objects for every
    operation in this package.

    Parameters
    ----------
    x : array-like of shape (n,)
        Abscissas.  Duplicates are rejected.
    y : array-like of shape (n,)
        Responses, matched to ``x`` row by row.
    """

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x, y):
        x = _as_finite_1d(x, "x")
        y = _as_finite_1d(y, "y")
        if x.shape != y.shape:
            raise ValueError("x and y must have the same length")
        if x.size < 2:
            raise ValueError("a design needs at least 2 points")
        order = np.argsort(x, kind="stable")
        x = x[order]
        y = y[order]
        if np.any(np.diff(x) <= 0):
            raise ValueError("duplicate abscissas are not allowed")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class AugmentedDesign:
    """Translated (and possibly x0-augmented) dataset.

    Attributes
    ----------
    z : ndarray of shape (n0,)
        Strictly increasing grid; equal to the design abscissas, with x0
        inserted when it is not one of them.
    W : ndarray of shape (n0,)
        Translated responses, ``W[i] = y[orig(i)] - y0`` for data indices;
        0 at an inserted constraint point.
    k0 : int
        Index of the constraint point: ``z[k0] == x0``.
    I : ndarray of int
        Indices of ``z`` holding actual data (cardinality n; excludes
        ``k0`` exactly when x0 was inserted).
    x0, y0 : float
        Constraint location and value in original coordinates.
    exterior : bool
        True when x0 lies outside [x[0], x[-1]].  Accepted, but the
        asymptotic theory behind the tests assumes an interior point.
    """

    z: np.ndarray
    W: np.ndarray
    k0: int
    I: np.ndarray
    x0: float
    y0: float
    exterior: bool = False

    @property
    def n0(self) -> int:
        return self.z.size

    @property
    def inserted(self) -> bool:
        """True when x0 was not a design point and had to be inserted."""
        return self.I.size == self.z.size - 1


def augment(design: Design, x0: float, y0: float) -> AugmentedDesign:
    """Build the translated dataset on which the constrained fit is a cone
    projection.

    Responses are translated by ``y0`` so the constraint becomes
    ``r(x0) = 0``.  If ``x0`` is not a design abscissa it is inserted in
    sorted position with a placeholder response of 0 that carries no weight
    in any objective.

    Returns
    -------
    AugmentedDesign

    Raises
    ------
    ValueError
        If ``x0`` or ``y0`` is not finite.
    """
    if not np.isfinite(x0) or not np.isfinite(y0):
        raise ValueError("x0 and y0 must be finite")
    x, y = design.x, design.y
    n = x.size
    exterior = bool(x0 < x[0] or x0 > x[-1])
    if exterior:
        warnings.warn(
            "x0 lies outside the design range; inference theory assumes an "
            "interior point",
            stacklevel=2,
        )
    hit = np.nonzero(x == x0)[0]
    if hit.size:
        k0 = int(hit[0])
        z = x
        W = y - y0
        I = np.arange(n)
    else:
        k0 = int(np.searchsorted(x, x0))
        z = np.insert(x, k0, x0)
        W = np.insert(y - y0, k0, 0.0)
        I = np.delete(np.arange(n + 1), k0)
    z = z.copy()
    W = np.asarray(W, dtype=float)
    for a in (z, W, I):
        a.setflags(write=False)
    return AugmentedDesign(z=z, W=W, k0=k0, I=I, x0=float(x0), y0=float(y0),
                           exterior=exterior)


class _NotConcaveError(ValueError):
    pass


def _check_concave(knots: np.ndarray, values: np.ndarray, tol: float) -> None:
    slopes = np.diff(values) / np.diff(knots)
    if slopes.size >= 2 and np.any(np.diff(slopes) > tol):
        worst = float(np.max(np.diff(slopes)))
        raise _NotConcaveError(
            f"values are not concave over the knots (max slope increase "
            f"{worst:.3e} exceeds tol {tol:.3e})"
        )


@dataclass(frozen=True)
class PiecewiseLinearConcave:
    """A concave function, linear between consecutive knots.

    Construction rejects value vectors whose slopes increase anywhere by
    more than ``tol`` (default ``1e-9 * max(1, max|values|)``), so holding
    an instance is a certificate of concavity.  Evaluation outside
    ``[knots[0], knots[-1]]`` is an error: the fits this type represents
    are only determined on the data range.
    """

    knots: np.ndarray
    values: np.ndarray
    tol: float = field(default=0.0, compare=False)

    def __init__(self, knots, values, tol: float | None = None):
        knots = _as_finite_1d(knots, "knots")
        values = _as_finite_1d(values, "values")
        if knots.shape != values.shape:
            raise ValueError("knots and values must have the same length")
        if knots.size < 2:
            raise ValueError("need at least 2 knots")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if tol is None:
            tol = 1e-9 * max(1.0, float(np.max(np.abs(values))))
        _check_concave(knots, values, tol)
        knots = knots.copy()
        values = values.copy()
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "tol", float(tol))

    def __call__(self, t):
        return evaluate(self, t)


def _repaired_concave(knots, values, anchor: int = 0) -> PiecewiseLinearConcave:
    """Build a fit from solver output, pooling away rounding-level kinks.

    The solvers assemble fitted values from nonnegative combinations of
    concave generators, so their exact-arithmetic output is concave; the
    floating-point assembly can still leave slope increases of order
    value-noise / knot-gap, which on tightly clustered grids exceeds the
    constructor's tolerance.  When strict construction fails, the slopes
    are projected onto the nonincreasing cone (isotonic regression
    weighted by the gaps) and the values rebuilt around ``anchor``, whose
    value is preserved exactly so pinned fits stay pinned.  The rebuild
    refuses to move any value by more than 1e-7 * max(1, max|values|):
    anything larger is a solver failure, not rounding.
    """
    try:
        return PiecewiseLinearConcave(knots, values)
    except _NotConcaveError:
        pass
    knots = np.asarray(knots, dtype=float)
    values = np.asarray(values, dtype=float)
    gaps = np.diff(knots)
    slopes = np.diff(values) / gaps
    pooled = isotonic_regression(slopes, weights=gaps, increasing=False).x
    steps = pooled * gaps
    rebuilt = np.empty_like(values)
    rebuilt[anchor] = values[anchor]
    rebuilt[anchor + 1 :] = values[anchor] + np.cumsum(steps[anchor:])
    rebuilt[:anchor] = values[anchor] - np.cumsum(steps[:anchor][::-1])[::-1]
    worst = float(np.max(np.abs(rebuilt - values)))
    budget = 1e-7 * max(1.0, float(np.max(np.abs(values))))
    if worst > budget:
        raise ValueError(
            f"fitted values are far from concave: repair would move one by "
            f"{worst:.3e} (budget {budget:.3e})"
        )
    return PiecewiseLinearConcave(knots, rebuilt)


def evaluate(f: PiecewiseLinearConcave, t):
    """Evaluate ``f`` by linear interpolation.

    Parameters
    ----------
    f : PiecewiseLinearConcave
    t : float or array-like
        Points inside ``[f.knots[0], f.knots[-1]]``.

    Returns
    -------
    float or ndarray
        Interpolated values; exact at knots.

    Raises
    ------
    ValueError
        If any point lies outside the knot range.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < f.knots[0]) or np.any(t_arr > f.knots[-1]):
        raise ValueError(
            f"evaluation outside [{f.knots[0]}, {f.knots[-1]}] is undefined"
        )
    out = np.interp(t_arr, f.knots, f.values)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(out)
    return out


def active_knots(f: PiecewiseLinearConcave, tol: float | None = None) -> np.ndarray:
    """Indices where the slope of ``f`` actually changes, plus both endpoints.

    Parameters
    ----------
    f : PiecewiseLinearConcave
    tol : float, optional
        Minimum slope-change magnitude to count as a kink.  Defaults to
        ``1e-8 * max(1, max|values|)``.

    Returns
    -------
    ndarray of int
        Sorted indices into ``f.knots``; always contains 0 and the last
        index.
    """
    if tol is None:
        tol = 1e-8 * max(1.0, float(np.max(np.abs(f.values))))
    slopes = np.diff(f.values) / np.diff(f.knots)
    interior = np.nonzero(np.abs(np.diff(slopes)) > tol)[0] + 1
    return np.unique(np.concatenate(([0], interior, [f.knots.size - 1])))


def read_design(path) -> Design:
    """Load a dataset from a two-column ``x,y`` CSV file.

    The header row is optional, rows may be in any order, and duplicate
    abscissas are rejected.  Encoded as UTF-8.

    Raises
    ------
    ValueError
        On malformed rows, wrong column counts, or duplicate abscissas.
    """
    xs: list[float] = []
    ys: list[float] = []
    with io.open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: non-numeric row {row!r}") from None
    if len(xs) < 2:
        raise ValueError(f"{path}: fewer than 2 data rows")
    return Design(xs, ys)
