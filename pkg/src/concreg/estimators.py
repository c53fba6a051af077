"""Concave least-squares fits: unconstrained, and pinned at one point.

fit_alse computes the concave least-squares fit of the responses; fit_nlse
computes the same fit under the constraint r(x0) = y0, by translating
responses so the constraint becomes r(x0) = 0 (a convex cone) and
projecting.  Both return fits in original coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cone import ConeProblem, project
from .data import (
    AugmentedDesign,
    Design,
    PiecewiseLinearConcave,
    _repaired_concave,
    augment,
)

__all__ = ["FitResult", "fit_alse", "fit_nlse"]


@dataclass(frozen=True)
class FitResult:
    """A fitted concave regression.

    Attributes
    ----------
    fit : PiecewiseLinearConcave
        The fitted function in original coordinates.
    objective : float
        Half the sum of squared residuals over data points.
    residuals : ndarray
        y minus the fitted values at the data abscissas.
    sigma2_hat : float
        Mean squared residual, sum(residuals**2) / (n - ddof).
    aug : AugmentedDesign or None
        The translated dataset behind a constrained fit; None for the
        unconstrained fit.
    """

    fit: PiecewiseLinearConcave
    objective: float
    residuals: np.ndarray
    sigma2_hat: float
    aug: AugmentedDesign | None = None


def _result(fit, y, fitted_at_data, ddof, aug=None):
    resid = y - fitted_at_data
    objective = 0.5 * float(np.sum(resid**2))
    n = y.size
    if not 0 <= ddof < n:
        raise ValueError("ddof must satisfy 0 <= ddof < n")
    sigma2 = float(np.sum(resid**2)) / (n - ddof)
    resid = np.asarray(resid)
    resid.setflags(write=False)
    return FitResult(
        fit=fit,
        objective=objective,
        residuals=resid,
        sigma2_hat=sigma2,
        aug=aug,
    )


def fit_alse(design: Design, ddof: int = 0) -> FitResult:
    """Least-squares concave fit of the responses.

    Parameters
    ----------
    design : Design
    ddof : int, optional
        Degrees of freedom subtracted in the variance estimate.  The
        default 0 gives the plain mean squared residual; there is no
        settled correction for shape-constrained fits.

    Returns
    -------
    FitResult
    """
    sol = project(ConeProblem(design.x, np.ones(design.n), design.y))
    fit = _repaired_concave(design.x, sol.fitted)
    return _result(fit, design.y, fit.values, ddof)


def fit_nlse(design: Design, x0: float, y0: float, ddof: int = 0) -> FitResult:
    """Concave fit constrained to pass through (x0, y0).

    The responses are translated by y0, the grid is augmented with x0 when
    needed (that point then carries zero weight), and the translated
    problem is projected onto the cone of concave vectors vanishing at x0.
    The returned fit satisfies evaluate(fit, x0) == y0 exactly.

    Residuals, objective and sigma2_hat are computed over the data points
    only; the inserted point never contributes.
    """
    aug = augment(design, x0, y0)
    w = np.zeros(aug.n0)
    w[aug.I] = 1.0
    sol = project(ConeProblem(aug.z, w, aug.W, constraint=aug.k0))
    values = sol.fitted + y0
    values[aug.k0] = y0  # 0 + y0 exactly, kept explicit
    fit = _repaired_concave(aug.z, values, anchor=aug.k0)
    return _result(fit, design.y, fit.values[aug.I], ddof, aug=aug)
