"""Likelihood-ratio inference for the regression value at a point.

The statistic is 2*log(lambda) = 2*(phi0 - phihat), the objective gap
between the pinned and unpinned concave fits.  Dividing by the noise
variance gives a pivot whose null distribution is the one tabulated in a
CriticalTable, so tests and confidence intervals need no curvature or
density estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Design, _repaired_concave, augment, evaluate
from .estimators import FitResult, fit_alse, fit_nlse
from .limit import CriticalTable


@dataclass(frozen=True)
class LrResult:
    """The statistic with both fits and a cross-check of the computation.

    two_log_lambda is 2*(phi0 - phihat); identity_gap is its absolute
    disagreement with the independently summed route
    sum_i ((alse_i - y0)^2 - (nlse_i - y0)^2), which equals the statistic
    exactly in real arithmetic.
    """

    two_log_lambda: float
    alse: FitResult
    nlse: FitResult
    sigma2_used: float
    identity_gap: float


@dataclass(frozen=True)
class LrDecision:
    statistic: float
    threshold: float
    p_value: float
    reject: bool
    alpha: float
    sigma2_used: float
    result: LrResult


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    grid: np.ndarray
    accepted: np.ndarray
    nonconvex_warning: bool
    messages: tuple[str, ...]


@dataclass(frozen=True)
class LrLocalization:
    """Split of the statistic into near and far contributions.

    d_local sums the per-point terms within radius b*n^(-1/5) of x0,
    e_remainder the rest; d_local + e_remainder recovers the summed route
    of the statistic.
    """

    d_local: float
    e_remainder: float
    radius: float
    n_local: int


def _interpolating_nlse(design: Design, alse: FitResult, x0: float, y0: float) -> FitResult:
    # The unpinned fit already passes through (x0, y0): extending it with a
    # collinear knot is feasible for the pinned problem and has the same
    # objective, so it is the pinned solution and the statistic is exactly 0.
    aug = augment(design, x0, y0)
    values = np.interp(aug.z, alse.fit.knots, alse.fit.values)
    values[aug.k0] = y0
    fit = _repaired_concave(aug.z, values, anchor=aug.k0)
    return FitResult(
        fit=fit,
        objective=alse.objective,
        residuals=alse.residuals,
        sigma2_hat=alse.sigma2_hat,
        aug=aug,
    )


def _statistic_from_alse(design: Design, alse: FitResult, x0: float, y0: float,
                         sigma2: float) -> LrResult:
    x = design.x
    if x[0] <= x0 <= x[-1] and evaluate(alse.fit, x0) == y0:
        nlse = _interpolating_nlse(design, alse, x0, y0)
        return LrResult(0.0, alse, nlse, sigma2, 0.0)
    nlse = fit_nlse(design, x0, y0)
    route1 = 2.0 * (nlse.objective - alse.objective)
    av = alse.fit.values
    nv = nlse.fit.values[nlse.aug.I]
    route2 = math.fsum((av - y0) ** 2 - (nv - y0) ** 2)
    return LrResult(route1, alse, nlse, sigma2, abs(route1 - route2))


def lr_statistic(
    design: Design, x0: float, y0: float, sigma2: float | None = None
) -> LrResult:
    """2*log(lambda) for H0: r(x0) = y0, with both fits attached.

    sigma2 overrides the plug-in variance estimate from the unpinned fit;
    it only affects downstream decisions, not the statistic.
    """
    alse = fit_alse(design)
    s2 = alse.sigma2_hat if sigma2 is None else float(sigma2)
    if s2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    return _statistic_from_alse(design, alse, x0, y0, s2)


def lr_test(
    design: Design,
    x0: float,
    y0: float,
    table: CriticalTable,
    alpha: float = 0.05,
    sigma2: float | None = None,
) -> LrDecision:
    """Level-alpha test of H0: r(x0) = y0 against the tabulated pivot.

    Rejects iff the statistic exceeds sigma2 * quantile(1 - alpha); the
    p-value is 1 - ecdf(statistic / sigma2).  With sigma2 = 0 any positive
    statistic is rejected outright.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    res = lr_statistic(design, x0, y0, sigma2=sigma2)
    stat, s2 = res.two_log_lambda, res.sigma2_used
    if s2 == 0.0:
        reject = stat > 0.0
        return LrDecision(stat, 0.0, 0.0 if reject else 1.0, reject, alpha, s2, res)
    threshold = s2 * table.quantile(1.0 - alpha)
    p_value = 1.0 - table.ecdf(stat / s2)
    return LrDecision(stat, threshold, p_value, stat > threshold, alpha, s2, res)


def _curvature_guess(design: Design, x0: float) -> float:
    # local quadratic least squares; the scale floor keeps the interval
    # width finite when the data look affine near x0
    x, y = design.x, design.y
    span = x[-1] - x[0]
    window = np.abs(x - x0) <= 2.0 * span * design.n ** (-0.2)
    if np.count_nonzero(window) < 5:
        window = np.ones(design.n, dtype=bool)
    dx = x[window] - x0
    cols = np.column_stack([np.ones(dx.size), dx, dx**2])
    coef, *_ = np.linalg.lstsq(cols, y[window], rcond=None)
    floor = 1e-8 * max(1.0, float(np.ptp(y))) / span**2
    return max(abs(2.0 * coef[2]), floor)


def _ci_concave(design, x0, table, alpha, sigma2, points):
    alse = fit_alse(design)
    s2 = alse.sigma2_hat if sigma2 is None else float(sigma2)
    if s2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    x = design.x
    if x[0] <= x0 <= x[-1]:
        center = evaluate(alse.fit, x0)
    else:
        center = float(alse.fit.values[0 if x0 < x[0] else -1])
    threshold = s2 * table.quantile(1.0 - alpha)
    slack = 1e-12 * max(1.0, threshold)

    def is_accepted(y0):
        res = _statistic_from_alse(design, alse, x0, y0, s2)
        return res.two_log_lambda <= threshold + slack

    sigma = math.sqrt(s2)
    if sigma == 0.0:
        half = 1e-8 * max(1.0, abs(center))
    else:
        d = (24.0 / (s2 * s2 * _curvature_guess(design, x0))) ** 0.2
        half = 10.0 * sigma * design.n ** (-0.4) * d

    messages = []
    for attempt in range(7):
        grid = np.linspace(center - half, center + half, points)
        flags = np.fromiter((is_accepted(g) for g in grid), dtype=bool, count=points)
        touches = (not np.any(flags)) or flags[0] or flags[-1]
        if not touches:
            break
        if attempt == 6:
            if not np.any(flags):
                raise ValueError(
                    "no candidate value accepted; widen the scan or check sigma2"
                )
            messages.append(
                "acceptance region touches the scanned range; interval may be wider"
            )
            break
        half *= 2.0

    idx = np.nonzero(flags)[0]
    i_lo, i_hi = int(idx[0]), int(idx[-1])
    nonconvex = bool(np.any(~flags[i_lo : i_hi + 1]))
    if nonconvex:
        messages.append(
            "acceptance region is not an interval; reporting its convex hull"
        )
    width_tol = 1e-4 * sigma if sigma > 0 else 1e-8 * max(1.0, abs(center))

    def bisect(rejected, accepted_pt):
        while abs(accepted_pt - rejected) > width_tol:
            mid = 0.5 * (accepted_pt + rejected)
            if is_accepted(mid):
                accepted_pt = mid
            else:
                rejected = mid
        return accepted_pt

    lower = grid[i_lo] if i_lo == 0 else bisect(grid[i_lo - 1], grid[i_lo])
    upper = grid[i_hi] if i_hi == points - 1 else bisect(grid[i_hi + 1], grid[i_hi])
    return ConfidenceInterval(
        lower=float(lower),
        upper=float(upper),
        alpha=alpha,
        grid=grid,
        accepted=flags,
        nonconvex_warning=nonconvex,
        messages=tuple(messages),
    )


def confidence_interval(
    design: Design,
    x0: float,
    table: CriticalTable,
    alpha: float = 0.05,
    sigma2: float | None = None,
    points: int = 201,
    convex: bool = False,
) -> ConfidenceInterval:
    """Invert the pivot test into a confidence set for r(x0).

    Scans candidate values on an adaptive grid around the unpinned fit,
    keeps those the level-alpha test accepts, and bisects the boundary.
    convex=True fits -y under the concave model and mirrors the interval
    back, for regression functions assumed convex instead of concave.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if points < 3:
        raise ValueError("points must be at least 3")
    if convex:
        mirrored = _ci_concave(
            Design(design.x, -design.y), x0, table, alpha, sigma2, points
        )
        return ConfidenceInterval(
            lower=-mirrored.upper,
            upper=-mirrored.lower,
            alpha=alpha,
            grid=-mirrored.grid[::-1],
            accepted=mirrored.accepted[::-1],
            nonconvex_warning=mirrored.nonconvex_warning,
            messages=mirrored.messages,
        )
    return _ci_concave(design, x0, table, alpha, sigma2, points)


def lr_localization(design: Design, x0: float, y0: float, b: float) -> LrLocalization:
    """Split the summed statistic at radius b * n^(-1/5) around x0."""
    if b <= 0:
        raise ValueError("b must be positive")
    res = lr_statistic(design, x0, y0)
    av = res.alse.fit.values
    nv = res.nlse.fit.values[res.nlse.aug.I]
    terms = (av - y0) ** 2 - (nv - y0) ** 2
    radius = b * design.n ** (-0.2)
    near = np.abs(design.x - x0) <= radius
    return LrLocalization(
        d_local=math.fsum(terms[near]),
        e_remainder=math.fsum(terms[~near]),
        radius=radius,
        n_local=int(np.count_nonzero(near)),
    )
