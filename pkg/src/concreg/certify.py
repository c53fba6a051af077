"""Finite-sample optimality certificates for the two fits.

These checkers re-derive optimality of a candidate fit from cumulative-sum
inequalities alone, sharing no code with the projection solver.  For the
unconstrained fit: running integrals of the fitted values stay below those
of the responses, matching at every kink and summing to the same total.
For the pinned fit the same comparison runs outward from the constraint
point on each side, with one equality connecting the two sides.

Because each condition is a small difference of large cumulative sums, all
accumulation is compensated: Kahan running sums and exactly rounded fsum
for the weighted totals.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import (
    AugmentedDesign,
    Design,
    PiecewiseLinearConcave,
    active_knots,
)

__all__ = [
    "CumSums",
    "ConditionRecord",
    "CharacterizationReport",
    "cumulative_sums",
    "check_alse",
    "check_nlse",
]


def _kahan_cumsum(a: np.ndarray) -> np.ndarray:
    out = np.empty(a.size)
    s = 0.0
    c = 0.0
    for i in range(a.size):
        y = float(a[i]) - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


@dataclass(frozen=True)
class CumSums:
    """Cumulative sums of fitted values and responses.

    For the unconstrained check, R_bar and S_bar are prefix sums over the
    whole grid.  For the pinned check, RL/SL are prefix sums strictly left
    of the constraint index and RR/SR are suffix sums strictly right of
    it, all in translated coordinates.
    """

    R_bar: np.ndarray | None = None
    S_bar: np.ndarray | None = None
    RL: np.ndarray | None = None
    SL: np.ndarray | None = None
    RR: np.ndarray | None = None
    SR: np.ndarray | None = None


@dataclass(frozen=True)
class ConditionRecord:
    label: str
    lhs: float
    rhs: float
    slack: float  # rhs - lhs
    is_knot: bool
    equality: bool  # True when the condition demands |slack| <= tol
    passed: bool


@dataclass(frozen=True)
class CharacterizationReport:
    conditions: tuple[ConditionRecord, ...]
    passed: bool
    tol: float

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "tol": self.tol,
            "conditions": [asdict(c) for c in self.conditions],
        }

    def failures(self) -> tuple[ConditionRecord, ...]:
        return tuple(c for c in self.conditions if not c.passed)


def _record(label, lhs, rhs, tol, is_knot=False, equality=False):
    slack = rhs - lhs
    passed = abs(slack) <= tol if equality else slack >= -tol
    return ConditionRecord(
        label=label,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=float(slack),
        is_knot=bool(is_knot),
        equality=bool(equality),
        passed=bool(passed),
    )


def cumulative_sums(values: np.ndarray, responses: np.ndarray,
                    k0: int | None = None) -> CumSums:
    """Compensated cumulative sums feeding the two checkers."""
    if k0 is None:
        return CumSums(
            R_bar=_kahan_cumsum(values), S_bar=_kahan_cumsum(responses)
        )
    RL = _kahan_cumsum(values[:k0])
    SL = _kahan_cumsum(responses[:k0])
    RR = _kahan_cumsum(values[k0 + 1 :][::-1])[::-1]
    SR = _kahan_cumsum(responses[k0 + 1 :][::-1])[::-1]
    return CumSums(RL=RL, SL=SL, RR=RR, SR=SR)


def _default_tol(*arrays) -> float:
    scale = 1.0
    for a in arrays:
        if a.size:
            scale = max(scale, float(np.max(np.abs(a))))
    return 1e-7 * scale


def check_alse(design: Design, fit: PiecewiseLinearConcave,
               tol: float | None = None) -> CharacterizationReport:
    """Certify an unconstrained concave least-squares fit.

    Conditions, with R_k / S_k the prefix sums of fitted values and
    responses and dx the grid spacings:

    - total: R_{n-1} == S_{n-1};
    - cum[j], 1 <= j <= n-1: sum_{q<j} R_q dx_q <= sum_{q<j} S_q dx_q,
      with equality where the fit has a kink at grid point j (the last
      point counts as a kink by convention).

    tol defaults to 1e-7 * max(1, max|y|, max|fitted|); an explicit tol is
    absolute.
    """
    if fit.knots.shape != design.x.shape or np.any(fit.knots != design.x):
        raise ValueError("fit knots must equal the design abscissas")
    y = design.y
    r = fit.values
    if tol is None:
        tol = _default_tol(y, r)
    n = y.size
    cs = cumulative_sums(r, y)
    dz = np.diff(design.x)
    knots = set(int(j) for j in active_knots(fit))
    records = [
        _record("total", cs.R_bar[n - 1], cs.S_bar[n - 1], tol, equality=True)
    ]
    for j in range(1, n):
        lhs = math.fsum(cs.R_bar[q] * dz[q] for q in range(j))
        rhs = math.fsum(cs.S_bar[q] * dz[q] for q in range(j))
        is_knot = j in knots or j == n - 1
        records.append(
            _record(f"cum[{j}]", lhs, rhs, tol, is_knot=is_knot, equality=is_knot)
        )
    passed = all(rec.passed for rec in records)
    return CharacterizationReport(tuple(records), passed, tol)


def check_nlse(aug: AugmentedDesign, fit: PiecewiseLinearConcave,
               tol: float | None = None) -> CharacterizationReport:
    """Certify a concave least-squares fit pinned at the constraint point.

    Works in translated coordinates (responses W, fitted values minus y0).
    With K the constraint index, prefix sums RL/SL over points left of K,
    suffix sums RR/SR over points right of K, and dz the spacings:

    - pin: fitted value at K equals y0;
    - left[j], 1 <= j <= K: sum_{q<j} RL_q dz_q <= same with SL;
    - right[j], K+1 <= j <= n0-2: sum_{q>j} RR_q dz_{q-1} <= same with SR;
    - connect: sum_{q<K} (RL_q - SL_q) dz_q == sum_{q>K} (RR_q - SR_q)
      dz_{q-1};
    - equality in left[j]/right[j] where the fit has a kink at j.

    Zero-weight inserted points participate through the fitted values
    only, exactly as they enter the constraint set.
    """
    if fit.knots.shape != aug.z.shape or np.any(fit.knots != aug.z):
        raise ValueError("fit knots must equal the augmented grid")
    K = aug.k0
    m = aug.n0
    r_t = fit.values - aug.y0
    W = aug.W
    if tol is None:
        tol = _default_tol(W, r_t)
    cs = cumulative_sums(r_t, W, k0=K)
    dz = np.diff(aug.z)
    knots = set(int(j) for j in active_knots(fit))
    records = [_record("pin", r_t[K], 0.0, tol, is_knot=True, equality=True)]
    for j in range(1, K + 1):
        lhs = math.fsum(cs.RL[q] * dz[q] for q in range(j))
        rhs = math.fsum(cs.SL[q] * dz[q] for q in range(j))
        is_knot = j in knots
        records.append(
            _record(f"left[{j}]", lhs, rhs, tol, is_knot=is_knot, equality=is_knot)
        )
    for j in range(K + 1, m - 1):
        # suffix arrays are indexed from K+1
        lhs = math.fsum(
            cs.RR[q - (K + 1)] * dz[q - 1] for q in range(j + 1, m)
        )
        rhs = math.fsum(
            cs.SR[q - (K + 1)] * dz[q - 1] for q in range(j + 1, m)
        )
        is_knot = j in knots
        records.append(
            _record(f"right[{j}]", lhs, rhs, tol, is_knot=is_knot, equality=is_knot)
        )
    lhs_c = math.fsum((cs.RL[q] - cs.SL[q]) * dz[q] for q in range(K))
    rhs_c = math.fsum(
        (cs.RR[q - (K + 1)] - cs.SR[q - (K + 1)]) * dz[q - 1]
        for q in range(K + 1, m)
    )
    records.append(_record("connect", lhs_c, rhs_c, tol, equality=True))
    passed = all(rec.passed for rec in records)
    return CharacterizationReport(tuple(records), passed, tol)
