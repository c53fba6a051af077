"""White-noise limit problem: drifted paths, invelope fits, and the pivot table.

The canonical process is X(t) = sigma*W(t) - 4*a*t^3 (standard two-sided
Brownian motion W, W(0) = 0).  The concave score fit r minimizes
0.5*Int r^2 - Int r dX over concave functions on [-c, c]; the constrained
variant additionally pins r(0) = 0.  Both are computed as weighted cone
projections of per-cell increment slopes, and the pivotal statistic is

    D = Int_{-b}^{b} (rhat^2 - rhat0^2)

whose Monte Carlo distribution is stored in a CriticalTable.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__
from .cone import ConeProblem, project
from .data import PiecewiseLinearConcave, _repaired_concave, active_knots


@dataclass(frozen=True)
class LimitPath:
    """A sampled path of X(t) = sigma*W(t) - 4*a*t^3 on [-c, c].

    The fit grid is t_j = -c + j*h (0 is always a grid point).  Increments
    are read off a twice-finer lattice (step h/2), stored in ``X_fine``;
    ``X`` and ``X_half`` are views of it at the grid points and at the
    half-offset points t_j +- h/2.  ``pad`` is the index of -c inside the
    fine lattice: freshly simulated paths carry two spare steps per side
    (pad = 4) so they can be coarsened once; coarsened paths carry one
    (pad = 2).
    """

    c: float
    h: float
    a: float
    sigma: float
    seed: int
    grid: np.ndarray
    X_fine: np.ndarray
    pad: int

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        xf = np.asarray(self.X_fine, dtype=float)
        if grid.ndim != 1 or grid.size < 3 or grid.size % 2 == 0:
            raise ValueError("grid must be 1-D with odd size >= 3")
        if self.pad not in (2, 4):
            raise ValueError("pad must be 2 or 4")
        if xf.ndim != 1 or xf.size != 2 * (grid.size - 1) + 2 * self.pad + 1:
            raise ValueError("X_fine size does not match grid and pad")
        if not (self.c > 0 and self.h > 0):
            raise ValueError("c and h must be positive")
        if self.a < 0 or self.sigma < 0:
            raise ValueError("a and sigma must be nonnegative")
        if not (np.all(np.isfinite(grid)) and np.all(np.isfinite(xf))):
            raise ValueError("path values must be finite")
        ctr = grid.size // 2
        if abs(grid[ctr]) > 1e-9 * self.h:
            raise ValueError("0 must be a grid point")
        grid = grid.copy()
        xf = xf.copy()
        grid.setflags(write=False)
        xf.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "X_fine", xf)

    @property
    def m(self) -> int:
        return self.grid.size

    @property
    def center(self) -> int:
        """Index of the grid point t = 0."""
        return self.grid.size // 2

    @property
    def X(self) -> np.ndarray:
        """Path values at the grid points t_j."""
        return self.X_fine[self.pad : self.pad + 2 * self.m - 1 : 2]

    @property
    def X_half(self) -> np.ndarray:
        """Path values at the half-offset points t_j - h/2 (m+1 of them)."""
        return self.X_fine[self.pad - 1 : self.pad + 2 * self.m : 2]

    def fine_t(self) -> np.ndarray:
        """Abscissas of the fine lattice underlying ``X_fine``."""
        k0 = self.pad + 2 * self.center
        return (np.arange(self.X_fine.size) - k0) * (self.h / 2.0)


def simulate_path(
    c: float, h: float, a: float = 1.0, sigma: float = 1.0, seed: int = 0
) -> LimitPath:
    """Draw one path of X(t) = sigma*W(t) - 4*a*t^3 on the fine lattice.

    c/h must be an integer.  The walk starts at X(0) = 0 and is built
    outward with exact cubic drift per step, so sigma = 0 gives
    X(t) = -4*a*t^3 exactly at every lattice point.  The right half is
    drawn before the left half from a single seeded generator.
    """
    if not (c > 0 and h > 0):
        raise ValueError("c and h must be positive")
    nh = round(c / h)
    if nh < 1 or abs(c / h - nh) > 1e-9:
        raise ValueError("c/h must be a positive integer")
    if a < 0 or sigma < 0:
        raise ValueError("a and sigma must be nonnegative")
    m = 2 * nh + 1
    pad = 4
    delta = h / 2.0
    fsize = 2 * (m - 1) + 2 * pad + 1
    k0 = fsize // 2
    f = (np.arange(fsize) - k0) * delta

    rng = np.random.default_rng(seed)
    z_right = rng.standard_normal(fsize - 1 - k0)
    z_left = rng.standard_normal(k0)
    w = np.zeros(fsize)
    step = math.sqrt(delta)
    w[k0 + 1 :] = np.cumsum(z_right) * step
    w[:k0] = (-np.cumsum(z_left) * step)[::-1]

    x_fine = sigma * w - 4.0 * a * f**3
    grid = (np.arange(m) - nh) * h
    return LimitPath(
        c=float(c),
        h=float(h),
        a=float(a),
        sigma=float(sigma),
        seed=int(seed),
        grid=grid,
        X_fine=x_fine,
        pad=pad,
    )


def path_targets(path: LimitPath) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell slope targets and weights for the score objective.

    Cell j is [t_j - h/2, t_j + h/2]; its target is the increment slope
    (X(t_j + h/2) - X(t_j - h/2)) / h with weight h, which discretizes
    0.5*Int r^2 - Int r dX up to a term not depending on r.
    """
    xh = path.X_half
    targets = (xh[1:] - xh[:-1]) / path.h
    weights = np.full(path.m, path.h)
    return targets, weights


def invelope_unconstrained(path: LimitPath) -> PiecewiseLinearConcave:
    """Concave score fit of the path (no pin)."""
    targets, weights = path_targets(path)
    sol = project(ConeProblem(path.grid, weights, targets))
    return _repaired_concave(path.grid, sol.fitted)


def invelope_constrained(
    path: LimitPath, warm_from: PiecewiseLinearConcave | None = None
) -> PiecewiseLinearConcave:
    """Concave score fit pinned to r(0) = 0.

    warm_from seeds the active set with another fit's knots (typically the
    unconstrained fit on the same path); the minimizer is unchanged.
    """
    targets, weights = path_targets(path)
    prob = ConeProblem(path.grid, weights, targets, constraint=path.center)
    warm = None
    if warm_from is not None:
        warm = active_knots(warm_from)[1:-1]
    sol = project(prob, warm_start=warm)
    values = sol.fitted.copy()
    values[path.center] = 0.0
    return _repaired_concave(path.grid, values, anchor=path.center)


def dee_draw(
    path: LimitPath,
    b: float = 3.0,
    fits: tuple[PiecewiseLinearConcave, PiecewiseLinearConcave] | None = None,
) -> float:
    """The localized pivot D = sum over cells in [-b, b] of h*(rhat^2 - rhat0^2).

    The full-range sum equals 2*(phi(rhat0) - phi(rhat)) >= 0 by the
    projection identity, so a full-range value below -1e-8 signals a
    solver failure and raises.  Windowing drops whatever tail the fits
    still disagree on beyond [-b, b]; at the default settings most paths
    lose nothing and the mean loss is about 0.5% of the mean draw, but a
    small fraction of paths shed enough positive tail mass to send the
    windowed sum slightly negative, so it is floored at 0.
    """
    if not 0 < b <= path.c:
        raise ValueError("b must be in (0, c]")
    if fits is None:
        r = invelope_unconstrained(path)
        r0 = invelope_constrained(path, warm_from=r)
    else:
        r, r0 = fits
    full = path.h * math.fsum((r.values - r0.values) * (r.values + r0.values))
    if full < -1e-8:
        raise RuntimeError(f"pivot full-range sum {full} below -1e-8")
    mask = np.abs(path.grid) <= b + 1e-12
    rv = r.values[mask]
    r0v = r0.values[mask]
    raw = path.h * math.fsum((rv - r0v) * (rv + r0v))
    return max(raw, 0.0)


def _one_draw(c: float, h: float, b: float, seed: int) -> float:
    return dee_draw(simulate_path(c, h, 1.0, 1.0, seed=seed), b)


@dataclass(frozen=True)
class CriticalTable:
    """Sorted Monte Carlo draws of D with the settings that produced them.

    quantile(p) is the right-continuous inverse ECDF: draws[ceil(p*M)-1],
    with quantile(0) = min and quantile(1) = max.  ecdf(x) is the fraction
    of draws <= x.
    """

    draws: np.ndarray
    M: int
    c: float
    h: float
    b: float
    seed: int
    version: str = __version__

    def __post_init__(self):
        draws = np.asarray(self.draws, dtype=float)
        if draws.ndim != 1 or draws.size == 0:
            raise ValueError("draws must be a nonempty 1-D array")
        if draws.size != self.M:
            raise ValueError("M does not match the number of draws")
        if not np.all(np.isfinite(draws)):
            raise ValueError("draws must be finite")
        if np.min(draws) < -1e-8:
            raise ValueError("negative draw below -1e-8; corrupt table")
        draws = np.sort(np.clip(draws, 0.0, None))
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)

    def quantile(self, p: float) -> float:
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        k = math.ceil(p * self.M)
        return float(self.draws[max(k, 1) - 1])

    def ecdf(self, x: float) -> float:
        return float(np.searchsorted(self.draws, x, side="right")) / self.M

    def to_csv(self, path) -> None:
        """Write rows (k/M, k-th smallest draw) plus a p=0 row, and a JSON
        metadata sidecar at the same path with suffix .json."""
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["p", "quantile"])
            writer.writerow(["0", repr(float(self.draws[0]))])
            for k in range(1, self.M + 1):
                writer.writerow([repr(k / self.M), repr(float(self.draws[k - 1]))])
        meta = {
            "M": self.M,
            "c": self.c,
            "h": self.h,
            "b": self.b,
            "seed": self.seed,
            "version": self.version,
        }
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def from_csv(cls, path) -> "CriticalTable":
        path = Path(path)
        sidecar = path.with_suffix(".json")
        if not sidecar.exists():
            raise ValueError(f"metadata sidecar {sidecar} not found")
        meta = json.loads(sidecar.read_text())
        draws = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] != ["p", "quantile"]:
                raise ValueError("expected header p,quantile")
            for row in reader:
                if float(row[0]) > 0.0:
                    draws.append(float(row[1]))
        return cls(
            draws=np.asarray(draws),
            M=int(meta["M"]),
            c=float(meta["c"]),
            h=float(meta["h"]),
            b=float(meta["b"]),
            seed=int(meta["seed"]),
            version=str(meta.get("version", "unknown")),
        )


def critical_table(
    M: int,
    c: float = 4.0,
    h: float = 0.005,
    b: float = 3.0,
    seed: int = 0,
    n_jobs: int = 1,
) -> CriticalTable:
    """Monte Carlo table of M draws of D at the canonical a = sigma = 1.

    Replication k gets its own generator seeded from (seed, k), so the
    draws are independent of n_jobs and reproducible draw-by-draw.
    """
    if M < 1:
        raise ValueError("M must be positive")
    seeds = [
        int(np.random.SeedSequence([int(seed), k]).generate_state(1, np.uint64)[0])
        for k in range(M)
    ]
    if n_jobs == 1:
        draws = [_one_draw(c, h, b, s) for s in seeds]
    else:
        draws = Parallel(n_jobs=n_jobs)(delayed(_one_draw)(c, h, b, s) for s in seeds)
    return CriticalTable(
        draws=np.asarray(draws), M=M, c=float(c), h=float(h), b=float(b), seed=int(seed)
    )


@dataclass(frozen=True)
class InvelopeCheckReport:
    """Quadrature audit of a fit against the envelope characterization.

    cond2 is the largest positive excursion of H - Y on the window (it
    should be <= 0 up to discretization), cond3 the largest |H - Y| over
    the knots in the window (H should touch Y exactly there; this bounds
    the Stieltjes integral of H - Y against the slope-drop measure per
    unit of total drop), and cond1 the mismatch of the two branch values
    at 0 (constrained mode only; identically 0 for unconstrained).  All
    shrink linearly with h for exact fits.  Constrained mode additionally
    reports pin_gap = |fit(0)|, held to a strict bar independent of h
    because the pin is exact by construction, not discretized.
    """

    mode: str
    passed: bool
    degenerate: bool
    tol: float
    b: float
    cond1: float
    cond2: float
    cond3: float
    tau_L: float | None = None
    tau_R: float | None = None
    cond2_left: float | None = None
    cond2_right: float | None = None
    cond3_left: float | None = None
    cond3_right: float | None = None
    pin_gap: float | None = None


def _cumtrapz(y: np.ndarray, delta: float) -> np.ndarray:
    out = np.empty(y.size)
    out[0] = 0.0
    np.cumsum((y[:-1] + y[1:]) * (delta / 2.0), out=out[1:])
    return out


def _double_primitive(r: np.ndarray, f_prim: np.ndarray, delta: float) -> np.ndarray:
    # Exact for piecewise-linear r with kinks on the lattice: the trapezoid
    # term is corrected by the quadratic defect delta^2 * slope / 12.
    incr = (f_prim[:-1] + f_prim[1:]) * (delta / 2.0) - (delta**2 / 12.0) * (
        r[1:] - r[:-1]
    )
    out = np.empty(r.size)
    out[0] = 0.0
    np.cumsum(incr, out=out[1:])
    return out


def _interior_knots(fit: PiecewiseLinearConcave) -> np.ndarray:
    idx = active_knots(
        fit, tol=1e-6 * max(1.0, float(np.max(np.abs(fit.values))))
    )
    return fit.knots[idx[(idx > 0) & (idx < fit.knots.size - 1)]]


def invelope_check(
    path: LimitPath,
    fit: PiecewiseLinearConcave,
    mode: str = "constrained",
    b: float | None = None,
    tol: float | None = None,
) -> InvelopeCheckReport:
    """Audit an invelope fit against its integral characterization.

    H is the double primitive of the fit and Y the double primitive of the
    path, both computed by independent lattice quadrature (trapezoid for Y,
    exact piecewise-quadratic for H), never from the solver's internals.

    Constrained mode anchors the right branch at tau_R (smallest
    nonnegative knot) and at c, the left branch at tau_L and -c, and
    requires H - Y <= 0 on the window, matching side values at 0, and a
    vanishing knot integral.  Unconstrained mode spends the affine freedom
    of the double primitive on matching Y at both endpoints (one-sided
    anchoring would leak the O(sqrt(h)) boundary increments of the path
    into every condition) and requires H - Y <= 0 with a vanishing knot
    integral; its cond1 is identically 0.

    The default tolerance scales like h (the quadrature error of Y against
    Brownian paths), so halving h roughly halves both the slack and the
    bar it is judged against.
    """
    if mode not in ("constrained", "unconstrained"):
        raise ValueError("mode must be 'constrained' or 'unconstrained'")
    c, h = path.c, path.h
    delta = h / 2.0
    if b is None:
        b = min(3.0, 0.75 * c)
    if not 0 < b <= c:
        raise ValueError("b must be in (0, c]")
    if tol is None:
        tol = max(1e-8, 1.5 * path.sigma * h * math.sqrt(c) + 3.0 * path.a * h * h * c * c)

    i0 = path.pad
    n = 2 * (path.m - 1) + 1
    xs = path.X_fine[i0 : i0 + n]
    ts = (np.arange(n) - n // 2) * delta
    rs = np.interp(ts, fit.knots, fit.values)

    f_prim = _cumtrapz(rs, delta)
    g_prim = _double_primitive(rs, f_prim, delta)
    y_prim = _cumtrapz(xs, delta)
    knot_t = _interior_knots(fit)

    def at(t):
        return int(round((t - ts[0]) / delta))

    def knot_gap(d, sel):
        gaps = [abs(d[at(s)]) for s in knot_t[sel]]
        return max(gaps) if gaps else 0.0

    if mode == "unconstrained":
        d0 = g_prim - y_prim
        d = d0 - (d0[-1] / (2.0 * c)) * (ts - ts[0])
        cond1 = 0.0
        window = np.abs(ts) <= b + 1e-12
        cond2 = float(np.max(d[window]))
        cond3 = knot_gap(d, np.abs(knot_t) <= b + 1e-12)
        passed = cond1 <= tol and cond2 <= tol and cond3 <= tol
        return InvelopeCheckReport(
            mode=mode, passed=passed, degenerate=False, tol=tol, b=b,
            cond1=cond1, cond2=cond2, cond3=cond3,
        )

    nonneg = knot_t[knot_t >= -1e-12]
    nonpos = knot_t[knot_t <= 1e-12]
    if nonneg.size == 0 or nonpos.size == 0:
        return InvelopeCheckReport(
            mode=mode, passed=False, degenerate=True, tol=tol, b=b,
            cond1=math.inf, cond2=math.inf, cond3=math.inf,
        )
    tau_r = float(np.min(nonneg))
    tau_l = float(np.max(nonpos))
    ir, il, ic = at(tau_r), at(tau_l), at(0.0)

    # Right branch: anchored H(tau_R) = Y(tau_R) and H(c) = Y(c).
    h0 = g_prim - g_prim[ir] - f_prim[ir] * (ts - tau_r)
    y_r = y_prim - y_prim[ir] - xs[ir] * (ts - tau_r)
    d0 = h0 - y_r
    b_r = -d0[-1] / (c - tau_r)
    d_right = d0 + b_r * (ts - tau_r)

    # Left branch: integrals run from t up to tau_L, anchored at -c.
    e0 = (f_prim[il] - xs[il]) * (tau_l - ts) - (g_prim[il] - g_prim) + (
        y_prim[il] - y_prim
    )
    b_l = -e0[0] / (tau_l + c)
    d_left = e0 + b_l * (tau_l - ts)

    cond1 = abs(d_right[ic] - d_left[ic])
    win_r = (ts >= -1e-12) & (ts <= b + 1e-12)
    win_l = (ts <= 1e-12) & (ts >= -b - 1e-12)
    cond2_right = float(np.max(d_right[win_r]))
    cond2_left = float(np.max(d_left[win_l]))
    cond3_right = knot_gap(d_right, (knot_t >= -1e-12) & (knot_t <= b + 1e-12))
    cond3_left = knot_gap(d_left, (knot_t <= 1e-12) & (knot_t >= -b - 1e-12))
    cond2 = max(cond2_right, cond2_left)
    cond3 = max(cond3_right, cond3_left)
    pin_gap = abs(float(np.interp(0.0, fit.knots, fit.values)))
    pin_ok = pin_gap <= 1e-8 * max(1.0, float(np.max(np.abs(fit.values))))
    passed = cond1 <= tol and cond2 <= tol and cond3 <= tol and pin_ok
    return InvelopeCheckReport(
        mode=mode, passed=passed, degenerate=False, tol=tol, b=b,
        cond1=cond1, cond2=cond2, cond3=cond3,
        tau_L=tau_l, tau_R=tau_r,
        cond2_left=cond2_left, cond2_right=cond2_right,
        cond3_left=cond3_left, cond3_right=cond3_right,
        pin_gap=pin_gap,
    )


def _gammas(a: float, sigma: float) -> tuple[float, float]:
    if not (a > 0 and sigma > 0):
        raise ValueError("a and sigma must be positive")
    g1 = (a / sigma) ** 0.6 / sigma
    g2 = (sigma / a) ** 0.4
    if abs(g1 * g2**1.5 * sigma - 1.0) > 1e-9:
        raise AssertionError("scaling identity gamma1*gamma2^(3/2) = 1/sigma broken")
    return g1, g2


def rescale_canonical(
    fit: PiecewiseLinearConcave, a: float, sigma: float
) -> PiecewiseLinearConcave:
    """Map a fit for drift a and noise sigma to canonical coordinates.

    r(t) over t becomes gamma1*gamma2^2 * r(gamma2 * u) over u, with
    gamma1 = (a/sigma)^(3/5)/sigma and gamma2 = (sigma/a)^(2/5); at
    a = sigma = 1 this is the identity.
    """
    g1, g2 = _gammas(a, sigma)
    return _repaired_concave(fit.knots / g2, (g1 * g2 * g2) * fit.values)


def transform_path(path: LimitPath, a: float, sigma: float) -> LimitPath:
    """Reuse the path's Brownian increments for different drift and noise.

    The underlying W is recovered on the fine lattice and rescaled by
    Brownian scaling onto the lattice stretched by lambda = gamma2(a,
    sigma)/gamma2(a0, sigma0), giving a path of sigma*W'(t) - 4*a*t^3
    whose invelopes commute with rescale_canonical exactly.
    """
    if path.sigma <= 0 or path.a <= 0:
        raise ValueError("source path must have positive a and sigma")
    lam = _gammas(a, sigma)[1] / _gammas(path.a, path.sigma)[1]
    f_old = path.fine_t()
    w = (path.X_fine + 4.0 * path.a * f_old**3) / path.sigma
    f_new = lam * f_old
    x_new = sigma * math.sqrt(lam) * w - 4.0 * a * f_new**3
    return LimitPath(
        c=lam * path.c,
        h=lam * path.h,
        a=float(a),
        sigma=float(sigma),
        seed=path.seed,
        grid=lam * path.grid,
        X_fine=x_new,
        pad=path.pad,
    )


def coarsen_path(path: LimitPath) -> LimitPath:
    """Restrict the path to the lattice with doubled step 2h.

    Only freshly simulated paths carry enough margin (pad = 4); the result
    has pad = 2 and cannot be coarsened again.  c/(2h) must be an integer.
    """
    if path.pad != 4:
        raise ValueError("path lacks margin to coarsen; simulate at finer h")
    nh = round(path.c / path.h)
    if nh % 2 != 0:
        raise ValueError("c/(2h) must be an integer to coarsen")
    return LimitPath(
        c=path.c,
        h=2.0 * path.h,
        a=path.a,
        sigma=path.sigma,
        seed=path.seed,
        grid=path.grid[::2],
        X_fine=path.X_fine[::2],
        pad=2,
    )
