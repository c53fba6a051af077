"""Monte Carlo studies: test levels, ECDF universality curves, designs.

Three benchmark regression functions are built in, each with the point
x0 and noise level used in the reference experiments:

    neg_quadratic   r0(x) = -x^2      on [-1, 1], x0 = 0
    cosine          r0(x) = cos(x)    on [-1, 1], x0 = -1/2
    neg_exp         r0(x) = -exp(x)   on [1, 3],  x0 = 2

Replications are seeded independently through SeedSequence(seed, k), so
draw k is identical regardless of worker count.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy import stats as _stats

from .data import Design
from .inference import lr_statistic
from .limit import CriticalTable

_BENCHMARKS = {
    "neg_quadratic": {
        "interval": (-1.0, 1.0),
        "r0": lambda x: -(x**2),
        "second_deriv_abs": lambda x: 2.0,
        "x0": 0.0,
    },
    "cosine": {
        "interval": (-1.0, 1.0),
        "r0": np.cos,
        "second_deriv_abs": lambda x: abs(math.cos(x)),
        "x0": -0.5,
    },
    "neg_exp": {
        "interval": (1.0, 3.0),
        "r0": lambda x: -np.exp(x),
        "second_deriv_abs": lambda x: math.exp(x),
        "x0": 2.0,
    },
}


def d_constant(r0_second_deriv_abs: float, sigma: float) -> float:
    """The scale constant (24 / (sigma^4 * |r0''(x0)|))^(1/5)."""
    if r0_second_deriv_abs <= 0 or sigma <= 0:
        raise ValueError("curvature and sigma must be positive")
    return (24.0 / (sigma**4 * r0_second_deriv_abs)) ** 0.2


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration.

    x0 defaults to the benchmark's reference point.  design is "fixed"
    (n equispaced points including both interval endpoints) or "random"
    (n sorted uniform draws; not covered by the fixed-design theory).
    """

    name: str
    n: int
    design: str = "fixed"
    sigma: float = 1.0
    M: int = 1000
    x0: float | None = None

    def __post_init__(self):
        if self.name not in _BENCHMARKS:
            raise ValueError(
                f"unknown benchmark {self.name!r}; choose from {sorted(_BENCHMARKS)}"
            )
        if self.design not in ("fixed", "random"):
            raise ValueError("design must be 'fixed' or 'random'")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.x0 is None:
            object.__setattr__(self, "x0", _BENCHMARKS[self.name]["x0"])
        lo, hi = self.interval
        if not lo < self.x0 < hi:
            raise ValueError(f"x0 must lie strictly inside [{lo}, {hi}]")

    @property
    def interval(self) -> tuple[float, float]:
        return _BENCHMARKS[self.name]["interval"]

    def r0(self, x):
        return _BENCHMARKS[self.name]["r0"](np.asarray(x, dtype=float))

    @property
    def r0_x0(self) -> float:
        return float(self.r0(self.x0))

    @property
    def curvature_abs(self) -> float:
        return float(_BENCHMARKS[self.name]["second_deriv_abs"](self.x0))


@dataclass(frozen=True)
class LevelEstimate:
    alpha: float
    rate: float
    se: float
    M: int

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("rate must lie in [0, 1]")


def generate_design(scenario: Scenario, seed: int) -> Design:
    """A dataset from the scenario: abscissas plus Gaussian responses."""
    rng = np.random.default_rng(seed)
    lo, hi = scenario.interval
    if scenario.design == "fixed":
        x = np.linspace(lo, hi, scenario.n)
    else:
        x = np.sort(rng.uniform(lo, hi, size=scenario.n))
    y = scenario.r0(x) + scenario.sigma * rng.standard_normal(scenario.n)
    return Design(x, y)


def _rep_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1, np.uint64)[0])


def _one_rep(scenario: Scenario, rep_seed: int) -> tuple[float, float]:
    d = generate_design(scenario, rep_seed)
    res = lr_statistic(d, scenario.x0, scenario.r0_x0)
    return res.two_log_lambda, res.alse.sigma2_hat


def replicate_statistics(
    scenario: Scenario, seed: int, n_jobs: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """M null statistics and the matching plug-in variance estimates.

    Returns (statistics, sigma2_hats), each of shape (M,), in replication
    order; identical for every n_jobs.
    """
    seeds = [_rep_seed(seed, k) for k in range(scenario.M)]
    if n_jobs == 1:
        pairs = [_one_rep(scenario, s) for s in seeds]
    else:
        pairs = Parallel(n_jobs=n_jobs)(delayed(_one_rep)(scenario, s) for s in seeds)
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0], arr[:, 1]


def level_study(
    scenario: Scenario,
    alphas,
    table: CriticalTable,
    seed: int,
    n_jobs: int = 1,
    known_sigma: bool = True,
) -> list[LevelEstimate]:
    """Monte Carlo rejection rates of the level-alpha test under the null.

    The null value is r0(x0).  With known_sigma the pivot uses the
    scenario's true sigma^2 (the reproduction protocol); otherwise each
    replication plugs in its own variance estimate.
    """
    stats_, s2hats = replicate_statistics(scenario, seed, n_jobs=n_jobs)
    denom = scenario.sigma**2 if known_sigma else s2hats
    out = []
    for alpha in alphas:
        if not 0.0 < alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        rejects = stats_ > denom * table.quantile(1.0 - alpha)
        rate = float(np.mean(rejects))
        se = math.sqrt(rate * (1.0 - rate) / scenario.M)
        out.append(LevelEstimate(alpha=float(alpha), rate=rate, se=se, M=scenario.M))
    return out


def write_level_csv(scenario: Scenario, estimates, path) -> None:
    """Tidy rows: scenario, n, design, alpha, rate, se."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "n", "design", "alpha", "rate", "se"])
        for est in estimates:
            writer.writerow(
                [scenario.name, scenario.n, scenario.design,
                 repr(est.alpha), repr(est.rate), repr(est.se)]
            )


@dataclass(frozen=True)
class EcdfStudy:
    """Sorted pivot samples keyed by curve label.

    Scenario statistics are divided by sigma^2, so every curve is on the
    scale of the limit draws; the "limit" curve is the table itself.
    """

    curves: dict[str, np.ndarray] = field(default_factory=dict)

    def sup_distance(self, label_a: str, label_b: str) -> float:
        return ecdf_sup_distance(self.curves[label_a], self.curves[label_b])

    def sup_distance_chisq1(self, label: str) -> float:
        return cdf_sup_distance(self.curves[label], _stats.chi2(df=1).cdf)


def ecdf_study(
    scenarios, table: CriticalTable, seed: int, n_jobs: int = 1
) -> EcdfStudy:
    """Null-statistic ECDF curves for each scenario plus the limit draws."""
    curves: dict[str, np.ndarray] = {}
    for scenario in scenarios:
        if scenario.name in curves:
            raise ValueError(f"duplicate scenario name {scenario.name!r}")
        if scenario.sigma <= 0:
            raise ValueError("ecdf_study needs sigma > 0 to form the pivot")
        stats_, _ = replicate_statistics(scenario, seed, n_jobs=n_jobs)
        curves[scenario.name] = np.sort(stats_ / scenario.sigma**2)
    curves["limit"] = np.asarray(table.draws, dtype=float)
    return EcdfStudy(curves=curves)


def write_ecdf_csv(study: EcdfStudy, path) -> None:
    """Rows: scenario, value, ecdf, with a chisq1 reference curve appended.

    The chisq1 rows evaluate the chi-squared(1) CDF on the limit curve's
    values so all curves share a plotting range.
    """
    chi2 = _stats.chi2(df=1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "value", "ecdf"])
        for label in sorted(study.curves):
            draws = study.curves[label]
            m = draws.size
            for k, v in enumerate(draws, start=1):
                writer.writerow([label, repr(float(v)), repr(k / m)])
        ref = study.curves.get("limit")
        if ref is not None:
            for v in ref:
                writer.writerow(["chisq1", repr(float(v)), repr(float(chi2.cdf(v)))])


def ecdf_sup_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov sup distance between ECDFs."""
    return float(_stats.ks_2samp(a, b, method="asymp").statistic)


def cdf_sup_distance(sample, cdf) -> float:
    """One-sample Kolmogorov-Smirnov sup distance against a CDF."""
    return float(_stats.ks_1samp(sample, cdf, method="asymp").statistic)
