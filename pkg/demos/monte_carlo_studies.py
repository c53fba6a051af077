"""Rejection rates and ECDF overlays for the three benchmark regressions.

Small replication counts keep this quick; the acceptance suite runs the
same studies at full size.
"""

from importlib import resources

from scipy import stats

from concreg import CriticalTable, Scenario, ecdf_study, level_study

with resources.as_file(
    resources.files("concreg").joinpath("tables/dee_default.csv")
) as p:
    table = CriticalTable.from_csv(p)

# Test the true value at x0 over M datasets; the rejection rate should land
# near alpha when the critical values are right.
scen = Scenario("neg_quadratic", n=100, M=400, sigma=1.0)
print(f"scenario: {scen.name}, n={scen.n}, x0={scen.x0}, M={scen.M}")
for est in level_study(scen, alphas=(0.05, 0.10), table=table, seed=123,
                       n_jobs=2):
    print(f"  alpha={est.alpha:.2f}: rejection rate {est.rate:.3f} "
          f"(se {est.se:.3f})")

# Universality: the normalized statistic has one limit law regardless of
# the regression function.  Overlay the three benchmarks at n=500.
scens = [
    Scenario("neg_quadratic", n=500, M=300),
    Scenario("cosine", n=500, M=300),
    Scenario("neg_exp", n=500, M=300),
]
study = ecdf_study(scens, table=table, seed=456, n_jobs=2)
print("\nsup distance between benchmark ECDFs and the limit table:")
for name in ("neg_quadratic", "cosine", "neg_exp"):
    print(f"  {name:14s} {study.sup_distance(name, 'limit'):.4f}")

# chi-squared with 1 df is what a parametric analogue would suggest; the
# actual limit law sits visibly apart from it.
d = study.sup_distance_chisq1("limit")
print(f"\nsup distance, limit law vs chi2(1): {d:.4f}")
print(f"chi2(1) 95% quantile {stats.chi2(1).ppf(0.95):.3f} "
      f"vs table {table.quantile(0.95):.3f}")
