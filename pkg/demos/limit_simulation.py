"""Simulate the limit experiment behind the critical values.

One draw: a two-sided Brownian path with cubic drift, its concave score
fit with and without the pin at the origin, and the windowed squared
difference D between the two.  Quantiles of D over many draws are the
critical values used by lr_test.
"""

import numpy as np

from concreg import (
    critical_table,
    dee_draw,
    invelope_check,
    invelope_constrained,
    invelope_unconstrained,
    simulate_path,
)

# A single draw, at a coarser lattice than production so it runs fast.
path = simulate_path(c=3.0, h=0.01, a=1.0, sigma=1.0, seed=4)
print(f"path: [{path.grid[0]:.2f}, {path.grid[-1]:.2f}], "
      f"{path.m} cells of width {path.h}")

r = invelope_unconstrained(path)
r0 = invelope_constrained(path, warm_from=r)
print(f"unpinned fit value at 0: {r.values[path.center]:+.4f}")
print(f"pinned   fit value at 0: {r0.values[path.center]:+.4f}")

d = dee_draw(path, b=2.0, fits=(r, r0))
print(f"D = {d:.4f}")

# The fits can be certified against the continuous optimality conditions;
# the slacks shrink with the lattice spacing.
rep = invelope_check(path, r, mode="unconstrained", b=2.0)
rep0 = invelope_check(path, r0, mode="constrained", b=2.0)
print(f"unconstrained conditions passed: {rep.passed} "
      f"(worst slack {max(rep.cond1, rep.cond2, rep.cond3):.2e})")
print(f"constrained conditions passed: {rep0.passed} "
      f"(worst slack {max(rep0.cond1, rep0.cond2, rep0.cond3):.2e})")

# A small table from scratch.  The shipped one uses M=20000, c=4, h=0.005;
# this toy run shows the machinery and roughly where the quantiles sit.
table = critical_table(M=200, c=3.0, h=0.01, b=2.0, seed=99, n_jobs=2)
print(f"\ntoy table (M=200): median {table.quantile(0.5):.3f}, "
      f"q95 {table.quantile(0.95):.3f}")
print(f"draws are nonnegative: {bool(np.all(np.asarray(table.draws) >= 0))}")

# Drift a and noise sigma only rescale the picture; the draw distribution
# is the same after the rescaling, so one canonical table suffices.
