"""Tests for the Monte Carlo study harness."""

import csv

import numpy as np
import pytest

from concreg.limit import CriticalTable
from concreg.studies import (
    EcdfStudy,
    LevelEstimate,
    Scenario,
    cdf_sup_distance,
    d_constant,
    ecdf_study,
    ecdf_sup_distance,
    generate_design,
    level_study,
    replicate_statistics,
    write_ecdf_csv,
    write_level_csv,
)


def make_table(draws):
    draws = np.sort(np.asarray(draws, dtype=float))
    return CriticalTable(
        draws=draws, M=draws.size, c=1.0, h=0.5, b=0.75, seed=0, version="test"
    )


class TestDConstant:
    def test_reference_values(self):
        assert d_constant(2.0, 1.0) == pytest.approx(1.64, abs=0.005)
        assert d_constant(0.878, 1.0) == pytest.approx(1.94, abs=0.005)
        assert d_constant(7.39, 1.0) == pytest.approx(1.27, abs=0.005)

    def test_formula(self):
        assert d_constant(3.0, 2.0) == pytest.approx((24.0 / (16.0 * 3.0)) ** 0.2)

    def test_validation(self):
        with pytest.raises(ValueError, match="positive"):
            d_constant(0.0, 1.0)
        with pytest.raises(ValueError, match="positive"):
            d_constant(2.0, -1.0)


class TestScenario:
    def test_benchmark_defaults(self):
        sq = Scenario("neg_quadratic", n=10)
        assert sq.x0 == 0.0 and sq.interval == (-1.0, 1.0)
        assert sq.r0_x0 == 0.0 and sq.curvature_abs == 2.0
        sc = Scenario("cosine", n=10)
        assert sc.x0 == -0.5
        assert sc.r0_x0 == pytest.approx(np.cos(-0.5))
        assert sc.curvature_abs == pytest.approx(np.cos(0.5))
        se = Scenario("neg_exp", n=10)
        assert se.interval == (1.0, 3.0) and se.x0 == 2.0
        assert se.r0_x0 == pytest.approx(-np.exp(2.0))
        assert se.curvature_abs == pytest.approx(np.exp(2.0))

    def test_validation(self):
        with pytest.raises(ValueError, match="unknown benchmark"):
            Scenario("cubic", n=10)
        with pytest.raises(ValueError, match="design"):
            Scenario("cosine", n=10, design="latin")
        with pytest.raises(ValueError, match="inside"):
            Scenario("neg_exp", n=10, x0=0.5)
        with pytest.raises(ValueError, match="at least 2"):
            Scenario("cosine", n=1)
        with pytest.raises(ValueError, match="nonnegative"):
            Scenario("cosine", n=10, sigma=-1.0)
        with pytest.raises(ValueError, match="M"):
            Scenario("cosine", n=10, M=0)

    def test_custom_x0(self):
        s = Scenario("neg_quadratic", n=10, x0=0.3)
        assert s.r0_x0 == pytest.approx(-0.09)


class TestGenerateDesign:
    def test_fixed_three_points(self):
        d = generate_design(Scenario("neg_quadratic", n=3, sigma=0.0), seed=0)
        assert np.array_equal(d.x, [-1.0, 0.0, 1.0])
        assert np.allclose(d.y, [-1.0, 0.0, -1.0])

    def test_fixed_equispaced(self):
        d = generate_design(Scenario("neg_exp", n=50, sigma=0.0), seed=0)
        gaps = np.diff(d.x)
        assert np.max(gaps) / np.min(gaps) == pytest.approx(1.0, abs=1e-12)
        assert d.x[0] == 1.0 and d.x[-1] == 3.0

    def test_fixed_design_cdf_close_to_uniform(self):
        s = Scenario("cosine", n=40, sigma=0.0)
        d = generate_design(s, seed=0)
        lo, hi = s.interval
        u = (d.x - lo) / (hi - lo)
        n = s.n
        ranks = np.arange(1, n + 1)
        sup = np.max(np.maximum(np.abs(ranks / n - u), np.abs((ranks - 1) / n - u)))
        assert sup <= 1.0 / n + 1e-12

    def test_seeded_reproducibility(self):
        s = Scenario("cosine", n=25, design="random")
        a = generate_design(s, seed=7)
        b = generate_design(s, seed=7)
        c = generate_design(s, seed=8)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
        assert not np.array_equal(a.y, c.y)

    def test_random_design_properties(self):
        s = Scenario("neg_exp", n=30, design="random")
        d = generate_design(s, seed=3)
        assert np.all(np.diff(d.x) > 0)
        assert d.x[0] >= 1.0 and d.x[-1] <= 3.0
        fixed = generate_design(Scenario("neg_exp", n=30), seed=3)
        assert not np.array_equal(d.x, fixed.x)

    def test_zero_noise_hits_r0(self):
        s = Scenario("cosine", n=12, sigma=0.0)
        d = generate_design(s, seed=0)
        assert np.array_equal(d.y, np.cos(d.x))


class TestReplicateStatistics:
    def test_deterministic_and_njobs_invariant(self):
        s = Scenario("neg_quadratic", n=15, M=8)
        a1, b1 = replicate_statistics(s, seed=11)
        a2, b2 = replicate_statistics(s, seed=11)
        assert np.array_equal(a1, a2) and np.array_equal(b1, b2)
        a3, b3 = replicate_statistics(s, seed=11, n_jobs=2)
        assert np.array_equal(a1, a3) and np.array_equal(b1, b3)

    def test_shapes_and_signs(self):
        s = Scenario("cosine", n=20, M=12)
        stats_, s2 = replicate_statistics(s, seed=1)
        assert stats_.shape == (12,) and s2.shape == (12,)
        assert np.all(stats_ >= -1e-10)
        assert np.all(s2 > 0)


class TestLevelStudy:
    def test_rates_and_se(self):
        s = Scenario("neg_quadratic", n=25, M=40)
        table = make_table(np.linspace(0.1, 4.0, 50))
        ests = level_study(s, [0.05, 0.5], table, seed=5)
        assert [e.alpha for e in ests] == [0.05, 0.5]
        for e in ests:
            assert 0.0 <= e.rate <= 1.0
            assert e.se == pytest.approx(np.sqrt(e.rate * (1 - e.rate) / 40))
            assert e.M == 40
        assert ests[0].rate <= ests[1].rate

    def test_extreme_tables(self):
        s = Scenario("cosine", n=15, M=20)
        never = level_study(s, [0.1], make_table(np.full(10, 1e9)), seed=2)[0]
        assert never.rate == 0.0
        always = level_study(s, [0.1], make_table(np.zeros(10)), seed=2)[0]
        assert always.rate == 1.0

    def test_plugin_sigma_variant(self):
        s = Scenario("neg_exp", n=20, M=15)
        table = make_table(np.linspace(0.1, 4.0, 50))
        ests = level_study(s, [0.1], table, seed=3, known_sigma=False)
        assert 0.0 <= ests[0].rate <= 1.0

    def test_alpha_validation(self):
        s = Scenario("cosine", n=10, M=5)
        with pytest.raises(ValueError, match="alpha"):
            level_study(s, [0.0], make_table(np.ones(4)), seed=0)

    def test_level_csv(self, tmp_path):
        s = Scenario("neg_quadratic", n=12, M=10, design="random")
        table = make_table(np.linspace(0.1, 4.0, 20))
        ests = level_study(s, [0.05, 0.10], table, seed=4)
        out = tmp_path / "levels.csv"
        write_level_csv(s, ests, out)
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["scenario", "n", "design", "alpha", "rate", "se"]
        assert len(rows) == 3
        assert rows[1][0] == "neg_quadratic" and rows[1][2] == "random"
        assert float(rows[1][3]) == 0.05
        assert float(rows[1][4]) == ests[0].rate


class TestEcdfStudy:
    def test_curves_and_normalization(self):
        table = make_table(np.linspace(0.05, 5.0, 30))
        scens = [
            Scenario("neg_quadratic", n=15, M=10, sigma=2.0),
            Scenario("cosine", n=15, M=10),
        ]
        study = ecdf_study(scens, table, seed=6)
        assert set(study.curves) == {"neg_quadratic", "cosine", "limit"}
        raw, _ = replicate_statistics(scens[0], seed=6)
        assert np.array_equal(study.curves["neg_quadratic"], np.sort(raw / 4.0))
        for v in study.curves.values():
            assert np.all(np.diff(v) >= 0)
        assert np.array_equal(study.curves["limit"], table.draws)

    def test_duplicate_names_rejected(self):
        table = make_table(np.ones(4))
        scens = [Scenario("cosine", n=10, M=2), Scenario("cosine", n=12, M=2)]
        with pytest.raises(ValueError, match="duplicate"):
            ecdf_study(scens, table, seed=0)

    def test_sup_distances(self):
        assert ecdf_sup_distance([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
        assert ecdf_sup_distance([1.0, 2.0], [1.5]) == pytest.approx(0.5)
        study = EcdfStudy(curves={"a": np.array([1.0, 2.0]), "b": np.array([1.5])})
        assert study.sup_distance("a", "b") == pytest.approx(0.5)
        d = cdf_sup_distance(np.array([0.5, 1.0, 2.0]), lambda x: np.clip(x / 4, 0, 1))
        assert 0.0 <= d <= 1.0

    def test_ecdf_csv(self, tmp_path):
        table = make_table(np.linspace(0.1, 2.0, 5))
        study = ecdf_study([Scenario("neg_exp", n=12, M=6)], table, seed=9)
        out = tmp_path / "ecdf.csv"
        write_ecdf_csv(study, out)
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["scenario", "value", "ecdf"]
        labels = {r[0] for r in rows[1:]}
        assert labels == {"neg_exp", "limit", "chisq1"}
        # 6 scenario rows + 5 limit rows + 5 chisq rows
        assert len(rows) == 1 + 6 + 5 + 5
        neg_rows = [r for r in rows[1:] if r[0] == "neg_exp"]
        assert float(neg_rows[-1][2]) == 1.0
        write_ecdf_csv(study, tmp_path / "ecdf2.csv")
        assert out.read_bytes() == (tmp_path / "ecdf2.csv").read_bytes()
