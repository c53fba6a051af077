import numpy as np
import pytest
from hypothesis import given, strategies as st

from concreg.data import (
    Design,
    PiecewiseLinearConcave,
    _repaired_concave,
    active_knots,
    augment,
    evaluate,
    read_design,
)


class TestDesign:
    def test_sorts_rows(self):
        d = Design([2.0, 0.0, 1.0], [20.0, 0.0, 10.0])
        assert np.array_equal(d.x, [0.0, 1.0, 2.0])
        assert np.array_equal(d.y, [0.0, 10.0, 20.0])

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            Design([0.0, 1.0, 1.0], [0.0, 1.0, 2.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Design([0.0, np.nan], [0.0, 1.0])
        with pytest.raises(ValueError):
            Design([0.0, 1.0], [np.inf, 1.0])

    def test_rejects_short_and_mismatched(self):
        with pytest.raises(ValueError):
            Design([0.0], [1.0])
        with pytest.raises(ValueError):
            Design([0.0, 1.0], [1.0])

    def test_immutable(self):
        d = Design([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            d.x[0] = 5.0


class TestAugment:
    def test_x0_on_design_point(self):
        # x0 coincides with a design point: no insertion, translate by y0
        d = Design([0.0, 1.0, 2.0], [5.0, 6.0, 5.0])
        a = augment(d, 1.0, 6.0)
        assert np.array_equal(a.z, [0.0, 1.0, 2.0])
        assert np.array_equal(a.W, [-1.0, 0.0, -1.0])
        assert a.k0 == 1
        assert np.array_equal(a.I, [0, 1, 2])
        assert a.n0 == 3 and not a.inserted

    def test_insertion(self):
        d = Design([0.0, 2.0], [0.0, 0.0])
        a = augment(d, 1.0, 0.0)
        assert np.array_equal(a.z, [0.0, 1.0, 2.0])
        assert np.array_equal(a.W, [0.0, 0.0, 0.0])
        assert a.k0 == 1
        assert np.array_equal(a.I, [0, 2])
        assert a.n0 == 3 and a.inserted
        assert a.W[a.k0] == 0.0

    def test_exterior_x0_warns(self):
        d = Design([0.0, 1.0, 2.0], [0.0, 0.0, 0.0])
        with pytest.warns(UserWarning, match="outside"):
            a = augment(d, 3.0, 0.0)
        assert np.array_equal(a.z, [0.0, 1.0, 2.0, 3.0])
        assert np.array_equal(a.W, [0.0, 0.0, 0.0, 0.0])
        assert a.k0 == 3
        assert np.array_equal(a.I, [0, 1, 2])
        assert a.exterior

    def test_nonfinite_rejected(self):
        d = Design([0.0, 1.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            augment(d, np.nan, 0.0)
        with pytest.raises(ValueError):
            augment(d, 0.5, np.inf)

    @given(
        y0_quarters=st.integers(-200, 200),
        x0_frac=st.floats(0.01, 0.99),
        on_point=st.booleans(),
    )
    def test_response_roundtrip(self, y0_quarters, x0_frac, on_point):
        # W restricted to I plus y0 recovers y exactly when the subtraction
        # is representable (dyadic y and y0); z on I equals x always
        y0 = y0_quarters / 4.0
        x = np.array([0.0, 0.5, 1.3, 2.0, 4.0])
        y = np.array([1.0, -2.0, 3.5, 0.25, -1.0])
        d = Design(x, y)
        x0 = 1.3 if on_point else float(x0_frac * 4.0)
        if not on_point and x0 in x:
            x0 += 1e-6
        a = augment(d, x0, y0)
        assert np.array_equal(a.W[a.I] + y0, y)
        assert np.array_equal(a.z[a.I], x)
        assert a.z[a.k0] == x0
        assert a.I.size == 5


class TestPiecewiseLinearConcave:
    def test_accepts_concave(self):
        f = PiecewiseLinearConcave([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        assert f.knots.size == 3

    def test_rejects_convex_kink(self):
        with pytest.raises(ValueError, match="not concave"):
            PiecewiseLinearConcave([0.0, 1.0, 2.0], [0.0, -1.0, 0.0])

    def test_tol_scales_with_values(self):
        # a 1e-3 violation must fail even when values are large
        with pytest.raises(ValueError):
            PiecewiseLinearConcave([0.0, 1.0, 2.0], [1e6, 1e6 - 1e-3, 1e6])
        # but float-roundoff-level wiggle passes
        PiecewiseLinearConcave([0.0, 1.0, 2.0], [1.0, 1.0 + 1e-13, 1.0])

    def test_rejects_unsorted_knots(self):
        with pytest.raises(ValueError):
            PiecewiseLinearConcave([1.0, 0.0], [0.0, 0.0])

    def test_evaluate_midpoint(self):
        f = PiecewiseLinearConcave([0.0, 1.0], [0.0, 2.0])
        assert evaluate(f, 0.5) == 1.0

    def test_evaluate_exact_at_knot(self):
        f = PiecewiseLinearConcave([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        assert evaluate(f, 1.0) == 1.0

    def test_evaluate_out_of_domain(self):
        f = PiecewiseLinearConcave([0.0, 1.0], [0.0, 2.0])
        with pytest.raises(ValueError):
            evaluate(f, 1.5)
        with pytest.raises(ValueError):
            evaluate(f, -0.1)

    def test_evaluate_vectorized(self):
        f = PiecewiseLinearConcave([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        out = evaluate(f, [0.0, 0.5, 1.5])
        assert np.allclose(out, [0.0, 0.5, 0.5])
        assert isinstance(evaluate(f, 0.25), float)
        assert f(0.25) == evaluate(f, 0.25)

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=8))
    def test_evaluate_matches_segment_formula(self, incs):
        # cumsum of decreasing increments is concave by construction
        knots = np.arange(len(incs) + 1, dtype=float)
        vals = np.concatenate([[0.0], np.cumsum(np.sort(incs)[::-1])])
        f = PiecewiseLinearConcave(knots, vals)
        t = 0.5 * (knots[0] + knots[1])
        expected = 0.5 * (vals[0] + vals[1])
        assert np.isclose(evaluate(f, t), expected, atol=1e-12)


class TestRepairedConcave:
    def test_clean_input_passes_through_unchanged(self):
        knots = np.array([0.0, 1.0, 2.0])
        vals = np.array([0.0, 1.0, 0.0])
        f = _repaired_concave(knots, vals)
        assert np.array_equal(f.values, vals)

    def test_hairline_kink_is_pooled(self):
        # a sub-picoscale value bump over a 1e-4 gap raises the local slope
        # by 5e-9, past the strict tolerance
        knots = np.array([0.0, 1.0, 1.0 + 1e-4, 2.0])
        vals = np.array([0.0, 0.4, 0.4 + 0.4e-4 + 5e-13, 0.3])
        with pytest.raises(ValueError, match="not concave"):
            PiecewiseLinearConcave(knots, vals)
        f = _repaired_concave(knots, vals, anchor=1)
        assert f.values[1] == vals[1]
        assert np.max(np.abs(f.values - vals)) < 1e-10
        slopes = np.diff(f.values) / np.diff(f.knots)
        assert np.all(np.diff(slopes) <= f.tol)

    def test_far_from_concave_raises(self):
        knots = np.array([0.0, 1.0, 2.0, 3.0])
        vals = np.array([0.0, -1.0, 1.0, 0.0])
        with pytest.raises(ValueError, match="far from concave"):
            _repaired_concave(knots, vals)

    def test_anchor_at_last_knot(self):
        knots = np.array([0.0, 1.0, 1.0 + 1e-4, 2.0])
        vals = np.array([0.0, 0.4, 0.4 + 0.4e-4 + 5e-13, 0.3])
        f = _repaired_concave(knots, vals, anchor=3)
        assert f.values[3] == vals[3]


class TestActiveKnots:
    def test_collinear_endpoints_only(self):
        f = PiecewiseLinearConcave([0.0, 1.0, 2.0, 3.0], [0.0, 1.0, 2.0, 3.0])
        assert np.array_equal(active_knots(f), [0, 3])

    def test_single_kink(self):
        f = PiecewiseLinearConcave([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
        assert np.array_equal(active_knots(f, tol=1e-8), [0, 1, 2])

    def test_two_point_function(self):
        f = PiecewiseLinearConcave([0.0, 1.0], [3.0, 7.0])
        assert np.array_equal(active_knots(f), [0, 1])


class TestReadDesign:
    def test_with_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n2,20\n0,0\n1,10\n")
        d = read_design(p)
        assert np.array_equal(d.x, [0.0, 1.0, 2.0])
        assert np.array_equal(d.y, [0.0, 10.0, 20.0])

    def test_without_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("0,1\n1,2\n")
        d = read_design(p)
        assert np.array_equal(d.y, [1.0, 2.0])

    def test_duplicate_x_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n1,1\n1,2\n")
        with pytest.raises(ValueError, match="duplicate"):
            read_design(p)

    def test_bad_row_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n1,1\n2,oops\n")
        with pytest.raises(ValueError, match="non-numeric"):
            read_design(p)

    def test_wrong_column_count(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,3\n4,5,6\n")
        with pytest.raises(ValueError, match="2 columns"):
            read_design(p)

    def test_too_few_rows(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x,y\n1,1\n")
        with pytest.raises(ValueError, match="fewer than 2"):
            read_design(p)
