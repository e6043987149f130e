import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from turf.geomsplit import (Partition, adjust_many, adjust_partition, adjust_single,
                            build_geom_partition, geom_ell, geom_levels, histogram, min_budget,
                            relative_edges)
from turf.measures import EmpiricalMeasure
from turf.numerics import Interval, PiecewisePolynomial, Polynomial

I = Interval(-1.0, 1.0, closed=True)


class TestConstruction:
    @pytest.mark.parametrize("d,k,count,levels", [(0, 22, 4, 1), (1, 44, 14, 3)])
    def test_hand_traced_counts(self, d, k, count, levels):
        gp = build_geom_partition(d, k, I)
        assert len(gp) == count
        assert gp.m == levels
        assert gp.ell == pytest.approx(k * (2 ** 0.25 - 1) / (4 * (d + 1)), rel=1e-12)

    @pytest.mark.parametrize("d", range(9))
    @pytest.mark.parametrize("mult", [1, 2, 5, 20])
    def test_count_within_budget(self, d, mult):
        k = min_budget(d) * mult
        assert len(build_geom_partition(d, k, I)) <= k

    @pytest.mark.parametrize("d,k", [(0, 22), (1, 44), (2, 200), (5, 900)])
    def test_mirror_symmetric(self, d, k):
        rel = relative_edges(d, k)
        np.testing.assert_allclose(rel, 1.0 - rel[::-1], atol=1e-15)
        assert rel[0] == 0.0 and rel[-1] == 1.0 and np.all(np.diff(rel) > 0)

    def test_widths_shrink_toward_ends(self):
        w = np.diff(relative_edges(1, 200))
        half = w[: w.size // 2]
        assert half[0] < half[-1]

    def test_edges_pinned_to_interval(self):
        J = Interval(3.0, 7.5)
        gp = build_geom_partition(2, 100, J)
        assert gp.partition.edges[0] == 3.0 and gp.partition.edges[-1] == 7.5
        assert gp.partition.root == J

    @pytest.mark.parametrize("d,k", [(0, 21), (1, 42), (9, 1000), (-1, 50)])
    def test_rejects_small_budget_or_bad_degree(self, d, k):
        with pytest.raises(ValueError):
            build_geom_partition(d, k, I)

    def test_zero_width(self):
        with pytest.raises(ValueError):
            build_geom_partition(0, 22, Interval(1.0, 1.0))

    def test_levels_formula(self):
        assert geom_levels(1, 44) == int(np.ceil(np.log2(geom_ell(1, 44) * 4)))


class TestHistogram:
    def test_linear_function(self):
        g = PiecewisePolynomial.from_pieces([Polynomial.from_monomial([0.0, 2.0], Interval(0.0, 1.0))])
        h = histogram(g, Partition([0.0, 0.5, 1.0]))
        np.testing.assert_allclose(h.coeffs[:, 0], [0.5, 1.5])

    def test_constant_fixed_point(self, rng):
        g = PiecewisePolynomial([0.0, 1.0], [[2.5]])
        edges = np.sort(np.r_[0.0, rng.uniform(0, 1, 5), 1.0])
        np.testing.assert_allclose(histogram(g, Partition(edges)).coeffs[:, 0], 2.5)

    def test_empirical(self):
        e = EmpiricalMeasure([0.25, 0.75])
        np.testing.assert_allclose(histogram(e, Partition([0.0, 0.5, 1.0])).coeffs[:, 0], [1.0, 1.0])

    def test_preserves_mass(self, rng):
        g = PiecewisePolynomial([-1.0, 1.0], rng.standard_normal((1, 4)))
        h = histogram(g, build_geom_partition(3, 100, I))
        assert h.mass() == pytest.approx(g.mass(), abs=1e-12)


class TestAdjust:
    def test_constant_shift(self):
        e = EmpiricalMeasure([0.1, 0.2, 0.3, 0.7])
        f = Polynomial([1.0], Interval(0.0, 1.0))
        out = adjust_partition(f, e, Partition([0.0, 0.5, 1.0], closed=False))
        np.testing.assert_allclose(out.coeffs[:, 0], [1.5, 0.5])

    def test_mass_matching_is_identity(self):
        e = EmpiricalMeasure([0.25, 0.75])
        f = Polynomial([1.0], Interval(0.0, 1.0))
        out = adjust_partition(f, e, Partition([0.0, 0.5, 1.0], closed=False))
        np.testing.assert_allclose(out.coeffs[:, 0], [1.0, 1.0])

    def test_empty_measure_zeroes_pieces(self):
        f = Polynomial([1.0], Interval(0.0, 1.0, closed=True))
        out = adjust_single(f, EmpiricalMeasure([]), 0, 22, Interval(0.0, 1.0, True))
        assert np.all(out.piece_masses() == 0.0)

    @given(st.integers(0, 4), st.integers(1, 60), st.integers(0, 10_000))
    def test_every_piece_matches_empirical_mass(self, d, n, seed):
        rng = np.random.default_rng(seed)
        xs = rng.beta(2, 5, n)
        e = EmpiricalMeasure(xs)
        J = Interval(0.0, 1.0, closed=True)
        f = Polynomial(rng.standard_normal(d + 1), J)
        k = min_budget(d) + int(rng.integers(0, 50))
        out = adjust_single(f, e, d, k, J)
        emp = e.masses(out.breakpoints, closed_last=True)
        np.testing.assert_allclose(out.piece_masses(), emp, atol=1e-12)

    def test_affine_invariance(self, rng):
        xs = rng.uniform(0, 1, 200)
        c = rng.standard_normal(3)
        a = adjust_many(EmpiricalMeasure(xs), 2, 80, [0.0], [1.0], [True], [c])
        b = adjust_many(EmpiricalMeasure(3.0 * xs - 5.0), 2, 80, [-5.0], [-2.0], [True], [c / 3.0])
        np.testing.assert_allclose(b.breakpoints, 3.0 * a.breakpoints - 5.0, atol=1e-12)
        np.testing.assert_allclose(b.coeffs, a.coeffs / 3.0, atol=1e-12)

    def test_keeps_shape_within_pieces(self, rng):
        e = EmpiricalMeasure(rng.uniform(0, 1, 100))
        c = np.array([0.0, 1.0, 2.0])
        out = adjust_many(e, 2, 80, [0.0], [1.0], [True], [c])
        x = np.linspace(0.1, 0.9, 50)
        f = Polynomial(c, Interval(0.0, 1.0))
        diff = out(x) - f(x)
        idx = np.searchsorted(out.breakpoints, x, side="right") - 1
        for i in np.unique(idx):
            assert np.ptp(diff[idx == i]) < 1e-10
