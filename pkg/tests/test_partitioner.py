import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from turf.measures import EmpiricalMeasure
from turf.numerics import PiecewisePolynomial, Polynomial, Interval, l1_pp
from turf.partitioner import (MergeCache, atomic_cuts, comp, comp_bruteforce, cut_positions,
                              default_eps, dyadic_atoms, greedy_merge, stitch, stitch_atoms)
from turf.polyfit import fit_eq, node_spec


def step_sample(seed, n=1024):
    """Density 1.5 on [0, 1/2) and 0.5 on [1/2, 1)."""
    rng = np.random.default_rng(seed)
    left = rng.random(n) < 0.75
    return EmpiricalMeasure(np.where(left, rng.uniform(0, 0.5, n), rng.uniform(0.5, 1, n)))


def jump_distance(seed, eta):
    e = step_sample(seed)
    fp = greedy_merge(e, 2, 0, 2.0, eta)
    return int(np.min(np.abs(fp.cuts - np.searchsorted(e.xs, 0.5))))


def random_dyadic(rng, a, b, p=0.6):
    if b - a == 1 or rng.random() > p:
        return [a, b]
    mid = (a + b) // 2
    return random_dyadic(rng, a, mid, p)[:-1] + random_dyadic(rng, mid, b, p)


class TestCuts:
    def test_positions(self):
        xs = np.array([0.0, 1.0, 3.0, 4.0])
        np.testing.assert_allclose(cut_positions(xs, [0, 1, 2, 4]), [0.0, 0.5, 2.0, 4.0])

    def test_atomic_buckets(self):
        xs = np.arange(10.0)
        np.testing.assert_array_equal(atomic_cuts(xs, 3), [0, 3, 6, 9, 10])

    def test_ties_never_make_empty_intervals(self):
        xs = np.array([0.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0])
        cuts = atomic_cuts(xs, 1)
        assert np.all(np.diff(cut_positions(xs, cuts)) > 0)


class TestGreedyMerge:
    @given(st.integers(1, 6), st.integers(0, 3), st.floats(1.1, 4.0), st.integers(0, 10_000))
    def test_interval_budget_and_cover(self, t, d, beta, seed):
        rng = np.random.default_rng(seed)
        n = max(2 * math.ceil(beta * t) * (d + 1), int(rng.integers(20, 400)))
        e = EmpiricalMeasure(rng.normal(size=n))
        fp = greedy_merge(e, t, d, beta, 0.0)
        assert 1 <= len(fp) <= 2 * math.ceil(beta * t)
        assert fp.partition.edges[0] == e.xs[0] and fp.partition.edges[-1] == e.xs[-1]
        assert fp.fits.shape == (len(fp), d + 1) and fp.errors.shape == (len(fp),)

    def test_lattice_collapse(self):
        n = 512
        e = EmpiricalMeasure((np.arange(n) + 0.5) / n)
        fp = greedy_merge(e, 1, 0, 2.0, 0.0)
        assert len(fp) <= 4
        # end intervals stop at the extreme samples, half a spacing short of [0, 1]
        width = np.diff(fp.partition.edges)
        width[[0, -1]] += 0.5 / n
        np.testing.assert_allclose(fp.fits[:, 0] * np.diff(fp.partition.edges) / width, 1.0, rtol=1e-9)
        assert np.all(fp.errors < 4.0 / n)

    def test_saturated_budget_keeps_atoms(self, rng):
        e = EmpiricalMeasure(rng.random(30))
        fp = greedy_merge(e, 20, 1, 2.0, 0.0)
        np.testing.assert_array_equal(fp.cuts, atomic_cuts(e.xs, 2))

    def test_errors_floored(self, rng):
        e = EmpiricalMeasure(rng.random(300))
        assert np.all(greedy_merge(e, 1, 1, 2.0, 0.3).errors >= 0.3)

    def test_witness_property(self, rng):
        e = EmpiricalMeasure(rng.gamma(2.0, size=2000))
        budget = math.ceil(2.0 * 3)
        fp = greedy_merge(e, 3, 1, 2.0, 0.0, trace=True)
        assert fp.history
        for rnd in fp.history:
            err, kept = rnd["errors"], rnd["kept"]
            threshold = np.sort(err)[::-1][min(budget, err.size - 1) - 1]
            assert np.all(err[~kept] <= threshold)

    def test_leftmost_tie_break(self):
        e = EmpiricalMeasure((np.arange(64) + 0.5) / 64)
        fp = greedy_merge(e, 1, 0, 2.0, 1.0, trace=True)
        kept = fp.history[0]["kept"]
        assert kept[:2].all() and not kept[2:].any()

    def test_cache_does_not_change_result(self, rng):
        e = EmpiricalMeasure(rng.normal(size=800))
        cache = MergeCache()
        a = greedy_merge(e, 2, 1, 2.0, 0.01, cache=cache)
        b = greedy_merge(e, 2, 1, 2.0, 0.01)
        c = greedy_merge(e, 2, 1, 2.0, 0.01, cache=cache)
        np.testing.assert_array_equal(a.cuts, b.cuts)
        np.testing.assert_array_equal(a.errors, c.errors)
        assert cache.errors

    @pytest.mark.parametrize("kw", [dict(t=0), dict(beta=1.0), dict(n=1)])
    def test_rejects(self, kw):
        n = kw.pop("n", 50)
        args = dict(t=1, d=1, beta=2.0, eta=0.0) | kw
        with pytest.raises(ValueError):
            greedy_merge(EmpiricalMeasure(np.linspace(0, 1, n)), **args)

    def test_jump_localised(self):
        hits = sum(jump_distance(s, math.sqrt(1 / 1024)) <= 1024 // 32 for s in range(100))
        assert hits >= 90

    @pytest.mark.xfail(strict=True, reason="measured 12/100 within 2 buckets: pairwise merging loses sub-scale cuts before the jump is detectable")
    def test_jump_within_two_buckets(self):
        hits = sum(jump_distance(s, 0.0) <= 2 for s in range(100))
        assert hits >= 90


class TestComp:
    def block(self, rng, size=8, d=1):
        e = EmpiricalMeasure(np.sort(rng.normal(size=4 * size)))
        a = size * int(rng.integers(0, 4))
        lo, hi = cut_positions(e.xs, [a, a + size])
        return e, a, Interval(lo, hi, closed=(a + size >= e.n))

    def test_own_fit_gives_minus_gamma(self, rng):
        e, a, J = self.block(rng)
        fhat = fit_eq(e, J, node_spec(1))
        assert comp(fhat, e, [a, a + 8], 1, 0.3) == pytest.approx(-0.3, abs=1e-14)

    def test_zero_gamma_nonnegative(self, rng):
        e, a, J = self.block(rng)
        fhat = Polynomial(rng.standard_normal(2), J)
        assert comp(fhat, e, random_dyadic(rng, a, a + 8, 1.0), 1, 0.0) >= 0.0

    def test_two_leaves(self, rng):
        e, a, J = self.block(rng, size=2, d=0)
        fhat = Polynomial([0.7], J)
        g = 0.05
        whole = l1_pp(PiecewisePolynomial.from_pieces([fit_eq(e, J, node_spec(0))]),
                      PiecewisePolynomial.from_pieces([fhat])) - g
        pos = cut_positions(e.xs, [a, a + 1, a + 2])
        halves = sum(abs(e.mass(Interval(pos[i], pos[i + 1], closed=(i == 1 and J.closed))) - 0.7 * (pos[i + 1] - pos[i]))
                     for i in range(2)) - 2 * g / math.sqrt(2)
        assert comp(fhat, e, [a, a + 1, a + 2], 0, g) == pytest.approx(max(whole, halves), abs=1e-12)

    @pytest.mark.parametrize("seed", range(25))
    def test_matches_enumeration(self, seed):
        rng = np.random.default_rng(seed)
        size = int(2 ** rng.integers(1, 5))
        d = int(rng.integers(0, 3))
        e, a, J = self.block(rng, size=max(size, 2), d=d)
        cuts = random_dyadic(rng, a, a + size)
        fhat = Polynomial(rng.standard_normal(d + 1), J)
        gamma = float(rng.uniform(0, 0.1))
        # same maximum; the two sum identical l1 terms in a different order
        assert comp(fhat, e, cuts, d, gamma) == pytest.approx(comp_bruteforce(fhat, e, cuts, d, gamma), abs=1e-12)

    def test_non_dyadic_block(self, rng):
        e, a, J = self.block(rng)
        with pytest.raises(ValueError):
            comp(Polynomial([1.0], J), e, [a, a + 6], 0, 0.1)


class TestStitch:
    def test_zero_threshold_keeps_finest(self, rng):
        e = EmpiricalMeasure(rng.random(64))
        fp = stitch(e, 0, 0.0)
        assert len(fp) == 64
        np.testing.assert_allclose(fp.probs, 1 / 64)

    def test_huge_threshold_merges_everything(self, rng):
        e = EmpiricalMeasure(rng.normal(size=128))
        fp = stitch(e, 1, 1e9)
        assert len(fp) == 1 and fp.probs.tolist() == [1.0]

    @pytest.mark.parametrize("alpha", [0.0, 0.05, 0.5, 3.0])
    def test_probs_dyadic(self, alpha, rng):
        e = EmpiricalMeasure(rng.beta(0.8, 4, 256))
        fp = stitch(e, 1, alpha)
        assert fp.probs.sum() == pytest.approx(1.0)
        lg = np.log2(fp.probs)
        np.testing.assert_array_equal(lg, np.round(lg))
        np.testing.assert_allclose(np.diff(fp.cuts) / e.n, fp.probs)

    def test_coarse_beats_finest_on_uniform(self):
        U = PiecewisePolynomial([0.0, 1.0], [[1.0]])
        wins = 0
        for s in range(100):
            e = EmpiricalMeasure(np.random.default_rng(s).random(1024))
            coarse = stitch(e, 0, 0.5).as_piecewise()
            fine = stitch(e, 0, 0.0).as_piecewise()
            wins += l1_pp(coarse, U) < l1_pp(fine, U)
        assert wins >= 80

    @pytest.mark.parametrize("n", [6, 100, 4])
    def test_needs_power_of_two(self, n):
        with pytest.raises(ValueError):
            stitch(EmpiricalMeasure(np.linspace(0, 1, n)), 0, 1.0)

    def test_negative_alpha(self):
        with pytest.raises(ValueError):
            stitch(EmpiricalMeasure(np.linspace(0, 1, 16)), 0, -1.0)

    def test_default_eps(self):
        assert default_eps(256) == pytest.approx(math.sqrt(math.log(256 * 257) / 255))

    @given(st.integers(2, 3000), st.integers(0, 3))
    def test_dyadic_atoms(self, n, d):
        xs = np.sort(np.random.default_rng(n).random(n))
        cuts = dyadic_atoms(xs, d)
        m = cuts.size - 1
        assert m & (m - 1) == 0
        assert cuts[0] == 0 and cuts[-1] == n
        if m > 1:
            assert np.all(np.diff(cuts) >= d + 1)

    def test_atoms_match_plain_stitch(self, rng):
        e = EmpiricalMeasure(rng.random(64))
        a = stitch(e, 0, 0.5)
        b = stitch_atoms(e, np.arange(65), 0, 0.5)
        np.testing.assert_array_equal(a.cuts, b.cuts)
