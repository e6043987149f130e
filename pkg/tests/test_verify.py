import csv
import io
import math

import numpy as np
import pytest

from turf.verify import (HIST_CONSTANT, Report, _ranges, check_beta_concentration,
                         check_hist_approximation, check_partition_count, check_poly_inequality,
                         concentration_bound, default_pairs, poly_inequality_bound, run_all)


class TestRanges:
    def test_linear(self):
        assert _ranges(np.array([[0.0, 1.0]]), 0.9)[0] == pytest.approx(1.8)

    def test_degenerate_window(self):
        assert _ranges(np.array([[0.0, 1.0]]), 0.0)[0] == 0.0

    def test_interior_extremum(self):
        # u^2 - u on [-1/2, 1/2]: max 3/4 at -1/2, min -1/4 at 1/2
        assert _ranges(np.array([[0.0, -1.0, 1.0]]), 0.5)[0] == pytest.approx(1.0)

    def test_against_dense_grid(self, rng):
        C = rng.standard_normal((20, 6))
        u = np.linspace(-0.7, 0.7, 20001)
        vals = np.polynomial.polynomial.polyval(u, C.T)
        np.testing.assert_allclose(_ranges(C, 0.7), np.ptp(vals, axis=1), rtol=1e-6)


class TestPolyInequality:
    def test_bound_value(self):
        assert poly_inequality_bound(1, 0.9) == pytest.approx(56 / math.sqrt(0.19))

    def test_constants_have_zero_range(self):
        row = check_poly_inequality(0, [0.5], 50).rows[0]
        assert row["observed"] == 0.0 and row["ok"]

    @pytest.mark.parametrize("d", [1, 4, 8])
    def test_no_violations(self, d):
        assert check_poly_inequality(d, [0.0, 0.5, 0.99], 200, rng=d).ok

    @pytest.mark.parametrize("kw", [dict(d=9, a_values=[0.5]), dict(d=1, a_values=[1.0])])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            check_poly_inequality(trials=5, **kw)


class TestHist:
    def test_small_budget_uses_uniform_partition(self):
        rows = check_hist_approximation(2, [32, 128], 10).rows
        assert [r["partition"] for r in rows] == ["uniform", "geometric"]
        assert rows[0]["pieces"] == 32

    def test_constant_is_exact(self):
        row = check_hist_approximation(0, [64], 20).rows[0]
        assert row["observed"] < 1e-9

    def test_bound_holds(self):
        rep = check_hist_approximation(3, [128, 512], 30)
        assert rep.ok and all(r["observed"] < HIST_CONSTANT for r in rep.rows)


class TestConcentration:
    def test_bound_at_zero_eps(self):
        assert concentration_bound(256, 0.5, 0.0) >= 1.0

    def test_pairs(self):
        pairs = default_pairs(256)
        assert (0, 256) in pairs and (0, 1) in pairs
        assert all(0 <= a < b <= 256 for a, b in pairs)

    def test_example_block(self):
        rep = check_beta_concentration(256, [0.2], 20000, rng=1, pairs=[(64, 192)])
        row = rep.rows[0]
        bound = math.exp(-255 * 0.04 / 2) + math.exp(-255 * 0.04 * 0.5 / (2 * (0.5 + 0.2 * math.sqrt(0.5))))
        assert row["bound"] == pytest.approx(bound)
        assert rep.ok

    def test_detects_wrong_law(self):
        # a block of 3 spacings is not Beta(2, n - 2); the KS test must notice
        from turf import verify

        rng = np.random.default_rng(0)
        P = verify._spacing_draws(256, [(0, 3)], 20000, rng)[0]
        from scipy import stats

        assert stats.kstest(P, stats.beta(2, 254).cdf).pvalue < 1e-3

    @pytest.mark.parametrize("kw", [dict(n=64), dict(pairs=[(5, 5)]), dict(pairs=[(0, 300)])])
    def test_rejects(self, kw):
        args = dict(n=256, eps_values=[0.1], trials=10) | kw
        with pytest.raises(ValueError):
            check_beta_concentration(**args)


class TestReports:
    def test_partition_count(self):
        rep = check_partition_count(range(3), [22, 44, 100])
        assert rep.ok
        assert {(r["d"], r["k"]): r["observed"] for r in rep.rows}[(1, 44)] == 14

    def test_csv(self):
        rep = Report("x", [{"a": 1.5, "ok": True}, {"a": 2, "ok": False, "b": "z"}])
        text = rep.to_csv()
        assert text.endswith("\r\n")
        rows = list(csv.DictReader(io.StringIO(text)))
        assert rows[0] == {"a": "1.5", "ok": "true", "b": ""} and rows[1]["ok"] == "false"
        assert not rep.ok

    def test_run_all_quick(self):
        reports = run_all(0, quick=True)
        assert [r.name for r in reports] == ["poly_inequality", "hist_approximation",
                                             "beta_concentration", "partition_count"]
        assert all(r.ok for r in reports)
