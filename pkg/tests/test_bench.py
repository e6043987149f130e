import math
import xml.etree.ElementTree as ET

import pytest

from turf.bench import (EstimatorSpec, ExperimentSpec, ResultRow, SummaryRow, model_label, read_csv,
                        render_svg, rows_csv, run, run_cell, summarize, summary_csv, thread_count)

SMALL = dict(models=[{"model": "gauss"}], estimators=[{"name": "turf"}], n=[1000], seeds=1)


def spec(**kw):
    return ExperimentSpec.from_dict({**SMALL, **kw})


class TestSpec:
    @pytest.mark.parametrize("kw", [dict(n=[4000, 1000]), dict(n=[1000, 1000]), dict(seeds=0),
                                    dict(models=[]), dict(estimators=[{"name": "kde"}]),
                                    dict(models=[{"model": "gauss"}, {"model": "gauss"}]),
                                    dict(estimators=[{"name": "turf"}, {"name": "turf"}]),
                                    dict(bogus=1), dict(estimators=[{"name": "turf", "config": {"d": 12}}])])
    def test_invalid(self, kw):
        with pytest.raises((ValueError, TypeError)):
            spec(**kw)

    def test_single_model_shorthand(self):
        s = ExperimentSpec.from_dict({"model": "beta", "perturbation": {"k": 10}, "estimators": [{"name": "turf"}]})
        assert s.models == ({"model": "beta", "perturbation": {"k": 10}},)

    @pytest.mark.parametrize("doc,label", [({"model": "beta"}, "beta"),
                                           ({"model": "beta", "perturbation": {}}, "beta+noise"),
                                           ({"model": "beta", "label": "B"}, "B"),
                                           ({"components": []}, "custom")])
    def test_model_label(self, doc, label):
        assert model_label(doc) == label

    def test_estimator_key(self):
        assert EstimatorSpec("merge_only", label="adls").key == "adls"


class TestRun:
    def test_one_row(self):
        rows = run(spec(cv=False))
        text = rows_csv(rows)
        parsed = read_csv(text)
        assert len(parsed) == 1
        r = parsed[0]
        assert r["model"] == "gauss" and r["estimator"] == "turf" and r["n"] == "1000"
        assert 0 < float(r["l1_error"]) < 1 and r["wall_time"] == "" and r["error"] == ""

    def test_reproducible_bytes(self):
        s = spec(seeds=2, estimators=[{"name": "turf"}, {"name": "merge_only"}])
        assert rows_csv(run(s)) == rows_csv(run(s))

    def test_same_data_across_estimators(self):
        s = spec(cv=False, estimators=[{"name": "turf", "config": {"c1": 1.0}}, {"name": "turf", "label": "t2"}])
        a, b = run(s)
        assert a.l1_error == b.l1_error

    def test_timings(self):
        (row,) = run(spec(cv=False, timings=True))
        assert row.wall_time > 0

    def test_stitch_only(self):
        (row,) = run(spec(estimators=[{"name": "stitch_only"}]))
        assert row.t_selected is None and not row.error

    def test_error_row(self):
        (row,) = run(spec(n=[1], cv=False))
        assert row.error.startswith("ValueError") and row.l1_error is None

    def test_writes_files(self, tmp_path):
        s = spec(cv=False, csv=str(tmp_path / "r.csv"), svg=str(tmp_path / "r.svg"))
        run(s)
        assert len(read_csv((tmp_path / "r.csv").read_text())) == 1
        ET.parse(tmp_path / "r.svg")

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("TURF_THREADS", "3")
        assert thread_count(1) == 3
        monkeypatch.delenv("TURF_THREADS")
        assert thread_count(None) == 1

    def test_parallel_matches_serial(self):
        s = spec(seeds=2, cv=False)
        assert rows_csv(run(s, threads=2)) == rows_csv(run(s, threads=1))


class TestSummary:
    rows = [ResultRow("m", "e", 1, 10, s, v, 3, 1, None) for s, v in enumerate([0.1, 0.3])] + \
           [ResultRow("m", "e", 1, 10, 2, None, None, None, None, "ValueError: x"),
            ResultRow("m", "e", 1, 20, 0, 0.05, 3, 1, None)]

    def test_mean_and_stderr(self):
        s = {r.n: r for r in summarize(self.rows)}
        assert s[10].mean_l1 == pytest.approx(0.2) and s[10].count == 2 and s[10].errors == 1
        assert s[10].stderr_l1 == pytest.approx(0.1)
        assert s[20].stderr_l1 == 0.0

    def test_summary_csv(self):
        parsed = read_csv(summary_csv(summarize(self.rows)))
        assert [p["n"] for p in parsed] == ["10", "20"]

    def test_svg_parses_and_escapes(self):
        summ = summarize(self.rows) + [SummaryRow("a<b", "e&f", 10, 1, 0.4, 0.0, 0)]
        root = ET.fromstring(render_svg(summ))
        texts = [t.text for t in root.iter("{http://www.w3.org/2000/svg}text")]
        assert "a<b" in texts and "e&f" in texts
        assert len(list(root.iter("{http://www.w3.org/2000/svg}polyline"))) == 2

    def test_svg_skips_nan(self):
        summ = [SummaryRow("m", "e", 10, 0, math.nan, 0.0, 3)]
        ET.fromstring(render_svg(summ))
