import json
import os
import subprocess
import sys

import numpy as np
import pytest

from turf.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, main


@pytest.fixture
def samples(tmp_path):
    p = tmp_path / "x.txt"
    xs = np.random.default_rng(0).normal(size=2000)
    p.write_text("\n".join(repr(float(v)) for v in xs) + "\n")
    return p


@pytest.fixture
def exp_spec(tmp_path):
    p = tmp_path / "spec.json"
    p.write_text(json.dumps({"models": [{"model": "gauss"}, {"model": "beta", "perturbation": {"k": 5}}],
                             "estimators": [{"name": "turf"}, {"name": "merge_only"}],
                             "n": [500, 1000], "seeds": 2}))
    return p


class TestNodes:
    def test_degree_one(self, capsys):
        assert main(["nodes", "--d", "1"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "nodes=(0, 0.5, 1)" in out and "ratio=1.250000" in out

    def test_all_degrees(self, capsys):
        main(["nodes"])
        assert len(capsys.readouterr().out.splitlines()) == 9

    def test_bad_degree(self):
        assert main(["nodes", "--d", "12"]) == EXIT_INPUT

    def test_recompute_to_file(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["nodes", "--d", "2", "--recompute", "--out", str(out)]) == EXIT_OK
        spec = json.loads(out.read_text())["specs"][0]
        assert spec["nodes"][1] == pytest.approx(0.2599, abs=1e-3)


class TestFitEval:
    def test_fit_then_eval(self, samples, tmp_path, capsys):
        est = tmp_path / "e.json"
        assert main(["fit", str(samples), "--d", "2", "--t", "2", "--out", str(est)]) == EXIT_OK
        doc = json.loads(est.read_text())
        assert doc["t"] == 2 and doc["n"] == 2000 and doc["config"]["d"] == 2
        model = tmp_path / "m.json"
        model.write_text(json.dumps({"components": [{"family": "gaussian", "params": [0, 1], "weight": 1}]}))
        assert main(["eval", str(est), str(model), "--normalize"]) == EXIT_OK
        assert 0 < float(capsys.readouterr().out) < 0.3

    def test_fit_cv_stdout(self, samples, capsys):
        assert main(["fit", str(samples), "--cv"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["t"] >= 1

    def test_eval_named_model(self, samples, tmp_path, capsys):
        est = tmp_path / "e.json"
        main(["fit", str(samples), "--out", str(est)])
        assert main(["eval", str(est), "gauss", "--noisy"]) == EXIT_OK

    def test_empty_samples(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("")
        assert main(["fit", str(p)]) == EXIT_INPUT

    @pytest.mark.parametrize("text", ["1\nabc\n", "1\nnan\n2\n"])
    def test_bad_samples(self, tmp_path, text):
        p = tmp_path / "bad.txt"
        p.write_text(text)
        assert main(["fit", str(p)]) == EXIT_INPUT

    def test_missing_file(self, tmp_path):
        assert main(["fit", str(tmp_path / "nope.txt")]) == EXIT_INPUT

    def test_bad_config(self, samples):
        assert main(["fit", str(samples), "--alpha", "2"]) == EXIT_INPUT

    def test_unknown_flag_exits_one(self, samples):
        with pytest.raises(SystemExit) as err:
            main(["fit", str(samples), "--bogus"])
        assert err.value.code == EXIT_INPUT


class TestExperiment:
    def test_byte_identical_reruns(self, exp_spec, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["experiment", str(exp_spec), "--out", str(a)]) == EXIT_OK
        assert main(["experiment", str(exp_spec), "--out", str(b), "--threads", "2"]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_text().splitlines()) == 1 + 2 * 2 * 2 * 2

    def test_svg_and_summary(self, exp_spec, tmp_path, capsys):
        svg = tmp_path / "p.svg"
        main(["experiment", str(exp_spec), "--out", str(tmp_path / "r.csv"), "--svg", str(svg)])
        assert svg.read_text().startswith("<svg")
        assert capsys.readouterr().err.startswith("model,estimator,n,count")

    def test_seed_changes_output(self, exp_spec, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["experiment", str(exp_spec), "--out", str(a)])
        main(["experiment", str(exp_spec), "--out", str(b), "--seed", "1"])
        assert a.read_bytes() != b.read_bytes()

    def test_error_rows_exit_two(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"model": "gauss", "estimators": [{"name": "turf"}], "n": [1], "seeds": 1}))
        assert main(["experiment", str(p), "--out", str(tmp_path / "r.csv")]) == EXIT_NUMERIC

    def test_invalid_spec(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"model": "gauss", "estimators": [], "n": [10]}))
        assert main(["experiment", str(p)]) == EXIT_INPUT

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text("{")
        assert main(["experiment", str(p)]) == EXIT_INPUT


class TestVerify:
    def test_quick(self, tmp_path, capsys):
        assert main(["verify", "--quick", "--out", str(tmp_path)]) == EXIT_OK
        assert capsys.readouterr().out.count("PASS") == 4
        assert sorted(os.listdir(tmp_path)) == ["beta_concentration.csv", "hist_approximation.csv",
                                                "partition_count.csv", "poly_inequality.csv"]


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "turf.cli", "nodes", "--d", "0"], capture_output=True, text=True)
    assert r.returncode == 0 and "ratio=1.000000" in r.stdout
