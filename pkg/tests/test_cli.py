"""Integration tests for the command-line front end."""

import json

import numpy as np
import pandas as pd
import pytest

from rdlocal import gen_fuzzy, gen_sharp
from rdlocal.cli import run
from rdlocal.simdgp import to_csv


@pytest.fixture()
def sharp_csv(tmp_path):
    s = gen_sharp(500, window_flat_radius=0.4, effect=1.0, noise_sd=0.5,
                  seed=3)
    path = tmp_path / "sharp.csv"
    to_csv(s, path)
    return str(path)


@pytest.fixture()
def fuzzy_csv(tmp_path):
    s = gen_fuzzy(400, take_up=(0.0, 0.7), effect_received=0.8,
                  noise_sd=0.5, seed=5)
    path = tmp_path / "fuzzy.csv"
    to_csv(s, path)
    return str(path)


BASE = ["--map", "x=score", "--map", "y=outcome"]


class TestExitCodes:
    def test_success_is_zero(self, sharp_csv, capsys):
        code = run(["randinf", "--input", sharp_csv, *BASE,
                    "--wl", "-0.4", "--wr", "0.4", "--seed", "50"])
        assert code == 0
        assert "finite-sample p" in capsys.readouterr().out

    def test_usage_error_is_two(self, capsys):
        assert run(["randinf", "--no-such-flag"]) == 2
        assert run(["not-a-command"]) == 2

    def test_analysis_error_is_one(self, tmp_path, capsys):
        empty = tmp_path / "empty.csv"
        empty.write_text("x,y\n")
        code = run(["randinf", "--input", str(empty), *BASE,
                    "--wl", "-1", "--wr", "1", "--seed", "1"])
        assert code == 1
        assert "no data rows" in capsys.readouterr().err

    def test_missing_window_is_analysis_error(self, sharp_csv, capsys):
        code = run(["randinf", "--input", sharp_csv, *BASE, "--seed", "1"])
        assert code == 1
        assert "--wl" in capsys.readouterr().err


class TestRandinfCommand:
    def test_json_contains_every_printed_number(self, sharp_csv, tmp_path,
                                                capsys):
        out = tmp_path / "res.json"
        code = run(["randinf", "--input", sharp_csv, *BASE,
                    "--wl", "-0.4", "--wr", "0.4", "--seed", "50",
                    "--out-json", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["schema_version"] == 1
        assert payload["command"] == "randinf"
        res = payload["results"]
        for key in ("stat_obs", "finite_sample_p", "large_sample_p",
                    "large_sample_ci", "power_at_d", "mean_control",
                    "mean_treated", "point_estimate"):
            assert key in res
        printed = capsys.readouterr().out
        assert f"{res['stat_obs']:.3f}" in printed
        assert f"{res['finite_sample_p']:.3f}" in printed

    def test_ci_grid(self, sharp_csv, tmp_path):
        out = tmp_path / "ci.json"
        csv_out = tmp_path / "ci.csv"
        code = run(["randinf", "--input", sharp_csv, *BASE,
                    "--wl", "-0.4", "--wr", "0.4", "--seed", "50",
                    "--ci-grid=-1:3:0.25", "--out-json", str(out),
                    "--out-csv", str(csv_out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]["ci_inversion"]
        lo, hi = res["interval"]
        assert lo <= 1.0 <= hi  # true effect bracketed
        grid_rows = pd.read_csv(csv_out)
        assert list(grid_rows.columns) == ["tau0", "p_value"]

    def test_bernoulli_mechanism(self, sharp_csv):
        code = run(["randinf", "--input", sharp_csv, *BASE,
                    "--wl", "-0.4", "--wr", "0.4", "--seed", "50",
                    "--mechanism", "bernoulli", "--bernoulli-p", "0.5"])
        assert code == 0

    def test_thread_count_does_not_change_json(self, sharp_csv, tmp_path):
        outs = []
        for threads in ("1", "8"):
            out = tmp_path / f"t{threads}.json"
            code = run(["randinf", "--input", sharp_csv, *BASE,
                        "--wl", "-0.4", "--wr", "0.4", "--seed", "50",
                        "--statistic", "rank_sum", "--nsims", "400",
                        "--threads", threads, "--ci-grid=-1:3:0.5",
                        "--out-json", str(out)])
            assert code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestWinselectCommand:
    def test_never_prints_outcome_effects(self, tmp_path, capsys):
        s = gen_sharp(400, effect=50.0, seed=7)  # enormous outcome effect
        path = tmp_path / "s.csv"
        to_csv(s, path)
        out = tmp_path / "w.json"
        code = run(["winselect", "--input", str(path), *BASE,
                    "--map", "z=covariate", "--seed", "11",
                    "--nwindows", "5", "--out-json", str(out)])
        assert code == 0
        printed = capsys.readouterr().out
        assert "outcome" in printed  # the reminder that outcomes are unused
        payload = json.loads(out.read_text())
        text = json.dumps(payload)
        for forbidden in ("estimate", "effect", "stat_obs"):
            assert forbidden not in text
        assert "selected" in payload["results"]

    def test_wstep_and_wobs_exclusive_usage_error(self, sharp_csv, capsys):
        code = run(["winselect", "--input", sharp_csv, *BASE,
                    "--map", "z=covariate", "--seed", "1",
                    "--wobs", "2", "--wstep", "0.1"])
        assert code == 2

    def test_plot_out(self, sharp_csv, tmp_path):
        plot = tmp_path / "pvals.csv"
        code = run(["winselect", "--input", sharp_csv, *BASE,
                    "--map", "z=covariate", "--seed", "11",
                    "--nwindows", "4", "--plot-out", str(plot)])
        assert code == 0
        frame = pd.read_csv(plot)
        assert list(frame.columns) == ["half_length", "min_p"]


class TestDensityCommand:
    def test_binomial_value(self, tmp_path, capsys):
        # 16 control / 25 treated values -> p = 0.211
        x = np.concatenate([-np.linspace(0.01, 0.5, 16),
                            np.linspace(0.01, 0.5, 25)])
        frame = pd.DataFrame({"x": x, "y": np.zeros(41)})
        path = tmp_path / "d.csv"
        frame.to_csv(path, index=False)
        out = tmp_path / "d.json"
        code = run(["density", "--input", str(path), *BASE,
                    "--wl", "-0.7652", "--wr", "0.7652", "--q", "0.5",
                    "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert res["n_minus"] == 16 and res["n_plus"] == 25
        assert res["binomial_p"] == pytest.approx(0.211, abs=1e-3)


class TestFuzzyCommand:
    def test_full_output(self, fuzzy_csv, tmp_path):
        out = tmp_path / "f.json"
        code = run(["fuzzy", "--input", fuzzy_csv, *BASE,
                    "--map", "d=treatment_received",
                    "--wl", "-0.3", "--wr", "0.3", "--seed", "50",
                    "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert set(res) >= {"itt", "first_stage", "tsls"}
        ratio = res["tsls"]["ratio"]
        assert ratio == pytest.approx(
            res["itt"]["estimate"] / res["first_stage"]["estimate"],
            abs=1e-12)

    def test_single_analysis_flag(self, fuzzy_csv, tmp_path):
        out = tmp_path / "f.json"
        code = run(["fuzzy", "--input", fuzzy_csv, *BASE,
                    "--map", "d=treatment_received",
                    "--wl", "-0.3", "--wr", "0.3", "--seed", "50",
                    "--first-stage", "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert "first_stage" in res and "tsls" not in res

    def test_missing_takeup_column(self, sharp_csv):
        code = run(["fuzzy", "--input", sharp_csv, *BASE,
                    "--wl", "-0.3", "--wr", "0.3", "--seed", "1"])
        assert code == 1

    def test_shared_bandwidth_route(self, fuzzy_csv, tmp_path):
        out = tmp_path / "fb.json"
        code = run(["fuzzy", "--input", fuzzy_csv, *BASE,
                    "--map", "d=treatment_received",
                    "--bandwidth", "0.4", "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert res["bandwidth"] == 0.4
        assert res["tsls"]["ratio"] == pytest.approx(
            res["itt"]["estimate"] / res["first_stage"]["estimate"],
            abs=1e-12)


class TestMcCommand:
    def make_mc_csv(self, tmp_path):
        rng = np.random.default_rng(13)
        cut = rng.choice([1.0, 3.0], size=800)
        x = cut + rng.uniform(-1, 1, 800)
        y = 1.0 * (x >= cut) + rng.normal(0, 0.5, 800)
        path = tmp_path / "mc.csv"
        pd.DataFrame({"x": x, "y": y, "c": cut}).to_csv(path, index=False)
        return str(path)

    def test_by_cutoff_and_pool(self, tmp_path):
        path = self.make_mc_csv(tmp_path)
        out = tmp_path / "mc.json"
        code = run(["mc", "--input", path, *BASE, "--map", "c=cutoff",
                    "--window", "0.5", "--pooled",
                    "--compare", "1,3", "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert len(res["by_cutoff"]) == 2
        weights = res["pooled"]["weights"]
        assert sum(weights.values()) == pytest.approx(1.0)
        assert "compare" in res

    def test_cutoff_col_flag(self, tmp_path):
        path = self.make_mc_csv(tmp_path)
        code = run(["mc", "--input", path, *BASE, "--cutoff-col", "c",
                    "--window", "0.5"])
        assert code == 0

    def test_cutoffs_from_file(self, tmp_path):
        rng = np.random.default_rng(23)
        x = rng.uniform(0, 10, 600)
        y = 0.5 * (x >= 2) + rng.normal(0, 0.3, 600)
        path = tmp_path / "cum.csv"
        pd.DataFrame({"x": x, "y": y}).to_csv(path, index=False)
        cfile = tmp_path / "cutoffs.csv"
        cfile.write_text("cutoff\n2\n6\n")
        code = run(["mc", "--input", str(path), *BASE,
                    "--cutoffs", str(cfile), "--window", "1.0"])
        assert code == 0

    def test_cumulative_split(self, tmp_path):
        rng = np.random.default_rng(17)
        x = rng.uniform(0, 10, 600)
        y = 0.5 * (x >= 2) + 0.5 * (x >= 6) + rng.normal(0, 0.3, 600)
        path = tmp_path / "cum.csv"
        pd.DataFrame({"x": x, "y": y}).to_csv(path, index=False)
        code = run(["mc", "--input", str(path), *BASE,
                    "--cutoffs", "2,6", "--cumulative", "midpoint",
                    "--window", "1.0"])
        assert code == 0

    def test_plot_out_tidy(self, tmp_path):
        path = self.make_mc_csv(tmp_path)
        plot = tmp_path / "mcplot.csv"
        code = run(["mc", "--input", path, *BASE, "--map", "c=cutoff",
                    "--window", "0.5", "--plot-out", str(plot)])
        assert code == 0
        frame = pd.read_csv(plot)
        assert {"cutoff", "side", "bin_center", "bin_mean"} <= set(frame.columns)
        assert set(frame["cutoff"]) == {1.0, 3.0}


class TestMsCommand:
    def make_ms_csv(self, tmp_path):
        rng = np.random.default_rng(19)
        x1 = rng.uniform(-2, 2, 1200)
        x2 = rng.uniform(-2, 2, 1200)
        a = ((x1 >= 0) & (x2 >= 0)).astype(int)
        y = 0.8 * a + rng.normal(0, 0.5, 1200)
        path = tmp_path / "ms.csv"
        pd.DataFrame({"x1": x1, "x2": x2, "a": a, "y": y}).to_csv(
            path, index=False)
        boundary = tmp_path / "bnd.csv"
        pd.DataFrame({"x1": [0.0, 0.0, 3.0], "x2": [3.0, 0.0, 0.0]}).to_csv(
            boundary, index=False)
        return str(path), str(boundary)

    def test_point_analysis(self, tmp_path):
        path, _ = self.make_ms_csv(tmp_path)
        out = tmp_path / "ms.json"
        code = run(["ms", "--input", path,
                    "--map", "x1=score", "--map", "x2=score2",
                    "--map", "y=outcome", "--assign", "a",
                    "--point", "0,0", "--wl", "-0.5", "--wr", "0.5",
                    "--seed", "50", "--out-json", str(out)])
        assert code == 0
        rows = json.loads(out.read_text())["results"]["rows"]
        assert len(rows) == 1
        assert rows[0]["estimate"] == pytest.approx(0.8, abs=0.3)

    def test_nearest_boundary_pooling(self, tmp_path):
        path, boundary = self.make_ms_csv(tmp_path)
        out = tmp_path / "msb.json"
        code = run(["ms", "--input", path,
                    "--map", "x1=score", "--map", "x2=score2",
                    "--map", "y=outcome", "--assign", "a",
                    "--boundary-file", boundary, "--nearest",
                    "--grid-radius", "0.8",
                    "--wl", "-0.5", "--wr", "0.5", "--seed", "50",
                    "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert res["rows"][0]["estimate"] == pytest.approx(0.8, abs=0.3)
        assert len(res["grid_report"]) == 3

    def test_requires_target(self, tmp_path):
        path, _ = self.make_ms_csv(tmp_path)
        code = run(["ms", "--input", path,
                    "--map", "x1=score", "--map", "x2=score2",
                    "--map", "y=outcome", "--assign", "a",
                    "--wl", "-0.5", "--wr", "0.5"])
        assert code == 1

    def test_score2_flag(self, tmp_path):
        path, _ = self.make_ms_csv(tmp_path)
        code = run(["ms", "--input", path,
                    "--map", "x1=score", "--map", "y=outcome",
                    "--score2", "x2", "--assign", "a",
                    "--point", "0,0", "--wl", "-0.5", "--wr", "0.5",
                    "--seed", "50"])
        assert code == 0


class TestFalsifyCommand:
    def test_battery(self, tmp_path):
        s = gen_sharp(1500, window_flat_radius=0.5, effect=1.0,
                      noise_sd=0.5, seed=23, slopes=(0.0, 0.0),
                      score_range=2.0)
        path = tmp_path / "f.csv"
        to_csv(s, path)
        out = tmp_path / "f.json"
        code = run(["falsify", "--input", str(path), *BASE,
                    "--map", "z=covariate", "--wl", "-0.4", "--wr", "0.4",
                    "--balance", "--placebos", "1.0,-1.0",
                    "--sensitivity", "0.4,0.3", "--seed", "50",
                    "--out-json", str(out)])
        assert code == 0
        res = json.loads(out.read_text())["results"]
        assert set(res) >= {"balance", "placebos", "sensitivity"}

    def test_needs_some_flag(self, sharp_csv):
        code = run(["falsify", "--input", sharp_csv, *BASE,
                    "--wl", "-0.4", "--wr", "0.4"])
        assert code == 1


class TestPlotCommand:
    def test_csv_and_svg(self, sharp_csv, tmp_path):
        out_csv = tmp_path / "bins.csv"
        svg = tmp_path / "plot.svg"
        out = tmp_path / "plot.json"
        code = run(["plot", "--input", sharp_csv, *BASE, "--bins", "15",
                    "--poly", "3", "--out-csv", str(out_csv),
                    "--svg", str(svg), "--out-json", str(out)])
        assert code == 0
        frame = pd.read_csv(out_csv)
        assert {"side", "bin_center", "bin_mean", "n_in_bin"} <= \
            set(frame.columns)
        assert svg.read_text().startswith("<svg")
        res = json.loads(out.read_text())["results"]
        assert len(res["fit_left"]) == 4
