"""Tests for local polynomial fits and RD plot data."""

import numpy as np
import pytest

from rdlocal import (AnalysisError, RDSample, collapse_by_score, local_fit,
                     rdplot_data, render_svg, sharp_effect)


def ols_hc2_intercept_oracle(x_centered, y):
    """Straight-line HC2 variance of the intercept in y ~ 1 + x."""
    X = np.column_stack([np.ones_like(x_centered), x_centered])
    bread = np.linalg.inv(X.T @ X)
    e = y - X @ (bread @ (X.T @ y))
    h = np.einsum("ij,jk,ik->i", X, bread, X)
    meat = (X * (e ** 2 / (1 - h))[:, None]).T @ X
    return (bread @ meat @ bread)[0, 0]


class TestLocalFit:
    def test_exact_line_recovery(self):
        x = np.linspace(-1, 1, 60)
        y = 2.0 + 3.0 * x
        fit = local_fit(x, y, cutoff=0.0, side="right", p=1,
                        kernel="uniform", h=1.0)
        np.testing.assert_allclose(fit.coefficients, [2.0, 3.0], atol=1e-10)
        fit_l = local_fit(x, y, cutoff=0.0, side="left", p=1,
                          kernel="uniform", h=1.0)
        np.testing.assert_allclose(fit_l.coefficients, [2.0, 3.0],
                                   atol=1e-10)

    def test_p0_uniform_equals_side_mean(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, 100)
        y = rng.normal(size=100)
        fit = local_fit(x, y, 0.0, "right", p=0, kernel="uniform", h=0.5)
        want = y[(x >= 0) & (x <= 0.5)].mean()
        assert fit.intercept == pytest.approx(want, abs=1e-12)
        # and its HC2 variance reduces to s^2/n
        sub = y[(x >= 0) & (x <= 0.5)]
        assert fit.intercept_se ** 2 == pytest.approx(
            np.var(sub, ddof=1) / sub.size, rel=1e-10)

    def test_hc2_matches_matrix_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(0, 1, 50)
        y = 1.0 + x + rng.normal(0, 0.3, 50)
        fit = local_fit(x, y, 0.0, "right", p=1, kernel="uniform", h=1.0)
        want = ols_hc2_intercept_oracle(x, y)
        assert fit.intercept_se ** 2 == pytest.approx(want, rel=1e-10)

    def test_triangular_downweights(self):
        x = np.array([0.05, 0.1, 0.9, 0.95])
        y = np.array([0.0, 0.0, 10.0, 10.0])
        near = local_fit(x, y, 0.0, "right", p=0, kernel="triangular", h=1.0)
        flat = local_fit(x, y, 0.0, "right", p=0, kernel="uniform", h=1.0)
        assert near.intercept < flat.intercept

    def test_mass_point_rank_error(self):
        x = np.repeat([0.1], 30)
        y = np.arange(30.0)
        with pytest.raises(AnalysisError, match="mass points"):
            local_fit(x, y, 0.0, "right", p=1, kernel="uniform", h=1.0)

    def test_side_windows_are_half_open_at_cutoff(self):
        x = np.array([-0.5, 0.0, 0.5])
        y = np.array([1.0, 2.0, 3.0])
        right = local_fit(x, y, 0.0, "right", p=0, kernel="uniform", h=1.0)
        left = local_fit(x, y, 0.0, "left", p=0, kernel="uniform", h=1.0)
        assert right.n_used == 2  # 0.0 and 0.5
        assert left.n_used == 1

    def test_cluster_by_score_runs(self):
        x = np.repeat(np.arange(0, 5) / 10, 8).astype(float)
        rng = np.random.default_rng(8)
        y = 1.0 + x + rng.normal(0, 0.2, x.size)
        fit = local_fit(x, y, 0.0, "right", p=1, kernel="uniform", h=1.0,
                        cluster_by_score=True)
        assert fit.intercept_se > 0


class TestSharpEffect:
    def test_mirrored_data_zero_effect(self):
        x = np.concatenate([-np.linspace(0.01, 1, 40),
                            np.linspace(0.01, 1, 40)])
        y = np.concatenate([np.linspace(0.01, 1, 40) ** 2,
                            np.linspace(0.01, 1, 40) ** 2])
        est, se, p = sharp_effect(x, y, 0.0, p=2, kernel="uniform", h=1.0)
        assert est == pytest.approx(0.0, abs=1e-10)

    def test_constant_shift_moves_intercepts_not_effect(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(-1, 1, 200)
        y = 0.5 * x + (x >= 0) * 0.7 + rng.normal(0, 0.1, 200)
        est1, _, _ = sharp_effect(x, y, 0.0, p=1, kernel="uniform", h=0.8)
        est2, _, _ = sharp_effect(x, y + 5.0, 0.0, p=1, kernel="uniform",
                                  h=0.8)
        assert est2 == pytest.approx(est1, abs=1e-10)

    def test_collapsed_weighted_equals_raw_p0(self):
        rng = np.random.default_rng(13)
        x = rng.integers(-4, 5, size=500) / 10  # discrete with mass points
        y = rng.normal(size=500)
        raw = sharp_effect(x, y, 0.0, p=0, kernel="uniform", h=0.3)
        s = collapse_by_score(RDSample(score=x, outcome=y))
        col = sharp_effect(s.score, s.outcome, 0.0, p=0, kernel="uniform",
                           h=0.3, weights=s.weight)
        assert col[0] == pytest.approx(raw[0], abs=1e-12)

    def test_one_sided_constant_takeup_intercept_zero(self):
        # first-stage regression when no control unit takes the treatment
        rng = np.random.default_rng(17)
        x = rng.uniform(-1, 1, 300)
        d = ((x >= 0) & (rng.random(300) < 0.6)).astype(float)
        fitl = local_fit(x, d, 0.0, "left", p=1, kernel="uniform", h=0.9)
        assert fitl.intercept == pytest.approx(0.0, abs=1e-12)


class TestRDPlot:
    def test_singleton_bins_equal_raw_outcomes(self):
        x = np.array([-2.0, -1.0, 1.0, 2.0])
        y = np.array([4.0, 3.0, 7.0, 9.0])
        plot = rdplot_data(x, y, 0.0, n_bins_left=2, n_bins_right=2,
                           global_p=1)
        np.testing.assert_allclose(np.sort(plot.bins["bin_mean"]),
                                   np.sort(y))
        assert (plot.bins["n_in_bin"] == 1).all()

    def test_constant_outcome_constant_fit(self):
        rng = np.random.default_rng(19)
        x = rng.uniform(-1, 1, 120)
        y = np.full(120, 2.0)
        plot = rdplot_data(x, y, 0.0, global_p=3)
        assert (plot.bins["bin_mean"] == 2.0).all()
        np.testing.assert_allclose(plot.fit_left[1:], 0.0, atol=1e-9)
        np.testing.assert_allclose(plot.fit_left[0], 2.0)

    def test_empty_bins_merged_and_noted(self):
        x = np.concatenate([np.full(30, -0.1), np.full(30, -2.0),
                            np.linspace(0.1, 1, 30)])
        y = np.zeros(90)
        plot = rdplot_data(x, y, 0.0, n_bins_left=10, n_bins_right=5,
                           global_p=1)
        assert plot.n_merged > 0
        assert (plot.bins["n_in_bin"] > 0).all()

    def test_quantile_rule(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=400)
        y = x + rng.normal(size=400)
        plot = rdplot_data(x, y, 0.0, bin_rule="quantile", global_p=2)
        left = plot.bins[plot.bins["side"] == "left"]
        assert left["n_in_bin"].max() <= 3 * left["n_in_bin"].min()

    def test_svg_rendering(self, tmp_path):
        rng = np.random.default_rng(29)
        x = rng.uniform(-1, 1, 150)
        y = x ** 2 + (x >= 0) * 0.5 + rng.normal(0, 0.1, 150)
        plot = rdplot_data(x, y, 0.0)
        out = tmp_path / "plot.svg"
        render_svg(plot, out)
        text = out.read_text()
        assert text.startswith("<svg")
        assert "circle" in text and "polyline" in text
