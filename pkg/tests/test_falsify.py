"""Tests for the falsification battery."""

import numpy as np
import pytest

from rdlocal import (AnalysisError, RDSample, Window, balance_table,
                     fisher_test, in_window, placebo_cutoffs,
                     window_sensitivity)


def make_sample(n=400, seed=1, effect=1.0, slope=0.5):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    y = slope * x + effect * (x >= 0) + rng.normal(0, 0.4, n)
    covs = {
        "noise": rng.normal(size=n),
        "echo": y.copy(),                       # deliberately imbalanced
        "flat": np.ones(n),
        "holey": np.where(rng.random(n) < 0.15, np.nan, rng.normal(size=n)),
    }
    return RDSample(score=x, outcome=y, covariates=covs)


class TestBalanceTable:
    def test_engine_consistency_with_manual_rerun(self):
        s = make_sample()
        win = Window.around(s, 0.0, 0.5)
        tab = balance_table(s, win, covariates=["noise"], seed=5,
                            n_sims=400)
        sub = in_window(s, win)
        manual_seed = int(np.random.SeedSequence((5, 0)).generate_state(1)[0])
        manual = fisher_test(sub.treatment, sub.covariates["noise"],
                             n_sims=400, seed=manual_seed)
        row = tab.iloc[0]
        assert row["p_value"] == manual.p_value
        assert row["statistic"] == manual.stat_obs

    def test_outcome_copy_detected_as_imbalanced(self):
        s = make_sample()
        win = Window.around(s, 0.0, 0.5)
        tab = balance_table(s, win, covariates=["echo", "noise"], seed=7,
                            n_sims=500)
        echo_p = tab.set_index("covariate").loc["echo", "p_value"]
        assert echo_p < 0.05

    def test_constant_covariate_p_one_with_note(self):
        s = make_sample()
        win = Window.around(s, 0.0, 0.5)
        tab = balance_table(s, win, covariates=["flat"], seed=3)
        row = tab.iloc[0]
        assert row["p_value"] == 1.0
        assert "constant" in row["note"]

    def test_pairwise_missing_handling(self):
        s = make_sample()
        win = Window.around(s, 0.0, 0.5)
        tab = balance_table(s, win, covariates=["holey", "noise"], seed=9)
        sub = in_window(s, win)
        n_obs = int((~np.isnan(sub.covariates["holey"])).sum())
        got = tab.set_index("covariate").loc["holey", "n"]
        assert got == n_obs
        assert tab.set_index("covariate").loc["noise", "n"] == sub.n

    def test_large_sample_engine(self):
        s = make_sample()
        win = Window.around(s, 0.0, 0.5)
        tab = balance_table(s, win, covariates=["noise"], engine="large")
        assert 0 <= tab.iloc[0]["p_value"] <= 1


class TestPlaceboCutoffs:
    def test_same_side_windows_and_structure(self):
        s = make_sample()
        tab = placebo_cutoffs(s, 0.0, [1.0, -1.0], half_length=0.5,
                              seed=11, n_sims=300)
        above = tab.set_index("cutoff").loc[1.0]
        assert above["lo"] == pytest.approx(0.5)
        assert above["hi"] == pytest.approx(1.5)
        below = tab.set_index("cutoff").loc[-1.0]
        assert below["hi"] == pytest.approx(-0.5)
        for _, row in tab.iterrows():
            assert not row["lo"] <= 0.0 <= row["hi"]

    def test_no_effect_found_at_placebos(self):
        # flat regression functions away from the cutoff: any placebo
        # rejection would be a false positive
        s = make_sample(n=2000, seed=21, slope=0.0)
        tab = placebo_cutoffs(s, 0.0, [1.0, -1.0], half_length=0.5,
                              seed=13, n_sims=400)
        assert (tab["p_value"] > 0.05).all()

    def test_true_cutoff_rejected_as_placebo(self):
        s = make_sample()
        with pytest.raises(AnalysisError, match="true cutoff"):
            placebo_cutoffs(s, 0.0, [0.0], half_length=0.5)

    def test_overlapping_window_rejected(self):
        s = make_sample()
        with pytest.raises(AnalysisError, match="overlaps"):
            placebo_cutoffs(s, 0.0, [0.3], half_length=0.5)

    def test_match_n_grows_window(self):
        s = make_sample(n=3000, seed=31)
        tab = placebo_cutoffs(s, 0.0, [1.2], half_length=0.1, match_n=200,
                              seed=17, n_sims=200)
        assert tab.iloc[0]["n"] >= 200

    def test_only_same_side_observations_used(self):
        s = make_sample(n=1000, seed=41)
        tab = placebo_cutoffs(s, 0.0, [1.0], half_length=0.5, seed=19,
                              n_sims=200)
        x = s.score
        want = int(((x >= 0.5) & (x <= 1.5) & (x >= 0)).sum())
        assert tab.iloc[0]["n"] == want


class TestWindowSensitivity:
    def test_w0_reproduces_main_analysis(self):
        s = make_sample()
        tab = window_sensitivity(s, [0.5], w0=0.5, seed=23, n_sims=300)
        sub = in_window(s, Window.around(s, 0.0, 0.5))
        from rdlocal import diff_means
        assert tab.iloc[0]["statistic"] == pytest.approx(
            diff_means(sub.treatment, sub.outcome))
        assert tab.iloc[0]["n_minus"] + tab.iloc[0]["n_plus"] == sub.n

    def test_larger_than_w0_refused(self):
        s = make_sample()
        with pytest.raises(AnalysisError, match="exceeds the selected"):
            window_sensitivity(s, [0.8], w0=0.5)

    def test_empty_window_error(self):
        s = make_sample()
        with pytest.raises(AnalysisError, match="no observations|one-sided"):
            window_sensitivity(s, [1e-9], w0=0.5)

    def test_effect_stable_across_nested_windows(self):
        s = make_sample(n=4000, seed=43)
        tab = window_sensitivity(s, [0.5, 0.4, 0.3], w0=0.5, seed=29,
                                 n_sims=300)
        assert (np.abs(tab["statistic"] - 1.0) < 0.3).all()
        assert (tab["fisher_p"] < 0.05).all()
