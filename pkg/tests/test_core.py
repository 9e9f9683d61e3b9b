"""Tests for the data model, CSV ingestion, and score transforms."""

import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdlocal import (ConfigError, DataError, RDSample, Window,
                     collapse_by_score, flip_score, in_window, load_csv,
                     mass_point_summary, normalize_score)


def make_csv(text):
    return io.StringIO(text.strip() + "\n")


class TestLoadCsv:
    def test_basic_mapping(self):
        src = make_csv("""
a,b,z
1.5,2.0,0.1
-0.5,3.0,0.2
""")
        s = load_csv(src, {"a": "score", "b": "outcome", "z": "covariate"})
        assert s.n == 2
        assert s.n_dropped == 0
        np.testing.assert_allclose(s.score, [1.5, -0.5])
        np.testing.assert_allclose(s.covariates["z"], [0.1, 0.2])

    def test_missing_column_is_config_error(self):
        src = make_csv("a,b\n1,2")
        with pytest.raises(ConfigError, match="missing column"):
            load_csv(src, {"a": "score", "nope": "outcome"})

    def test_unknown_role(self):
        src = make_csv("a,b\n1,2")
        with pytest.raises(ConfigError, match="unknown role"):
            load_csv(src, {"a": "score", "b": "wat"})

    def test_empty_file(self):
        with pytest.raises(DataError, match="no data rows"):
            load_csv(make_csv("a,b"), {"a": "score", "b": "outcome"})

    def test_na_row_dropped_and_counted(self):
        rows = "\n".join(f"{i},{i}" for i in range(9))
        src = make_csv(f"a,b\nNA,1.0\n{rows}")
        s = load_csv(src, {"a": "score", "b": "outcome"})
        assert s.n == 9
        assert s.n_dropped == 1

    def test_non_numeric_cell_reports_line(self):
        src = make_csv("a,b\n1,2\nfoo,3")
        with pytest.raises(DataError, match="line 3"):
            load_csv(src, {"a": "score", "b": "outcome"})

    def test_custom_delimiter_and_na_tokens(self):
        src = make_csv("a;b;z\n1;2;nan\n3;4;5")
        s = load_csv(src, {"a": "score", "b": "outcome", "z": "covariate"},
                     delimiter=";")
        assert s.n == 2
        assert np.isnan(s.covariates["z"][0])

    def test_binary_takeup_enforced(self):
        src = make_csv("a,b,d\n1,2,0\n3,4,2")
        with pytest.raises(DataError, match="binary"):
            load_csv(src, {"a": "score", "b": "outcome",
                           "d": "treatment_received"})


class TestTreatmentConvention:
    def test_at_cutoff_is_treated(self):
        s = RDSample(score=np.array([-1.0, 0.0, 1.0]),
                     outcome=np.zeros(3), cutoff=0.0)
        np.testing.assert_array_equal(s.treatment, [0, 1, 1])

    def test_per_unit_cutoffs(self):
        s = RDSample(score=np.array([40.75, 57.0]),
                     outcome=np.zeros(2),
                     cutoff=np.array([40.75, 57.21]))
        np.testing.assert_array_equal(s.treatment, [1, 0])


class TestNormalize:
    def test_subtracts_cutoff(self):
        s = RDSample(score=np.array([57.0, 41.0]), outcome=np.zeros(2),
                     cutoff=np.array([57.21, 40.75]))
        out = normalize_score(s)
        np.testing.assert_allclose(out.score, [-0.21, 0.25])
        assert out.cutoff == 0.0
        # original untouched
        np.testing.assert_allclose(s.score, [57.0, 41.0])

    def test_zero_cutoff_identity(self):
        s = RDSample(score=np.array([1.0, -2.0]), outcome=np.zeros(2))
        out = normalize_score(s)
        np.testing.assert_array_equal(out.score, s.score)

    def test_boundary_unit_treated(self):
        s = RDSample(score=np.array([40.75, 0.0]), outcome=np.zeros(2),
                     cutoff=np.array([40.75, 1.0]))
        out = normalize_score(s)
        assert out.score[0] == 0.0
        assert out.treatment[0] == 1


class TestFlip:
    def test_probation_convention(self):
        # below-cutoff units (on probation) land above zero and treated
        s = RDSample(score=np.array([-0.2, 0.0, 1.0]), outcome=np.zeros(3))
        out = flip_score(s, epsilon=0.000005)
        np.testing.assert_allclose(out.score, [0.2, -0.000005, -1.0])
        np.testing.assert_array_equal(out.treatment, [1, 0, 0])

    def test_counts_preserved(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=200).round(1)
        s = RDSample(score=x, outcome=np.zeros(200))
        out = flip_score(s, 1e-6)
        # sides swap except exact-cutoff units, which stay control
        assert out.n == s.n
        n_below_strict = int((x < 0).sum())
        assert int(out.treatment.sum()) == n_below_strict

    def test_double_flip_restores_assignment(self):
        x = np.array([-0.3, -0.01, 0.0, 0.02, 1.4])
        s = RDSample(score=x, outcome=np.zeros(5))
        twice = flip_score(flip_score(s, 1e-6), 1e-6)
        np.testing.assert_array_equal(twice.treatment, s.treatment)

    def test_epsilon_positive(self):
        s = RDSample(score=np.array([0.0, 1.0]), outcome=np.zeros(2))
        with pytest.raises(ValueError):
            flip_score(s, 0.0)


class TestCollapse:
    def test_pair_mean(self):
        s = RDSample(score=np.array([1.0, 1.0]), outcome=np.array([0.0, 2.0]))
        out = collapse_by_score(s)
        assert out.n == 1
        assert out.outcome[0] == 1.0
        assert out.weight[0] == 2.0

    def test_distinct_scores_unchanged(self):
        s = RDSample(score=np.array([1.0, 2.0, 3.0]),
                     outcome=np.array([5.0, 6.0, 7.0]))
        out = collapse_by_score(s)
        np.testing.assert_array_equal(out.score, s.score)
        np.testing.assert_array_equal(out.outcome, s.outcome)

    def test_idempotent(self):
        rng = np.random.default_rng(42)
        x = rng.integers(-5, 5, size=300).astype(float)
        y = rng.normal(size=300)
        s = RDSample(score=x, outcome=y, covariates={"z": rng.normal(size=300)})
        once = collapse_by_score(s)
        twice = collapse_by_score(once)
        np.testing.assert_array_equal(once.score, twice.score)
        np.testing.assert_allclose(once.outcome, twice.outcome, atol=1e-12)
        np.testing.assert_allclose(once.weight, twice.weight)

    def test_weights_are_counts(self):
        x = np.array([0.0, 0.0, 0.0, 1.0])
        s = RDSample(score=x, outcome=np.arange(4.0))
        out = collapse_by_score(s)
        np.testing.assert_array_equal(out.weight, [3, 1])


class TestMassPoints:
    def test_direct_counts(self):
        s = RDSample(score=np.array([-1.0, -1.0, 0.0, 0.0]),
                     outcome=np.zeros(4), cutoff=0.0)
        mp = mass_point_summary(s)
        assert mp.distinct_values == 2
        assert [c for _, c, _ in mp.per_value] == [2, 2]
        assert mp.smallest_window == (-1.0, 0.0)
        assert mp.smallest_window_counts == (2, 2)

    def test_all_distinct(self):
        x = np.linspace(-1, 1, 100)
        s = RDSample(score=x, outcome=np.zeros(100))
        assert mass_point_summary(s).distinct_values == 100

    def test_one_sided_flagged(self):
        s = RDSample(score=np.array([1.0, 2.0]), outcome=np.zeros(2))
        mp = mass_point_summary(s)
        assert mp.smallest_window is None
        assert "constant on one side" in mp.degenerate

    def test_probation_style_window(self):
        # transformed probation score: controls at -eps, treateds at 0.01
        x = np.concatenate([np.full(208, -0.000005), np.full(67, 0.01),
                            np.full(10, 0.05), np.full(12, -0.03)])
        s = RDSample(score=x, outcome=np.zeros(x.size))
        mp = mass_point_summary(s)
        assert mp.smallest_window == (-0.000005, 0.01)
        assert mp.smallest_window_counts == (208, 67)


class TestWindow:
    def test_counts_closed_interval(self):
        s = RDSample(score=np.array([-2.0, -1.0, 0.0, 1.0, 2.0]),
                     outcome=np.zeros(5))
        w = Window.around(s, 0.0, 1.0)
        assert (w.n_minus, w.n_plus) == (1, 2)  # -1 below; 0 and 1 above

    def test_counts_match_recompute(self):
        rng = np.random.default_rng(7)
        s = RDSample(score=rng.normal(size=500), outcome=np.zeros(500))
        w = Window.around(s, 0.0, 0.8)
        sub = in_window(s, w)
        t = sub.treatment
        assert int((t == 0).sum()) == w.n_minus
        assert int((t == 1).sum()) == w.n_plus

    def test_stale_counts_refused(self):
        s = RDSample(score=np.array([-1.0, 1.0]), outcome=np.zeros(2))
        w = Window(center=0.0, lo=-1.0, hi=1.0, n_minus=5, n_plus=5)
        with pytest.raises(Exception, match="stale"):
            in_window(s, w)

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            Window(center=0.0, lo=1.0, hi=2.0, n_minus=0, n_plus=0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-10, 10), min_size=2, max_size=60))
def test_collapse_round_trip_property(vals):
    x = np.asarray(vals, dtype=float)
    s = RDSample(score=x, outcome=np.arange(x.size, dtype=float))
    once = collapse_by_score(s)
    twice = collapse_by_score(once)
    np.testing.assert_allclose(once.outcome, twice.outcome, atol=1e-12)
    assert float(once.weight.sum()) == x.size


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2,
                max_size=40))
def test_double_flip_property(vals):
    x = np.asarray(vals, dtype=float)
    s = RDSample(score=x, outcome=np.zeros(x.size))
    twice = flip_score(flip_score(s, 1e-9), 1e-9)
    np.testing.assert_array_equal(twice.treatment, s.treatment)
