"""Validation battery: covariate balance, placebo cutoffs, window sensitivity.

Every check reruns the same machinery used for the outcome analysis --
identical statistic, mechanism, and window -- because a falsification test
analyzed differently from the outcome tests nothing.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from .core import RDSample, Window, in_window
from .errors import AnalysisError
from .largesample import neyman_test
from .randinf import Mechanism, fisher_test
from .stats import StatSpec, diff_means


def _fisher_p(t, y, mech, stat, n_sims, seed, exhaust_threshold, n_threads):
    m = mech if mech is not None else Mechanism.from_observed(t)
    return fisher_test(t, y, mech=m, stat=stat, n_sims=n_sims, seed=seed,
                       exhaust_threshold=exhaust_threshold,
                       n_threads=n_threads)


def balance_table(sample: RDSample, window: Window, covariates=None,
                  engine: str = "fisher", mech: Mechanism | None = None,
                  stat: StatSpec | None = None, n_sims: int = 1000,
                  seed: int | None = None,
                  exhaust_threshold: int = 100_000,
                  n_threads: int = 1) -> pd.DataFrame:
    """Per-covariate sharp-null tests inside the analysis window.

    Rows report group means, the chosen test statistic, its p-value, and the
    number of units with that covariate observed (missing values are dropped
    pairwise per covariate).  A covariate constant within the window carries
    no information against balance and is reported with p = 1.
    """
    sub = in_window(sample, window)
    names = list(covariates) if covariates else list(sample.covariates)
    if not names:
        raise AnalysisError("balance analysis needs at least one covariate")
    stat = stat or StatSpec()
    rows = []
    for i, name in enumerate(names):
        if name not in sub.covariates:
            raise AnalysisError(f"unknown covariate {name!r}")
        z = sub.covariates[name]
        ok = ~np.isnan(z)
        t, zz = sub.treatment[ok], z[ok]
        note = ""
        if zz.size == 0 or np.all(zz == zz[0]) or len(np.unique(t)) < 2:
            mean_m = float(np.mean(zz[t == 0])) if np.any(t == 0) else np.nan
            mean_p = float(np.mean(zz[t == 1])) if np.any(t == 1) else np.nan
            value, p = 0.0, 1.0
            note = "constant in window"
        else:
            mean_m = float(np.mean(zz[t == 0]))
            mean_p = float(np.mean(zz[t == 1]))
            sub_seed = None if seed is None else int(np.random.SeedSequence(
                (int(seed), i)).generate_state(1)[0])
            if engine == "fisher":
                res = _fisher_p(t, zz, mech, stat, n_sims, sub_seed,
                                exhaust_threshold, n_threads)
                value, p = res.stat_obs, res.p_value
            elif engine == "large":
                res = neyman_test(t, zz)
                value, p = res.estimate, res.p_value
            else:
                raise ValueError("engine must be 'fisher' or 'large'")
        rows.append({"covariate": name, "mean_control": mean_m,
                     "mean_treated": mean_p, "statistic": float(value),
                     "p_value": float(p), "n": int(zz.size), "note": note})
    return pd.DataFrame(rows)


def placebo_cutoffs(sample: RDSample, true_cutoff: float, artificial_cutoffs,
                    half_length: float, engine: str = "fisher",
                    mech: Mechanism | None = None,
                    stat: StatSpec | None = None, n_sims: int = 1000,
                    seed: int | None = None, match_n: int | None = None,
                    exhaust_threshold: int = 100_000,
                    n_threads: int = 1) -> pd.DataFrame:
    """Outcome analysis at cutoffs where no effect should exist.

    Cutoffs above the true one use only treated observations; cutoffs below
    use only control observations, so the real effect cannot contaminate the
    placebo.  Each placebo window is symmetric with the original half-length;
    passing match_n instead grows the window until it holds at least that
    many observations.  A window that would contain the true cutoff is
    refused.
    """
    x = sample.score
    rows = []
    for j, c_art in enumerate(np.asarray(artificial_cutoffs, dtype=float)):
        if c_art == true_cutoff:
            raise AnalysisError("placebo cutoff equals the true cutoff")
        above = c_art > true_cutoff
        keep = x >= true_cutoff if above else x < true_cutoff
        side = sample.subset(keep)
        w = float(half_length)
        if match_n is not None:
            dist = np.sort(np.abs(side.score - c_art))
            if dist.size < match_n:
                raise AnalysisError(f"placebo {c_art:g}: fewer than "
                                    f"{match_n} same-side observations")
            w = max(w, float(dist[match_n - 1]))
        if abs(c_art - true_cutoff) <= w:
            raise AnalysisError(
                f"placebo window [{c_art - w:g}, {c_art + w:g}] overlaps the "
                f"true cutoff {true_cutoff:g}")
        win = Window.around(side.replace(cutoff=c_art), c_art, w)
        assert not win.lo <= true_cutoff <= win.hi
        sub = in_window(side.replace(cutoff=c_art), win)
        t = sub.treatment
        if len(np.unique(t)) < 2:
            raise AnalysisError(f"placebo {c_art:g}: no observations on "
                                f"both sides within {w:g}")
        est = diff_means(t, sub.outcome)
        sub_seed = None if seed is None else int(np.random.SeedSequence(
            (int(seed), j)).generate_state(1)[0])
        if engine == "fisher":
            res = _fisher_p(t, sub.outcome, mech, stat, n_sims, sub_seed,
                            exhaust_threshold, n_threads)
            est, p = res.stat_obs, res.p_value
        else:
            p = neyman_test(t, sub.outcome).p_value
        rows.append({"cutoff": float(c_art),
                     "mean_control": float(np.mean(sub.outcome[t == 0])),
                     "mean_treated": float(np.mean(sub.outcome[t == 1])),
                     "statistic": float(est), "p_value": float(p),
                     "n": int(sub.n), "lo": win.lo, "hi": win.hi})
    return pd.DataFrame(rows)


def window_sensitivity(sample: RDSample, half_lengths, w0: float,
                       cutoff: float | None = None, engine: str = "fisher",
                       mech: Mechanism | None = None,
                       stat: StatSpec | None = None, n_sims: int = 1000,
                       seed: int | None = None,
                       exhaust_threshold: int = 100_000,
                       n_threads: int = 1) -> pd.DataFrame:
    """Rerun the outcome analysis in windows nested inside the selected one.

    Windows larger than the selected window are refused: the selection
    procedure already found covariate imbalance beyond it, so results there
    are not informative about the effect.
    """
    cutoff = sample.scalar_cutoff if cutoff is None else float(cutoff)
    rows = []
    for j, w in enumerate(np.asarray(half_lengths, dtype=float)):
        if w > w0:
            raise AnalysisError(
                f"window half-length {w:g} exceeds the selected {w0:g}; "
                f"covariates are imbalanced beyond the selected window, so "
                f"sensitivity checks only shrink it")
        win = Window.around(sample, cutoff, w)
        sub = in_window(sample, win)
        if sub.n == 0:
            raise AnalysisError(f"no observations in window of half-length "
                                f"{w:g}")
        t = sub.treatment
        if len(np.unique(t)) < 2:
            raise AnalysisError(f"window of half-length {w:g} is one-sided")
        est = diff_means(t, sub.outcome)
        sub_seed = None if seed is None else int(np.random.SeedSequence(
            (int(seed), j)).generate_state(1)[0])
        if engine == "fisher":
            res = _fisher_p(t, sub.outcome, mech, stat, n_sims, sub_seed,
                            exhaust_threshold, n_threads)
            est, p_fisher = res.stat_obs, res.p_value
        else:
            p_fisher = np.nan
        p_large = neyman_test(t, sub.outcome).p_value
        rows.append({"half_length": float(w), "statistic": float(est),
                     "fisher_p": float(p_fisher), "large_p": float(p_large),
                     "n_minus": win.n_minus, "n_plus": win.n_plus})
    return pd.DataFrame(rows)
