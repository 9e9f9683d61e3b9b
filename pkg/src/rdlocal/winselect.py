"""Data-driven window selection by covariate balance.

Scans nested symmetric windows around the cutoff, testing the sharp null of
covariate balance in each, and selects the largest window such that the test
fails to reject there and in every smaller window.  Choosing the window from
covariates alone, before any outcome is examined, keeps the selection free of
outcome peeking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import binom

from .core import RDSample, Window, in_window
from .errors import AnalysisError
from .randinf import Mechanism, fisher_test
from .stats import StatSpec


@dataclass(frozen=True)
class Step:
    """Window growth rule: by_obs adds at least k units per side per step,
    by_length adds a fixed half-length increment."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("by_obs", "by_length"):
            raise ValueError("step kind must be by_obs or by_length")
        if self.value <= 0:
            raise ValueError("step value must be positive")


def by_obs(k: int = 2) -> Step:
    return Step(kind="by_obs", value=int(k))


def by_length(s: float) -> Step:
    return Step(kind="by_length", value=float(s))


@dataclass(frozen=True)
class WindowScanRow:
    window: Window
    min_p: float
    argmin_covariate: str
    binomial_p: float
    n_minus: int
    n_plus: int
    note: str = ""


@dataclass(frozen=True)
class WindowScan:
    rows: list
    selected: Window | None
    alpha_star: float
    obs_min: int
    step: Step

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"lo": r.window.lo, "hi": r.window.hi,
             "half_length": r.window.half_length, "min_p": r.min_p,
             "covariate": r.argmin_covariate, "binomial_p": r.binomial_p,
             "n_minus": r.n_minus, "n_plus": r.n_plus, "note": r.note}
            for r in self.rows])

    def plot_data(self) -> pd.DataFrame:
        """(window half-length, min p) pairs for the p-value figure."""
        return self.to_frame()[["half_length", "min_p"]]


def _side_distances(sample: RDSample, cutoff: float):
    x = sample.score
    d_minus = np.sort(cutoff - x[x < cutoff])
    d_plus = np.sort(x[x >= cutoff] - cutoff)
    return d_minus, d_plus


def window_sequence(sample: RDSample, cutoff: float | None = None,
                    step: Step | None = None, obs_min: int = 10,
                    n_windows: int = 20) -> list:
    """Nested symmetric windows with strictly increasing half-lengths.

    The first window is the smallest symmetric one with at least obs_min
    units on each side.  by_obs(k) then grows the half-length until both
    sides gain at least k units; by_length(s) grows it by s.  The sequence
    stops at n_windows, or earlier once a side runs out of data.
    """
    cutoff = sample.scalar_cutoff if cutoff is None else float(cutoff)
    step = step or by_obs(2)
    d_minus, d_plus = _side_distances(sample, cutoff)
    if d_minus.size < obs_min or d_plus.size < obs_min:
        raise AnalysisError(
            f"need at least {obs_min} observations on each side of the "
            f"cutoff; found {d_minus.size} below and {d_plus.size} above")

    w = max(d_minus[obs_min - 1], d_plus[obs_min - 1])
    windows = [Window.around(sample, cutoff, w)]
    while len(windows) < n_windows:
        cur = windows[-1]
        if step.kind == "by_length":
            w = cur.half_length + step.value
            if cur.n_minus == d_minus.size and cur.n_plus == d_plus.size:
                break
        else:
            k = int(step.value)
            tm, tp = cur.n_minus + k, cur.n_plus + k
            if tm > d_minus.size or tp > d_plus.size:
                break
            w = max(d_minus[tm - 1], d_plus[tp - 1])
            if w <= cur.half_length:
                break
        windows.append(Window.around(sample, cutoff, w))
    return windows


def binomial_density(n_plus: int, n_total: int, q: float = 0.5) -> float:
    """Exact two-sided binomial test of the in-window treated count.

    The p-value sums the probabilities of all outcomes no more likely than
    the observed one (the usual exact-test convention).
    """
    if not 0 <= n_plus <= n_total:
        raise ValueError("need 0 <= n_plus <= n_total")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    pmf = binom.pmf(np.arange(n_total + 1), n_total, q)
    included = pmf <= pmf[n_plus] * (1 + 1e-12)
    if included.all():
        return 1.0
    return float(min(1.0, pmf[included].sum()))


def _covariate_p(sub: RDSample, name: str, mech_for, stat: StatSpec,
                 n_sims: int, seed_for, exhaust_threshold: int,
                 n_threads: int):
    z = sub.covariates[name]
    ok = ~np.isnan(z)
    t, z = sub.treatment[ok], z[ok]
    if z.size == 0 or np.all(z == z[0]) or len(np.unique(t)) < 2:
        return 1.0, "constant in window; no information against balance"
    res = fisher_test(t, z, mech=mech_for(t), stat=stat, n_sims=n_sims,
                      seed=seed_for(), exhaust_threshold=exhaust_threshold,
                      n_threads=n_threads)
    return res.p_value, ""


def scan(sample: RDSample, covariates=None, mech: Mechanism | None = None,
         stat: StatSpec | None = None, step: Step | None = None,
         alpha_star: float = 0.15, n_sims: int = 1000,
         seed: int | None = None, n_windows: int = 20, obs_min: int = 10,
         cutoff: float | None = None, binomial_q: float = 0.5,
         exhaust_threshold: int = 0, n_threads: int = 1) -> WindowScan:
    """Covariate-balance scan over nested windows.

    Per window and covariate, a Fisherian sharp-null balance test is run on
    the covariate (difference in means by default, Monte Carlo with n_sims
    draws unless exhaust_threshold admits enumeration); each row records the
    minimum p-value across covariates and the covariate attaining it.  With
    stat.kind == "hotelling", a single joint test over all covariates is run
    instead.  The selected window is the largest whose own row and all
    smaller rows have min_p > alpha_star; if the smallest window already
    rejects, no window is selected and the choice is left to the user.
    """
    if not 0 < alpha_star < 1:
        raise ValueError("alpha_star must lie in (0, 1)")
    names = list(covariates) if covariates else list(sample.covariates)
    if not names:
        raise AnalysisError("window selection needs at least one covariate")
    for name in names:
        if name not in sample.covariates:
            raise AnalysisError(f"unknown covariate {name!r}")
    stat = stat or StatSpec()
    omnibus = stat.kind == "hotelling"
    windows = window_sequence(sample, cutoff=cutoff, step=step,
                              obs_min=obs_min, n_windows=n_windows)

    def mech_for(t):
        return mech if mech is not None else Mechanism.from_observed(t)

    rows = []
    for wi, win in enumerate(windows):
        sub = in_window(sample, win)
        counter = iter(range(len(names) + 1))

        def seed_for(_wi=wi, _c=counter):
            if seed is None:
                return None
            return int(np.random.SeedSequence(
                (int(seed), _wi, next(_c))).generate_state(1)[0])

        note = ""
        if omnibus:
            z = np.column_stack([sub.covariates[n] for n in names])
            ok = ~np.isnan(z).any(axis=1)
            t = sub.treatment[ok]
            if ok.sum() == 0 or len(np.unique(t)) < 2 or \
                    all(np.all(z[ok][:, j] == z[ok][0, j])
                        for j in range(z.shape[1])):
                min_p, argmin = 1.0, "hotelling"
                note = "constant in window; no information against balance"
            else:
                res = fisher_test(t, z[ok], mech=mech_for(t), stat=stat,
                                  n_sims=n_sims, seed=seed_for(),
                                  exhaust_threshold=exhaust_threshold,
                                  n_threads=n_threads)
                min_p, argmin = res.p_value, "hotelling"
        else:
            min_p, argmin = np.inf, ""
            for name in names:
                p, cov_note = _covariate_p(sub, name, mech_for, stat, n_sims,
                                           seed_for, exhaust_threshold,
                                           n_threads)
                if p < min_p:
                    min_p, argmin, note = p, name, cov_note
        rows.append(WindowScanRow(
            window=win, min_p=float(min_p), argmin_covariate=argmin,
            binomial_p=binomial_density(win.n_plus, win.n, q=binomial_q),
            n_minus=win.n_minus, n_plus=win.n_plus, note=note))

    selected = None
    for row in rows:
        if row.min_p > alpha_star:
            selected = row.window
        else:
            break
    return WindowScan(rows=rows, selected=selected,
                      alpha_star=float(alpha_star), obs_min=int(obs_min),
                      step=step or by_obs(2))
