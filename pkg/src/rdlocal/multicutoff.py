"""Multi-cutoff RD analysis.

Cutoff-specific effects, normalize-and-pool with explicit pooling weights,
cross-cutoff comparison tests, midpoint splitting for cumulative cutoffs, and
constant-bias extrapolation between cutoffs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import RDSample, Window, in_window, normalize_score
from .errors import AnalysisError
from .largesample import compare_estimates
from .localpoly import _wls, kernel_weights, sharp_effect
from .stats import diff_means, neyman_variance


@dataclass(frozen=True)
class CutoffResult:
    cutoff: float
    estimate: float
    variance: float
    n_used: int
    window_or_bandwidth: float
    unit_ids: frozenset | None = None


@dataclass(frozen=True)
class PooledResult:
    pooled: float
    weighted: float
    weights: dict
    h: float


def _sharp_at(sample: RDSample, cutoff: float, engine: str, w, h, p, kernel):
    """(estimate, variance, n_used, width) for one sharp analysis."""
    if engine == "local_rand":
        if w is None or w <= 0:
            raise ValueError("local_rand engine needs a window half-length w")
        win = Window.around(sample, cutoff, w)
        sub = in_window(sample, win)
        t = sub.treatment
        est = diff_means(t, sub.outcome)
        var = neyman_variance(t, sub.outcome).value
        return est, var, sub.n, w
    if engine == "local_poly":
        est, se, _ = sharp_effect(sample.score, sample.outcome, cutoff,
                                  p=p, kernel=kernel, h=h,
                                  weights=sample.weight)
        n_used = int(np.sum(np.abs(sample.score - cutoff) <= h))
        return est, se ** 2, n_used, h
    raise ValueError("engine must be 'local_rand' or 'local_poly'")


def by_cutoff(sample: RDSample, engine: str = "local_rand", w: float = None,
              h: float = None, p: int = 1, kernel: str = "uniform") -> list:
    """One sharp analysis per cutoff subsample (units with C_i = c).

    Cutoffs whose subsample is one-sided are skipped with a warning.
    """
    cutoffs = np.unique(sample.cutoff_vector)
    if cutoffs.size < 2:
        raise AnalysisError("need >= 2 cutoffs; use sharp analysis")
    results = []
    for c in cutoffs:
        idx = np.flatnonzero(sample.cutoff_vector == c)
        sub = sample.subset(idx)
        if len(np.unique(sub.treatment)) < 2:
            warnings.warn(f"cutoff {c:g}: subsample is one-sided; skipped",
                          stacklevel=2)
            continue
        try:
            est, var, n_used, width = _sharp_at(sub, float(c), engine,
                                                w, h, p, kernel)
        except AnalysisError as exc:
            warnings.warn(f"cutoff {c:g}: {exc}; skipped", stacklevel=2)
            continue
        results.append(CutoffResult(cutoff=float(c), estimate=float(est),
                                    variance=float(var), n_used=int(n_used),
                                    window_or_bandwidth=float(width),
                                    unit_ids=frozenset(idx.tolist())))
    if not results:
        raise AnalysisError("no cutoff admitted a two-sided analysis")
    return results


def pool(sample: RDSample, engine: str = "local_rand", w: float = None,
         h: float = None, p: int = 1, kernel: str = "uniform",
         weight_h: float = None) -> PooledResult:
    """Normalize scores at their cutoffs, pool at zero, and weight.

    pooled is the sharp estimate on the normalized score.  The weights are
    the empirical shares of each cutoff among units with |X - C| < weight_h
    (defaulting to the analysis window or bandwidth), and weighted is the
    weight-averaged vector of cutoff-specific estimates.
    """
    norm = normalize_score(sample)
    width = w if engine == "local_rand" else h
    if weight_h is None:
        weight_h = width
    if weight_h is None or weight_h <= 0:
        raise ValueError("a positive weight half-width is required")

    pooled_est, _, _, _ = _sharp_at(norm, 0.0, engine, w, h, p, kernel)

    in_band = np.abs(norm.score) < weight_h
    if in_band.sum() == 0:
        raise AnalysisError(f"no units within {weight_h:g} of their cutoff; "
                            f"weights are undefined")
    cvec = sample.cutoff_vector
    cutoffs = np.unique(cvec)
    weights = {float(c): float(np.sum(in_band & (cvec == c)) / in_band.sum())
               for c in cutoffs}

    if cutoffs.size == 1:
        only = float(cutoffs[0])
        est, _, _, _ = _sharp_at(sample, only, engine, w, h, p, kernel)
        return PooledResult(pooled=float(pooled_est), weighted=float(est),
                            weights={only: 1.0}, h=float(weight_h))

    per = {r.cutoff: r.estimate for r in by_cutoff(sample, engine, w, h, p,
                                                   kernel)}
    missing = [c for c, wt in weights.items() if wt > 0 and c not in per]
    if missing:
        raise AnalysisError(f"cutoff(s) {missing} carry pooling weight but "
                            f"have no two-sided estimate")
    weighted = sum(weights[c] * per[c] for c in per)
    return PooledResult(pooled=float(pooled_est), weighted=float(weighted),
                        weights=weights, h=float(weight_h))


def compare_cutoffs(r1: CutoffResult, r2: CutoffResult) -> tuple:
    """Two-sided z test that two cutoff-specific effects are equal."""
    if r1.unit_ids is not None and r2.unit_ids is not None \
            and r1.unit_ids & r2.unit_ids:
        warnings.warn("correlated estimates; p-value approximate "
                      "(estimation samples overlap)", stacklevel=2)
    return compare_estimates(r1.estimate, r1.variance, r2.estimate,
                             r2.variance)


def split_cumulative(sample: RDSample, cutoffs, rule: str = "midpoint"
                     ) -> np.ndarray:
    """Assign each unit to exactly one cutoff's analysis.

    With cumulative (dose-style) cutoffs a unit between two cutoffs could
    serve as treated for the lower one and control for the upper one; the
    split draws a boundary between consecutive cutoffs (their midpoint, or
    the median score between them) and sends units at or below it to the
    lower cutoff.  Returns the per-unit assigned cutoff value.
    """
    cutoffs = np.asarray(cutoffs, dtype=float)
    if cutoffs.size == 0:
        raise ValueError("need at least one cutoff")
    if np.any(np.diff(cutoffs) <= 0):
        raise ValueError("cutoffs must be strictly increasing")
    x = sample.score
    if cutoffs.size == 1:
        return np.full(sample.n, cutoffs[0])
    if rule == "midpoint":
        bounds = (cutoffs[:-1] + cutoffs[1:]) / 2
    elif rule == "median":
        bounds = []
        for lo, hi in zip(cutoffs[:-1], cutoffs[1:]):
            between = x[(x >= lo) & (x < hi)]
            if between.size == 0:
                warnings.warn(f"no observations between cutoffs {lo:g} and "
                              f"{hi:g}; using their midpoint", stacklevel=2)
                bounds.append((lo + hi) / 2)
            else:
                bounds.append(float(np.median(between)))
        bounds = np.asarray(bounds)
    else:
        raise ValueError("rule must be 'midpoint' or 'median'")
    # units exactly at a boundary go to the lower cutoff
    assigned = cutoffs[np.searchsorted(bounds, x, side="left")]
    for c in cutoffs:
        if not np.any(assigned == c):
            warnings.warn(f"empty stratum for cutoff {c:g}", stacklevel=2)
    return assigned


def _fit_at(xs, ys, point, h, p, kernel, label, weights=None):
    mask = np.abs(xs - point) <= h
    xs, ys = xs[mask], ys[mask]
    base = np.ones_like(ys) if weights is None else weights[mask]
    if np.unique(xs).size < p + 1:
        raise AnalysisError(f"insufficient data near {label} "
                            f"(x = {point:g}, bandwidth {h:g})")
    w = kernel_weights((xs - point) / h, kernel) * base
    beta, _ = _wls(xs - point, ys, w, p)
    return float(beta[0])


def extrapolate_constant_bias(sample: RDSample, c1: float, c2: float,
                              x: float, h: float, p: int = 1,
                              kernel: str = "uniform") -> float:
    """Effect at score x for the low-cutoff subpopulation, assuming the gap
    between the two subpopulations' control curves is constant in x.

    Combines four local fits: the treated curve of the c1 group at x, the
    control curve of the c2 group at x and at c1, and the control curve of
    the c1 group at c1.  At x = c1 the correction cancels and the standard
    effect at c1 is returned.
    """
    if not c1 < c2:
        raise ValueError("need c1 < c2")
    if not c1 <= x <= c2:
        raise ValueError("evaluation point must lie in [c1, c2]")
    cvec = sample.cutoff_vector
    g1 = sample.subset(cvec == c1)
    g2 = sample.subset(cvec == c2)
    if g1.n == 0 or g2.n == 0:
        raise AnalysisError("both cutoff subpopulations must be observed")

    t1 = g1.score >= c1
    ctl2 = g2.score < c2
    mu1_c1_x = _fit_at(g1.score[t1], g1.outcome[t1], x, h, p, kernel,
                       "the treated curve of the low-cutoff group at x")
    mu0_c2_x = _fit_at(g2.score[ctl2], g2.outcome[ctl2], x, h, p, kernel,
                       "the control curve of the high-cutoff group at x")
    mu0_c1_c1 = _fit_at(g1.score[~t1], g1.outcome[~t1], c1, h, p, kernel,
                        "the control curve of the low-cutoff group at c1")
    mu0_c2_c1 = _fit_at(g2.score[ctl2], g2.outcome[ctl2], c1, h, p, kernel,
                        "the control curve of the high-cutoff group at c1")
    return float(mu1_c1_x - (mu0_c2_x + mu0_c1_c1 - mu0_c2_c1))
