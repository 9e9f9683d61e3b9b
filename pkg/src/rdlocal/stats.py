"""Two-sample test statistics and variance estimators.

These are the building blocks shared by the randomization-inference engine
and the large-sample engine.  All functions are pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AnalysisError

STAT_KINDS = ("diff_means", "ks", "rank_sum", "hotelling", "tsls")
SIGNED_KINDS = ("diff_means", "rank_sum", "tsls")
SIDEDNESS = ("two_sided", "right", "left")
VARIANCE_KINDS = ("pooled_neyman", "hc2", "hc3")


@dataclass(frozen=True)
class StatSpec:
    """Choice of test statistic.

    kind : one of diff_means, ks, rank_sum, hotelling, tsls.
    sidedness : two_sided (default), right, or left.  Two-sided comparisons
        use |S| for signed statistics (diff_means, rank_sum, tsls) and raw S
        for inherently nonnegative ones (ks, hotelling).
    weights : optional per-unit kernel weights for diff_means; must be
        nonnegative and not all zero on either side.
    """

    kind: str = "diff_means"
    sidedness: str = "two_sided"
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in STAT_KINDS:
            raise ValueError(f"unknown statistic {self.kind!r}")
        if self.sidedness not in SIDEDNESS:
            raise ValueError(f"unknown sidedness {self.sidedness!r}")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if (w < 0).any():
                raise ValueError("weights must be nonnegative")
            object.__setattr__(self, "weights", w)

    @property
    def signed(self) -> bool:
        return self.kind in SIGNED_KINDS


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    estimator: str
    dof_note: str = ""

    def __post_init__(self):
        if not np.isfinite(self.value) or self.value < 0:
            raise ValueError("variance must be finite and nonnegative")


def _split(T, Y):
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    plus = Y[T == 1]
    minus = Y[T == 0]
    if plus.size == 0 or minus.size == 0:
        raise AnalysisError("empty group: both sides of the cutoff need "
                            "observations")
    return plus, minus


def diff_means(T, Y, weights=None) -> float:
    """Weighted difference in means, sum(w T Y)/N+ - sum(w (1-T) Y)/N-.

    With unit weights this is the plain difference in group means (the fixed
    margins convention).  Weights from :func:`bernoulli_weights` make it
    unbiased under an independent-assignment mechanism.  Kernel weights should
    be normalized to sum to the group size on each side so the expression
    stays a weighted mean.
    """
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    _split(T, Y)  # raises on an empty group
    n_plus = int(np.sum(T == 1))
    n_minus = int(np.sum(T == 0))
    if weights is None:
        w = np.ones_like(Y)
    else:
        w = np.asarray(weights, dtype=float)
        if w[T == 1].sum() == 0 or w[T == 0].sum() == 0:
            raise AnalysisError("weights vanish on one side of the cutoff")
    return float(np.sum(w * T * Y) / n_plus - np.sum(w * (1 - T) * Y) / n_minus)


def bernoulli_weights(T, p) -> np.ndarray:
    """Unbiasedness weights for an independent-assignment mechanism.

    w_i = T_i N+/(N p_i) + (1 - T_i) N-/(N (1 - p_i)); p may be scalar or
    per-unit, strictly inside (0, 1).
    """
    T = np.asarray(T)
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0) or np.any(p >= 1):
        raise ValueError("assignment probability must lie strictly in (0, 1)")
    n = T.size
    n_plus = int(T.sum())
    n_minus = n - n_plus
    return T * (n_plus / (n * p)) + (1 - T) * (n_minus / (n * (1 - p)))


def ks_stat(T, Y) -> float:
    """Two-sample Kolmogorov-Smirnov statistic, sup |F+ - F-|."""
    plus, minus = _split(T, Y)
    grid = np.concatenate([plus, minus])
    f_plus = np.searchsorted(np.sort(plus), grid, side="right") / plus.size
    f_minus = np.searchsorted(np.sort(minus), grid, side="right") / minus.size
    return float(np.abs(f_plus - f_minus).max())


def rank_sum_stat(T, Y) -> float:
    """Studentized Wilcoxon rank-sum statistic with midranks for ties.

    Returns (W - E[W]) / sd(W) where W is the treated rank sum and the
    variance carries the standard tie correction.  A constant outcome has
    zero variance; the statistic is then defined as zero (no evidence).
    """
    plus, minus = _split(T, Y)
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    n_plus = plus.size
    n_minus = minus.size
    order = np.argsort(Y, kind="mergesort")
    ranks = np.empty(n)
    ranks[order] = np.arange(1, n + 1)
    # midranks: average ranks within tied groups
    _, inverse, counts = np.unique(Y, return_inverse=True, return_counts=True)
    if (counts > 1).any():
        sums = np.bincount(inverse, weights=ranks)
        ranks = (sums / counts)[inverse]
    w = float(ranks[T == 1].sum())
    mean_w = n_plus * (n + 1) / 2.0
    tie_term = float(((counts ** 3 - counts).sum()) / (n * (n - 1))) if n > 1 else 0.0
    var_w = n_plus * n_minus / 12.0 * ((n + 1) - tie_term)
    if var_w <= 0:
        return 0.0
    return float((w - mean_w) / np.sqrt(var_w))


def hotelling_stat(T, Z) -> float:
    """Two-sample Hotelling T-squared with pooled covariance.

    Z is an (n, k) covariate matrix; rows with any missing value are dropped.
    """
    T = np.asarray(T)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    ok = ~np.isnan(Z).any(axis=1)
    T, Z = T[ok], Z[ok]
    plus = Z[T == 1]
    minus = Z[T == 0]
    if plus.shape[0] < 2 or minus.shape[0] < 2:
        raise AnalysisError("empty group: Hotelling needs at least two "
                            "complete rows per side")
    n_plus, n_minus = plus.shape[0], minus.shape[0]
    diff = plus.mean(axis=0) - minus.mean(axis=0)
    pooled = ((n_plus - 1) * np.cov(plus, rowvar=False).reshape(Z.shape[1], -1)
              + (n_minus - 1) * np.cov(minus, rowvar=False).reshape(Z.shape[1], -1)
              ) / (n_plus + n_minus - 2)
    try:
        sol = np.linalg.solve(pooled, diff)
    except np.linalg.LinAlgError:
        raise AnalysisError("singular covariance; drop collinear covariates") \
            from None
    if not np.all(np.isfinite(sol)):
        raise AnalysisError("singular covariance; drop collinear covariates")
    return float(n_plus * n_minus / (n_plus + n_minus) * diff @ sol)


def neyman_variance(T, Y, kind="pooled_neyman") -> VarianceEstimate:
    """Variance of the difference in means.

    pooled_neyman is s2+/N+ + s2-/N- with N-1 denominators.  hc2 and hc3 are
    the heteroskedasticity-robust estimators from the equivalent two-group
    regression; for a two-group design they reduce to s2/g per side with
    g = N (hc2 coincides with pooled_neyman) and g = N - 1 (hc3).
    """
    if kind not in VARIANCE_KINDS:
        raise ValueError(f"unknown variance estimator {kind!r}")
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    plus, minus = _split(T, Y)
    for name, grp in (("treated", plus), ("control", minus)):
        if grp.size < 2:
            raise AnalysisError(f"{name} group has a single unit; variance "
                                f"is not estimable")
    s2p = float(np.var(plus, ddof=1))
    s2m = float(np.var(minus, ddof=1))
    np_, nm = plus.size, minus.size
    if kind in ("pooled_neyman", "hc2"):
        value = s2p / np_ + s2m / nm
        note = ("conservative for the in-window average effect"
                if kind == "pooled_neyman"
                else "two-group HC2; equals the pooled Neyman form")
    else:
        value = s2p / (np_ - 1) + s2m / (nm - 1)
        note = "two-group HC3; N-1 denominators per side"
    return VarianceEstimate(value=value, estimator=kind, dof_note=note)
