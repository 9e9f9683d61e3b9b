"""Fuzzy RD estimands: first stage, intention-to-treat, and their ratio.

The ratio estimate (outcome effect over take-up effect) carries delta-method
large-sample inference; finite-sample inference for constant effects is
available by adjusting outcomes with the hypothesized effect of the treatment
received and testing the sharp null, permuting the assignment only.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import AnalysisError
from .largesample import LargeSampleResult, neyman_test
from .randinf import FisherResult, Mechanism, fisher_test
from .stats import StatSpec, diff_means, neyman_variance

WEAK_F_THRESHOLD = 20.0


@dataclass(frozen=True)
class FuzzyResult:
    itt: float
    first_stage: float
    ratio: float
    ratio_variance: float
    ratio_p_value: float
    ratio_ci: tuple
    f_stat: float
    weak_flag: bool
    compliance_type: str  # "one_sided" or "two_sided"


def _group_cov(T, Y, D):
    """Variance of the ITT/first-stage pair and their covariance."""
    out = {}
    for label, side in (("plus", 1), ("minus", 0)):
        y = Y[T == side]
        d = D[T == side]
        if y.size < 2:
            raise AnalysisError(f"{'treated' if side else 'control'} group "
                                f"needs at least two units")
        out[label] = (np.var(y, ddof=1), np.var(d, ddof=1),
                      np.cov(y, d, ddof=1)[0, 1], y.size)
    vy = out["plus"][0] / out["plus"][3] + out["minus"][0] / out["minus"][3]
    vd = out["plus"][1] / out["plus"][3] + out["minus"][1] / out["minus"][3]
    cyd = out["plus"][2] / out["plus"][3] + out["minus"][2] / out["minus"][3]
    return vy, vd, cyd


def compliance_type(T, D) -> str:
    """one_sided when an entire assignment arm complies perfectly."""
    T = np.asarray(T)
    D = np.asarray(D)
    no_control_takeup = not np.any((T == 0) & (D == 1))
    no_treated_refusal = not np.any((T == 1) & (D == 0))
    return "one_sided" if (no_control_takeup or no_treated_refusal) \
        else "two_sided"


def itt(T, outcome, framework: str = "large", mech: Mechanism | None = None,
        stat: StatSpec | None = None, alpha: float = 0.05,
        n_sims: int = 1000, seed: int | None = None,
        exhaust_threshold: int = 100_000,
        n_threads: int = 1) -> LargeSampleResult | FisherResult:
    """Effect of the assignment on any outcome, sharp-design machinery.

    Pass the outcome Y for the intention-to-treat effect or the take-up D for
    the first stage; ``framework`` picks large-sample or Fisherian inference.
    """
    if framework == "large":
        return neyman_test(T, outcome, alpha=alpha)
    if framework == "fisher":
        return fisher_test(T, outcome, mech=mech, stat=stat, n_sims=n_sims,
                           seed=seed, exhaust_threshold=exhaust_threshold,
                           n_threads=n_threads)
    raise ValueError("framework must be 'large' or 'fisher'")


def tsls_ratio(T, Y, D, alpha: float = 0.05) -> FuzzyResult:
    """Ratio of the outcome effect to the take-up effect in one window.

    Both effects are differences in means on the same observations, so
    ratio * first_stage == itt exactly.  The variance comes from the delta
    method on group-wise sample moments of (Y, D); the first-stage F statistic
    is the squared t of the take-up difference with HC2 variance, flagged when
    below 20 (inference is still printed, with a warning).
    """
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.isnan(D).any():
        raise AnalysisError("treatment received has missing values inside "
                            "the window")
    itt_est = diff_means(T, Y)
    fs_est = diff_means(T, D)
    if fs_est == 0:
        raise AnalysisError("weak/undefined denominator: the take-up "
                            "difference is exactly zero")
    ratio = itt_est / fs_est

    vy, vd, cyd = _group_cov(T, Y, D)
    ratio_var = (vy + ratio ** 2 * vd - 2 * ratio * cyd) / fs_est ** 2
    ratio_var = max(ratio_var, 0.0)
    if ratio_var > 0:
        z = ratio / np.sqrt(ratio_var)
        p = float(2 * norm.cdf(-abs(z)))
    else:
        p = 1.0 if ratio == 0 else 0.0
    zcrit = norm.ppf(1 - alpha / 2)
    half = zcrit * np.sqrt(ratio_var)

    fs_var = neyman_variance(T, D, kind="hc2").value
    f_stat = float("inf") if fs_var == 0 else fs_est ** 2 / fs_var
    weak = bool(f_stat < WEAK_F_THRESHOLD)
    if weak:
        warnings.warn(
            f"weak assignment: first-stage F = {f_stat:.2f} < "
            f"{WEAK_F_THRESHOLD:g}; ratio inference is unreliable",
            stacklevel=2)

    return FuzzyResult(itt=float(itt_est), first_stage=float(fs_est),
                       ratio=float(ratio), ratio_variance=float(ratio_var),
                       ratio_p_value=p,
                       ratio_ci=(float(ratio - half), float(ratio + half)),
                       f_stat=float(f_stat), weak_flag=weak,
                       compliance_type=compliance_type(T, D))


def _joint_intercept_moments(x, Y, D, cutoff, side, p, kernel, h):
    """Intercept estimates for (Y, D) from one shared side fit, plus their
    HC2 variances and covariance."""
    from .localpoly import kernel_weights

    x = np.asarray(x, dtype=float)
    if side == "left":
        mask = (x < cutoff) & (x >= cutoff - h)
    else:
        mask = (x >= cutoff) & (x <= cutoff + h)
    xs = x[mask] - cutoff
    if np.unique(xs).size < p + 1:
        raise AnalysisError(f"too few distinct score values on the {side} "
                            f"side within h={h:g}")
    w = kernel_weights(xs / h, kernel)
    X = np.vander(xs, N=p + 1, increasing=True)
    xtw = X.T * w
    Ainv = np.linalg.inv(xtw @ X)
    proj = Ainv @ xtw
    beta_y = proj @ Y[mask]
    beta_d = proj @ D[mask]
    ey = Y[mask] - X @ beta_y
    ed = D[mask] - X @ beta_d
    leverage = np.einsum("ij,jk,ik->i", X, Ainv, X) * w
    shrink = np.maximum(1 - leverage, 1e-12)

    def meat(a, b):
        core = np.where((a == 0) & (b == 0), 0.0, a * b / shrink)
        return (X * (w ** 2 * core)[:, None]).T @ X

    def v00(a, b):
        return float((Ainv @ meat(a, b) @ Ainv)[0, 0])

    return (float(beta_y[0]), float(beta_d[0]),
            v00(ey, ey), v00(ed, ed), v00(ey, ed))


def ratio_localpoly(score, Y, D, cutoff: float, h: float, p: int = 1,
                    kernel: str = "uniform",
                    alpha: float = 0.05) -> FuzzyResult:
    """Continuity-based ratio with one shared bandwidth for both effects.

    The outcome jump and the take-up jump come from the same side fits on
    the same observations, so ratio * first_stage == itt exactly.  The
    delta-method variance uses the joint HC2 moments of the two intercepts.
    """
    if h is None or h <= 0:
        raise ValueError("a positive bandwidth h is required")
    Y = np.asarray(Y, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.isnan(D).any():
        raise AnalysisError("treatment received has missing values inside "
                            "the bandwidth")
    sides = {s: _joint_intercept_moments(score, Y, D, cutoff, s, p, kernel,
                                         h) for s in ("left", "right")}
    itt_est = sides["right"][0] - sides["left"][0]
    fs_est = sides["right"][1] - sides["left"][1]
    if fs_est == 0:
        raise AnalysisError("weak/undefined denominator: the take-up jump "
                            "is exactly zero")
    ratio = itt_est / fs_est
    vy = sides["right"][2] + sides["left"][2]
    vd = sides["right"][3] + sides["left"][3]
    cyd = sides["right"][4] + sides["left"][4]
    ratio_var = max((vy + ratio ** 2 * vd - 2 * ratio * cyd) / fs_est ** 2,
                    0.0)
    if ratio_var > 0:
        pval = float(2 * norm.cdf(-abs(ratio) / np.sqrt(ratio_var)))
    else:
        pval = 1.0 if ratio == 0 else 0.0
    half = norm.ppf(1 - alpha / 2) * np.sqrt(ratio_var)
    f_stat = float("inf") if vd == 0 else fs_est ** 2 / vd
    weak = bool(f_stat < WEAK_F_THRESHOLD)
    if weak:
        warnings.warn(
            f"weak assignment: first-stage F = {f_stat:.2f} < "
            f"{WEAK_F_THRESHOLD:g}; ratio inference is unreliable",
            stacklevel=2)
    x = np.asarray(score, dtype=float)
    in_h = np.abs(x - cutoff) <= h
    t_in = (x[in_h] >= cutoff).astype(int)
    return FuzzyResult(itt=float(itt_est), first_stage=float(fs_est),
                       ratio=float(ratio), ratio_variance=float(ratio_var),
                       ratio_p_value=pval,
                       ratio_ci=(float(ratio - half), float(ratio + half)),
                       f_stat=f_stat, weak_flag=weak,
                       compliance_type=compliance_type(t_in, D[in_h]))


def fisher_constant_effect_test(T, Y, D, gamma: float,
                                mech: Mechanism | None = None,
                                stat: StatSpec | None = None,
                                n_sims: int = 1000, seed: int | None = None,
                                exhaust_threshold: int = 100_000,
                                n_threads: int = 1) -> FisherResult:
    """Sharp test that the treatment received shifts every outcome by gamma.

    Outcomes are adjusted to Y - D * gamma and the sharp null is tested by
    permuting the treatment assignment (never the treatment received).
    """
    T = np.asarray(T)
    D = np.asarray(D, dtype=float)
    if np.isnan(D).any():
        raise AnalysisError("treatment received has missing values inside "
                            "the window")
    y_adj = np.asarray(Y, dtype=float) - D * float(gamma)
    return fisher_test(T, y_adj, mech=mech, stat=stat, null_tau=0.0,
                       n_sims=n_sims, seed=seed,
                       exhaust_threshold=exhaust_threshold,
                       n_threads=n_threads)
