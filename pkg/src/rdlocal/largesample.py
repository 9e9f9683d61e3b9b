"""Neyman / super-population estimation and inference in a window.

Point estimation by difference in means, Gaussian confidence intervals and
tests, and power against a stated alternative.  Critical values are Gaussian
throughout (no t correction); users with very small windows should prefer the
finite-sample engine in :mod:`rdlocal.randinf`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import AnalysisError
from .stats import VarianceEstimate, diff_means, neyman_variance


@dataclass(frozen=True)
class LargeSampleResult:
    estimate: float
    variance: VarianceEstimate
    z: float
    p_value: float
    ci: tuple
    alpha: float
    power_at_d: float
    d: float


def power_from_variance(variance: float, d: float, alpha: float = 0.05) -> float:
    """Two-sided Gaussian power against a true average effect d.

    power = Phi(-z_{1-a/2} + |d|/sqrt(V)) + Phi(-z_{1-a/2} - |d|/sqrt(V)).
    Degenerate variance gives power 1 for d != 0 and alpha at d = 0.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if d == 0:
        return float(alpha)
    if variance == 0:
        return 1.0
    zcrit = norm.ppf(1 - alpha / 2)
    shift = abs(d) / np.sqrt(variance)
    return float(norm.cdf(-zcrit + shift) + norm.cdf(-zcrit - shift))


def neyman_test(T, Y, variance_kind: str = "pooled_neyman",
                alpha: float = 0.05, d: float | None = None,
                weights=None) -> LargeSampleResult:
    """Gaussian test of a zero average effect in the window.

    d is the alternative used for the power column; it defaults to one half
    of the control-group outcome standard deviation.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    est = diff_means(T, Y, weights=weights)
    var = neyman_variance(T, Y, kind=variance_kind)
    if d is None:
        control = Y[T == 0]
        d = float(np.std(control, ddof=1) / 2) if control.size > 1 else 0.0

    zcrit = norm.ppf(1 - alpha / 2)
    if var.value == 0:
        if est != 0:
            warnings.warn("zero estimated variance with a nonzero estimate; "
                          "p-value set to 0", stacklevel=2)
            z, p = float("inf"), 0.0
        else:
            z, p = 0.0, 1.0
        ci = (est, est)
    else:
        se = float(np.sqrt(var.value))
        z = est / se
        p = float(2 * norm.cdf(-abs(z)))
        ci = (est - zcrit * se, est + zcrit * se)

    return LargeSampleResult(estimate=float(est), variance=var, z=float(z),
                             p_value=p, ci=ci, alpha=float(alpha),
                             power_at_d=power_from_variance(var.value, d, alpha),
                             d=float(d))


def power(T, Y, d: float, alpha: float = 0.05,
          variance_kind: str = "pooled_neyman") -> float:
    """Power of the window test against a true average effect d."""
    var = neyman_variance(T, Y, kind=variance_kind)
    return power_from_variance(var.value, d, alpha)


def compare_estimates(est1: float, var1: float, est2: float,
                      var2: float) -> tuple:
    """z test for equality of two independent estimates; returns (z, p)."""
    if var1 < 0 or var2 < 0:
        raise AnalysisError("variances must be nonnegative")
    num = est1 - est2
    denom = np.sqrt(var1 + var2)
    if denom == 0:
        if num == 0:
            return 0.0, 1.0
        raise AnalysisError("degenerate comparison: zero variance with "
                            "unequal estimates")
    z = float(num / denom)
    return z, float(2 * norm.cdf(-abs(z)))
