"""Synthetic data generators for property tests and size/power studies.

Deliberately minimal: piecewise-linear potential-outcome means that are flat
inside a window around the cutoff and sloped outside, Gaussian noise, and
side-specific take-up for fuzzy designs.  These exist to exercise the
engines, not to mimic any real application.
"""

from __future__ import annotations

import numpy as np

from .core import RDSample


def _mean_curve(x, flat_radius, slope_left, slope_right):
    left = np.minimum(x + flat_radius, 0.0)
    right = np.maximum(x - flat_radius, 0.0)
    return slope_left * left + slope_right * right


def gen_sharp(n: int, window_flat_radius: float = 0.3, slopes=(1.0, 1.0),
              effect: float = 0.0, noise_sd: float = 1.0,
              seed: int = 0, score_range: float = 1.0,
              baseline: float = 0.0, covariate_slopes=(1.0, 1.0),
              covariate_noise_sd: float = 1.0) -> RDSample:
    """Sharp design with flat potential-outcome means near the cutoff.

    Scores are uniform on [-score_range, score_range] with cutoff zero; the
    control mean is flat within +/- window_flat_radius and sloped outside; a
    constant effect is added above the cutoff.  One covariate z with the same
    flat-then-sloped shape is included, so balance tests reject in large
    windows but not inside the flat region.
    """
    if n < 4:
        raise ValueError("need at least 4 units")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-score_range, score_range, size=n)
    t = (x >= 0).astype(float)
    mu0 = baseline + _mean_curve(x, window_flat_radius, *slopes)
    y = mu0 + effect * t + rng.normal(0.0, noise_sd, size=n)
    z = _mean_curve(x, window_flat_radius, *covariate_slopes) \
        + rng.normal(0.0, covariate_noise_sd, size=n)
    return RDSample(score=x, outcome=y, cutoff=0.0, covariates={"z": z})


def gen_fuzzy(n: int, take_up=(0.0, 0.6), effect_received: float = 0.0,
              window_flat_radius: float = 0.3, slopes=(1.0, 1.0),
              noise_sd: float = 1.0, seed: int = 0,
              score_range: float = 1.0) -> RDSample:
    """Fuzzy design with side-specific take-up probabilities.

    take_up = (below, above) gives the probability of receiving the treatment
    on each side of the cutoff; (0, 1) is a sharp design, a nonzero first
    entry produces two-sided noncompliance.  The outcome responds to the
    treatment received with a constant effect.
    """
    lo, hi = take_up
    if not (0 <= lo <= 1 and 0 <= hi <= 1):
        raise ValueError("take-up probabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-score_range, score_range, size=n)
    t = (x >= 0).astype(float)
    d = rng.binomial(1, np.where(t == 1, hi, lo)).astype(float)
    mu0 = _mean_curve(x, window_flat_radius, *slopes)
    y = mu0 + effect_received * d + rng.normal(0.0, noise_sd, size=n)
    return RDSample(score=x, outcome=y, cutoff=0.0, treatment_received=d)


def to_csv(sample: RDSample, path, delimiter: str = ","):
    """Dump a generated sample for CLI round-trip tests."""
    import pandas as pd

    cols = {"x": sample.score, "y": sample.outcome}
    if np.ndim(sample.cutoff) > 0:
        cols["c"] = sample.cutoff
    if sample.treatment_received is not None:
        cols["d"] = sample.treatment_received
    if sample.score2 is not None:
        cols["x2"] = sample.score2
    for name, z in sample.covariates.items():
        cols[name] = z
    pd.DataFrame(cols).to_csv(path, index=False, sep=delimiter)
