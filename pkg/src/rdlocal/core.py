"""Canonical data model: samples, windows, CSV ingestion, score transforms.

A unit is treated when its score is at or above its cutoff, ``T_i = 1(X_i >= c_i)``.
Units exactly at the cutoff are therefore treated; several workflows (notably the
academic-probation style score flip) depend on this convention, so it is enforced
here and never stored separately from the score and cutoff.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError, AnalysisError

NA_TOKENS = ("", "NA", "nan")

ROLES = ("score", "outcome", "treatment_received", "cutoff", "score2", "covariate")


def _as_float_vector(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return arr


@dataclass(frozen=True)
class RDSample:
    """Unit-level data for one RD analysis.

    Parameters
    ----------
    score : array of float
        Running variable X_i.
    outcome : array of float
        Outcome Y_i.
    cutoff : float or array of float
        Scalar cutoff c, or per-unit cutoffs C_i for multi-cutoff designs.
    treatment_received : array of {0, 1}, optional
        Take-up D_i for fuzzy designs.
    covariates : dict of name -> array of float
        Predetermined covariates; NaN marks missing values (rows are kept for
        outcome analyses and dropped pairwise in balance tests).
    score2 : array of float, optional
        Second score dimension for multi-score designs.
    weight : array of float, optional
        Row multiplicity, used by collapsed-by-score samples. None means 1.
    n_dropped : int
        Rows discarded during ingestion because score or outcome was missing.
    """

    score: np.ndarray
    outcome: np.ndarray
    cutoff: float | np.ndarray = 0.0
    treatment_received: np.ndarray | None = None
    covariates: dict = field(default_factory=dict)
    score2: np.ndarray | None = None
    weight: np.ndarray | None = None
    n_dropped: int = 0

    def __post_init__(self):
        score = _as_float_vector(self.score, "score")
        outcome = _as_float_vector(self.outcome, "outcome")
        object.__setattr__(self, "score", score)
        object.__setattr__(self, "outcome", outcome)
        n = score.size
        if n < 1:
            raise DataError("no data rows")
        if outcome.size != n:
            raise DataError("score and outcome lengths differ")
        if np.isnan(score).any() or np.isnan(outcome).any():
            raise DataError("score and outcome may not contain missing values; "
                            "drop them at ingestion")
        cut = self.cutoff
        if np.ndim(cut) == 0:
            object.__setattr__(self, "cutoff", float(cut))
        else:
            cut = _as_float_vector(cut, "cutoff")
            if cut.size != n:
                raise DataError("per-unit cutoff length differs from score")
            object.__setattr__(self, "cutoff", cut)
        if self.treatment_received is not None:
            d = _as_float_vector(self.treatment_received, "treatment_received")
            if d.size != n:
                raise DataError("treatment_received length differs from score")
            ok = np.isnan(d) | (d == 0) | (d == 1)
            if not ok.all():
                raise DataError("treatment_received must be binary (0/1)")
            object.__setattr__(self, "treatment_received", d)
        if self.score2 is not None:
            s2 = _as_float_vector(self.score2, "score2")
            if s2.size != n:
                raise DataError("score2 length differs from score")
            object.__setattr__(self, "score2", s2)
        if self.weight is not None:
            w = _as_float_vector(self.weight, "weight")
            if w.size != n or (w <= 0).any():
                raise DataError("weights must be positive and match sample length")
            object.__setattr__(self, "weight", w)
        covs = {}
        for name, z in dict(self.covariates).items():
            z = _as_float_vector(z, f"covariate {name!r}")
            if z.size != n:
                raise DataError(f"covariate {name!r} length differs from score")
            covs[name] = z
        object.__setattr__(self, "covariates", covs)

    @property
    def n(self) -> int:
        return self.score.size

    @property
    def cutoff_vector(self) -> np.ndarray:
        """Per-unit cutoffs, broadcasting a scalar cutoff."""
        if np.ndim(self.cutoff) == 0:
            return np.full(self.n, float(self.cutoff))
        return self.cutoff

    @property
    def scalar_cutoff(self) -> float:
        """The cutoff as a scalar; error if units face different cutoffs."""
        c = np.unique(self.cutoff_vector)
        if c.size != 1:
            raise AnalysisError("operation requires a single cutoff; "
                                "normalize_score first or analyze by cutoff")
        return float(c[0])

    @property
    def treatment(self) -> np.ndarray:
        """Assigned treatment T_i = 1(X_i >= C_i), derived, never stored."""
        return (self.score >= self.cutoff_vector).astype(int)

    @property
    def weights(self) -> np.ndarray:
        """Row weights, defaulting to one per row."""
        if self.weight is None:
            return np.ones(self.n)
        return self.weight

    def replace(self, **kw) -> "RDSample":
        return dataclasses.replace(self, **kw)

    def subset(self, mask) -> "RDSample":
        """Row-subset every aligned vector; mask is boolean or index array."""
        mask = np.asarray(mask)
        return RDSample(
            score=self.score[mask],
            outcome=self.outcome[mask],
            cutoff=self.cutoff if np.ndim(self.cutoff) == 0 else self.cutoff[mask],
            treatment_received=None if self.treatment_received is None
            else self.treatment_received[mask],
            covariates={k: v[mask] for k, v in self.covariates.items()},
            score2=None if self.score2 is None else self.score2[mask],
            weight=None if self.weight is None else self.weight[mask],
            n_dropped=self.n_dropped,
        )


@dataclass(frozen=True)
class Window:
    """Interval [lo, hi] around a cutoff with subsample counts.

    n_minus counts units with lo <= X < center, n_plus counts units with
    center <= X <= hi.  Endpoint ties are included (closed interval); the
    reference tooling does not document its own endpoint convention, so this
    one is fixed here and tested.
    """

    center: float
    lo: float
    hi: float
    n_minus: int
    n_plus: int

    def __post_init__(self):
        if not (self.lo <= self.center <= self.hi):
            raise ValueError("window must satisfy lo <= center <= hi")

    @property
    def half_length(self) -> float:
        return max(self.hi - self.center, self.center - self.lo)

    @property
    def n(self) -> int:
        return self.n_minus + self.n_plus

    @staticmethod
    def around(sample: RDSample, center: float, half_length: float) -> "Window":
        """Symmetric window [center - w, center + w] with recomputed counts."""
        if half_length < 0:
            raise ValueError("half_length must be nonnegative")
        return Window.from_bounds(sample, center - half_length,
                                  center + half_length, center)

    @staticmethod
    def from_bounds(sample: RDSample, lo: float, hi: float,
                    center: float | None = None) -> "Window":
        """Window with explicit bounds; center defaults to the sample cutoff."""
        if center is None:
            center = sample.scalar_cutoff
        x = sample.score
        n_minus = int(np.sum((x >= lo) & (x < center)))
        n_plus = int(np.sum((x >= center) & (x <= hi)))
        return Window(center=float(center), lo=float(lo), hi=float(hi),
                      n_minus=n_minus, n_plus=n_plus)

    def mask(self, sample: RDSample) -> np.ndarray:
        return (sample.score >= self.lo) & (sample.score <= self.hi)


def in_window(sample: RDSample, window: Window) -> RDSample:
    """Subsample of units whose score lies in the (closed) window."""
    mask = window.mask(sample)
    if not mask.any():
        raise AnalysisError(f"no observations in window "
                            f"[{window.lo:g}, {window.hi:g}]")
    sub = sample.subset(mask)
    recomputed = Window.from_bounds(sample, window.lo, window.hi, window.center)
    if (recomputed.n_minus, recomputed.n_plus) != (window.n_minus, window.n_plus):
        raise AnalysisError("window counts are stale; rebuild the window from "
                            "this sample")
    return sub


@dataclass(frozen=True)
class MassPointSummary:
    """Distinct-value census of a discrete score.

    per_value rows are (score value, count, treated share).  smallest_window
    is the pair (largest control mass point, smallest treated mass point),
    i.e. the adjacent values where assignment flips; None when the score is
    constant on one side of the cutoff, in which case ``degenerate`` explains
    why.
    """

    distinct_values: int
    per_value: list
    smallest_window: tuple | None
    degenerate: str | None = None

    @property
    def smallest_window_counts(self) -> tuple | None:
        """(control count, treated count) at the two flanking mass points."""
        if self.smallest_window is None:
            return None
        lo, hi = self.smallest_window
        n_lo = next(c for v, c, _ in self.per_value if v == lo)
        n_hi = next(c for v, c, _ in self.per_value if v == hi)
        return n_lo, n_hi


def load_csv(path, column_map, delimiter=",") -> RDSample:
    """Read a CSV into an :class:`RDSample`.

    Parameters
    ----------
    path : str or file-like
        UTF-8 CSV with a header row.
    column_map : dict
        Maps column name -> role.  Roles: score, outcome, treatment_received,
        cutoff, score2, covariate (covariate may appear many times).
    delimiter : str
        Field separator, default comma.

    Rows with missing score or outcome are dropped and counted in
    ``n_dropped``.  Missing covariate or take-up values are kept as NaN.
    Parsing is locale-independent: the decimal separator is always a dot.
    """
    for col, role in column_map.items():
        if role not in ROLES:
            raise ConfigError(f"unknown role {role!r} for column {col!r}; "
                              f"valid roles: {', '.join(ROLES)}")
    roles = {}
    for col, role in column_map.items():
        if role == "covariate":
            roles.setdefault("covariate", []).append(col)
        elif role in roles:
            raise ConfigError(f"role {role!r} mapped to both "
                              f"{roles[role]!r} and {col!r}")
        else:
            roles[role] = col
    if "score" not in roles or "outcome" not in roles:
        raise ConfigError("column_map must assign the score and outcome roles")

    try:
        raw = pd.read_csv(path, sep=delimiter, dtype=str, encoding="utf-8",
                          keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataError("no data rows") from None
    if raw.shape[0] == 0:
        raise DataError("no data rows")

    missing = [c for c in column_map if c not in raw.columns]
    if missing:
        raise ConfigError(f"missing column(s) {missing} in {path}; "
                          f"found {list(raw.columns)}")

    def parse(col):
        cells = raw[col].str.strip()
        is_na = cells.isin(NA_TOKENS) | cells.str.lower().isin(
            [t.lower() for t in NA_TOKENS if t])
        vals = pd.to_numeric(cells.where(~is_na), errors="coerce")
        bad = vals.isna() & ~is_na
        if bad.any():
            first = int(np.flatnonzero(bad.to_numpy())[0])
            # +2: one for the header row, one for 1-based numbering
            raise DataError(f"non-numeric value {cells.iloc[first]!r} in "
                            f"column {col!r} at line {first + 2}")
        return vals.to_numpy(dtype=float)

    score = parse(roles["score"])
    outcome = parse(roles["outcome"])
    keep = ~(np.isnan(score) | np.isnan(outcome))
    n_dropped = int((~keep).sum())
    if keep.sum() == 0:
        raise DataError("no data rows")

    kw = {}
    if "cutoff" in roles:
        cut = parse(roles["cutoff"])
        if np.isnan(cut[keep]).any():
            raise DataError(f"missing cutoff value in column {roles['cutoff']!r}")
        kw["cutoff"] = cut[keep]
    if "treatment_received" in roles:
        kw["treatment_received"] = parse(roles["treatment_received"])[keep]
    if "score2" in roles:
        s2 = parse(roles["score2"])
        if np.isnan(s2[keep]).any():
            raise DataError(f"missing score2 value in column {roles['score2']!r}")
        kw["score2"] = s2[keep]
    covs = {c: parse(c)[keep] for c in roles.get("covariate", [])}

    return RDSample(score=score[keep], outcome=outcome[keep],
                    covariates=covs, n_dropped=n_dropped, **kw)


def normalize_score(sample: RDSample) -> RDSample:
    """Center each score at its own cutoff: X~_i = X_i - C_i, cutoff 0."""
    return sample.replace(score=sample.score - sample.cutoff_vector, cutoff=0.0)


def flip_score(sample: RDSample, epsilon: float) -> RDSample:
    """Reflect the score around the cutoff so treatment lands above zero.

    Designs that treat units *below* the cutoff are converted to the 1(X >= c)
    convention by negating the centered score.  Units exactly at the cutoff
    would sit at zero after negation and be misassigned, so they are moved to
    ``-epsilon``, which keeps them on their original side of the rule.
    Applying the flip twice (with the same epsilon bookkeeping) restores the
    original assignment vector exactly.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    centered = sample.score - sample.cutoff_vector
    flipped = np.where(centered == 0, -float(epsilon), -centered)
    return sample.replace(score=flipped, cutoff=0.0)


def collapse_by_score(sample: RDSample) -> RDSample:
    """Aggregate rows sharing a score value into one weighted row.

    The collapsed outcome is the (weight-) mean outcome at each mass point and
    the new row weight is the total weight there, so collapsing is idempotent
    and weighted analyses on the collapsed data reproduce raw-data means.
    Covariates are averaged the same way (missing values excluded per value).
    Take-up indicators do not survive aggregation (a per-value share is not
    binary) and are dropped.
    """
    c = sample.scalar_cutoff  # collapse mixes rows, so cutoffs must agree
    w = sample.weights
    values, inverse = np.unique(sample.score, return_inverse=True)
    k = values.size
    wsum = np.bincount(inverse, weights=w, minlength=k)

    def agg(col):
        ok = ~np.isnan(col)
        denom = np.bincount(inverse[ok], weights=w[ok], minlength=k)
        tot = np.bincount(inverse[ok], weights=(w * col)[ok], minlength=k)
        with np.errstate(invalid="ignore"):
            return np.where(denom > 0, tot / np.where(denom > 0, denom, 1),
                            np.nan)

    return RDSample(
        score=values,
        outcome=agg(sample.outcome),
        cutoff=c,
        covariates={name: agg(z) for name, z in sample.covariates.items()},
        weight=wsum,
        n_dropped=sample.n_dropped,
    )


def mass_point_summary(sample: RDSample) -> MassPointSummary:
    """Census of distinct score values and the smallest analyzable window."""
    c = sample.scalar_cutoff
    t = sample.treatment
    values, inverse, counts = np.unique(sample.score, return_inverse=True,
                                        return_counts=True)
    shares = np.bincount(inverse, weights=t.astype(float),
                         minlength=values.size) / counts
    per_value = [(float(v), int(n), float(s))
                 for v, n, s in zip(values, counts, shares)]

    below = values[values < c]
    above = values[values >= c]
    if below.size == 0 or above.size == 0:
        side = "control" if below.size == 0 else "treated"
        return MassPointSummary(distinct_values=int(values.size),
                                per_value=per_value, smallest_window=None,
                                degenerate=f"no {side} mass point: score is "
                                           f"constant on one side of the cutoff")
    return MassPointSummary(distinct_values=int(values.size),
                            per_value=per_value,
                            smallest_window=(float(below.max()),
                                             float(above.min())))
