"""Fisherian randomization inference inside a window.

Tests of sharp null hypotheses are computed over the assumed assignment
distribution: exhaustively when the number of assignments is small, otherwise
by seeded Monte Carlo.  All Monte Carlo draws come from a Philox counter
stream keyed by the seed, with replicate r consuming counter block r, so
results are bit-identical regardless of how evaluation is scheduled across
threads.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import AnalysisError
from .stats import StatSpec, bernoulli_weights, diff_means, hotelling_stat, \
    ks_stat, rank_sum_stat

DEFAULT_EXHAUST_THRESHOLD = 100_000
DEFAULT_N_SIMS = 1_000


@dataclass(frozen=True)
class Mechanism:
    """Assumed assignment distribution inside the window.

    fixed_margins: every assignment with exactly n_plus treated units is
    equally likely.  bernoulli: units are assigned independently with success
    probability p (scalar or per-unit), strictly inside (0, 1).
    """

    kind: str
    n_plus: int | None = None
    p: float | np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "fixed_margins":
            if self.n_plus is None or self.n_plus <= 0:
                raise ValueError("fixed_margins needs 0 < n_plus < N")
        elif self.kind == "bernoulli":
            p = np.asarray(self.p, dtype=float)
            if self.p is None or np.any(p <= 0) or np.any(p >= 1):
                raise ValueError("bernoulli probabilities must lie in (0, 1)")
        else:
            raise ValueError(f"unknown mechanism {self.kind!r}")

    @staticmethod
    def fixed_margins(n_plus: int) -> "Mechanism":
        return Mechanism(kind="fixed_margins", n_plus=int(n_plus))

    @staticmethod
    def bernoulli(p) -> "Mechanism":
        return Mechanism(kind="bernoulli", p=p)

    @staticmethod
    def from_observed(T) -> "Mechanism":
        """Fixed margins with the observed treated count."""
        return Mechanism.fixed_margins(int(np.asarray(T).sum()))

    def probabilities(self, n) -> np.ndarray:
        p = np.asarray(self.p, dtype=float)
        if p.ndim == 0:
            return np.full(n, float(p))
        if p.size != n:
            raise ValueError("per-unit probabilities do not match the window "
                             "sample size")
        return p


@dataclass(frozen=True)
class FisherResult:
    """Outcome of one randomization test."""

    stat_obs: float
    p_value: float
    method: str            # "exhaustive" or "monte_carlo"
    n_draws: int
    seed: int | None
    null_tau: float
    n_redrawn: int = 0
    note: str = ""


@dataclass(frozen=True)
class GridCI:
    """Confidence set from inverting constant-effect sharp null tests."""

    grid: np.ndarray
    alpha: float
    p_values: np.ndarray
    accepted: np.ndarray = field(init=False)
    interval: tuple | None = field(init=False)
    contiguous: bool = field(init=False)

    def __post_init__(self):
        keep = self.p_values > self.alpha
        accepted = self.grid[keep]
        object.__setattr__(self, "accepted", accepted)
        if accepted.size == 0:
            object.__setattr__(self, "interval", None)
            object.__setattr__(self, "contiguous", True)
        else:
            idx = np.flatnonzero(keep)
            object.__setattr__(self, "interval",
                               (float(accepted.min()), float(accepted.max())))
            object.__setattr__(self, "contiguous",
                               bool(idx.size == idx[-1] - idx[0] + 1))


def count_assignments(mech: Mechanism, n: int) -> int:
    """Size of the assignment space: C(n, n_plus) or 2**n."""
    if mech.kind == "fixed_margins":
        if not 0 < mech.n_plus < n:
            raise ValueError("fixed_margins needs 0 < n_plus < N")
        return math.comb(n, mech.n_plus)
    return 2 ** n


def _stat_value(t, y, spec: StatSpec) -> float:
    if spec.kind == "diff_means":
        return diff_means(t, y, weights=spec.weights)
    if spec.kind == "ks":
        return ks_stat(t, y)
    if spec.kind == "rank_sum":
        return rank_sum_stat(t, y)
    if spec.kind == "hotelling":
        return hotelling_stat(t, y)
    raise AnalysisError("the TSLS statistic has no finite-sample p-value "
                        "here; use the fuzzy module")


def _tail_key(values, spec: StatSpec):
    values = np.asarray(values, dtype=float)
    if spec.sidedness == "two_sided" and spec.signed:
        return np.abs(values)
    return values


def _exceeds(stat_values, stat_obs, spec: StatSpec) -> np.ndarray:
    """Tail indicator with a 1e-12 relative slack.

    Assignments mathematically tied with the observed one can differ from it
    by a few ulps when the statistic is evaluated through a vectorized path;
    the slack keeps them in the count (erring, if at all, conservative).
    """
    if spec.sidedness == "left":
        slack = 1e-12 * max(1.0, abs(float(stat_obs)))
        return np.asarray(stat_values) <= stat_obs + slack
    key_obs = float(_tail_key(stat_obs, spec))
    slack = 1e-12 * max(1.0, abs(key_obs))
    return _tail_key(stat_values, spec) >= key_obs - slack


def _eval_rows(A, y, spec: StatSpec, n_threads: int) -> np.ndarray:
    """Statistic for every assignment row of A (rows x units)."""
    if spec.kind == "diff_means":
        w = np.ones(A.shape[1]) if spec.weights is None else spec.weights
        wy = w * y
        n_plus = A.sum(axis=1)
        n_minus = A.shape[1] - n_plus
        return (A @ wy) / n_plus - ((1 - A) @ wy) / n_minus

    def run(rows):
        return [_stat_value(A[r], y, spec) for r in rows]

    rows = range(A.shape[0])
    if n_threads <= 1 or A.shape[0] < 2 * n_threads:
        return np.asarray(run(rows), dtype=float)
    chunks = np.array_split(np.arange(A.shape[0]), n_threads)
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        parts = list(pool.map(run, chunks))
    return np.asarray([v for part in parts for v in part], dtype=float)


def _enumerate_fixed_margins(n, n_plus) -> np.ndarray:
    combos = np.array(list(combinations(range(n), n_plus)), dtype=np.intp)
    A = np.zeros((combos.shape[0], n), dtype=np.int8)
    A[np.arange(combos.shape[0])[:, None], combos] = 1
    return A


def _enumerate_bernoulli(n) -> np.ndarray:
    m = np.arange(2 ** n, dtype=np.uint64)[:, None]
    return ((m >> np.arange(n, dtype=np.uint64)) & 1).astype(np.int8)


def _rng(seed) -> np.random.Generator:
    if seed is None:
        raise ValueError("a seed is required for Monte Carlo inference")
    if not 0 <= int(seed) < 2 ** 64:
        raise ValueError("seed must be an integer in [0, 2**64)")
    return np.random.Generator(np.random.Philox(key=int(seed)))


def _draw_assignments(mech, n, n_sims, seed):
    """Materialize all Monte Carlo assignments up front.

    Returns (A, n_redrawn).  Bernoulli draws that leave a group empty are
    rejected and redrawn from the continuation of the same counter stream.
    """
    gen = _rng(seed)
    if mech.kind == "fixed_margins":
        u = gen.random((n_sims, n))
        order = np.argsort(u, axis=1)
        A = np.zeros((n_sims, n), dtype=np.int8)
        A[np.arange(n_sims)[:, None], order[:, :mech.n_plus]] = 1
        return A, 0
    p = mech.probabilities(n)
    A = (gen.random((n_sims, n)) < p).astype(np.int8)
    n_redrawn = 0
    bad = np.flatnonzero((A.sum(axis=1) == 0) | (A.sum(axis=1) == n))
    while bad.size:
        n_redrawn += bad.size
        A[bad] = (gen.random((bad.size, n)) < p).astype(np.int8)
        sums = A[bad].sum(axis=1)
        bad = bad[(sums == 0) | (sums == n)]
    return A, int(n_redrawn)


def fisher_test(T, Y, mech: Mechanism | None = None,
                stat: StatSpec | None = None, null_tau: float = 0.0,
                n_sims: int = DEFAULT_N_SIMS, seed: int | None = None,
                exhaust_threshold: int = DEFAULT_EXHAUST_THRESHOLD,
                n_threads: int = 1) -> FisherResult:
    """Randomization test of the constant-effect sharp null.

    Outcomes are adjusted to Y_i - T_i * null_tau, the statistic is computed
    for the observed assignment, and its tail probability is taken over the
    assignment distribution: exhaustive enumeration when the assignment space
    has at most exhaust_threshold elements, otherwise n_sims seeded draws with
    the add-one estimator (1 + #{S >= S_obs}) / (1 + n_sims).

    Under an exhaustive Bernoulli enumeration, assignments that leave a group
    empty carry no defined statistic; their probability mass is excluded and
    the rest renormalized, matching the redraw rule used for Monte Carlo.
    """
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    n = T.size
    stat = stat or StatSpec()
    mech = mech or Mechanism.from_observed(T)
    if mech.kind == "fixed_margins" and not 0 < mech.n_plus < n:
        raise AnalysisError("fixed-margins mechanism needs treated and "
                            "control units in the window")

    y_adj = Y - T * float(null_tau) if Y.ndim == 1 else Y
    s_obs = _stat_value(T, y_adj, stat)

    n_total = count_assignments(mech, n)
    if n_total <= exhaust_threshold:
        if mech.kind == "fixed_margins":
            A = _enumerate_fixed_margins(n, mech.n_plus)
            values = _eval_rows(A, y_adj, stat, n_threads)
            p = float(np.mean(_exceeds(values, s_obs, stat)))
            return FisherResult(stat_obs=float(s_obs), p_value=p,
                                method="exhaustive", n_draws=int(n_total),
                                seed=seed, null_tau=float(null_tau))
        A = _enumerate_bernoulli(n)
        probs = mech.probabilities(n)
        logw = A @ np.log(probs) + (1 - A) @ np.log1p(-probs)
        keep = (A.sum(axis=1) > 0) & (A.sum(axis=1) < n)
        excluded = float(np.exp(logw[~keep]).sum())
        A, w = A[keep], np.exp(logw[keep])
        values = _eval_rows(A, y_adj, stat, n_threads)
        p = float(w[_exceeds(values, s_obs, stat)].sum() / w.sum())
        note = (f"excluded degenerate assignment mass {excluded:.3g}"
                if excluded > 0 else "")
        return FisherResult(stat_obs=float(s_obs), p_value=p,
                            method="exhaustive", n_draws=int(A.shape[0]),
                            seed=seed, null_tau=float(null_tau), note=note)

    if n_sims < 1:
        raise ValueError("n_sims must be at least 1")
    A, n_redrawn = _draw_assignments(mech, n, n_sims, seed)
    values = _eval_rows(A, y_adj, stat, n_threads)
    k = int(np.sum(_exceeds(values, s_obs, stat)))
    p = (1 + k) / (1 + n_sims)
    return FisherResult(stat_obs=float(s_obs), p_value=float(p),
                        method="monte_carlo", n_draws=int(n_sims), seed=seed,
                        null_tau=float(null_tau), n_redrawn=n_redrawn)


def invert_ci(T, Y, mech: Mechanism | None = None,
              stat: StatSpec | None = None, grid=None, alpha: float = 0.05,
              n_sims: int = DEFAULT_N_SIMS, seed: int | None = None,
              exhaust_threshold: int = DEFAULT_EXHAUST_THRESHOLD,
              n_threads: int = 1) -> GridCI:
    """Confidence set of constant effects whose sharp null is not rejected.

    Every grid point is tested against the same assignment draws (shared seed
    derivation), so the accepted sets are nested across levels by
    construction.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly ascending")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    T = np.asarray(T)
    Y = np.asarray(Y, dtype=float)
    n = T.size
    stat = stat or StatSpec()
    mech = mech or Mechanism.from_observed(T)

    n_total = count_assignments(mech, n)
    exhaustive = n_total <= exhaust_threshold
    if exhaustive:
        if mech.kind == "fixed_margins":
            A = _enumerate_fixed_margins(n, mech.n_plus)
            w = np.ones(A.shape[0])
        else:
            A = _enumerate_bernoulli(n)
            probs = mech.probabilities(n)
            logw = A @ np.log(probs) + (1 - A) @ np.log1p(-probs)
            keep = (A.sum(axis=1) > 0) & (A.sum(axis=1) < n)
            A, w = A[keep], np.exp(logw[keep])
    else:
        A, _ = _draw_assignments(mech, n, n_sims, seed)
        w = None

    p_values = np.empty(grid.size)
    for i, tau0 in enumerate(grid):
        y_adj = Y - T * tau0
        s_obs = _stat_value(T, y_adj, stat)
        values = _eval_rows(A, y_adj, stat, n_threads)
        hits = _exceeds(values, s_obs, stat)
        if exhaustive:
            p_values[i] = float(w[hits].sum() / w.sum())
        else:
            p_values[i] = (1 + int(hits.sum())) / (1 + A.shape[0])

    ci = GridCI(grid=grid, alpha=float(alpha), p_values=p_values)
    if ci.accepted.size == 0:
        warnings.warn("all grid points rejected; the grid may not bracket "
                      "the effect", stacklevel=2)
    return ci


def point_estimate(T, Y, mech: Mechanism | None = None) -> float:
    """Difference in means with mechanism-appropriate weights.

    Unit weights under fixed margins; unbiasedness weights under Bernoulli.
    """
    T = np.asarray(T)
    mech = mech or Mechanism.from_observed(T)
    if mech.kind == "bernoulli":
        return diff_means(T, Y, weights=bernoulli_weights(
            T, mech.probabilities(T.size)))
    return diff_means(T, Y)
