"""Minimal continuity-based engine: local polynomial fits and RD plot data.

The bandwidth is always supplied by the user; there is no data-driven
selector here.  Intercept standard errors are heteroskedasticity-robust
(HC2), with an option to cluster by distinct score value for discrete
running variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import norm

from .errors import AnalysisError

KERNELS = ("uniform", "triangular")


def kernel_weights(u, kernel: str) -> np.ndarray:
    u = np.abs(np.asarray(u, dtype=float))
    if kernel == "uniform":
        return (u <= 1).astype(float)
    if kernel == "triangular":
        return np.maximum(1 - u, 0.0)
    raise ValueError(f"unknown kernel {kernel!r}; choose from {KERNELS}")


@dataclass(frozen=True)
class LocalFit:
    side: str
    order: int
    kernel: str
    bandwidth: float
    coefficients: np.ndarray   # intercept first, powers of (x - center)
    intercept_se: float
    n_used: int

    @property
    def intercept(self) -> float:
        return float(self.coefficients[0])


def _wls(x_centered, y, w, order, se_kind="hc2", clusters=None):
    """Weighted least squares of y on powers of x_centered.

    Returns (coefficients, intercept variance).  w are the combined kernel
    and row weights.  HC2 uses the WLS leverages; cluster uses the standard
    cluster-robust sandwich over the given groups.
    """
    X = np.vander(x_centered, N=order + 1, increasing=True)
    xtw = X.T * w
    A = xtw @ X
    try:
        Ainv = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise AnalysisError("rank-deficient design") from None
    beta = Ainv @ (xtw @ y)
    resid = y - X @ beta
    if se_kind == "cluster" and clusters is not None:
        scores = (X * (w * resid)[:, None])
        frame = pd.DataFrame(scores).groupby(np.asarray(clusters)).sum()
        meat = frame.to_numpy().T @ frame.to_numpy()
    else:
        leverage = np.einsum("ij,jk,ik->i", X, Ainv, X) * w
        adj = np.where(np.abs(resid) > 0,
                       resid ** 2 / np.maximum(1 - leverage, 1e-12), 0.0)
        meat = (X * (w ** 2 * adj)[:, None]).T @ X
    V = Ainv @ meat @ Ainv
    return beta, float(max(V[0, 0], 0.0))


def local_fit(score, outcome, cutoff: float, side: str, p: int = 1,
              kernel: str = "uniform", h: float = None, weights=None,
              cluster_by_score: bool = False) -> LocalFit:
    """Kernel-weighted polynomial fit on one side of the cutoff.

    side "left" uses units with cutoff - h <= X < cutoff, side "right" uses
    cutoff <= X <= cutoff + h; the reported intercept estimates the
    regression function at the cutoff.  Optional row weights (e.g. mass-point
    counts from collapsed data) multiply the kernel weights.
    """
    if h is None or h <= 0:
        raise ValueError("a positive bandwidth h is required")
    if p < 0:
        raise ValueError("polynomial order must be nonnegative")
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    x = np.asarray(score, dtype=float)
    y = np.asarray(outcome, dtype=float)
    base = np.ones_like(y) if weights is None else np.asarray(weights, float)
    if side == "left":
        mask = (x < cutoff) & (x >= cutoff - h)
    else:
        mask = (x >= cutoff) & (x <= cutoff + h)
    x, y, base = x[mask], y[mask], base[mask]
    n_distinct = np.unique(x).size
    if n_distinct < p + 1:
        raise AnalysisError(
            f"only {n_distinct} distinct score value(s) on the {side} side "
            f"within h={h:g}; order {p} needs at least {p + 1} (mass points "
            f"limit the effective sample)")
    xc = x - cutoff
    w = kernel_weights(xc / h, kernel) * base
    if np.sum(w > 0) == 0:
        raise AnalysisError(f"no usable observations on the {side} side")
    beta, v00 = _wls(xc, y, w, p, se_kind="cluster" if cluster_by_score
                     else "hc2", clusters=x if cluster_by_score else None)
    return LocalFit(side=side, order=int(p), kernel=kernel,
                    bandwidth=float(h), coefficients=beta,
                    intercept_se=float(np.sqrt(v00)), n_used=int(mask.sum()))


def sharp_effect(score, outcome, cutoff: float, p: int = 1,
                 kernel: str = "uniform", h: float = None, weights=None,
                 cluster_by_score: bool = False) -> tuple:
    """Boundary jump: right intercept minus left intercept.

    Returns (estimate, se, p_value) with the two intercept variances summed
    and a two-sided Gaussian p-value.
    """
    left = local_fit(score, outcome, cutoff, "left", p, kernel, h,
                     weights=weights, cluster_by_score=cluster_by_score)
    right = local_fit(score, outcome, cutoff, "right", p, kernel, h,
                      weights=weights, cluster_by_score=cluster_by_score)
    est = right.intercept - left.intercept
    se = float(np.hypot(left.intercept_se, right.intercept_se))
    if se == 0:
        pval = 1.0 if est == 0 else 0.0
    else:
        pval = float(2 * norm.cdf(-abs(est) / se))
    return float(est), se, pval


@dataclass(frozen=True)
class RDPlotData:
    bins: pd.DataFrame            # side, bin_center, bin_mean, n_in_bin
    fit_left: np.ndarray          # ascending coefficients in (x - cutoff)
    fit_right: np.ndarray
    cutoff: float
    global_p: int
    n_merged: int = 0

    def to_frame(self) -> pd.DataFrame:
        return self.bins


def _bin_side(x, y, lo, hi, n_bins, rule):
    """Bin means over [lo, hi); returns (centers, means, counts, merged)."""
    if rule == "evenly_spaced":
        edges = np.linspace(lo, hi, n_bins + 1)
    elif rule == "quantile":
        qs = np.quantile(x, np.linspace(0, 1, n_bins + 1))
        qs[0], qs[-1] = lo, hi
        edges = np.unique(qs)
    else:
        raise ValueError("bin_rule must be 'evenly_spaced' or 'quantile'")
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0,
                  len(edges) - 2)
    counts = np.bincount(idx, minlength=len(edges) - 1)
    merged = int(np.sum(counts == 0))
    # merge empty bins into the next nonempty neighbor (previous for the tail)
    keep_edges = [edges[0]]
    for j in range(len(counts)):
        if counts[j] > 0 or j == len(counts) - 1:
            keep_edges.append(edges[j + 1])
    edges = np.asarray(keep_edges)
    if edges.size < 2:
        raise AnalysisError("empty side; cannot bin")
    idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0,
                  edges.size - 2)
    counts = np.bincount(idx, minlength=edges.size - 1)
    sums = np.bincount(idx, weights=y, minlength=edges.size - 1)
    nonempty = counts > 0
    centers = (edges[:-1] + edges[1:]) / 2
    return centers[nonempty], sums[nonempty] / counts[nonempty], \
        counts[nonempty], merged


def rdplot_data(score, outcome, cutoff: float, n_bins_left: int = 20,
                n_bins_right: int = 20, bin_rule: str = "evenly_spaced",
                global_p: int = 3) -> RDPlotData:
    """Binned means per side plus per-side global polynomial fits."""
    if n_bins_left < 1 or n_bins_right < 1:
        raise ValueError("need at least one bin per side")
    x = np.asarray(score, dtype=float)
    y = np.asarray(outcome, dtype=float)
    left = x < cutoff
    right = ~left
    if left.sum() == 0 or right.sum() == 0:
        raise AnalysisError("empty group: both sides of the cutoff need "
                            "observations")
    rows = []
    merged = 0
    cl, ml, nl, m = _bin_side(x[left], y[left], x[left].min(), cutoff,
                              n_bins_left, bin_rule)
    merged += m
    rows += [("left", c, v, int(n)) for c, v, n in zip(cl, ml, nl)]
    cr, mr, nr, m = _bin_side(x[right], y[right], cutoff,
                              np.nextafter(x[right].max(), np.inf),
                              n_bins_right, bin_rule)
    merged += m
    rows += [("right", c, v, int(n)) for c, v, n in zip(cr, mr, nr)]

    def poly(side_mask):
        xs = x[side_mask] - cutoff
        if np.unique(xs).size < global_p + 1:
            raise AnalysisError(
                f"fewer than {global_p + 1} distinct score values on one "
                f"side; lower the global polynomial order")
        return np.polynomial.polynomial.polyfit(xs, y[side_mask], global_p)

    return RDPlotData(
        bins=pd.DataFrame(rows, columns=["side", "bin_center", "bin_mean",
                                         "n_in_bin"]),
        fit_left=poly(left), fit_right=poly(right), cutoff=float(cutoff),
        global_p=int(global_p), n_merged=merged)


def render_svg(plot: RDPlotData, path, width=640, height=440, margin=50):
    """Write a static SVG of the RD plot: bin dots, global fits, cutoff line.

    Deliberately dependency-free; meant for batch consumption, not a UI.
    """
    bins = plot.bins
    xs = bins["bin_center"].to_numpy()
    ys = bins["bin_mean"].to_numpy()
    grid_l = np.linspace(xs.min(), plot.cutoff, 60)
    grid_r = np.linspace(plot.cutoff, xs.max(), 60)
    fit_l = np.polynomial.polynomial.polyval(grid_l - plot.cutoff,
                                             plot.fit_left)
    fit_r = np.polynomial.polynomial.polyval(grid_r - plot.cutoff,
                                             plot.fit_right)
    all_y = np.concatenate([ys, fit_l, fit_r])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def sx(v):
        return margin + (v - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{sx(plot.cutoff):.1f}" y1="{margin}" '
             f'x2="{sx(plot.cutoff):.1f}" y2="{height - margin}" '
             f'stroke="gray" stroke-dasharray="4"/>']
    for grid, fit in ((grid_l, fit_l), (grid_r, fit_r)):
        pts = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(grid, fit))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="black" '
                     f'stroke-width="1.5"/>')
    for a, b in zip(xs, ys):
        parts.append(f'<circle cx="{sx(a):.1f}" cy="{sy(b):.1f}" r="3" '
                     f'fill="steelblue"/>')
    parts.append(f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
                 f'y2="{height - margin}" stroke="black"/>')
    parts.append(f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
                 f'y2="{height - margin}" stroke="black"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
