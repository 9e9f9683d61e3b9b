"""Reduce bivariate-score designs to scalar analyses via signed distances.

Units carry a two-dimensional score (x1, x2) -- geographic designs use
(latitude, longitude) in degrees -- and a treatment-area indicator.  The
distance to a chosen boundary point, or the shortest distance to the whole
boundary, signed positive for treated units, becomes a scalar running
variable with cutoff zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .core import RDSample
from .errors import AnalysisError, DataError

EARTH_RADIUS_KM = 6371.0

METRICS = ("euclidean", "chordal", "great_circle")


@dataclass(frozen=True)
class Metric:
    """Distance metric on the score plane or the sphere.

    Spherical metrics interpret points as (latitude, longitude) in degrees on
    a sphere of the given radius (kilometers by default).  great_circle is
    the shortest arc; chordal is the straight chord through the sphere, so
    chordal <= great_circle always.
    """

    kind: str = "euclidean"
    radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if self.kind not in METRICS:
            raise ValueError(f"unknown metric {self.kind!r}; choose from "
                             f"{METRICS}")
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")

    @property
    def spherical(self) -> bool:
        return self.kind != "euclidean"


def _check_latitude(points):
    lat = np.asarray(points, dtype=float)[..., 0]
    if np.any(np.abs(lat) > 90):
        raise DataError("invalid latitude: must lie in [-90, 90] degrees")


def _central_angle(p, q):
    """Great-circle central angle between (lat, lon) points in degrees."""
    p = np.radians(np.asarray(p, dtype=float))
    q = np.radians(np.asarray(q, dtype=float))
    dphi = q[..., 0] - p[..., 0]
    dlmb = q[..., 1] - p[..., 1]
    a = np.sin(dphi / 2) ** 2 + np.cos(p[..., 0]) * np.cos(q[..., 0]) \
        * np.sin(dlmb / 2) ** 2
    return 2 * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def distance(p, q, metric: Metric = Metric()) -> float | np.ndarray:
    """Distance between points (broadcasting over leading dimensions)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise DataError("coordinates must be finite")
    if metric.kind == "euclidean":
        d = np.sqrt(((p - q) ** 2).sum(axis=-1))
    else:
        _check_latitude(p)
        _check_latitude(q)
        sigma = _central_angle(p, q)
        if metric.kind == "great_circle":
            d = metric.radius * sigma
        else:
            d = 2 * metric.radius * np.sin(sigma / 2)
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class BoundarySpec:
    """Ordered boundary points (vertices of a polyline) plus a metric."""

    points: np.ndarray
    metric: Metric = Metric()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise DataError("boundary needs an (m, 2) array with m >= 1")
        if not np.all(np.isfinite(pts)):
            raise DataError("boundary coordinates must be finite")
        if self.metric.spherical:
            _check_latitude(pts)
            if np.any(np.abs(pts[:, 1]) > 180):
                raise DataError("invalid longitude: must lie in "
                                "[-180, 180] degrees")
        object.__setattr__(self, "points", pts)

    @staticmethod
    def from_csv(path, metric: Metric = Metric(),
                 delimiter: str = ",") -> "BoundarySpec":
        """Boundary CSV with columns (lat, lon) or (x1, x2)."""
        frame = pd.read_csv(path, sep=delimiter)
        cols = [c.strip().lower() for c in frame.columns]
        frame.columns = cols
        if {"lat", "lon"} <= set(cols):
            pts = frame[["lat", "lon"]].to_numpy(dtype=float)
        elif {"x1", "x2"} <= set(cols):
            pts = frame[["x1", "x2"]].to_numpy(dtype=float)
        else:
            raise DataError("boundary CSV needs columns (lat, lon) or "
                            "(x1, x2)")
        return BoundarySpec(points=pts, metric=metric)


@dataclass(frozen=True)
class SignedDistanceSample:
    """Scalar reduction of a bivariate-score sample.

    distances[i] is positive (metric distance) for treated units and negative
    for control units.  Units exactly on the boundary keep their recorded
    assignment: the sign follows the assignment, not the geometry.
    """

    base: RDSample
    distances: np.ndarray
    assign: np.ndarray
    target: str
    min_treated: float = field(init=False)
    min_control: float = field(init=False)

    def __post_init__(self):
        d = np.abs(np.asarray(self.distances, dtype=float))
        a = np.asarray(self.assign)
        object.__setattr__(self, "min_treated",
                           float(d[a == 1].min()) if np.any(a == 1)
                           else float("nan"))
        object.__setattr__(self, "min_control",
                           float(d[a == 0].min()) if np.any(a == 0)
                           else float("nan"))

    def to_sample(self) -> RDSample:
        """RDSample with the signed distance as score and cutoff zero.

        A control unit at distance exactly zero would sit on the cutoff and
        be misread as treated by 1(score >= 0); it is nudged to the largest
        negative float below zero so downstream analyses honor the recorded
        assignment.
        """
        score = np.where(self.assign == 1, np.abs(self.distances),
                         -np.abs(self.distances))
        on_boundary = (self.assign == 0) & (score == 0)
        score = np.where(on_boundary, np.nextafter(0.0, -1.0), score)
        return self.base.replace(score=score, cutoff=0.0, score2=None)


def _points(sample: RDSample) -> np.ndarray:
    if sample.score2 is None:
        raise AnalysisError("multi-score analysis needs a second score "
                            "dimension (role score2)")
    return np.column_stack([sample.score, sample.score2])


def _assign_vector(sample, assign) -> np.ndarray:
    if callable(assign):
        a = np.asarray([assign(p) for p in _points(sample)])
    else:
        a = np.asarray(assign)
    if a.size != sample.n or not np.isin(a, (0, 1)).all():
        raise AnalysisError("assignment indicator must be binary and cover "
                            "all units")
    return a.astype(int)


def signed_distance_to_point(sample: RDSample, b, assign,
                             metric: Metric = Metric()
                             ) -> SignedDistanceSample:
    """Signed distance from every unit to one boundary point."""
    b = np.asarray(b, dtype=float)
    if b.shape != (2,):
        raise ValueError("boundary point must be a 2-vector")
    pts = _points(sample)
    a = _assign_vector(sample, assign)
    d = distance(pts, b, metric)
    return SignedDistanceSample(base=sample, distances=d * (2 * a - 1),
                                assign=a, target=f"point ({b[0]:g}, {b[1]:g})")


def _to_unit_sphere(points):
    lat = np.radians(points[..., 0])
    lon = np.radians(points[..., 1])
    return np.stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon),
                     np.sin(lat)], axis=-1)


def _from_unit_sphere(v):
    lat = np.degrees(np.arcsin(np.clip(v[..., 2], -1.0, 1.0)))
    lon = np.degrees(np.arctan2(v[..., 1], v[..., 0]))
    return np.stack([lat, lon], axis=-1)


def _segment_candidates(units, b0, b1, metric):
    """Distance from each unit to segment (b0, b1) via clamped projection.

    Euclidean segments are projected exactly.  Spherical segments are
    projected through the 3-d chord between the endpoints and renormalized to
    the sphere, an accurate approximation for the short segments typical of
    digitized boundaries.
    """
    if not metric.spherical:
        seg = b1 - b0
        denom = float(seg @ seg)
        if denom == 0:
            return distance(units, b0, metric)
        t = np.clip(((units - b0) @ seg) / denom, 0.0, 1.0)
        proj = b0 + t[:, None] * seg
        return np.sqrt(((units - proj) ** 2).sum(axis=1))
    u3 = _to_unit_sphere(units)
    a3 = _to_unit_sphere(b0)
    c3 = _to_unit_sphere(b1)
    seg = c3 - a3
    denom = float(seg @ seg)
    if denom == 0:
        return distance(units, b0, metric)
    t = np.clip(((u3 - a3) @ seg) / denom, 0.0, 1.0)
    proj = a3 + t[:, None] * seg
    norms = np.linalg.norm(proj, axis=1)
    proj = proj / np.where(norms == 0, 1.0, norms)[:, None]
    return distance(units, _from_unit_sphere(proj), metric)


def boundary_distance(points, boundary: BoundarySpec,
                      densify_step: float | None = None) -> np.ndarray:
    """Shortest distance from each point to the boundary polyline.

    The minimum runs over the boundary vertices and, for every segment, the
    clamped projection of each unit onto it; densify_step optionally adds
    sampled points every `step` along each segment (in coordinate space).
    """
    points = np.asarray(points, dtype=float)
    metric = boundary.metric
    verts = boundary.points
    best = np.min(np.stack([distance(points, v, metric) for v in verts]),
                  axis=0) if verts.shape[0] > 1 \
        else distance(points, verts[0], metric)
    best = np.atleast_1d(best)
    for b0, b1 in zip(verts[:-1], verts[1:]):
        best = np.minimum(best, _segment_candidates(points, b0, b1, metric))
        if densify_step is not None and densify_step > 0:
            length = float(np.sqrt(((b1 - b0) ** 2).sum()))
            k = int(np.ceil(length / densify_step))
            for s in np.linspace(0, 1, max(k, 1) + 1):
                best = np.minimum(best,
                                  distance(points, b0 + s * (b1 - b0),
                                           metric))
    return best


def signed_distance_to_boundary(sample: RDSample, boundary: BoundarySpec,
                                assign, densify_step: float | None = None
                                ) -> SignedDistanceSample:
    """Signed shortest distance from every unit to the whole boundary."""
    pts = _points(sample)
    a = _assign_vector(sample, assign)
    d = boundary_distance(pts, boundary, densify_step=densify_step)
    return SignedDistanceSample(base=sample, distances=d * (2 * a - 1),
                                assign=a,
                                target=f"boundary ({boundary.points.shape[0]} "
                                       f"points)")


def boundary_grid_report(sample: RDSample, boundary: BoundarySpec, assign,
                         radius: float, min_count: int = 10) -> pd.DataFrame:
    """Treated/control counts within `radius` of each boundary point.

    Points where either count falls below min_count are flagged; analyses at
    flagged points extrapolate heavily and deserve suspicion.  Counts use a
    strict inequality, so radius zero reports zero everywhere.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    pts = _points(sample)
    a = _assign_vector(sample, assign)
    rows = []
    for j, b in enumerate(boundary.points):
        d = distance(pts, b, boundary.metric)
        close = d < radius
        n_t = int(np.sum(close & (a == 1)))
        n_c = int(np.sum(close & (a == 0)))
        rows.append({"point": j, "coord1": float(b[0]), "coord2": float(b[1]),
                     "n_treated": n_t, "n_control": n_c,
                     "flagged": bool(n_t < min_count or n_c < min_count)})
    return pd.DataFrame(rows)
