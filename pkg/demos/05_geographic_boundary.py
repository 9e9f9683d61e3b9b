"""Multi-score and geographic designs: reducing two scores to one.

Part A uses a program assigned when both of two test scores clear their
cutoffs; the boundary is the corner of the treated quadrant.  Part B is a
geographic design with latitude/longitude coordinates and a digitized
border, where spherical metrics matter.
"""

import numpy as np

import rdlocal as rd

# ---------------------------------------------------------------- part A
rng = np.random.default_rng(14)
n = 8000
s1 = rng.uniform(-50, 50, n)
s2 = rng.uniform(-30, 30, n)
a = ((s1 >= 0) & (s2 >= 0)).astype(int)
enroll = (rng.random(n) < 0.45 + 0.25 * a).astype(float)
sample = rd.RDSample(score=s1, outcome=enroll, score2=s2)

corner = rd.BoundarySpec(points=[[0.0, 60.0], [0.0, 0.0], [60.0, 0.0]])

# location-specific effect at a boundary point with plenty of neighbors
at_point = rd.signed_distance_to_point(sample, (20.0, 0.0), a)
scalar = at_point.to_sample()
win = rd.Window.around(scalar, 0.0, 3.0)
sub = rd.in_window(scalar, win)
res = rd.neyman_test(sub.treatment, sub.outcome)
print(f"effect at boundary point (20, 0): {res.estimate:.3f} "
      f"(truth 0.25), p {res.p_value:.4f}, n {sub.n}")

# pooled effect along the whole boundary via nearest distance
nearest = rd.signed_distance_to_boundary(sample, corner, a)
scalar = nearest.to_sample()
sub = rd.in_window(scalar, rd.Window.around(scalar, 0.0, 3.0))
res = rd.neyman_test(sub.treatment, sub.outcome)
print(f"pooled nearest-distance effect  : {res.estimate:.3f}, "
      f"p {res.p_value:.4f}, n {sub.n}")

# choose analysis points where both sides actually have neighbors
report = rd.boundary_grid_report(sample, corner, a, radius=5.0,
                                 min_count=30)
print("\nboundary density report (radius 5):")
print(report.to_string(index=False))

# ---------------------------------------------------------------- part B
# a border town: units scattered around a short north-south street that
# separates two media markets
m = 3000
lat = rng.uniform(40.30, 40.36, m)
lon = rng.uniform(-74.64, -74.58, m)
in_west = (lon < -74.61).astype(int)
turnout = (rng.random(m) < 0.52 + 0.0 * in_west).astype(float)  # null effect
geo = rd.RDSample(score=lat, outcome=turnout, score2=lon)

border = rd.BoundarySpec(
    points=[[40.30, -74.61], [40.33, -74.61], [40.36, -74.61]],
    metric=rd.Metric("chordal"))

sds = rd.signed_distance_to_boundary(geo, border, in_west)
print(f"\nclosest treated unit : {sds.min_treated * 1000:.1f} m from the "
      f"border")
print(f"closest control unit : {sds.min_control * 1000:.1f} m")

scalar = sds.to_sample()
sub = rd.in_window(scalar, rd.Window.around(scalar, 0.0, 0.5))  # +/- 500 m
res = rd.neyman_test(sub.treatment, sub.outcome)
print(f"border effect on turnout: {res.estimate:.3f} (truth 0), "
      f"p {res.p_value:.4f}")

# metric choices: chordal never exceeds the great-circle arc
p1, p2 = (40.32489, -74.61789), (40.32037, -74.60335)
for kind in ("euclidean", "chordal", "great_circle"):
    d = rd.distance(p1, p2, rd.Metric(kind))
    unit = "deg" if kind == "euclidean" else "km"
    print(f"  {kind:>12}: {d:.6f} {unit}")
