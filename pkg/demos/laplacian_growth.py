"""Laplacian growth from a point source on the sphere.

Injecting mass t at the north pole and sweeping against the volume form
gives a growing family of caps.  They are nested, have area exactly t and
agree with the stepwise composition of smaller balayages.
"""
import math

from balayage import build_sphere_latlong
from balayage.apps import incremental_growth, laplacian_growth, regions_agree

m = build_sphere_latlong(64, 128)
ts = [k * 4 * math.pi / 10 for k in range(1, 10)]
trace = laplacian_growth(m, (0.0, 0.0), None, ts)
steps = incremental_growth(m, (0.0, 0.0), None, ts)
for t, vol, mask, inc in zip(ts, trace.volumes, trace.masks, steps):
    radius = math.acos(1 - t / (2 * math.pi))
    print(f"t={t:6.3f}  area={vol:6.3f}  geodesic radius={radius:.3f}  "
          f"nodes={int(mask.sum()):5d}  matches stepwise={regions_agree(m, mask, inc)[0]}")
nested = all(not (x & ~y).any() for x, y in zip(trace.masks, trace.masks[1:]))
print("nested:", nested)
