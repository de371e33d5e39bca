"""Weighted equilibrium on the sphere.

The external field Q = G(., north) + G(., a) pushes charge away from two
points.  With total mass t vol(S^2) the equilibrium measure is the volume
form on the complement of two holes, and Q + U^mu is constant (the modified
Robin constant) on its support.
"""
import math

from balayage import build_sphere_latlong
from balayage.apps import components, two_point_field, weighted_equilibrium

m = build_sphere_latlong(64, 64)
a = (3 * math.pi / 4, 0.0)
Q = two_point_field(m, a)
for t in (0.2, 0.3, 0.5):
    rep = weighted_equilibrium(m, Q, t)
    holes = components(m, ~rep.support_mask)
    print(f"t={t}  mass={rep.mu.total:.4f}  Robin constant={rep.robin_constant:+.5f}  "
          f"spread on support={rep.max_support_deviation:.1e}  min slack={rep.min_slack:+.1e}  holes={holes}")
