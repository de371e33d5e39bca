"""Spherical caps.

Bal(delta_N - alpha vol, 0) on the unit sphere saturates a cap around the
south pole and leaves a polar cap of area 1/alpha untouched, so the boundary
sits at cos(theta) = 1 - 1/(2 pi alpha).  The same experiment on S^3 uses
the volume of a geodesic ball, pi (2 theta - sin 2 theta).
"""
import math

from scipy.optimize import brentq

from balayage import build_polar_sphere
from balayage.verify import cap_angle

m = build_polar_sphere(2048, 2)
print("S^2, 2048 cells")
for alpha in (1 / (2 * math.pi), 0.1, 1 / math.pi, 0.5):
    theta, _ = cap_angle(m, alpha)
    exact = math.acos(1 - 1 / (2 * math.pi * alpha))
    print(f"  alpha={alpha:.4f}  theta={theta:.4f}  exact={exact:.4f}  diff/h={(theta - exact) / m.spacing:+.2f}")

m3 = build_polar_sphere(2048, 3)
print("S^3, 2048 cells")
for alpha in (0.1, 0.25):
    theta, _ = cap_angle(m3, alpha)
    exact = brentq(lambda x: math.pi * (2 * x - math.sin(2 * x)) - 1 / alpha, 0, math.pi)
    print(f"  alpha={alpha:.4f}  theta={theta:.4f}  exact={exact:.4f}")
