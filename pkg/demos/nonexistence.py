"""When Bal(sigma, 0) does not exist.

On the sphere, delta_N - 2 delta_S has negative total mass, yet no balayage
exists: a point charge cannot be swept onto another point in two dimensions.
Refining the grid makes the discrete potential u grow like log(1/h).  On the
circle the same charge converges.
"""
import math

from balayage import atom, build_circle, build_polar_sphere
from balayage.partial import existence_diagnostic


def sphere(n):
    m = build_polar_sphere(n)
    return atom(m, 0.0) - atom(m, math.pi, 2.0)


def circle(n):
    m = build_circle(n)
    return atom(m, 0.25) - atom(m, 0.75, 2.0)


for name, builder, levels in (("sphere", sphere, [128, 256, 512, 1024]),
                              ("circle", circle, [250, 500, 1000, 2000])):
    rep = existence_diagnostic(builder, levels)
    print(f"{name}: {rep.classification}")
    for h, mu in zip(rep.spacings, rep.mean_u):
        print(f"   h={h:.2e}  mean u={mu:.4f}")
    print(f"   slope vs log(1/h) = {rep.slope:.4f}, R^2 = {rep.r_squared:.4f}")
