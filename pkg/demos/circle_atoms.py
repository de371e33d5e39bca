"""Two atoms on the circle.

sigma = delta_a - 2 delta_b has total mass -1, so Bal(sigma, 0) exists.  The
positive atom is swept onto b; what is left is -delta_b.  That is the
smallest example where nu keeps a singular part and the structure formula
(nu = lambda on Omega, sigma outside) fails at a single node.
"""
import numpy as np

from balayage import atom, bal_zero, build_circle, check_structure
from balayage.verify import circle_u_formula

a, b = 0.25, 0.75
for n in (250, 500, 1000, 2000):
    m = build_circle(n)
    res = bal_zero(m, atom(m, a) - atom(m, b, 2.0))
    err = np.abs(res.u.values - circle_u_formula(m.node_coords, a, b)).max()
    print(f"n={n:5d}  nu at b = {res.nu.masses[m.nearest_node(b)]:+.6f}  "
          f"max |u - u_exact| = {err:.2e}  (h = {m.spacing:.1e})")

st = check_structure(res)
print(f"structure formula holds: {st.passed}; leftover mass {st.sing_mass:.3f} at node {st.locations[0]}")
