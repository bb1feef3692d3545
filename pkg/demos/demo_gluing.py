"""Boundary value problems: discs glued to the triangle cylinder and to the
torus |z| = 1, ||w|| = r.

Run: python demos/demo_gluing.py
"""

import numpy as np

import holodisc as hd
from holodisc.grid import DiscGrid

grid = DiscGrid(96, 96)

# The conformal map of the disc onto the unit-area triangle with vertices
# -1, 1, i anchors the cylinder problem.
tm = hd.triangle_map(grid)
print("triangle map: third-vertex residual =", tm.normalization_residual)
print("image area by corrected quadrature  =", hd.triangle_area_quadrature(tm))

# With the zero structure the glued disc is the map itself and a constant
# fiber; with a small constant structure the disc bends but its boundary
# stays on the cylinder walls and the area stays one.
problem = hd.CylinderProblem(structure=hd.cylinder_structure(np.diag([0.1, 0.0])),
                             target=np.array([0.1 + 0.4j, 0.2 + 0.1j]))
sol = hd.solve_cylinder(problem, grid)
print("\ncylinder gluing (a = 0.1):")
print("  outer iterations =", sol.iterations)
print("  boundary line residual =", sol.residual_boundary)
print("  symplectic area =", sol.area, " (interior-quadrature route:",
      f"{sol.meta['area_quadrature']:.4f})")
print("  disc passes through target fiber:",
      np.max(np.abs(sol.meta["w_at_tau"] - np.array([0.2 + 0.1j]))))

# The torus problem uses the winding ansatz z = zeta e^u, w = r zeta^n e^v,
# which makes the boundary conditions linear and exact by construction.
r, n = 0.8, 2
problem_t = hd.TorusProblem(
    a_fn=lambda z, w: 0.15 * w[:, 0] * np.exp(-np.abs(z) ** 2),
    b_fn=lambda z, w: 0.1 * w * z[:, None],
    r=r, n=n, V=np.array([r + 0.0j]), a0=0.5)
sol_t = hd.solve_torus(problem_t, grid)
print(f"\ntorus gluing (r = {r}, winding n = {n}):")
print("  moduli residuals (|z|-1, ||w||-r) =", sol_t.meta["res_moduli"])
print("  boundary winding of z =", sol_t.meta["winding"])
print("  decay constant in ||w|| <= C r |zeta|^n:", sol_t.meta["decay_constant"])
print("  normalization: z(0) =", abs(sol_t.meta["z_at_origin"]),
      " z(1) - 1 =", abs(sol_t.meta["z_at_one"] - 1.0))
