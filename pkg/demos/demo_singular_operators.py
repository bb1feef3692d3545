"""The Cauchy-Green transform, the Beurling transform and the boundary-adapted
weighted operators on the unit disc.

Run: python demos/demo_singular_operators.py
"""

import numpy as np

import holodisc as hd
from holodisc.grid import DiscGrid, GridField, constant_field, dbar, field_from_function, lp_norm, sup_norm

grid = DiscGrid(96, 96)

# T inverts d/d(conj zeta); for the constant 1 the closed form is conj(z).
one = constant_field(grid, [1.0])
t_one = hd.cauchy_T(one)
print("T 1 = conj(z):", np.max(np.abs(t_one.values[:, 0] - np.conj(grid.nodes))))

f = field_from_function(grid, lambda z: np.exp(0.5 * z) + 0.4 * np.conj(z) ** 2)
res = dbar(hd.cauchy_T(f)).values - f.values
print("interior max of dbar(T f) - f:",
      sup_norm(GridField(grid, res), mask=grid.interior_mask(0.05)))

# The Beurling transform S = d(T ...) is an L^2 isometry; monomials times
# radial bumps attain the norm exactly.
g = field_from_function(grid, lambda z: z**3 * (1.0 - np.abs(z) ** 2) ** 2)
print("||S f||_2 / ||f||_2 =", lp_norm(hd.beurling_S(g), 2.0) / lp_norm(g, 2.0))
est = hd.estimate_opnorm(hd.beurling_S, 2.0, grid, trials=20, seed=0)
print("empirical ||S||_2 over 20 fields:", est.estimate)

# The circle-adapted operator keeps Re = 0 on the rim by reflection ...
t1 = hd.op_T1(f)
print("max |Re T1 f| on the rim:", hd.singular.t1_boundary_residual(t1))

# ... and the triangle-adapted one satisfies the three side-line conditions.
t2 = hd.op_T2(f)
print("triangle line residuals:", hd.singular.triangle_boundary_residual(t2))
print("S2 window (p1, p2):", hd.singular.TRIANGLE_WEIGHT.p_window())

# The boundary Cauchy integral reproduces holomorphic traces and kills
# anti-holomorphic ones.
zeta = np.exp(1j * grid.theta)
print("K[zeta^2] = zeta^2:",
      np.max(np.abs(hd.boundary_cauchy_K(grid, zeta**2).values[:, 0] - grid.nodes**2)))
print("K[conj(zeta)] = 0:", np.max(np.abs(hd.boundary_cauchy_K(grid, np.conj(zeta)).values)))

# The two-singularity kernel integral stays bounded against the predicted
# power of the distance between its poles.
for s in (0.5, 0.7, 0.9):
    val = hd.j_alpha_beta(1.2, 1.2, 1.0, s, grid)
    print(f"J(1.2, 1.2) at |z - z0| = {1-s:.1f}: {val:8.3f}, "
          f"scaled by |z-z0|^0.4: {val * (1 - s) ** 0.4:.3f}")
