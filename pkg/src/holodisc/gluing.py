"""Boundary value problems gluing disc boundaries to a cylinder or a torus.

The cylinder solver attaches the first coordinate's boundary values to the
triangle with vertices -1, 1, i (area one) through the conformal map of the
disc onto it, looking for the solution in the form

    z = T2 u + Phi,      w = T1 v - T1 v(tau) + w0,

where the pair (u, v) solves the contraction fixed point
(u, v) = A(z, w) (conj(S2 u) + conj(Phi'), conj(S1 v)).  The triangle-adapted
operator keeps the z-trace on the side lines and T1 keeps Re w constant on
the rim, so the boundary conditions hold by construction.

The torus solver glues (z, w) to |z| = 1, ||w|| = r via the substitution
z = zeta e^u, w = r zeta^n e^v, which linearizes the boundary conditions to
Re u = 0 and per-component Re v_c = log(|V_c| / r) on the rim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import roots_jacobi, roots_legendre

from .beltrami import DiscSolution, StructureField, pde_residual_sup
from .errors import ConvergenceError, DomainError, ShapeError
from .grid import DiscGrid, GridField, d, eval_center, interp_field, lp_norm, sup_norm
from .singular import op_T1, op_T2

PREVERTICES = (1.0 + 0.0j, -1.0 + 0.0j, 1.0j)
SC_EXPONENTS = (0.75, 0.75, 0.5)     # 1 - interior angle / pi


# ---------------------------------------------------------------------------
# triangle geometry
# ---------------------------------------------------------------------------


def triangle_side_distances(z):
    """Signed distances to the three side lines; all positive inside."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    base = y
    right = (1.0 - x - y) / np.sqrt(2.0)
    left = (1.0 + x - y) / np.sqrt(2.0)
    return base, right, left


def triangle_interior_distance(z):
    b, r, l = triangle_side_distances(z)
    return np.minimum(np.minimum(b, r), l)


def dist_to_triangle_boundary(z):
    """Unsigned distance to the triangle boundary (the three segments)."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    verts = np.array([1.0, 1.0j, -1.0, 1.0], dtype=complex)
    out = np.full(z.shape, np.inf)
    for k in range(3):
        a, b = verts[k], verts[k + 1]
        ab = b - a
        t = np.clip(((z - a) * np.conj(ab)).real / abs(ab) ** 2, 0.0, 1.0)
        out = np.minimum(out, np.abs(z - (a + t * ab)))
    return out


def triangle_cutoff(z, margin: float = 0.08, width: float = 0.08):
    """Smoothstep of the interior side distance: 0 near the walls, 1 inside."""
    t = np.clip((triangle_interior_distance(z) - margin) / width, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def boundary_line_residual(z_rim, theta):
    """Distance of rim values to the side line of their arc.

    The arcs (0, pi/2), (pi/2, pi), (pi, 2 pi) map to the sides through
    (1, i), (i, -1) and (-1, 1) respectively; the three prevertex angles map
    to the vertices themselves.
    """
    z = np.asarray(z_rim, dtype=complex)
    x, y = z.real, z.imag
    res = np.empty(z.shape)
    a1 = (theta > 0) & (theta < np.pi / 2)
    a2 = (theta > np.pi / 2) & (theta < np.pi)
    a3 = theta > np.pi
    res[a1] = np.abs(x[a1] + y[a1] - 1.0) / np.sqrt(2.0)
    res[a2] = np.abs(y[a2] - x[a2] - 1.0) / np.sqrt(2.0)
    res[a3] = np.abs(y[a3])
    for ang, vert in ((0.0, 1.0 + 0.0j), (np.pi / 2, 1.0j), (np.pi, -1.0 + 0.0j)):
        hit = np.isclose(theta, ang)
        res[hit] = np.abs(z[hit] - vert)
    return res


# ---------------------------------------------------------------------------
# Schwarz-Christoffel map of the disc onto the triangle
# ---------------------------------------------------------------------------


def _sc_factor(s):
    """Derivative density (1-s)^{-3/4} (1+s)^{-3/4} (1+is)^{-1/2}, principal branches."""
    s = np.asarray(s, dtype=complex)
    return (1.0 - s) ** -0.75 * (1.0 + s) ** -0.75 * (1.0 + 1j * s) ** -0.5


@dataclass(frozen=True)
class TriangleMap:
    """Conformal map of the unit disc onto the triangle with vertices -1, 1, i.

    The three boundary points -1, 1, i are fixed; phi and dphi hold the node
    samples.  dphi blows up at the three prevertex rim nodes; those entries
    are stored as zero (their quadrature weight is zero and no solver reads
    them).
    """

    grid: DiscGrid
    shift: complex
    scale: complex
    phi: GridField = field(repr=False)
    dphi: GridField = field(repr=False)
    normalization_residual: float = 0.0

    def prime_at(self, points):
        return self.scale * _sc_factor(np.asarray(points, dtype=complex))

    def at(self, points, panels_per_unit: int = 12):
        """Map arbitrary points of the open disc by radial path integration."""
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        xg, wg = roots_legendre(12)
        out = np.empty(pts.shape, dtype=complex)
        for k, z in enumerate(pts):
            if abs(z) >= 1.0:
                raise DomainError(f"point {z} not inside the open disc")
            npan = max(4, int(np.ceil(abs(z) * panels_per_unit)))
            edges = np.linspace(0.0, 1.0, npan + 1)
            acc = 0.0 + 0.0j
            for a, b in zip(edges[:-1], edges[1:]):
                mid, half = 0.5 * (a + b), 0.5 * (b - a)
                tau = mid + half * xg
                acc += half * np.sum(wg * _sc_factor(tau * z))
            out[k] = self.shift + self.scale * z * acc
        return out

    def inverse(self, z0, tol: float = 1e-12, max_iter: int = 60):
        """Preimage of an interior triangle point, safeguarded Newton from 0."""
        z0 = complex(z0)
        if triangle_interior_distance(z0) <= 0:
            raise DomainError(f"{z0} is not strictly inside the triangle")
        tau = 0.0 + 0.0j
        val = complex(self.at([tau])[0])
        for _ in range(max_iter):
            err = val - z0
            if abs(err) <= tol:
                return tau
            step = -err / self.prime_at([tau])[0]
            lam = 1.0
            for _ in range(30):
                cand = tau + lam * step
                if abs(cand) < 1.0 - 1e-9:
                    cand_val = complex(self.at([cand])[0])
                    if abs(cand_val - z0) < abs(err):
                        tau, val = cand, cand_val
                        break
                lam *= 0.5   # bisect the step along the Newton ray
            else:
                raise ConvergenceError(f"triangle inverse stalled at {tau}")
        raise ConvergenceError("triangle inverse did not converge")


def _sc_endpoint_integral(k: int, n_nodes: int = 48):
    """int_0^1 of the SC density along the ray to prevertex k (Gauss-Jacobi)."""
    zk = PREVERTICES[k]
    beta = SC_EXPONENTS[k]
    xj, wj = roots_jacobi(n_nodes, -beta, 0.0)
    tau = 0.5 * (xj + 1.0)
    # strip the singular endpoint factor, absorbed by the Jacobi weight
    if k == 0:
        rest = (1.0 + tau) ** -0.75 * (1.0 + 1j * tau) ** -0.5
    elif k == 1:
        rest = (1.0 + tau) ** -0.75 * (1.0 - 1j * tau) ** -0.5
    else:
        rest = (1.0 - 1j * tau) ** -0.75 * (1.0 + 1j * tau) ** -0.75
    vals = zk * rest * 2.0 ** (beta - 1.0)
    return np.sum(wj * vals)


def triangle_map(grid: DiscGrid) -> TriangleMap:
    """Build the map on a grid; cached per grid object."""
    if "triangle_map" in grid._cache:
        return grid._cache["triangle_map"]
    ends = [_sc_endpoint_integral(k) for k in range(3)]
    scale = 2.0 / (ends[0] - ends[1])
    shift = 1.0 - scale * ends[0]
    norm_res = abs(shift + scale * ends[2] - 1.0j)

    # cumulative radial integration per angle, Gauss-Legendre per ring segment
    xg, wg = roots_legendre(12)
    nr, nt = grid.nr, grid.nt
    edges = np.concatenate([[0.0], grid.radii])
    phi_vals = np.empty((grid.n_rings, nt), dtype=complex)
    eastep = edges[1:] - edges[:-1]
    mids = 0.5 * (edges[1:] + edges[:-1])
    # panel sample radii, shape (n_rings, 12)
    taus = mids[:, None] + 0.5 * eastep[:, None] * xg[None, :]
    for j in range(nt):
        ray = np.exp(1j * grid.theta[j])
        seg = 0.5 * eastep * np.sum(wg[None, :] * _sc_factor(taus * ray), axis=1)
        phi_vals[:, j] = shift + scale * ray * np.cumsum(seg)
    # prevertex rays end exactly at the vertices
    for ang, vert in ((0.0, 1.0 + 0.0j), (np.pi / 2, 1.0j), (np.pi, -1.0 + 0.0j)):
        j = np.flatnonzero(np.isclose(grid.theta, ang))
        if len(j):
            phi_vals[nr, j[0]] = vert

    with np.errstate(invalid="ignore", divide="ignore"):
        dphi_vals = scale * _sc_factor(grid.nodes.reshape(grid.n_rings, nt))
    bad = ~np.isfinite(dphi_vals)
    dphi_vals[bad] = 0.0

    tm = TriangleMap(
        grid=grid,
        shift=shift,
        scale=scale,
        phi=GridField(grid, phi_vals.reshape(-1)),
        dphi=GridField(grid, dphi_vals.reshape(-1)),
        normalization_residual=float(norm_res),
    )
    grid._cache["triangle_map"] = tm
    return tm


def _singular_moment(beta: float):
    """Closed form of int_D |zeta - z0|^{-beta} dA for |z0| = 1, beta < 2."""
    return (2.0 ** (2.0 - beta) * np.sqrt(np.pi) / (2.0 - beta)
            * gamma_fn((3.0 - beta) / 2.0) / gamma_fn((4.0 - beta) / 2.0))


def triangle_area_quadrature(tm: TriangleMap, reach: float = 4.0, sub: int = 16):
    """Quadrature of |Phi'|^2 over the disc with singular-moment subtraction.

    |Phi'|^2 has spikes |zeta - z_k|^{2 alpha_k - 2} at the prevertices; each
    is subtracted with its exact disc integral, and cells within reach * h of
    a prevertex average the mild remainder over a sub x sub subdivision.  The
    value is the area of the image triangle, exactly one for the standard
    normalization.
    """
    g = tm.grid
    t = g.nodes[: g.nr * g.nt]
    w = np.repeat(g.ring_weights[: g.nr], g.nt)
    c2 = abs(tm.scale) ** 2
    coefs = (c2 / 4.0, c2 / 4.0, c2 * 2.0 ** -1.5)
    betas = (1.5, 1.5, 1.0)

    def remainder(pts):
        out = np.abs(tm.prime_at(pts)) ** 2
        for zk, ck, bk in zip(PREVERTICES, coefs, betas):
            out = out - ck * np.abs(pts - zk) ** (-bk)
        return out

    vals = remainder(t)
    total = sum(ck * _singular_moment(bk) for ck, bk in zip(coefs, betas))

    near = np.zeros(len(t), dtype=bool)
    for zk in PREVERTICES:
        near |= np.abs(t - zk) < reach * g.h
    radii = np.repeat(g.radii[: g.nr], g.nt)
    thetas = np.tile(g.theta, g.nr)
    off = (np.arange(sub) + 0.5) / sub - 0.5
    for idx in np.flatnonzero(near):
        r_sub = radii[idx] + off * g.dr
        t_sub = thetas[idx] + off * g.dtheta
        pts = (r_sub[:, None] * np.exp(1j * t_sub[None, :])).reshape(-1)
        rem = remainder(pts)
        # area-weighted cell average: weight r dr dtheta over the subdivision
        vals[idx] = np.sum(np.repeat(r_sub, sub) * rem) / (sub * sub * radii[idx])
    return float(np.sum(w * vals) + total)


def area_from_trace(z_rim):
    """Shoelace area enclosed by the rim trace of a scalar boundary curve."""
    z = np.asarray(z_rim, dtype=complex)
    return float(0.5 * np.sum((np.conj(z) * np.roll(z, -1)).imag))


# ---------------------------------------------------------------------------
# the (u, v) contraction
# ---------------------------------------------------------------------------


def solve_uv_contraction(Z: GridField, A: StructureField, dphi: GridField,
                         p: float = 2.05, tol: float = 1e-9, max_iter: int = 60,
                         uv0: GridField | None = None):
    """Fixed point of (u, v) = A(z, w) (conj(S2 u + Phi'), conj(S1 v)).

    Returns the stacked (u, v) field and an info dict with the contraction
    ratios; raises DomainError when the measured ratio reaches one.
    """
    g = Z.grid
    n = A.dim
    if Z.dim != n:
        raise ShapeError("Z and structure dims differ")
    mats = A.eval_batch(Z.values)
    uv = GridField(g, np.zeros((g.n_nodes, n), dtype=complex)) if uv0 is None else uv0
    history = []
    scale = max(lp_norm(GridField(g, dphi.values), p), 1.0)
    for it in range(max_iter):
        u = uv.component(0)
        s2u = d(op_T2(u))
        rhs = np.empty_like(uv.values)
        rhs[:, 0] = np.conj(s2u.values[:, 0] + dphi.values[:, 0])
        if n > 1:
            v = GridField(g, uv.values[:, 1:])
            s1v = d(op_T1(v))
            rhs[:, 1:] = np.conj(s1v.values)
        new_vals = np.einsum("mij,mj->mi", mats, rhs)
        delta = lp_norm(GridField(g, new_vals - uv.values), p)
        history.append(delta)
        uv = GridField(g, new_vals)
        if delta <= tol * scale:
            break
        # growth well above the stopping floor means the map does not contract
        if (len(history) >= 4 and history[-1] > history[-2] >= history[-3]
                and history[-1] > 100.0 * tol * scale):
            raise DomainError(
                f"(u, v) iteration is not a contraction (deltas {history[-3:]})"
            )
    else:
        raise ConvergenceError("(u, v) contraction did not reach tolerance", history=history)
    ratios = [history[i + 1] / history[i] for i in range(len(history) - 1) if history[i] > 0]
    return uv, {"history": history, "ratios": ratios, "iterations": len(history)}


# ---------------------------------------------------------------------------
# cylinder gluing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CylinderProblem:
    """Disc attached to the triangle cylinder through a target point.

    structure is the almost complex structure on C^N (first coordinate is the
    cylinder base); target = (z0, w0) must have z0 strictly inside the
    triangle.  s0 is the top of the Hilbert-scale range used in diagnostics.
    """

    structure: StructureField
    target: np.ndarray
    s0: float = 1.0
    interior_margin: float = 0.02

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.target, dtype=complex))
        if t.shape != (self.structure.dim,):
            raise ShapeError("target must be a vector of the structure dim")
        if triangle_interior_distance(t[0]) <= self.interior_margin:
            raise DomainError(f"target base point {t[0]} is not strictly inside the triangle")
        object.__setattr__(self, "target", t)


def cylinder_structure(matrix, dim: int | None = None, cutoff: bool = False,
                       margin: float = 0.08, width: float = 0.08) -> StructureField:
    """Constant-matrix structure, optionally shut off near the cylinder walls."""
    m = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if dim is not None and m.shape[0] != dim:
        raise ShapeError("matrix dim mismatch")
    from .symplin import opnorm

    bound = opnorm(m)
    if bound >= 1.0:
        raise DomainError("structure bound must be < 1")

    def ev(pts):
        pts = np.asarray(pts, dtype=complex)
        chi = triangle_cutoff(pts[:, 0], margin, width) if cutoff else np.ones(len(pts))
        return chi[:, None, None] * m[None, :, :]

    return StructureField(dim=m.shape[0], eval=ev, bound=float(bound), vectorized=True)


def solve_cylinder(problem: CylinderProblem, grid: DiscGrid, p: float = 2.05,
                   tol: float = 1e-8, max_outer: int = 60, damping: float = 1.0,
                   inner_tol: float = 1e-10) -> DiscSolution:
    """Outer iteration on (z, w, tau) around the inner (u, v) contraction."""
    A = problem.structure
    n = A.dim
    z0 = complex(problem.target[0])
    w0 = problem.target[1:]
    tm = triangle_map(grid)
    tau = tm.inverse(z0)

    vals = np.empty((grid.n_nodes, n), dtype=complex)
    vals[:, 0] = tm.phi.values[:, 0]
    vals[:, 1:] = w0[None, :]
    Z = GridField(grid, vals)
    uv = None
    history = []
    scale_decay = []
    theta_n = np.arange(1, n + 1, dtype=float)
    converged = False
    info = {"iterations": 0}
    for it in range(max_outer):
        uv, info = solve_uv_contraction(Z, A, tm.dphi, p=p, tol=inner_tol, uv0=uv)
        u = uv.component(0)
        t2u = op_T2(u)
        z_new = t2u.values[:, 0] + tm.phi.values[:, 0]
        new_vals = np.empty_like(Z.values)
        new_vals[:, 0] = z_new
        if n > 1:
            t1v = op_T1(GridField(grid, uv.values[:, 1:]))
            t1v_tau = interp_field(t1v, [tau])[0]
            new_vals[:, 1:] = t1v.values - t1v_tau[None, :] + w0[None, :]
        # safeguarded Newton for z(tau) = z0
        zf = GridField(grid, new_vals[:, 0])
        dz = GridField(grid, d(GridField(grid, t2u.values[:, 0])).values[:, 0]
                       + tm.dphi.values[:, 0])
        tau_new = tau
        err = interp_field(zf, [tau_new])[0][0] - z0
        for _ in range(30):
            if abs(err) <= tol:
                break
            deriv = interp_field(dz, [tau_new])[0][0]
            step = -err / deriv
            lam = 1.0
            for _ in range(20):
                cand = tau_new + lam * step
                if abs(cand) < 1.0 - 2.0 * grid.h:
                    cand_err = interp_field(zf, [cand])[0][0] - z0
                    if abs(cand_err) < abs(err):
                        tau_new, err = cand, cand_err
                        break
                lam *= 0.5
            else:
                break
        if abs(tau_new) >= 1.0 - grid.h:
            raise DomainError(f"tau left the disc: {tau_new}")

        delta = float(np.max(np.abs(new_vals - Z.values))) + abs(tau_new - tau)
        history.append(delta)
        if problem.s0 > 0 and n > 1:
            diff = GridField(grid, new_vals - Z.values, scale_weights=theta_n)
            scale_decay.append((lp_norm(diff, 2.0, s=0.0), lp_norm(diff, 2.0, s=problem.s0)))
        if damping != 1.0:
            new_vals = Z.values + damping * (new_vals - Z.values)
        Z = GridField(grid, new_vals)
        tau = tau_new
        if delta <= tol * max(1.0, float(np.max(np.abs(Z.values)))):
            converged = True
            break
        if len(history) >= 3 and history[-1] > 4.0 * history[-2] > 8.0 * history[-3]:
            raise ConvergenceError("cylinder outer iteration diverges", history=history)
    if not converged:
        raise ConvergenceError("cylinder outer iteration stagnated", history=history)

    z_rim = Z.values[grid.boundary_index, 0]
    bres = float(np.max(boundary_line_residual(z_rim, grid.theta)))
    area = cylinder_area(uv, tm, z_rim=z_rim)
    # sup residual away from the prevertices: the solution is only Hoelder
    # there, so finite differences of the exact solution diverge at them
    from .beltrami import pde_residual as _pde_res

    res = _pde_res(Z, A)
    mask = grid.interior_mask(0.02)
    for zk in PREVERTICES:
        mask &= np.abs(grid.nodes - zk) > 0.3
    res_sup = sup_norm(res, mask=mask)
    sol = DiscSolution(
        Z=Z,
        residual_pde=res_sup,
        residual_boundary=bres,
        area=area,
        iterations=len(history),
        converged=True,
        history=history,
        meta={
            "tau": tau,
            "w_at_tau": interp_field(Z, [tau])[0][1:] if n > 1 else None,
            "inner": info,
            "scale_decay": scale_decay,
            "boundary_segment_distance": float(np.max(dist_to_triangle_boundary(z_rim))),
            "area_quadrature": cylinder_area_quadrature(uv, tm),
            "uv": uv,
        },
    )
    return sol


def _cylinder_w_area(uv: GridField):
    """Quadrature of the w-part of the pullback; vanishes by Stokes in the limit."""
    if uv.dim <= 1:
        return 0.0
    g = uv.grid
    w = np.repeat(g.ring_weights[: g.nr], g.nt)
    sel = slice(0, g.nr * g.nt)
    v = GridField(g, uv.values[:, 1:])
    s1v = d(op_T1(v)).values[sel]
    return float(np.sum(w[:, None] * (np.abs(s1v) ** 2 - np.abs(v.values[sel]) ** 2)))


def cylinder_area(uv: GridField, tm: TriangleMap, z_rim=None):
    """Symplectic area of the glued disc.

    The z-part equals the area enclosed by the rim trace (the pullback
    integrand is a Jacobian, and the trace runs along the triangle sides), so
    it is evaluated by the shoelace formula on the trace; the w-part is the
    plain quadrature of its pullback.
    """
    if z_rim is None:
        g = uv.grid
        t2u = op_T2(uv.component(0))
        z_rim = (t2u.values[:, 0] + tm.phi.values[:, 0])[g.boundary_index]
    return area_from_trace(z_rim) + _cylinder_w_area(uv)


def cylinder_area_quadrature(uv: GridField, tm: TriangleMap):
    """Interior-quadrature area route, kept as a consistency diagnostic.

    z_zeta = S2 u + Phi' and z_zb = u hold exactly for the ansatz; the
    |Phi'|^2 part uses the corrected quadrature, the cross and u terms the
    plain product rule (their prevertex singularities converge slowly, so
    this route is only O(h^(1/2)) accurate for nonzero structures).
    """
    g = uv.grid
    w = np.repeat(g.ring_weights[: g.nr], g.nt)
    sel = slice(0, g.nr * g.nt)
    u = uv.values[sel, 0]
    s2u = d(op_T2(uv.component(0))).values[sel, 0]
    dphi = tm.dphi.values[sel, 0]
    area = triangle_area_quadrature(tm)
    area += float(np.sum(w * (2.0 * (np.conj(dphi) * s2u).real + np.abs(s2u) ** 2 - np.abs(u) ** 2)))
    return area + _cylinder_w_area(uv)


# ---------------------------------------------------------------------------
# torus gluing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusProblem:
    """Disc glued to |z| = 1, ||w|| = r with winding n in the z coordinate.

    a_fn(z, w) is the scalar coefficient driving z (|a| <= a0 < 1 and
    a(z, 0) = 0), b_fn(z, w) the vector coefficient driving w (b(z, 0) = 0);
    both are vectorized over node arrays.  V fixes w(1), with ||V|| = r and
    all components nonzero (the exponential ansatz cannot represent zeros).
    """

    a_fn: callable
    b_fn: callable
    r: float
    n: int
    V: np.ndarray
    a0: float
    gamma: float = 0.5

    def __post_init__(self):
        V = np.atleast_1d(np.asarray(self.V, dtype=complex))
        if not 0.0 < self.r <= 1.0:
            raise DomainError("radius must lie in (0, 1]")
        if self.n < 0:
            raise DomainError("winding must be >= 0")
        if not 0.0 <= self.a0 < 1.0:
            raise DomainError("need a0 < 1 (ellipticity)")
        if abs(np.linalg.norm(V) - self.r) > 1e-10:
            raise DomainError("V must have norm r")
        if np.any(np.abs(V) < 1e-14):
            raise DomainError("V components must be nonzero")
        object.__setattr__(self, "V", V)

    @property
    def dim_w(self):
        return len(self.V)


def _torus_structure(problem: TorusProblem) -> StructureField:
    """First-column structure matrix [[a, 0], [b, 0]] for residual checks."""
    nw = problem.dim_w

    def ev(pts):
        pts = np.asarray(pts, dtype=complex)
        z, w = pts[:, 0], pts[:, 1:]
        out = np.zeros((len(pts), nw + 1, nw + 1), dtype=complex)
        out[:, 0, 0] = problem.a_fn(z, w)
        out[:, 1:, 0] = problem.b_fn(z, w)
        return out

    return StructureField(dim=nw + 1, eval=ev, bound=max(problem.a0, 1e-12), vectorized=True)


def solve_torus(problem: TorusProblem, grid: DiscGrid, tol: float = 1e-10,
                max_outer: int = 80, max_inner: int = 40, damping: float = 1.0,
                p: float = 2.05) -> DiscSolution:
    """Outer iteration on (u, v) with an inner contraction for u_zb.

    Winding n >= 1 is the main regime; n = 0 is the alternative small-radius
    branch (the u-equation keeps a 1/zeta factor whose mass is controlled by
    r < r0).
    """
    nw = problem.dim_w
    mu = np.log(problem.V / problem.r)          # principal branch componentwise
    zeta = grid.nodes
    rim0 = grid.boundary_index[0]               # the node at zeta = 1
    u = np.zeros(grid.n_nodes, dtype=complex)
    v = np.tile(mu, (grid.n_nodes, 1))
    history = []
    converged = False
    zeta_n = zeta**problem.n
    for it in range(max_outer):
        z = zeta * np.exp(u)
        w = problem.r * zeta_n[:, None] * np.exp(v)
        av = np.asarray(problem.a_fn(z, w), dtype=complex)
        if np.max(np.abs(av)) > problem.a0 + 1e-10:
            raise DomainError(f"|a| exceeds the ellipticity bound {problem.a0}")
        bv = np.atleast_2d(np.asarray(problem.b_fn(z, w), dtype=complex))
        if bv.shape != (grid.n_nodes, nw):
            bv = bv.reshape(grid.n_nodes, nw)
        phase = np.exp(np.conj(u) - u)
        c_a = av * phase / zeta
        # inner contraction for F = u_zb
        F = GridField(grid, c_a.copy())
        factor = None
        for _ in range(max_inner):
            s1f = d(op_T1(F)).values[:, 0]
            factor = 1.0 + np.conj(zeta * s1f)
            F_new = c_a * factor
            dstep = float(np.max(np.abs(F_new - F.values[:, 0])))
            F = GridField(grid, F_new)
            if dstep <= 0.1 * tol:
                break
        c_b = bv * np.exp(np.conj(u)[:, None] - v) / (problem.r * zeta_n[:, None])
        G = c_b * factor[:, None]

        t1f = op_T1(F)
        u_new = t1f.values[:, 0] - t1f.values[rim0, 0]
        t1g = op_T1(GridField(grid, G))
        v_new = t1g.values - t1g.values[rim0][None, :] + mu[None, :]

        delta = max(float(np.max(np.abs(u_new - u))), float(np.max(np.abs(v_new - v))))
        history.append(delta)
        u = u + damping * (u_new - u)
        v = v + damping * (v_new - v)
        if delta <= tol:
            converged = True
            break
        if len(history) >= 3 and history[-1] > 4.0 * history[-2] > 8.0 * history[-3]:
            raise ConvergenceError("torus outer iteration diverges", history=history)
    if not converged:
        raise ConvergenceError("torus outer iteration stagnated", history=history)

    z = zeta * np.exp(u)
    w = problem.r * zeta_n[:, None] * np.exp(v)
    Z = GridField(grid, np.concatenate([z[:, None], w], axis=1))

    rim = grid.boundary_index
    res_z = float(np.max(np.abs(np.abs(z[rim]) - 1.0)))
    res_w = float(np.max(np.abs(np.linalg.norm(w[rim], axis=1) - problem.r)))
    # winding of z along the rim
    args = np.angle(z[rim])
    incr = np.diff(np.concatenate([args, args[:1]]))
    incr = (incr + np.pi) % (2.0 * np.pi) - np.pi
    winding = int(np.round(np.sum(incr) / (2.0 * np.pi)))
    if winding != 1:
        from .errors import WindingError

        raise WindingError(f"boundary winding of z is {winding}, not 1")
    decay_C = float(np.max(np.linalg.norm(w, axis=1) / (problem.r * np.abs(zeta) ** problem.n)))
    z_center = eval_center(GridField(grid, z))[0][0]
    sol = DiscSolution(
        Z=Z,
        residual_pde=pde_residual_sup(Z, _torus_structure(problem)),
        residual_boundary=max(res_z, res_w),
        area=None,
        iterations=len(history),
        converged=True,
        history=history,
        meta={
            "winding": winding,
            "decay_constant": decay_C,
            "res_moduli": (res_z, res_w),
            "z_at_origin": complex(z_center),
            "z_at_one": complex(z[rim0]),
            "w_at_one": w[rim0],
            "branch": "main" if problem.n >= 1 else "small-radius",
        },
    )
    return sol
