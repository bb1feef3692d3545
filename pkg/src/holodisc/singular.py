"""Singular integral operators on the unit disc.

The solid Cauchy (Cauchy-Green) transform is evaluated as

    T f(z) = (1/pi) sum_j w_j (f_j - f(z)) / (z - t_j)  +  f(z) * conj(z),

i.e. plain product quadrature with singularity subtraction; the closed form
conj(z) (respectively 1/z outside the disc) is the Cauchy transform of the
characteristic function of the disc.  On the polar tensor grid the kernel is
a circular convolution in the angle, so one application costs
O(nr^2 nt log nt) after a cached kernel FFT.

The Beurling transform S is the zeta-derivative of T taken on the grid;
a principal-value quadrature of the squared kernel is kept as a cross-check.
Weighted operators twist T by a branch of a product of (z - z_k)^{alpha_k}
and add a reflected (exterior) term; the circle-adapted and triangle-adapted
variants and the boundary Cauchy integral follow the same pattern.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .grid import DiscGrid, GridField, d, lp_norm

QFLOOR = 1e-13


class WeightSingularityWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# kernel caches
# ---------------------------------------------------------------------------


def _kernels(grid: DiscGrid, reflected: bool, power: int = 1):
    """Angular FFT of the ring-to-ring Cauchy kernels, cached per grid.

    Entry [a, i, m] holds (w_i/pi) / (rho_a - r_i e^{i m dtheta})^power where
    rho_a is the target ring radius (1/r_a for reflected targets).  The
    self-cell of interior targets is zeroed; with subtraction this is exact
    because the subtracted integrand vanishes there.
    """
    key = ("cauchy_khat", reflected, power)
    if key in grid._cache:
        return grid._cache[key]
    nr, nt = grid.nr, grid.nt
    rho = 1.0 / grid.radii if reflected else grid.radii
    c = grid.ring_weights[:nr] / np.pi
    rot = np.exp(1j * grid.dtheta * np.arange(nt))
    den = rho[:, None, None] - grid.radii[None, :nr, None] * rot[None, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = c[None, :, None] / den**power
    if not reflected:
        ker[np.arange(nr), np.arange(nr), 0] = 0.0
    gamma = ker.sum(axis=(1, 2))
    khat = nt * np.fft.ifft(ker, axis=2)
    grid._cache[key] = (khat, gamma)
    return khat, gamma


def _fft_apply(khat, src):
    """Circular-correlation apply; src (nr, nt, dim) -> (n_rings, nt, dim)."""
    fhat = np.fft.fft(src, axis=1)
    return np.fft.ifft(np.einsum("aik,ikd->akd", khat, fhat), axis=1)


def _interior_sources(f: GridField):
    return f.ring_view()[: f.grid.nr]


# ---------------------------------------------------------------------------
# Cauchy-Green operator and Beurling transform
# ---------------------------------------------------------------------------


def cauchy_T(f: GridField, subtract: bool = True) -> GridField:
    """Solid Cauchy transform at every node; right inverse of d/d(conj zeta)."""
    g = f.grid
    khat, gamma = _kernels(g, reflected=False)
    out = _fft_apply(khat, _interior_sources(f))
    phase = np.exp(-1j * g.theta)[None, :, None]
    out = phase * out
    if subtract:
        out = out + ((g.radii - gamma)[:, None, None] * phase) * f.ring_view()
    return f.with_values(out.reshape(g.n_nodes, f.dim))


def cauchy_T_reflected(f: GridField, rim_const=None, subtract: bool = True) -> GridField:
    """Cauchy transform evaluated at the reflected targets 1/conj(z).

    The targets lie outside the disc (on it for the trace ring), where the
    transform is holomorphic; subtraction uses the rim trace of f (or the
    supplied rim_const) as the reference constant, and the closed form 1/y.
    """
    g = f.grid
    khat, gamma = _kernels(g, reflected=True)
    out = _fft_apply(khat, _interior_sources(f))
    phase = np.exp(-1j * g.theta)[None, :, None]
    out = phase * out
    if subtract:
        const = f.ring_view()[g.nr] if rim_const is None else np.asarray(rim_const)
        out = out + ((g.radii - gamma)[:, None, None] * phase) * const[None, :, :]
    return f.with_values(out.reshape(g.n_nodes, f.dim))


def beurling_S(f: GridField, subtract: bool = True) -> GridField:
    """Beurling transform as the grid zeta-derivative of the Cauchy transform."""
    return d(cauchy_T(f, subtract))


def beurling_S_pv(f: GridField) -> GridField:
    """Principal-value quadrature of the squared kernel (cross-check route).

    Uses the vanishing of the disc's own Beurling image inside the disc:
    S f(z) = -(1/pi) sum_j w_j (f_j - f(z)) / (t_j - z)^2.
    """
    g = f.grid
    khat, gamma = _kernels(g, reflected=False, power=2)
    out = _fft_apply(khat, _interior_sources(f))
    phase = np.exp(-2j * g.theta)[None, :, None]
    v = f.ring_view()
    out = (gamma[:, None, None] * phase) * v - phase * out
    return f.with_values(out.reshape(g.n_nodes, f.dim))


def cauchy_T_at(f: GridField, targets, subtract: bool = True):
    """Direct-sum Cauchy transform at arbitrary points; returns (len, dim).

    Points may lie inside or outside the closed disc; with subtraction the
    reference constant is the nearest-node value of f.
    """
    g = f.grid
    pts = np.atleast_1d(np.asarray(targets, dtype=complex))
    src = f.values[: g.nr * g.nt]
    tnodes = g.nodes[: g.nr * g.nt]
    cw = np.repeat(g.ring_weights[: g.nr], g.nt) / np.pi
    out = np.empty((len(pts), f.dim), dtype=complex)
    for k, z in enumerate(pts):
        dz = z - tnodes
        sing = np.abs(dz) < 1e-14
        dz[sing] = np.inf
        kern = cw / dz
        if subtract:
            a = min(int(np.searchsorted(g.radii, abs(z))), g.nr)
            j = int(round((np.angle(z) % (2 * np.pi)) / g.dtheta)) % g.nt
            const = f.ring_view()[a, j]
            cf = np.conj(z) if abs(z) <= 1.0 else 1.0 / z
            out[k] = kern @ (src - const[None, :]) + const * cf
        else:
            out[k] = kern @ src
    return out


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    """Product weight prod_k (z - z_k)^{alpha_k} with unimodular roots z_k.

    The branch is fixed on the closed disc by writing each factor as
    (-z_k)^{alpha_k} (1 - z/z_k)^{alpha_k} with principal powers; 1 - z/z_k
    has nonnegative real part there, so the product is continuous on the
    closed disc and holomorphic inside.
    """

    points: tuple
    alphas: tuple

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        als = tuple(float(a) for a in self.alphas)
        if len(pts) != len(als) or not pts:
            raise ShapeError("points and alphas must be nonempty and equal length")
        if any(abs(abs(p) - 1.0) > 1e-12 for p in pts):
            raise DomainError("weight roots must lie on the unit circle")
        if len({np.round(p, 12) for p in pts}) != len(pts):
            raise DomainError("weight roots must be distinct")
        if any(not 0.0 < a <= 1.0 for a in als):
            raise DomainError("weight exponents must lie in (0, 1]")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "alphas", als)

    @property
    def sum_alpha(self):
        return float(sum(self.alphas))

    def p_window(self):
        """(p1, p2) of L^p boundedness of the twisted Beurling operator."""
        p1 = max(2.0 / (2.0 - a) for a in self.alphas)
        p2 = min((2.0 / (1.0 - a)) if a < 1.0 else np.inf for a in self.alphas)
        return p1, p2

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.ones_like(z)
        for zk, a in zip(self.points, self.alphas):
            pref = np.exp(a * np.log(-zk))
            out = out * pref * (1.0 - z / zk) ** a
        return out


def _sqrt_positive_cut(z):
    """Branch of sqrt continuous off the positive real axis with sqrt(-1) = i."""
    z = np.asarray(z, dtype=complex)
    ang = np.angle(z) % (2.0 * np.pi)
    return np.sqrt(np.abs(z)) * np.exp(0.5j * ang)


@dataclass(frozen=True)
class TriangleWeight:
    """The fixed quarter-quarter-half weight adapted to the triangle with
    vertices -1, 1, i and its ratio X = R / sqrt(zeta).

    R vanishes at the three circle points separating the arcs; X has constant
    argument 3pi/4, pi/4, 0 on the three arcs, the directions of the three
    triangle sides through the origin.
    """

    points: tuple = (1.0 + 0.0j, -1.0 + 0.0j, 1.0j)
    alphas: tuple = (0.25, 0.25, 0.5)

    @property
    def sum_alpha(self):
        return 1.0

    def p_window(self):
        return 4.0 / 3.0, 8.0 / 3.0

    def eval(self, z):
        z = np.asarray(z, dtype=complex)
        return (np.exp(0.75j * np.pi) * (1.0 - z) ** 0.25 * (1.0 + z) ** 0.25
                * (1.0 + 1j * z) ** 0.5)

    def X(self, z):
        return self.eval(z) / _sqrt_positive_cut(z)


TRIANGLE_WEIGHT = TriangleWeight()
CIRCLE_WEIGHT = WeightSpec(points=(1.0 + 0.0j,), alphas=(1.0,))   # z - 1


# ---------------------------------------------------------------------------
# weighted operators
# ---------------------------------------------------------------------------


def _inv_weight_cell_avg(grid: DiscGrid, w, reach: float = 3.0, sub: int = 16):
    """Cell averages of 1/Q replacing midpoint values near the weight roots.

    1/Q has an integrable singularity at each root; for cells within
    reach * h of a root the midpoint rule misestimates the cell integral, so
    those cells use the average of 1/Q over a sub x sub subdivision instead.
    Cached per (grid, weight).
    """
    key = ("inv_weight_avg", tuple(np.round(np.asarray(w.points, complex), 12)),
           tuple(w.alphas), reach, sub)
    if key in grid._cache:
        return grid._cache[key]
    q_nodes = w.eval(grid.nodes).reshape(grid.n_rings, grid.nt)[: grid.nr]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_q = np.where(np.abs(q_nodes) < QFLOOR, 0.0, 1.0 / q_nodes)
    nodes = grid.nodes.reshape(grid.n_rings, grid.nt)[: grid.nr]
    near = np.zeros(inv_q.shape, dtype=bool)
    for zk in w.points:
        near |= np.abs(nodes - zk) < reach * grid.h
    off = (np.arange(sub) + 0.5) / sub - 0.5
    for a, j in zip(*np.nonzero(near)):
        r_sub = grid.radii[a] + off * grid.dr
        t_sub = grid.theta[j] + off * grid.dtheta
        pts = (r_sub[:, None] * np.exp(1j * t_sub[None, :])).reshape(-1)
        q_sub = w.eval(pts)
        if np.any(np.abs(q_sub) < QFLOOR):
            continue
        # area element r dr dtheta within the cell, normalized by the cell weight
        inv_q[a, j] = np.sum(np.repeat(r_sub, sub) / q_sub) / (sub * sub * grid.radii[a])
    grid._cache[key] = inv_q
    return inv_q


def _weighted_source(f: GridField, w, cell_avg: bool = True):
    """f / Q on the interior rings with a last-ring proxy on the trace ring.

    cell_avg applies the near-root quadrature correction; the plain midpoint
    variant keeps the partial-fraction algebra of the finite sums exact.
    """
    g = f.grid
    qv = w.eval(g.nodes).reshape(g.n_rings, g.nt)
    v = f.ring_view()
    bad = np.abs(qv[: g.nr]) < QFLOOR
    if np.any(bad):
        warnings.warn(
            f"weight vanishes at {int(bad.sum())} quadrature cells; they were excluded",
            WeightSingularityWarning,
        )
    if cell_avg:
        inv_q = _inv_weight_cell_avg(g, w)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            inv_q = np.where(bad, 0.0, 1.0 / qv[: g.nr])
    gv = np.empty_like(v)
    gv[: g.nr] = v[: g.nr] * inv_q[..., None]
    gv[g.nr] = gv[g.nr - 1]
    return GridField(g, gv.reshape(g.n_nodes, f.dim)), qv


def weighted_TQ(f: GridField, w, subtract: bool = True) -> GridField:
    """Weighted Cauchy operator Q(z) [T(f/Q)(z) + z^{-1} conj(T(f/Q)(1/conj z))].

    Right inverse of d/d(conj zeta) on the disc; the reflected term is
    holomorphic inside, and the kernel choice encodes the boundary behavior.
    """
    g = f.grid
    gf, qv = _weighted_source(f, w)
    inner = cauchy_T(gf, subtract=subtract)
    outer = cauchy_T_reflected(gf, subtract=subtract)
    zinv = ((1.0 / g.radii)[:, None] * np.exp(-1j * g.theta)[None, :]).reshape(-1)
    vals = qv.reshape(-1)[:, None] * (inner.values + zinv[:, None] * np.conj(outer.values))
    return f.with_values(vals)


def weighted_SQ(f: GridField, w, subtract: bool = True) -> GridField:
    """Weighted Beurling operator, the grid derivative of weighted_TQ."""
    return d(weighted_TQ(f, w, subtract))


def weighted_TQ_at(f: GridField, w, targets):
    """Direct (no-subtraction, plain midpoint) weighted transform off the nodes.

    Shares its retained cells and midpoint values with cauchy_T_at, so the
    partial-fraction identities between weighted and reflected constructions
    hold exactly on these finite sums.
    """
    g = f.grid
    gf, _ = _weighted_source(f, w, cell_avg=False)
    pts = np.atleast_1d(np.asarray(targets, dtype=complex))
    inner = cauchy_T_at(gf, pts, subtract=False)
    outer = cauchy_T_at(gf, 1.0 / np.conj(pts), subtract=False)
    return w.eval(pts)[:, None] * (inner + (1.0 / pts)[:, None] * np.conj(outer))


def op_T1(f: GridField, subtract: bool = True) -> GridField:
    """Circle-adapted operator T f(z) - conj(T f(1/conj z)); Re = 0 on the rim.

    Equals the weighted construction with the linear circle weight plus the
    2i Im T f(1) correction, and is exact with respect to T by reflection.
    """
    t_in = cauchy_T(f, subtract=subtract)
    t_out = cauchy_T_reflected(f, subtract=subtract)
    return f.with_values(t_in.values - np.conj(t_out.values))


def op_T1_at(f: GridField, targets, subtract: bool = False):
    pts = np.atleast_1d(np.asarray(targets, dtype=complex))
    inner = cauchy_T_at(f, pts, subtract=subtract)
    outer = cauchy_T_at(f, 1.0 / np.conj(pts), subtract=subtract)
    return inner - np.conj(outer)


def op_S1(f: GridField, subtract: bool = True) -> GridField:
    return d(op_T1(f, subtract))


def op_T2(f: GridField, subtract: bool = True) -> GridField:
    """Triangle-adapted weighted Cauchy operator."""
    return weighted_TQ(f, TRIANGLE_WEIGHT, subtract)


def op_S2(f: GridField, subtract: bool = True) -> GridField:
    return d(op_T2(f, subtract))


def t1_boundary_residual(tf: GridField):
    """max over rim nodes and components of |Re T1 f|."""
    return float(np.max(np.abs(np.real(tf.boundary_values()))))


def triangle_boundary_residual(tf: GridField):
    """Residuals of the three side-line conditions on the rim arcs.

    Arcs (0, pi/2), (pi/2, pi), (pi, 2 pi) carry the conditions
    Im (1+i) val = 0, Im (1-i) val = 0, Im val = 0 respectively.
    """
    g = tf.grid
    vals = tf.boundary_values()
    th = g.theta
    out = []
    for sel, coef in (
        ((th > 0) & (th < np.pi / 2), 1.0 + 1j),
        ((th > np.pi / 2) & (th < np.pi), 1.0 - 1j),
        (th > np.pi, 1.0),
    ):
        out.append(float(np.max(np.abs(np.imag(coef * vals[sel]))) if np.any(sel) else 0.0))
    return tuple(out)


# ---------------------------------------------------------------------------
# boundary Cauchy integral
# ---------------------------------------------------------------------------


def boundary_cauchy_K(grid: DiscGrid, trace) -> GridField:
    """Cauchy integral of a rim trace; holomorphic inside the disc.

    The trapezoid rule on the circle expands into the power series of the
    nonnegative-frequency part of the data plus an aliasing tail O(z^nt);
    evaluating that series directly (a polynomial of degree < nt) drops the
    tail, stays accurate up to the rim, and gives the interior limit on the
    trace ring.
    """
    trace = np.asarray(trace, dtype=complex)
    if trace.ndim == 1:
        trace = trace[:, None]
    if trace.shape[0] != grid.nt:
        raise ShapeError("trace must be sampled on the rim nodes")
    coef = np.fft.fft(trace, axis=0) / grid.nt
    kmax = grid.nt // 2
    z = grid.nodes
    out = np.zeros((grid.n_nodes, trace.shape[1]), dtype=complex)
    for k in range(kmax, -1, -1):
        scale = 0.5 if (k == kmax and grid.nt % 2 == 0) else 1.0
        # the Nyquist mode splits evenly between +k and -k; only +k is analytic
        out = out * z[:, None] + scale * coef[k][None, :]
    return GridField(grid, out)


# ---------------------------------------------------------------------------
# empirical operator norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OpNormEstimate:
    p: float
    estimate: float
    ratios: tuple
    trials: int
    nr: int


def random_test_field(grid: DiscGrid, rng, dim: int = 1, max_degree: int = 6) -> GridField:
    """Polynomial-times-radial-bump test field with vanishing moments.

    Components are sums of monomials z^k, k >= 1, times (1 - |z|^2)^m, so the
    transform vanishes identically outside the disc and the field is
    norm-attaining for the Beurling transform at p = 2.
    """
    z = grid.nodes
    vals = np.zeros((grid.n_nodes, dim), dtype=complex)
    for c in range(dim):
        deg = int(rng.integers(1, max_degree + 1))
        m = int(rng.integers(2, 4))
        coef = rng.standard_normal(deg) + 1j * rng.standard_normal(deg)
        poly = np.zeros_like(z)
        zp = np.ones_like(z)
        for k in range(deg):
            zp = zp * z
            poly = poly + coef[k] * zp
        vals[:, c] = poly * (1.0 - np.abs(z) ** 2) ** m
    return GridField(grid, vals)


def estimate_opnorm(op, p: float, grid: DiscGrid, dim: int = 1, trials: int = 50,
                    seed: int = 0, name: str = "") -> OpNormEstimate:
    """Empirical lower bound sup ||op f||_p / ||f||_p over random test fields.

    Monotone in the number of trials for a fixed seed.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        f = random_test_field(grid, rng, dim)
        denom = lp_norm(f, p)
        ratios.append(lp_norm(op(f), p) / denom if denom > 0 else 0.0)
    return OpNormEstimate(p=p, estimate=float(np.max(ratios)), ratios=tuple(ratios),
                          trials=trials, nr=grid.nr)


def j_alpha_beta(alpha: float, beta: float, z0, z, grid: DiscGrid):
    """Quadrature of int_D |t - z0|^{-alpha} |t - z|^{-beta} dA.

    Valid for 0 < alpha < 2, 0 < beta < 2, alpha + beta > 2, |z0| = 1 and z
    inside the disc; the value is bounded by a multiple of
    |z - z0|^{2 - alpha - beta}.
    """
    if not (0.0 < alpha < 2.0 and 0.0 < beta < 2.0):
        raise DomainError("exponents must lie in (0, 2)")
    if alpha + beta <= 2.0:
        raise DomainError("need alpha + beta > 2")
    z0 = complex(z0)
    z = complex(z)
    if abs(abs(z0) - 1.0) > 1e-12:
        raise DomainError("z0 must lie on the unit circle")
    if abs(z) >= 1.0:
        raise DomainError("z must lie inside the disc")
    t = grid.nodes[: grid.nr * grid.nt]
    w = np.repeat(grid.ring_weights[: grid.nr], grid.nt)
    return float(np.sum(w * np.abs(t - z0) ** (-alpha) * np.abs(t - z) ** (-beta)))
