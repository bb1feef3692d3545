"""Polar tensor discretization of the closed unit disc and fields on it.

The grid has nr cell-centered radii r_i = (i + 1/2)/nr (no node at the
coordinate singularity r = 0) plus one explicit trace ring at r = 1 whose
quadrature weight is zero; boundary conditions are evaluated on that ring.
The nt angles are uniform.  With these weights the total quadrature weight
is exactly pi and odd monomials integrate to zero by symmetry.

Node ordering is ring-major: node = ring * nt + j, ring 0 innermost,
ring nr the boundary trace.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class DiscGrid:
    nr: int
    nt: int
    radii: np.ndarray = field(repr=False, default=None)
    theta: np.ndarray = field(repr=False, default=None)
    _cache: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if self.nr < 4 or self.nt < 8:
            raise DomainError("grid needs nr >= 4 and nt >= 8")
        dr = 1.0 / self.nr
        radii = np.concatenate([(np.arange(self.nr) + 0.5) * dr, [1.0]])
        theta = 2.0 * np.pi * np.arange(self.nt) / self.nt
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "theta", theta)

    # ---- geometry ---------------------------------------------------------

    @property
    def dr(self):
        return 1.0 / self.nr

    @property
    def dtheta(self):
        return 2.0 * np.pi / self.nt

    @property
    def h(self):
        """Mesh parameter max(dr, dtheta)."""
        return max(self.dr, self.dtheta)

    @property
    def n_rings(self):
        return self.nr + 1

    @property
    def n_nodes(self):
        return self.n_rings * self.nt

    @property
    def boundary_index(self):
        """Flat indices of the |zeta| = 1 trace nodes."""
        return np.arange(self.nr * self.nt, self.n_rings * self.nt)

    @property
    def nodes(self):
        """Complex node positions, flat ring-major array."""
        if "nodes" not in self._cache:
            z = self.radii[:, None] * np.exp(1j * self.theta[None, :])
            self._cache["nodes"] = z.reshape(-1)
        return self._cache["nodes"]

    @property
    def ring_weights(self):
        """Per-ring quadrature weight (area measure); zero on the trace ring."""
        if "ring_weights" not in self._cache:
            w = np.zeros(self.n_rings)
            w[: self.nr] = self.radii[: self.nr] * self.dr * self.dtheta
            self._cache["ring_weights"] = w
        return self._cache["ring_weights"]

    @property
    def quad_weights(self):
        """Per-node quadrature weights; they sum exactly to pi."""
        if "quad_weights" not in self._cache:
            self._cache["quad_weights"] = np.repeat(self.ring_weights, self.nt)
        return self._cache["quad_weights"]

    def interior_mask(self, margin: float = 0.0):
        """Flat boolean mask of nodes with r <= 1 - margin (trace ring excluded)."""
        m = np.zeros((self.n_rings, self.nt), dtype=bool)
        m[self.radii <= 1.0 - margin, :] = True
        m[self.nr, :] = False
        return m.reshape(-1)

    # ---- derivative stencils -----------------------------------------------

    def _radial_stencil(self):
        """3-point Lagrange first-derivative weights on the nonuniform radii."""
        if "radial_stencil" in self._cache:
            return self._cache["radial_stencil"]
        n = self.n_rings
        idx = np.zeros((n, 3), dtype=int)
        wgt = np.zeros((n, 3))
        for a in range(n):
            if a == 0:
                s = (0, 1, 2)
            elif a == n - 1:
                s = (n - 3, n - 2, n - 1)
            else:
                s = (a - 1, a, a + 1)
            x0, x1, x2 = self.radii[list(s)]
            x = self.radii[a]
            # derivative of the Lagrange basis at x
            wgt[a, 0] = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
            wgt[a, 1] = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
            wgt[a, 2] = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
            idx[a] = s
        self._cache["radial_stencil"] = (idx, wgt)
        return idx, wgt


@dataclass(frozen=True)
class GridField:
    """Complex C^N-valued samples of a map on a DiscGrid.

    values has shape (n_nodes, dim), node-major.  scale_weights, when set,
    are the per-component weights theta_n of a Hilbert scale; the norm of
    order s weights component n by theta_n ** s.
    """

    grid: DiscGrid
    values: np.ndarray
    scale_weights: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=complex))
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.n_nodes:
            raise ShapeError(f"{v.shape[0]} samples for a grid of {self.grid.n_nodes} nodes")
        if not np.all(np.isfinite(v.view(float))):
            raise ShapeError("field values must be finite")
        object.__setattr__(self, "values", v)
        if self.scale_weights is not None:
            w = np.asarray(self.scale_weights, dtype=float)
            if w.shape != (v.shape[1],):
                raise ShapeError("scale_weights must have one entry per component")
            if np.any(w <= 0):
                raise DomainError("scale weights must be positive")
            object.__setattr__(self, "scale_weights", w)

    @property
    def dim(self):
        return self.values.shape[1]

    def ring_view(self):
        """(n_rings, nt, dim) view of the values."""
        g = self.grid
        return self.values.reshape(g.n_rings, g.nt, self.dim)

    def component(self, c) -> "GridField":
        return GridField(self.grid, self.values[:, c], self.scale_weights[c : c + 1] if self.scale_weights is not None else None)

    def boundary_values(self):
        """(nt, dim) trace on |zeta| = 1."""
        return self.values[self.grid.boundary_index]

    def with_values(self, values) -> "GridField":
        return GridField(self.grid, values, self.scale_weights)

    def __add__(self, other):
        if isinstance(other, GridField):
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridField):
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def component_norms(self, s: float = 0.0):
        """Per-node C^N norm, optionally in the Hilbert-scale metric of order s."""
        v = self.values
        if s != 0.0:
            if self.scale_weights is None:
                raise DomainError("field has no scale weights; cannot take a scale norm")
            v = v * self.scale_weights[None, :] ** s
        return np.sqrt(np.sum(np.abs(v) ** 2, axis=1))


def field_from_function(grid: DiscGrid, fn, dim: int | None = None, scale_weights=None) -> GridField:
    """Sample fn (vectorized over a complex node array) on the grid."""
    v = np.asarray(fn(grid.nodes), dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if dim is not None and v.shape[1] != dim:
        raise ShapeError(f"function returned dim {v.shape[1]}, expected {dim}")
    return GridField(grid, v, scale_weights)


def constant_field(grid: DiscGrid, vec) -> GridField:
    vec = np.atleast_1d(np.asarray(vec, dtype=complex))
    return GridField(grid, np.tile(vec, (grid.n_nodes, 1)))


# ---------------------------------------------------------------------------
# quadrature and derivatives
# ---------------------------------------------------------------------------


def quadrature(f: GridField):
    """Integral of f over the disc, one complex value per component."""
    return f.values.T @ f.grid.quad_weights


def _polar_partials(f: GridField, spectral_theta: bool = False):
    """(df/dr, df/dtheta) on the ring view."""
    g = f.grid
    v = f.ring_view()
    idx, wgt = g._radial_stencil()
    fr = np.einsum("as,asjd->ajd", wgt, v[idx])
    if spectral_theta:
        k = np.fft.fftfreq(g.nt, d=1.0 / g.nt)
        ft = np.fft.ifft(1j * k[None, :, None] * np.fft.fft(v, axis=1), axis=1)
    else:
        ft = (np.roll(v, -1, axis=1) - np.roll(v, 1, axis=1)) / (2.0 * g.dtheta)
    return fr, ft


def dbar(f: GridField, spectral_theta: bool = False) -> GridField:
    """Wirtinger derivative d/d(conj zeta) by the polar chain rule."""
    g = f.grid
    fr, ft = _polar_partials(f, spectral_theta)
    phase = np.exp(1j * g.theta)[None, :, None]
    rinv = (1.0 / g.radii)[:, None, None]
    out = 0.5 * phase * (fr + 1j * rinv * ft)
    return f.with_values(out.reshape(g.n_nodes, f.dim))


def d(f: GridField, spectral_theta: bool = False) -> GridField:
    """Wirtinger derivative d/d(zeta)."""
    g = f.grid
    fr, ft = _polar_partials(f, spectral_theta)
    phase = np.exp(-1j * g.theta)[None, :, None]
    rinv = (1.0 / g.radii)[:, None, None]
    out = 0.5 * phase * (fr - 1j * rinv * ft)
    return f.with_values(out.reshape(g.n_nodes, f.dim))


def lp_norm(f: GridField, p: float, s: float = 0.0):
    """L^p norm of the pointwise C^N (scale-)norm over the disc."""
    if p < 1:
        raise DomainError("p must be >= 1")
    pn = f.component_norms(s)
    return float(np.sum(f.grid.quad_weights * pn**p) ** (1.0 / p))


def sup_norm(f: GridField, mask=None, s: float = 0.0):
    pn = f.component_norms(s)
    if mask is not None:
        pn = pn[mask]
    return float(np.max(pn))


def sobolev_norm(f: GridField, p: float, s: float = 0.0, spectral_theta: bool = False):
    """W^{1,p} norm: values plus both first real-coordinate derivatives."""
    fz = d(f, spectral_theta)
    fzb = dbar(f, spectral_theta)
    fx = fz + fzb
    fy = fz.with_values(1j * (fz.values - fzb.values))
    return float((lp_norm(f, p, s) ** p + lp_norm(fx, p, s) ** p + lp_norm(fy, p, s) ** p) ** (1.0 / p))


def holder_seminorm(f: GridField, alpha: float, sample_pairs: int = 4000, seed: int = 0,
                    mask=None, s: float = 0.0):
    """Sampled Hoelder seminorm: max ||f(z1)-f(z2)|| / |z1-z2|^alpha over node pairs."""
    if not 0.0 < alpha <= 1.0:
        raise DomainError("alpha must lie in (0, 1]")
    g = f.grid
    nodes = g.nodes
    v = f.values
    if s != 0.0:
        if f.scale_weights is None:
            raise DomainError("field has no scale weights")
        v = v * f.scale_weights[None, :] ** s
    cand = np.arange(g.n_nodes) if mask is None else np.flatnonzero(mask)
    if len(cand) < 2:
        raise DomainError("need at least two admissible nodes")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(cand), size=sample_pairs)
    j = rng.integers(0, len(cand), size=sample_pairs)
    keep = i != j
    i, j = cand[i[keep]], cand[j[keep]]
    num = np.sqrt(np.sum(np.abs(v[i] - v[j]) ** 2, axis=1))
    den = np.abs(nodes[i] - nodes[j]) ** alpha
    best = float(np.max(num / den)) if len(num) else 0.0
    # deterministic coarse sweep so the estimate cannot miss far-apart extrema
    step = max(1, len(cand) // 64)
    sub = cand[::step]
    dv = v[sub][:, None, :] - v[sub][None, :, :]
    dn = np.sqrt(np.sum(np.abs(dv) ** 2, axis=2))
    dz = np.abs(nodes[sub][:, None] - nodes[sub][None, :])
    np.fill_diagonal(dz, np.inf)
    best = max(best, float(np.max(dn / dz**alpha)))
    return best


@dataclass(frozen=True)
class NormReport:
    """L^p, Sobolev and sampled Hoelder numbers of one field."""

    p: float
    lp: float
    w1p: float
    holder_alpha: float
    holder_seminorm: float

    def __post_init__(self):
        if min(self.lp, self.w1p, self.holder_seminorm) < 0:
            raise DomainError("norms must be nonnegative")


def norm_report(f: GridField, p: float, seed: int = 0) -> NormReport:
    """Norm summary; the Hoelder exponent is (p-2)/p for p > 2, else 1."""
    alpha = (p - 2.0) / p if p > 2 else 1.0
    return NormReport(p=p, lp=lp_norm(f, p), w1p=sobolev_norm(f, p),
                      holder_alpha=alpha, holder_seminorm=holder_seminorm(f, alpha, seed=seed))


def norm_reports_csv(path, reports):
    lines = ["p,lp,w1p,holder_alpha,holder_seminorm"]
    for r in reports:
        lines.append(f"{r.p:.17g},{r.lp:.17g},{r.w1p:.17g},{r.holder_alpha:.17g},{r.holder_seminorm:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass(frozen=True)
class MorreyReport:
    p: float
    alpha: float
    resolutions: tuple
    ratios: tuple
    spread: float          # (max - min) / min of the ratios
    bounded: bool


def morrey_ratio(f: GridField, p: float, seed: int = 0):
    """Hoelder-to-Sobolev ratio at alpha = (p-2)/p for one field."""
    if p <= 2:
        raise DomainError("Morrey ratio needs p > 2")
    alpha = (p - 2.0) / p
    h = holder_seminorm(f, alpha, seed=seed)
    w = sobolev_norm(f, p)
    return h / w if w > 0 else 0.0


def morrey_check(fn, p: float, resolutions=(32, 64, 128), dim: int | None = None,
                 seed: int = 0, spread_tol: float = 0.2) -> MorreyReport:
    """Track the Hoelder/Sobolev ratio of a sampled map across refinements.

    fn is a vectorized map from complex nodes to values.  The bounded flag
    reports whether the ratio stays within spread_tol across the sequence.
    """
    if p <= 2:
        raise DomainError("Morrey check needs p > 2")
    ratios = []
    for nr in resolutions:
        g = DiscGrid(nr, nr)
        ratios.append(morrey_ratio(field_from_function(g, fn, dim), p, seed=seed))
    ratios = tuple(ratios)
    lo, hi = min(ratios), max(ratios)
    spread = (hi - lo) / lo if lo > 0 else np.inf
    return MorreyReport(p=p, alpha=(p - 2.0) / p, resolutions=tuple(resolutions),
                        ratios=ratios, spread=float(spread), bounded=bool(spread <= spread_tol))


# ---------------------------------------------------------------------------
# off-node evaluation
# ---------------------------------------------------------------------------


def interp_field(f: GridField, points):
    """Bicubic Lagrange interpolation at interior points; returns (len, dim)."""
    g = f.grid
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    v = f.ring_view()
    out = np.empty((len(pts), f.dim), dtype=complex)
    radii = g.radii
    for k, z in enumerate(pts):
        r = abs(z)
        th = np.angle(z) % (2.0 * np.pi)
        if r > 1.0 + 1e-12:
            raise DomainError(f"point {z} outside the closed disc")
        a = int(np.searchsorted(radii, min(r, 1.0)))
        a0 = min(max(a - 2, 0), g.n_rings - 4)
        js = int(np.floor(th / g.dtheta))
        jj = (np.arange(js - 1, js + 3)) % g.nt
        # angular Lagrange on the 4 wrapped nodes
        tj = g.theta[jj] + 2.0 * np.pi * np.floor((np.arange(js - 1, js + 3)) / g.nt)
        lw_t = np.ones(4)
        for m in range(4):
            for l in range(4):
                if l != m:
                    lw_t[m] *= (th - tj[l]) / (tj[m] - tj[l])
        rs = radii[a0 : a0 + 4]
        lw_r = np.ones(4)
        for m in range(4):
            for l in range(4):
                if l != m:
                    lw_r[m] *= (r - rs[l]) / (rs[m] - rs[l])
        block = v[a0 : a0 + 4][:, jj, :]
        out[k] = np.einsum("a,j,ajd->d", lw_r, lw_t, block)
    return out


def eval_center(f: GridField):
    """(f(0), f_zeta(0), f_zbar(0)) from angular Fourier modes of the inner rings.

    Fits the mode-0 data with c + b r^2 + e r^4 and the mode (+/-)1 data with
    a r + g r^3 over the three innermost rings.
    """
    g = f.grid
    v = f.ring_view()[:3]
    hat = np.fft.fft(v, axis=1) / g.nt
    r = g.radii[:3]
    van_even = np.vander(r**2, 3, increasing=True)          # 1, r^2, r^4
    van_odd = np.stack([r, r**3], axis=1)
    val = np.linalg.solve(van_even, hat[:, 0, :])[0]
    dz = np.linalg.lstsq(van_odd, hat[:, 1, :], rcond=None)[0][0]
    dzb = np.linalg.lstsq(van_odd, hat[:, -1, :], rcond=None)[0][0]
    return val, dz, dzb


# ---------------------------------------------------------------------------
# field file format
# ---------------------------------------------------------------------------

_PRECISIONS = {"f64": "<c16", "f32": "<c8"}


def save_field(path, f: GridField, precision: str = "f64"):
    """One UTF-8 JSON header line, then raw little-endian complex samples.

    Layout: interleaved (re, im) floats, node-major then component.
    """
    if precision not in _PRECISIONS:
        raise DomainError(f"unknown precision {precision!r}")
    header = {"nr": f.grid.nr, "nt": f.grid.nt, "dim": f.dim, "precision": precision}
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("utf-8"))
        fh.write(np.ascontiguousarray(f.values.astype(_PRECISIONS[precision])).tobytes())


def load_field(path) -> GridField:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    grid = DiscGrid(header["nr"], header["nt"])
    dt = _PRECISIONS[header["precision"]]
    v = np.frombuffer(raw, dtype=dt).astype(complex).reshape(grid.n_nodes, header["dim"])
    return GridField(grid, v)
