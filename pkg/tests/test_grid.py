import numpy as np
import pytest

from conftest import smooth_scalar_field
from holodisc.errors import DomainError, ShapeError
from holodisc.grid import (DiscGrid, GridField, constant_field, d, dbar, eval_center,
                           field_from_function, holder_seminorm, interp_field, load_field,
                           lp_norm, morrey_check, norm_report, norm_reports_csv, quadrature,
                           save_field, sobolev_norm, sup_norm)


def test_weights_sum_to_pi_exactly(grid64):
    assert grid64.quad_weights.sum() == pytest.approx(np.pi, abs=1e-12)


def test_quadrature_constant_and_symmetry(grid64):
    one = constant_field(grid64, [1.0])
    assert quadrature(one)[0] == pytest.approx(np.pi, rel=1e-6)
    zf = field_from_function(grid64, lambda z: z)
    assert abs(quadrature(zf)[0]) <= 1e-12


def test_quadrature_radial_moment(grid64):
    f = field_from_function(grid64, lambda z: np.abs(z) ** 2)
    assert quadrature(f)[0] == pytest.approx(np.pi / 2.0, abs=5e-4)


def test_quadrature_low_monomials_second_order():
    # error of monomials of total degree <= 2 shrinks at O(h^2)
    errs = []
    for nr in (32, 64):
        g = DiscGrid(nr, nr)
        f = field_from_function(g, lambda z: z * np.conj(z))
        errs.append(abs(quadrature(f)[0] - np.pi / 2.0))
    assert errs[1] <= 0.3 * errs[0]


def test_dbar_of_antiholomorphic(grid64):
    f = field_from_function(grid64, lambda z: np.conj(z))
    res = dbar(f).values - 1.0
    assert np.max(np.abs(res)) <= 10.0 * grid64.h**2


def test_derivatives_of_holomorphic(grid64):
    f = field_from_function(grid64, lambda z: z**2)
    assert np.max(np.abs(dbar(f).values)) <= 30.0 * grid64.h**2
    dz = d(f).values[:, 0] - 2.0 * grid64.nodes
    assert np.max(np.abs(dz)) <= 30.0 * grid64.h**2


def test_dbar_of_radial(grid64):
    f = field_from_function(grid64, lambda z: np.abs(z) ** 2)
    res = dbar(f).values[:, 0] - grid64.nodes
    assert np.max(np.abs(res)) <= 10.0 * grid64.h**2


def test_spectral_theta_kills_angular_error(grid64):
    f = field_from_function(grid64, lambda z: z)
    assert np.max(np.abs(dbar(f, spectral_theta=True).values)) <= 1e-12


def test_lp_norm_closed_forms(grid64):
    c = 2.0 - 1.5j
    f = constant_field(grid64, [c])
    assert lp_norm(f, 3.0) == pytest.approx(abs(c) * np.pi ** (1.0 / 3.0), rel=1e-6)
    zf = field_from_function(grid64, lambda z: z)
    assert lp_norm(zf, 2.0) == pytest.approx(np.sqrt(np.pi / 2.0), rel=1e-4)
    with pytest.raises(DomainError):
        lp_norm(zf, 0.5)


def test_holder_of_identity(grid64):
    zf = field_from_function(grid64, lambda z: z)
    assert holder_seminorm(zf, 1.0) == pytest.approx(1.0, abs=1e-8)


def test_sobolev_norm_of_linear(grid64):
    zf = field_from_function(grid64, lambda z: z)
    # |z|_p^p + |z_x|_p^p + |z_y|_p^p with z_x = 1, z_y = i
    expected = (np.pi / 2.0 + np.pi + np.pi) ** 0.5
    assert sobolev_norm(zf, 2.0) == pytest.approx(expected, rel=1e-3)


def test_scale_norm_monotone(grid64):
    theta = np.arange(1, 4, dtype=float)
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((grid64.n_nodes, 3)) + 1j * rng.standard_normal((grid64.n_nodes, 3))
    f = GridField(grid64, vals, scale_weights=theta)
    assert lp_norm(f, 2.0, s=0.0) <= lp_norm(f, 2.0, s=0.5) <= lp_norm(f, 2.0, s=1.0)
    # s = 0 equals the plain norm
    assert lp_norm(f, 2.0, s=0.0) == pytest.approx(lp_norm(GridField(grid64, vals), 2.0))


def test_morrey_constant_and_smooth():
    rep0 = morrey_check(lambda z: np.ones_like(z), 4.0, resolutions=(32, 64))
    assert max(rep0.ratios) <= 1e-10
    rep = morrey_check(lambda z: z, 4.0, resolutions=(32, 64, 128))
    assert rep.bounded and rep.spread <= 0.2
    with pytest.raises(DomainError):
        morrey_check(lambda z: z, 2.0)


def test_morrey_cusp_flagged():
    rep = morrey_check(lambda z: np.abs(z) ** 0.1, 4.0, resolutions=(32, 64, 128))
    assert not rep.bounded
    assert rep.ratios[-1] > rep.ratios[0]


def test_field_file_roundtrip(tmp_path, grid32):
    f = smooth_scalar_field(grid32, seed=5)
    path = tmp_path / "f.field"
    save_field(path, f)
    g = load_field(path)
    assert g.grid.nr == grid32.nr and g.grid.nt == grid32.nt
    assert np.array_equal(g.values, f.values)
    # header first line is JSON
    header = path.read_bytes().split(b"\n", 1)[0].decode()
    assert '"nr": 32' in header and '"precision": "f64"' in header
    # byte determinism
    path2 = tmp_path / "f2.field"
    save_field(path2, f)
    assert path.read_bytes() == path2.read_bytes()


def test_norm_report_csv(tmp_path, grid32):
    f = smooth_scalar_field(grid32, seed=1)
    reps = [norm_report(f, p) for p in (2.0, 4.0)]
    out = tmp_path / "norms.csv"
    norm_reports_csv(out, reps)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "p,lp,w1p,holder_alpha,holder_seminorm"
    assert len(lines) == 3
    assert reps[1].holder_alpha == pytest.approx(0.5)


def test_interp_matches_smooth_function(grid64):
    f = field_from_function(grid64, lambda z: np.exp(0.7 * z))
    rng = np.random.default_rng(2)
    pts = 0.8 * (rng.random(20) * np.exp(2j * np.pi * rng.random(20)))
    vals = interp_field(f, pts)[:, 0]
    assert np.max(np.abs(vals - np.exp(0.7 * pts))) <= 50.0 * grid64.h**4


def test_eval_center_polynomial(grid64):
    c0, c1, c2 = 0.3 - 0.2j, 1.1 + 0.4j, -0.7j
    f = field_from_function(grid64, lambda z: c0 + c1 * z + c2 * np.conj(z) + 0.2 * z**2)
    val, dz, dzb = eval_center(f)
    assert abs(val[0] - c0) <= 1e-8
    assert abs(dz[0] - c1) <= 1e-6
    assert abs(dzb[0] - c2) <= 1e-6


def test_field_validation(grid32):
    with pytest.raises(ShapeError):
        GridField(grid32, np.ones(5))
    bad = np.ones((grid32.n_nodes, 1), dtype=complex)
    bad[0] = np.nan
    with pytest.raises(ShapeError):
        GridField(grid32, bad)
