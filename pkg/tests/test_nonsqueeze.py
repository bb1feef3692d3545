import numpy as np
import pytest

from conftest import smooth_scalar_field
import holodisc as hd
from holodisc.beltrami import constant_structure, zero_structure
from holodisc.errors import ConvergenceError, DomainError
from holodisc.grid import DiscGrid, GridField, dbar, field_from_function, sup_norm
from holodisc.nonsqueeze import (certify_antiholomorphic_bound, flat_family, hamiltonian_flow,
                                 identity_map, nonsqueezing_experiment, perturb_family,
                                 rh_boundary_residual_w, rh_boundary_residual_z, rh_solve_w,
                                 rh_solve_z, schwarz_integral, structure_of_map,
                                 symplectic_area, unitary_rotation)


# ---------------------------------------------------------------------------
# symplectic area
# ---------------------------------------------------------------------------


def test_area_unit_disc(grid96):
    assert symplectic_area(flat_family([0.2 + 0.1j], grid96)) == pytest.approx(np.pi, abs=5e-3)


def test_area_scaled_disc(grid96):
    Z = field_from_function(grid96, lambda z: np.stack([2.0 * z, np.full_like(z, 0.3)], axis=-1))
    assert symplectic_area(Z) == pytest.approx(4.0 * np.pi, abs=2e-2)


def test_area_mixed_disc(grid96):
    eps = 0.25
    vals = np.stack([grid96.nodes, eps * np.conj(grid96.nodes)], axis=1)
    Z = GridField(grid96, vals)
    assert symplectic_area(Z) == pytest.approx(np.pi * (1 - eps**2), abs=5e-3)


def test_area_quadratic_scaling(grid64):
    Z = smooth_scalar_field(grid64, seed=3)
    lam = 1.7
    assert symplectic_area(lam * Z) == pytest.approx(lam**2 * symplectic_area(Z), rel=1e-12)


def test_area_stokes_vanishing_for_constant_re_trace(grid96):
    # constant real part on the rim makes the component's net pullback zero
    f = field_from_function(grid96, lambda z: 1j * (z**2).imag + 0.7)
    assert abs(symplectic_area(f)) <= 5.0 * grid96.h


# ---------------------------------------------------------------------------
# Riemann-Hilbert solvers
# ---------------------------------------------------------------------------


def test_schwarz_integral_matches_data(grid64):
    h = np.cos(3 * grid64.theta) - 0.4 * np.sin(grid64.theta) + 0.2
    F = schwarz_integral(grid64, h)
    rim = np.real(F.boundary_values()[:, 0])
    assert np.max(np.abs(rim - h)) <= 1e-12
    assert sup_norm(dbar(F), mask=grid64.interior_mask(0.1)) <= 50.0 * grid64.h**2


def test_rh_w_trivial_and_constant(grid64):
    zero = GridField(grid64, np.zeros((grid64.n_nodes, 2), dtype=complex))
    zdata = np.zeros((grid64.nt, 2))
    W0 = rh_solve_w(zero, zdata)
    assert np.max(np.abs(W0.values)) == 0.0
    d0 = np.array([0.7, -0.2])
    Wc = rh_solve_w(zero, zdata, shift=d0)
    assert np.max(np.abs(Wc.values - d0[None, :])) == 0.0


def test_rh_w_random_source(grid96):
    src = GridField(grid96, np.stack(
        [smooth_scalar_field(grid96, seed=k).values[:, 0] for k in (1, 2)], axis=1))
    h = np.stack([np.cos(2 * grid96.theta), np.sin(grid96.theta) + 0.1], axis=1)
    W = rh_solve_w(src, h, shift=0.3)
    res = dbar(W).values - src.values
    assert sup_norm(GridField(grid96, res), mask=grid96.interior_mask(0.0)) <= 10.0 * grid96.h
    assert rh_boundary_residual_w(W, h, 0.3) <= 10.0 * grid96.h


def test_rh_z_trivial_and_kernel(grid64):
    zero = GridField(grid64, np.zeros(grid64.n_nodes, dtype=complex))
    hz = np.zeros(grid64.nt)
    Z0 = rh_solve_z(zero, hz)
    assert np.max(np.abs(Z0.values)) == 0.0
    # the kernel element i s zeta satisfies the homogeneous boundary condition
    s = 0.8
    Zk = rh_solve_z(zero, hz, c1_im=s)
    assert np.max(np.abs(Zk.values[:, 0] - 1j * s * grid64.nodes)) <= 1e-12
    assert rh_boundary_residual_z(Zk, hz) <= 1e-12
    # and so does c0 - conj(c0) zeta^2
    c0 = 0.3 - 0.4j
    Zc = rh_solve_z(zero, hz, c0=c0)
    assert rh_boundary_residual_z(Zc, hz) <= 1e-12


def test_rh_z_random_source(grid96):
    src = smooth_scalar_field(grid96, seed=4)
    hz = np.sin(2 * grid96.theta) + 0.3 * np.cos(5 * grid96.theta)
    Z = rh_solve_z(src, hz)
    res = dbar(Z).values - src.values
    assert sup_norm(GridField(grid96, res), mask=grid96.interior_mask(0.0)) <= 10.0 * grid96.h
    assert rh_boundary_residual_z(Z, hz) <= 10.0 * grid96.h


def test_rh_solvers_compose_surjectively(grid96):
    # residuals of the composed solve shrink under refinement
    def run(nr):
        g = DiscGrid(nr, nr)
        src = smooth_scalar_field(g, seed=5)
        hz = np.cos(3 * g.theta)
        Z = rh_solve_z(src, hz)
        res = dbar(Z).values - src.values
        return sup_norm(GridField(g, res), mask=g.interior_mask(0.0))

    assert run(96) <= 0.7 * run(48)


# ---------------------------------------------------------------------------
# the flat family and its perturbation
# ---------------------------------------------------------------------------


def test_flat_family_exact_conditions(grid96):
    p_prime = np.array([0.4 - 0.2j, 1.5j])
    Z = flat_family(p_prime, grid96)
    rim = Z.values[grid96.boundary_index]
    assert np.max(np.abs(np.abs(rim[:, 0]) - 1.0)) <= 1e-12
    assert np.max(np.abs(rim[:, 1:] - p_prime[None, :])) == 0.0
    assert symplectic_area(Z) == pytest.approx(np.pi, abs=5e-3)


def test_perturb_family_zero_structure(grid96):
    sol = perturb_family(zero_structure(3), np.array([0.2 + 0.1j, 0.5, -0.2j]), grid96)
    assert sol.iterations == 0
    assert sol.residual_boundary <= 1e-12
    assert sol.area == pytest.approx(np.pi, abs=5e-3)


def test_perturb_family_small_constant(grid96):
    Am = np.zeros((3, 3), dtype=complex)
    Am[0, 1] = 0.02
    Am[1, 0] = 0.015
    Am[2, 2] = 0.02j
    p = np.array([0.2 + 0.1j, 0.5, -0.2j])
    sol = perturb_family(constant_structure(Am), p, grid96)
    assert sol.converged and sol.iterations <= 6
    assert sol.area == pytest.approx(np.pi, abs=0.05)
    assert sol.residual_pde <= 2e-3
    # the disc passes through the requested point
    from holodisc.grid import interp_field

    at = interp_field(sol.Z, [sol.meta["zeta_star"]])[0]
    assert abs(at[0] - p[0]) <= 1e-8
    assert np.max(np.abs(at[1:] - p[1:])) <= 1e-8


def test_perturb_family_large_structure_fails_cleanly(grid64):
    Am = np.zeros((3, 3), dtype=complex)
    Am[0, 1] = 0.5
    Am[1, 0] = 0.45j
    Am[2, 0] = 0.3
    with pytest.raises(ConvergenceError) as exc:
        perturb_family(constant_structure(Am), np.array([0.1, 0.2, 0.3]), grid64)
    assert exc.value.history


# ---------------------------------------------------------------------------
# the experiment
# ---------------------------------------------------------------------------


def test_experiment_identity(grid96):
    rep = nonsqueezing_experiment(identity_map(4), grid96, r=1.0, R=1.0, eps=0.05)
    assert rep.verdict
    assert rep.projected_area >= np.pi * 0.81 - 0.02
    assert rep.antiholomorphic_sup <= 1e-12
    assert rep.disc_area == pytest.approx(np.pi, abs=0.05)


def test_experiment_rotation_matches_identity(grid96):
    rep_i = nonsqueezing_experiment(identity_map(4), grid96, r=1.0, R=1.0, eps=0.05)
    rep_u = nonsqueezing_experiment(unitary_rotation(4, seed=1), grid96, r=1.0, R=1.0, eps=0.05)
    assert rep_u.verdict
    assert rep_u.antiholomorphic_sup <= 1e-12
    assert rep_u.projected_area == pytest.approx(rep_i.projected_area, abs=1e-6)


def test_experiment_hamiltonian_flow(grid96):
    gen = hamiltonian_flow(4, time=0.05, seed=3)
    sup_a, c1_a = certify_antiholomorphic_bound(gen, 1.0)
    assert sup_a <= 0.05
    rep = nonsqueezing_experiment(gen, grid96, r=1.0, R=1.0, eps=0.05)
    assert rep.verdict
    assert rep.disc_area == pytest.approx(np.pi, abs=0.05)
    assert rep.projected_area >= rep.lelong_lower_bound - 0.02
    payload = rep.to_dict()
    assert payload["verdict"] is True


def test_experiment_parameter_validation(grid32):
    with pytest.raises(DomainError):
        nonsqueezing_experiment(identity_map(2), grid32, r=1.0, R=1.0, eps=0.6)


def test_structure_of_map_matches_derivative():
    gen = hamiltonian_flow(3, time=0.1, seed=5)
    A = structure_of_map(gen)
    P, Q = gen.deriv(np.zeros(3, dtype=complex))
    expected = Q @ np.linalg.inv(np.conj(P))
    got = A.eval_batch(np.zeros((1, 3), dtype=complex))[0]
    assert np.max(np.abs(got - expected)) <= 1e-12


def test_rh_data_bundle(grid64):
    src = smooth_scalar_field(grid64, seed=6)
    fib = GridField(grid64, np.stack([src.values[:, 0], 2.0 * src.values[:, 0]], axis=1))
    data = hd.RHData(base_source=src, base_form=np.cos(grid64.theta),
                     fiber_source=fib,
                     fiber_re=np.stack([np.sin(grid64.theta), 0 * grid64.theta], axis=1),
                     shift=np.array([0.2, -0.1]))
    zdot, wdot = data.solve()
    assert rh_boundary_residual_z(zdot, np.cos(grid64.theta)) <= 10.0 * grid64.h
    assert wdot is not None and wdot.dim == 2
    from holodisc.errors import ShapeError
    with pytest.raises(ShapeError):
        hd.RHData(base_source=src, base_form=np.zeros(3))
