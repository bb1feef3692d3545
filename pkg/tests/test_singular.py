import numpy as np
import pytest

from conftest import smooth_scalar_field
from holodisc.errors import DomainError
from holodisc.grid import (DiscGrid, GridField, constant_field, d, dbar, field_from_function,
                           lp_norm, sup_norm)
from holodisc.singular import (CIRCLE_WEIGHT, TRIANGLE_WEIGHT, WeightSingularityWarning,
                               WeightSpec, beurling_S, beurling_S_pv, boundary_cauchy_K,
                               cauchy_T, cauchy_T_at, estimate_opnorm, j_alpha_beta, op_S1,
                               op_S2, op_T1, op_T1_at, op_T2, t1_boundary_residual,
                               triangle_boundary_residual, weighted_TQ, weighted_TQ_at)


# ---------------------------------------------------------------------------
# Cauchy transform
# ---------------------------------------------------------------------------


def test_T_of_zero_and_one(grid64):
    zero = constant_field(grid64, [0.0])
    assert np.max(np.abs(cauchy_T(zero).values)) == 0.0
    one = constant_field(grid64, [1.0])
    t1 = cauchy_T(one)
    assert np.max(np.abs(t1.values[:, 0] - np.conj(grid64.nodes))) <= 1e-13


def test_T_matches_refined_quadrature(grid32):
    # the coarse-grid transform of a smooth field agrees with a refined one
    fn = lambda z: np.exp(0.5 * z) * (1.0 - np.abs(z) ** 2)
    targets = np.array([0.1 + 0.2j, -0.4j, 0.55 - 0.1j])
    coarse = cauchy_T_at(field_from_function(grid32, fn), targets)
    fine = cauchy_T_at(field_from_function(DiscGrid(128, 128), fn), targets)
    assert np.max(np.abs(coarse - fine)) <= 5e-3


def test_T_dbar_inverse_refinement():
    errs = []
    for nr in (32, 64):
        g = DiscGrid(nr, nr)
        f = field_from_function(g, lambda z: np.conj(z))
        res = dbar(cauchy_T(f)).values - f.values
        errs.append(sup_norm(GridField(g, res), mask=g.interior_mask(0.0)))
    assert errs[1] <= 0.7 * errs[0]
    assert errs[1] <= 5.0 * (1.0 / 64.0)


# ---------------------------------------------------------------------------
# Beurling transform
# ---------------------------------------------------------------------------


def test_S_of_constant_vanishes(grid64):
    sf = beurling_S(constant_field(grid64, [1.0]))
    assert sup_norm(sf, mask=grid64.interior_mask(0.05)) <= 5.0 * grid64.h


def test_S_isometry_on_monomials(grid128):
    for n in (1, 3):
        f = field_from_function(grid128, lambda z, n=n: z**n)
        ratio = lp_norm(beurling_S(f), 2.0) / lp_norm(f, 2.0)
        assert ratio == pytest.approx(1.0, abs=0.02)


def test_S_pv_cross_check(grid64):
    f = smooth_scalar_field(grid64, seed=3)
    s1 = beurling_S(f)
    s2 = beurling_S_pv(f)
    mask = grid64.interior_mask(0.1)
    diff = sup_norm(GridField(grid64, s1.values - s2.values), mask=mask)
    scale = sup_norm(s1, mask=mask)
    assert diff <= 0.25 * max(scale, 1.0)


# ---------------------------------------------------------------------------
# circle- and triangle-adapted operators
# ---------------------------------------------------------------------------


def test_T1_zero_and_boundary(grid64):
    zero = constant_field(grid64, [0.0])
    assert np.max(np.abs(op_T1(zero).values)) == 0.0
    f = smooth_scalar_field(grid64, seed=1)
    assert t1_boundary_residual(op_T1(f)) <= 1e-12


def test_T1_reflection_equals_weighted_route(grid32):
    # partial fractions make the two finite sums identical at off-node targets
    f = smooth_scalar_field(grid32, seed=2)
    rng = np.random.default_rng(0)
    targets = 0.9 * rng.random(12) * np.exp(2j * np.pi * rng.random(12))
    route_a = op_T1_at(f, targets, subtract=False)
    t_at_one = cauchy_T_at(f, np.array([1.0 + 0.0j]), subtract=False)[0, 0]
    route_b = weighted_TQ_at(f, CIRCLE_WEIGHT, targets) + 2j * np.imag(t_at_one)
    assert np.max(np.abs(route_a - route_b)) <= 1e-8


def test_T1_dbar_inverse(grid64):
    f = smooth_scalar_field(grid64, seed=4)
    res = dbar(op_T1(f)).values - f.values
    assert sup_norm(GridField(grid64, res), mask=grid64.interior_mask(0.1)) <= 5.0 * grid64.h


def test_reflected_term_is_holomorphic(grid64):
    from holodisc.singular import cauchy_T_reflected

    f = smooth_scalar_field(grid64, seed=5)
    refl = cauchy_T_reflected(f)
    hol = GridField(grid64, np.conj(refl.values))
    assert sup_norm(dbar(hol), mask=grid64.interior_mask(0.05)) <= 60.0 * grid64.h**2


def test_triangle_weight_normalization():
    w = TRIANGLE_WEIGHT
    assert w.eval(np.array([0.0j]))[0] == pytest.approx(np.exp(0.75j * np.pi), abs=1e-14)
    # X points along the side directions on the three arcs: the line
    # conditions hold with argument 3pi/4, pi/4, 0 modulo the sign of the
    # real factor
    th1 = np.linspace(0.1, np.pi / 2 - 0.1, 9)
    th2 = np.linspace(np.pi / 2 + 0.1, np.pi - 0.1, 9)
    th3 = np.linspace(np.pi + 0.1, 2 * np.pi - 0.1, 9)
    for th, coef in ((th1, 1.0 + 1.0j), (th2, 1.0 - 1.0j), (th3, 1.0)):
        x = w.X(np.exp(1j * th))
        assert np.max(np.abs(np.imag(coef * x))) <= 1e-12 * np.max(np.abs(x))
    # spot values at the arc midpoints fix the argument itself
    assert np.angle(w.X(np.exp(0.25j * np.pi))) == pytest.approx(3 * np.pi / 4, abs=1e-10)
    assert np.angle(w.X(np.exp(0.75j * np.pi))) == pytest.approx(np.pi / 4, abs=1e-10)
    assert abs(np.angle(w.X(np.exp(1.5j * np.pi)))) % np.pi == pytest.approx(0.0, abs=1e-10)
    assert w.p_window() == (pytest.approx(4.0 / 3.0), pytest.approx(8.0 / 3.0))


def test_weight_spec_validation_and_window():
    w = WeightSpec(points=(1.0, -1.0), alphas=(0.5, 0.25))
    p1, p2 = w.p_window()
    assert p1 == pytest.approx(2.0 / 1.5)
    assert p2 == pytest.approx(2.0 / 0.75)
    with pytest.raises(DomainError):
        WeightSpec(points=(0.5,), alphas=(0.5,))
    with pytest.raises(DomainError):
        WeightSpec(points=(1.0,), alphas=(1.5,))


def test_weighted_TQ_zero_and_inverse(grid64):
    zero = constant_field(grid64, [0.0])
    assert np.max(np.abs(weighted_TQ(zero, TRIANGLE_WEIGHT).values)) == 0.0
    f = smooth_scalar_field(grid64, seed=6)
    res = dbar(op_T2(f)).values - f.values
    mask = grid64.interior_mask(0.0)
    for zk in (1.0, -1.0, 1.0j):
        mask &= np.abs(grid64.nodes - zk) > 0.3
    assert sup_norm(GridField(grid64, res), mask=mask) <= 8.0 * grid64.h


def test_T2_boundary_conditions(grid64):
    f = smooth_scalar_field(grid64, seed=7)
    res = triangle_boundary_residual(op_T2(f))
    assert max(res) <= 10.0 * np.sqrt(grid64.h)
    # the construction keeps the trace on the side directions to rounding
    assert max(res) <= 1e-10


def test_componentwise_extension_exact(grid48):
    # operators act on vector fields exactly componentwise
    rng = np.random.default_rng(8)
    vals = rng.standard_normal((grid48.n_nodes, 3)) + 1j * rng.standard_normal((grid48.n_nodes, 3))
    f = GridField(grid48, vals)
    full = cauchy_T(f)
    for c in range(3):
        single = cauchy_T(f.component(c))
        assert np.array_equal(full.values[:, c], single.values[:, 0])


# ---------------------------------------------------------------------------
# boundary Cauchy integral
# ---------------------------------------------------------------------------


def test_K_of_constant(grid64):
    trace = np.ones(grid64.nt, dtype=complex)
    kf = boundary_cauchy_K(grid64, trace)
    assert np.max(np.abs(kf.values - 1.0)) <= 1e-10


def test_K_of_monomial(grid64):
    zeta = np.exp(1j * grid64.theta)
    kf = boundary_cauchy_K(grid64, zeta**3)
    assert np.max(np.abs(kf.values[:, 0] - grid64.nodes**3)) <= 1e-10


def test_K_of_antiholomorphic_trace(grid64):
    zeta = np.exp(1j * grid64.theta)
    kf = boundary_cauchy_K(grid64, np.conj(zeta))
    assert np.max(np.abs(kf.values)) <= 1e-10


def test_K_is_holomorphic(grid64):
    zeta = np.exp(1j * grid64.theta)
    trace = np.exp(zeta) + np.conj(zeta) ** 2
    kf = boundary_cauchy_K(grid64, trace)
    assert sup_norm(dbar(kf), mask=grid64.interior_mask(0.1)) <= 50.0 * grid64.h**2


# ---------------------------------------------------------------------------
# operator norm studies
# ---------------------------------------------------------------------------


def test_opnorm_identity(grid48):
    est = estimate_opnorm(lambda f: f, 2.0, grid48, trials=8, seed=0)
    assert est.estimate == pytest.approx(1.0, abs=1e-12)


def test_opnorm_monotone_in_trials(grid48):
    e5 = estimate_opnorm(beurling_S, 2.0, grid48, trials=5, seed=1)
    e10 = estimate_opnorm(beurling_S, 2.0, grid48, trials=10, seed=1)
    assert e10.estimate >= e5.estimate - 1e-15
    assert e10.ratios[:5] == e5.ratios


def test_s1_estimate_closer_to_one_near_two(grid64):
    e205 = estimate_opnorm(op_S1, 2.05, grid64, trials=12, seed=2)
    e22 = estimate_opnorm(op_S1, 2.2, grid64, trials=12, seed=2)
    assert abs(e205.estimate - 1.0) <= abs(e22.estimate - 1.0) + 0.01


def test_s2_window_bounded(grid48):
    # bounded estimates across the window, minimal near p = 2
    ests = {p: estimate_opnorm(op_S2, p, grid48, trials=10, seed=3).estimate
            for p in (1.5, 2.0, 2.5)}
    assert all(v <= 2.0 for v in ests.values())
    assert ests[2.0] <= min(ests[1.5], ests[2.5]) + 0.02


# ---------------------------------------------------------------------------
# the kernel-pair estimate
# ---------------------------------------------------------------------------


def test_j_alpha_beta_preconditions(grid32):
    with pytest.raises(DomainError):
        j_alpha_beta(1.0, 1.0, 1.0, 0.0, grid32)
    with pytest.raises(DomainError):
        j_alpha_beta(2.5, 0.5, 1.0, 0.0, grid32)
    with pytest.raises(DomainError):
        j_alpha_beta(1.2, 1.2, 0.5, 0.0, grid32)


def test_j_alpha_beta_refinement():
    z0, z = 1.0 + 0.0j, -0.5 + 0.0j
    vals = [j_alpha_beta(1.2, 1.2, z0, z, DiscGrid(nr, nr)) for nr in (128, 192)]
    assert vals[1] == pytest.approx(vals[0], rel=0.01)


def test_j_alpha_beta_bounded_by_distance_power(grid96):
    alpha = beta = 1.2
    z0 = 1.0 + 0.0j
    ratios = []
    for s in (0.3, 0.5, 0.7, 0.85):
        z = s * z0
        val = j_alpha_beta(alpha, beta, z0, z, grid96)
        ratios.append(val * abs(z - z0) ** (alpha + beta - 2.0))
    # J |z - z0|^{alpha+beta-2} stays bounded as z approaches z0
    assert max(ratios) <= 3.0 * min(ratios)


def test_weight_singularity_warning(grid32):
    node = grid32.nodes[5]

    class VanishingWeight:
        # vanishes exactly on one quadrature node
        points = (1.0 + 0.0j,)
        alphas = (0.5,)

        def eval(self, z):
            z = np.asarray(z, dtype=complex)
            out = np.ones_like(z)
            out[np.abs(z - node) < 1e-12] = 0.0
            return out

    f = constant_field(grid32, [1.0])
    with pytest.warns(WeightSingularityWarning, match="excluded"):
        weighted_TQ(f, VanishingWeight())


def test_generic_weight_dbar_inverse_refinement():
    w = WeightSpec(points=(1.0, -1.0), alphas=(0.5, 0.25))
    errs = []
    for nr in (32, 64):
        g = DiscGrid(nr, nr)
        f = smooth_scalar_field(g, seed=9)
        res = dbar(weighted_TQ(f, w)).values - f.values
        mask = g.interior_mask(0.0)
        for zk in w.points:
            mask &= np.abs(g.nodes - zk) > 0.3
        errs.append(sup_norm(GridField(g, res), mask=mask))
    assert errs[1] <= 0.7 * errs[0]
