import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from semiclassic.core import (
    Grid1D,
    InitialDataSpec,
    Potential,
    ResolutionError,
    SemiclassicalConfig,
    SplineSpace,
    TestFunction,
    abs_saddle_potential,
    bm_norm,
    build_initial_data,
    cone_potential,
    power_saddle_potential,
    smooth_cutoff,
    v_shape_potential,
)


# -- grids and configuration ------------------------------------------------

def test_uniform_grid_spacing_and_endpoints():
    g = Grid1D.uniform(-2.0, 3.0, 7)
    assert g.nodes[0] == -2.0 and g.nodes[-1] == 3.0
    assert np.allclose(np.diff(g.nodes), 5.0 / 7)
    assert g.is_uniform


@pytest.mark.parametrize("nodes", [[0.0, 0.0, 1.0], [0.0, 2.0, 1.0], [1.0, 0.5]])
def test_grid_rejects_unsorted_nodes(nodes):
    with pytest.raises(ValueError):
        Grid1D(min(nodes), max(nodes), np.array(nodes))


@pytest.mark.parametrize("kw", [{"hbar": 0.0}, {"hbar": 0.1, "sigma_x": 0.0},
                                {"hbar": 0.1, "sigma_k": 1.5}, {"hbar": 0.1, "M_bm": -1.0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SemiclassicalConfig(**kw)


# -- potentials -------------------------------------------------------------

def test_abs_saddle_matches_printed_formula():
    x = np.linspace(-6, 6, 1001)
    printed = 1 + (1 + np.tanh(4 * (x + 2.5))) * (1 + np.tanh(-4 * (x - 2.5))) * (-np.abs(x) + 4) / 8
    assert np.allclose(abs_saddle_potential().value(x), printed, rtol=0, atol=1e-14)


def test_abs_saddle_close_to_cone_near_origin():
    x = np.linspace(-0.5, 0.5, 1001)
    assert np.max(np.abs(abs_saddle_potential().value(x) - (3 - np.abs(x) / 2))) < 1e-6


@pytest.mark.parametrize("V", [abs_saddle_potential(), abs_saddle_potential(4.0),
                               v_shape_potential(), power_saddle_potential(0.5)])
def test_derivative_matches_finite_differences_off_singular_points(V):
    x = np.concatenate([np.linspace(-5, -0.1, 200), np.linspace(0.1, 5, 200)])
    h = 1e-6
    fd = (V.value(x + h) - V.value(x - h)) / (2 * h)
    assert np.allclose(V.derivative(x), fd, atol=1e-6)


def test_singular_points_are_roots_of_g():
    V = cone_potential(1.0, -0.5, 0.3)
    for p in V.singular_points:
        assert V.g(np.array([p]))[0][0] == 0.0
    with pytest.raises(ValueError):
        Potential.conical(V.V0, V.w, V.g, [0.0])


def test_smooth_cutoff_is_exactly_flat_outside_transition():
    b = smooth_cutoff(1.0)
    inner, _ = b(np.linspace(-2, 2, 101))
    outer, _ = b(np.array([-5.0, -4.0, 4.0, 7.0]))
    assert np.all(inner == 1.0) and np.all(outer == 0.0)


# -- initial data -----------------------------------------------------------

def test_gaussian_wkb_unit_norm():
    sp = SplineSpace.uniform(-3, 0, 300, 5)
    u = build_initial_data(InitialDataSpec("gaussian_wkb", x0=-1.5, m=1.0), sp,
                           SemiclassicalConfig(1e-2))
    assert abs(u.norm() - 1) < 1e-6


def test_gaussian_wkb_concentration():
    h = 1e-2
    sp = SplineSpace.uniform(-3, 0, 300, 5)
    u = build_initial_data(InitialDataSpec("gaussian_wkb", x0=-1.5), sp, SemiclassicalConfig(h))
    x = np.linspace(-1.5 - 4 * math.sqrt(h), -1.5 + 4 * math.sqrt(h), 4001)
    inside = np.trapezoid(np.abs(u(x)) ** 2, x)
    assert inside >= 0.999


def test_collision_pair_symmetric_for_theta_zero():
    u, _ = InitialDataSpec("collision_pair", x0=-1.5, theta=0.0).functions(1e-2)
    x = np.linspace(-4, 4, 2001)
    assert np.max(np.abs(u(x) - u(-x))) < 1e-12


def test_wkb_slice_norm_matches_amplitude_quadrature():
    h = 1e-2
    sp = SplineSpace.uniform(-8, 8, 1600, 5)
    u = build_initial_data(InitialDataSpec("wkb_slice"), sp, SemiclassicalConfig(h))
    amp2 = lambda x: ((1 + np.tanh(7 * (x + 3))) * (1 + np.tanh(7 * (1 - x)))) ** 2
    oracle, _ = quad(amp2, -8, 8, limit=400, epsabs=1e-13, epsrel=1e-13)
    # the L2 projection loses exactly ||u - Pu||^2, which is tiny on this mesh
    assert u.norm() ** 2 == pytest.approx(oracle, rel=1e-5)
    assert u.norm() ** 2 <= oracle


def test_resolution_error_on_coarse_grid():
    with pytest.raises(ResolutionError):
        build_initial_data(InitialDataSpec("gaussian_wkb", x0=-1.5), SplineSpace.uniform(-3, 0, 10, 3),
                           SemiclassicalConfig(1e-2))


def test_build_is_deterministic():
    spec = InitialDataSpec("collision_pair", x0=-1.5, theta=0.25)
    sp = SplineSpace.uniform(-4, 4, 800, 5)
    a = build_initial_data(spec, sp, SemiclassicalConfig(1e-2))
    b = build_initial_data(spec, sp, SemiclassicalConfig(1e-2))
    assert a.coeffs.tobytes() == b.coeffs.tobytes()


def test_nodal_sampling_on_grid():
    g = Grid1D.uniform(-3, 0, 3000)
    u = build_initial_data(InitialDataSpec("gaussian_wkb", x0=-1.5), g, SemiclassicalConfig(1e-2))
    assert not u.is_spline
    assert abs(u.norm() - 1) < 1e-6


def test_unknown_family_and_bad_theta():
    with pytest.raises(ValueError):
        InitialDataSpec("plane_wave")
    with pytest.raises(ValueError):
        InitialDataSpec("collision_pair", theta=1.5)


# -- test functions and the B_M norm ----------------------------------------

def _k_independent(n=33):
    X = np.linspace(-4, 4, n)
    hat = np.exp(-X ** 2)[:, None].astype(complex)
    return TestFunction(X, np.array([0.0]), hat, 0.0)


def test_bm_norm_k_independent_equals_l1():
    phi = _k_independent()
    total, partial, tail = bm_norm(phi, 4.0)
    assert tail == 0.0
    assert total == pytest.approx(phi.l1(), rel=1e-14)


def test_bm_norm_tail_halves_when_L_is_half_M():
    phi = TestFunction.gaussian_bump(L=2.0)
    tails = [bm_norm(phi, 4.0, m)[2] for m in range(5, 10)]
    assert np.allclose(np.array(tails[1:]) / np.array(tails[:-1]), 0.5, rtol=1e-14)


def test_bm_norm_matches_direct_summation_oracle():
    n = 64
    X = np.linspace(-3, 3, n)
    K = np.linspace(-1.5, 1.5, n)
    hat = np.exp(-X[:, None] ** 2 - 4 * K[None, :] ** 2).astype(complex)
    phi = TestFunction(X, K, hat, 1.5)
    M, m_max = 4.0, 30
    _, partial, _ = bm_norm(phi, M, m_max)
    cell = (X[1] - X[0]) * (K[1] - K[0])
    oracle = 0.0
    for m in range(m_max + 1):
        oracle += (np.abs(hat) * (np.abs(K)[None, :] / M) ** m).sum() * cell
    assert partial == pytest.approx(oracle, rel=1e-10)
    # doubling m_max changes the truncated value by less than the tail bound
    total, _, tail = bm_norm(phi, M, m_max)
    assert bm_norm(phi, M, 2 * m_max)[1] <= total + 1e-15


def test_bm_norm_requires_L_below_M():
    with pytest.raises(ValueError):
        bm_norm(TestFunction.gaussian_bump(L=4.0), 4.0)


@settings(max_examples=25, deadline=None)
@given(M1=st.floats(2.1, 10), dM=st.floats(0.0, 10))
def test_bm_norm_monotone_in_M(M1, dM):
    phi = TestFunction.gaussian_bump(L=2.0, n=24)
    assert bm_norm(phi, M1 + dM)[0] <= bm_norm(phi, M1)[0] * (1 + 1e-12)


def test_test_function_rejects_mass_outside_support():
    X = np.linspace(-1, 1, 5)
    K = np.linspace(-2, 2, 5)
    with pytest.raises(ValueError):
        TestFunction(X, K, np.ones((5, 5)), 1.0)


@settings(max_examples=20, deadline=None)
@given(xc=st.floats(-1, 1), kc=st.floats(-0.5, 0.5))
def test_pointwise_matches_tensor_evaluation(xc, kc):
    phi = TestFunction.gaussian_bump(xc, kc, 0.7, 2.0, n=32)
    x = np.linspace(-2, 2, 7)
    k = np.linspace(-1, 1, 5)
    grid = phi(x, k)
    X, K = np.meshgrid(x, k, indexing="ij")
    assert np.allclose(phi.pointwise(X, K), grid, atol=1e-13)


def test_gaussian_bump_profile_in_x():
    # phi(x, kc) is proportional to exp(-pi (x - xc)^2 / width^2)
    phi = TestFunction.gaussian_bump(0.3, 0.0, 0.8, 2.0, n=128)
    x = np.linspace(-1, 1.6, 9)
    v = phi(x, np.array([0.0]))[:, 0]
    ref = np.exp(-np.pi * (x - 0.3) ** 2 / 0.8 ** 2)
    assert np.allclose(v / v[np.argmax(ref)], ref / ref.max(), atol=1e-8)
