import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from semiclassic.core import SplineSpace, Wavefunction
from semiclassic.liouville import Ensemble
from semiclassic.observables import (
    TABLE_HEADER,
    MeasurementRow,
    ObservableSymbol,
    compare,
    correlation,
    emp,
    measure_position,
    measure_separable,
    measure_symbols,
    moment_family,
    observable_error_bound,
    symbol_bound,
    window,
    write_table,
)

H, S, X0, P0 = 0.1, 0.3, 0.4, 1.2
K0 = P0 / (2 * np.pi)
DOM = (-3.0, 3.0)


def coherent(x):
    return (np.pi * S * S) ** -0.25 * np.exp(-(x - X0) ** 2 / (2 * S * S) + 1j * P0 * x / H)


def moment_oracle(s):
    # the coherent-state Wigner function factors into x and k Gaussians
    lo, hi = (0.0, 4.0) if s.j == 2 else (-4.0, 0.0)
    vk = H ** 2 / (8 * np.pi ** 2 * S ** 2)
    ix = quad(lambda x: x ** s.alpha * np.exp(-(x - X0) ** 2 / S ** 2) / (S * math.sqrt(np.pi)),
              lo, hi, epsabs=1e-14)[0]
    ik = quad(lambda k: k ** s.beta * np.exp(-(k - K0) ** 2 / (2 * vk)) / math.sqrt(2 * np.pi * vk),
              -1, 1, epsabs=1e-14)[0]
    return ix * ik


# -- symbols ----------------------------------------------------------------

def test_window_takes_half_on_endpoints():
    assert list(window([-1.0, 0.0, 0.5, 4.0, 5.0], 0.0, 4.0)) == [0.0, 0.5, 1.0, 0.5, 0.0]


def test_moment_family_members():
    fam = moment_family()
    assert len(fam) == 12
    assert len({s.name for s in fam}) == 12
    assert {s.name for s in fam} >= {"A_001", "A_202", "A_112"}
    assert all(s.position_only == (s.beta == 0) for s in fam)


@pytest.mark.parametrize("a,b,j", [(0, 0, 1), (1, 1, 2), (2, 0, 1), (0, 2, 2)])
def test_moment_norms_match_quadrature(a, b, j):
    s = ObservableSymbol("moment_family", a, b, j)
    sup, l2 = s.norms()
    ix = quad(lambda x: (x ** a) ** 2, 0, 4)[0]
    ik = quad(lambda k: (k ** b) ** 2, -1, 1)[0]
    assert l2 == pytest.approx(math.sqrt(ix * ik), rel=1e-12)
    assert sup == pytest.approx(4.0 ** a, rel=1e-12)


@pytest.mark.parametrize("kw", [{"kind": "moment_family", "alpha": 2, "beta": 1},
                                {"kind": "moment_family", "j": 3}, {"kind": "position_only"},
                                {"kind": "separable", "A1": np.cos}, {"kind": "tensor"}])
def test_symbol_validation(kw):
    with pytest.raises(ValueError):
        ObservableSymbol(**kw)


# -- position observables ---------------------------------------------------

def _spline_state():
    sp = SplineSpace.uniform(-3, 3, 60, 3)
    c = sp.project(lambda x: np.exp(-(x - 0.3) ** 2) * (1 + 0.5j * x))
    return Wavefunction(sp, c, H)


def test_position_measurement_matches_quadrature():
    u = _spline_state()
    f = lambda x: np.abs(u(np.atleast_1d(x))[0]) ** 2
    for A, brk in [(lambda x: x * x, ()), (lambda x: (x > 0) * 1.0, (0.0,)), (np.cos, ())]:
        ref = sum(quad(lambda x: A(np.array([x]))[0] * f(x), a, b, epsabs=1e-13)[0]
                  for a, b in zip(u.basis.breaks[:-1], u.basis.breaks[1:]))
        assert measure_position(u, A, brk) == pytest.approx(ref, abs=1e-12)


def test_emp_conventions():
    sp = SplineSpace.uniform(-3, 3, 60, 3)
    sym = Wavefunction(sp, sp.project(lambda x: np.exp(-4 * (x - 1) ** 2) + np.exp(-4 * (x + 1) ** 2)), H)
    assert abs(emp(sym)) < 1e-12
    right = Wavefunction(sp, sp.project(lambda x: np.exp(-8 * (x - 1.5) ** 2) + 0j), H)
    assert emp(right) == pytest.approx(0.5, abs=1e-6)
    assert emp(right, convention="difference") == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        emp(right, convention="ratio")


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-2, 2), b=st.floats(-2, 2), w=st.floats(0.1, 3.0))
def test_emp_bounds_and_reflection(a, b, w):
    sp = SplineSpace.uniform(-4, 4, 40, 3)
    g = lambda x: np.exp(-(x - a) ** 2) + w * np.exp(-(x - b) ** 2) * 1j
    u = Wavefunction(sp, sp.project(g), H)
    ur = Wavefunction(sp, sp.project(lambda x: g(-x)), H)
    e = emp(u)
    assert -0.5 <= e <= 0.5
    assert emp(ur) == pytest.approx(-e, abs=1e-12)
    assert emp(u, convention="difference") == pytest.approx(2 * e, abs=1e-14)


# -- separable observables --------------------------------------------------

def test_direct_route_matches_factorized_oracle():
    fam = moment_family()
    vals, ests = measure_symbols(coherent, fam, H, "direct", domain=DOM)
    for s, v, e in zip(fam, vals, ests):
        err = abs(v - moment_oracle(s))
        assert err <= e and err < 1e-4, s.name


def test_swt_route_within_its_estimate():
    fam = moment_family()
    vals, ests = measure_symbols(coherent, fam, H, "via_swt", domain=DOM)
    for s, v, e in zip(fam, vals, ests):
        assert abs(v - moment_oracle(s)) <= e, s.name


def test_separable_mean_wavenumber():
    v = measure_separable(coherent, A2=lambda k: k, hbar=H, route="direct", k_support=(-2, 2),
                          domain=DOM)
    assert v == pytest.approx(K0, abs=1e-8)
    with pytest.raises(ValueError):
        measure_separable(coherent, A2=lambda k: k, hbar=H, route="direct", domain=DOM)
    with pytest.raises(ValueError):
        measure_separable(coherent, hbar=H, route="fourier", domain=DOM)


def test_position_symbol_routes_agree():
    # |u|^2 integrals need no k transform on the direct route
    v = measure_separable(coherent, A1=lambda x: x, hbar=H, route="direct", domain=DOM)
    assert v == pytest.approx(X0, abs=1e-10)


# -- bounds, statistics and tables ------------------------------------------

def test_error_bound_formulas():
    assert observable_error_bound(0.1, "position", 0.01, 4.0) == pytest.approx(0.8)
    assert observable_error_bound(0.1, "separable", 0.01, 4.0, 2.0, 1.0) == pytest.approx(0.1 * 3 * 4 / 0.1)
    with pytest.raises(ValueError):
        observable_error_bound(-1, "position", 0.01, 1.0)
    with pytest.raises(ValueError):
        observable_error_bound(0.1, "tensor", 0.01, 1.0)
    s = ObservableSymbol("moment_family", 1, 1, 2)
    assert symbol_bound(s, 0.1, 0.01) == pytest.approx(0.2 * s.norms()[1] / 0.1)
    s0 = ObservableSymbol("moment_family", 2, 0, 2)
    assert symbol_bound(s0, 0.1, 0.01) == pytest.approx(0.2 * 16)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=20), st.floats(0.1, 10))
def test_correlation_is_scale_invariant(xs, c):
    x = np.array(xs)
    if np.linalg.norm(x) == 0:
        with pytest.raises(ValueError):
            correlation(x, x)
        return
    assert correlation(x, c * x) == pytest.approx(1.0, abs=1e-12)
    assert correlation(x, -x) == pytest.approx(-1.0, abs=1e-12)


def test_compare_rows_and_table(tmp_path):
    fam = moment_family()[:3]
    ens = Ensemble([1.0], [X0], [K0], [0], H)
    rows = compare(1.0, coherent, ens, fam, 1e-3, hbar=H, route="direct", domain=DOM)
    assert [r.symbol for r in rows] == [s.name for s in fam]
    # a point mass at (x0, k0) evaluates the symbol there
    assert rows[0].classical == pytest.approx(fam[0](X0, K0))
    path = write_table(rows, tmp_path / "m.csv")
    lines = list(csv.reader(open(path)))
    assert tuple(lines[0]) == TABLE_HEADER
    assert len(lines) == 4
    r = MeasurementRow(0.0, "A", 0, 0, 1, 1.0, 1.5, 0.4)
    assert r.flag and r.as_tuple()[-1] == 1
