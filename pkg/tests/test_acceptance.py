"""End-to-end acceptance checks, one test per criterion.

Each test records its measured values as user properties; the terminal
summary (see conftest.py) prints one pass/fail line per criterion.
Tests marked ``slow`` can be skipped with ``-m "not slow"``.
"""
import math
import time

import numpy as np
import pytest

from semiclassic.core import (
    SplineSpace,
    TestFunction,
    cone_potential,
    harmonic_potential,
)
from semiclassic.harness import emp_sweep, make_scenario, rate_experiment, run_scenario
from semiclassic.liouville import FlowSpec, trajectory
from semiclassic.schrodinger import solve_adaptive
from semiclassic.wigner import husimi, transform, verify_gap, wigner

TWO_PI = 2 * np.pi


@pytest.fixture
def report(record_property):
    def rec(**kw):
        for k, v in kw.items():
            record_property(k, f"{v:.6g}" if isinstance(v, float) else v)
    return rec


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t0


# -- 1, 2: convergence orders -----------------------------------------------

def test_criterion_01_eoc_double_well(tmp_path, report):
    man, wall = _timed(run_scenario, make_scenario("eoc_doublewell", out=tmp_path))
    es, et = man.summary["eoc_space_final"], man.summary["eoc_time_final"]
    report(eoc_space=es, eoc_time=et, seconds=round(wall, 1))
    assert man.status == "ok", man.failures
    assert 3.8 <= es <= 4.3 and 1.95 <= et <= 2.15
    assert wall <= 300


def test_criterion_02_eoc_nonsmooth(tmp_path, report):
    man, wall = _timed(run_scenario, make_scenario("eoc_nonsmooth", out=tmp_path))
    es, et = man.summary["eoc_space_final"], man.summary["eoc_time_final"]
    report(eoc_space=es, eoc_time=et, seconds=round(wall, 1))
    assert man.status == "ok", man.failures
    assert 4.7 <= es <= 5.3 and 1.95 <= et <= 2.15
    assert wall <= 600


# -- 3: tolerance contract --------------------------------------------------

def _manufactured(hbar):
    V = harmonic_potential()

    def exact(x, t):
        return np.exp(-(x - 0.5 * np.sin(t)) ** 2 / 0.3 + 1j * 0.5 * np.cos(t) * x / hbar - 1j * t)

    def forcing(x, t):
        c, dc = 0.5 * np.sin(t), 0.5 * np.cos(t)
        u = exact(x, t)
        z = x - c
        u_t = u * (2 * z * dc / 0.3 - 1j * c * x / hbar - 1j)
        u_xx = u * ((-2 * z / 0.3 + 1j * dc / hbar) ** 2 - 2 / 0.3)
        return 1j * hbar * u_t + 0.5 * hbar ** 2 * u_xx - V.value(x) * u

    return V, exact, forcing


def test_criterion_03_tolerance_contract(report):
    hbar, T = 0.1, 1.0
    V, exact, forcing = _manufactured(hbar)
    x = np.linspace(-4, 4, 16001)
    t0 = time.perf_counter()
    ratios = []
    for tol in (1e-1, 1e-2, 1e-3):
        tr = solve_adaptive(SplineSpace.uniform(-4, 4, 20, 3), V, lambda s: exact(s, 0.0), T, tol,
                            hbar, forcing=forcing, energy_shift=None)
        assert tr.success, tr.failure
        err = math.sqrt(np.trapezoid(np.abs(tr.final(x) - exact(x, T)) ** 2, x))
        ratios.append(err / tr.report.total)
    wall = time.perf_counter() - t0
    report(error_over_estimate=str([round(r, 3) for r in ratios]), seconds=round(wall, 1))
    assert max(ratios) <= 3.0
    assert wall <= 300


# -- 4, 5: characteristics through the singular saddle ----------------------

def test_criterion_04_saddle_trajectory(report):
    V = cone_potential(0.0, -1.0)  # V = -|x|
    k0 = -1 / (math.pi * math.sqrt(2))
    t0 = time.perf_counter()
    x, k = trajectory(1.0, k0, math.sqrt(2), FlowSpec.closed_form(V))
    err = max(abs(float(x)), abs(float(k)))
    # continuations after reaching the vertex at t = sqrt 2, checked one time unit later
    t = math.sqrt(2) + 1
    ends = {pol: trajectory(1.0, k0, t, FlowSpec.closed_form(V, pol)) for pol in ("freeze", "left", "right")}
    wall = time.perf_counter() - t0
    # the general integrator realizes the same continuations (not part of the timing)
    ends_rk4 = {pol: trajectory(1.0, k0, t, FlowSpec(V, policy=pol, step=1e-3))
                for pol in ("freeze", "left", "right")}
    report(vertex_error=err, right_x=float(ends["right"][0]), left_x=float(ends["left"][0]),
           seconds=round(wall, 3))
    assert err <= 1e-12
    assert np.allclose(ends["freeze"], (0.0, 0.0), atol=1e-12)
    assert np.allclose(ends["right"], (0.5, 1 / TWO_PI), atol=1e-12)
    assert np.allclose(ends["left"], (-0.5, -1 / TWO_PI), atol=1e-12)
    for pol in ends:
        assert np.allclose(ends_rk4[pol], ends[pol], atol=1e-6)
    assert wall < 1.0


def test_criterion_05_infinite_lyapunov(report):
    V = cone_potential(0.0, -1.0)
    k_sep = -1 / (math.pi * math.sqrt(2))
    t = 2 * math.sqrt(2)
    t0 = time.perf_counter()
    seps = []
    for delta in (1e-1, 1e-2, 1e-3, 1e-4):
        xa, _ = trajectory(1.0, k_sep + delta, t, FlowSpec.closed_form(V))
        xb, _ = trajectory(1.0, k_sep - delta, t, FlowSpec.closed_form(V))
        seps.append(abs(float(xa - xb)))
    wall = time.perf_counter() - t0
    report(min_separation=min(seps), seconds=round(wall, 3))
    assert min(seps) > 0.5
    assert wall < 1.0


# -- 6, 7: transforms -------------------------------------------------------

def _cat(h):
    def g(x, x0, p0, s=0.3):
        return (math.pi * s * s) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * s * s) + 1j * p0 * x / h)
    return lambda x: (g(x, -0.6, 0.8) + g(x, 0.7, -0.4)) / math.sqrt(2)


def _direct_wigner(u, h, xs, ks, sx=0.0, sk=0.0):
    """Independent oracle: trapezoid sums on grids unrelated to the FFT's."""
    y = np.linspace(-55.0, 55.0, 6001)  # the autocorrelation is below 1e-30 beyond
    damp = np.exp(-0.5 * np.pi * h * sk ** 2 * y ** 2)
    out = np.empty((xs.size, ks.size))
    E = np.exp(-2j * np.pi * np.outer(y, ks))
    for i, x in enumerate(xs):
        if sx > 0:
            std = sx * math.sqrt(h / (4 * math.pi))
            s = np.linspace(-9 * std, 9 * std, 121)
            w = np.exp(-0.5 * (s / std) ** 2)
            w /= np.trapezoid(w, s)
            C = (u(x - s[:, None] + 0.5 * h * y) * np.conj(u(x - s[:, None] - 0.5 * h * y)))
            C = np.trapezoid(w[:, None] * C, s, axis=0)
        else:
            C = u(x + 0.5 * h * y) * np.conj(u(x - 0.5 * h * y))
        out[i] = np.trapezoid((C * damp)[:, None] * E, y, axis=0).real
    return out


def test_criterion_06_transform_oracles(report):
    h = 0.1
    u = _cat(h)
    dom = (-3.0, 3.0)
    xs = np.linspace(-1.5, 1.5, 32)
    errs, wall = {}, 0.0
    for name, (sx, sk) in {"wigner": (0.0, 0.0), "swt": (2 ** -0.5, 2 ** -0.5)}.items():
        f, dt = _timed(transform, u, sx, sk, hbar=h, domain=dom, x_out=xs)
        wall += dt
        sel = np.nonzero(np.abs(f.k) <= 0.4)[0]
        kk = f.k[sel[:: max(1, sel.size // 32)][:32]]
        cols = np.searchsorted(f.k, kk)
        ref = _direct_wigner(u, h, f.x, kk, sx, sk)
        errs[name] = float(np.max(np.abs(f.values[:, cols] - ref)) / np.max(np.abs(ref)))
    t0 = time.perf_counter()
    # coherent state against its closed form
    s, x0, p0 = 0.3, 0.4, 1.2
    g = lambda x: (math.pi * s * s) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * s * s) + 1j * p0 * x / h)
    w = wigner(g, hbar=h, domain=dom, nk=1024)
    X, K = np.meshgrid(w.x, w.k, indexing="ij")
    closed = (2 / h) * np.exp(-(X - x0) ** 2 / s ** 2 - 4 * math.pi ** 2 * s ** 2 * (K - p0 / TWO_PI) ** 2 / h ** 2)
    gauss_err = float(np.max(np.abs(w.values - closed)) / closed.max())
    # ||W||_L2 = hbar^(-1/2) ||u||^2; the two packets overlap slightly, so ||u|| != 1
    wc = wigner(u, hbar=h, domain=dom, nk=2048)
    hus_min = float(husimi(u, hbar=h, domain=dom).values.min())
    wall += time.perf_counter() - t0
    xq = np.linspace(*dom, 60001)
    norm2 = np.trapezoid(np.abs(u(xq)) ** 2, xq)
    l2_err = abs(wc.l2_norm() * math.sqrt(h) / norm2 - 1)
    report(wigner_vs_quadrature=errs["wigner"], swt_vs_quadrature=errs["swt"],
           gaussian_closed_form=gauss_err, l2_identity=l2_err, husimi_min=hus_min,
           seconds=round(wall, 1))
    assert errs["wigner"] <= 1e-8 and errs["swt"] <= 1e-8
    assert gauss_err <= 1e-6 and l2_err <= 1e-5 and hus_min >= -1e-12
    assert wall <= 60


def _certified_phis():
    rng = np.random.default_rng(7)
    phis = []
    for _ in range(20):
        xc, kc = rng.uniform(-1, 1), rng.uniform(-0.3, 0.3)
        width, L = rng.uniform(0.3, 1.0), rng.uniform(1.0, 3.0)
        phis.append(TestFunction.gaussian_bump(xc, kc, width, L, n=40))
    return phis


def test_criterion_07_smoothing_gap(report):
    M = 4.0
    phis = _certified_phis()
    assert all(p.L < M for p in phis)
    t0 = time.perf_counter()
    worst, checks, ok = 0.0, 0, True
    for h in (1e-1, 1e-2):
        s = 0.3
        u = lambda x: (math.pi * s * s) ** -0.25 * np.exp(-(x - 0.2) ** 2 / (2 * s * s) + 0.5j * x / h)
        for sk in (0.25, 0.5, 1.0):
            for phi in phis:
                lhs, rhs, good = verify_gap(u, phi, M, hbar=h, sigma_k=sk, domain=(-3, 3))
                worst = max(worst, lhs / rhs)
                checks += 1
                ok &= good
    wall = time.perf_counter() - t0
    report(checks=checks, max_lhs_over_rhs=worst, seconds=round(wall, 1))
    assert ok and checks == 120
    assert wall <= 120


# -- 8, 9: non-interference -------------------------------------------------

@pytest.fixture(scope="module")
def split_run(tmp_path_factory):
    s = make_scenario("split_noninterference", out=tmp_path_factory.mktemp("split"),
                      m=[0.9186, 1.0], tol=1e-2)
    return _timed(run_scenario, s)


def test_criterion_08_noninterference_agreement(split_run, report):
    man, wall = split_run
    sm = man.summary
    report(correlation=sm.get("m0.9186.correlation"), violations=sm.get("m0.9186.violations"),
           max_rel=sm.get("m0.9186.max_rel"), seconds_both_cases=round(wall, 1))
    assert not [f for f in man.failures if f.startswith("m=0.9186") and " note: " not in f]
    assert sm["m0.9186.correlation"] >= 0.98
    assert sm["m0.9186.violations"] == 0
    assert wall <= 2 * 900


def test_criterion_09_selection_mass_split(split_run, report):
    man, _ = split_run
    sm = man.summary
    wp, qr = sm.get("m1.w_plus_fraction"), sm.get("m1.quantum_right_mass")
    report(w_plus_fraction=wp, quantum_right_mass=qr)
    assert abs(wp - 0.5) <= 0.02
    assert abs(qr - 0.5) <= 0.05


# -- 10: excess mass --------------------------------------------------------

def test_criterion_10_emp_landscape(tmp_path, report):
    thetas = [0.0, 0.25, 0.5, 0.75, 1.0]
    rows, wall = _timed(emp_sweep, thetas, [1e-2], out=tmp_path)
    q = {r[0]: r[2] for r in rows}
    c = [r[3] for r in rows]
    report(emp_0=q[0.0], emp_quarter=q[0.25], emp_half=q[0.5], emp_three_quarter=q[0.75],
           emp_1=q[1.0], max_classical=max(abs(v) for v in c), seconds=round(wall, 1))
    assert max(abs(q[t]) for t in (0.0, 0.5, 1.0)) <= 0.005
    assert abs(q[0.25] + q[0.75]) <= 0.01
    assert 0.03 <= q[0.25] <= 0.08
    assert max(abs(v) for v in c) <= 1e-10
    assert wall <= 45 * 60


@pytest.mark.slow
def test_criterion_10_emp_limit_point(tmp_path, report):
    rows, wall = _timed(emp_sweep, [0.25], [5e-3], out=tmp_path)
    e = rows[0][2]
    report(emp_quarter_h5e3=e, seconds=round(wall, 1))
    assert abs(e - 0.055) <= 0.02
    assert wall <= 4 * 3600


# -- 11: rate ---------------------------------------------------------------

def test_criterion_11_rate(report):
    rr, wall = _timed(rate_experiment, 0.5, (0.1, 0.05, 0.025))
    report(D=str([f"{d:.4g}" for d in rr.D]), slope=rr.slope if rr.slope is not None else "none",
           seconds=round(wall, 1))
    assert rr.monotone
    assert 0.2 <= rr.slope <= 0.8
    assert wall <= 30 * 60


# -- 12: WKB slicing --------------------------------------------------------

@pytest.mark.slow
def test_criterion_12_wkb_slicing(tmp_path, report):
    man, wall = _timed(run_scenario, make_scenario("wkb_slice", out=tmp_path))
    sm = man.summary
    report(max_rel=sm.get("wkb.max_rel"), correlation=sm.get("wkb.correlation"),
           w_plus_fraction=sm.get("wkb.w_plus_fraction"), seconds=round(wall, 1))
    assert "wkb.max_rel" in sm, man.failures
    assert sm["wkb.max_rel"] <= 0.06
    assert wall <= 3600
