import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiclassic.core import TestFunction, bm_norm
from semiclassic.wigner import (
    PhaseSpaceField,
    RangeError,
    husimi,
    marginals,
    pair,
    smooth_field,
    smoothing_gap_bound,
    swt,
    transform,
    verify_gap,
    wigner,
)

H = 0.1
S = 0.3
X0, P0 = 0.4, 1.2  # position and momentum; raw wavenumber k0 = P0 / (2 pi)
K0 = P0 / (2 * np.pi)
DOM = (-3.0, 3.0)


def coherent(x, x0=X0, p0=P0, s=S, h=H):
    return (np.pi * s * s) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * s * s) + 1j * p0 * x / h)


def wigner_oracle(x, k, x0=X0, k0=K0, s=S, h=H):
    # closed form of int exp(-2 pi i k y) u(x + h y / 2) conj(u(x - h y / 2)) dy
    return (2 / h) * np.exp(-(x - x0) ** 2 / s ** 2) * np.exp(-4 * np.pi ** 2 * s ** 2 * (k - k0) ** 2 / h ** 2)


def swt_oracle(x, k, sx, sk, x0=X0, k0=K0, s=S, h=H):
    # Gaussian convolved with a Gaussian: variances add
    vx = s ** 2 / 2 + h * sx ** 2 / (4 * np.pi)
    vk = h ** 2 / (8 * np.pi ** 2 * s ** 2) + h * sk ** 2 / (4 * np.pi)
    return np.exp(-(x - x0) ** 2 / (2 * vx) - (k - k0) ** 2 / (2 * vk)) / (2 * np.pi * math.sqrt(vx * vk))


def _grid(f):
    return np.meshgrid(f.x, f.k, indexing="ij")


def test_wigner_of_coherent_state():
    f = wigner(coherent, hbar=H, domain=DOM, nk=1024)
    X, K = _grid(f)
    ref = wigner_oracle(X, K)
    assert np.max(np.abs(f.values - ref)) < 1e-8 * ref.max()
    assert f.kind == "wigner"
    assert f.total_mass() == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("sx,sk", [(2 ** -0.5, 2 ** -0.5), (0.5, 0.25), (1.0, 1.0)])
def test_swt_of_coherent_state(sx, sk):
    f = transform(coherent, sx, sk, hbar=H, domain=DOM, nk=1024)
    X, K = _grid(f)
    ref = swt_oracle(X, K, sx, sk)
    assert np.max(np.abs(f.values - ref)) < 1e-6 * ref.max()


def test_wigner_marginals_are_densities():
    # superposition: the Wigner function has negative interference terms but exact marginals
    u = lambda x: (coherent(x, -0.8, 0.5) + coherent(x, 0.8, -0.5)) / math.sqrt(2)
    f = wigner(u, hbar=H, domain=DOM, nk=2048)
    assert f.values.min() < -0.1 * f.values.max()
    rho_x, _ = marginals(f)
    assert np.max(np.abs(rho_x - np.abs(u(f.x)) ** 2)) < 1e-8


def test_husimi_nonnegative_on_cat_state():
    u = lambda x: (coherent(x, -0.8, 0.5) + coherent(x, 0.8, -0.5)) / math.sqrt(2)
    f = husimi(u, hbar=H, domain=DOM)
    assert f.kind == "husimi"
    assert f.values.min() >= -1e-12 * f.values.max()


def test_factored_swt_matches_direct_2d_smoothing():
    u = lambda x: (coherent(x, -0.8, 0.5) + coherent(x, 0.8, -0.5)) / math.sqrt(2)
    w = wigner(u, hbar=H, domain=DOM, nk=1024)
    f = swt(u, 0.6, 0.6, hbar=H, domain=DOM, nk=1024)
    g = smooth_field(w, 0.6, 0.6)
    inner = (np.abs(f.x) < 2)[:, None] & (np.abs(f.k) < 0.4)[None, :]
    assert np.max(np.abs(f.values - g.values)[inner]) < 1e-4 * f.values.max()


def test_swt_sigma_range_and_range_error():
    with pytest.raises(ValueError):
        swt(coherent, 1.5, 0.5, hbar=H, domain=DOM)
    with pytest.raises(ValueError):
        transform(coherent, -1.0, 0.0, hbar=H, domain=DOM)
    with pytest.raises(RangeError):
        wigner(coherent, hbar=H, domain=DOM, y_count=8)
    with pytest.raises(ValueError):
        wigner(coherent)


@settings(max_examples=10, deadline=None)
@given(x0=st.floats(-1, 1), p0=st.floats(-2, 2), sx=st.floats(0.3, 1.0), sk=st.floats(0.3, 1.0))
def test_swt_mass_and_mean(x0, p0, sx, sk):
    u = lambda x: coherent(x, x0, p0)
    f = transform(u, sx, sk, hbar=H, domain=DOM, nk=512)
    assert f.total_mass() == pytest.approx(1.0, abs=1e-6)
    X, K = _grid(f)
    w = f.values * f.dx * f.dk
    assert (w * X).sum() == pytest.approx(x0, abs=1e-6)
    assert (w * K).sum() == pytest.approx(p0 / (2 * np.pi), abs=1e-6)


def test_dump_load_roundtrip(tmp_path):
    f = swt(coherent, hbar=H, domain=DOM, k_window=(-0.5, 0.5))
    meta, binary = f.dump(tmp_path / "field")
    assert meta.exists() and binary.exists()
    g = PhaseSpaceField.load(tmp_path / "field")
    assert np.array_equal(g.values, f.values)
    # axes are stored as origin plus spacing
    assert np.allclose(g.k, f.k, rtol=0, atol=1e-13) and np.allclose(g.x, f.x, rtol=0, atol=1e-13)
    assert (g.hbar, g.sigma_x, g.sigma_k, g.kind) == (f.hbar, f.sigma_x, f.sigma_k, f.kind)


def test_field_arrays_are_frozen_copies():
    v = np.ones((3, 2))
    f = PhaseSpaceField(np.arange(3.0), np.arange(2.0), v, 0.1)
    v[0, 0] = 5.0
    assert f.values[0, 0] == 1.0
    with pytest.raises(ValueError):
        f.values[0, 0] = 2.0


def test_pair_with_polynomial_symbol():
    f = wigner(coherent, hbar=H, domain=DOM, nk=1024)
    val, est = pair(f, lambda x, k: x * x)
    assert val == pytest.approx(X0 ** 2 + S ** 2 / 2, abs=1e-8)
    assert est < 1e-6


def test_smoothing_gap_inequality_holds():
    phi = TestFunction.gaussian_bump(0.4, K0, 0.5, 2.0, n=48)
    lhs, rhs, ok = verify_gap(coherent, phi, 4.0, hbar=H, sigma_k=0.5, domain=DOM)
    assert ok and 0 < lhs <= rhs
    # unit-mass state: the right side is the bound itself
    assert rhs == pytest.approx(smoothing_gap_bound(H, 0.5, 4.0, bm_norm(phi, 4.0, 40)[0]), rel=1e-8)


def test_smoothing_gap_bound_formula():
    assert smoothing_gap_bound(0.1, 0.5, 4.0, 2.0) == pytest.approx(0.1 * np.pi / 2 * 0.25 * 16 * 2)
