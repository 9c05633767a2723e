"""Wigner, smoothed Wigner (SWT) and Husimi transforms on phase-space grids.

Conventions (``hbar`` scaled, ``2 pi`` explicit):

    W(x, k)  = int exp(-2 pi i k y) u(x + hbar y / 2) conj(u(x - hbar y / 2)) dy
    SWT      = W convolved with (2 / (hbar sx sk)) exp(-(2 pi / hbar)(dx^2/sx^2 + dk^2/sk^2))

The SWT is computed in factored form: a Gaussian convolution in ``x`` of the
autocorrelation ``C(x, y) = u(x + hbar y/2) conj(u(x - hbar y/2))``, a
multiplication by ``exp(-(pi/2) hbar sk^2 y^2)`` (the ``k`` smoothing), and an
FFT over ``y``.  States are first sampled on a uniform grid of spacing ``dx``;
the shifts ``hbar y / 2`` are then multiples of ``dx``, i.e. ``y_m = 2 m dx / hbar``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.sparse import csr_matrix

from .core.grids import Grid1D
from .core.states import Wavefunction
from .core.testfunc import TestFunction, bm_norm

KINDS = ("wigner", "swt", "husimi", "classical_density")


class RangeError(ValueError):
    """The sampled ``y`` range does not contain the autocorrelation."""


@dataclass(frozen=True)
class PhaseSpaceField:
    """Real field on a uniform ``x`` by ``k`` grid (row index = ``x``).

    ``k`` is always the raw wavenumber; ``scaling`` only records how the
    k axis should be labelled on output (``'raw'`` or ``'2pi'`` for ``2 pi k``).
    """

    x: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    hbar: float
    sigma_x: float = 0.0
    sigma_k: float = 0.0
    kind: str = "wigner"
    scaling: str = "raw"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown field kind {self.kind!r}")
        x, k = np.asarray(self.x, float), np.asarray(self.k, float)
        v = np.asarray(self.values, dtype=float)
        if v.shape != (x.size, k.size):
            raise ValueError("values must have shape (len(x), len(k))")
        for name, a in (("x", x), ("k", k), ("values", v)):
            a = a.copy() if a.flags.writeable else a  # never freeze the caller's array
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0]) if self.x.size > 1 else 1.0

    @property
    def dk(self) -> float:
        return float(self.k[1] - self.k[0]) if self.k.size > 1 else 1.0

    @property
    def x_grid(self) -> Grid1D:
        return Grid1D(float(self.x[0]), float(self.x[-1]), np.array(self.x))

    def total_mass(self) -> float:
        return float(self.values.sum() * self.dx * self.dk)

    def l2_norm(self) -> float:
        return float(np.sqrt((self.values ** 2).sum() * self.dx * self.dk))

    def marginals(self):
        """``(int W dk, int W dx)`` as arrays over ``x`` and ``k``."""
        return marginals(self)

    # grid dump: key/value sidecar plus little-endian float64 payload
    def dump(self, prefix) -> Tuple[Path, Path]:
        prefix = Path(prefix)
        meta = {
            "nx": self.x.size, "nk": self.k.size, "x0": repr(float(self.x[0])),
            "dx": repr(self.dx), "k0": repr(float(self.k[0])), "dk": repr(self.dk),
            "hbar": repr(float(self.hbar)), "sigma_x": repr(float(self.sigma_x)),
            "sigma_k": repr(float(self.sigma_k)), "kind": self.kind, "scaling": self.scaling,
        }
        mpath = prefix.with_suffix(".meta")
        bpath = prefix.with_suffix(".bin")
        mpath.write_text("".join(f"{k} = {v}\n" for k, v in meta.items()))
        bpath.write_bytes(np.ascontiguousarray(self.values, dtype="<f8").tobytes())
        return mpath, bpath

    @classmethod
    def load(cls, prefix) -> "PhaseSpaceField":
        prefix = Path(prefix)
        meta = read_meta(prefix.with_suffix(".meta"))
        nx, nk = int(meta["nx"]), int(meta["nk"])
        vals = np.frombuffer(prefix.with_suffix(".bin").read_bytes(), dtype="<f8").reshape(nx, nk)
        x = float(meta["x0"]) + float(meta["dx"]) * np.arange(nx)
        k = float(meta["k0"]) + float(meta["dk"]) * np.arange(nk)
        return cls(x, k, vals.copy(), float(meta["hbar"]), float(meta["sigma_x"]),
                   float(meta["sigma_k"]), meta["kind"], meta["scaling"])


def read_meta(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip() and not line.lstrip().startswith("#"):
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


# -- sampling ---------------------------------------------------------------

def default_dx(hbar: float) -> float:
    """Sample spacing ``hbar / 8``."""
    return hbar / 8.0


def sample_state(u, hbar: Optional[float] = None, dx: Optional[float] = None,
                 domain: Optional[Sequence[float]] = None):
    """Uniform samples ``(x, u(x), hbar)`` of a state.

    ``u`` may be a :class:`Wavefunction` or a callable (then ``hbar`` and
    ``domain`` are required).
    """
    if isinstance(u, Wavefunction):
        hbar = u.hbar if hbar is None else hbar
        a, b = (u.a, u.b) if domain is None else domain
        f = u
    else:
        if hbar is None or domain is None:
            raise ValueError("callable states need hbar and domain")
        a, b = domain
        f = u
    dx = dx or default_dx(hbar)
    n = int(math.ceil((b - a) / dx)) + 1
    x = a + dx * np.arange(n)
    vals = np.asarray(f(x), dtype=complex)
    vals[(x < a) | (x > b)] = 0.0
    return x, vals, float(hbar)


# -- core transform ---------------------------------------------------------

def _autocorr_extent(u, damping: Callable, thresh: float = 1e-12) -> int:
    """Smallest half-count ``Mh`` beyond which ``sum_j |u_{j+m} u_{j-m}|``
    times the damping stays below ``thresh`` of its peak."""
    A = np.abs(u)
    n = A.size
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    F = np.fft.rfft(A, nfft)
    R = np.fft.irfft(F * np.conj(F), nfft)[:n]  # R[l] = sum_i A_i A_{i+l}
    m = np.arange((n + 1) // 2)
    lag = 2 * m
    r = R[lag] * damping(m)
    if r[0] <= 0:
        return 1
    big = np.nonzero(r > thresh * r.max())[0]
    return int(min(big.max() + 8, n // 2)) if big.size else 1


def _gauss_kernel(dx: float, std: float) -> np.ndarray:
    half = int(math.ceil(8 * std / dx))
    s = dx * np.arange(-half, half + 1)
    g = np.exp(-0.5 * (s / std) ** 2)
    return g / (std * math.sqrt(2 * math.pi)) * dx  # Riemann weights of a unit-mass kernel


def transform(u, sigma_x: float = 0.0, sigma_k: float = 0.0, *, hbar: Optional[float] = None,
              dx: Optional[float] = None, domain=None, x_out=None, nx: Optional[int] = None,
              y_count: Optional[int] = None, k_window: Optional[Sequence[float]] = None,
              nk: Optional[int] = None, kind: Optional[str] = None,
              range_tol: float = 1e-8, block: int = 128) -> PhaseSpaceField:
    """Wigner (``sigma = 0``) or smoothed Wigner transform of a state.

    ``x_out``: output positions (snapped to the sample grid) or None for
    ``nx`` equispaced rows (default: every sample).  ``y_count``: number of
    ``y`` samples, default chosen from the decay of the autocorrelation.
    ``k_window``: crop of the FFT band ``|k| <= hbar / (4 dx)``; ``nk``
    sets the FFT length (``dk = 1 / (nk dy)``).
    """
    if sigma_x < 0 or sigma_k < 0:
        raise ValueError("smoothing widths must be nonnegative")
    if isinstance(u, tuple):
        xs, us, hbar = u
        xs = np.asarray(xs, float)
        us = np.asarray(us, complex)
    else:
        xs, us, hbar = sample_state(u, hbar, dx, domain)
    dx = float(xs[1] - xs[0])
    n = xs.size
    dy = 2 * dx / hbar

    def damping(m):
        return np.exp(-0.5 * np.pi * hbar * sigma_k ** 2 * (m * dy) ** 2)

    Mh = y_count // 2 if y_count else _autocorr_extent(us, damping)
    Mh = max(1, min(Mh, n))
    m = np.arange(-Mh, Mh)

    # output rows
    if x_out is None:
        stride = max(1, (n - 1) // (nx - 1)) if nx else 1
        rows = np.arange(0, n, stride)
    else:
        rows = np.unique(np.clip(np.rint((np.asarray(x_out, float) - xs[0]) / dx).astype(int), 0, n - 1))

    # x smoothing as a sparse (rows x n) operator
    if sigma_x > 0:
        g = _gauss_kernel(dx, sigma_x * math.sqrt(hbar / (4 * math.pi)))
        half = g.size // 2
        offs = np.arange(-half, half + 1)
        cols = rows[:, None] + offs[None, :]
        ok = (cols >= 0) & (cols < n)
        G = csr_matrix((np.broadcast_to(g, cols.shape)[ok],
                        (np.broadcast_to(np.arange(rows.size)[:, None], cols.shape)[ok], cols[ok])),
                       shape=(rows.size, n))
    else:
        G = None

    S = np.empty((rows.size, m.size), dtype=complex)
    upad = np.concatenate([np.zeros(Mh, complex), us, np.zeros(Mh + 1, complex)])
    j = np.arange(n) + Mh
    for start in range(0, m.size, block):
        mb = m[start:start + block]
        Cb = upad[j[:, None] + mb[None, :]] * np.conj(upad[j[:, None] - mb[None, :]])
        S[:, start:start + block] = (G @ Cb) if G is not None else Cb[rows]
    S *= damping(m)[None, :]

    edge = np.abs(np.concatenate([S[:, 0], S[:, -1]])).max() if m.size > 1 else 0.0
    peak = np.abs(S).max()
    if peak > 0 and edge > range_tol * peak:
        raise RangeError(f"autocorrelation at |y|={Mh * dy:.4g} is {edge / peak:.2e} of its peak; "
                         "increase y_count")

    N = max(nk or 0, m.size)
    # place m = -Mh..Mh-1 in FFT order and sum exp(-2 pi i k y_m)
    buf = np.zeros((rows.size, N), dtype=complex)
    buf[:, :Mh] = S[:, Mh:]
    buf[:, N - Mh:] = S[:, :Mh]
    F = np.fft.fftshift(np.fft.fft(buf, axis=1), axes=1) * dy
    k = np.fft.fftshift(np.fft.fftfreq(N, dy))
    if k_window is not None:
        sel = (k >= k_window[0]) & (k <= k_window[1])
        F, k = F[:, sel], k[sel]
    im = np.abs(F.imag).max() if F.size else 0.0
    re = np.abs(F.real).max() if F.size else 0.0
    if im > 1e-10 * max(re, 1e-300) and im > 1e-12:
        raise ArithmeticError(f"transform has imaginary residue {im:.2e} (real max {re:.2e})")
    if kind is None:
        if sigma_x == 0 and sigma_k == 0:
            kind = "wigner"
        elif sigma_x == 1 and sigma_k == 1:
            kind = "husimi"
        else:
            kind = "swt"
    return PhaseSpaceField(xs[rows], k, F.real, hbar, sigma_x, sigma_k, kind)


def wigner(u, x_samples=None, y_count: Optional[int] = None, **kw) -> PhaseSpaceField:
    """Unsmoothed Wigner transform (see :func:`transform` for keywords)."""
    return transform(u, 0.0, 0.0, x_out=x_samples, y_count=y_count, **kw)


def swt(u, sigma_x: float = 2 ** -0.5, sigma_k: float = 2 ** -0.5, **kw) -> PhaseSpaceField:
    """Smoothed Wigner transform in factored form."""
    if not (0 < sigma_x <= 1 and 0 < sigma_k <= 1):
        raise ValueError("sigma_x, sigma_k must lie in (0, 1]; use transform() for other values")
    return transform(u, sigma_x, sigma_k, **kw)


def husimi(u, **kw) -> PhaseSpaceField:
    f = transform(u, 1.0, 1.0, kind="husimi", **kw)
    if f.values.min() < -1e-12 * max(f.values.max(), 1.0):
        raise ArithmeticError("Husimi transform has negative values beyond round-off")
    return f


def marginals(f: PhaseSpaceField):
    """Position density ``int f dk`` and momentum density ``int f dx``
    (exact for ``kind='wigner'``, approximate for smoothed fields)."""
    return f.values.sum(axis=1) * f.dk, f.values.sum(axis=0) * f.dx


def smooth_field(f: PhaseSpaceField, sigma_x: float, sigma_k: float) -> PhaseSpaceField:
    """Direct 2D Gaussian smoothing of a gridded field (test oracle helper)."""
    from scipy.ndimage import gaussian_filter

    std = (sigma_x * math.sqrt(f.hbar / (4 * math.pi)) / f.dx,
           sigma_k * math.sqrt(f.hbar / (4 * math.pi)) / f.dk)
    vals = gaussian_filter(f.values, std, mode="constant", truncate=8.0)
    return PhaseSpaceField(f.x, f.k, vals, f.hbar, sigma_x, sigma_k, "swt")


# -- pairings and the smoothing gap -----------------------------------------

def pair(f: PhaseSpaceField, phi) -> Tuple[float, float]:
    """``<f, phi>`` by the midpoint rule on the field grid, with an error
    estimate from the same rule on the grid with every other point dropped."""
    if isinstance(phi, TestFunction):
        P = phi(f.x, f.k)
    else:
        X, K = np.meshgrid(f.x, f.k, indexing="ij")
        P = np.broadcast_to(np.asarray(phi(X, K), dtype=float), f.values.shape)
    fine = float((f.values * P).sum() * f.dx * f.dk)
    coarse = float((f.values[::2, ::2] * P[::2, ::2]).sum() * 4 * f.dx * f.dk)
    return fine, abs(fine - coarse)


def smoothing_gap_bound(hbar: float, sigma_k: float, M: float, phi_norm: float = 1.0) -> float:
    """``hbar (pi / 2) sigma_k^2 M^2 |||phi|||_M``."""
    return hbar * 0.5 * math.pi * sigma_k ** 2 * M ** 2 * phi_norm


def verify_gap(u, phi: TestFunction, M: float, hbar: Optional[float] = None,
               sigma_k: float = 0.5, m_max: int = 40, dx: Optional[float] = None,
               domain=None):
    """Both sides of the k-smoothing gap inequality for a state and test function.

    ``lhs = |<W - SWT^{0, sigma_k}, phi>|`` is evaluated exactly for the
    plane-wave expansion of ``phi``: with ``C(x, K)`` the autocorrelation,

        lhs = | Re sum_{p,q} dX dK phi_hat(X_p, K_q) (1 - damp(K_q))
                    int exp(2 pi i x X_p) C(x, K_q) dx |,

    and the ``x`` integral is a trapezoid sum on a fine grid.
    ``rhs = bound * ||u||^2``.  Returns ``(lhs, rhs, lhs <= rhs (1 + 1e-6))``.
    """
    if phi.L >= M:
        raise ValueError("test function is not certified in B_M (K-support >= M)")
    norm, _, _ = bm_norm(phi, M, m_max)
    xs, us, hbar = sample_state(u, hbar, dx, domain)
    if isinstance(u, Wavefunction) and u.exact is not None:
        f = u.exact
    else:
        def f(x):
            return np.interp(x, xs, us.real, 0, 0) + 1j * np.interp(x, xs, us.imag, 0, 0)
    mass = float(trapezoid(np.abs(us) ** 2, xs))
    damp = np.exp(-0.5 * np.pi * hbar * sigma_k ** 2 * phi.K ** 2)
    w = 1.0 - damp
    E = np.exp(2j * np.pi * np.outer(xs, phi.X))  # (nx, nX)
    total = 0.0 + 0.0j
    for q, K in enumerate(phi.K):
        if w[q] == 0 or not np.any(phi.hat[:, q]):
            continue
        C = f(xs + 0.5 * hbar * K) * np.conj(f(xs - 0.5 * hbar * K))
        integ = trapezoid(E * C[:, None], xs, axis=0)  # over x, per X_p
        total += w[q] * np.dot(phi.hat[:, q], integ)
    lhs = abs((total * phi.cell).real)
    rhs = smoothing_gap_bound(hbar, sigma_k, M, norm) * mass
    return lhs, rhs, bool(lhs <= rhs * (1 + 1e-6))
