"""Quadratic observables of quantum states and classical ensembles.

A Weyl symbol ``A(x, k)`` is measured on a state through its Wigner
transform, ``<W[u], A>``.  Position symbols reduce to ``int A |u|^2``;
separable symbols ``A1(x) A2(k)`` reduce to

    hbar^-1 int int A1((X + Y) / 2) A2_hat((X - Y) / hbar) u(X) conj(u(Y)) dX dY,

which is evaluated on the autocorrelation grid of :mod:`semiclassic.wigner`
(the *direct* route).  The *via_swt* route pairs a smoothed Wigner field with
the symbol instead.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .core.states import Wavefunction
from .liouville import Ensemble, measure_ensemble
from .wigner import PhaseSpaceField, _autocorr_extent, pair, sample_state, transform

ROUTES = ("direct", "via_swt")
SYMBOL_KINDS = ("position_only", "separable", "moment_family")
TABLE_HEADER = ("t", "symbol", "alpha", "beta", "j", "quantum", "classical", "bound", "flag")


def window(s, lo: float, hi: float):
    """Indicator of ``[lo, hi]`` taking the value 1/2 on the endpoints, so that
    trapezoid sums across a jump stay second order."""
    s = np.asarray(s, dtype=float)
    edge = np.isclose(s, lo, rtol=0, atol=1e-12) | np.isclose(s, hi, rtol=0, atol=1e-12)
    return np.where(edge, 0.5, ((s > lo) & (s < hi)).astype(float))


@dataclass(frozen=True)
class ObservableSymbol:
    """Position, separable or moment-family symbol.

    For ``moment_family``: ``A(x, k) = x^alpha k^beta chi_[0,4]((-1)^j x) chi_[-1,1](k)``
    with ``k`` the raw (unscaled) wavenumber.
    """

    kind: str
    alpha: int = 0
    beta: int = 0
    j: int = 2
    A1: Optional[Callable] = None
    A2: Optional[Callable] = None
    x_window: Tuple[float, float] = (0.0, 4.0)
    k_window: Tuple[float, float] = (-1.0, 1.0)
    label: str = ""
    support: Optional[Tuple[float, float]] = None  # k support of A2 for separable symbols

    def __post_init__(self):
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "moment_family":
            if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta > 2:
                raise ValueError("moment family needs alpha, beta >= 0 with alpha + beta <= 2")
            if self.j not in (1, 2):
                raise ValueError("side selector j must be 1 or 2")
        elif self.A1 is None:
            raise ValueError("position and separable symbols need A1")
        if self.kind == "separable" and self.A2 is None:
            raise ValueError("separable symbols need A2")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "moment_family":
            return f"A_{self.alpha}{self.beta}{self.j}"
        return self.kind

    @property
    def position_only(self) -> bool:
        """True when the symbol does not depend on ``k`` (moment symbols with
        ``beta = 0`` are treated as position observables; their ``k`` window
        only clips mass at ``|k| > 1``)."""
        return self.kind == "position_only" or (self.kind == "moment_family" and self.beta == 0)

    def a1(self, x):
        if self.kind == "moment_family":
            x = np.asarray(x, dtype=float)
            lo, hi = self.x_window
            return x ** self.alpha * window((-1) ** self.j * x, lo, hi)
        return np.asarray(self.A1(x), dtype=float)

    def a2(self, k):
        if self.kind == "moment_family":
            k = np.asarray(k, dtype=float)
            return k ** self.beta * window(k, *self.k_window)
        if self.kind == "position_only":
            return np.ones_like(np.asarray(k, dtype=float))
        return np.asarray(self.A2(k), dtype=float)

    def __call__(self, x, k):
        """Pointwise symbol value (broadcasting ``x`` against ``k``)."""
        return self.a1(x) * self.a2(k)

    def k_support(self) -> Optional[Tuple[float, float]]:
        return tuple(self.k_window) if self.kind == "moment_family" else self.support

    def norms(self) -> Tuple[float, float]:
        """``(||A||_inf, ||A||_L2)`` for moment symbols (closed form)."""
        if self.kind != "moment_family":
            raise ValueError("closed-form norms only for the moment family")
        a, b = self.alpha, self.beta
        lo, hi = self.x_window
        xs = max(abs(lo), abs(hi))
        ks = max(abs(v) for v in self.k_window)
        sup = xs ** a * ks ** b
        ix = (hi ** (2 * a + 1) - lo ** (2 * a + 1)) / (2 * a + 1)
        klo, khi = self.k_window
        ik = (khi ** (2 * b + 1) - klo ** (2 * b + 1)) / (2 * b + 1)
        return float(sup), float(math.sqrt(ix * ik))


def moment_family() -> List[ObservableSymbol]:
    """All twelve symbols ``A_{alpha, beta, j}``, ``alpha + beta <= 2``."""
    return [ObservableSymbol("moment_family", a, b, j)
            for j in (1, 2) for a in range(3) for b in range(3 - a)]


# -- position observables ---------------------------------------------------

def measure_position(u, A: Callable, breakpoints: Sequence[float] = (), nq: Optional[int] = None) -> float:
    """``int A(x) |u(x)|^2 dx``.

    Spline states use Gauss rules on every cell, with cells split at the
    ``breakpoints`` where ``A`` jumps; for polynomial ``A`` of degree up to
    ``2 nq - 2 r - 1`` this is exact.  Nodal states use the trapezoid rule.
    """
    if isinstance(u, Wavefunction) and u.is_spline:
        sp = u.basis
        nq = nq or sp.degree + 4
        cuts = np.union1d(sp.breaks, [p for p in breakpoints if sp.a < p < sp.b])
        g, w = np.polynomial.legendre.leggauss(nq)
        lo, hi = cuts[:-1, None], cuts[1:, None]
        half = 0.5 * (hi - lo)
        xq = (lo + half * (g + 1.0)).ravel()
        wq = (half * w).ravel()
        vals = sp.evaluate(u.coeffs, xq)
        return float(np.sum(wq * np.asarray(A(xq), dtype=float) * np.abs(vals) ** 2))
    if isinstance(u, Wavefunction):
        x = u.basis.nodes
        return float(trapezoid(np.asarray(A(x), dtype=float) * np.abs(u.coeffs) ** 2, x))
    x, vals, _ = u
    return float(trapezoid(np.asarray(A(x), dtype=float) * np.abs(vals) ** 2, x))


EMP_CONVENTIONS = ("excess", "difference")


def emp(u, t_star: float = 3.0, convention: str = "excess") -> float:
    """Excess mass on the right at ``t_star``.

    With ``R = ||U chi_{x>0}||^2`` and ``L = ||U chi_{x<0}||^2``,
    ``'excess'`` gives ``R / (R + L) - 1/2`` and ``'difference'`` gives
    ``(R - L) / (R + L)``.  ``u`` is a state, or a solve trace holding a state
    at ``t_star``.
    """
    if convention not in EMP_CONVENTIONS:
        raise ValueError(f"convention must be one of {EMP_CONVENTIONS}")
    if hasattr(u, "state_at"):
        u = u.state_at(t_star)
    diff = measure_position(u, lambda x: np.sign(x), breakpoints=(0.0,))
    total = measure_position(u, lambda x: np.ones_like(x), breakpoints=(0.0,))
    d = diff / total
    return 0.5 * d if convention == "excess" else d


# -- separable observables --------------------------------------------------

def _a2_hat(A2: Callable, support: Tuple[float, float], y: np.ndarray) -> np.ndarray:
    """``int A2(k) exp(-2 pi i k y) dk`` over a bounded support by composite
    32-point Gauss-Legendre, with at most four oscillations per panel."""
    lo, hi = support
    panels = int(math.ceil((hi - lo) * np.abs(y).max() / 4.0)) + 1
    g, w = np.polynomial.legendre.leggauss(32)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    k = (edges[:-1, None] + half * (g + 1.0)).ravel()
    w = (half * w).ravel() * np.asarray(A2(k), dtype=float)
    out = np.empty(y.size, dtype=complex)
    step = max(1, 2 ** 22 // k.size)
    for s in range(0, y.size, step):
        out[s:s + step] = np.exp(-2j * np.pi * np.outer(y[s:s + step], k)) @ w
    return out


def _power_hat(beta: int, lo: float, hi: float, y: np.ndarray) -> np.ndarray:
    """``int_lo^hi k^beta exp(-2 pi i k y) dk`` in closed form (``beta <= 2``),
    with a Taylor series where ``|2 pi y| max|k|`` is small."""
    z = 2 * np.pi * np.asarray(y, dtype=float)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) * max(abs(lo), abs(hi)) < 0.05
    zs = z[small]
    acc = np.zeros(zs.shape, dtype=complex)
    for n in range(10):  # sum_n (-i z)^n / n! int k^(beta+n)
        p = beta + n + 1
        acc += (-1j * zs) ** n / math.factorial(n) * (hi ** p - lo ** p) / p
    out[small] = acc
    zl = z[~small]

    def F(k):
        e = np.exp(-1j * zl * k)
        if beta == 0:
            return e / (-1j * zl)
        if beta == 1:
            return e * (1j * k / zl + 1 / zl ** 2)
        return e * (1j * k * k / zl + 2 * k / zl ** 2 - 2j / zl ** 3)

    out[~small] = F(hi) - F(lo)
    return out


def _direct(u, symbols: Sequence[ObservableSymbol], hbar=None, dx=None, domain=None,
            block: int = 256):
    """Direct route for several symbols sharing one autocorrelation pass.

    Returns ``(values, estimates)``; the estimate compares against the same
    sums on the grid with every other ``x`` and ``y`` sample dropped.
    """
    xs, us, hbar = sample_state(u, hbar, dx, domain) if not isinstance(u, tuple) else u
    xs = np.asarray(xs, float)
    us = np.asarray(us, complex)
    h = float(hbar)
    dxs = float(xs[1] - xs[0])
    dy = 2 * dxs / h
    n = xs.size
    Mh = _autocorr_extent(us, lambda m: np.ones(m.shape))
    m = np.arange(-Mh, Mh + 1)
    y = m * dy
    A1 = np.stack([s.a1(xs) for s in symbols])  # (S, n)
    A2h = []
    for s in symbols:
        if s.kind == "moment_family":
            A2h.append(_power_hat(s.beta, *s.k_window, y))
            continue
        sup = s.k_support()
        if sup is None:
            if s.kind == "position_only":
                A2h.append(np.where(m == 0, 1.0 / dy, 0.0).astype(complex))  # delta at y = 0
                continue
            raise ValueError("direct route needs a bounded k support for A2")
        A2h.append(_a2_hat(s.a2, sup, y))
    A2h = np.stack(A2h)  # (S, 2Mh+1)
    even_x = (np.arange(n) % 2 == 0).astype(float)
    even_m = (m % 2 == 0).astype(float)
    upad = np.concatenate([np.zeros(Mh, complex), us, np.zeros(Mh + 1, complex)])
    j = np.arange(n) + Mh
    fine = np.zeros(len(symbols), complex)
    coarse = np.zeros(len(symbols), complex)
    for start in range(0, m.size, block):
        mb = m[start:start + block]
        C = upad[j[:, None] + mb[None, :]] * np.conj(upad[j[:, None] - mb[None, :]])
        Sx = A1 @ C  # (S, B): x sums
        Sx_c = (A1 * even_x) @ C
        a2 = A2h[:, start:start + block]
        fine += np.sum(Sx * a2, axis=1)
        coarse += np.sum(Sx_c * a2 * even_m[start:start + block], axis=1)
    fine *= dxs * dy
    coarse *= 4 * dxs * dy
    return fine.real, np.abs(fine.real - coarse.real)


def measure_swt(f: PhaseSpaceField, symbol, f_half: Optional[PhaseSpaceField] = None):
    """``<f, A>`` with an error estimate.

    The estimate adds the grid-halving quadrature estimate and, when the field
    smoothed with widths divided by ``sqrt(2)`` is given, the smoothing-bias
    extrapolation ``|p(sigma) - p(sigma / sqrt 2)| / (1 - 2^-1/2)``.
    """
    val, est = pair(f, symbol)
    if f_half is not None:
        val_h, est_h = pair(f_half, symbol)
        est = max(est, est_h) + abs(val - val_h) / (1 - 2 ** -0.5)
    return val, est


def swt_pair_fields(u, sigma_x: float = 2 ** -0.5, sigma_k: float = 2 ** -0.5, **kw):
    """SWT fields at ``(sigma_x, sigma_k)`` and at both widths over ``sqrt(2)``
    on a common grid (the second one feeds the smoothing-bias estimate)."""
    g = transform(u, sigma_x / math.sqrt(2), sigma_k / math.sqrt(2), **kw)
    dy = 2 * (g.x[1] - g.x[0]) / g.hbar if g.x.size > 1 else 2 * kw.get("dx", g.hbar / 8) / g.hbar
    n_fft = int(round(1.0 / (g.dk * dy)))
    kw = dict(kw, nk=n_fft, y_count=kw.get("y_count") or n_fft)
    f = transform(u, sigma_x, sigma_k, **kw)
    return f, g


def measure_separable(u, A1=None, A2=None, hbar: Optional[float] = None, route: str = "via_swt",
                      *, symbol: Optional[ObservableSymbol] = None, k_support=None,
                      sigma: float = 2 ** -0.5, field: Optional[PhaseSpaceField] = None,
                      field_half: Optional[PhaseSpaceField] = None, with_estimate: bool = False,
                      **kw):
    """Measure ``A1(x) A2(k)`` on a state by the direct or via_swt route.

    ``k_support`` (required by the direct route for plain callables) bounds
    the support of ``A2``.  With ``with_estimate`` the quadrature estimate is
    returned alongside the value.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    if symbol is None:
        if A1 is None:
            A1 = lambda x: np.ones_like(np.asarray(x, dtype=float))  # noqa: E731
        if A2 is None:
            symbol = ObservableSymbol("position_only", A1=A1)
        else:
            symbol = ObservableSymbol("separable", A1=A1, A2=A2,
                                      support=tuple(k_support) if k_support else None)
    if route == "direct":
        vals, ests = _direct(u, [symbol], hbar, **kw)
        val, est = float(vals[0]), float(ests[0])
    else:
        if field is None:
            field, field_half = swt_pair_fields(u, sigma, sigma, hbar=hbar, **kw)
        val, est = measure_swt(field, symbol, field_half)
    return (val, est) if with_estimate else val


def measure_symbols(u, symbols: Sequence[ObservableSymbol], hbar: Optional[float] = None,
                    route: str = "via_swt", sigma: float = 2 ** -0.5, **kw):
    """Measure many symbols on one state; returns ``(values, estimates)``."""
    if route == "direct":
        return _direct(u, symbols, hbar, **{k: v for k, v in kw.items() if k in ("dx", "domain")})
    f, g = swt_pair_fields(u, sigma, sigma, hbar=hbar, **kw)
    out = [measure_swt(f, s, g) for s in symbols]
    return np.array([o[0] for o in out]), np.array([o[1] for o in out])


# -- error bounds and comparison statistics ----------------------------------

def observable_error_bound(tol: float, kind: str, hbar: float, symbol_norms,
                           norm_U: float = 1.0, norm_u: float = 1.0) -> float:
    """A posteriori bound on ``|A[u] - A[U]|`` from ``||u - U|| <= tol``.

    ``kind='position'`` uses ``||A||_inf``; ``kind='separable'`` uses
    ``hbar^-1/2 ||A||_L2``.  ``symbol_norms`` is either the relevant norm or
    a ``(sup, l2)`` pair.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if isinstance(symbol_norms, (tuple, list)):
        sup, l2 = symbol_norms
    else:
        sup = l2 = float(symbol_norms)
    base = tol * (norm_U + norm_u)
    if kind == "position":
        return float(base * sup)
    if kind == "separable":
        return float(base * l2 / math.sqrt(hbar))
    raise ValueError("kind must be 'position' or 'separable'")


def symbol_bound(symbol: ObservableSymbol, tol: float, hbar: float,
                 norm_U: float = 1.0, norm_u: float = 1.0) -> float:
    kind = "position" if symbol.position_only else "separable"
    return observable_error_bound(tol, kind, hbar, symbol.norms(), norm_U, norm_u)


def correlation(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Uncentred correlation ``<x, y> / (||x|| ||y||)``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two sequences of equal length >= 2")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ValueError("correlation undefined for a zero vector")
    return float(np.dot(x, y) / (nx * ny))


@dataclass(frozen=True)
class MeasurementRow:
    t: float
    symbol: str
    alpha: int
    beta: int
    j: int
    quantum: float
    classical: float
    bound: float

    @property
    def flag(self) -> bool:
        """Discrepancy exceeds the a posteriori bound."""
        return abs(self.quantum - self.classical) > self.bound

    def as_tuple(self):
        return (repr(float(self.t)), self.symbol, self.alpha, self.beta, self.j,
                repr(float(self.quantum)), repr(float(self.classical)), repr(float(self.bound)),
                int(self.flag))


def compare(t: float, u, ensemble: Ensemble, symbols: Sequence[ObservableSymbol], tol: float,
            hbar: Optional[float] = None, route: str = "via_swt", **kw) -> List[MeasurementRow]:
    """Quantum and classical measurements of every symbol at one time, each
    row carrying the a posteriori bound of the quantum value."""
    hbar = hbar if hbar is not None else getattr(u, "hbar", None)
    q, _ = measure_symbols(u, symbols, hbar, route, **kw)
    norm_U = u.norm() if isinstance(u, Wavefunction) else 1.0
    rows = []
    for s, qv in zip(symbols, q):
        c = measure_ensemble(ensemble, s)
        rows.append(MeasurementRow(t, s.name, s.alpha, s.beta, s.j, float(qv), c,
                                   symbol_bound(s, tol, hbar, norm_U)))
    return rows


def write_table(rows: Iterable[MeasurementRow], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for r in rows:
            w.writerow(r.as_tuple())
    return path
