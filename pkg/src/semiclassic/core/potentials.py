"""Closed-form potentials with explicit conical singular points.

Every potential exposes ``value(x, t)`` and an a.e. ``derivative(x, t)``.
Conical potentials are stored in the composite form

    V(x) = V0(x) + w(x) |g(x)|^(1+a),

with ``singular_points`` the roots of ``g``.  Quadrature and trajectory code
use those points to avoid integrating across a kink.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

KINDS = ("closed_form_smooth", "conical_composite", "time_dependent", "tabulated")

# f(x) -> (value, derivative)
SmoothPair = Callable[[np.ndarray], tuple]


def _const(c: float) -> SmoothPair:
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.full_like(x, c), np.zeros_like(x)

    return f


def _identity(center: float = 0.0) -> SmoothPair:
    def f(x):
        x = np.asarray(x, dtype=float)
        return x - center, np.ones_like(x)

    return f


@dataclass(frozen=True)
class Potential:
    kind: str
    name: str
    _value: Callable = field(repr=False)
    _derivative: Callable = field(repr=False)
    singular_points: tuple = ()
    # conical composite pieces, each f(x) -> (f, f')
    V0: Optional[SmoothPair] = field(default=None, repr=False)
    w: Optional[SmoothPair] = field(default=None, repr=False)
    g: Optional[SmoothPair] = field(default=None, repr=False)
    a_hoelder: float = 0.0
    # exact cone parameters (offset, signed slope, center) when V is a pure cone
    cone: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "conical_composite":
            if not 0 <= self.a_hoelder < 1:
                raise ValueError("a_hoelder must lie in [0, 1)")
            for p in self.singular_points:
                gv, _ = self.g(np.array([p]))
                if abs(gv[0]) > 1e-12:
                    raise ValueError(f"singular point {p} is not a root of g")

    @property
    def time_dependent(self) -> bool:
        return self.kind == "time_dependent"

    def value(self, x, t: float = 0.0):
        return self._value(np.asarray(x, dtype=float), t)

    def derivative(self, x, t: float = 0.0):
        return self._derivative(np.asarray(x, dtype=float), t)

    def branch_derivative(self, x, side, t: float = 0.0):
        """Derivative of the smooth branch of ``V`` living on ``sign(g) == side``.

        Off the singular set this equals :meth:`derivative` on the matching
        side; on the other side it is the analytic continuation, which is what
        a one-sided integrator needs when it steps over a kink.
        """
        if self.kind != "conical_composite" or self.a_hoelder > 0:
            return self.derivative(x, t)
        x = np.asarray(x, dtype=float)
        v0, dv0 = self.V0(x)
        w, dw = self.w(x)
        g, dg = self.g(x)
        return dv0 + side * (dw * g + w * dg)

    def side(self, x):
        """Sign of ``g`` (0 exactly on a singular point, +1 for smooth kinds)."""
        x = np.asarray(x, dtype=float)
        if self.kind != "conical_composite":
            return np.ones_like(x)
        g, _ = self.g(x)
        return np.sign(g)

    # -- constructors -----------------------------------------------------

    @classmethod
    def smooth(cls, value, derivative, name="smooth") -> "Potential":
        return cls("closed_form_smooth", name,
                   lambda x, t: value(x), lambda x, t: derivative(x))

    @classmethod
    def time_dependent_(cls, value, derivative, name="time_dependent") -> "Potential":
        return cls("time_dependent", name, value, derivative)

    @classmethod
    def tabulated(cls, x, v, name="tabulated") -> "Potential":
        spline = CubicSpline(np.asarray(x, float), np.asarray(v, float))
        d = spline.derivative()
        return cls("tabulated", name, lambda x, t: spline(x), lambda x, t: d(x))

    @classmethod
    def conical(cls, V0: SmoothPair, w: SmoothPair, g: SmoothPair,
                singular_points: Sequence[float], a: float = 0.0,
                name="conical", cone=None) -> "Potential":
        def value(x, t):
            v0, _ = V0(x)
            wv, _ = w(x)
            gv, _ = g(x)
            return v0 + wv * np.abs(gv) ** (1 + a)

        def derivative(x, t):
            v0, dv0 = V0(x)
            wv, dw = w(x)
            gv, dg = g(x)
            ag = np.abs(gv)
            return dv0 + dw * ag ** (1 + a) + wv * (1 + a) * ag ** a * np.sign(gv) * dg

        return cls("conical_composite", name, value, derivative,
                   tuple(float(p) for p in singular_points), V0, w, g, float(a), cone)


# -- built-in potentials ----------------------------------------------------

def cone_potential(offset: float = 0.0, slope: float = -1.0, center: float = 0.0) -> Potential:
    """``V = offset + slope * |x - center|``; ``slope < 0`` is a singular saddle."""
    return Potential.conical(_const(offset), _const(slope), _identity(center), [center],
                             name=f"cone({offset},{slope},{center})",
                             cone=(float(offset), float(slope), float(center)))


def _tanh_window(cutoff: float) -> SmoothPair:
    # (1 + tanh(4(x + c)))(1 + tanh(-4(x - c))); written so x -> -x swaps factors exactly
    def f(x):
        x = np.asarray(x, dtype=float)
        p = np.tanh(4.0 * (x + cutoff))
        q = np.tanh(-4.0 * (x - cutoff))
        val = (1.0 + p) * (1.0 + q)
        der = 4.0 * (1.0 - p * p) * (1.0 + q) - 4.0 * (1.0 + p) * (1.0 - q * q)
        return val, der

    return f


def abs_saddle_potential(cutoff: float = 2.5) -> Potential:
    """``1 + window(x) (4 - |x|) / 8``, close to ``3 - |x|/2`` near the origin.

    ``cutoff=2.5`` is the splitting/collision potential, ``cutoff=4`` the one
    used for the WKB slicing experiment.
    """
    win = _tanh_window(cutoff)

    def V0(x):
        c, dc = win(x)
        return 1.0 + c / 2.0, dc / 2.0

    def w(x):
        c, dc = win(x)
        return -c / 8.0, -dc / 8.0

    return Potential.conical(V0, w, _identity(0.0), [0.0], name=f"abs_saddle(cutoff={cutoff})")


def v_shape_potential(c: float = 10.0) -> Potential:
    """``c |x|`` (the non-smooth validation problem uses ``c = 10``)."""
    return Potential.conical(_const(0.0), _const(c), _identity(0.0), [0.0],
                             name=f"v_shape({c})", cone=(0.0, float(c), 0.0))


def double_well_potential() -> Potential:
    return Potential.smooth(lambda x: (x * x - 0.25) ** 2,
                            lambda x: 4.0 * x * (x * x - 0.25),
                            name="double_well")


def harmonic_potential(omega: float = 1.0) -> Potential:
    return Potential.smooth(lambda x: 0.5 * omega ** 2 * x * x,
                            lambda x: omega ** 2 * x, name=f"harmonic({omega})")


def constant_potential(c: float = 0.0) -> Potential:
    return Potential.smooth(lambda x: np.full_like(np.asarray(x, float), c),
                            lambda x: np.zeros_like(np.asarray(x, float)), name=f"constant({c})")


def shrinking_trap_potential(t_shift: float = 0.05) -> Potential:
    """``x^2 / (2 (t + t_shift))``: steep in time near ``t = 0``."""
    return Potential.time_dependent_(
        lambda x, t: x * x / (2.0 * (t + t_shift)),
        lambda x, t: x / (t + t_shift),
        name=f"shrinking_trap({t_shift})")


def smooth_cutoff(L: float = 1.0) -> SmoothPair:
    """Smooth ``b`` with ``b = 1`` on ``|x| < 2L`` and ``b = 0`` on ``|x| > 4L``.

    Built from the standard ``exp(-1/s)`` bump transition so it is exactly
    constant outside ``2L < |x| < 4L``.
    """

    def psi(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    def dpsi(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
        return out

    def f(x):
        x = np.asarray(x, dtype=float)
        s = (np.abs(x) - 2 * L) / (2 * L)  # 0 at |x|=2L, 1 at |x|=4L
        num, den = psi(1.0 - s), psi(1.0 - s) + psi(s)
        b = num / den
        dnum = -dpsi(1.0 - s)
        dden = -dpsi(1.0 - s) + dpsi(s)
        db_ds = (dnum * den - num * dden) / den ** 2
        return b, db_ds * np.sign(x) / (2 * L)

    return f


def power_saddle_potential(a: float = 0.5, L: float = 1.0) -> Potential:
    """``-|x|^(1+a) b(x)`` with the compactly supported cutoff ``b``."""
    b = smooth_cutoff(L)

    def w(x):
        bv, db = b(x)
        return -bv, -db

    return Potential.conical(_const(0.0), w, _identity(0.0), [0.0], a=a,
                             name=f"power_saddle(a={a},L={L})")
