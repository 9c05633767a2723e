"""Wavefunctions and the initial-data families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import trapezoid

from .grids import Grid1D, SemiclassicalConfig
from .splines import SplineSpace

FAMILIES = ("gaussian_wkb", "double_well_init", "nonsmooth_init", "tdp_init",
            "collision_pair", "wkb_slice")


class ResolutionError(ValueError):
    """The discretization cannot resolve the oscillation of the data."""


@dataclass(frozen=True)
class Wavefunction:
    """A state on a spline space (``coeffs`` are reduced B-spline coefficients)
    or on a nodal grid (``coeffs`` are point samples).

    ``exact`` optionally carries the closed-form function the state was built
    from; oracles and the transforms may use it, the solver never does.
    """

    basis: Union[SplineSpace, Grid1D]
    coeffs: np.ndarray = field(repr=False)
    hbar: float
    exact: Optional[Callable] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)  # private copy, frozen below
        n = self.basis.dof if self.is_spline else self.basis.size
        if c.shape != (n,):
            raise ValueError(f"expected {n} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def is_spline(self) -> bool:
        return isinstance(self.basis, SplineSpace)

    @property
    def a(self) -> float:
        return self.basis.a

    @property
    def b(self) -> float:
        return self.basis.b

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_spline:
            return self.basis.evaluate(self.coeffs, x)
        re = np.interp(x, self.basis.nodes, self.coeffs.real, left=0.0, right=0.0)
        im = np.interp(x, self.basis.nodes, self.coeffs.imag, left=0.0, right=0.0)
        return re + 1j * im

    def norm(self) -> float:
        if self.is_spline:
            return self.basis.norm(self.coeffs)
        return float(np.sqrt(trapezoid(np.abs(self.coeffs) ** 2, self.basis.nodes)))

    def with_coeffs(self, coeffs) -> "Wavefunction":
        return Wavefunction(self.basis, coeffs, self.hbar, None)


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial-data family plus its parameters.

    ``params`` carries family-specific extras (``lam`` for the time-dependent
    trap datum).
    """

    family: str
    x0: float = -1.5
    m: float = 1.0
    theta: float = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown initial-data family {self.family!r}")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")

    def functions(self, hbar: float):
        """``(u, dS)``: the datum as a callable and its local phase slope
        ``d(phase * hbar)/dx`` (used for the resolution check)."""
        x0, m, h = self.x0, self.m, hbar
        fam = self.family

        def gauss(c):
            return lambda x: h ** -0.25 * np.exp(-0.5 * np.pi * (x - c) ** 2 / h)

        if fam == "gaussian_wkb":
            p = m * np.sqrt(abs(x0))
            a = gauss(x0)
            return (lambda x: a(x) * np.exp(1j * p * (x - x0) / h),
                    lambda x: np.full_like(x, p))
        if fam == "collision_pair":
            p = np.sqrt(abs(x0))
            a1, a2 = gauss(x0), gauss(-x0)
            ph = np.exp(2j * np.pi * self.theta)

            def u(x):
                return (a1(x) * np.exp(1j * p * (x - x0) / h)
                        + ph * a2(x) * np.exp(-1j * p * (x + x0) / h))

            return u, lambda x: np.full_like(x, p)
        if fam == "nonsmooth_init":
            p = 25.0 * np.sqrt(1.5)
            a = gauss(x0)
            return (lambda x: a(x) * np.exp(1j * p * (x - x0) / h),
                    lambda x: np.full_like(x, p))
        if fam == "double_well_init":
            def S(x):
                z = 5.0 * (x - 0.5)
                return -0.2 * np.logaddexp(z, -z)

            return (lambda x: np.exp(-12.5 * x * x) * np.exp(1j * S(x) / h),
                    lambda x: np.abs(np.tanh(5.0 * (x - 0.5))))
        if fam == "tdp_init":
            lam = float(self.params.get("lam", 10.0))
            return (lambda x: np.exp(-lam ** 2 * (x - 0.5) ** 2 + 5j * (x * x - x) / h),
                    lambda x: np.abs(10.0 * x - 5.0))
        # wkb_slice
        def amp(x):
            return (1 + np.tanh(7 * (x + 3))) * (1 + np.tanh(7 * (1 - x)))

        return (lambda x: amp(x) * np.exp(-2j * np.abs(x) ** 1.5 / (3 * h)),
                lambda x: np.sqrt(np.abs(x)))

    def envelope(self, hbar: float):
        """Modulus of the datum (to locate where resolution matters)."""
        u, _ = self.functions(hbar)
        return lambda x: np.abs(u(x))


def points_per_wavelength(spec: InitialDataSpec, basis, hbar: float) -> float:
    """Worst-case samples per local wavelength ``2 pi hbar / |m S0'|`` over the
    region where the datum is non-negligible.

    For a degree-``r`` spline space each cell counts as ``r`` samples (the
    number of new coefficients a cell adds away from the ends).
    """
    if isinstance(basis, SplineSpace):
        nodes, per_cell = basis.breaks, basis.degree
    else:
        nodes, per_cell = basis.nodes, 1
    h = np.diff(nodes)
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    env = spec.envelope(hbar)
    samples = np.concatenate([nodes[:-1], mid, nodes[1:]])
    e = env(samples).reshape(3, -1).max(axis=0)
    live = e > 1e-12 * max(e.max(), 1e-300)
    if not np.any(live):
        return np.inf
    _, dS = spec.functions(hbar)
    slope = np.abs(dS(mid))
    with np.errstate(divide="ignore"):
        wavelength = 2 * np.pi * hbar / slope
    return float(np.min((wavelength / h * per_cell)[live]))


def build_initial_data(spec: InitialDataSpec, grid: Union[Grid1D, SplineSpace],
                       cfg: SemiclassicalConfig, degree: Optional[int] = None) -> Wavefunction:
    """Sample (nodal grid) or L2-project (spline space) the initial datum.

    Pass a :class:`SplineSpace`, or a grid plus ``degree``, for a spline state.
    """
    if degree is not None and isinstance(grid, Grid1D):
        grid = SplineSpace.from_grid(grid, degree)
    u, _ = spec.functions(cfg.hbar)
    ppw = points_per_wavelength(spec, grid, cfg.hbar)
    if ppw < 8:
        raise ResolutionError(
            f"only {ppw:.2f} points per wavelength (need >= 8); refine the grid")
    if isinstance(grid, SplineSpace):
        coeffs = grid.project(u)
    else:
        coeffs = u(np.asarray(grid.nodes))
    return Wavefunction(grid, coeffs, cfg.hbar, exact=u)
