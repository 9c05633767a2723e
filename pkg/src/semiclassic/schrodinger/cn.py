"""Galerkin assembly and the Crank-Nicolson step.

Weak form of ``i hbar u_t = -(hbar^2/2) u_xx + V u + f``:

    i hbar M U' = H U + F,     H = (hbar^2/2) S + P(t),

with ``M`` the mass, ``S`` the stiffness (``int B_i' B_j'``) and ``P`` the
potential matrix.  One CN step solves

    (i hbar M/dt - H/2) U^n = (i hbar M/dt + H/2) U^{n-1} + F_{n-1/2}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack

from ..core.banded import BandMatrix, assemble_weighted, load_vector
from ..core.potentials import Potential
from ..core.splines import SplineSpace


class SingularPointError(ValueError):
    """A potential kink lies strictly inside a quadrature cell."""


class NumericError(RuntimeError):
    pass


def check_knots(space: SplineSpace, potential: Potential) -> None:
    for p in potential.singular_points:
        if space.a < p < space.b and not space.has_knot(p):
            raise SingularPointError(
                f"singular point {p} of {potential.name} is not a knot of the spline space")


def potential_matrix(space: SplineSpace, potential: Potential, t: float = 0.0,
                     shift: float = 0.0, nq: Optional[int] = None) -> BandMatrix:
    """``int (V(x, t) - shift) B_i B_j`` with ``r + 4`` Gauss points per cell."""
    check_knots(space, potential)
    nq = nq or space.degree + 4
    return assemble_weighted(space, lambda x: potential.value(x, t) - shift, "mass", nq)


@dataclass
class DiscreteOperator:
    """Mass, stiffness and potential matrices of one spline space.

    ``shift`` is a constant subtracted from the potential (a gauge choice:
    solutions with and without it differ by ``exp(-i shift t / hbar)``).
    """

    space: SplineSpace
    potential: Potential
    hbar: float
    t: float
    mass: BandMatrix
    stiffness: BandMatrix
    pot: BandMatrix
    shift: float = 0.0

    @property
    def H(self) -> BandMatrix:
        return self.stiffness * (0.5 * self.hbar ** 2) + self.pot

    def at(self, t: float) -> "DiscreteOperator":
        """Reassemble the potential part at time ``t`` (no-op if static)."""
        if not self.potential.time_dependent or t == self.t:
            return self
        pot = potential_matrix(self.space, self.potential, t, self.shift)
        return DiscreteOperator(self.space, self.potential, self.hbar, t,
                                self.mass, self.stiffness, pot, self.shift)

    def energy(self, U) -> float:
        """Rayleigh quotient ``<U, H U> / <U, M U>`` (shift included)."""
        den = self.mass.inner(U).real
        return float(self.H.inner(U).real / den) if den > 0 else 0.0

    def with_shift(self, shift: float) -> "DiscreteOperator":
        pot = self.pot - self.mass * (shift - self.shift)
        return DiscreteOperator(self.space, self.potential, self.hbar, self.t,
                                self.mass, self.stiffness, pot, shift)


def assemble(space: SplineSpace, potential: Potential, t: float, hbar: float,
             shift: float = 0.0) -> DiscreteOperator:
    check_knots(space, potential)
    stiff = assemble_weighted(space, kind="stiffness")
    return DiscreteOperator(space, potential, hbar, t, space.mass, stiff,
                            potential_matrix(space, potential, t, shift), shift)


class BandedLU:
    """LU factorization (partial pivoting) of a complex band matrix."""

    def __init__(self, A: BandMatrix):
        w = A.w
        ab = np.zeros((3 * w + 1, A.n), dtype=complex)
        ab[w:] = A.data
        lu, piv, info = lapack.zgbtrf(ab, w, w)
        if info != 0:
            raise NumericError(f"banded factorization failed (info={info})")
        self.A, self.lu, self.piv = A, lu, piv

    def _solve(self, b):
        x, info = lapack.zgbtrs(self.lu, self.A.w, self.A.w, b, self.piv)
        if info != 0:
            raise NumericError(f"banded solve failed (info={info})")
        return x

    def solve(self, b, rtol: float = 1e-12):
        b = np.asarray(b, dtype=complex)
        x = self._solve(b)
        r = b - self.A.matvec(x)
        nb = np.linalg.norm(b)
        if np.linalg.norm(r) > rtol * nb:  # one step of iterative refinement
            x = x + self._solve(r)
        return x


def cn_matrices(op: DiscreteOperator, dt: float):
    a = 1j * op.hbar / dt
    H = op.H
    lhs = BandMatrix(op.mass.data * a - 0.5 * H.data, H.w)
    rhs = BandMatrix(op.mass.data * a + 0.5 * H.data, H.w)
    return lhs, rhs


def forcing_vector(space: SplineSpace, f: Callable, t: float, nq: Optional[int] = None):
    """Load vector of the source ``f(x, t)`` (zero in all catalog scenarios)."""
    nq = nq or space.degree + 6
    xq, _ = space.quadrature(nq)
    return load_vector(space, f(xq, t), nq)


def cn_step(op_midpoint: DiscreteOperator, U_prev, dt: float, hbar: float = None,
            f_forcing=None, lu: Optional[BandedLU] = None):
    """One Crank-Nicolson step.

    ``op_midpoint`` must be assembled at ``t_{n-1/2}``.  ``f_forcing`` is
    either a precomputed load vector or None.  A cached factorization of the
    left-hand side may be passed as ``lu``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if hbar is not None and hbar != op_midpoint.hbar:
        raise ValueError("hbar does not match the operator")
    lhs, rhs = cn_matrices(op_midpoint, dt)
    lu = lu or BandedLU(lhs)
    b = rhs.matvec(np.asarray(U_prev, dtype=complex))
    if f_forcing is not None:
        b = b + f_forcing
    return lu.solve(b)


@dataclass
class CNPropagator:
    """Repeated CN steps on one space, caching factorizations per ``dt`` for
    time-independent potentials."""

    op: DiscreteOperator
    forcing: Optional[Callable] = None
    _cache: dict = field(default_factory=dict, repr=False)

    def _factors(self, t_mid: float, dt: float):
        static = not self.op.potential.time_dependent
        key = dt if static else None
        if static and key in self._cache:
            return self._cache[key]
        op = self.op.at(t_mid)
        lhs, rhs = cn_matrices(op, dt)
        out = (BandedLU(lhs), rhs)
        if static:
            if len(self._cache) > 24:
                self._cache.clear()
            self._cache[key] = out
        return out

    def step(self, U, t: float, dt: float):
        lu, rhs = self._factors(t + 0.5 * dt, dt)
        b = rhs.matvec(U)
        if self.forcing is not None:
            b = b + forcing_vector(self.op.space, self.forcing, t + 0.5 * dt)
        return lu.solve(b)
