"""Computable error indicators for the CN/B-spline scheme.

Time: one full step against two half steps from the same state.  For a
second-order method the half-step result is the better one and
``||U_half - U_full|| / (2^2 - 1)`` estimates its local error.

Space: two-level comparison against the uniformly bisected space.  The
adaptive driver carries a parallel trajectory on the enriched space and
reports the largest difference over the run; :func:`estimate_step` gives the
single-step variant for callers that only hold one pair of states.

Initial data: ``||u0 - P u0||`` by Gauss quadrature of the residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..core.potentials import Potential
from ..core.splines import SplineSpace
from .cn import CNPropagator, assemble

RICHARDSON = 3.0  # 2^p - 1 with p = 2


def time_indicator(U_full, U_half, mass) -> float:
    d = np.asarray(U_half) - np.asarray(U_full)
    return float(np.sqrt(max(mass.inner(d).real, 0.0)) / RICHARDSON)


@dataclass
class CrossNorm:
    """``||U_h - U_H||`` between a space and its bisection, with per-cell parts.

    Both expansions are sampled at Gauss points of the finer space, where
    their difference is a polynomial of degree ``r`` per cell, so ``r + 1``
    points integrate its square exactly.
    """

    coarse: SplineSpace
    fine: SplineSpace
    _Ec: object = field(init=False, repr=False)
    _Ef: object = field(init=False, repr=False)
    _w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        xq, wq = self.fine.quadrature(self.fine.degree + 1)
        self._Ec = self.coarse.collocation(xq, sparse=True)
        self._Ef = self.fine.collocation(xq, sparse=True)
        self._w = wq
        self._shape = xq.shape

    def cell_contributions(self, Uc, Uf) -> np.ndarray:
        """``int |U_h - U_H|^2`` over each cell of the fine space."""
        d = self._Ec @ Uc - self._Ef @ Uf
        return np.sum(self._w * np.abs(d.reshape(self._shape)) ** 2, axis=1)

    def __call__(self, Uc, Uf) -> float:
        return float(np.sqrt(self.cell_contributions(Uc, Uf).sum()))

    def coarse_cells(self, fine_values: np.ndarray) -> np.ndarray:
        """Sum fine-cell values onto the coarse cells containing them."""
        mids = 0.5 * (self.fine.breaks[:-1] + self.fine.breaks[1:])
        idx = self.coarse.find_cell(mids)
        return np.bincount(idx, weights=fine_values, minlength=self.coarse.cells)


def embed(coarse: SplineSpace, fine: SplineSpace, U) -> np.ndarray:
    """Exact coefficients on ``fine`` of a ``coarse`` expansion (nested spaces)."""
    return fine.project(lambda x: coarse.evaluate(U, x), nq=fine.degree + 1)


def projection_error(space: SplineSpace, f: Callable, U, nq: Optional[int] = None,
                     per_cell: bool = False):
    """``||f - U||`` by Gauss quadrature on each cell (optionally per cell)."""
    nq = nq or space.degree + 8
    xq, wq = space.quadrature(nq)
    d = f(xq) - space.collocation(xq, sparse=True).dot(U).reshape(xq.shape)
    cells = np.sum(wq * np.abs(d) ** 2, axis=1)
    if per_cell:
        return cells
    return float(np.sqrt(cells.sum()))


def estimate_step(U_prev, U_next, dt: float, space: SplineSpace, potential: Potential,
                  hbar: float, t: float = 0.0, shift: float = 0.0):
    """Single-step indicators ``(es_n, et_n)`` for the step ``U_prev -> U_next``.

    ``et_n`` compares ``U_next`` (taken as the one-step result) with two half
    steps; ``es_n`` compares ``U_next`` with the same step taken on the
    bisected space from the embedded ``U_prev``.
    """
    U_prev = np.asarray(U_prev, dtype=complex)
    if not np.any(U_prev) and not np.any(U_next):
        return 0.0, 0.0
    op = assemble(space, potential, t, hbar, shift)
    prop = CNPropagator(op)
    half = prop.step(prop.step(U_prev, t, 0.5 * dt), t + 0.5 * dt, 0.5 * dt)
    et = time_indicator(U_next, half, op.mass)
    fine = space.refine()
    fprop = CNPropagator(assemble(fine, potential, t, hbar, shift))
    Uf = fprop.step(embed(space, fine, U_prev), t, dt)
    es = CrossNorm(space, fine)(np.asarray(U_next), Uf)
    return es, et
