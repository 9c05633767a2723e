"""Clamped B-spline spaces with homogeneous Dirichlet reduction.

Basis functions are indexed on the full clamped knot vector; the first and
last functions (the only ones not vanishing at the endpoints) are dropped, so
reduced index ``i`` corresponds to full index ``i + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix

from .banded import BandMatrix, assemble_weighted, load_vector
from .grids import Grid1D


def basis_funs(knots, r, span, x, deriv=False):
    """Nonzero B-splines of degree ``r`` (and optionally first derivatives).

    ``span`` holds the knot-span index of each point, so the nonzero functions
    at ``x[p]`` have full indices ``span[p]-r .. span[p]``.  Returns arrays of
    shape ``(len(x), r + 1)``.
    """
    x = np.asarray(x, dtype=float)
    span = np.asarray(span)
    n = x.size
    t = knots

    def cox_de_boor(deg):
        N = np.zeros((n, deg + 1))
        N[:, 0] = 1.0
        left = np.zeros((n, deg + 1))
        right = np.zeros((n, deg + 1))
        for j in range(1, deg + 1):
            left[:, j] = x - t[span + 1 - j]
            right[:, j] = t[span + j] - x
            saved = np.zeros(n)
            for k in range(j):
                temp = N[:, k] / (right[:, k + 1] + left[:, j - k])
                N[:, k] = saved + right[:, k + 1] * temp
                saved = left[:, j - k] * temp
            N[:, j] = saved
        return N

    N = cox_de_boor(r)
    if not deriv:
        return N
    dN = np.zeros_like(N)
    if r == 0:
        return N, dN
    Nm = cox_de_boor(r - 1)
    for a in range(r + 1):
        i = span - r + a
        if a >= 1:
            dN[:, a] += r * Nm[:, a - 1] / (t[i + r] - t[i])
        if a <= r - 1:
            dN[:, a] -= r * Nm[:, a] / (t[i + r + 1] - t[i + 1])
    return N, dN


@dataclass(frozen=True)
class SplineSpace:
    """Degree-``r`` splines on the breakpoints ``breaks``.

    Interior knots are simple except for those listed in ``repeated``, which
    get multiplicity two (continuity ``C^(r-2)`` there).  Repeating the knot at
    a potential kink lets the space follow the jump the kink induces in the
    third derivative of the solution.
    """

    degree: int
    breaks: np.ndarray = field(repr=False)
    repeated: tuple = ()

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("spline degree must be >= 1")
        b = np.asarray(self.breaks, dtype=float)
        if b.ndim != 1 or b.size < 2 or np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        b.setflags(write=False)
        object.__setattr__(self, "breaks", b)
        rep = tuple(sorted(float(p) for p in self.repeated))
        for p in rep:
            if not (b[0] < p < b[-1]) or np.min(np.abs(b - p)) > 0:
                raise ValueError(f"repeated knot {p} is not an interior breakpoint")
        object.__setattr__(self, "repeated", rep)
        if self.n_basis - 2 < 1:
            raise ValueError("space too small for Dirichlet reduction")

    @classmethod
    def from_grid(cls, grid: Grid1D, degree: int, repeated=()) -> "SplineSpace":
        return cls(degree, np.array(grid.nodes), tuple(repeated))

    @classmethod
    def uniform(cls, a: float, b: float, cells: int, degree: int, repeated=()) -> "SplineSpace":
        return cls.from_grid(Grid1D.uniform(a, b, cells), degree, repeated)

    @property
    def a(self) -> float:
        return float(self.breaks[0])

    @property
    def b(self) -> float:
        return float(self.breaks[-1])

    @property
    def cells(self) -> int:
        return self.breaks.size - 1

    @property
    def n_basis(self) -> int:
        return self.cells + self.degree + len(self.repeated)

    @property
    def dof(self) -> int:
        return self.n_basis - 2

    @property
    def bandwidth(self) -> int:
        """Half bandwidth of mass/stiffness matrices (full width ``2r + 1``)."""
        return self.degree

    @cached_property
    def knots(self) -> np.ndarray:
        r = self.degree
        inner = np.sort(np.concatenate([self.breaks, self.repeated]))
        return np.concatenate([np.full(r, self.a), inner, np.full(r, self.b)])

    @cached_property
    def spans(self) -> np.ndarray:
        """Knot-span index of each cell; cell ``c`` carries full basis
        indices ``spans[c] - r .. spans[c]``."""
        t = self.knots
        s = np.nonzero(t[1:] > t[:-1])[0]
        return s

    @cached_property
    def mass(self) -> BandMatrix:
        return assemble_weighted(self, kind="mass")

    def project(self, f, nq: int | None = None) -> np.ndarray:
        """L2 projection of the callable ``f`` onto the Dirichlet space."""
        nq = nq or self.degree + 6
        xq, _ = self.quadrature(nq)
        return self.mass.solve(load_vector(self, f(xq), nq))

    def norm(self, coeffs) -> float:
        return float(np.sqrt(max(self.mass.inner(np.asarray(coeffs)).real, 0.0)))

    def first_index(self) -> np.ndarray:
        """Full index of local function 0 in each cell."""
        return self.spans - self.degree

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.a, self.b, np.array(self.breaks))

    def has_knot(self, p: float, tol: float = 1e-13) -> bool:
        return bool(np.min(np.abs(self.breaks - p)) <= tol * max(1.0, abs(p)))

    def find_cell(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(c, 0, self.cells - 1)

    def quadrature(self, nq: int):
        """Gauss-Legendre points/weights per cell, shapes ``(cells, nq)``."""
        g, w = np.polynomial.legendre.leggauss(nq)
        lo, hi = self.breaks[:-1, None], self.breaks[1:, None]
        half = 0.5 * (hi - lo)
        return lo + half * (g + 1.0), half * w

    def cell_basis(self, xq, deriv=False):
        """Basis values at per-cell points ``xq`` of shape ``(cells, nq)``.

        Returns arrays shaped ``(cells, nq, r + 1)``; local function ``a`` in
        cell ``c`` is full basis index ``spans[c] - r + a``.
        """
        cells, nq = xq.shape
        assert cells == self.cells
        span = np.repeat(self.spans, nq)
        out = basis_funs(self.knots, self.degree, span, xq.ravel(), deriv=deriv)
        if deriv:
            return tuple(o.reshape(cells, nq, -1) for o in out)
        return out.reshape(cells, nq, -1)

    def full_coeffs(self, coeffs) -> np.ndarray:
        c = np.zeros(self.n_basis, dtype=np.result_type(coeffs, float))
        c[1:-1] = coeffs
        return c

    def evaluate(self, coeffs, x, deriv: int = 0) -> np.ndarray:
        """Evaluate the reduced-coefficient expansion (or its first derivative)."""
        if deriv not in (0, 1):
            raise ValueError("only deriv 0 or 1 supported")
        x = np.asarray(x, dtype=float)
        shape = x.shape
        x = x.ravel()
        cell = self.find_cell(x)
        span = self.spans[cell]
        vals = basis_funs(self.knots, self.degree, span, x, deriv=bool(deriv))
        B = vals[1] if deriv else vals
        full = self.full_coeffs(np.asarray(coeffs))
        idx = (span - self.degree)[:, None] + np.arange(self.degree + 1)[None, :]
        out = np.sum(B * full[idx], axis=1)
        out[(x < self.a) | (x > self.b)] = 0.0
        return out.reshape(shape)

    def refine(self, mark=None) -> "SplineSpace":
        """Bisect the marked cells (all cells when ``mark`` is None)."""
        if mark is None:
            mark = np.ones(self.cells, dtype=bool)
        mark = np.asarray(mark, dtype=bool)
        mids = 0.5 * (self.breaks[:-1] + self.breaks[1:])[mark]
        return SplineSpace(self.degree, np.union1d(self.breaks, mids), self.repeated)

    def collocation(self, x, deriv: int = 0, sparse: bool = False):
        """Matrix of reduced basis values (or derivatives) at points ``x``."""
        x = np.asarray(x, dtype=float).ravel()
        cell = self.find_cell(x)
        span = self.spans[cell]
        vals = basis_funs(self.knots, self.degree, span, x, deriv=bool(deriv))
        B = vals[1] if deriv else vals
        rows = np.repeat(np.arange(x.size), self.degree + 1)
        cols = ((span - self.degree)[:, None] + np.arange(self.degree + 1)).ravel() - 1
        keep = (cols >= 0) & (cols < self.dof)
        data = B.ravel()[keep]
        if sparse:
            return csr_matrix((data, (rows[keep], cols[keep])), shape=(x.size, self.dof))
        out = np.zeros((x.size, self.dof))
        out[rows[keep], cols[keep]] = data
        return out
