"""Banded matrices in LAPACK general-band layout plus spline Galerkin assembly."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded


@dataclass(frozen=True)
class BandMatrix:
    """Square matrix with equal lower/upper half bandwidth ``w``.

    ``data[w + i - j, j] = A[i, j]`` (the ``scipy.linalg.solve_banded`` layout).
    """

    data: np.ndarray
    w: int

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def __add__(self, other: "BandMatrix") -> "BandMatrix":
        return BandMatrix(self.data + other.data, self.w)

    def __sub__(self, other: "BandMatrix") -> "BandMatrix":
        return BandMatrix(self.data - other.data, self.w)

    def __mul__(self, s) -> "BandMatrix":
        return BandMatrix(self.data * s, self.w)

    __rmul__ = __mul__

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x)
        n, w = self.n, self.w
        y = np.zeros(n, dtype=np.result_type(self.data, x))
        for d in range(-w, w + 1):
            # A[i, i + d] = data[w - d, i + d]
            if d >= 0:
                y[: n - d] += self.data[w - d, d:] * x[d:]
            else:
                y[-d:] += self.data[w - d, : n + d] * x[: n + d]
        return y

    def todense(self) -> np.ndarray:
        n, w = self.n, self.w
        A = np.zeros((n, n), dtype=self.data.dtype)
        for d in range(-w, w + 1):
            if d >= 0:
                A[np.arange(n - d), np.arange(d, n)] = self.data[w - d, d:]
            else:
                A[np.arange(-d, n), np.arange(n + d)] = self.data[w - d, : n + d]
        return A

    def solve(self, b) -> np.ndarray:
        return solve_banded((self.w, self.w), self.data, b)

    def inner(self, x, y=None) -> complex:
        """``y^H A x`` (``y = x`` by default)."""
        y = x if y is None else y
        return np.vdot(y, self.matvec(x))


def scatter(local: np.ndarray, n_full: int, w: int, base: np.ndarray) -> BandMatrix:
    """Assemble element matrices ``local[c, a, b]`` (full indices ``base[c] + a``,
    ``base[c] + b``) into band storage, then drop the two Dirichlet rows/cols."""
    cells, m, _ = local.shape
    data = np.zeros((2 * w + 1, n_full), dtype=local.dtype)
    for a in range(m):
        for b in range(m):
            # row i = c + a, col j = c + b, band row w + a - b
            data[w + a - b, base + b] += local[:, a, b]
    data = np.ascontiguousarray(data[:, 1:-1])
    n = data.shape[1]
    for d in range(1, w + 1):  # unused corners of the layout
        data[w - d, : min(d, n)] = 0
        data[w + d, max(n - d, 0):] = 0
    return BandMatrix(data, w)


def assemble_weighted(space, weight=None, kind: str = "mass", nq: int | None = None) -> BandMatrix:
    """Galerkin matrix ``int weight * B_i B_j`` (``kind='mass'``) or
    ``int weight * B_i' B_j'`` (``kind='stiffness'``) on the Dirichlet space.

    ``weight`` is a callable of ``x`` or None for 1.
    """
    if nq is None:
        nq = space.degree + 2
    xq, wq = space.quadrature(nq)
    if kind == "mass":
        B = space.cell_basis(xq)
    elif kind == "stiffness":
        _, B = space.cell_basis(xq, deriv=True)
    else:
        raise ValueError(kind)
    ww = wq if weight is None else wq * weight(xq)
    local = np.einsum("cq,cqa,cqb->cab", ww, B, B)
    return scatter(local, space.n_basis, space.degree, space.first_index())


def load_vector(space, values_at_quad: np.ndarray, nq: int) -> np.ndarray:
    """``int f B_i`` on the Dirichlet space from per-cell quadrature samples."""
    xq, wq = space.quadrature(nq)
    B = space.cell_basis(xq)
    local = np.einsum("cq,cqa->ca", wq * values_at_quad, B)
    full = np.zeros(space.n_basis, dtype=local.dtype)
    base = space.first_index()
    for a in range(space.degree + 1):
        full[base + a] += local[:, a]
    return full[1:-1]
