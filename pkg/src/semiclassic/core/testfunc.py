"""Phase-space test functions given by Fourier samples, and the B_M norm.

A test function is stored through its phase-space Fourier transform

    phi_hat(X, K) = int int phi(x, k) exp(-2 pi i (x X + k K)) dx dk

sampled on a uniform rectangle whose K-extent is declared as ``L``.  Compact
K-support certifies membership in B_M for every ``M > L``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _bump(s):
    out = np.zeros_like(s, dtype=float)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


@dataclass(frozen=True)
class TestFunction:
    X: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    hat: np.ndarray = field(repr=False)
    L: float

    __test__ = False  # not a pytest class

    def __post_init__(self):
        X, K = np.asarray(self.X, float), np.asarray(self.K, float)
        hat = np.asarray(self.hat, dtype=complex)
        if hat.shape != (X.size, K.size):
            raise ValueError("hat must have shape (len(X), len(K))")
        if self.L < 0:
            raise ValueError("support radius must be nonnegative")
        outside = np.abs(K) > self.L * (1 + 1e-12)
        if np.any(hat[:, outside] != 0):
            raise ValueError("phi_hat has samples outside the declared K-support")
        for name, v in (("X", X), ("K", K), ("hat", hat)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def cell(self) -> float:
        """Quadrature weight ``dX dK`` (a lone sample counts with weight 1)."""
        dX = self.X[1] - self.X[0] if self.X.size > 1 else 1.0
        dK = self.K[1] - self.K[0] if self.K.size > 1 else 1.0
        return dX * dK

    def __call__(self, x, k) -> np.ndarray:
        """``phi`` on the tensor grid ``x`` by ``k`` (shape ``(len(x), len(k))``)."""
        x = np.atleast_1d(np.asarray(x, float))
        k = np.atleast_1d(np.asarray(k, float))
        Ex = np.exp(2j * np.pi * np.outer(x, self.X))
        Ek = np.exp(2j * np.pi * np.outer(k, self.K))
        return (Ex @ self.hat @ Ek.T).real * self.cell

    def pointwise(self, x, k, block: int = 4096) -> np.ndarray:
        """``phi(x_j, k_j)`` at scattered points (e.g. particles)."""
        x = np.atleast_1d(np.asarray(x, float))
        k = np.atleast_1d(np.asarray(k, float))
        if x.shape != k.shape:
            raise ValueError("x and k must have the same shape")
        out = np.empty(x.size)
        xf, kf = x.ravel(), k.ravel()
        for s in range(0, xf.size, block):
            Ex = np.exp(2j * np.pi * np.outer(xf[s:s + block], self.X))
            Ek = np.exp(2j * np.pi * np.outer(kf[s:s + block], self.K))
            out[s:s + block] = ((Ex @ self.hat) * Ek).sum(axis=1).real * self.cell
        return out.reshape(x.shape)

    def l1(self, weight=None) -> float:
        a = np.abs(self.hat)
        if weight is not None:
            a = a * weight[None, :]
        return float(a.sum() * self.cell)

    def algebra_norm(self, x) -> float:
        """``sup_x |F_2 phi(x, K)|`` integrated over ``K`` (x sampled at ``x``)."""
        dX = self.X[1] - self.X[0] if self.X.size > 1 else 1.0
        dK = self.K[1] - self.K[0] if self.K.size > 1 else 1.0
        F = np.exp(2j * np.pi * np.outer(np.asarray(x, float), self.X)) @ self.hat * dX
        return float(np.abs(F).max(axis=0).sum() * dK)

    @classmethod
    def gaussian_bump(cls, xc: float = 0.0, kc: float = 0.0, width: float = 1.0,
                      L: float = 2.0, n: int = 64, amplitude: float = 1.0) -> "TestFunction":
        """``phi(x, k) = amplitude * exp(-pi (x - xc)^2 / width^2) * beta(k - kc)``
        where ``beta`` is the inverse transform of a ``C_c^inf`` bump on ``|K| < L``.

        The shift by ``(xc, kc)`` is a pure phase on ``phi_hat`` and leaves the
        B_M norm unchanged.
        """
        X = np.linspace(-6.0 / width, 6.0 / width, n)
        K = np.linspace(-L, L, n)
        g = width * np.exp(-np.pi * (width * X) ** 2)
        b = _bump(K / L)
        hat = amplitude * np.outer(g, b) * np.exp(-2j * np.pi * (xc * X[:, None] + kc * K[None, :]))
        return cls(X, K, hat, float(L))


def bm_norm(phi: TestFunction, M: float, m_max: int = 20):
    """Truncated B_M norm and its geometric tail bound.

    Returns ``(total, partial, tail)`` with ``total = partial + tail`` an upper
    bound for ``sum_m M^-m || |K|^m phi_hat ||_{L1}``.
    """
    if phi.L >= M:
        raise ValueError(f"K-support radius {phi.L} >= M={M}: the B_M series diverges")
    absK = np.abs(phi.K)
    partial = sum(phi.l1((absK / M) ** m) for m in range(m_max + 1))
    if phi.L == 0:
        tail = 0.0
    else:
        q = phi.L / M
        tail = phi.l1() * q ** (m_max + 1) / (1 - q)
    return partial + tail, partial, tail
