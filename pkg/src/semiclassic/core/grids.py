"""One-dimensional grids and the semiclassical configuration record."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing node set on ``[a, b]`` (both endpoints included)."""

    a: float
    b: float
    nodes: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[0] != self.a or nodes[-1] != self.b:
            raise ValueError("first/last node must coincide with the endpoints")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, a: float, b: float, M: int) -> "Grid1D":
        """``M`` equal intervals of width ``(b - a) / M``."""
        if M < 1:
            raise ValueError("M must be positive")
        nodes = a + (b - a) * np.arange(M + 1) / M
        nodes[-1] = b
        return cls(float(a), float(b), nodes)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def is_uniform(self) -> bool:
        h = self.spacing
        return bool(np.allclose(h, h[0], rtol=1e-12, atol=0.0))

    def contains(self, points) -> bool:
        points = np.atleast_1d(points)
        return bool(np.all((points >= self.a) & (points <= self.b)))


@dataclass(frozen=True)
class SemiclassicalConfig:
    """Planck scale plus the smoothing and test-norm parameters.

    ``sigma_x``/``sigma_k`` are the Gaussian smoothing widths of the smoothed
    Wigner transform and must lie in ``(0, 1]``; ``M_bm`` is the frequency
    scale of the ``|||.|||_M`` test-function norm.
    """

    hbar: float
    sigma_x: float = 2 ** -0.5
    sigma_k: float = 2 ** -0.5
    M_bm: float = 4.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        for name in ("sigma_x", "sigma_k"):
            s = getattr(self, name)
            if not 0 < s <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {s}")
        if not self.M_bm > 0:
            raise ValueError("M_bm must be positive")
