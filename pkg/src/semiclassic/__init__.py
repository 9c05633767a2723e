"""Semiclassical dynamics over conical potentials in one dimension.

Subpackages: ``core`` (types), ``schrodinger`` (adaptive Crank-Nicolson
B-spline solver), ``liouville`` (classical transport), ``wigner``
(phase-space transforms), ``observables`` and ``harness`` (scenarios, CLI).
"""
__version__ = "0.1.0"
