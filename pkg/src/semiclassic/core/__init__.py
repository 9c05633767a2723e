"""Shared domain types: grids, potentials, states, splines, test functions."""
from .banded import BandMatrix
from .grids import Grid1D, SemiclassicalConfig
from .potentials import (
    Potential,
    abs_saddle_potential,
    cone_potential,
    constant_potential,
    double_well_potential,
    harmonic_potential,
    power_saddle_potential,
    shrinking_trap_potential,
    smooth_cutoff,
    v_shape_potential,
)
from .splines import SplineSpace
from .states import (
    InitialDataSpec,
    ResolutionError,
    Wavefunction,
    build_initial_data,
    points_per_wavelength,
)
from .testfunc import TestFunction, bm_norm

__all__ = [
    "BandMatrix", "Grid1D", "SemiclassicalConfig", "Potential", "abs_saddle_potential",
    "cone_potential", "constant_potential", "double_well_potential", "harmonic_potential",
    "power_saddle_potential", "shrinking_trap_potential", "smooth_cutoff",
    "v_shape_potential", "SplineSpace", "InitialDataSpec", "ResolutionError",
    "Wavefunction", "build_initial_data", "points_per_wavelength", "TestFunction", "bm_norm",
]
