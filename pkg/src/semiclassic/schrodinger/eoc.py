"""Experimental orders of convergence and the validation problems behind them."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core.potentials import Potential, double_well_potential, shrinking_trap_potential, v_shape_potential
from ..core.splines import SplineSpace
from ..core.states import InitialDataSpec
from .adaptive import solve_fixed


def eoc(values: Sequence[float], sizes: Sequence[float]) -> np.ndarray:
    """``log(v_l / v_{l+1}) / log(n_{l+1} / n_l)`` for consecutive pairs."""
    v = np.asarray(values, dtype=float)
    n = np.asarray(sizes, dtype=float)
    if v.shape != n.shape or v.size < 2:
        raise ValueError("need matching sequences of length >= 2")
    if np.any(v <= 0):
        raise ValueError("EOC undefined for nonpositive values")
    if np.any(np.diff(n) <= 0):
        raise ValueError("sizes must be strictly increasing")
    return np.log(v[:-1] / v[1:]) / np.log(n[1:] / n[:-1])


@dataclass(frozen=True)
class ValidationProblem:
    name: str
    potential: Potential
    datum: InitialDataSpec
    hbar: float
    a: float
    b: float
    T: float
    degree: int
    M_ladder: tuple
    N_ladder: tuple
    N_fine: int  # time steps used for the space ladder
    M_fine: int  # cells used for the time ladder

    def space(self, M: int) -> SplineSpace:
        return SplineSpace.uniform(self.a, self.b, M, self.degree)

    def u0(self):
        return self.datum.functions(self.hbar)[0]


def double_well_problem() -> ValidationProblem:
    return ValidationProblem(
        "eoc_doublewell", double_well_potential(), InitialDataSpec("double_well_init"),
        0.25, -2.0, 2.0, 1.0, 3, (35, 50, 70, 100, 145, 200),
        (80, 160, 320, 640, 1280, 2560), 640, 200)


def nonsmooth_problem(x0: float = -1.5) -> ValidationProblem:
    # even cell counts keep x = 0 a knot
    return ValidationProblem(
        "eoc_nonsmooth", v_shape_potential(10.0), InitialDataSpec("nonsmooth_init", x0=x0),
        0.5, -4.0, 4.0, 0.1, 4, (800, 1000, 1200, 1600, 2000, 3200),
        (50, 100, 200, 400, 800, 1600), 200, 1600)


def trap_problem(lam: float = 10.0) -> ValidationProblem:
    return ValidationProblem(
        "adaptive_tdp", shrinking_trap_potential(0.05),
        InitialDataSpec("tdp_init", params={"lam": lam}), 1.0, -1.0, 2.0, 1.0, 3,
        (40, 80, 160), (100, 200, 400), 400, 160)


@dataclass
class EOCTable:
    problem: str
    sizes_space: np.ndarray
    es: np.ndarray
    eoc_space: np.ndarray
    sizes_time: np.ndarray
    et: np.ndarray
    eoc_time: np.ndarray

    def rows(self):
        """``(ladder, size, value, eoc)`` rows; the first EOC of each ladder is NaN."""
        out = []
        for kind, n, v, e in (("space", self.sizes_space, self.es, self.eoc_space),
                              ("time", self.sizes_time, self.et, self.eoc_time)):
            ee = np.concatenate([[np.nan], e])
            out += [(kind, int(a), float(b), float(c)) for a, b, c in zip(n, v, ee)]
        return out


def run_eoc(problem: ValidationProblem, jobs: int = 1, M_ladder=None, N_ladder=None) -> EOCTable:
    """Space ladder at ``N_fine`` steps and time ladder on ``M_fine`` cells."""
    Ms = tuple(M_ladder or problem.M_ladder)
    Ns = tuple(N_ladder or problem.N_ladder)
    u0 = problem.u0()

    def space_run(M):
        return solve_fixed(problem.space(M), problem.potential, u0, problem.T,
                           problem.N_fine, problem.hbar).report.ES

    def time_run(N):
        return solve_fixed(problem.space(problem.M_fine), problem.potential, u0, problem.T,
                           N, problem.hbar, enrich=False).report.ET

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        es = np.array(list(pool.map(space_run, Ms)))
        et = np.array(list(pool.map(time_run, Ns)))
    return EOCTable(problem.name, np.array(Ms), es, eoc(es, Ms), np.array(Ns), et, eoc(et, Ns))
