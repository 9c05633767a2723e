"""Adaptive and fixed-step drivers with error bookkeeping.

The tolerance is split as ``(E0, ES, ET) = (0.1, 0.45, 0.45) * tol``.

* Time steps are chosen from the ladder ``dt_max * 2**-j`` (so factorizations
  are reused).  A step is accepted when its time indicator fits its share of
  the remaining ET budget, otherwise it is halved.
* The space indicator is the largest distance, over the run, between the
  reported trajectory and a parallel one on the bisected space.  When it
  exceeds its budget the worst cells are bisected and the run restarts.
  The whole mesh is bisected instead when the indicator overshoots its
  budget by more than a factor 4, or when the failure point advanced by less
  than ``T/10`` since the previous restart (local marking has stalled).
* Hard caps on dof, steps and restarts end the run with ``success=False``.

The solve uses the potential shifted by a constant ``E`` (by default the
initial energy).  This changes the exact solution only by the global phase
``exp(-i E t / hbar)``, which is restored on every stored state, but removes
most of the CN phase error for oscillatory packets.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..core.potentials import Potential
from ..core.splines import SplineSpace
from ..core.states import Wavefunction
from .cn import CNPropagator, assemble
from .estimators import CrossNorm, projection_error, time_indicator

log = logging.getLogger(__name__)

SPLIT = (0.1, 0.45, 0.45)
BOUNDARY_FRACTION = 0.05
BOUNDARY_THRESHOLD = 1e-6


@dataclass
class EstimatorReport:
    E0: float
    ES: float
    ET: float
    tol: float
    per_step: list = field(default_factory=list)  # (t_n, dt_n, dof_n, es_n, et_n)

    @property
    def total(self) -> float:
        return self.E0 + self.ES + self.ET


@dataclass
class SolveTrace:
    times: np.ndarray
    report: EstimatorReport
    space: SplineSpace
    hbar: float
    boundary_mass_monitor: np.ndarray
    masses: np.ndarray
    state_times: np.ndarray
    coeffs: list = field(repr=False)
    success: bool = True
    failure: Optional[str] = None
    warnings: list = field(default_factory=list)
    energy_shift: float = 0.0
    restarts: int = 0

    @property
    def states(self) -> list:
        return [Wavefunction(self.space, c, self.hbar) for c in self.coeffs]

    def state_at(self, t: float) -> Wavefunction:
        i = int(np.argmin(np.abs(self.state_times - t)))
        if abs(self.state_times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no stored state at t={t}")
        return Wavefunction(self.space, self.coeffs[i], self.hbar)

    @property
    def final(self) -> Wavefunction:
        return Wavefunction(self.space, self.coeffs[-1], self.hbar)

    def step_rows(self):
        """Rows ``step,t,dt,dof,es,et,mass,boundary_mass`` of the per-step CSV."""
        rows = []
        for n, (t, dt, dof, es, et) in enumerate(self.report.per_step, start=1):
            rows.append((n, t, dt, dof, es, et, self.masses[n], self.boundary_mass_monitor[n]))
        return rows


def _dorfler(values: np.ndarray, keep_below: float) -> np.ndarray:
    """Mark the largest entries until the unmarked sum is <= ``keep_below``
    (always at least one cell)."""
    order = np.argsort(values)[::-1]
    csum = np.cumsum(values[order])
    rest = values.sum() - csum
    n = int(np.searchsorted(-rest, -keep_below)) + 1
    mark = np.zeros(values.size, dtype=bool)
    mark[order[:min(n, values.size)]] = True
    return mark


class _Boundary:
    def __init__(self, space: SplineSpace):
        xq, wq = space.quadrature(space.degree + 1)
        L = space.b - space.a
        left = xq < space.a + BOUNDARY_FRACTION * L
        right = xq > space.b - BOUNDARY_FRACTION * L
        self.E = space.collocation(xq, sparse=True)
        self.wl = np.where(left, wq, 0.0).ravel()
        self.wr = np.where(right, wq, 0.0).ravel()
        sel = (self.wl > 0) | (self.wr > 0)
        self.E = self.E[sel]
        self.wl, self.wr = self.wl[sel], self.wr[sel]

    def __call__(self, U, total: float) -> float:
        if total <= 0:
            return 0.0
        d = np.abs(self.E @ U) ** 2
        return float(max(d @ self.wl, d @ self.wr) / total)


def _source(u0):
    if isinstance(u0, Wavefunction):
        return u0.exact if u0.exact is not None else u0
    return u0


def _ladder_dt(dt_max: float, dt: float) -> float:
    j = max(0, math.ceil(math.log2(dt_max / dt) - 1e-12))
    return dt_max * 2.0 ** -j


def _march(space: SplineSpace, potential: Potential, f0, T: float, hbar: float, *,
           tol: Optional[float], n_steps: Optional[int], dt_max: float, shift,
           forcing, stops: Sequence[float], keep: str, max_steps: int, enrich: bool):
    """One attempt on a fixed space.  Returns a dict describing the run."""
    fine = space.refine() if enrich else None
    op = assemble(space, potential, 0.0, hbar)
    U = space.project(f0)
    if shift == "auto":
        E = op.energy(U)
    else:
        E = float(shift or 0.0)
    if E:
        op = op.with_shift(E)
    gauge_forcing = None
    if forcing is not None:
        gauge_forcing = lambda x, t: forcing(x, t) * np.exp(1j * E * t / hbar)  # noqa: E731
    prop = CNPropagator(op, gauge_forcing)
    if enrich:
        fop = assemble(fine, potential, 0.0, hbar, shift=E)
        fprop = CNPropagator(fop, gauge_forcing)
        Uf = fine.project(f0)
        cross = CrossNorm(space, fine)
    mass_of = lambda V: float(max(op.mass.inner(V).real, 0.0))  # noqa: E731
    boundary = _Boundary(space)

    budget_S = SPLIT[1] * tol if tol is not None else np.inf
    budget_T = SPLIT[2] * tol if tol is not None else np.inf

    t = 0.0
    m0 = mass_of(U)
    masses, bmass, times = [m0], [boundary(U, m0)], [0.0]
    per_step = []
    kept_t, kept = [0.0], [U.copy()]
    stops = sorted(s for s in stops if 0 < s < T)
    ET = 0.0
    es0 = cross(U, Uf) if enrich else 0.0
    ES = es0
    # time-integrated per-cell contributions: marks the whole path of the packet
    cell_err = T * 1e-3 * cross.cell_contributions(U, Uf) if enrich else None
    dt = dt_max if n_steps is None else T / n_steps
    nstep = 0
    status = "ok"
    if enrich and es0 > budget_S:
        status = "space"
    while status == "ok" and t < T * (1 - 1e-14):
        if nstep >= max_steps:
            status = "steps"
            break
        nxt = min([s for s in stops if s > t * (1 + 1e-14) + 1e-300] + [T])
        if n_steps is None:
            h = min(dt, nxt - t)
        else:
            h = dt if nstep < n_steps - 1 else T - t
        full = prop.step(U, t, h)
        mid = prop.step(U, t, 0.5 * h)
        half = prop.step(mid, t + 0.5 * h, 0.5 * h)
        et = time_indicator(full, half, op.mass)
        if n_steps is None:
            remaining = max(budget_T - ET, 0.0)
            share = remaining * h / max(T - t, 1e-300)
            if et > share:
                if h <= dt_max * 2.0 ** -40:
                    status = "dt_underflow"
                    break
                dt = _ladder_dt(dt_max, 0.5 * h)
                continue
        U = half
        if enrich:
            Uf = fprop.step(fprop.step(Uf, t, 0.5 * h), t + 0.5 * h, 0.5 * h)
            contrib = cross.cell_contributions(U, Uf)
            es = float(np.sqrt(contrib.sum()))
            cell_err = cell_err + h * contrib
        else:
            es = 0.0
        t = t + h if abs(t + h - nxt) > 1e-12 * max(1.0, T) else nxt
        nstep += 1
        ET += et
        ES = max(ES, es)
        m = mass_of(U)
        masses.append(m)
        bmass.append(boundary(U, m))
        times.append(t)
        per_step.append((t, h, space.dof, es, et))
        phase = np.exp(-1j * E * t / hbar)
        if keep == "all" or any(abs(t - s) <= 1e-12 * max(1.0, T) for s in stops) or t >= T * (1 - 1e-14):
            kept_t.append(t)
            kept.append(U * phase)
        if es > budget_S:
            status = "space"
            break
        if n_steps is None and et > 0:
            share = max(budget_T - ET, 0.0) * h / max(T - t, 1e-300) if t < T else np.inf
            grow = math.sqrt(0.6 * share / et) if share > 0 else 0.5
            dt = _ladder_dt(dt_max, h * min(2.0, max(grow, 0.25)))
        elif n_steps is None:
            dt = _ladder_dt(dt_max, 2.0 * h)
    return dict(status=status, times=np.array(times), per_step=per_step, masses=np.array(masses),
                bmass=np.array(bmass), kept_t=np.array(kept_t), kept=kept, ET=ET, ES=ES,
                cell_err=cross.coarse_cells(cell_err) if enrich else None,
                last_err=cross.coarse_cells(contrib) if enrich and nstep else None, shift=E, t=t)


def solve_adaptive(space0: SplineSpace, potential: Potential, u0, T: float, tol: float,
                   hbar: float, *, dt_max: Optional[float] = None, energy_shift="auto",
                   forcing: Optional[Callable] = None, snapshot_times: Sequence[float] = (),
                   keep: str = "all", max_dof: int = 60000, max_steps: int = 200000,
                   max_restarts: int = 8) -> SolveTrace:
    """Adaptive solve on ``[0, T]`` aiming at ``report.total < tol``.

    ``u0`` is a :class:`Wavefunction` (its closed form is used when available)
    or a callable of ``x``.  ``keep='all'`` stores every step, ``'snapshots'``
    only ``t = 0``, ``snapshot_times`` and ``T``.  Steps are shortened to land
    exactly on each snapshot time.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if keep not in ("all", "snapshots"):
        raise ValueError("keep must be 'all' or 'snapshots'")
    f0 = _source(u0)
    dt_max = dt_max or T / 8
    space = space0
    warnings: list = []

    # initial projection: refine until E0 fits its share
    budget0 = SPLIT[0] * tol
    while True:
        U = space.project(f0)
        cells = projection_error(space, f0, U, per_cell=True)
        E0 = float(np.sqrt(cells.sum()))
        if E0 <= budget0:
            break
        if 2 * space.dof > max_dof:
            warnings.append("dof cap reached while resolving the initial datum")
            break
        space = space.refine(_dorfler(cells, 0.25 * budget0 ** 2))

    restarts = 0
    t_fail = -np.inf
    while True:
        run = _march(space, potential, f0, T, hbar, tol=tol, n_steps=None, dt_max=dt_max,
                     shift=energy_shift, forcing=forcing, stops=snapshot_times, keep=keep,
                     max_steps=max_steps, enrich=True)
        if run["status"] != "space":
            break
        if restarts >= max_restarts or space.refine().dof > max_dof:
            run["status"] = "space_cap"
            break
        budget_S = SPLIT[1] * tol
        # the space error grows roughly linearly in time, so extrapolate
        ratio = run["ES"] / budget_S * T / max(run["t"], 1e-3 * T)
        # local marking that barely moved the failure time: the error follows
        # the packet into coarse cells, so refine everywhere instead
        stalled = run["t"] - t_fail < 0.1 * T
        t_fail = run["t"]
        if ratio > 4.0 or stalled:
            rounds = max(1, math.ceil(math.log2(1.5 * max(ratio, 1.0)) / (space.degree + 1)))
            for _ in range(rounds):
                if space.refine().dof > max_dof:
                    break
                space = space.refine()
            log.info("space indicator over budget at t=%.4g; %d global bisection(s), %d cells",
                     run["t"], rounds, space.cells)
        else:
            # where the error accumulated so far, and where it sits now
            err = run["cell_err"]
            mark = _dorfler(err, 0.25 * err.sum() / ratio ** 2)
            if run["last_err"] is not None:
                last = run["last_err"]
                mark |= _dorfler(last, 0.25 * last.sum() / ratio ** 2)
            log.info("space indicator over budget at t=%.4g; bisecting %d of %d cells",
                     run["t"], mark.sum(), space.cells)
            space = space.refine(mark)
        restarts += 1
        U = space.project(f0)
        E0 = projection_error(space, f0, U)
    return _trace(run, space, hbar, tol, E0, warnings, restarts)


def _trace(run, space, hbar, tol, E0, warnings, restarts) -> SolveTrace:
    report = EstimatorReport(E0, run["ES"], run["ET"], tol, run["per_step"])
    status = run["status"]
    ok = status == "ok" and (tol is None or report.total < tol)
    failure = None
    if status != "ok":
        failure = {"steps": "step cap exhausted", "dt_underflow": "time step underflow",
                   "space_cap": "dof or restart cap exhausted"}.get(status, status)
    elif tol is not None and not ok:
        failure = "estimator total not below tol"
    if np.max(run["bmass"]) > BOUNDARY_THRESHOLD:
        warnings = warnings + [f"domain too small: boundary mass {np.max(run['bmass']):.3g}"]
    return SolveTrace(run["times"], report, space, hbar, run["bmass"], run["masses"],
                      run["kept_t"], run["kept"], ok, failure, warnings,
                      run["shift"], restarts)


def solve_fixed(space: SplineSpace, potential: Potential, u0, T: float, n_steps: int,
                hbar: float, *, energy_shift="auto", forcing=None, keep: str = "snapshots",
                snapshot_times: Sequence[float] = (), enrich: bool = True) -> SolveTrace:
    """``n_steps`` uniform steps on a fixed space, with the same indicators.

    This is the driver behind the convergence-order studies.
    """
    f0 = _source(u0)
    U = space.project(f0)
    E0 = projection_error(space, f0, U)
    run = _march(space, potential, f0, T, hbar, tol=None, n_steps=n_steps, dt_max=T,
                 shift=energy_shift, forcing=forcing, stops=snapshot_times, keep=keep,
                 max_steps=n_steps + 1, enrich=enrich)
    return _trace(run, space, hbar, None, E0, [], 0)
