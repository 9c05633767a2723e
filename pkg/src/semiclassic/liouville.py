"""Classical transport: characteristics, particles, partition, interference.

The flow is ``X' = 2 pi K``, ``K' = -V'(X) / (2 pi)``, so ``X'' = -V'(X)``.
Internally particles carry the velocity ``p = 2 pi K``.

Two integrators are provided.  ``closed_form_conical`` solves the motion in a
cone ``V = v0 + c |x - x*|`` piecewise in closed form, with crossings of
``x*`` found from the quadratic formula.  ``numeric_rk4`` integrates a
general (possibly conical) potential with RK4; inside a step each particle
uses the smooth branch of ``V`` on its current side, and a change of side is
localized by bisection before the step is finished on the new branch.

A particle that reaches the vertex with zero velocity (it lies exactly on the
separatrix) has several continuations.  ``policy`` picks one: ``'freeze'``
keeps it at the vertex, ``'left'``/``'right'`` send it down that side.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .core.potentials import Potential

S_PLUS, S_MINUS, S_ZERO = 1, -1, 0
LABELS = {S_PLUS: "S_plus", S_MINUS: "S_minus", S_ZERO: "S_zero"}
POLICIES = ("freeze", "left", "right")
TWO_PI = 2.0 * np.pi


def hamiltonian(x, k, potential: Potential):
    """``(2 pi k)^2 / 2 + V(x)``."""
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    return 0.5 * (TWO_PI * k) ** 2 + potential.value(x)


def saddle_energy(potential: Potential, vertex: Optional[float] = None) -> float:
    """``H(x*, 0) = V(x*)`` at the (first) singular point."""
    if vertex is None:
        if not potential.singular_points:
            raise ValueError(f"{potential.name} has no singular point")
        vertex = potential.singular_points[0]
    return float(potential.value(np.array([vertex]))[0])


@dataclass(frozen=True)
class FlowSpec:
    potential: Potential
    mode: str = "numeric_rk4"
    cone: Optional[tuple] = None  # (offset, signed slope, center)
    policy: str = "freeze"
    hbar: Optional[float] = None
    step: Optional[float] = None

    def __post_init__(self):
        if self.mode not in ("closed_form_conical", "numeric_rk4"):
            raise ValueError(f"unknown flow mode {self.mode!r}")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.potential.time_dependent:
            raise ValueError("characteristics are only implemented for autonomous potentials")
        if self.mode == "closed_form_conical":
            cone = self.cone or self.potential.cone
            if cone is None:
                raise ValueError("closed form needs a cone potential or explicit cone parameters")
            object.__setattr__(self, "cone", tuple(float(c) for c in cone))

    @classmethod
    def closed_form(cls, potential: Potential, policy: str = "freeze", cone=None) -> "FlowSpec":
        return cls(potential, "closed_form_conical", cone, policy)

    @property
    def h(self) -> float:
        """RK4 step ``min(1e-3, sqrt(hbar)/10)``."""
        if self.step is not None:
            return self.step
        if self.hbar is None:
            return 1e-3
        return min(1e-3, math.sqrt(self.hbar) / 10)


# -- closed form in a cone --------------------------------------------------

def _cone_flow(x0, p0, t, cone, policy):
    v0, c, xs = cone
    y = np.array(x0, dtype=float) - xs
    p = np.array(p0, dtype=float)
    rem = np.full(y.shape, float(t))
    if c == 0.0:
        return y + p * rem + xs, p
    side = np.sign(y)
    side[side == 0] = np.sign(p[side == 0])
    frozen = np.zeros(y.shape, dtype=bool)
    active = rem > 0
    for _ in range(100000):
        # at the vertex with zero velocity
        at_vertex = active & (side == 0)
        if np.any(at_vertex):
            if c > 0 or policy == "freeze":
                frozen |= at_vertex
                y[at_vertex] = 0.0
                p[at_vertex] = 0.0
                active &= ~at_vertex
            else:
                side[at_vertex] = -1.0 if policy == "left" else 1.0
        if not np.any(active):
            break
        i = np.nonzero(active)[0]
        s = side[i]
        z0, q0 = s * y[i], s * p[i]  # distance from the vertex and outward velocity
        tau = np.full(i.size, np.inf)
        double = np.zeros(i.size, dtype=bool)
        if c > 0:
            disc = q0 * q0 + 2 * c * z0
            tau = (q0 + np.sqrt(disc)) / c
        else:
            a = -c
            disc = q0 * q0 - 2 * a * z0
            scale = np.maximum(q0 * q0, 2 * a * z0)
            ok = (q0 < 0) & (disc >= -1e-12 * scale)
            double = ok & (np.abs(disc) <= 1e-12 * scale)
            sq = np.sqrt(np.maximum(disc[ok], 0.0))
            tau[ok] = 2 * z0[ok] / (-q0[ok] + sq)
        hit = tau <= rem[i]
        tt = np.where(hit, tau, rem[i])
        z = z0 + q0 * tt - 0.5 * c * tt * tt
        q = q0 - c * tt
        y[i] = s * np.where(hit, 0.0, z)
        p[i] = s * np.where(hit & double, 0.0, q)
        rem[i] -= tt
        j = i[hit]
        side[j] = np.where(double[hit], 0.0, -s[hit])
        active[i[~hit]] = False
    return y + xs, p


# -- RK4 with kink events ---------------------------------------------------

def _rk4(potential, x, p, side, h):
    def acc(z):
        return -potential.branch_derivative(z, side)

    k1x, k1p = p, acc(x)
    k2x, k2p = p + 0.5 * h * k1p, acc(x + 0.5 * h * k1x)
    k3x, k3p = p + 0.5 * h * k2p, acc(x + 0.5 * h * k2x)
    k4x, k4p = p + h * k3p, acc(x + h * k3x)
    return (x + h / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
            p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def _vertex_of(potential, x):
    pts = np.asarray(potential.singular_points, dtype=float)
    return pts[np.argmin(np.abs(x[:, None] - pts[None, :]), axis=1)]


def _resolve_side(potential, x, p, policy):
    """Side for particles sitting on a singular point: direction of motion,
    or the policy when they are at rest there (``0`` means frozen)."""
    g = potential.side(x)
    on = g == 0
    if np.any(on):
        _, dg = potential.g(x[on])
        moving = np.sign(p[on] * dg)
        rest = {"freeze": 0.0, "left": -1.0, "right": 1.0}[policy]
        g[on] = np.where(moving != 0, moving, rest * np.sign(dg))
    return g


def _rk4_flow(potential, x0, p0, t, h0, policy):
    x = np.array(x0, dtype=float)
    p = np.array(p0, dtype=float)
    if t == 0:
        return x, p
    if potential.kind != "conical_composite":
        n = max(1, math.ceil(t / h0 - 1e-9))
        h = t / n
        side = np.ones_like(x)
        for _ in range(n):
            x, p = _rk4(potential, x, p, side, h)
        return x, p
    side = _resolve_side(potential, x, p, policy)
    frozen = side == 0
    if np.any(frozen):
        x[frozen] = _vertex_of(potential, x[frozen])
        p[frozen] = 0.0
    n = max(1, math.ceil(t / h0 - 1e-9))
    h = t / n
    scale = np.maximum(1.0, np.abs(hamiltonian(x, p / TWO_PI, potential)))
    Hs = potential.value(np.asarray(potential.singular_points, dtype=float))
    for _ in range(n):
        live = ~frozen
        xs, ps, ss = x[live], p[live], side[live]
        x1, p1 = _rk4(potential, xs, ps, ss, h)
        new = potential.side(x1)
        crossed = new != ss
        # separatrix particles turning around at the vertex without crossing it
        xv1 = _vertex_of(potential, x1)
        Hv = Hs[np.argmin(np.abs(x1[:, None] - np.asarray(potential.singular_points)[None, :]), axis=1)]
        turned = (~crossed & (np.sign(p1) != np.sign(ps)) & (np.abs(x1 - xv1) < 1e-6)
                  & (np.abs(hamiltonian(x1, p1 / TWO_PI, potential) - Hv) <= 1e-9 * scale[live]))
        event = crossed | turned
        if np.any(event):
            c = np.nonzero(event)[0]
            xc, pc, sc = xs[c], ps[c], ss[c]
            tc = turned[c]
            lo, hi = np.zeros(c.size), np.full(c.size, h)
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                xm, pm = _rk4(potential, xc, pc, sc, mid)
                same = np.where(tc, np.sign(pm) == np.sign(pc), potential.side(xm) == sc)
                lo = np.where(same, mid, lo)
                hi = np.where(same, hi, mid)
                if np.all(hi - lo <= 1e-12):
                    break
            xa, pa = _rk4(potential, xc, pc, sc, hi)
            xa = _vertex_of(potential, xa)
            at_rest = tc | (0.5 * pa * pa <= 1e-10 * scale[live][c])
            _, dg = potential.g(xa)
            nside = np.sign(pa * dg)
            if np.any(at_rest):
                rest = {"freeze": 0.0, "left": -1.0, "right": 1.0}[policy]
                nside[at_rest] = rest * np.sign(dg[at_rest])
                pa[at_rest] = 0.0
            xb, pb = _rk4(potential, xa, pa, np.where(nside == 0, 1.0, nside), h - hi)
            stay = nside == 0
            xb[stay], pb[stay] = xa[stay], 0.0
            x1[c], p1[c], new[c] = xb, pb, nside
        x[live], p[live], side[live] = x1, p1, new
        frozen = side == 0
    return x, p


def trajectory(x0, k0, t: float, flow: FlowSpec):
    """Phase-space position at time ``t`` of the characteristic from ``(x0, k0)``.

    Vectorized over array-valued ``x0``/``k0``.  Negative ``t`` integrates
    backwards (via ``k -> -k`` time reversal).
    """
    x0 = np.asarray(x0, dtype=float)
    k0 = np.asarray(k0, dtype=float)
    if t < 0:
        x, k = trajectory(x0, -k0, -t, flow)
        return x, -k
    shape = np.broadcast(x0, k0).shape
    xs = np.broadcast_to(x0, shape).ravel()
    ps = TWO_PI * np.broadcast_to(k0, shape).ravel()
    if flow.mode == "closed_form_conical":
        x, p = _cone_flow(xs, ps, t, flow.cone, flow.policy)
    else:
        x, p = _rk4_flow(flow.potential, xs, ps, t, flow.h, flow.policy)
    return x.reshape(shape), (p / TWO_PI).reshape(shape)


# -- ensembles --------------------------------------------------------------

class Particle(NamedTuple):
    weight: float
    x: float
    k: float
    label: str


@dataclass(frozen=True)
class Ensemble:
    weights: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    k: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    hbar: float
    t: float = 0.0
    truncated_mass: float = 0.0

    def __post_init__(self):
        arrays = [np.array(a, dtype=float) for a in (self.weights, self.x, self.k)]
        labels = np.array(self.labels, dtype=np.int8)
        n = arrays[0].size
        if any(a.shape != (n,) for a in arrays[1:]) or labels.shape != (n,):
            raise ValueError("weights, x, k and labels must share one length")
        if np.any(arrays[0] < 0):
            raise ValueError("particle weights must be nonnegative")
        for name, a in zip(("weights", "x", "k", "labels"), arrays + [labels]):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.weights.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def particles(self) -> list:
        return [Particle(w, x, k, LABELS[int(l)]) for w, x, k, l in
                zip(self.weights, self.x, self.k, self.labels)]

    def replace(self, **kw) -> "Ensemble":
        d = dict(weights=self.weights, x=self.x, k=self.k, labels=self.labels,
                 hbar=self.hbar, t=self.t, truncated_mass=self.truncated_mass)
        d.update(kw)
        return Ensemble(**d)

    def subset(self, mask) -> "Ensemble":
        m = np.asarray(mask, dtype=bool)
        return self.replace(weights=self.weights[m], x=self.x[m], k=self.k[m],
                            labels=self.labels[m])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["weight", "x", "k", "label"])
            for p in zip(self.weights, self.x, self.k, self.labels):
                w.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(p[2])),
                            LABELS[int(p[3])]])


def partition(ensemble: Ensemble, potential: Potential, vertex: Optional[float] = None,
              band: float = 1e-12):
    """Label particles by the sign of ``H - H_saddle``.

    Returns ``(ensemble, (w_plus, w_minus, w_zero))``.
    """
    Hs = saddle_energy(potential, vertex)
    dH = hamiltonian(ensemble.x, ensemble.k, potential) - Hs
    tol = band * max(1.0, abs(Hs))
    labels = np.where(dH > tol, S_PLUS, np.where(dH < -tol, S_MINUS, S_ZERO))
    w = ensemble.weights
    weights = tuple(float(w[labels == s].sum()) for s in (S_PLUS, S_MINUS, S_ZERO))
    return ensemble.replace(labels=labels), weights


def sample_particles(field, n_target: int = 40000, mass_threshold: float = 1e-6,
                     hbar: Optional[float] = None, negative_tol: float = 1e-3) -> Ensemble:
    """One particle per (block of) grid cell(s) with non-negligible mass.

    Cells are the rectangles centred on the grid nodes.  If more than
    ``n_target`` cells are occupied, square blocks of cells are merged and the
    particle sits at the block's centre of mass.  Cells whose mass is below
    ``mass_threshold * max`` are dropped; their total is ``truncated_mass``.
    Smoothed fields with ``sigma_x sigma_k < 1`` may dip slightly below zero;
    values down to ``-negative_tol * max`` are clipped and the clipped mass is
    added to ``truncated_mass``.
    """
    vals = np.asarray(field.values, dtype=float)
    vmax = max(np.abs(vals).max(), 1e-300)
    if vals.min() < -negative_tol * vmax:
        raise ValueError("field has significant negative values (use a smoothed transform)")
    clipped = float(-vals[vals < 0].sum() * field.dx * field.dk)
    vals = np.clip(vals, 0.0, None)
    x = np.asarray(field.x, dtype=float)
    k = np.asarray(field.k, dtype=float)
    dx, dk = field.dx, field.dk
    mass = vals * dx * dk
    mmax = mass.max() if mass.size else 0.0
    if mmax <= 0:
        raise ValueError("empty ensemble: the field carries no mass")
    occupied = int((mass > mass_threshold * mmax).sum())
    b = max(1, int(math.floor(math.sqrt(occupied / max(n_target, 1)))))
    if b > 1:
        nx, nk = (mass.shape[0] // b) * b, (mass.shape[1] // b) * b
        tail = mass.sum() - mass[:nx, :nk].sum()
        m = mass[:nx, :nk].reshape(nx // b, b, nk // b, b)
        X = np.broadcast_to(x[:nx, None], (nx, nk)).reshape(nx // b, b, nk // b, b)
        K = np.broadcast_to(k[None, :nk], (nx, nk)).reshape(nx // b, b, nk // b, b)
        cm = m.sum(axis=(1, 3))
        with np.errstate(invalid="ignore", divide="ignore"):
            cx = np.where(cm > 0, (m * X).sum(axis=(1, 3)) / cm, X.mean(axis=(1, 3)))
            ck = np.where(cm > 0, (m * K).sum(axis=(1, 3)) / cm, K.mean(axis=(1, 3)))
        mass, cxx, ckk = cm, cx, ck
    else:
        tail = 0.0
        cxx, ckk = np.meshgrid(x, k, indexing="ij")
    keep = mass > mass_threshold * mass.max()
    if not np.any(keep):
        raise ValueError("empty ensemble: all cells below the mass threshold")
    truncated = float(mass[~keep].sum() + tail + clipped)
    w = mass[keep]
    return Ensemble(w, cxx[keep], ckk[keep], np.zeros(w.size, dtype=np.int8),
                    hbar if hbar is not None else getattr(field, "hbar", 0.0),
                    0.0, truncated)


def propagate(ensemble: Ensemble, t: float, flow: FlowSpec) -> Ensemble:
    """Move every particle along its characteristic for time ``t``."""
    if t == 0:
        return ensemble
    x, k = trajectory(ensemble.x, ensemble.k, t, flow)
    return ensemble.replace(x=x, k=k, t=ensemble.t + t)


def measure_ensemble(ensemble: Ensemble, symbol: Callable) -> float:
    """``sum_j M_j A(X_j, K_j)`` for a pointwise symbol ``A(x, k)``."""
    vals = np.asarray(symbol(ensemble.x, ensemble.k), dtype=float)
    return float(np.dot(ensemble.weights, np.broadcast_to(vals, ensemble.weights.shape)))


# -- interference -----------------------------------------------------------

@dataclass
class InterferenceReport:
    arrivals: list  # (window start, side, mass)
    events: list  # (t, side, mass) for both sides of every merged event
    total: float

    @property
    def event_times(self) -> list:
        return sorted({round(e[0], 12) for e in self.events})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "side", "mass"])
            for t, side, m in self.events:
                w.writerow([repr(float(t)), int(side), repr(float(m))])


def detect_interference(ensemble: Ensemble, flow: FlowSpec, T: float,
                        vertex: Sequence[float] = (0.0, 0.0), eps: Optional[float] = None,
                        dt_w: Optional[float] = None, mass_frac: float = 0.05,
                        sample_dt: Optional[float] = None) -> InterferenceReport:
    """Find windows in which non-negligible mass reaches the vertex ball from
    both sides.

    Each particle's first entry into the ball of radius ``eps`` around
    ``vertex`` is recorded with its approach side (sign of ``x - x*`` at
    entry).  Entries are binned into windows of width ``dt_w``; a window fires
    when each side delivers at least ``mass_frac`` of the total mass, and
    consecutive firing windows are merged into one event.
    """
    hbar = ensemble.hbar or 1e-2
    eps = 3 * math.sqrt(hbar) if eps is None else eps
    dt_w = math.sqrt(hbar) if dt_w is None else dt_w
    sample_dt = sample_dt or dt_w / 20
    xs, ks = vertex
    total = ensemble.total_weight
    n = max(1, math.ceil(T / sample_dt))
    h = T / n
    ens = ensemble
    entered = np.full(len(ens), np.inf)
    side = np.zeros(len(ens))
    prev_side = np.sign(ens.x - xs)
    inside0 = (ens.x - xs) ** 2 + (ens.k - ks) ** 2 < eps ** 2
    for i in range(1, n + 1):
        ens = propagate(ens, h, flow)
        inside = (ens.x - xs) ** 2 + (ens.k - ks) ** 2 < eps ** 2
        new = inside & ~inside0 & np.isinf(entered)
        entered[new] = i * h
        side[new] = np.where(prev_side[new] != 0, prev_side[new], np.sign(ens.x[new] - xs))
        prev_side = np.sign(ens.x - xs)
        inside0 = inside0 & inside
    nw = max(1, math.ceil(T / dt_w))
    arrivals, firing = [], []
    for j in range(nw):
        lo, hi = j * dt_w, (j + 1) * dt_w
        sel = (entered > lo) & (entered <= hi)
        ml = float(ensemble.weights[sel & (side < 0)].sum())
        mr = float(ensemble.weights[sel & (side > 0)].sum())
        arrivals += [(lo, -1, ml), (lo, 1, mr)]
        firing.append(ml >= mass_frac * total and mr >= mass_frac * total)
    events = []
    j = 0
    while j < nw:
        if not firing[j]:
            j += 1
            continue
        j2 = j
        while j2 + 1 < nw and firing[j2 + 1]:
            j2 += 1
        lo, hi = j * dt_w, (j2 + 1) * dt_w
        sel = (entered > lo) & (entered <= hi)
        for s in (-1, 1):
            m = sel & (side == s)
            mass = float(ensemble.weights[m].sum())
            tc = float(np.average(entered[m], weights=ensemble.weights[m])) if mass > 0 else lo
            events.append((tc, s, mass))
        j = j2 + 1
    # report one time per event: the mass-weighted mean arrival over both sides
    merged = []
    for a, b in zip(events[::2], events[1::2]):
        tm = (a[0] * a[2] + b[0] * b[2]) / (a[2] + b[2])
        merged += [(tm, a[1], a[2]), (tm, b[1], b[2])]
    return InterferenceReport(arrivals, merged, total)
